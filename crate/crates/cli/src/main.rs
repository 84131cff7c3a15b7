mod args;
mod run;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Capacity(a) => &a.common,
        Command::Bounds(a) => &a.common,
        Command::StrongConverse(a) => &a.common,
        Command::Awgn(a) => &a.common,
        Command::Exp(a) => &a.common,
        Command::Jscc(a) => &a.common,
    };
    if let Some(t) = common.threads {
        if t == 0 {
            eprintln!("error[ConfigError]: --threads must be at least 1");
            std::process::exit(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error[ConfigError]: {e}");
            std::process::exit(2);
        }
    }
    let result = match &cli.command {
        Command::Capacity(a) => run::capacity(a),
        Command::Bounds(a) => run::bounds(a),
        Command::StrongConverse(a) => run::strong_converse(a),
        Command::Awgn(a) => run::awgn(a),
        Command::Exp(a) => run::exp(a),
        Command::Jscc(a) => run::jscc(a),
    };
    if let Err(e) = result {
        eprintln!("error[{}]: {e}", e.name());
        std::process::exit(e.exit_code());
    }
}
