use thiserror::Error;

/// Errors raised by the solvers and bound evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("cost level {beta} is not above the minimum letter cost {beta_min}")]
    InfeasibleCost { beta: f64, beta_min: f64 },

    #[error("solver did not converge within {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("tilted density undefined at (x={x}, y={y}): output has zero probability")]
    UndefinedDensity { x: usize, y: usize },

    #[error("invalid probability mass function: {0}")]
    BadPmf(String),

    #[error("lattice step mismatch: {0} vs {1}")]
    StepMismatch(f64, f64),

    #[error("budget exceeded: {needed} cells needed, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("no admissible input type for n={n} at cost level {beta}")]
    InfeasibleType { n: usize, beta: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("series did not reach its truncation target within {terms} terms")]
    SeriesBudget { terms: usize },

    #[error("distortion {d} outside ({d_min}, {d_max})")]
    InfeasibleDistortion { d: f64, d_min: f64, d_max: f64 },

    #[error("no nonnegative solution of the Gaussian approximation")]
    NoPositiveSolution,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short variant name, echoed by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidChannel(_) => "InvalidChannel",
            Error::InvalidSource(_) => "InvalidSource",
            Error::InfeasibleCost { .. } => "InfeasibleCost",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::UndefinedDensity { .. } => "UndefinedDensity",
            Error::BadPmf(_) => "BadPmf",
            Error::StepMismatch(..) => "StepMismatch",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::InfeasibleType { .. } => "InfeasibleType",
            Error::DomainError(_) => "DomainError",
            Error::SeriesBudget { .. } => "SeriesBudget",
            Error::InfeasibleDistortion { .. } => "InfeasibleDistortion",
            Error::NoPositiveSolution => "NoPositiveSolution",
            Error::Precondition(_) => "Precondition",
            Error::Parse(_) => "Parse",
        }
    }

    /// True for errors caused by exhausting a numeric budget.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::SeriesBudget { .. } | Error::NonConvergence { .. }
        )
    }

    /// True for errors caused by an infeasible problem instance.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleCost { .. }
                | Error::InfeasibleType { .. }
                | Error::InfeasibleDistortion { .. }
                | Error::NoPositiveSolution
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
