//! Information units. Everything inside the crate is in nats.

use std::f64::consts::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    /// Multiplier applied to a quantity in nats.
    pub fn scale(self) -> f64 {
        match self {
            Units::Bits => LOG2_E,
            Units::Nats => 1.0,
        }
    }

    pub fn from_nats(self, v: f64) -> f64 {
        v * self.scale()
    }

    /// Squared-unit conversion for variances (dispersion).
    pub fn from_nats2(self, v: f64) -> f64 {
        v * self.scale() * self.scale()
    }

    pub fn to_nats(self, v: f64) -> f64 {
        v / self.scale()
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        }
    }
}

impl std::str::FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bits" => Ok(Units::Bits),
            "nats" => Ok(Units::Nats),
            other => Err(format!("unknown unit `{other}` (expected bits or nats)")),
        }
    }
}

pub fn nats_to_bits(v: f64) -> f64 {
    v * LOG2_E
}

pub fn bits_to_nats(v: f64) -> f64 {
    v / LOG2_E
}
