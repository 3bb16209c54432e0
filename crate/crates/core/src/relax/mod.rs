//! McCormick relaxations with subgradients.

mod envelope;
mod mccormick;
mod reform;

use std::fmt;
use std::str::FromStr;

pub use envelope::{residual_co, residual_cu, solve_tangent_points, TangentPoints, TanhEnvelope};
pub use mccormick::{McCormick, CUT_SLACK};
pub use reform::reformulated_tanh;

/// Exp-based rewrites of `tanh`, relaxed by composing McCormick primitives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reformulation {
    /// `(e^x - e^-x) / (e^x + e^-x)`
    F1,
    /// `(e^2x - 1) / (e^2x + 1)`
    F2,
    /// `1 - 2 / (e^2x + 1)`
    F3,
    /// `(1 - e^-2x) / (1 + e^-2x)`
    F4,
}

impl Reformulation {
    pub const ALL: [Reformulation; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];
}

/// How activation functions are relaxed in the McCormick and interval
/// contexts. Plain and dual evaluation ignore the mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ActivationMode {
    #[default]
    Envelope,
    F1,
    F2,
    F3,
    F4,
}

impl ActivationMode {
    pub const ALL: [ActivationMode; 5] = [Self::Envelope, Self::F1, Self::F2, Self::F3, Self::F4];

    pub fn variant(self) -> Option<Reformulation> {
        match self {
            Self::Envelope => None,
            Self::F1 => Some(Reformulation::F1),
            Self::F2 => Some(Reformulation::F2),
            Self::F3 => Some(Reformulation::F3),
            Self::F4 => Some(Reformulation::F4),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Envelope => "envelope",
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::F3 => "F3",
            Self::F4 => "F4",
        }
    }
}

impl fmt::Display for ActivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "envelope" => Ok(Self::Envelope),
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            _ => Err(format!(
                "unknown activation mode `{s}` (expected envelope, F1, F2, F3 or F4)"
            )),
        }
    }
}
