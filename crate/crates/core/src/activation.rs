use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;
use crate::linalg::Vector;

/// Coordinate-wise activation shared by every layer of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Identity,
    Sigmoid,
    Tanh,
    /// Derivative at exactly 0 is taken to be 0.
    Relu,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [Self::Identity, Self::Sigmoid, Self::Tanh, Self::Relu];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Sigmoid => "sigmoid",
            Self::Tanh => "tanh",
            Self::Relu => "relu",
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Self::Relu)
    }

    pub fn eval(self, y: f64) -> f64 {
        match self {
            Self::Identity => y,
            Self::Sigmoid => sigmoid(y),
            Self::Tanh => y.tanh(),
            Self::Relu => y.max(0.0),
        }
    }

    /// σ′ at the pre-activation `y`.
    pub fn eval_derivative(self, y: f64) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Sigmoid => {
                let s = sigmoid(y);
                s * (1.0 - s)
            }
            Self::Tanh => {
                let t = y.tanh();
                1.0 - t * t
            }
            Self::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn apply(self, y: &Vector) -> Vector {
        match self {
            Self::Identity => y.clone(),
            _ => y.map(|v| self.eval(v)),
        }
    }

    pub fn derivative(self, y: &Vector) -> Vector {
        y.map(|v| self.eval_derivative(v))
    }
}

fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// σ(y) applied coordinate-wise.
pub fn apply(kind: ActivationKind, y: &Vector) -> Vector {
    kind.apply(y)
}

/// σ′(y) applied coordinate-wise, evaluated at the pre-activation.
pub fn derivative(kind: ActivationKind, y: &Vector) -> Vector {
    kind.derivative(y)
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "identity" => Ok(Self::Identity),
            "sigmoid" => Ok(Self::Sigmoid),
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            other => Err(Error::Config(format!(
                "unknown activation '{other}' (expected identity|sigmoid|tanh|relu)"
            ))),
        }
    }
}
