//! The two smallest augmented networks, `A[1,1,1]` and `A[1,2,1]`, with the
//! default weights used by the demos and golden tests.

use crate::activation::ActivationKind;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::network::{Architecture, BiasMode, Network};

pub const A111_W1: [[f64; 2]; 1] = [[2.0, 1.0]];
pub const A111_W2: [[f64; 2]; 1] = [[3.0, -1.0]];
pub const A121_W1: [[f64; 2]; 2] = [[1.0, 0.0], [-1.0, 1.0]];
pub const A121_W2: [[f64; 3]; 1] = [[1.0, 2.0, 0.5]];

pub fn a111_arch(activation: ActivationKind) -> Architecture {
    Architecture::new(vec![1, 1, 1], BiasMode::Augmented, activation).expect("static architecture")
}

pub fn a121_arch(activation: ActivationKind) -> Architecture {
    Architecture::new(vec![1, 2, 1], BiasMode::Augmented, activation).expect("static architecture")
}

/// `W^1 = (α¹₁₁ α¹₁₂)`, `W^2 = (α²₁ α²₂)`.
pub fn a111(w1: [f64; 2], w2: [f64; 2], activation: ActivationKind) -> Result<Network> {
    Network::build(
        a111_arch(activation),
        vec![Matrix::from_rows(&[w1])?, Matrix::from_rows(&[w2])?],
    )
}

/// `W^1` is 2×2 (input weight, bias per hidden unit), `W^2 = (α²₁ α²₂ α²₃)`.
pub fn a121(w1: [[f64; 2]; 2], w2: [f64; 3], activation: ActivationKind) -> Result<Network> {
    Network::build(
        a121_arch(activation),
        vec![Matrix::from_rows(&w1)?, Matrix::from_rows(&[w2])?],
    )
}

pub fn a111_default(activation: ActivationKind) -> Network {
    a111(A111_W1[0], A111_W2[0], activation).expect("static weights")
}

pub fn a121_default(activation: ActivationKind) -> Network {
    a121(A121_W1, A121_W2[0], activation).expect("static weights")
}
