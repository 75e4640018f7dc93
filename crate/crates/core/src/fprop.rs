//! Forward two-step recursion `Y^h = W^h X^{h-1}`, `X^h = σ(Y^h)` and the
//! record it leaves behind.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::network::Network;

/// The ordered forward record `{X^0, Y^1, X^1, …, Y^L, X^L}`.
///
/// Activation vectors are stored after augmentation, so in augmented mode
/// `X^0..X^{L-1}` end with the constant 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FPropagation {
    x0: Vector,
    ys: Vec<Vector>,
    xs: Vec<Vector>,
}

impl FPropagation {
    pub fn depth(&self) -> usize {
        self.ys.len()
    }

    /// `X^h` for `h` in `0..=L`.
    pub fn x(&self, h: usize) -> &Vector {
        if h == 0 {
            &self.x0
        } else {
            &self.xs[h - 1]
        }
    }

    /// `Y^h` for `h` in `1..=L`.
    pub fn y(&self, h: usize) -> &Vector {
        &self.ys[h - 1]
    }

    pub fn ys(&self) -> &[Vector] {
        &self.ys
    }

    pub fn xs(&self) -> &[Vector] {
        &self.xs
    }

    /// `f(x) = X^L`.
    pub fn output(&self) -> &Vector {
        self.xs.last().expect("record has at least one layer")
    }
}

/// Runs the network on a raw `G_0`-dimensional input. Augmentation of the
/// input happens here in augmented mode.
pub fn forward(net: &Network, input: &Vector) -> Result<FPropagation> {
    let arch = net.arch();
    if input.len() != arch.input_dim() {
        return Err(Error::Layer {
            layer: 0,
            msg: format!("input has dim {}, network expects {}", input.len(), arch.input_dim()),
        });
    }
    let augmented = arch.bias_mode().is_augmented();
    let sigma = arch.activation();
    let depth = arch.depth();

    let x0 = if augmented { input.appended(1.0) } else { input.clone() };
    let mut ys = Vec::with_capacity(depth);
    let mut xs: Vec<Vector> = Vec::with_capacity(depth);
    for h in 1..=depth {
        let prev = if h == 1 { &x0 } else { &xs[h - 2] };
        let y = net.weight(h).mul_vec(prev).map_err(|e| Error::Layer {
            layer: h,
            msg: e.to_string(),
        })?;
        let x = sigma.apply(&y);
        let x = if augmented && h < depth { x.appended(1.0) } else { x };
        ys.push(y);
        xs.push(x);
    }
    Ok(FPropagation { x0, ys, xs })
}

pub fn output(record: &FPropagation) -> &Vector {
    record.output()
}
