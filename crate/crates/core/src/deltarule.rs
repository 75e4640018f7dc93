//! Classical generalized delta rule, kept as an independent oracle for the
//! adjoint engine. Nothing here calls into `fadjoint`; the recursion is
//! written out entry by entry.
//!
//! Index convention: the textbook form writes `∂J/∂W^h = δ^{h+1} (X^h)ᵀ` with
//! weights indexed from the layer they leave. Here `δ^h` is attached to the
//! layer the weights enter, so the same statement reads `∂J/∂W^h = δ^h (X^{h-1})ᵀ`.
//!
//! The output error is `δ^L = seed ⊙ σ′(Y^L)` with `seed = ∂J/∂X^L`.

use crate::error::{Error, Result};
use crate::fprop::FPropagation;
use crate::linalg::{Matrix, Vector};
use crate::network::{GradientSet, Network};

pub fn backprop(net: &Network, record: &FPropagation, seed: &Vector) -> Result<GradientSet> {
    let arch = net.arch();
    let depth = arch.depth();
    if record.depth() != depth {
        return Err(Error::Dimension {
            op: "deltarule",
            lhs: format!("record depth {}", record.depth()),
            rhs: format!("network depth {depth}"),
        });
    }
    if seed.len() != arch.output_dim() {
        return Err(Error::Layer {
            layer: depth,
            msg: format!("seed has dim {}, output layer has {}", seed.len(), arch.output_dim()),
        });
    }
    for h in 1..=depth {
        let (rows, cols) = net.weight(h).shape();
        if record.y(h).len() != rows || record.x(h - 1).len() != cols {
            return Err(Error::Layer {
                layer: h,
                msg: "forward record does not match weight shapes".into(),
            });
        }
    }
    let sigma = arch.activation();

    // delta[h - 1] holds δ^h.
    let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); depth];
    let y_out = record.y(depth);
    deltas[depth - 1] = (0..y_out.len())
        .map(|i| seed[i] * sigma.eval_derivative(y_out[i]))
        .collect();

    for h in (1..depth).rev() {
        let upper = net.weight(h + 1);
        let y = record.y(h);
        // Genuine units only; the bias column of W^{h+1} receives no error.
        let genuine = y.len();
        let mut delta = vec![0.0; genuine];
        for (i, d) in delta.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..upper.rows() {
                acc += upper[(k, i)] * deltas[h][k];
            }
            *d = acc * sigma.eval_derivative(y[i]);
        }
        deltas[h - 1] = delta;
    }

    let layers = (1..=depth)
        .map(|h| {
            let x_prev = record.x(h - 1);
            let delta = &deltas[h - 1];
            let mut g = Matrix::zeros(delta.len(), x_prev.len());
            for (i, &d) in delta.iter().enumerate() {
                for j in 0..x_prev.len() {
                    g[(i, j)] = d * x_prev[j];
                }
            }
            g
        })
        .collect();
    Ok(GradientSet::new(layers))
}
