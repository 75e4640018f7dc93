//! Backward two-step recursion.
//!
//! Starting from a seed cotangent `X^L_*`, for `h = L, …, 1`:
//!
//! ```text
//! Y^h_*     = X^h_* ⊙ σ′(Y^h)
//! X^{h-1}_* = (W^h)ᵀ Y^h_*          (plain)
//! X^{h-1}_* = (W^h_♯)ᵀ Y^h_*        (augmented: bias column dropped)
//! ```
//!
//! and the weight gradient of layer `h` is the outer product
//! `δ_{W^h} = Y^h_* (X^{h-1})ᵀ`, with `X^{h-1}` taken after augmentation so the
//! bias column of `δ_{W^h}` is exactly `Y^h_*`.
//!
//! With the seed set to `∂J/∂X^L` these are the backpropagation gradients of `J`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fprop::{forward, FPropagation};
use crate::linalg::Vector;
use crate::network::{sharp, GradientSet, Network};

/// The ordered backward record `{X^L_*, Y^L_*, X^{L-1}_*, …, Y^1_*, X^0_*}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FAdjoint {
    seed: Vector,
    /// `[Y^L_*, …, Y^1_*]`
    ystars: Vec<Vector>,
    /// `[X^{L-1}_*, …, X^0_*]`
    xstars: Vec<Vector>,
}

impl FAdjoint {
    pub fn depth(&self) -> usize {
        self.ystars.len()
    }

    pub fn seed(&self) -> &Vector {
        &self.seed
    }

    /// `X^h_*` for `h` in `0..=L`.
    pub fn x_star(&self, h: usize) -> &Vector {
        let depth = self.depth();
        if h == depth {
            &self.seed
        } else {
            &self.xstars[depth - 1 - h]
        }
    }

    /// `Y^h_*` for `h` in `1..=L`.
    pub fn y_star(&self, h: usize) -> &Vector {
        &self.ystars[self.depth() - h]
    }

    /// Backward order, `Y^L_*` first.
    pub fn ystars(&self) -> &[Vector] {
        &self.ystars
    }

    /// Backward order, `X^{L-1}_*` first.
    pub fn xstars(&self) -> &[Vector] {
        &self.xstars
    }
}

/// How the seed `X^L_* = ∂J/∂X^L` is derived from the output and target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `J = Σ_i (f(x)_i − y_i)`, cotangent `1⃗`. Unbounded below, so only
    /// useful for gradient demonstrations.
    Elementary,
    /// `J = ½‖f(x) − y‖²`, cotangent `f(x) − y`.
    Mse,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Elementary => "elementary",
            LossKind::Mse => "mse",
        }
    }

    fn check(output: &Vector, target: &Vector) -> Result<()> {
        if output.len() != target.len() {
            return Err(Error::Dimension {
                op: "loss",
                lhs: format!("output of dim {}", output.len()),
                rhs: format!("target of dim {}", target.len()),
            });
        }
        Ok(())
    }

    pub fn value(self, output: &Vector, target: &Vector) -> Result<f64> {
        Self::check(output, target)?;
        let residual = output.sub(target)?;
        Ok(match self {
            LossKind::Elementary => residual.iter().sum(),
            LossKind::Mse => 0.5 * residual.iter().map(|r| r * r).sum::<f64>(),
        })
    }

    /// `∂J/∂X^L` at `output`.
    pub fn cotangent(self, output: &Vector, target: &Vector) -> Result<Vector> {
        Self::check(output, target)?;
        Ok(match self {
            LossKind::Elementary => Vector::filled(output.len(), 1.0),
            LossKind::Mse => output.sub(target)?,
        })
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elementary" => Ok(LossKind::Elementary),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::Config(format!("unknown loss '{other}' (expected elementary|mse)"))),
        }
    }
}

/// Checks that `record` has the layer dimensions `net` would produce.
pub(crate) fn check_record(net: &Network, record: &FPropagation) -> Result<()> {
    let arch = net.arch();
    if record.depth() != arch.depth() {
        return Err(Error::Dimension {
            op: "forward record",
            lhs: format!("depth {}", record.depth()),
            rhs: format!("network depth {}", arch.depth()),
        });
    }
    for h in 0..=arch.depth() {
        if record.x(h).len() != arch.activation_dim(h) {
            return Err(Error::Layer {
                layer: h,
                msg: format!(
                    "record X^{h} has dim {}, network expects {}",
                    record.x(h).len(),
                    arch.activation_dim(h)
                ),
            });
        }
        if h > 0 && record.y(h).len() != arch.layer_sizes()[h] {
            return Err(Error::Layer {
                layer: h,
                msg: format!(
                    "record Y^{h} has dim {}, network expects {}",
                    record.y(h).len(),
                    arch.layer_sizes()[h]
                ),
            });
        }
    }
    Ok(())
}

/// Computes the backward record from the seed `X^L_*`.
pub fn fadjoint_pass(net: &Network, record: &FPropagation, seed: &Vector) -> Result<FAdjoint> {
    check_record(net, record)?;
    let depth = net.depth();
    let out_dim = net.arch().output_dim();
    if seed.len() != out_dim {
        return Err(Error::Layer {
            layer: depth,
            msg: format!("seed has dim {}, output layer has {}", seed.len(), out_dim),
        });
    }
    let sigma = net.activation();
    let augmented = net.bias_mode().is_augmented();

    let mut ystars = Vec::with_capacity(depth);
    let mut xstars: Vec<Vector> = Vec::with_capacity(depth);
    for h in (1..=depth).rev() {
        let x_star = if h == depth { seed } else { xstars.last().expect("pushed on previous step") };
        let y_star = x_star.hadamard(&sigma.derivative(record.y(h)))?;
        let transition = if augmented { sharp(net.weight(h))? } else { net.weight(h).clone() };
        let x_prev_star = transition.transpose().mul_vec(&y_star)?;
        ystars.push(y_star);
        xstars.push(x_prev_star);
    }
    Ok(FAdjoint {
        seed: seed.clone(),
        ystars,
        xstars,
    })
}

/// `δ_{W^h} = Y^h_* (X^{h-1})ᵀ` for every layer.
pub fn weight_gradients(record: &FPropagation, adjoint: &FAdjoint) -> Result<GradientSet> {
    if record.depth() != adjoint.depth() {
        return Err(Error::Dimension {
            op: "weight_gradients",
            lhs: format!("forward depth {}", record.depth()),
            rhs: format!("adjoint depth {}", adjoint.depth()),
        });
    }
    let mut layers = Vec::with_capacity(record.depth());
    for h in 1..=record.depth() {
        let y_star = adjoint.y_star(h);
        if y_star.len() != record.y(h).len() {
            return Err(Error::Layer {
                layer: h,
                msg: format!("Y^{h}_* has dim {}, Y^{h} has {}", y_star.len(), record.y(h).len()),
            });
        }
        layers.push(y_star.outer(record.x(h - 1)));
    }
    Ok(GradientSet::new(layers))
}

/// Forward pass, loss-derived seed, backward pass, gradients. Returns the
/// gradients and the loss value at the current weights.
pub fn gradient(net: &Network, input: &Vector, target: &Vector, loss: LossKind) -> Result<(GradientSet, f64)> {
    let record = forward(net, input)?;
    if target.len() != net.arch().output_dim() {
        return Err(Error::Layer {
            layer: net.depth(),
            msg: format!("target has dim {}, output layer has {}", target.len(), net.arch().output_dim()),
        });
    }
    let value = loss.value(record.output(), target)?;
    let seed = loss.cotangent(record.output(), target)?;
    let adjoint = fadjoint_pass(net, &record, &seed)?;
    Ok((weight_gradients(&record, &adjoint)?, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::linalg::Matrix;
    use crate::network::{Architecture, BiasMode, InitScheme};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn e1() -> Network {
        let a = Architecture::new(vec![1, 1, 1], BiasMode::Augmented, ActivationKind::Identity).unwrap();
        Network::build(a, vec![m(&[&[2.0, 1.0]]), m(&[&[3.0, -1.0]])]).unwrap()
    }

    fn e2() -> Network {
        let a = Architecture::new(vec![1, 2, 1], BiasMode::Augmented, ActivationKind::Identity).unwrap();
        Network::build(a, vec![m(&[&[1.0, 0.0], &[-1.0, 1.0]]), m(&[&[1.0, 2.0, 0.5]])]).unwrap()
    }

    #[test]
    fn e1_adjoint_record_and_gradients() {
        let net = e1();
        let f = forward(&net, &Vector::from([0.5])).unwrap();
        let fs = fadjoint_pass(&net, &f, &Vector::from([1.0])).unwrap();
        assert_eq!(fs.x_star(2), &Vector::from([1.0]));
        assert_eq!(fs.y_star(2), &Vector::from([1.0]));
        assert_eq!(fs.x_star(1), &Vector::from([3.0]));
        assert_eq!(fs.y_star(1), &Vector::from([3.0]));
        assert_eq!(fs.x_star(0), &Vector::from([6.0]));
        let g = weight_gradients(&f, &fs).unwrap();
        assert_eq!(g.layer(2), &m(&[&[2.0, 1.0]]));
        assert_eq!(g.layer(1), &m(&[&[1.5, 3.0]]));
    }

    #[test]
    fn e2_adjoint_record_and_gradients() {
        let net = e2();
        let f = forward(&net, &Vector::from([1.0])).unwrap();
        let fs = fadjoint_pass(&net, &f, &Vector::from([1.0])).unwrap();
        assert_eq!(fs.y_star(2), &Vector::from([1.0]));
        assert_eq!(fs.x_star(1), &Vector::from([1.0, 2.0]));
        assert_eq!(fs.y_star(1), &Vector::from([1.0, 2.0]));
        assert_eq!(fs.x_star(0), &Vector::from([-1.0]));
        let g = weight_gradients(&f, &fs).unwrap();
        assert_eq!(g.layer(2), &m(&[&[1.0, 0.0, 1.0]]));
        assert_eq!(g.layer(1), &m(&[&[1.0, 1.0], &[2.0, 2.0]]));
    }

    #[test]
    fn backward_record_ordering() {
        let net = e2();
        let f = forward(&net, &Vector::from([1.0])).unwrap();
        let fs = fadjoint_pass(&net, &f, &Vector::from([1.0])).unwrap();
        assert_eq!(fs.ystars()[0], Vector::from([1.0]));
        assert_eq!(fs.xstars()[0], Vector::from([1.0, 2.0]));
        assert_eq!(fs.xstars()[1], Vector::from([-1.0]));
    }

    #[test]
    fn orthogonal_identity_network_is_self_adjoint() {
        let a = Architecture::new(vec![2, 2, 2], BiasMode::Plain, ActivationKind::Identity).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let net = Network::build(a, vec![m(&[&[c, -c], &[c, c]]), m(&[&[0.0, 1.0], &[1.0, 0.0]])]).unwrap();
        let f = forward(&net, &Vector::from([0.3, -0.8])).unwrap();
        let fs = fadjoint_pass(&net, &f, f.output()).unwrap();
        for h in 0..=2 {
            assert!(fs.x_star(h).sub(f.x(h)).unwrap().max_abs() < 1e-15);
        }
        for h in 1..=2 {
            assert!(fs.y_star(h).sub(f.y(h)).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn zero_seed_gives_zero_gradients() {
        let a = Architecture::new(vec![3, 4, 2], BiasMode::Augmented, ActivationKind::Tanh).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 4).unwrap();
        let f = forward(&net, &Vector::from([0.1, 0.2, 0.3])).unwrap();
        let fs = fadjoint_pass(&net, &f, &Vector::zeros(2)).unwrap();
        let g = weight_gradients(&f, &fs).unwrap();
        assert_eq!(g, GradientSet::zeros_like(&net));
    }

    #[test]
    fn augmented_adjoint_dims() {
        let a = Architecture::new(vec![3, 5, 4, 2], BiasMode::Augmented, ActivationKind::Sigmoid).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 8).unwrap();
        let f = forward(&net, &Vector::from([0.1, 0.2, 0.3])).unwrap();
        let fs = fadjoint_pass(&net, &f, &Vector::from([1.0, -1.0])).unwrap();
        for (h, &g) in [3usize, 5, 4, 2].iter().enumerate() {
            assert_eq!(fs.x_star(h).len(), g);
            if h > 0 {
                assert_eq!(fs.y_star(h).len(), g);
            }
        }
    }

    #[test]
    fn plain_adjoint_dims() {
        let a = Architecture::new(vec![3, 5, 2], BiasMode::Plain, ActivationKind::Tanh).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 8).unwrap();
        let f = forward(&net, &Vector::from([0.1, 0.2, 0.3])).unwrap();
        let fs = fadjoint_pass(&net, &f, &Vector::from([1.0, -1.0])).unwrap();
        assert_eq!(fs.x_star(0).len(), 3);
        assert_eq!(fs.x_star(1).len(), 5);
    }

    #[test]
    fn mismatched_record_or_seed_is_rejected() {
        let f = forward(&e2(), &Vector::from([1.0])).unwrap();
        assert!(fadjoint_pass(&e1(), &f, &Vector::from([1.0])).is_err());
        let f1 = forward(&e1(), &Vector::from([1.0])).unwrap();
        assert!(fadjoint_pass(&e1(), &f1, &Vector::from([1.0, 1.0])).is_err());

        let fs = fadjoint_pass(&e2(), &f, &Vector::from([1.0])).unwrap();
        assert!(weight_gradients(&f1, &fs).is_err());
    }

    #[test]
    fn gradient_with_elementary_and_mse_losses() {
        let net = e1();
        let (g, j) = gradient(&net, &Vector::from([0.5]), &Vector::from([1.0]), LossKind::Elementary).unwrap();
        assert_eq!(j, 4.0);
        assert_eq!(g.layer(1), &m(&[&[1.5, 3.0]]));
        assert_eq!(g.layer(2), &m(&[&[2.0, 1.0]]));

        let (g, j) = gradient(&net, &Vector::from([0.5]), &Vector::from([5.0]), LossKind::Mse).unwrap();
        assert_eq!(j, 0.0);
        assert_eq!(g, GradientSet::zeros_like(&net));

        assert!(gradient(&net, &Vector::from([0.5]), &Vector::from([5.0, 1.0]), LossKind::Mse).is_err());
    }

    #[test]
    fn depth_one_closed_form() {
        let a = Architecture::new(vec![4, 3], BiasMode::Plain, ActivationKind::Sigmoid).unwrap();
        let net = Network::init(a, InitScheme::Uniform(1.0), 21).unwrap();
        let x = Vector::from([0.2, -0.4, 0.9, 1.3]);
        let seed = Vector::from([0.5, -2.0, 1.0]);
        let f = forward(&net, &x).unwrap();
        let g = weight_gradients(&f, &fadjoint_pass(&net, &f, &seed).unwrap()).unwrap();
        let sp = ActivationKind::Sigmoid.derivative(&net.weight(1).mul_vec(&x).unwrap());
        let expected = seed.hadamard(&sp).unwrap().outer(&x);
        assert_eq!(g.layer(1), &expected);
    }

    #[test]
    fn linear_in_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for (i, activation) in [ActivationKind::Sigmoid, ActivationKind::Tanh, ActivationKind::Identity]
            .into_iter()
            .enumerate()
        {
            for mode in [BiasMode::Plain, BiasMode::Augmented] {
                let a = Architecture::new(vec![3, 4, 4, 2], mode, activation).unwrap();
                let net = Network::init(a, InitScheme::Xavier, i as u64).unwrap();
                let x = Vector::new((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
                let f = forward(&net, &x).unwrap();
                let s1 = Vector::from([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
                let s2 = Vector::from([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
                let (alpha, beta) = (1.7, -0.6);
                let combined = s1.scale(alpha).add(&s2.scale(beta)).unwrap();
                let a1 = fadjoint_pass(&net, &f, &s1).unwrap();
                let a2 = fadjoint_pass(&net, &f, &s2).unwrap();
                let ac = fadjoint_pass(&net, &f, &combined).unwrap();
                for h in 0..=3 {
                    let lin = a1.x_star(h).scale(alpha).add(&a2.x_star(h).scale(beta)).unwrap();
                    assert!(lin.sub(ac.x_star(h)).unwrap().max_abs() <= 1e-12);
                    if h > 0 {
                        let lin = a1.y_star(h).scale(alpha).add(&a2.y_star(h).scale(beta)).unwrap();
                        assert!(lin.sub(ac.y_star(h)).unwrap().max_abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn loss_parsing() {
        assert_eq!("mse".parse::<LossKind>().unwrap(), LossKind::Mse);
        assert_eq!("elementary".parse::<LossKind>().unwrap(), LossKind::Elementary);
        assert!("l1".parse::<LossKind>().is_err());
    }
}
