//! Self-adjointness of identity-activation networks with orthogonal weights.
//!
//! With `σ = id`, square orthogonal `W^h` and the adjoint seeded with the
//! forward output (`X^L_* = X^L`), every backward transition undoes the
//! matching forward one, so the adjoint record reproduces the forward record
//! entry for entry. The sweep perturbs the weights away from orthogonality and
//! records how far the two records drift apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::fadjoint::fadjoint_pass;
use crate::fprop::forward;
use crate::linalg::{Matrix, Vector};
use crate::network::{Architecture, BiasMode, Network};

/// Max-entry tolerance on `WᵀW − I` and `WWᵀ − I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Householder QR of a square matrix. Returns `(Q, R)` with `R`'s diagonal
/// made non-negative by flipping the matching columns of `Q`.
fn householder_qr(a: &Matrix) -> (Matrix, Matrix) {
    let n = a.rows();
    let mut r = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);

        // R ← (I − 2vvᵀ) R on rows k..n
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..n {
                r[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
        // Q ← Q (I − 2vvᵀ) on columns k..n
        for i in 0..n {
            let dot: f64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum();
            for j in k..n {
                q[(i, j)] -= 2.0 * dot * v[j - k];
            }
        }
    }
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
            for c in 0..n {
                r[(j, c)] = -r[(j, c)];
            }
        }
    }
    (q, r)
}

pub(crate) fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Orthogonal factor of a Gaussian matrix drawn from `rng`.
pub fn random_orthogonal_using<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    householder_qr(&gaussian_matrix(n, n, rng)).0
}

/// Seeded random orthogonal `n×n` matrix (positive-diagonal QR convention).
pub fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    random_orthogonal_using(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `max(‖WᵀW − I‖_max, ‖WWᵀ − I‖_max)`, or `None` for a non-square matrix.
pub fn orthogonality_error(w: &Matrix) -> Option<f64> {
    if w.rows() != w.cols() {
        return None;
    }
    let eye = Matrix::identity(w.rows());
    let wt = w.transpose();
    let a = wt.matmul(w).ok()?.sub(&eye).ok()?.max_abs();
    let b = w.matmul(&wt).ok()?.sub(&eye).ok()?.max_abs();
    Some(a.max(b))
}

pub fn is_orthogonal(w: &Matrix) -> bool {
    orthogonality_error(w).is_some_and(|e| e <= ORTHOGONALITY_TOL)
}

/// Plain identity-activation network of `depth` random orthogonal `width×width` layers.
pub fn orthogonal_stack(width: usize, depth: usize, seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    orthogonal_stack_using(width, depth, &mut rng)
}

fn orthogonal_stack_using<R: Rng>(width: usize, depth: usize, rng: &mut R) -> Result<Network> {
    if width == 0 || depth == 0 {
        return Err(Error::Architecture(format!("width and depth must be ≥ 1, got {width}, {depth}")));
    }
    let arch = Architecture::new(vec![width; depth + 1], BiasMode::Plain, ActivationKind::Identity)?;
    let weights = (0..depth).map(|_| random_orthogonal_using(width, rng)).collect();
    Network::build(arch, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FSymReport {
    /// `max_h ‖X^h_* − X^h‖_max` over `h = 0..=L`.
    pub max_dev_x: f64,
    /// `max_h ‖Y^h_* − Y^h‖_max` over `h = 1..=L`.
    pub max_dev_y: f64,
}

impl FSymReport {
    pub fn max_dev(&self) -> f64 {
        self.max_dev_x.max(self.max_dev_y)
    }
}

fn check_shape(net: &Network) -> Result<()> {
    let arch = net.arch();
    if arch.bias_mode() != BiasMode::Plain {
        return Err(Error::Precondition("self-adjointness check needs plain bias mode".into()));
    }
    if arch.activation() != ActivationKind::Identity {
        return Err(Error::Precondition(format!(
            "self-adjointness check needs identity activation, network uses {}",
            arch.activation()
        )));
    }
    let width = arch.input_dim();
    if arch.layer_sizes().iter().any(|&g| g != width) {
        return Err(Error::Precondition(format!(
            "all layers must share one width, got {}",
            arch.size_string()
        )));
    }
    Ok(())
}

/// Deviation between the forward record and the adjoint seeded with `X^L`,
/// without requiring orthogonal weights.
pub fn fsymmetry_deviation(net: &Network, input: &Vector) -> Result<FSymReport> {
    check_shape(net)?;
    let f = forward(net, input)?;
    let fs = fadjoint_pass(net, &f, f.output())?;
    let mut report = FSymReport { max_dev_x: 0.0, max_dev_y: 0.0 };
    for h in 0..=net.depth() {
        report.max_dev_x = report.max_dev_x.max(fs.x_star(h).sub(f.x(h))?.max_abs());
        if h > 0 {
            report.max_dev_y = report.max_dev_y.max(fs.y_star(h).sub(f.y(h))?.max_abs());
        }
    }
    Ok(report)
}

/// Verifies the preconditions (plain, identity, square, orthogonal) and
/// reports the forward/adjoint deviation.
pub fn check_fsymmetry(net: &Network, input: &Vector) -> Result<FSymReport> {
    check_shape(net)?;
    for (h, w) in net.weights().iter().enumerate() {
        let err = orthogonality_error(w).unwrap_or(f64::INFINITY);
        if err.is_nan() || err > ORTHOGONALITY_TOL {
            return Err(Error::Precondition(format!(
                "W^{} is not orthogonal (max |WᵀW − I| = {err:e})",
                h + 1
            )));
        }
    }
    fsymmetry_deviation(net, input)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub max_dev_x: f64,
    pub max_dev_y: f64,
}

/// For each `ε` in `grid`, replaces every `W^h` by `Q^h + ε·G^h` (seeded
/// orthogonal `Q^h`, standard-normal `G^h`) and records the deviation. The
/// same `Q`, `G` and input are reused across the grid.
pub fn sweep_nonorthogonality(width: usize, depth: usize, grid: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    if let Some(e) = grid.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("perturbation sizes must be finite and ≥ 0, got {e}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = orthogonal_stack_using(width, depth, &mut rng)?;
    let noise: Vec<Matrix> = (0..depth).map(|_| gaussian_matrix(width, width, &mut rng)).collect();
    let input = Vector::new((0..width).map(|_| rng.sample(StandardNormal)).collect());

    grid.iter()
        .map(|&epsilon| {
            let weights = base
                .weights()
                .iter()
                .zip(&noise)
                .map(|(q, g)| q.add(&g.scale(epsilon)))
                .collect::<Result<Vec<_>>>()?;
            let net = Network::build(base.arch().clone(), weights)?;
            let r = fsymmetry_deviation(&net, &input)?;
            Ok(SweepRow { epsilon, max_dev_x: r.max_dev_x, max_dev_y: r.max_dev_y })
        })
        .collect()
}

/// Renders sweep rows as CSV with header `epsilon,max_dev_X,max_dev_Y`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("epsilon,max_dev_X,max_dev_Y\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e}\n", r.epsilon, r.max_dev_x, r.max_dev_y));
    }
    out
}
