//! Central-difference gradient oracle and a gradient comparison report.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fadjoint::LossKind;
use crate::fprop::forward;
use crate::linalg::Vector;
use crate::network::{GradientSet, Network};

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_ATOL: f64 = 1e-6;
pub const DEFAULT_RTOL: f64 = 1e-5;

fn loss_at(net: &Network, input: &Vector, target: &Vector, loss: LossKind) -> Result<f64> {
    let record = forward(net, input)?;
    loss.value(record.output(), target)
}

/// `(J(W + step·E_ij) − J(W − step·E_ij)) / (2·step)` for every weight entry.
///
/// Each entry is perturbed on its own clone of `net`; entries are evaluated
/// in parallel and the result is identical to a serial sweep.
pub fn numeric_gradient(
    net: &Network,
    input: &Vector,
    target: &Vector,
    loss: LossKind,
    step: f64,
) -> Result<GradientSet> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
    }
    // Surface dimension errors once, before fanning out.
    loss_at(net, input, target, loss)?;

    let entries: Vec<(usize, usize, usize)> = net
        .weights()
        .iter()
        .enumerate()
        .flat_map(|(l, w)| (0..w.rows()).flat_map(move |i| (0..w.cols()).map(move |j| (l, i, j))))
        .collect();

    let values = entries
        .par_iter()
        .map(|&(l, i, j)| {
            let mut probe = net.clone();
            let base = net.weights()[l][(i, j)];
            *probe.weight_entry_mut(l, i, j) = base + step;
            let plus = loss_at(&probe, input, target, loss)?;
            *probe.weight_entry_mut(l, i, j) = base - step;
            let minus = loss_at(&probe, input, target, loss)?;
            Ok((plus - minus) / (2.0 * step))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut grads = GradientSet::zeros_like(net);
    for (&(l, i, j), v) in entries.iter().zip(values) {
        grads.layers_mut()[l][(i, j)] = v;
    }
    Ok(grads)
}

/// Position of a weight entry; `layer` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EntryIndex {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub max_abs_err: f64,
    /// Largest `|a − b| / |b|` over entries with `b ≠ 0`.
    pub max_rel_err: f64,
    /// Entry with the largest `|a − b| / (atol + rtol·|b|)`.
    pub worst: Option<EntryIndex>,
    pub worst_actual: f64,
    pub worst_expected: f64,
    pub atol: f64,
    pub rtol: f64,
    pub entries: usize,
    pub passed: bool,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} max_abs={:.3e} max_rel={:.3e} (atol={:e}, rtol={:e}, {} entries)",
            if self.passed { "PASS" } else { "FAIL" },
            self.max_abs_err,
            self.max_rel_err,
            self.atol,
            self.rtol,
            self.entries
        )?;
        if let Some(w) = self.worst {
            write!(
                f,
                " worst at layer {} ({}, {}): {:e} vs {:e}",
                w.layer, w.row, w.col, self.worst_actual, self.worst_expected
            )?;
        }
        Ok(())
    }
}

/// Compares `a` against the reference `b` under `|a − b| ≤ atol + rtol·|b|`.
pub fn compare(a: &GradientSet, b: &GradientSet, atol: f64, rtol: f64) -> Result<CompareReport> {
    if a.shapes() != b.shapes() {
        return Err(Error::Dimension {
            op: "compare",
            lhs: format!("{:?}", a.shapes()),
            rhs: format!("{:?}", b.shapes()),
        });
    }
    let mut report = CompareReport {
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        worst: None,
        worst_actual: 0.0,
        worst_expected: 0.0,
        atol,
        rtol,
        entries: 0,
        passed: true,
    };
    let mut worst_ratio = -1.0_f64;
    for (l, (ma, mb)) in a.layers().iter().zip(b.layers()).enumerate() {
        for i in 0..ma.rows() {
            for j in 0..ma.cols() {
                let (x, y) = (ma[(i, j)], mb[(i, j)]);
                let diff = (x - y).abs();
                let bound = atol + rtol * y.abs();
                report.entries += 1;
                report.max_abs_err = report.max_abs_err.max(diff);
                if y != 0.0 {
                    report.max_rel_err = report.max_rel_err.max(diff / y.abs());
                } else if diff > 0.0 {
                    report.max_rel_err = f64::INFINITY;
                }
                // NaN must fail.
                if diff.is_nan() || diff > bound {
                    report.passed = false;
                }
                let ratio = if diff == 0.0 {
                    0.0
                } else if bound > 0.0 {
                    diff / bound
                } else {
                    f64::INFINITY
                };
                let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    report.worst = Some(EntryIndex { layer: l + 1, row: i, col: j });
                    report.worst_actual = x;
                    report.worst_expected = y;
                }
            }
        }
    }
    Ok(report)
}
