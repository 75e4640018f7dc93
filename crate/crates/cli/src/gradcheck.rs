use std::io::Write;

use fadjoint_core::deltarule;
use fadjoint_core::fadjoint::{fadjoint_pass, weight_gradients};
use fadjoint_core::fprop::forward;
use fadjoint_core::gradcheck::{compare, numeric_gradient, CompareReport};
use fadjoint_core::linalg::Vector;
use fadjoint_core::network::{Architecture, InitScheme, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{json, CliError, GradcheckArgs, Status};

/// Relative tolerance between the two exact routes (adjoint and delta rule).
pub const ORACLE_RTOL: f64 = 1e-12;

#[derive(Debug, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub init_seed: u64,
    pub loss: f64,
    pub vs_deltarule: CompareReport,
    pub vs_numeric: CompareReport,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.vs_deltarule.passed && self.vs_numeric.passed
    }
}

#[derive(Debug, Serialize)]
pub struct GradcheckReport {
    pub arch: String,
    pub bias_mode: String,
    pub activation: String,
    pub loss: String,
    pub seed: u64,
    pub trials: Vec<TrialReport>,
    pub passed: bool,
}

pub fn report(args: &GradcheckArgs) -> Result<GradcheckReport, CliError> {
    if args.trials == 0 {
        return Err(CliError("--trials must be at least 1".into()));
    }
    let arch = Architecture::new(args.arch.0.clone(), args.bias, args.activation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut trials = Vec::with_capacity(args.trials);
    for trial in 0..args.trials {
        let init_seed: u64 = rng.random();
        let net = Network::init(arch.clone(), InitScheme::Xavier, init_seed)?;
        let input = Vector::new((0..arch.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let target = Vector::new((0..arch.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect());

        let record = forward(&net, &input)?;
        let seed = args.loss.cotangent(record.output(), &target)?;
        let loss = args.loss.value(record.output(), &target)?;
        let engine = weight_gradients(&record, &fadjoint_pass(&net, &record, &seed)?)?;
        let oracle = deltarule::backprop(&net, &record, &seed)?;
        let numeric = numeric_gradient(&net, &input, &target, args.loss, args.step)?;
        trials.push(TrialReport {
            trial,
            init_seed,
            loss,
            vs_deltarule: compare(&engine, &oracle, 0.0, ORACLE_RTOL)?,
            vs_numeric: compare(&engine, &numeric, args.atol, args.rtol)?,
        });
    }
    let passed = trials.iter().all(TrialReport::passed);
    Ok(GradcheckReport {
        arch: arch.size_string(),
        bias_mode: arch.bias_mode().to_string(),
        activation: arch.activation().to_string(),
        loss: args.loss.to_string(),
        seed: args.seed,
        trials,
        passed,
    })
}

pub fn render_text(r: &GradcheckReport) -> String {
    let mut s = format!(
        "gradcheck A[{}] ({}, {}, {} loss), seed {}\n",
        r.arch.replace('-', ","),
        r.bias_mode,
        r.activation,
        r.loss,
        r.seed
    );
    for t in &r.trials {
        s.push_str(&format!("trial {:>3}  J = {:<12.6e}\n", t.trial, t.loss));
        s.push_str(&format!("  vs delta rule:   {}\n", t.vs_deltarule));
        s.push_str(&format!("  vs finite diff:  {}\n", t.vs_numeric));
    }
    let failed = r.trials.iter().filter(|t| !t.passed()).count();
    s.push_str(&format!(
        "{}: {} of {} trials passed\n",
        if r.passed { "PASS" } else { "FAIL" },
        r.trials.len() - failed,
        r.trials.len()
    ));
    s
}

pub fn run(args: &GradcheckArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let r = report(args)?;
    if args.json {
        writeln!(out, "{}", json::to_line(&r))?;
    } else {
        write!(out, "{}", render_text(&r))?;
    }
    Ok(if r.passed { Status::Success } else { Status::CheckFailed })
}
