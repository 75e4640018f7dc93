//! Per-sample gradient descent driven by the adjoint engine, plus the CSV
//! dataset reader.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fadjoint::{gradient, LossKind};
use crate::fprop::forward;
use crate::linalg::Vector;
use crate::network::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<(Vector, Vector)>,
}

impl Dataset {
    pub fn new(samples: Vec<(Vector, Vector)>) -> Result<Dataset> {
        let Some((x0, y0)) = samples.first() else {
            return Err(Error::Data { row: 0, msg: "dataset is empty".into() });
        };
        let (n_in, n_out) = (x0.len(), y0.len());
        for (i, (x, y)) in samples.iter().enumerate() {
            if x.len() != n_in || y.len() != n_out {
                return Err(Error::Data {
                    row: i + 1,
                    msg: format!(
                        "sample has {}+{} values, first sample has {n_in}+{n_out}",
                        x.len(),
                        y.len()
                    ),
                });
            }
        }
        Ok(Dataset { samples })
    }

    /// Reads a CSV file whose rows hold `input_dim` input columns followed by
    /// `output_dim` target columns. A non-numeric first row is taken as a
    /// header; lines starting with `#` are skipped.
    pub fn from_csv(path: impl AsRef<Path>, input_dim: usize, output_dim: usize) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::read_csv(file, input_dim, output_dim)
    }

    pub fn read_csv<R: Read>(reader: R, input_dim: usize, output_dim: usize) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let width = input_dim + output_dim;
        let mut samples = Vec::new();
        let mut first = true;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Data {
                row: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let row = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if first => {
                    first = false;
                    continue;
                }
                Err(e) => {
                    return Err(Error::Data { row, msg: format!("non-numeric value: {e}") });
                }
            };
            first = false;
            if values.len() != width {
                return Err(Error::Data {
                    row,
                    msg: format!(
                        "expected {width} columns ({input_dim} inputs + {output_dim} targets), found {}",
                        values.len()
                    ),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data { row, msg: "non-finite value".into() });
            }
            let (x, y) = values.split_at(input_dim);
            samples.push((Vector::from(x), Vector::from(y)));
        }
        Dataset::new(samples)
    }

    pub fn samples(&self) -> &[(Vector, Vector)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.samples[0].0.len()
    }

    pub fn output_dim(&self) -> usize {
        self.samples[0].1.len()
    }

    fn check_against(&self, net: &Network) -> Result<()> {
        let arch = net.arch();
        if self.input_dim() != arch.input_dim() || self.output_dim() != arch.output_dim() {
            return Err(Error::Data {
                row: 1,
                msg: format!(
                    "dataset has {} inputs and {} targets, network {} expects {} and {}",
                    self.input_dim(),
                    self.output_dim(),
                    arch.size_string(),
                    arch.input_dim(),
                    arch.output_dim()
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub loss: LossKind,
    /// `None` visits samples in file order every epoch.
    pub shuffle_seed: Option<u64>,
    /// Report every this many epochs; 0 disables reporting.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 1000,
            loss: LossKind::Mse,
            shuffle_seed: None,
            log_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// One descent step on a single sample. The returned loss is measured
/// before the update.
pub fn sgd_step(net: &Network, sample: (&Vector, &Vector), lr: f64, loss: LossKind) -> Result<(Network, f64)> {
    let (grads, value) = gradient(net, sample.0, sample.1, loss)?;
    if lr == 0.0 {
        return Ok((net.clone(), value));
    }
    Ok((net.descend(&grads, lr)?, value))
}

/// Mean loss of `net` over `data` without updating anything.
pub fn mean_loss(net: &Network, data: &Dataset, loss: LossKind) -> Result<f64> {
    data.check_against(net)?;
    let mut total = 0.0;
    for (x, y) in data.samples() {
        total += loss.value(forward(net, x)?.output(), y)?;
    }
    Ok(total / data.len() as f64)
}

pub fn train(net: &Network, data: &Dataset, cfg: &TrainConfig) -> Result<(Network, Vec<f64>)> {
    train_with(net, data, cfg, |_, _| {})
}

/// Like [`train`], calling `on_log(epoch, mean_loss)` every `cfg.log_every`
/// epochs (1-based) and after the final epoch.
///
/// Each epoch's recorded loss is the mean of the per-sample losses measured
/// just before each sample's update.
pub fn train_with(
    net: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_log: impl FnMut(usize, f64),
) -> Result<(Network, Vec<f64>)> {
    cfg.validate()?;
    data.check_against(net)?;
    let mut rng = cfg.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut net = net.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut total = 0.0;
        for &i in &order {
            let (x, y) = &data.samples()[i];
            let (next, value) = sgd_step(&net, (x, y), cfg.learning_rate, cfg.loss)?;
            net = next;
            total += value;
        }
        let mean = total / data.len() as f64;
        history.push(mean);
        if cfg.log_every > 0 && (epoch % cfg.log_every == 0 || epoch == cfg.epochs) {
            on_log(epoch, mean);
        }
    }
    Ok((net, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::linalg::Matrix;
    use crate::network::{Architecture, BiasMode, InitScheme};
    use rand::Rng;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn e1() -> Network {
        let a = Architecture::new(vec![1, 1, 1], BiasMode::Augmented, ActivationKind::Identity).unwrap();
        Network::build(a, vec![m(&[&[2.0, 1.0]]), m(&[&[3.0, -1.0]])]).unwrap()
    }

    fn xor() -> Dataset {
        let rows = [([0.0, 0.0], 0.0), ([0.0, 1.0], 1.0), ([1.0, 0.0], 1.0), ([1.0, 1.0], 0.0)];
        Dataset::new(rows.iter().map(|(x, y)| (Vector::from(*x), Vector::from([*y]))).collect()).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_network_unchanged() {
        let net = e1();
        let (next, loss) = sgd_step(&net, (&Vector::from([0.5]), &Vector::from([1.0])), 0.0, LossKind::Mse).unwrap();
        assert_eq!(next, net);
        assert_eq!(loss, 8.0);
    }

    #[test]
    fn zero_residual_leaves_network_unchanged() {
        let net = e1();
        let (next, loss) = sgd_step(&net, (&Vector::from([0.5]), &Vector::from([5.0])), 0.1, LossKind::Mse).unwrap();
        assert_eq!(next, net);
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn elementary_step_on_worked_example() {
        let (next, _) =
            sgd_step(&e1(), (&Vector::from([0.5]), &Vector::from([0.0])), 0.1, LossKind::Elementary).unwrap();
        let w2 = next.weight(2);
        assert!((w2[(0, 0)] - 2.8).abs() < 1e-15);
        assert!((w2[(0, 1)] + 1.1).abs() < 1e-15);
        let w1 = next.weight(1);
        assert!((w1[(0, 0)] - (2.0 - 0.15)).abs() < 1e-15);
        assert!((w1[(0, 1)] - (1.0 - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn one_epoch_zero_lr_records_initial_loss() {
        let a = Architecture::new(vec![2, 2, 1], BiasMode::Augmented, ActivationKind::Sigmoid).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 3).unwrap();
        let data = xor();
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 1, ..Default::default() };
        let (trained, history) = train(&net, &data, &cfg).unwrap();
        assert_eq!(trained, net);
        assert_eq!(history.len(), 1);
        assert!((history[0] - mean_loss(&net, &data, LossKind::Mse).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn training_is_deterministic() {
        let a = Architecture::new(vec![2, 3, 1], BiasMode::Augmented, ActivationKind::Tanh).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 5).unwrap();
        let cfg = TrainConfig { learning_rate: 0.1, epochs: 50, shuffle_seed: Some(9), ..Default::default() };
        let (a1, h1) = train(&net, &xor(), &cfg).unwrap();
        let (a2, h2) = train(&net, &xor(), &cfg).unwrap();
        assert_eq!(h1, h2);
        for (w, v) in a1.weights().iter().zip(a2.weights()) {
            assert!(w.as_slice().iter().zip(v.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn history_length_and_logging() {
        let a = Architecture::new(vec![2, 2, 1], BiasMode::Augmented, ActivationKind::Sigmoid).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 3).unwrap();
        let cfg = TrainConfig { epochs: 10, log_every: 4, ..Default::default() };
        let mut logged = Vec::new();
        let (_, history) = train_with(&net, &xor(), &cfg, |e, _| logged.push(e)).unwrap();
        assert_eq!(history.len(), 10);
        assert_eq!(logged, vec![4, 8, 10]);
    }

    #[test]
    fn config_and_data_validation() {
        assert!(Dataset::new(Vec::new()).is_err());
        assert!(Dataset::new(vec![
            (Vector::from([1.0]), Vector::from([1.0])),
            (Vector::from([1.0, 2.0]), Vector::from([1.0]))
        ])
        .is_err());
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { learning_rate: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());

        let a = Architecture::new(vec![3, 1], BiasMode::Plain, ActivationKind::Sigmoid).unwrap();
        let net = Network::init(a, InitScheme::Zeros, 0).unwrap();
        assert!(train(&net, &xor(), &TrainConfig::default()).is_err());
    }

    #[test]
    fn csv_reading() {
        let text = "# xor\nx1,x2,y\n0,0,0\n0,1,1\n\n1,0,1\n# trailing comment\n1,1,0\n";
        let data = Dataset::read_csv(text.as_bytes(), 2, 1).unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(data.samples()[1], (Vector::from([0.0, 1.0]), Vector::from([1.0])));

        let no_header = "0.5, 2\n1.5, 4\n";
        assert_eq!(Dataset::read_csv(no_header.as_bytes(), 1, 1).unwrap().len(), 2);

        let short = "0,0,0\n0,1\n";
        match Dataset::read_csv(short.as_bytes(), 2, 1).unwrap_err() {
            Error::Data { row, .. } => assert_eq!(row, 2),
            e => panic!("unexpected {e:?}"),
        }
        let bad = "0,0,0\n0,a,1\n";
        assert!(matches!(Dataset::read_csv(bad.as_bytes(), 2, 1), Err(Error::Data { row: 2, .. })));
        assert!(Dataset::read_csv("x,y\n".as_bytes(), 1, 1).is_err());
    }

    #[test]
    fn small_steps_descend() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut violations = 0;
        for seed in 0..50 {
            let a = Architecture::new(vec![3, 4, 2], BiasMode::Augmented, ActivationKind::Sigmoid).unwrap();
            let net = Network::init(a, InitScheme::Uniform(1.5), seed).unwrap();
            let x = Vector::new((0..3).map(|_| rng.random_range(-2.0..2.0)).collect());
            let y = Vector::new((0..2).map(|_| rng.random_range(0.0..1.0)).collect());
            let (next, before) = sgd_step(&net, (&x, &y), 1e-3, LossKind::Mse).unwrap();
            let after = LossKind::Mse.value(forward(&next, &x).unwrap().output(), &y).unwrap();
            if after > before {
                violations += 1;
            }
        }
        assert!(violations <= 2, "{violations} ascent steps");
    }
}
