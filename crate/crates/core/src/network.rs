//! Architecture, weights, bias convention and initialization.
//!
//! Layers are numbered `h = 1..=L` as in the usual notation; `weights()[h - 1]`
//! holds `W^h`. In [`BiasMode::Augmented`] a constant 1 is appended to every
//! activation vector `X^0..X^{L-1}`, so `W^h` carries one extra column whose
//! entries act as the bias of layer `h`. The output `X^L` is never augmented.

use std::fmt::{self, Write as _};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasMode {
    Plain,
    Augmented,
}

impl BiasMode {
    pub fn name(self) -> &'static str {
        match self {
            BiasMode::Plain => "plain",
            BiasMode::Augmented => "augmented",
        }
    }

    pub fn is_augmented(self) -> bool {
        self == BiasMode::Augmented
    }
}

impl fmt::Display for BiasMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BiasMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(BiasMode::Plain),
            "augmented" => Ok(BiasMode::Augmented),
            other => Err(Error::Config(format!(
                "unknown bias mode '{other}' (expected plain|augmented)"
            ))),
        }
    }
}

/// `A[G_0, …, G_L]` counted in genuine units, plus bias mode and activation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Architecture {
    layer_sizes: Vec<usize>,
    bias_mode: BiasMode,
    activation: ActivationKind,
}

impl Architecture {
    pub fn new(layer_sizes: Vec<usize>, bias_mode: BiasMode, activation: ActivationKind) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Architecture(format!(
                "need at least an input and an output layer, got {layer_sizes:?}"
            )));
        }
        if let Some(pos) = layer_sizes.iter().position(|&g| g == 0) {
            return Err(Error::Architecture(format!("layer {pos} has zero units")));
        }
        Ok(Architecture {
            layer_sizes,
            bias_mode,
            activation,
        })
    }

    /// Parses a dash-separated size list such as `2-3-1`.
    pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
        let sizes = text
            .split('-')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Architecture(format!("bad layer size '{t}' in '{text}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if sizes.len() < 2 {
            return Err(Error::Architecture(format!("'{text}' needs at least two layers")));
        }
        if sizes.contains(&0) {
            return Err(Error::Architecture(format!("'{text}' has a zero-width layer")));
        }
        Ok(sizes)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias_mode
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn with_activation(&self, activation: ActivationKind) -> Architecture {
        Architecture {
            activation,
            ..self.clone()
        }
    }

    /// Number of weight layers `L`.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.layer_sizes[self.depth()]
    }

    /// Dimension of the stored activation vector `X^h`, bias coordinate included.
    pub fn activation_dim(&self, h: usize) -> usize {
        let g = self.layer_sizes[h];
        if self.bias_mode.is_augmented() && h < self.depth() {
            g + 1
        } else {
            g
        }
    }

    /// Expected shape of `W^h`, `h` in `1..=L`.
    pub fn weight_shape(&self, h: usize) -> (usize, usize) {
        (self.layer_sizes[h], self.activation_dim(h - 1))
    }

    pub fn size_string(&self) -> String {
        self.layer_sizes
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InitScheme {
    /// Independent uniform draws in `[-r, r]`.
    Uniform(f64),
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` per layer.
    Xavier,
    Zeros,
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xavier" => Ok(InitScheme::Xavier),
            "zeros" => Ok(InitScheme::Zeros),
            _ => {
                let r = s
                    .strip_prefix("uniform:")
                    .and_then(|r| r.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Config(format!("unknown init '{s}' (expected xavier|zeros|uniform:<r>)"))
                    })?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Config(format!("uniform range must be positive, got {r}")));
                }
                Ok(InitScheme::Uniform(r))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    arch: Architecture,
    weights: Vec<Matrix>,
}

impl Network {
    /// Validates weight shapes against `arch`.
    pub fn build(arch: Architecture, weights: Vec<Matrix>) -> Result<Network> {
        if weights.len() != arch.depth() {
            return Err(Error::Architecture(format!(
                "architecture {} has {} layers but {} weight matrices were given",
                arch.size_string(),
                arch.depth(),
                weights.len()
            )));
        }
        for (i, w) in weights.iter().enumerate() {
            let expected = arch.weight_shape(i + 1);
            if w.shape() != expected {
                return Err(Error::WeightShape {
                    layer: i + 1,
                    expected,
                    actual: w.shape(),
                });
            }
            if !w.is_finite() {
                return Err(Error::Layer {
                    layer: i + 1,
                    msg: "non-finite weight".into(),
                });
            }
        }
        Ok(Network { arch, weights })
    }

    /// Seeded initialization; the same `(arch, scheme, seed)` always yields the same weights.
    pub fn init(arch: Architecture, scheme: InitScheme, seed: u64) -> Result<Network> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (1..=arch.depth())
            .map(|h| {
                let (rows, cols) = arch.weight_shape(h);
                match scheme {
                    InitScheme::Zeros => Ok(Matrix::zeros(rows, cols)),
                    InitScheme::Uniform(r) => {
                        if r.is_nan() || r <= 0.0 {
                            return Err(Error::Config(format!("uniform range must be positive, got {r}")));
                        }
                        Ok(Matrix::from_fn(rows, cols, |_, _| rng.random_range(-r..=r)))
                    }
                    InitScheme::Xavier => {
                        let bound = (6.0 / (rows + cols) as f64).sqrt();
                        Ok(Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound)))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Network::build(arch, weights)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn depth(&self) -> usize {
        self.arch.depth()
    }

    pub fn activation(&self) -> ActivationKind {
        self.arch.activation
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.arch.bias_mode
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    /// `W^h` for `h` in `1..=L`.
    pub fn weight(&self, h: usize) -> &Matrix {
        &self.weights[h - 1]
    }

    pub fn into_weights(self) -> Vec<Matrix> {
        self.weights
    }

    pub fn with_activation(&self, activation: ActivationKind) -> Network {
        Network {
            arch: self.arch.with_activation(activation),
            weights: self.weights.clone(),
        }
    }

    /// Mutable access to a single weight entry; shapes cannot change.
    pub(crate) fn weight_entry_mut(&mut self, layer: usize, row: usize, col: usize) -> &mut f64 {
        &mut self.weights[layer][(row, col)]
    }

    /// `W^h ← W^h − lr·δ_{W^h}` for every layer.
    pub fn descend(&self, grads: &GradientSet, lr: f64) -> Result<Network> {
        grads.check_congruent(self)?;
        let weights = self
            .weights
            .iter()
            .zip(grads.layers())
            .map(|(w, g)| w.sub(&g.scale(lr)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Network {
            arch: self.arch.clone(),
            weights,
        })
    }

    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        out.push_str(MODEL_HEADER);
        out.push('\n');
        let sizes: Vec<String> = self.arch.layer_sizes.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(out, "arch {}", sizes.join(" "));
        let _ = writeln!(out, "mode {}", self.arch.bias_mode);
        let _ = writeln!(out, "activation {}", self.arch.activation);
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "layer {} {} {}", i + 1, w.rows(), w.cols());
            for r in 0..w.rows() {
                let row: Vec<String> = w.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_model_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let file = std::fs::File::open(path)?;
        Network::read_model(file)
    }

    pub fn read_model<R: Read>(reader: R) -> Result<Network> {
        ModelParser::new(reader).parse()
    }

    pub fn from_model_str(s: &str) -> Result<Network> {
        Network::read_model(s.as_bytes())
    }
}

/// `W_♯`: `w` with its last column removed.
pub fn sharp(w: &Matrix) -> Result<Matrix> {
    if w.cols() < 2 {
        return Err(Error::Dimension {
            op: "sharp",
            lhs: format!("{}x{}", w.rows(), w.cols()),
            rhs: "at least 2 columns".into(),
        });
    }
    Ok(Matrix::from_fn(w.rows(), w.cols() - 1, |i, j| w[(i, j)]))
}

/// Per-layer `δ_{W^h} = ∂J/∂W^h`, shape-congruent with the network's weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GradientSet {
    layers: Vec<Matrix>,
}

impl GradientSet {
    pub fn new(layers: Vec<Matrix>) -> Self {
        GradientSet { layers }
    }

    pub fn zeros_like(net: &Network) -> Self {
        GradientSet {
            layers: net.weights().iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
        }
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    /// `δ_{W^h}` for `h` in `1..=L`.
    pub fn layer(&self, h: usize) -> &Matrix {
        &self.layers[h - 1]
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.layers.iter().fold(0.0, |m, l| m.max(l.max_abs()))
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(Matrix::shape).collect()
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Matrix] {
        &mut self.layers
    }

    pub fn check_congruent(&self, net: &Network) -> Result<()> {
        if self.layers.len() != net.depth() {
            return Err(Error::Dimension {
                op: "gradient set",
                lhs: format!("{} layers", self.layers.len()),
                rhs: format!("network depth {}", net.depth()),
            });
        }
        for (i, (g, w)) in self.layers.iter().zip(net.weights()).enumerate() {
            if g.shape() != w.shape() {
                return Err(Error::WeightShape {
                    layer: i + 1,
                    expected: w.shape(),
                    actual: g.shape(),
                });
            }
        }
        Ok(())
    }
}

const MODEL_HEADER: &str = "fadjoint-model v1";

struct ModelParser<R> {
    lines: std::iter::Enumerate<std::io::Lines<BufReader<R>>>,
}

impl<R: Read> ModelParser<R> {
    fn new(reader: R) -> Self {
        ModelParser {
            lines: BufReader::new(reader).lines().enumerate(),
        }
    }

    /// Next non-blank line with its 1-based number.
    fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        for (i, line) in self.lines.by_ref() {
            let line = line?;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Ok(Some((i + 1, trimmed.to_string())));
            }
        }
        Ok(None)
    }

    fn expect_line(&mut self, what: &str, last: usize) -> Result<(usize, String)> {
        self.next_line()?.ok_or_else(|| Error::Parse {
            line: last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn keyword<'a>(line: usize, text: &'a str, key: &str) -> Result<Vec<&'a str>> {
        let mut parts = text.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            _ => Err(Error::Parse {
                line,
                msg: format!("expected '{key} …', found '{text}'"),
            }),
        }
    }

    fn parse(mut self) -> Result<Network> {
        let (n, header) = self.expect_line("header", 0)?;
        if header != MODEL_HEADER {
            return Err(Error::Parse {
                line: n,
                msg: format!("expected header '{MODEL_HEADER}', found '{header}'"),
            });
        }

        let (n, text) = self.expect_line("arch line", n)?;
        let sizes = Self::keyword(n, &text, "arch")?
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: n,
                msg: format!("bad layer size: {e}"),
            })?;

        let (n, text) = self.expect_line("mode line", n)?;
        let mode = match Self::keyword(n, &text, "mode")?.as_slice() {
            [m] => m.parse::<BiasMode>().map_err(|e| Error::Parse { line: n, msg: e.to_string() })?,
            _ => return Err(Error::Parse { line: n, msg: "expected 'mode plain|augmented'".into() }),
        };

        let (n, text) = self.expect_line("activation line", n)?;
        let activation = match Self::keyword(n, &text, "activation")?.as_slice() {
            [a] => a.parse::<ActivationKind>().map_err(|e| Error::Parse { line: n, msg: e.to_string() })?,
            _ => return Err(Error::Parse { line: n, msg: "expected 'activation <name>'".into() }),
        };

        let arch = Architecture::new(sizes, mode, activation).map_err(|e| Error::Parse {
            line: n,
            msg: e.to_string(),
        })?;

        let mut last = n;
        let mut weights = Vec::with_capacity(arch.depth());
        for h in 1..=arch.depth() {
            let (n, text) = self.expect_line(&format!("'layer {h} …'"), last)?;
            let dims = Self::keyword(n, &text, "layer")?
                .iter()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: n, msg: format!("bad layer header: {e}") })?;
            let (rows, cols) = match dims.as_slice() {
                [idx, r, c] if *idx == h => (*r, *c),
                _ => {
                    return Err(Error::Parse {
                        line: n,
                        msg: format!("expected 'layer {h} <rows> <cols>', found '{text}'"),
                    })
                }
            };
            if (rows, cols) != arch.weight_shape(h) {
                return Err(Error::Parse {
                    line: n,
                    msg: format!(
                        "layer {h} declared {rows}x{cols}, architecture requires {:?}",
                        arch.weight_shape(h)
                    ),
                });
            }
            last = n;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (n, text) = self.expect_line(&format!("a row of layer {h}"), last)?;
                let row = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse { line: n, msg: format!("bad number: {e}") })?;
                if row.len() != cols {
                    return Err(Error::Parse {
                        line: n,
                        msg: format!("expected {cols} values, found {}", row.len()),
                    });
                }
                if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Parse { line: n, msg: format!("non-finite weight {v}") });
                }
                data.extend(row);
                last = n;
            }
            weights.push(Matrix::from_vec(rows, cols, data)?);
        }
        if let Some((n, text)) = self.next_line()? {
            return Err(Error::Parse {
                line: n,
                msg: format!("trailing content '{text}'"),
            });
        }
        Network::build(arch, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arch(sizes: &[usize], mode: BiasMode) -> Architecture {
        Architecture::new(sizes.to_vec(), mode, ActivationKind::Identity).unwrap()
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn build_worked_example_networks() {
        let a111 = arch(&[1, 1, 1], BiasMode::Augmented);
        Network::build(a111, vec![m(&[&[2.0, 1.0]]), m(&[&[3.0, -1.0]])]).unwrap();

        let a121 = arch(&[1, 2, 1], BiasMode::Augmented);
        Network::build(a121, vec![m(&[&[1.0, 0.0], &[-1.0, 1.0]]), m(&[&[1.0, 2.0, 0.5]])]).unwrap();
    }

    #[test]
    fn build_rejects_wrong_shape() {
        let err = Network::build(arch(&[2, 2], BiasMode::Plain), vec![Matrix::zeros(3, 2)]).unwrap_err();
        assert_eq!(
            err,
            Error::WeightShape {
                layer: 1,
                expected: (2, 2),
                actual: (3, 2)
            }
        );
        assert!(Network::build(arch(&[2, 2, 1], BiasMode::Plain), vec![Matrix::zeros(2, 2)]).is_err());
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        let a = Architecture::new(vec![3, 4, 2], BiasMode::Augmented, ActivationKind::Tanh).unwrap();
        let net = Network::init(a, InitScheme::Xavier, 11).unwrap();
        net.save(&path).unwrap();
        assert_eq!(Network::load(&path).unwrap(), net);
        assert!(matches!(Network::load(dir.path().join("missing.txt")), Err(Error::Io(_))));
    }

    #[test]
    fn architecture_validation() {
        assert!(Architecture::new(vec![3], BiasMode::Plain, ActivationKind::Tanh).is_err());
        assert!(Architecture::new(vec![2, 0, 1], BiasMode::Plain, ActivationKind::Tanh).is_err());
        assert_eq!(Architecture::parse_sizes("2-3-1").unwrap(), vec![2, 3, 1]);
        assert!(Architecture::parse_sizes("2-0-1").is_err());
        assert!(Architecture::parse_sizes("2").is_err());
        assert!(Architecture::parse_sizes("2-x").is_err());
    }

    #[test]
    fn augmented_shapes() {
        let a = arch(&[2, 3, 1], BiasMode::Augmented);
        assert_eq!(a.weight_shape(1), (3, 3));
        assert_eq!(a.weight_shape(2), (1, 4));
        assert_eq!(a.activation_dim(0), 3);
        assert_eq!(a.activation_dim(2), 1);
    }

    #[test]
    fn init_zeros_and_determinism() {
        let a = arch(&[2, 2, 1], BiasMode::Augmented);
        let z = Network::init(a.clone(), InitScheme::Zeros, 99).unwrap();
        assert!(z.weights().iter().all(|w| w.max_abs() == 0.0));

        let n1 = Network::init(a.clone(), InitScheme::Uniform(0.5), 7).unwrap();
        let n2 = Network::init(a.clone(), InitScheme::Uniform(0.5), 7).unwrap();
        assert_eq!(n1, n2);
        assert!(n1.weights().iter().all(|w| w.max_abs() <= 0.5));
        let n3 = Network::init(a, InitScheme::Uniform(0.5), 8).unwrap();
        assert_ne!(n1, n3);
    }

    #[test]
    fn xavier_bounds() {
        let net = Network::init(arch(&[2, 3, 1], BiasMode::Plain), InitScheme::Xavier, 1).unwrap();
        let bound1 = (6.0f64 / 5.0).sqrt();
        assert!(net.weight(1).max_abs() <= bound1);
        assert!(net.weight(2).max_abs() <= (6.0f64 / 4.0).sqrt());
        assert!(net.weight(1).max_abs() > 0.0);
    }

    #[test]
    fn init_scheme_parsing() {
        assert_eq!("xavier".parse::<InitScheme>().unwrap(), InitScheme::Xavier);
        assert_eq!("uniform:0.5".parse::<InitScheme>().unwrap(), InitScheme::Uniform(0.5));
        assert!("uniform:-1".parse::<InitScheme>().is_err());
        assert!("gauss".parse::<InitScheme>().is_err());
    }

    #[test]
    fn sharp_examples() {
        assert_eq!(sharp(&m(&[&[3.0, -1.0]])).unwrap(), m(&[&[3.0]]));
        assert_eq!(sharp(&m(&[&[1.0, 2.0, 0.5]])).unwrap(), m(&[&[1.0, 2.0]]));
        assert_eq!(sharp(&Matrix::identity(2)).unwrap(), m(&[&[1.0], &[0.0]]));
        assert!(sharp(&m(&[&[1.0], &[2.0]])).is_err());
    }

    #[test]
    fn descend_subtracts_scaled_gradient() {
        let net = Network::build(
            arch(&[1, 1, 1], BiasMode::Augmented),
            vec![m(&[&[2.0, 1.0]]), m(&[&[3.0, -1.0]])],
        )
        .unwrap();
        let g = GradientSet::new(vec![m(&[&[1.5, 3.0]]), m(&[&[2.0, 1.0]])]);
        let next = net.descend(&g, 0.1).unwrap();
        assert!((next.weight(2)[(0, 0)] - 2.8).abs() < 1e-15);
        assert!((next.weight(2)[(0, 1)] + 1.1).abs() < 1e-15);
        assert!(net.descend(&GradientSet::new(vec![Matrix::zeros(1, 2)]), 0.1).is_err());
    }

    #[test]
    fn model_file_format() {
        let net = Network::build(
            arch(&[1, 1, 1], BiasMode::Augmented),
            vec![m(&[&[2.0, 1.0]]), m(&[&[3.0, -0.1]])],
        )
        .unwrap();
        let text = net.to_model_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "fadjoint-model v1");
        assert_eq!(lines[1], "arch 1 1 1");
        assert_eq!(lines[2], "mode augmented");
        assert_eq!(lines[3], "activation identity");
        assert_eq!(lines[4], "layer 1 1 2");
        assert_eq!(lines[6], "layer 2 1 2");
        assert_eq!(Network::from_model_str(&text).unwrap(), net);
    }

    #[test]
    fn model_parse_errors_report_line() {
        let good = "fadjoint-model v1\narch 1 1\nmode plain\nactivation tanh\nlayer 1 1 1\n0.5\n";
        assert!(Network::from_model_str(good).is_ok());

        let bad_number = good.replace("0.5", "zero");
        match Network::from_model_str(&bad_number).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            e => panic!("unexpected {e:?}"),
        }
        let bad_header = good.replace("v1", "v2");
        assert!(matches!(Network::from_model_str(&bad_header), Err(Error::Parse { line: 1, .. })));
        let bad_shape = good.replace("layer 1 1 1", "layer 1 1 2");
        assert!(matches!(Network::from_model_str(&bad_shape), Err(Error::Parse { line: 5, .. })));
        let truncated = "fadjoint-model v1\narch 1 1\nmode plain\nactivation tanh\nlayer 1 1 1\n";
        assert!(matches!(Network::from_model_str(truncated), Err(Error::Parse { line: 6, .. })));
        let trailing = format!("{good}extra\n");
        assert!(matches!(Network::from_model_str(&trailing), Err(Error::Parse { line: 7, .. })));
    }

    proptest! {
        #[test]
        fn model_round_trip_is_bit_identical(seed in any::<u64>(), augmented in any::<bool>(), r in 1e-3..1e3f64) {
            let mode = if augmented { BiasMode::Augmented } else { BiasMode::Plain };
            let a = Architecture::new(vec![3, 4, 2], mode, ActivationKind::Sigmoid).unwrap();
            let net = Network::init(a, InitScheme::Uniform(r), seed).unwrap();
            let back = Network::from_model_str(&net.to_model_string()).unwrap();
            for (w, v) in net.weights().iter().zip(back.weights()) {
                for (x, y) in w.as_slice().iter().zip(v.as_slice()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            prop_assert_eq!(back, net);
        }

        #[test]
        fn sharp_plus_last_column_rebuilds(rows in 1usize..5, cols in 2usize..6, seed in any::<u64>()) {
            let w = Network::init(
                Architecture::new(vec![cols, rows], BiasMode::Plain, ActivationKind::Identity).unwrap(),
                InitScheme::Uniform(1.0),
                seed,
            ).unwrap().into_weights().remove(0);
            let s = sharp(&w).unwrap();
            let last = w.col_vector(cols - 1);
            let rebuilt = Matrix::from_fn(rows, cols, |i, j| if j + 1 == cols { last[i] } else { s[(i, j)] });
            prop_assert_eq!(rebuilt, w);
        }
    }
}
