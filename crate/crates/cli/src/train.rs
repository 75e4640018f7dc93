use std::io::Write;

use fadjoint_core::network::{Architecture, Network};
use fadjoint_core::trainer::{train_with, Dataset, TrainConfig};
use serde::Serialize;

use crate::{json, CliError, Status, TrainArgs};

#[derive(Debug, Serialize)]
struct LogLine {
    epoch: usize,
    mean_loss: f64,
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    arch: String,
    samples: usize,
    epochs: usize,
    final_loss: f64,
    log: Vec<LogLine>,
    model: String,
}

pub fn run(args: &TrainArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let arch = Architecture::new(args.arch.0.clone(), args.bias, args.activation)?;
    let data = Dataset::from_csv(&args.data, arch.input_dim(), arch.output_dim())
        .map_err(|e| CliError(format!("{}: {e}", args.data.display())))?;
    let net = Network::init(arch.clone(), args.init, args.seed)?;
    let cfg = TrainConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        loss: args.loss,
        shuffle_seed: (!args.no_shuffle).then_some(args.seed),
        log_every: args.log_every,
    };

    let mut log = Vec::new();
    let mut write_err = None;
    let (trained, history) = train_with(&net, &data, &cfg, |epoch, mean_loss| {
        if args.json {
            log.push(LogLine { epoch, mean_loss });
        } else if let Err(e) = writeln!(out, "epoch {epoch:>8}  mean_loss {mean_loss:.9e}") {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    trained
        .save(&args.out)
        .map_err(|e| CliError(format!("{}: {e}", args.out.display())))?;

    let final_loss = *history.last().expect("at least one epoch");
    if args.json {
        let summary = TrainSummary {
            arch: arch.size_string(),
            samples: data.len(),
            epochs: history.len(),
            final_loss,
            log,
            model: args.out.display().to_string(),
        };
        writeln!(out, "{}", json::to_line(&summary))?;
    } else {
        writeln!(
            out,
            "trained A[{}] on {} samples for {} epochs, final mean loss {final_loss:.9e}; model written to {}",
            arch.size_string().replace('-', ","),
            data.len(),
            history.len(),
            args.out.display()
        )?;
    }
    Ok(Status::Success)
}
