use std::io::Write;

use fadjoint_core::fsym::{sweep_csv, sweep_nonorthogonality, SweepRow};

use crate::{json, CliError, FsymArgs, Status};

/// The ε = 0 row must stay within this deviation.
pub const ZERO_ROW_TOL: f64 = 1e-10;

pub fn run(args: &FsymArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    if args.width == 0 || args.depth == 0 {
        return Err(CliError("--width and --depth must be at least 1".into()));
    }
    let rows = sweep_nonorthogonality(args.width, args.depth, &args.eps.0, args.seed)?;
    if args.json {
        for r in &rows {
            writeln!(out, "{}", json::to_line(r))?;
        }
    } else {
        write!(out, "{}", sweep_csv(&rows))?;
    }
    let zero_ok = rows
        .iter()
        .filter(|r| r.epsilon == 0.0)
        .all(|r: &SweepRow| r.max_dev_x.max(r.max_dev_y) <= ZERO_ROW_TOL);
    Ok(if zero_ok { Status::Success } else { Status::CheckFailed })
}
