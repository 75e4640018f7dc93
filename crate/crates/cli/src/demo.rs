use std::io::Write;

use fadjoint_core::fadjoint::{fadjoint_pass, weight_gradients, LossKind};
use fadjoint_core::fprop::forward;
use fadjoint_core::linalg::{Matrix, Vector};
use fadjoint_core::network::{BiasMode, Network};
use fadjoint_core::{worked, ActivationKind};
use serde::Serialize;

use crate::{json, CliError, DemoArgs, DemoNet, Status};

#[derive(Debug, Serialize)]
pub struct DemoReport {
    pub network: String,
    pub bias_mode: BiasMode,
    pub activation: ActivationKind,
    pub x: f64,
    pub y: f64,
    /// `J = X^L − y`
    pub loss: f64,
    /// `X^0..X^L`
    pub forward_x: Vec<Vector>,
    /// `Y^1..Y^L`
    pub forward_y: Vec<Vector>,
    /// `X^0_*..X^L_*`
    pub adjoint_x: Vec<Vector>,
    /// `Y^1_*..Y^L_*`
    pub adjoint_y: Vec<Vector>,
    /// `δ_{W^1}..δ_{W^L}`
    pub gradients: Vec<Matrix>,
}

fn demo_network(args: &DemoArgs) -> Result<Network, CliError> {
    let (default, sizes) = match args.which {
        DemoNet::A111 => (worked::a111_default(ActivationKind::Identity), [1, 1, 1]),
        DemoNet::A121 => (worked::a121_default(ActivationKind::Identity), [1, 2, 1]),
    };
    let net = match &args.weights {
        None => default,
        Some(path) => {
            let loaded = Network::load(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            if loaded.arch().layer_sizes() != sizes || loaded.bias_mode() != BiasMode::Augmented {
                return Err(CliError(format!(
                    "{}: model is {} ({}), demo needs {} (augmented)",
                    path.display(),
                    loaded.arch().size_string(),
                    loaded.bias_mode(),
                    default.arch().size_string()
                )));
            }
            loaded
        }
    };
    Ok(match args.activation {
        Some(a) => net.with_activation(a),
        None => net,
    })
}

pub fn report(args: &DemoArgs) -> Result<DemoReport, CliError> {
    let net = demo_network(args)?;
    let x = args.x.unwrap_or(match args.which {
        DemoNet::A111 => 0.5,
        DemoNet::A121 => 1.0,
    });
    if !x.is_finite() {
        return Err(CliError(format!("x must be finite, got {x}")));
    }
    let target = Vector::from([args.y]);
    let f = forward(&net, &Vector::from([x]))?;
    let loss = LossKind::Elementary;
    let seed = loss.cotangent(f.output(), &target)?;
    let fs = fadjoint_pass(&net, &f, &seed)?;
    let grads = weight_gradients(&f, &fs)?;
    let depth = net.depth();
    Ok(DemoReport {
        network: format!("A[{}]", net.arch().layer_sizes().iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",")),
        bias_mode: net.bias_mode(),
        activation: net.activation(),
        x,
        y: args.y,
        loss: loss.value(f.output(), &target)?,
        forward_x: (0..=depth).map(|h| f.x(h).clone()).collect(),
        forward_y: (1..=depth).map(|h| f.y(h).clone()).collect(),
        adjoint_x: (0..=depth).map(|h| fs.x_star(h).clone()).collect(),
        adjoint_y: (1..=depth).map(|h| fs.y_star(h).clone()).collect(),
        gradients: grads.layers().to_vec(),
    })
}

pub(crate) fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|a| a.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub(crate) fn fmt_mat(m: &Matrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let parts: Vec<String> = m.row(i).iter().map(|a| a.to_string()).collect();
            format!("[{}]", parts.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn render_text(r: &DemoReport) -> String {
    let depth = r.forward_y.len();
    let mut s = format!(
        "{} ({}, {}), x = {}\n",
        r.network, r.bias_mode, r.activation, r.x
    );
    s.push_str("F-propagation\n");
    s.push_str(&format!("  X^0   = {}\n", fmt_vec(&r.forward_x[0])));
    for h in 1..=depth {
        s.push_str(&format!("  Y^{h}   = {}\n", fmt_vec(&r.forward_y[h - 1])));
        s.push_str(&format!("  X^{h}   = {}\n", fmt_vec(&r.forward_x[h])));
    }
    s.push_str(&format!("F-adjoint (seed X^{depth}_* = dJ/dX^{depth}, J = X^{depth} - y)\n"));
    s.push_str(&format!("  X^{depth}_* = {}\n", fmt_vec(&r.adjoint_x[depth])));
    for h in (1..=depth).rev() {
        s.push_str(&format!("  Y^{h}_* = {}\n", fmt_vec(&r.adjoint_y[h - 1])));
        s.push_str(&format!("  X^{}_* = {}\n", h - 1, fmt_vec(&r.adjoint_x[h - 1])));
    }
    s.push_str("Weight gradients\n");
    for (h, g) in r.gradients.iter().enumerate() {
        s.push_str(&format!("  dW^{}  = {}\n", h + 1, fmt_mat(g)));
    }
    s.push_str(&format!("J = X^{depth} - y = {} (y = {})\n", r.loss, r.y));
    s
}

pub fn run(args: &DemoArgs, out: &mut dyn Write) -> Result<Status, CliError> {
    let r = report(args)?;
    if args.json {
        writeln!(out, "{}", json::to_line(&r))?;
    } else {
        write!(out, "{}", render_text(&r))?;
    }
    Ok(Status::Success)
}
