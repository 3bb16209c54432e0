use std::path::PathBuf;

use clap::Args;
use relaxnet::bnb::{solve, SolverConfig};
use relaxnet::expr::Expr;
use relaxnet::problem::{NetworkBinding, Problem, Variable};
use relaxnet::train::{train_mlp, Dataset, TrainConfig};
use relaxnet::{ActivationMode, Interval};

use crate::data::csv_err;
use crate::{parse_list, CliError, CliResult, Global};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Hidden-layer widths.
    #[arg(long, default_value = "10,20,40")]
    pub widths: String,
    /// Numbers of hidden layers.
    #[arg(long, default_value = "1")]
    pub depths: String,
    /// Peaks training points per network.
    #[arg(long, default_value_t = 2000)]
    pub train_n: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_epochs: usize,
    /// Wall-clock limit per optimization run in seconds.
    #[arg(long, default_value_t = 600.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub const HEADER: [&str; 12] = [
    "width", "depth", "mode", "status", "iterations", "wall_seconds", "ub", "lb", "gap", "train_seconds",
    "test_mse", "error",
];

fn peaks_problem(mlp: relaxnet::Mlp<f64>, mode: ActivationMode) -> relaxnet::Result<Problem> {
    let bx = Interval::new(-3.0, 3.0)?;
    let vars = ["x1", "x2"].map(|n| Variable {
        name: n.into(),
        bounds: bx,
    });
    let net = NetworkBinding {
        id: "net".into(),
        mlp,
        inputs: vec![Expr::parse("x1")?, Expr::parse("x2")?],
    };
    Problem::new(vars.to_vec(), Vec::new(), vec![net], Expr::parse("net.y[0]")?, Vec::new(), mode)
}

pub fn run(a: &BenchArgs, g: &Global) -> CliResult<()> {
    let widths: Vec<usize> = parse_list(&a.widths, "widths")?;
    let depths: Vec<usize> = parse_list(&a.depths, "depths")?;
    if widths.contains(&0) || depths.contains(&0) {
        return Err(CliError::Usage("widths and depths must be positive".into()));
    }
    if a.train_n < 3 || !(a.time_limit > 0.0) {
        return Err(CliError::Usage("--train-n must be at least 3 and --time-limit positive".into()));
    }
    let data = Dataset::peaks(a.train_n, g.seed).map_err(|e| CliError::Data(e.to_string()))?;
    let mut w = csv::Writer::from_path(&a.out).map_err(csv_err)?;
    w.write_record(HEADER).map_err(csv_err)?;

    for &depth in &depths {
        for &width in &widths {
            let mut arch = vec![2];
            arch.extend(std::iter::repeat(width).take(depth));
            arch.push(1);
            let cfg = TrainConfig {
                max_epochs: a.max_epochs,
                seed: g.seed,
                ..Default::default()
            };
            let started = std::time::Instant::now();
            let trained = train_mlp(&data, &arch, &cfg);
            let train_seconds = started.elapsed().as_secs_f64();
            for mode in [ActivationMode::Envelope, ActivationMode::F3] {
                let mut row = vec![width.to_string(), depth.to_string(), mode.to_string()];
                let outcome = trained.as_ref().map_err(Clone::clone).and_then(|(mlp, rep)| {
                    let p = peaks_problem(mlp.clone(), mode)?;
                    let s = SolverConfig {
                        time_limit: Some(a.time_limit),
                        threads: g.threads,
                        record_log: false,
                        ..Default::default()
                    };
                    Ok((solve(&p, &s)?, rep.test_mse))
                });
                match outcome {
                    Ok((r, mse)) => {
                        row.extend([
                            r.status.as_str().to_string(),
                            r.iterations.to_string(),
                            format!("{:?}", r.wall_time),
                            format!("{:?}", r.ub),
                            format!("{:?}", r.lb),
                            format!("{:?}", r.gap()),
                            format!("{train_seconds:?}"),
                            format!("{mse:?}"),
                            String::new(),
                        ]);
                        g.say(&format!(
                            "width {width} depth {depth} {mode}: {} in {} iterations, {:.3} s",
                            r.status.as_str(),
                            r.iterations,
                            r.wall_time
                        ))?;
                    }
                    Err(e) => {
                        row.extend(["Error", "", "", "", "", ""].map(String::from));
                        row.extend([format!("{train_seconds:?}"), String::new(), e.to_string()]);
                        g.say(&format!("width {width} depth {depth} {mode}: failed: {e}"))?;
                    }
                }
                w.write_record(&row).map_err(csv_err)?;
                w.flush().map_err(|e| CliError::Data(e.to_string()))?;
            }
        }
    }
    Ok(())
}
