use std::path::PathBuf;

use clap::Args;
use relaxnet::bnb::{solve, LogRow, SolveReport, SolverConfig, UpperBoundMode};
use relaxnet::problem::Problem;
use relaxnet::{ActivationMode, Error};

use crate::data::csv_err;
use crate::{CliError, CliResult, Global};

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// envelope, F1, F2, F3 or F4 (defaults to the problem file's mode).
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1e-12, allow_negative_numbers = true)]
    pub rel_tol: f64,
    /// Wall-clock limit in seconds.
    #[arg(long, allow_negative_numbers = true)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub iter_limit: Option<usize>,
    /// Upper bounding: local (local search) or point (evaluation only).
    #[arg(long, default_value = "local")]
    pub ub: String,
    /// Local searches from a Latin hypercube design at the root.
    #[arg(long, default_value_t = 0)]
    pub multistart: usize,
    /// Convergence CSV: iter, wall_seconds, lb, ub, nodes_open.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn parse_mode(s: &str) -> CliResult<ActivationMode> {
    s.parse().map_err(|_| CliError::Usage(format!("unknown mode `{s}`")))
}

pub fn solver_config(a: &OptimizeArgs, g: &Global) -> CliResult<SolverConfig> {
    if !(a.abs_tol >= 0.0 && a.abs_tol.is_finite()) {
        return Err(CliError::Usage("--abs-tol must be a non-negative number".into()));
    }
    if !(a.rel_tol >= 0.0 && a.rel_tol.is_finite()) {
        return Err(CliError::Usage("--rel-tol must be a non-negative number".into()));
    }
    if a.time_limit.is_some_and(|t| !(t >= 0.0)) {
        return Err(CliError::Usage("--time-limit must be non-negative".into()));
    }
    let ub_mode = match a.ub.as_str() {
        "local" => UpperBoundMode::LocalSearch,
        "point" => UpperBoundMode::PointEval,
        other => return Err(CliError::Usage(format!("--ub must be `local` or `point`, got `{other}`"))),
    };
    Ok(SolverConfig {
        eps_abs: a.abs_tol,
        eps_rel: a.rel_tol,
        time_limit: a.time_limit,
        iter_limit: a.iter_limit,
        ub_mode,
        multistart: a.multistart,
        threads: g.threads,
        mode: a.mode.as_deref().map(parse_mode).transpose()?,
        ..Default::default()
    })
}

pub fn solver_error(e: Error) -> CliError {
    match e {
        Error::Aborted { mode, cause } => CliError::Solver(format!("solver aborted in mode {mode}: {cause}")),
        other => CliError::Data(other.to_string()),
    }
}

pub fn write_convergence(path: &PathBuf, log: &[LogRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["iter", "wall_seconds", "lb", "ub", "nodes_open"]).map_err(csv_err)?;
    for r in log {
        w.write_record([
            r.iter.to_string(),
            format!("{:?}", r.wall_seconds),
            format!("{:?}", r.lb),
            format!("{:?}", r.ub),
            r.nodes_open.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}

fn summary(r: &SolveReport) -> Vec<String> {
    let x = match &r.best_x {
        Some(x) => format!("{x:?}"),
        None => "none".into(),
    };
    vec![
        format!("status: {}", r.status.as_str()),
        format!("mode: {}", r.mode),
        format!("best_x: {x}"),
        format!("ub: {:.10}", r.ub),
        format!("lb: {:.10}", r.lb),
        format!("iterations: {}", r.iterations),
        format!("nodes_left: {}", r.nodes_left),
        format!("wall_time: {:.3} s", r.wall_time),
    ]
}

pub fn run(a: &OptimizeArgs, g: &Global) -> CliResult<()> {
    let cfg = solver_config(a, g)?;
    let p = Problem::load(&a.problem).map_err(|e| CliError::Data(e.to_string()))?;
    let rep = solve(&p, &cfg).map_err(solver_error)?;
    for line in summary(&rep) {
        g.say(&line)?;
    }
    if let Some(path) = &a.report {
        write_convergence(path, &rep.log)?;
    }
    Ok(())
}
