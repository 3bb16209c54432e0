//! Best-first branch-and-bound over the input box.
//!
//! Each node is bounded below by linearizing the McCormick relaxations of
//! the objective and constraints at the box centerpoint and minimizing the
//! resulting affine model over the box (in closed form, or with a small LP
//! when constraints are present). Upper bounds come from evaluating, or
//! locally optimizing from, the centerpoint. Nodes are split at the midpoint
//! of their longest edge relative to the root box.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::localopt::{local_solve_in, LocalConfig};
use crate::lp::{self, LpOutcome};
use crate::problem::Problem;
use crate::relax::ActivationMode;
use crate::train::lhc_sample;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpperBoundMode {
    /// Local search from the centerpoint within the node.
    LocalSearch,
    /// Objective evaluation at the centerpoint only.
    PointEval,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub iter_limit: Option<usize>,
    pub ub_mode: UpperBoundMode,
    /// Extra local searches from a Latin hypercube design at the root.
    pub multistart: usize,
    /// Worker threads; 1 is the deterministic serial mode.
    pub threads: usize,
    /// Overrides the problem's activation mode when set.
    pub mode: Option<ActivationMode>,
    /// Constraint violation accepted for incumbents.
    pub feasibility_tol: f64,
    pub local: LocalConfig,
    pub record_log: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_abs: 1e-4,
            eps_rel: 1e-12,
            time_limit: None,
            iter_limit: None,
            ub_mode: UpperBoundMode::LocalSearch,
            multistart: 0,
            threads: 1,
            mode: None,
            feasibility_tol: 1e-6,
            local: LocalConfig::default(),
            record_log: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub bx: Vec<Interval<f64>>,
    pub lb: f64,
    pub id: u64,
    pub depth: usize,
}

impl Node {
    pub fn center(&self) -> Vec<f64> {
        self.bx.iter().map(Interval::mid).collect()
    }
}

// Min-heap order on (lb, id).
struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .lb
            .total_cmp(&self.0.lb)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    TimeLimit,
    IterLimit,
    Infeasible,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "Converged",
            Self::TimeLimit => "TimeLimit",
            Self::IterLimit => "IterLimit",
            Self::Infeasible => "Infeasible",
        }
    }
}

/// One row of the convergence log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub wall_seconds: f64,
    pub lb: f64,
    pub ub: f64,
    pub nodes_open: usize,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub best_x: Option<Vec<f64>>,
    pub ub: f64,
    pub lb: f64,
    pub iterations: usize,
    pub nodes_left: usize,
    pub status: Status,
    pub wall_time: f64,
    pub mode: ActivationMode,
    pub log: Vec<LogRow>,
}

impl SolveReport {
    pub fn gap(&self) -> f64 {
        self.ub - self.lb
    }
}

/// Result of bounding one box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBound {
    pub lb: f64,
    pub infeasible: bool,
}

/// Lower bound over `bx` from the relaxations linearized at its center.
pub fn lower_bound(p: &Problem, bx: &[Interval<f64>]) -> Result<LowerBound> {
    let n = bx.len();
    let c: Vec<f64> = bx.iter().map(Interval::mid).collect();
    let e = p.eval_mccormick(bx, &c)?;

    for g in &e.constraints {
        if g.bx().lo() > 0.0 {
            return Ok(LowerBound {
                lb: f64::INFINITY,
                infeasible: true,
            });
        }
    }

    let s = e.objective.sub_cv_dense(n);
    // affine model in shifted variables y = x - lo, 0 <= y <= width
    let constant = e.objective.cv()
        + s.iter()
            .zip(bx.iter().zip(&c))
            .map(|(si, (b, ci))| si * (b.lo() - ci))
            .sum::<f64>();
    let widths: Vec<f64> = bx.iter().map(Interval::width).collect();

    let linear_min = if e.constraints.is_empty() {
        constant
            + s.iter()
                .zip(&widths)
                .map(|(si, w)| if *si < 0.0 { si * w } else { 0.0 })
                .sum::<f64>()
    } else {
        let mut rows = Vec::with_capacity(e.constraints.len());
        let mut rhs = Vec::with_capacity(e.constraints.len());
        for g in &e.constraints {
            let t = g.sub_cv_dense(n);
            let shift: f64 = t
                .iter()
                .zip(bx.iter().zip(&c))
                .map(|(ti, (b, ci))| ti * (b.lo() - ci))
                .sum();
            rows.push(t);
            rhs.push(-(g.cv() + shift) + 1e-9);
        }
        match lp::minimize(&s, &rows, &rhs, &widths) {
            LpOutcome::Optimal { value, .. } => constant + value,
            LpOutcome::Infeasible => {
                return Ok(LowerBound {
                    lb: f64::INFINITY,
                    infeasible: true,
                })
            }
            // cannot happen with a bounded box; fall back to the interval bound
            LpOutcome::Unbounded => f64::NEG_INFINITY,
        }
    };
    Ok(LowerBound {
        lb: linear_min.max(e.objective.bx().lo()),
        infeasible: false,
    })
}

/// Bisect the coordinate with the largest width relative to the root box.
pub fn branch(node: &Node, root: &[Interval<f64>], next_id: &mut u64) -> (Node, Node) {
    let k = split_coordinate(&node.bx, root);
    let (l, r) = node.bx[k].split(node.bx[k].mid());
    let mut left = node.bx.clone();
    let mut right = node.bx.clone();
    left[k] = l;
    right[k] = r;
    let a = Node {
        bx: left,
        lb: node.lb,
        id: *next_id,
        depth: node.depth + 1,
    };
    let b = Node {
        bx: right,
        lb: node.lb,
        id: *next_id + 1,
        depth: node.depth + 1,
    };
    *next_id += 2;
    (a, b)
}

fn split_coordinate(bx: &[Interval<f64>], root: &[Interval<f64>]) -> usize {
    let mut best = 0;
    let mut best_w = f64::NEG_INFINITY;
    for (i, (b, r)) in bx.iter().zip(root).enumerate() {
        let w = b.width() / r.width();
        if w > best_w {
            best = i;
            best_w = w;
        }
    }
    best
}

struct Processed {
    lb: f64,
    infeasible: bool,
    candidates: Vec<(Vec<f64>, f64)>,
}

fn feasible_value(p: &Problem, x: &[f64], tol: f64) -> Option<f64> {
    let e = p.eval_real(x).ok()?;
    (e.objective.is_finite() && p.max_violation(&e.constraints) <= tol).then_some(e.objective)
}

fn process(p: &Problem, cfg: &SolverConfig, node: &Node, ub: f64) -> Result<Processed> {
    let bound = lower_bound(p, &node.bx)?;
    let lb = node.lb.max(bound.lb);
    let mut out = Processed {
        lb,
        infeasible: bound.infeasible,
        candidates: Vec::new(),
    };
    if bound.infeasible || lb >= ub - cfg.eps_abs {
        return Ok(out);
    }
    let c = node.center();
    if let Some(f) = feasible_value(p, &c, cfg.feasibility_tol) {
        out.candidates.push((c.clone(), f));
    }
    if cfg.ub_mode == UpperBoundMode::LocalSearch {
        let r = local_solve_in(p, &c, &node.bx, &cfg.local);
        if r.max_violation <= cfg.feasibility_tol && r.objective.is_finite() {
            // re-check at the returned point before accepting
            if let Some(f) = feasible_value(p, &r.x, cfg.feasibility_tol) {
                out.candidates.push((r.x, f));
            }
        }
    }
    Ok(out)
}

fn converged(ub: f64, lb: f64, cfg: &SolverConfig) -> bool {
    ub.is_finite() && (ub - lb <= cfg.eps_abs || ub - lb <= cfg.eps_rel * ub.abs())
}

/// Solve the problem to global optimality within the configured tolerances.
///
/// Overflow or domain failures while bounding abort the run with
/// [`Error::Aborted`] naming the activation mode.
pub fn solve(p: &Problem, cfg: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let mode = cfg.mode.unwrap_or(p.mode());
    let owned;
    let p = if mode == p.mode() {
        p
    } else {
        owned = p.clone().with_mode(mode);
        &owned
    };
    let abort = |cause: Error| Error::Aborted {
        mode,
        cause: Box::new(cause),
    };

    let root = p.domain();
    let mut ub = f64::INFINITY;
    let mut best_x: Option<Vec<f64>> = None;
    let offer = |x: Vec<f64>, f: f64, ub: &mut f64, best_x: &mut Option<Vec<f64>>| {
        if f < *ub {
            *ub = f;
            *best_x = Some(x);
        }
    };

    if cfg.ub_mode == UpperBoundMode::LocalSearch && cfg.multistart > 0 {
        let starts = lhc_sample(cfg.multistart, &root, 0);
        for s in starts {
            let r = local_solve_in(p, &s, &root, &cfg.local);
            if let Some(f) = feasible_value(p, &r.x, cfg.feasibility_tol) {
                offer(r.x, f, &mut ub, &mut best_x);
            }
        }
    }

    let mut queue = BinaryHeap::new();
    queue.push(Queued(Node {
        bx: root.clone(),
        lb: f64::NEG_INFINITY,
        id: 0,
        depth: 0,
    }));
    let mut next_id = 1u64;
    let mut iterations = 0usize;
    let mut global_lb = f64::NEG_INFINITY;
    // smallest bound among nodes discarded against the incumbent
    let mut fathomed_lb = f64::INFINITY;
    let mut log = Vec::new();
    let threads = cfg.threads.max(1);

    let status = loop {
        let queue_lb = queue.peek().map_or(ub, |q| q.0.lb.min(ub));
        global_lb = global_lb.max(queue_lb.min(fathomed_lb));
        if queue.is_empty() {
            break if best_x.is_some() {
                Status::Converged
            } else {
                Status::Infeasible
            };
        }
        if converged(ub, global_lb, cfg) {
            break Status::Converged;
        }
        if cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t) {
            break Status::TimeLimit;
        }
        if cfg.iter_limit.is_some_and(|k| iterations >= k) {
            break Status::IterLimit;
        }

        // pop a batch, dropping nodes the incumbent already fathoms
        let mut batch = Vec::with_capacity(threads);
        while batch.len() < threads {
            match queue.pop() {
                Some(Queued(node)) if node.lb >= ub - cfg.eps_abs => {
                    fathomed_lb = fathomed_lb.min(node.lb);
                }
                Some(Queued(node)) => batch.push(node),
                None => break,
            }
        }
        if batch.is_empty() {
            continue;
        }
        if let Some(k) = cfg.iter_limit {
            batch.truncate(k - iterations);
        }

        let results: Vec<Result<Processed>> = if batch.len() == 1 {
            vec![process(p, cfg, &batch[0], ub)]
        } else {
            let ub_now = ub;
            std::thread::scope(|s| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|node| s.spawn(move || process(p, cfg, node, ub_now)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("bounding worker panicked"))
                    .collect()
            })
        };

        for (mut node, res) in batch.into_iter().zip(results) {
            iterations += 1;
            let res = res.map_err(abort)?;
            for (x, f) in res.candidates {
                offer(x, f, &mut ub, &mut best_x);
            }
            if res.infeasible {
                continue;
            }
            if res.lb >= ub - cfg.eps_abs {
                fathomed_lb = fathomed_lb.min(res.lb);
                continue;
            }
            node.lb = res.lb;
            let widest = node
                .bx
                .iter()
                .zip(&root)
                .map(|(b, r)| b.width() / r.width())
                .fold(0.0f64, f64::max);
            if widest <= 1e-14 {
                continue;
            }
            let (a, b) = branch(&node, &root, &mut next_id);
            queue.push(Queued(a));
            queue.push(Queued(b));
        }

        if cfg.record_log {
            let lb_now = queue
                .peek()
                .map_or(ub, |q| q.0.lb.min(ub))
                .min(fathomed_lb)
                .max(global_lb);
            log.push(LogRow {
                iter: iterations,
                wall_seconds: start.elapsed().as_secs_f64(),
                lb: lb_now,
                ub,
                nodes_open: queue.len(),
            });
        }
    };

    let lb = match status {
        Status::Infeasible => f64::INFINITY,
        Status::Converged if queue.is_empty() => ub,
        _ => global_lb.min(ub),
    };
    Ok(SolveReport {
        best_x,
        ub,
        lb,
        iterations,
        nodes_left: queue.len(),
        status,
        wall_time: start.elapsed().as_secs_f64(),
        mode,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi).unwrap()
    }

    fn problem(vars: &[(&str, f64, f64)], objective: &str, constraints: &[&str]) -> Problem {
        let vars: Vec<String> = vars
            .iter()
            .map(|(n, lo, hi)| format!(r#"{{"name": "{n}", "lo": {lo}, "hi": {hi}}}"#))
            .collect();
        let cons: Vec<String> = constraints.iter().map(|c| format!("\"{c}\"")).collect();
        let json = format!(
            r#"{{"variables": [{}], "objective": "{objective}", "constraints": [{}]}}"#,
            vars.join(","),
            cons.join(",")
        );
        Problem::from_json_str(&json, Path::new(".")).unwrap()
    }

    #[test]
    fn closed_form_affine_bound() {
        // objective linear, so its relaxation is itself: 1 + 2(x - .5) - 3(y - .5)
        let p = problem(&[("x", 0.0, 1.0), ("y", 0.0, 1.0)], "1 + 2*(x-0.5) - 3*(y-0.5)", &[]);
        let b = lower_bound(&p, &p.domain()).unwrap();
        assert!((b.lb + 1.5).abs() < 1e-12);
        assert!(!b.infeasible);
    }

    #[test]
    fn lp_bound_with_constraint() {
        let p = problem(&[("x", 0.0, 1.0)], "x", &["0.5 - x"]);
        let b = lower_bound(&p, &p.domain()).unwrap();
        assert!((b.lb - 0.5).abs() < 1e-8, "{b:?}");
    }

    #[test]
    fn certainly_infeasible_node() {
        // constraint range over the box is [0.2, 0.9]
        let p = problem(&[("x", 0.0, 1.0)], "x", &["0.2 + 0.7*x"]);
        let b = lower_bound(&p, &p.domain()).unwrap();
        assert!(b.infeasible);
    }

    #[test]
    fn branching_rules() {
        let mut id = 1;
        let node = Node { bx: vec![iv(0., 2.), iv(0., 1.)], lb: 0.0, id: 0, depth: 0 };
        let (a, b) = branch(&node, &[iv(0., 2.), iv(0., 1.)], &mut id);
        assert_eq!(a.bx[0], iv(0., 1.));
        assert_eq!(b.bx[0], iv(1., 2.));
        assert_eq!((a.id, b.id, id), (1, 2, 3));

        let node = Node { bx: vec![iv(0., 1.), iv(0., 1.)], lb: 0.0, id: 0, depth: 0 };
        let (a, _) = branch(&node, &[iv(0., 1.), iv(0., 1.)], &mut id);
        assert_eq!(a.bx[0], iv(0., 0.5));

        let (a, _) = branch(&node, &[iv(0., 10.), iv(0., 1.)], &mut id);
        assert_eq!(a.bx[1], iv(0., 0.5));
        assert_eq!(a.bx[0], iv(0., 1.));
        assert_eq!(a.lb, node.lb);
    }

    #[test]
    fn convex_quadratic() {
        let p = problem(&[("x", -1.0, 2.0)], "x^2", &[]);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.ub <= 1e-4);
        assert!(r.best_x.unwrap()[0].abs() <= 0.02);
        assert!(r.ub >= r.lb - 1e-12);
    }

    #[test]
    fn infeasible_problem() {
        let p = problem(&[("x", 0.0, 1.0)], "x", &["1.5 - x"]);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::Infeasible);
        assert!(r.best_x.is_none());
    }

    #[test]
    fn point_eval_mode_and_limits() {
        let p = problem(&[("x", -1.0, 2.0)], "x^4 - x^2", &[]);
        let cfg = SolverConfig {
            ub_mode: UpperBoundMode::PointEval,
            ..Default::default()
        };
        let r = solve(&p, &cfg).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!((r.ub + 0.25).abs() <= 1e-4);

        let cfg = SolverConfig {
            iter_limit: Some(3),
            ..Default::default()
        };
        let r = solve(&p, &cfg).unwrap();
        assert_eq!(r.status, Status::IterLimit);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn log_lower_bound_is_monotone() {
        let p = problem(&[("x", -2.0, 2.0), ("y", -2.0, 2.0)], "x^4 - x^2 + y^2*x", &[]);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert!(r.log.windows(2).all(|w| w[1].lb >= w[0].lb));
        assert!(r.log.iter().all(|row| row.ub >= row.lb - 1e-12));
    }
}
