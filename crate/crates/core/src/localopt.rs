//! Local search for upper bounds: projected gradient descent on an exterior
//! penalty, with exact gradients from forward-mode differentiation.

use crate::interval::Interval;
use crate::problem::Problem;

#[derive(Clone, Debug)]
pub struct LocalConfig {
    pub max_iter: usize,
    /// Stop when the projected-gradient step has at most this norm.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub rho_init: f64,
    pub rho_max: f64,
    /// Penalty escalation continues while the violation exceeds this.
    pub violation_tol: f64,
    /// Violation accepted as feasible in the result.
    pub feasibility_tol: f64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-8,
            armijo: 1e-4,
            rho_init: 10.0,
            rho_max: 1e8,
            violation_tol: 1e-8,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub converged: bool,
}

fn project(x: &mut [f64], bx: &[Interval<f64>]) {
    for (v, b) in x.iter_mut().zip(bx) {
        *v = b.clamp(*v);
    }
}

struct Point {
    f: f64,
    violation: f64,
    phi: f64,
    grad: Vec<f64>,
}

// Exterior quadratic penalty f + rho * sum(max(0, g)^2).
fn evaluate(p: &Problem, x: &[f64], rho: f64) -> Option<Point> {
    let n = x.len();
    let e = p.eval_dual(x).ok()?;
    let mut phi = e.objective.value;
    let mut grad = e.objective.grad_dense(n);
    let mut violation = 0.0f64;
    for g in &e.constraints {
        if g.value > 0.0 {
            violation = violation.max(g.value);
            phi += rho * g.value * g.value;
            for (gi, dg) in grad.iter_mut().zip(g.grad_dense(n)) {
                *gi += 2.0 * rho * g.value * dg;
            }
        }
    }
    (phi.is_finite() && grad.iter().all(|v| v.is_finite())).then_some(Point {
        f: e.objective.value,
        violation,
        phi,
        grad,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Local search over the problem domain.
pub fn local_solve(p: &Problem, x0: &[f64], cfg: &LocalConfig) -> LocalResult {
    local_solve_in(p, x0, &p.domain(), cfg)
}

/// Local search restricted to `bx`.
pub fn local_solve_in(p: &Problem, x0: &[f64], bx: &[Interval<f64>], cfg: &LocalConfig) -> LocalResult {
    let mut x = x0.to_vec();
    project(&mut x, bx);
    let mut rho = cfg.rho_init;
    let Some(start) = evaluate(p, &x, rho) else {
        return LocalResult {
            x,
            objective: f64::INFINITY,
            max_violation: f64::INFINITY,
            converged: false,
        };
    };
    let start_x = x.clone();
    let start_violation = start.violation;
    let start_feasible = start_violation <= cfg.feasibility_tol;
    let start_f = start.f;

    let mut cur = start;
    let mut alpha = 1.0f64;
    let mut iter = 0;
    let mut stationary;
    let mut trial = vec![0.0; x.len()];
    'outer: loop {
        stationary = false;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        loop {
            trial.iter_mut().zip(x.iter().zip(&cur.grad)).for_each(|(t, (xi, gi))| *t = xi - gi);
            project(&mut trial, bx);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
            if norm(&step) <= cfg.grad_tol {
                stationary = true;
                break;
            }
            if iter >= cfg.max_iter {
                break 'outer;
            }
            iter += 1;

            // Barzilai-Borwein trial step from the last accepted move
            alpha = match &prev {
                Some((px, pg)) => {
                    let (mut ss, mut sy) = (0.0, 0.0);
                    for i in 0..x.len() {
                        let s = x[i] - px[i];
                        ss += s * s;
                        sy += s * (cur.grad[i] - pg[i]);
                    }
                    if sy > 0.0 { (ss / sy).clamp(1e-12, 1e8) } else { (alpha * 2.0).min(1e8) }
                }
                None => alpha.min(1.0),
            };
            let accepted = loop {
                trial
                    .iter_mut()
                    .zip(x.iter().zip(&cur.grad))
                    .for_each(|(t, (xi, gi))| *t = xi - alpha * gi);
                project(&mut trial, bx);
                let decrease: f64 = cur
                    .grad
                    .iter()
                    .zip(trial.iter().zip(&x))
                    .map(|(g, (t, xi))| g * (t - xi))
                    .sum();
                if decrease > -1e-300 {
                    break None;
                }
                if let Some(next) = evaluate(p, &trial, rho) {
                    if next.phi <= cur.phi + cfg.armijo * decrease {
                        break Some(next);
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-20 {
                    break None;
                }
            };
            let moved = trial.iter().zip(&x).map(|(t, xi)| (t - xi).abs()).fold(0.0, f64::max);
            match accepted {
                Some(next) if moved > 1e-15 * (1.0 + norm(&x)) => {
                    prev = Some((x.clone(), cur.grad.clone()));
                    x.copy_from_slice(&trial);
                    cur = next;
                }
                // no descent possible at working precision
                _ => {
                    stationary = true;
                    break;
                }
            }
        }
        if cur.violation > cfg.violation_tol {
            if rho >= cfg.rho_max || iter >= cfg.max_iter {
                break;
            }
            rho = (rho * 10.0).min(cfg.rho_max);
            match evaluate(p, &x, rho) {
                Some(pt) => cur = pt,
                None => break,
            }
            continue;
        }
        break;
    }

    let violation = cur.violation;
    let feasible = violation <= cfg.feasibility_tol;
    if start_feasible && (!feasible || start_f < cur.f) {
        return LocalResult {
            x: start_x,
            objective: start_f,
            max_violation: start_violation,
            converged: stationary && feasible,
        };
    }
    LocalResult {
        x,
        objective: cur.f,
        max_violation: violation,
        converged: stationary && feasible,
    }
}
