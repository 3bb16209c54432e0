//! Oracles and property checks shared by the integration tests and the
//! acceptance run. The oracles here avoid the library's own numerics: they
//! use bisection, dense grids, finite differences and a plain forward pass.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaxnet::bnb::{solve, SolverConfig, Status};
use relaxnet::problem::Problem;
use relaxnet::relax::solve_tangent_points;
use relaxnet::{Activation, ActivationMode, Error, Interval, Layer, McCormick, Mlp, Reformulation, TanhEnvelope};

pub type Check = Result<String, String>;

const OVERFLOW: &str = "overflow";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn iv(lo: f64, hi: f64) -> Interval<f64> {
    Interval::new(lo, hi).unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn random_box(r: &mut ChaCha8Rng, span: f64) -> Interval<f64> {
    loop {
        let a = r.gen_range(-span..span);
        let b = r.gen_range(-span..span);
        if (a - b).abs() > 1e-6 {
            return iv(a.min(b), a.max(b));
        }
    }
}

pub fn random_mixed_box(r: &mut ChaCha8Rng, span: f64) -> Interval<f64> {
    iv(-r.gen_range(1e-3..span), r.gen_range(1e-3..span))
}

pub fn sample_in(r: &mut ChaCha8Rng, b: &Interval<f64>) -> f64 {
    b.clamp(b.lo() + r.gen::<f64>() * b.width())
}

fn residual(x: f64, hi: f64) -> f64 {
    let t = x.tanh();
    (1.0 - t * t) - (hi.tanh() - t) / (hi - x)
}

/// Bisection oracle for the convex-side tangent point on a mixed box, with
/// the clamp to the lower bound when the root lies outside.
pub fn bisect_x_cu(lo: f64, hi: f64) -> (f64, bool) {
    if residual(lo, hi) >= 0.0 {
        return (lo, true);
    }
    let (mut a, mut b) = (lo, 0.0);
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if residual(m, hi) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b), false)
}

/// Relaxation of `tanh(x)` over `bx` at `x`: envelope or a reformulation.
pub fn relax_tanh(bx: Interval<f64>, x: f64, variant: Option<Reformulation>) -> Result<(f64, f64), Error> {
    let v = McCormick::variable(0, 1, bx, x)?;
    let r = match variant {
        None => v.tanh_envelope()?,
        Some(f) => v.tanh_reformulated(f)?,
    };
    Ok((r.cv(), r.cc()))
}

pub fn random_mlp(r: &mut ChaCha8Rng, arch: &[usize], hidden: Activation, scale: f64) -> Mlp<f64> {
    let last = arch.len() - 2;
    let layers = arch
        .windows(2)
        .enumerate()
        .map(|(k, w)| Layer {
            weights: (0..w[1])
                .map(|_| (0..w[0]).map(|_| r.gen_range(-scale..scale)).collect())
                .collect(),
            bias: (0..w[1]).map(|_| r.gen_range(-scale..scale)).collect(),
            activation: if k == last { Activation::Identity } else { hidden },
        })
        .collect();
    Mlp::new(arch[0], layers, None, None).unwrap()
}

/// Straightforward forward pass, independent of the generic evaluator.
pub fn forward(m: &Mlp<f64>, x: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = match m.input_scale() {
        Some(s) => x.iter().zip(s.a.iter().zip(&s.b)).map(|(v, (a, b))| a * v + b).collect(),
        None => x.to_vec(),
    };
    for layer in m.layers() {
        z = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, b)| {
                let pre = b + row.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>();
                match layer.activation {
                    Activation::Tanh => pre.tanh(),
                    Activation::Sigmoid => 1.0 / (1.0 + (-pre).exp()),
                    Activation::Identity => pre,
                }
            })
            .collect();
    }
    match m.output_scale() {
        Some(s) => z.iter().zip(s.a.iter().zip(&s.b)).map(|(v, (a, b))| a * v + b).collect(),
        None => z,
    }
}

/// Minimum of `f` on a regular grid over a box of dimension 1 or 2, with
/// the largest change between neighbouring grid values (the grid modulus).
/// Points where `feasible` is false are skipped.
pub struct GridResult {
    pub min: f64,
    pub argmin: Vec<f64>,
    pub modulus: f64,
}

pub fn grid_search(
    bx: &[Interval<f64>],
    per_axis: usize,
    f: impl Fn(&[f64]) -> f64,
    feasible: impl Fn(&[f64]) -> bool,
) -> GridResult {
    let axis = |b: &Interval<f64>, i: usize| {
        if i + 1 == per_axis {
            b.hi()
        } else {
            b.lo() + b.width() * i as f64 / (per_axis - 1) as f64
        }
    };
    let mut best = GridResult {
        min: f64::INFINITY,
        argmin: Vec::new(),
        modulus: 0.0,
    };
    match bx.len() {
        1 => {
            let mut prev: Option<f64> = None;
            for i in 0..per_axis {
                let x = [axis(&bx[0], i)];
                let v = f(&x);
                if let Some(p) = prev {
                    best.modulus = best.modulus.max((v - p).abs());
                }
                prev = Some(v);
                if feasible(&x) && v < best.min {
                    best.min = v;
                    best.argmin = x.to_vec();
                }
            }
        }
        2 => {
            let mut prev_row: Vec<f64> = Vec::new();
            let mut row = Vec::with_capacity(per_axis);
            for i in 0..per_axis {
                let x1 = axis(&bx[0], i);
                row.clear();
                for j in 0..per_axis {
                    let x = [x1, axis(&bx[1], j)];
                    let v = f(&x);
                    if let Some(p) = row.last() {
                        best.modulus = best.modulus.max((v - p).abs());
                    }
                    if let Some(p) = prev_row.get(j) {
                        best.modulus = best.modulus.max((v - p).abs());
                    }
                    row.push(v);
                    if feasible(&x) && v < best.min {
                        best.min = v;
                        best.argmin = x.to_vec();
                    }
                }
                std::mem::swap(&mut prev_row, &mut row);
            }
        }
        d => panic!("grid search supports 1 or 2 dimensions, got {d}"),
    }
    best
}

pub fn network_problem(mlp: &Mlp<f64>, bx: &[Interval<f64>], constraint: Option<&str>) -> Problem {
    let names: Vec<String> = (1..=bx.len()).map(|i| format!("x{i}")).collect();
    let vars: Vec<String> = names
        .iter()
        .zip(bx)
        .map(|(n, b)| format!(r#"{{"name": "{n}", "lo": {:?}, "hi": {:?}}}"#, b.lo(), b.hi()))
        .collect();
    let inputs: Vec<String> = names.iter().map(|n| format!("\"{n}\"")).collect();
    let cons = constraint.map(|c| format!("\"{c}\"")).unwrap_or_default();
    let json = format!(
        r#"{{"variables": [{}], "networks": [{{"id": "net", "inputs": [{}], "model": {}}}],
            "objective": "net.y[0]", "constraints": [{cons}]}}"#,
        vars.join(","),
        inputs.join(","),
        mlp.to_json_string()
    );
    Problem::from_json_str(&json, Path::new(".")).unwrap()
}

fn ok_if(cond: bool, detail: String) -> Check {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// Criterion checks

/// Sandwich, endpoint touching, midpoint convexity/concavity, strict
/// monotonicity, C1 continuity at the tangent points and the bound on the
/// second derivative, over random boxes in [-30, 30].
pub fn check_envelope_properties(n_boxes: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut worst_c1 = 0.0f64;
    for k in 0..n_boxes {
        let bx = if k % 4 == 0 { random_box(&mut r, 30.0) } else { random_mixed_box(&mut r, 30.0) };
        let env = TanhEnvelope::new(&bx).map_err(|e| format!("box {bx}: {e}"))?;
        let (lo, hi) = (bx.lo(), bx.hi());
        let fail = |what: &str, x: f64| Err(format!("box {bx}: {what} at x = {x}"));

        for (x, t) in [(lo, lo.tanh()), (hi, hi.tanh())] {
            if (env.cv(x) - t).abs() > 1e-9 || (env.cc(x) - t).abs() > 1e-9 {
                return fail("envelope does not touch tanh at the endpoint", x);
            }
        }
        let mut xs: Vec<f64> = (0..100).map(|_| sample_in(&mut r, &bx)).collect();
        xs.sort_by(f64::total_cmp);
        for &x in &xs {
            let t = x.tanh();
            if env.cv(x) > t + 1e-9 || env.cc(x) < t - 1e-9 {
                return fail("sandwich violated", x);
            }
        }
        for w in xs.windows(2) {
            let (x, y) = (w[0], w[1]);
            let m = 0.5 * (x + y);
            if env.cv(m) > 0.5 * (env.cv(x) + env.cv(y)) + 1e-9 {
                return fail("convex envelope fails the midpoint inequality", m);
            }
            if env.cc(m) < 0.5 * (env.cc(x) + env.cc(y)) - 1e-9 {
                return fail("concave envelope fails the midpoint inequality", m);
            }
            // strict where tanh itself is distinguishable in double precision
            let strict = x < y && x.abs() <= 10.0 && y.abs() <= 10.0 && y - x > 1e-9;
            let ok_cv = if strict { env.cv(x) < env.cv(y) } else { env.cv(x) <= env.cv(y) };
            let ok_cc = if strict { env.cc(x) < env.cc(y) } else { env.cc(x) <= env.cc(y) };
            if !ok_cv || !ok_cc {
                return fail("envelope not monotonically increasing", x);
            }
        }

        if let Some(tp) = env.tangent_points() {
            let h = 1e-6;
            if !tp.cu_clamped && tp.x_cu - h > lo && tp.x_cu + h < hi {
                let fd = (env.cv(tp.x_cu + h) - env.cv(tp.x_cu - h)) / (2.0 * h);
                let d = (fd - env.cv_slope(tp.x_cu)).abs();
                worst_c1 = worst_c1.max(d);
                if d > 1e-4 {
                    return fail("convex envelope derivative jumps", tp.x_cu);
                }
            }
            if !tp.co_clamped && tp.x_co - h > lo && tp.x_co + h < hi {
                let fd = (env.cc(tp.x_co + h) - env.cc(tp.x_co - h)) / (2.0 * h);
                let d = (fd - env.cc_slope(tp.x_co)).abs();
                worst_c1 = worst_c1.max(d);
                if d > 1e-4 {
                    return fail("concave envelope derivative jumps", tp.x_co);
                }
            }
        }

        let h = 1e-4;
        let bound_cv = 2.0 * lo.abs().sinh() + 1e-6;
        let bound_cc = 2.0 * hi.abs().sinh() + 1e-6;
        for &x in &xs {
            if x - h < lo || x + h > hi {
                continue;
            }
            let d2_cv = (env.cv(x + h) - 2.0 * env.cv(x) + env.cv(x - h)) / (h * h);
            let d2_cc = (env.cc(x + h) - 2.0 * env.cc(x) + env.cc(x - h)) / (h * h);
            if d2_cv.abs() > bound_cv || d2_cc.abs() > bound_cc {
                return fail("second derivative exceeds the bound", x);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok_if(
        secs < 10.0,
        format!("{n_boxes} boxes in {secs:.2} s, worst C1 mismatch {worst_c1:.1e}"),
    )
}

/// Tangent points from the library against the bisection oracle.
pub fn check_tangent_solver(n_boxes: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst_dx = 0.0f64;
    let mut worst_res = 0.0f64;
    for _ in 0..n_boxes {
        let bx = random_mixed_box(&mut r, 30.0);
        let (lo, hi) = (bx.lo(), bx.hi());
        let tp = solve_tangent_points(&bx).map_err(|e| format!("box {bx}: {e}"))?;
        let (cu, cu_clamped) = bisect_x_cu(lo, hi);
        // concave side through the odd symmetry of tanh
        let (co_neg, co_clamped) = bisect_x_cu(-hi, -lo);
        let co = -co_neg;
        if tp.cu_clamped != cu_clamped || tp.co_clamped != co_clamped {
            return Err(format!("box {bx}: clamping disagrees with the oracle"));
        }
        worst_dx = worst_dx.max((tp.x_cu - cu).abs()).max((tp.x_co - co).abs());
        if !cu_clamped {
            worst_res = worst_res.max(residual(tp.x_cu, hi).abs());
        }
        if !co_clamped {
            worst_res = worst_res.max(residual(-tp.x_co, -lo).abs());
        }
        if !(lo..=0.0).contains(&tp.x_cu) || !(0.0..=hi).contains(&tp.x_co) {
            return Err(format!("box {bx}: tangent point outside its half box"));
        }
    }
    ok_if(
        worst_dx <= 1e-9 && worst_res <= 1e-10,
        format!("{n_boxes} boxes, max |dx| {worst_dx:.1e}, max residual {worst_res:.1e}"),
    )
}

/// Where F3 is looser than another reformulation on [-1, 1].
pub struct OrderingViolation {
    pub x: f64,
    pub other: Reformulation,
    pub side: &'static str,
    pub excess: f64,
}

pub fn f3_ordering_violations() -> Result<Vec<OrderingViolation>, String> {
    let bx = iv(-1.0, 1.0);
    let mut out = Vec::new();
    for i in 0..401 {
        let x = if i == 400 { 1.0 } else { -1.0 + i as f64 * 0.005 };
        let (cv3, cc3) = relax_tanh(bx, x, Some(Reformulation::F3)).map_err(|e| e.to_string())?;
        for v in [Reformulation::F1, Reformulation::F2, Reformulation::F4] {
            let (cv, cc) = relax_tanh(bx, x, Some(v)).map_err(|e| e.to_string())?;
            if cv3 < cv - 1e-9 {
                out.push(OrderingViolation { x, other: v, side: "convex", excess: cv - cv3 });
            }
            if cc3 > cc + 1e-9 {
                out.push(OrderingViolation { x, other: v, side: "concave", excess: cc3 - cc });
            }
        }
    }
    Ok(out)
}

/// Envelopes dominate every reformulation; F3 is the tightest
/// reformulation on [-1, 1].
pub fn check_dominance(seed: u64) -> Check {
    let bx = iv(-1.0, 1.0);
    let mut checked = 0;
    for i in 0..401 {
        let x = if i == 400 { 1.0 } else { -1.0 + i as f64 * 0.005 };
        let (cv_env, cc_env) = relax_tanh(bx, x, None).map_err(|e| e.to_string())?;
        for v in Reformulation::ALL {
            let (cv, cc) = relax_tanh(bx, x, Some(v)).map_err(|e| e.to_string())?;
            if cv > cv_env + 1e-9 || cc < cc_env - 1e-9 {
                return Err(format!("{v:?} tighter than the envelope at x = {x} on [-1, 1]"));
            }
            checked += 1;
        }
    }
    let mut r = rng(seed);
    for _ in 0..100 {
        let bx = random_box(&mut r, 10.0);
        for _ in 0..20 {
            let x = sample_in(&mut r, &bx);
            let (cv_env, cc_env) = relax_tanh(bx, x, None).map_err(|e| e.to_string())?;
            for v in Reformulation::ALL {
                let (cv, cc) = relax_tanh(bx, x, Some(v)).map_err(|e| format!("{v:?} on {bx}: {e}"))?;
                if cv > cv_env + 1e-9 || cc < cc_env - 1e-9 {
                    return Err(format!("{v:?} tighter than the envelope at x = {x} on {bx}"));
                }
                checked += 1;
            }
        }
    }
    let mut widths = Vec::new();
    for v in Reformulation::ALL {
        let mut total = 0.0;
        for i in 0..401 {
            let x = -1.0 + i as f64 * 0.005;
            let (cv, cc) = relax_tanh(iv(-1.0, 1.0), x.min(1.0), Some(v)).map_err(|e| e.to_string())?;
            total += cc - cv;
        }
        widths.push(format!("{v:?} {:.3}", total / 401.0));
    }
    let envelope = format!(
        "envelope dominates in all {checked} comparisons; mean width on [-1, 1]: {}",
        widths.join(", ")
    );
    let bad = f3_ordering_violations()?;
    match bad.iter().max_by(|a, b| a.excess.total_cmp(&b.excess)) {
        None => Ok(format!("{envelope}; F3 tightest reformulation at all 401 points")),
        Some(w) => {
            let mut xs: Vec<f64> = bad.iter().map(|v| v.x).collect();
            xs.dedup();
            Err(format!(
                "{envelope}; but F3 is looser than another reformulation at {} of 401 points \
                 (x in [{:.3}, {:.3}]), worst: {} side vs {:?} at x = {:.3} by {:.2e}",
                xs.len(),
                xs.iter().cloned().fold(f64::INFINITY, f64::min),
                xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                w.side,
                w.other,
                w.x,
                w.excess
            ))
        }
    }
}

pub fn peaks_problem() -> Problem {
    let json = format!(
        r#"{{"variables": [{{"name": "x1", "lo": -3, "hi": 3}}, {{"name": "x2", "lo": -3, "hi": 3}}],
            "objective": "{}", "constraints": []}}"#,
        relaxnet::train::PEAKS_EXPR
    );
    Problem::from_json_str(&json, Path::new(".")).unwrap()
}

pub fn check_peaks_ground_truth() -> Check {
    let p = peaks_problem();
    let cfg = SolverConfig::default();
    let r = solve(&p, &cfg).map_err(|e| e.to_string())?;
    let x = r.best_x.clone().unwrap_or_default();
    let detail = format!(
        "{} ub {:.5} lb {:.5} at ({:.4}, {:.4}), {} iterations, {:.2} s",
        r.status.as_str(),
        r.ub,
        r.lb,
        x.first().copied().unwrap_or(f64::NAN),
        x.get(1).copied().unwrap_or(f64::NAN),
        r.iterations,
        r.wall_time
    );
    ok_if(
        r.status == Status::Converged
            && (r.ub + 6.551).abs() <= 5e-3
            && x.len() == 2
            && (x[0] - 0.228).abs() <= 0.02
            && (x[1] + 1.626).abs() <= 0.02
            && r.wall_time <= 60.0,
        detail,
    )
}

pub fn check_committed_network() -> Check {
    let p = Problem::load(fixture("peaks_problem.json")).map_err(|e| e.to_string())?;
    let mlp = p.networks()[0].mlp.clone();
    if mlp.architecture() != [2, 47, 1] {
        return Err(format!("fixture architecture {:?}", mlp.architecture()));
    }
    let cfg = |mode| SolverConfig {
        mode: Some(mode),
        time_limit: Some(600.0),
        ..Default::default()
    };
    let env = solve(&p, &cfg(ActivationMode::Envelope)).map_err(|e| e.to_string())?;
    let f3 = solve(&p, &cfg(ActivationMode::F3)).map_err(|e| e.to_string())?;
    let grid = grid_search(&p.domain(), 2001, |x| forward(&mlp, x)[0], |_| true);
    let detail = format!(
        "envelope: {} gap {:.1e} ub {:.5} in {} iterations ({:.2} s); F3: {} iterations; grid min {:.5}",
        env.status.as_str(),
        env.gap(),
        env.ub,
        env.iterations,
        env.wall_time,
        f3.iterations,
        grid.min
    );
    ok_if(
        env.status == Status::Converged
            && env.gap() <= 1e-4
            && env.wall_time <= 600.0
            && (env.ub - grid.min).abs() <= 1e-3
            && env.iterations <= f3.iterations,
        detail,
    )
}

/// Random one- and two-variable network problems against grid search.
pub fn check_oracle_equivalence(n_problems: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for k in 0..n_problems {
        let dim = 1 + k % 2;
        let hidden = if k % 3 == 2 { Activation::Sigmoid } else { Activation::Tanh };
        let arch: Vec<usize> = if k % 4 == 3 { vec![dim, 4, 3, 1] } else { vec![dim, 6, 1] };
        let mlp = random_mlp(&mut r, &arch, hidden, 2.0);
        let bx: Vec<Interval<f64>> = (0..dim)
            .map(|_| {
                let c = r.gen_range(-2.0..2.0);
                let w = r.gen_range(0.5..2.0);
                iv(c - w, c + w)
            })
            .collect();
        // every other problem gets a linear cut through the box centre
        let cut = (k % 2 == 0).then(|| {
            let c: f64 = bx.iter().map(Interval::mid).sum();
            let lhs: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
            (format!("{} - ({c:?})", lhs.join(" + ")), c)
        });
        let p = network_problem(&mlp, &bx, cut.as_ref().map(|(s, _)| s.as_str()));
        let rep = solve(&p, &SolverConfig::default()).map_err(|e| format!("problem {k}: {e}"))?;
        let per_axis = if dim == 1 { 20001 } else { 2001 };
        let grid = grid_search(
            &bx,
            per_axis,
            |x| forward(&mlp, x)[0],
            |x| cut.as_ref().map_or(true, |(_, c)| x.iter().sum::<f64>() - c <= 0.0),
        );
        let tol = grid.modulus.max(1e-4);
        let diff = (rep.ub - grid.min).abs();
        worst = worst.max(diff / tol);
        if rep.status != Status::Converged || diff > tol {
            return Err(format!(
                "problem {k} ({dim}-D, {arch:?}): solver {} ub {:.6}, grid {:.6}, tolerance {tol:.1e}",
                rep.status.as_str(),
                rep.ub,
                grid.min
            ));
        }
    }
    Ok(format!("{n_problems} problems, worst |ub - grid| / tolerance = {worst:.2}"))
}

/// Subgradient inequality for network relaxations and the network
/// Jacobian against central differences.
pub fn check_subgradients(n_networks: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut pairs = 0;
    let mut skipped = 0;
    let mut worst_grad = 0.0f64;
    for k in 0..n_networks {
        let hidden = if k % 2 == 0 { Activation::Tanh } else { Activation::Sigmoid };
        let mlp = random_mlp(&mut r, &[2, 5, 4, 1], hidden, 1.5);
        let bx = [random_box(&mut r, 2.0), random_box(&mut r, 2.0)];
        for mode in ActivationMode::ALL {
            let relax = |x: &[f64]| -> Result<(f64, Vec<f64>, f64, Vec<f64>), String> {
                let vars: Vec<McCormick<f64>> = (0..2)
                    .map(|i| McCormick::variable(i, 2, bx[i], x[i]).unwrap())
                    .collect();
                let out = mlp.eval(&vars, mode).map_err(|e| e.is_overflow().then_some(()).map_or(e.to_string(), |_| OVERFLOW.into()))?;
                let o = &out[0];
                Ok((o.cv(), o.sub_cv_dense(2), o.cc(), o.sub_cc_dense(2)))
            };
            // modes whose relaxations overflow on this box are skipped
            if matches!(relax(&[bx[0].mid(), bx[1].mid()]), Err(e) if e == OVERFLOW) {
                skipped += 1;
                continue;
            }
            for _ in 0..100 {
                let x = [sample_in(&mut r, &bx[0]), sample_in(&mut r, &bx[1])];
                let y = [sample_in(&mut r, &bx[0]), sample_in(&mut r, &bx[1])];
                let (cv_x, s_cv, cc_x, s_cc) = relax(&x)?;
                let (cv_y, _, cc_y, _) = relax(&y)?;
                let lin = |s: &[f64]| s[0] * (y[0] - x[0]) + s[1] * (y[1] - x[1]);
                let slack = 1e-9 * (1.0 + cv_x.abs().max(cc_x.abs()));
                if cv_y < cv_x + lin(&s_cv) - slack || cc_y > cc_x + lin(&s_cc) + slack {
                    return Err(format!("network {k}, mode {mode}: subgradient inequality fails at {x:?} -> {y:?}"));
                }
                pairs += 1;
            }
        }
        for _ in 0..10 {
            let x = [sample_in(&mut r, &bx[0]), sample_in(&mut r, &bx[1])];
            let jac = mlp.jacobian(&x).map_err(|e| e.to_string())?;
            let h = 1e-6;
            for i in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[i] += h;
                xm[i] -= h;
                let fd = (forward(&mlp, &xp)[0] - forward(&mlp, &xm)[0]) / (2.0 * h);
                let rel = (jac[0][i] - fd).abs() / fd.abs().max(1e-2);
                worst_grad = worst_grad.max(rel);
            }
        }
    }
    ok_if(
        worst_grad <= 1e-6,
        format!(
            "{pairs} subgradient pairs ({skipped} network/mode combinations skipped on overflow), \
             worst relative gradient error {worst_grad:.1e}"
        ),
    )
}

pub fn overflow_network() -> Mlp<f64> {
    Mlp::new(
        1,
        vec![
            Layer {
                weights: vec![vec![1000.0]],
                bias: vec![0.0],
                activation: Activation::Tanh,
            },
            Layer {
                weights: vec![vec![1.0]],
                bias: vec![0.0],
                activation: Activation::Identity,
            },
        ],
        None,
        None,
    )
    .unwrap()
}

pub fn check_overflow() -> Check {
    let mlp = overflow_network();
    let bx = [iv(-1.0, 1.0)];
    let p = network_problem(&mlp, &bx, None);
    let mut seen = Vec::new();
    for mode in [ActivationMode::F1, ActivationMode::F2, ActivationMode::F4] {
        let v = McCormick::variable(0, 1, bx[0], 0.0).unwrap();
        match mlp.eval(&[v], mode) {
            Err(e) if e.is_overflow() => {}
            other => return Err(format!("{mode}: relaxation gave {other:?} instead of an overflow error")),
        }
        let cfg = SolverConfig {
            mode: Some(mode),
            ..Default::default()
        };
        match solve(&p, &cfg) {
            Err(Error::Aborted { mode: m, cause }) if m == mode && cause.is_overflow() => seen.push(mode.to_string()),
            other => return Err(format!("{mode}: solver gave {:?} instead of an overflow abort", other.map(|r| r.status))),
        }
    }
    let env = solve(&p, &SolverConfig::default()).map_err(|e| e.to_string())?;
    ok_if(
        env.status == Status::Converged,
        format!("overflow aborts in {}; envelope mode converges ({:.5})", seen.join(", "), env.ub),
    )
}

/// Scaled flows and constants of the compressor-shaped problem, mirrored
/// from the fixture so the oracle does not go through the expression parser.
pub fn compressor_oracle(m1: &Mlp<f64>, m2: &Mlp<f64>, x: f64) -> (f64, [f64; 4]) {
    let (vin, v) = (1.0, 0.8305);
    let (v1, v2) = (vin * x, vin * (1.0 - x));
    let f = forward(m1, &[v1])[0] * v1 / v + forward(m2, &[v2])[0] * v2 / v;
    (f, [0.615 - v1, v1 - 1.0, 0.253 - v2, v2 - 0.444])
}

pub fn check_compressor() -> Check {
    let p = Problem::load(fixture("compressor_problem.json")).map_err(|e| e.to_string())?;
    if p.n_vars() != 1 || p.networks().len() != 2 || p.constraints().len() != 4 {
        return Err("compressor fixture does not have the expected structure".into());
    }
    let r = solve(&p, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let x = r.best_x.clone().ok_or("no feasible point found")?;
    let e = p.eval_real(&x).map_err(|e| e.to_string())?;
    let viol = p.max_violation(&e.constraints);
    let (m1, m2) = (&p.networks()[0].mlp, &p.networks()[1].mlp);
    let grid = grid_search(
        &p.domain(),
        200_001,
        |x| compressor_oracle(m1, m2, x[0]).0,
        |x| compressor_oracle(m1, m2, x[0]).1.iter().all(|g| *g <= 1e-12),
    );
    let detail = format!(
        "{} ub {:.6} at x = {:.6}, max violation {viol:.1e}, grid {:.6} at x = {:.6}",
        r.status.as_str(),
        r.ub,
        x[0],
        grid.min,
        grid.argmin[0]
    );
    ok_if(
        r.status == Status::Converged && viol <= 1e-6 && (r.ub - grid.min).abs() <= 1e-4,
        detail,
    )
}
