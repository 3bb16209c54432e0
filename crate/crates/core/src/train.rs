//! Sampling and training: Latin hypercube designs, dataset splits and a
//! full-batch Adam trainer with early stopping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::mlp::{Activation, Layer, Mlp, Scaling};

/// The two-dimensional peaks test function.
pub const PEAKS_EXPR: &str =
    "3*(1-x1)^2*exp(-x1^2-(x2+1)^2) - 10*(x1/5-x1^3-x2^5)*exp(-x1^2-x2^2) - exp(-(x1+1)^2-x2^2)/3";

pub fn peaks(x1: f64, x2: f64) -> f64 {
    3.0 * (1.0 - x1).powi(2) * (-x1 * x1 - (x2 + 1.0).powi(2)).exp()
        - 10.0 * (x1 / 5.0 - x1.powi(3) - x2.powi(5)) * (-x1 * x1 - x2 * x2).exp()
        - (-(x1 + 1.0).powi(2) - x2 * x2).exp() / 3.0
}

/// Latin hypercube sample of `n` points in `bx`, one row per point.
pub fn lhc_sample(n: usize, bx: &[Interval<f64>], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![0.0; bx.len()]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (d, b) in bx.iter().enumerate() {
        strata.shuffle(&mut rng);
        for (row, &k) in rows.iter_mut().zip(&strata) {
            let u = (k as f64 + rng.gen::<f64>()) / n as f64;
            row[d] = b.clamp(b.lo() + u * b.width());
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.7, 0.15, 0.15);

impl Dataset {
    /// Shuffle the rows with `seed` and split by the given ratios (normalized).
    pub fn new(
        inputs: Vec<Vec<f64>>,
        targets: Vec<Vec<f64>>,
        ratios: (f64, f64, f64),
        seed: u64,
    ) -> Result<Self> {
        let n = inputs.len();
        if n != targets.len() {
            return Err(Error::Shape(format!("{n} input rows but {} target rows", targets.len())));
        }
        if n < 3 {
            return Err(Error::Shape("a dataset needs at least 3 rows".into()));
        }
        let width = |rows: &[Vec<f64>], what: &str| -> Result<usize> {
            let w = rows[0].len();
            if w == 0 {
                return Err(Error::Shape(format!("{what} rows are empty")));
            }
            if let Some(i) = rows.iter().position(|r| r.len() != w) {
                return Err(Error::Shape(format!("{what} row {i} has {} columns, expected {w}", rows[i].len())));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("{what} contain non-finite values")));
            }
            Ok(w)
        };
        width(&inputs, "inputs")?;
        width(&targets, "targets")?;
        let (a, b, c) = ratios;
        if a <= 0.0 || b <= 0.0 || c < 0.0 {
            return Err(Error::Shape("split ratios must be positive".into()));
        }
        let total = a + b + c;
        let n_train = ((a / total) * n as f64).round() as usize;
        let n_val = ((b / total) * n as f64).round() as usize;
        let n_train = n_train.clamp(1, n - 1);
        let n_val = n_val.clamp(1, n - n_train);

        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let test = idx.split_off(n_train + n_val);
        let val = idx.split_off(n_train);
        Ok(Self {
            inputs,
            targets,
            train: idx,
            val,
            test,
        })
    }

    /// Peaks targets on a Latin hypercube design over [-3, 3]^2.
    pub fn peaks(n: usize, seed: u64) -> Result<Self> {
        let bx = vec![Interval::new(-3.0, 3.0)?; 2];
        let inputs = lhc_sample(n, &bx, seed);
        let targets = inputs.iter().map(|x| vec![peaks(x[0], x[1])]).collect();
        Self::new(inputs, targets, DEFAULT_RATIOS, seed)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn n_targets(&self) -> usize {
        self.targets[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn train_idx(&self) -> &[usize] {
        &self.train
    }

    pub fn val_idx(&self) -> &[usize] {
        &self.val
    }

    pub fn test_idx(&self) -> &[usize] {
        &self.test
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub lr: f64,
    pub hidden_activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 5000,
            patience: 200,
            seed: 0,
            lr: 1e-2,
            hidden_activation: Activation::Tanh,
        }
    }
}

/// Errors are mean squared errors on standardized targets.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Validation error after each epoch.
    pub val_history: Vec<f64>,
}

// Mean and standard deviation per column; zero deviations are reported as 1.
fn column_stats(rows: &[Vec<f64>], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = rows[0].len();
    let n = idx.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in idx {
        for (m, v) in mean.iter_mut().zip(&rows[i]) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; d];
    for &i in idx {
        for (s, (v, m)) in std.iter_mut().zip(rows[i].iter().zip(&mean)) {
            *s += (v - m).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = s.sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    (mean, std)
}

struct Params {
    // per layer: weights row-major (out x in), then bias
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    sizes: Vec<usize>,
}

impl Params {
    fn init(sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut w = Vec::new();
        let mut b = Vec::new();
        for k in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[k], sizes[k + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.push((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect());
            b.push(vec![0.0; fan_out]);
        }
        Self {
            w,
            b,
            sizes: sizes.to_vec(),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w: self.w.iter().map(|v| vec![0.0; v.len()]).collect(),
            b: self.b.iter().map(|v| vec![0.0; v.len()]).collect(),
            sizes: self.sizes.clone(),
        }
    }

    fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().flatten().chain(self.b.iter_mut().flatten())
    }

    fn flat(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().flatten().chain(self.b.iter().flatten())
    }
}

struct Trainer<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Vec<f64>],
    hidden: Activation,
}

fn act(a: Activation, z: f64) -> (f64, f64) {
    match a {
        Activation::Tanh => {
            let t = z.tanh();
            (t, 1.0 - t * t)
        }
        Activation::Sigmoid => {
            let s = 1.0 / (1.0 + (-z).exp());
            (s, s * (1.0 - s))
        }
        Activation::Identity => (z, 1.0),
    }
}

impl Trainer<'_> {
    fn forward(&self, p: &Params, x: &[f64], acts: &mut Vec<Vec<f64>>, derivs: &mut Vec<Vec<f64>>) {
        acts.clear();
        derivs.clear();
        acts.push(x.to_vec());
        let last = p.w.len() - 1;
        for k in 0..p.w.len() {
            let (n_in, n_out) = (p.sizes[k], p.sizes[k + 1]);
            let a = if k == last { Activation::Identity } else { self.hidden };
            let prev = &acts[k];
            let mut out = Vec::with_capacity(n_out);
            let mut der = Vec::with_capacity(n_out);
            for i in 0..n_out {
                let row = &p.w[k][i * n_in..(i + 1) * n_in];
                let z = p.b[k][i] + row.iter().zip(prev).map(|(w, v)| w * v).sum::<f64>();
                let (v, d) = act(a, z);
                out.push(v);
                der.push(d);
            }
            acts.push(out);
            derivs.push(der);
        }
    }

    fn mse(&self, p: &Params, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return f64::NAN;
        }
        let (mut acts, mut derivs) = (Vec::new(), Vec::new());
        let mut total = 0.0;
        for &s in idx {
            self.forward(p, &self.x[s], &mut acts, &mut derivs);
            let out = acts.last().unwrap();
            total += out.iter().zip(&self.y[s]).map(|(o, t)| (o - t).powi(2)).sum::<f64>();
        }
        total / (idx.len() * self.y[0].len()) as f64
    }

    fn gradient(&self, p: &Params, idx: &[usize], g: &mut Params) {
        g.flat_mut().for_each(|v| *v = 0.0);
        let (mut acts, mut derivs) = (Vec::new(), Vec::new());
        let scale = 2.0 / (idx.len() * self.y[0].len()) as f64;
        for &s in idx {
            self.forward(p, &self.x[s], &mut acts, &mut derivs);
            let mut delta: Vec<f64> = acts
                .last()
                .unwrap()
                .iter()
                .zip(&self.y[s])
                .zip(derivs.last().unwrap())
                .map(|((o, t), d)| scale * (o - t) * d)
                .collect();
            for k in (0..p.w.len()).rev() {
                let n_in = p.sizes[k];
                let prev = &acts[k];
                for (i, di) in delta.iter().enumerate() {
                    g.b[k][i] += di;
                    let row = &mut g.w[k][i * n_in..(i + 1) * n_in];
                    row.iter_mut().zip(prev).for_each(|(gw, v)| *gw += di * v);
                }
                if k > 0 {
                    let mut back = vec![0.0; n_in];
                    for (i, di) in delta.iter().enumerate() {
                        let row = &p.w[k][i * n_in..(i + 1) * n_in];
                        back.iter_mut().zip(row).for_each(|(bj, w)| *bj += di * w);
                    }
                    back.iter_mut().zip(&derivs[k - 1]).for_each(|(bj, d)| *bj *= d);
                    delta = back;
                }
            }
        }
    }
}

/// Train a network with hidden widths from `arch` (which includes the input
/// and output widths). Hidden layers use `cfg.hidden_activation`, the output
/// layer is linear.
pub fn train_mlp(data: &Dataset, arch: &[usize], cfg: &TrainConfig) -> Result<(Mlp<f64>, TrainReport)> {
    if arch.len() < 2 {
        return Err(Error::Shape("architecture needs at least input and output widths".into()));
    }
    if arch[0] != data.n_inputs() || *arch.last().unwrap() != data.n_targets() {
        return Err(Error::Shape(format!(
            "architecture {:?} does not match data with {} inputs and {} targets",
            arch,
            data.n_inputs(),
            data.n_targets()
        )));
    }
    if arch.contains(&0) {
        return Err(Error::Shape("layer widths must be positive".into()));
    }

    let (x_mean, x_std) = column_stats(&data.inputs, &data.train);
    let (y_mean, y_std) = column_stats(&data.targets, &data.train);
    let standardize = |rows: &[Vec<f64>], mean: &[f64], std: &[f64]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().zip(mean.iter().zip(std)).map(|(v, (m, s))| (v - m) / s).collect())
            .collect()
    };
    let xs = standardize(&data.inputs, &x_mean, &x_std);
    let ys = standardize(&data.targets, &y_mean, &y_std);
    let trainer = Trainer {
        x: &xs,
        y: &ys,
        hidden: cfg.hidden_activation,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = Params::init(arch, &mut rng);
    let mut g = p.zeros_like();
    let mut m = p.zeros_like();
    let mut v = p.zeros_like();
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);

    let mut best_val = trainer.mse(&p, &data.val);
    let mut best = (p.w.clone(), p.b.clone());
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut epoch = 0;
    while epoch < cfg.max_epochs {
        epoch += 1;
        trainer.gradient(&p, &data.train, &mut g);
        let c1 = 1.0 - beta1.powi(epoch as i32);
        let c2 = 1.0 - beta2.powi(epoch as i32);
        for (((pi, gi), mi), vi) in p.flat_mut().zip(g.flat()).zip(m.flat_mut()).zip(v.flat_mut()) {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            *pi -= cfg.lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
        }
        let val = trainer.mse(&p, &data.val);
        history.push(val);
        if val < best_val {
            best_val = val;
            best = (p.w.clone(), p.b.clone());
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    (p.w, p.b) = best;

    let last = p.w.len() - 1;
    let layers = p
        .w
        .iter()
        .zip(&p.b)
        .enumerate()
        .map(|(k, (w, b))| Layer {
            weights: w.chunks(arch[k]).map(<[f64]>::to_vec).collect(),
            bias: b.clone(),
            activation: if k == last { Activation::Identity } else { cfg.hidden_activation },
        })
        .collect();
    let input_scale = Scaling {
        a: x_std.iter().map(|s| 1.0 / s).collect(),
        b: x_mean.iter().zip(&x_std).map(|(m, s)| -m / s).collect(),
    };
    // a constant target column is reproduced exactly
    let constant: Vec<bool> = (0..data.n_targets())
        .map(|j| data.train.iter().all(|&i| data.targets[i][j] == data.targets[data.train[0]][j]))
        .collect();
    let output_scale = Scaling {
        a: y_std.iter().zip(&constant).map(|(s, c)| if *c { 0.0 } else { *s }).collect(),
        b: y_mean.clone(),
    };
    let mlp = Mlp::new(arch[0], layers, Some(input_scale), Some(output_scale))?;

    let mse = |idx: &[usize]| -> Result<f64> {
        if idx.is_empty() {
            return Ok(f64::NAN);
        }
        let mut total = 0.0;
        for &i in idx {
            let out = mlp.eval_real(&data.inputs[i])?;
            for ((o, t), (m, s)) in out.iter().zip(&data.targets[i]).zip(y_mean.iter().zip(&y_std)) {
                total += ((o - m) / s - (t - m) / s).powi(2);
            }
        }
        Ok(total / (idx.len() * data.n_targets()) as f64)
    };
    let report = TrainReport {
        train_mse: mse(&data.train)?,
        val_mse: mse(&data.val)?,
        test_mse: mse(&data.test)?,
        best_epoch,
        epochs_run: epoch,
        val_history: history,
    };
    Ok((mlp, report))
}
