use std::path::PathBuf;

use clap::Args;
use relaxnet::train::{train_mlp, Dataset, TrainConfig, DEFAULT_RATIOS};
use relaxnet::Activation;

use crate::data::{read_table, write_table};
use crate::{parse_list, CliError, CliResult, Global};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset CSV (inputs then targets).
    #[arg(long, conflicts_with = "peaks", required_unless_present = "peaks")]
    pub data: Option<PathBuf>,
    /// Sample this many peaks points on [-3, 3]^2 instead of reading data.
    #[arg(long)]
    pub peaks: Option<usize>,
    /// Layer widths including inputs and outputs, e.g. 2,47,1.
    #[arg(long)]
    pub arch: String,
    /// Output model JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the dataset used for training as CSV.
    #[arg(long)]
    pub save_data: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 200)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    /// Hidden-layer activation: tanh or sigmoid.
    #[arg(long, default_value = "tanh")]
    pub activation: String,
}

pub fn run(a: &TrainArgs, g: &Global) -> CliResult<()> {
    let arch: Vec<usize> = parse_list(&a.arch, "architecture")?;
    if arch.len() < 2 || arch.contains(&0) {
        return Err(CliError::Usage(format!("invalid architecture `{}`", a.arch)));
    }
    let activation: Activation = a.activation.parse().map_err(CliError::Usage)?;
    if activation == Activation::Identity {
        return Err(CliError::Usage("hidden activation must be tanh or sigmoid".into()));
    }
    if !(a.lr > 0.0 && a.lr.is_finite()) || a.max_epochs == 0 {
        return Err(CliError::Usage("--lr must be positive and --max-epochs at least 1".into()));
    }
    let header: Vec<String>;
    let data = match (&a.data, a.peaks) {
        (_, Some(n)) => {
            if n < 3 {
                return Err(CliError::Usage("--peaks needs at least 3 points".into()));
            }
            if arch[0] != 2 || arch[arch.len() - 1] != 1 {
                return Err(CliError::Usage("peaks data needs 2 inputs and 1 output".into()));
            }
            header = ["x1", "x2", "y"].map(String::from).to_vec();
            Dataset::peaks(n, g.seed).map_err(|e| CliError::Data(e.to_string()))?
        }
        (Some(path), None) => {
            let table = read_table(path)?;
            let (n_in, n_out) = (arch[0], arch[arch.len() - 1]);
            if table.header.len() != n_in + n_out {
                return Err(CliError::Data(format!(
                    "{} has {} columns but architecture {} needs {} inputs + {} targets",
                    path.display(),
                    table.header.len(),
                    a.arch,
                    n_in,
                    n_out
                )));
            }
            header = table.header;
            let (inputs, targets) = table
                .rows
                .into_iter()
                .map(|mut r| {
                    let t = r.split_off(n_in);
                    (r, t)
                })
                .unzip();
            Dataset::new(inputs, targets, DEFAULT_RATIOS, g.seed).map_err(|e| CliError::Data(e.to_string()))?
        }
        (None, None) => unreachable!("clap requires --data or --peaks"),
    };
    if let Some(path) = &a.save_data {
        let rows: Vec<Vec<f64>> = data
            .inputs()
            .iter()
            .zip(data.targets())
            .map(|(x, y)| x.iter().chain(y).copied().collect())
            .collect();
        write_table(path, &header, &rows)?;
    }
    let cfg = TrainConfig {
        max_epochs: a.max_epochs,
        patience: a.patience,
        seed: g.seed,
        lr: a.lr,
        hidden_activation: activation,
    };
    let (mlp, rep) = train_mlp(&data, &arch, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(out) = &a.out {
        mlp.save(out).map_err(|e| CliError::Data(e.to_string()))?;
    }
    g.say(&format!(
        "trained {:?} on {} samples ({}/{}/{}): epochs {} (best {})",
        arch,
        data.len(),
        data.train_idx().len(),
        data.val_idx().len(),
        data.test_idx().len(),
        rep.epochs_run,
        rep.best_epoch
    ))?;
    g.say(&format!(
        "mse (standardized): train {:.6e} val {:.6e} test {:.6e}",
        rep.train_mse, rep.val_mse, rep.test_mse
    ))
}
