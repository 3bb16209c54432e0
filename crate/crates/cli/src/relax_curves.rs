use std::path::PathBuf;

use clap::Args;
use relaxnet::{ActivationMode, Interval, McCormick};

use crate::data::csv_err;
use crate::{parse_list, CliError, CliResult, Global};

#[derive(Args, Debug)]
pub struct RelaxArgs {
    /// Box as `lo,hi`.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bx: String,
    /// all, envelope, F1, F2, F3 or F4.
    #[arg(long, default_value = "all")]
    pub mode: String,
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    /// Output CSV (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn column_prefix(m: ActivationMode) -> &'static str {
    match m {
        ActivationMode::Envelope => "env",
        other => other.as_str(),
    }
}

pub fn run(a: &RelaxArgs, g: &Global) -> CliResult<()> {
    let b: Vec<f64> = parse_list(&a.bx, "box")?;
    if b.len() != 2 || !b.iter().all(|v| v.is_finite()) || b[0] >= b[1] {
        return Err(CliError::Usage(format!("--box needs `lo,hi` with lo < hi, got `{}`", a.bx)));
    }
    if a.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let modes: Vec<ActivationMode> = if a.mode.eq_ignore_ascii_case("all") {
        ActivationMode::ALL.to_vec()
    } else {
        vec![crate::optimize::parse_mode(&a.mode)?]
    };
    let bx = Interval::new(b[0], b[1]).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut header = vec!["x".to_string(), "tanh".to_string()];
    for m in &modes {
        header.push(format!("cv_{}", column_prefix(*m)));
        header.push(format!("cc_{}", column_prefix(*m)));
    }
    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => Box::new(
            std::fs::File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&header).map_err(csv_err)?;
    let mut overflowed = Vec::new();
    for i in 0..a.samples {
        let x = if i + 1 == a.samples {
            bx.hi()
        } else {
            bx.lo() + bx.width() * i as f64 / (a.samples - 1) as f64
        };
        let mut row = vec![format!("{x:?}"), format!("{:?}", x.tanh())];
        let v = McCormick::variable(0, 1, bx, x).map_err(|e| CliError::Data(e.to_string()))?;
        for m in &modes {
            let r = match m.variant() {
                None => v.tanh_envelope(),
                Some(f) => v.tanh_reformulated(f),
            };
            match r {
                Ok(r) => {
                    row.push(format!("{:?}", r.cv()));
                    row.push(format!("{:?}", r.cc()));
                }
                Err(e) if e.is_overflow() => {
                    if !overflowed.contains(m) {
                        overflowed.push(*m);
                    }
                    row.push("NaN".into());
                    row.push("NaN".into());
                }
                Err(e) => return Err(CliError::Data(e.to_string())),
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    for m in overflowed {
        eprintln!("warning: mode {m} overflows on {bx}; its columns are NaN");
    }
    if let Some(p) = &a.out {
        g.say(&format!("wrote {} rows to {}", a.samples, p.display()))?;
    }
    Ok(())
}
