use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_trial, Framework, ScenarioConfig, TrialResult};
use crate::{Error, Result};

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Targets,
    Gateways,
    Slots,
    Power,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Targets => "targets",
            SweepAxis::Gateways => "gateways",
            SweepAxis::Slots => "slots",
            SweepAxis::Power => "power",
        }
    }

    fn is_integral(self) -> bool {
        !matches!(self, SweepAxis::Power)
    }

    /// Copy of `base` with the axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{} sweep value {value} must be a positive integer", self.name())))
            }
        };
        match self {
            SweepAxis::Targets => cfg.targets = count()?,
            SweepAxis::Gateways => {
                let l = count()?;
                if l > base.gateways.len() {
                    return Err(Error::Config(format!(
                        "gateway sweep value {l} exceeds the {} configured gateways",
                        base.gateways.len()
                    )));
                }
                cfg.gateways.truncate(l);
            }
            SweepAxis::Slots => cfg.slots = Some(count()?),
            SweepAxis::Power => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::Config(format!("sensing power {value} must be positive")));
                }
                cfg.sensing_power_w = value;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "targets" => Ok(SweepAxis::Targets),
            "gateways" => Ok(SweepAxis::Gateways),
            "slots" => Ok(SweepAxis::Slots),
            "power" => Ok(SweepAxis::Power),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// Label of the grid-bound pseudo framework row.
pub const GRID_BOUND_LABEL: &str = "grid-bound";

/// Aggregated metrics of one `(axis value, framework)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub framework: String,
    pub mean_distance_error_km: f64,
    pub stderr_km: f64,
    pub mean_comm_power_w: f64,
    pub feasibility_rate: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Mean and standard error of the mean; NaN when empty.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `trials` trials in parallel. Results are ordered by trial index.
pub fn run_trials(cfg: &ScenarioConfig, trials: usize, frameworks: &[Framework]) -> Result<Vec<TrialResult>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, frameworks))
        .collect()
}

/// Aggregates trial results into one row per framework plus the grid bound.
pub fn aggregate(
    axis: SweepAxis,
    value: f64,
    seed: u64,
    frameworks: &[Framework],
    results: &[TrialResult],
) -> Vec<SweepRow> {
    let feasible: Vec<&TrialResult> = results.iter().filter(|r| r.feasible).collect();
    let feasibility_rate = if results.is_empty() {
        f64::NAN
    } else {
        feasible.len() as f64 / results.len() as f64
    };
    let power = mean_stderr(&feasible.iter().map(|r| r.mean_comm_power_w).collect::<Vec<_>>()).0;
    let row = |name: String, errs: Vec<f64>| {
        let (m, s) = mean_stderr(&errs);
        SweepRow {
            axis,
            value,
            framework: name,
            mean_distance_error_km: m,
            stderr_km: s,
            mean_comm_power_w: power,
            feasibility_rate,
            trials: results.len(),
            seed,
        }
    };
    let mut rows: Vec<SweepRow> = frameworks
        .iter()
        .map(|&fw| {
            let errs = results
                .iter()
                .filter_map(|r| r.get(fw).and_then(|f| f.distance_error_km))
                .collect();
            row(fw.name().to_string(), errs)
        })
        .collect();
    rows.push(row(GRID_BOUND_LABEL.to_string(), results.iter().map(|r| r.grid_bound_km).collect()));
    rows
}

/// Runs the sweep over `values`, `trials` trials each.
pub fn sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    frameworks: &[Framework],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &v in values {
        let cfg = axis.apply(base, v)?;
        let results = run_trials(&cfg, trials, frameworks)?;
        rows.extend(aggregate(axis, v, base.seed, frameworks, &results));
    }
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "axis,value,framework,mean_distance_error_km,stderr_km,mean_comm_power_w,feasibility_rate,trials,seed";

/// Float with nine significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let value = if r.axis.is_integral() {
            format!("{}", r.value as u64)
        } else {
            fmt_float(r.value)
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.axis,
            value,
            r.framework,
            fmt_float(r.mean_distance_error_km),
            fmt_float(r.stderr_km),
            fmt_float(r.mean_comm_power_w),
            fmt_float(r.feasibility_rate),
            r.trials,
            r.seed
        )?;
    }
    Ok(())
}
