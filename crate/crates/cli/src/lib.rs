//! Library side of the `isac-sim` command: config files, run manifests and
//! the commands themselves.

pub mod config;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use isac_core::experiments::{fmt_float, run_trial, sweep, write_csv, SweepAxis};
use isac_core::{validation, Framework, ScenarioConfig, TrialResult};
use serde::{Deserialize, Serialize};

pub use config::{parse_config, parse_config_str, ConfigError, LoadedConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Error of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Infeasible(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible scenario: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<isac_core::Error> for CliError {
    fn from(e: isac_core::Error) -> Self {
        use isac_core::Error as E;
        match e {
            E::Config(_) => CliError::Config(e.to_string()),
            E::Placement(_) | E::PowerInfeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// What a manifest replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Command {
    Run {
        trial: u64,
        frameworks: Vec<String>,
    },
    Sweep {
        axis: String,
        values: Vec<f64>,
        trials: usize,
        frameworks: Vec<String>,
    },
    Validate,
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Command,
    pub argv: Vec<String>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Wall-clock start, milliseconds since the Unix epoch.
    pub started_unix_ms: u128,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn new(command: Command, argv: Vec<String>, config: ScenarioConfig, output_dir: PathBuf) -> Self {
        let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
        Self {
            tool_version: VERSION.to_string(),
            command,
            argv,
            seed: config.seed,
            output_dir,
            started_unix_ms,
            config,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if m.seed != m.config.seed {
            return Err(CliError::Config(format!("{}: seed disagrees with config seed", path.display())));
        }
        m.config.validate()?;
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        fs::write(dir.join(MANIFEST_FILE), json + "\n")?;
        Ok(())
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIAL_FILE: &str = "trial.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const VALIDATE_FILE: &str = "validate.txt";

pub const TRIAL_CSV_HEADER: &str = "trial,framework,distance_error_km,fusion_fallbacks,failure,estimates_km,grid_bound_km,mean_comm_power_w,feasible,min_sinr_threshold";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per framework; estimates as `x y z` triples joined by `;`.
pub fn write_trial_csv<W: Write>(w: &mut W, r: &TrialResult) -> std::io::Result<()> {
    writeln!(w, "{TRIAL_CSV_HEADER}")?;
    for f in &r.frameworks {
        let estimates = f
            .estimates
            .iter()
            .map(|p| format!("{} {} {}", fmt_float(p.x), fmt_float(p.y), fmt_float(p.z)))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            f.framework,
            f.distance_error_km.map_or_else(String::new, fmt_float),
            f.fusion_fallbacks,
            csv_field(f.failure.as_deref().unwrap_or("")),
            estimates,
            fmt_float(r.grid_bound_km),
            fmt_float(r.mean_comm_power_w),
            r.feasible,
            fmt_float(r.min_threshold)
        )?;
    }
    Ok(())
}

pub fn parse_frameworks(names: &[String]) -> Result<Vec<Framework>, CliError> {
    if names.is_empty() {
        return Ok(Framework::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<Framework>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

/// Output of an executed command.
pub struct Output {
    /// Bytes printed to stdout and written to the output directory.
    pub text: Vec<u8>,
    pub file: &'static str,
    /// Error to report after the output is written.
    pub status: Option<CliError>,
}

/// Executes `command` on `config` without touching the filesystem.
pub fn execute(command: &Command, config: &ScenarioConfig) -> Result<Output, CliError> {
    match command {
        Command::Run { trial, frameworks } => {
            let fws = parse_frameworks(frameworks)?;
            let r = run_trial(config, *trial, &fws)?;
            let mut text = Vec::new();
            write_trial_csv(&mut text, &r)?;
            let status = (!r.feasible).then(|| {
                CliError::Infeasible(format!(
                    "trial {} has slots where the SINR threshold could not be met",
                    r.trial
                ))
            });
            Ok(Output { text, file: TRIAL_FILE, status })
        }
        Command::Sweep {
            axis,
            values,
            trials,
            frameworks,
        } => {
            let axis: SweepAxis = axis.parse().map_err(|e: isac_core::Error| CliError::Usage(e.to_string()))?;
            let fws = parse_frameworks(frameworks)?;
            let rows = sweep(config, axis, values, *trials, &fws)?;
            let mut text = Vec::new();
            write_csv(&mut text, &rows)?;
            Ok(Output { text, file: SWEEP_FILE, status: None })
        }
        Command::Validate => {
            let reports = validation::run_all(config.seed);
            let mut text = Vec::new();
            for r in &reports {
                writeln!(text, "[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail)?;
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            let status = (!failed.is_empty()).then(|| CliError::Validation(failed.join(", ")));
            Ok(Output { text, file: VALIDATE_FILE, status })
        }
    }
}

/// Writes the manifest, executes, then writes the command's output file.
pub fn execute_with_manifest(manifest: &RunManifest) -> Result<Output, CliError> {
    manifest.write(&manifest.output_dir)?;
    let out = execute(&manifest.command, &manifest.config)?;
    fs::write(manifest.output_dir.join(out.file), &out.text)?;
    Ok(out)
}
