use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isac_cli::{config, execute_with_manifest, CliError, Command, RunManifest};
use isac_core::ScenarioConfig;

/// Cooperative multi-satellite ISAC network simulator.
#[derive(Parser)]
#[command(name = "isac-sim", version)]
struct Cli {
    /// Worker threads; falls back to ISAC_SIM_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base profile: desk or full. Defaults to full with --config, desk otherwise.
    #[arg(long)]
    profile: Option<String>,
    /// Master seed; drawn from system entropy when neither flag nor config sets it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    targets: Option<usize>,
    /// Sensing power per satellite, watts.
    #[arg(long)]
    sensing_power: Option<f64>,
    #[arg(long)]
    slots: Option<usize>,
    /// Disable receiver noise.
    #[arg(long)]
    noiseless: bool,
    /// Output directory for the manifest and results.
    #[arg(long, default_value = "isac-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one seeded trial and print its result as CSV.
    Run {
        #[command(flatten)]
        common: Common,
        /// Trial index within the seed.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Comma-separated framework names; all by default.
        #[arg(long, value_delimiter = ',')]
        frameworks: Vec<String>,
    },
    /// Sweep one axis and print one CSV row per value and framework.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// targets, gateways, slots or power.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        frameworks: Vec<String>,
    },
    /// Run the oracle-equivalence and invariant suites.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory; defaults to `replay` inside the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(c: &Common) -> Result<ScenarioConfig, CliError> {
    let base = match (&c.profile, &c.config) {
        (Some(p), _) => ScenarioConfig::profile(p)?,
        (None, Some(_)) => ScenarioConfig::full(),
        (None, None) => ScenarioConfig::desk(),
    };
    let (mut cfg, seed_given) = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let loaded = config::parse_config_str(&text, base)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (loaded.config, loaded.seed_given)
        }
        None => (base, false),
    };
    if let Some(t) = c.trials {
        cfg.trials = t;
    }
    if let Some(k) = c.targets {
        cfg.targets = k;
    }
    if let Some(p) = c.sensing_power {
        cfg.sensing_power_w = p;
    }
    if let Some(s) = c.slots {
        cfg.slots = Some(s);
    }
    if c.noiseless {
        cfg.noiseless = true;
    }
    cfg.seed = match c.seed {
        Some(s) => s,
        None if seed_given => cfg.seed,
        None => rand::random(),
    };
    if cfg.trials == 0 {
        return Err(CliError::Config("trial count must be positive".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("ISAC_SIM_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("ISAC_SIM_THREADS must be a positive integer, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn manifest_for(cli: Cli) -> Result<RunManifest, CliError> {
    let argv: Vec<String> = std::env::args().collect();
    let (command, common) = match cli.command {
        Cmd::Run {
            common,
            trial,
            frameworks,
        } => (Command::Run { trial, frameworks }, common),
        Cmd::Sweep {
            common,
            axis,
            values,
            frameworks,
        } => (
            Command::Sweep {
                axis,
                values,
                trials: 0,
                frameworks,
            },
            common,
        ),
        Cmd::Validate { common } => (Command::Validate, common),
        Cmd::Replay { manifest, out } => {
            let m = RunManifest::read(&manifest)?;
            let dir = out.unwrap_or_else(|| m.output_dir.join("replay"));
            return Ok(RunManifest::new(m.command, argv, m.config, dir));
        }
    };
    let cfg = resolve(&common)?;
    let command = match command {
        Command::Sweep {
            axis,
            values,
            frameworks,
            ..
        } => Command::Sweep {
            axis,
            values,
            trials: cfg.trials,
            frameworks,
        },
        other => other,
    };
    Ok(RunManifest::new(command, argv, cfg, common.out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let manifest = manifest_for(cli)?;
    let out = execute_with_manifest(&manifest)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&out.text)?;
    stdout.flush()?;
    match out.status {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isac-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
