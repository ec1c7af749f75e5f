//! `mortal-agents` command line: `run`, `validate` and `list`.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
//! run fails.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{LogFormat, ScenarioConfig};
use super::{builtin, run_scenario, scenario_names, validate_config, SCENARIOS};
use crate::error::{Error, Result};

/// Overrides the config seed when `--seed` is absent.
pub const SEED_ENV: &str = "MORTAL_AGENTS_SEED";

const EXIT_CONFIG: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mortal-agents",
    version,
    about = "Simulate mortal Bayesian agents in semimeasure environments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its trajectory log.
    Run(RunArgs),
    /// Check that every environment of a scenario is a semimeasure.
    Validate(ValidateArgs),
    /// Print the built-in scenarios.
    List,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for LogFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => LogFormat::Csv,
            FormatArg::Jsonl => LogFormat::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
struct Source {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig> {
        match (&self.scenario, &self.config) {
            (Some(name), _) => builtin(name),
            (None, Some(path)) => ScenarioConfig::load(path).map_err(|e| match e {
                Error::Io { .. } => Error::Config(e.to_string()),
                e => e,
            }),
            (None, None) => Err(Error::Config(
                "one of --scenario or --config is required".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: Source,
    /// History depth to enumerate.
    #[arg(long, default_value_t = 4)]
    depth: usize,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn run(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut cfg = match args.source.load() {
        Err(e @ Error::Config(_)) if args.source.scenario.is_some() => {
            let _ = writeln!(
                stderr,
                "built-in scenarios: {}",
                scenario_names().join(", ")
            );
            return Err(e);
        }
        other => other?,
    };
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    if let Some(o) = args.offset {
        cfg.offset = o;
    }
    if let Some(seed) = args
        .seed
        .map(Ok)
        .or_else(|| env_seed().transpose())
        .transpose()?
    {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    let format = args
        .format
        .map(LogFormat::from)
        .or(cfg.format)
        .or_else(|| cfg.out.as_deref().map(LogFormat::from_path))
        .unwrap_or(LogFormat::Csv);

    let log = run_scenario::<f64>(&cfg)?;
    match &cfg.out {
        Some(path) => {
            super::write_log(&log, path, format)?;
            let _ = writeln!(
                stderr,
                "{}: {} rows{} -> {}",
                cfg.name,
                log.rows.len(),
                if log.died() { " (died)" } else { "" },
                path.display()
            );
        }
        None => log.write_to(stdout, format).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })?,
    }
    Ok(())
}

fn validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<bool> {
    let cfg = args.source.load()?;
    cfg.check()?;
    let mut valid = true;
    for (label, report) in validate_config::<f64>(&cfg, args.depth)? {
        if report.is_valid() {
            let _ = writeln!(
                stdout,
                "ok: {label} is a semimeasure to depth {} ({} queries)",
                args.depth, report.checked
            );
        }
        for v in &report.violations {
            valid = false;
            let _ = writeln!(stdout, "violation: {label} at {}: {}", v.history, v.reason);
        }
    }
    Ok(valid)
}

fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let result = match &cli.command {
        Command::List => {
            for (name, text) in SCENARIOS {
                let description = ScenarioConfig::from_toml(text)
                    .map(|c| c.description)
                    .unwrap_or_default();
                let _ = writeln!(stdout, "{name:<14} {description}");
            }
            Ok(())
        }
        Command::Run(args) => run(args, stdout, stderr),
        Command::Validate(args) => match validate(args, stdout) {
            Ok(true) => Ok(()),
            Ok(false) => return EXIT_CONFIG,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
