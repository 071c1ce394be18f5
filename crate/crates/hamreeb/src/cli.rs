use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hamreeb_core::Error as CoreError;

use crate::commands::{self, Options, Outcome};
use crate::InputError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "HAMREEB_OUT";

#[derive(Debug, Parser)]
#[command(name = "hamreeb", version, about = "Hamiltonian flows, shift maps and Reeb graphs of functions on surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Surface name or surface JSON file.
    #[arg(long, global = true, default_value = "disk")]
    pub surface: String,
    /// Field name or field JSON file; defaults to the surface's standard field.
    #[arg(long, global = true)]
    pub field: Option<String>,
    /// Area form name.
    #[arg(long, global = true, default_value = "standard")]
    pub form: String,
    /// Mesh or grid resolution.
    #[arg(long, global = true)]
    pub resolution: Option<f64>,
    /// Integration step.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub step: f64,
    /// Tolerance of the main check (each command has its own default).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the report and artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Sublevel for `volumes`.
    #[arg(long, global = true)]
    pub level: Option<f64>,
    /// Involution for `volumes`: identity or negate.
    #[arg(long, global = true, default_value = "negate")]
    pub involution: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical points, admissibility axioms and homotopy case of a field.
    Analyze,
    /// Reeb graph of a field, written as JSON and DOT.
    Reeb,
    /// A trajectory of the Hamiltonian field.
    Flow {
        /// Starting point `x,y` in chart 0; random from the seed otherwise.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Option<(f64, f64)>,
        #[arg(long, default_value_t = 5.0)]
        time: f64,
    },
    /// Verify the shift map of a graph function.
    Shift {
        /// Graph function JSON; a built-in profile otherwise.
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// The period function theta and its identities.
    Theta,
    /// Sublevel component volumes and the swap obstruction.
    Volumes,
    /// The disk scenario with f = |z|^2 and g = |z|^4.
    Counterexample,
    /// Run the whole invariant suite.
    VerifyAll,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x: f64 = x.trim().parse().map_err(|_| format!("bad x in {s:?}"))?;
    let y: f64 = y.trim().parse().map_err(|_| format!("bad y in {s:?}"))?;
    Ok((x, y))
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Reeb => "reeb",
            Command::Flow { .. } => "flow",
            Command::Shift { .. } => "shift",
            Command::Theta => "theta",
            Command::Volumes => "volumes",
            Command::Counterexample => "counterexample",
            Command::VerifyAll => "verify-all",
        }
    }
}

impl Cli {
    pub fn options(&self) -> Options {
        let mut o = Options {
            surface: self.surface.clone(),
            field: self.field.clone(),
            form: self.form.clone(),
            resolution: self.resolution,
            step: self.step,
            tol: self.tol,
            seed: self.seed,
            level: self.level,
            involution: self.involution.clone(),
            ..Options::default()
        };
        match &self.command {
            Command::Flow { start, time } => {
                o.start = *start;
                o.time = *time;
            }
            Command::Shift { alpha } => o.alpha = alpha.clone(),
            _ => {}
        }
        o
    }

    pub fn run(&self) -> anyhow::Result<Outcome> {
        let o = self.options();
        match self.command {
            Command::Analyze => commands::analyze(&o),
            Command::Reeb => commands::reeb(&o),
            Command::Flow { .. } => commands::flow(&o),
            Command::Shift { .. } => commands::shift(&o),
            Command::Theta => commands::theta(&o),
            Command::Volumes => commands::volumes(&o),
            Command::Counterexample => commands::counterexample(&o),
            Command::VerifyAll => commands::verify_all(&o),
        }
    }
}

fn is_input_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<InputError>().is_some()
            || matches!(
                c.downcast_ref::<CoreError>(),
                Some(CoreError::InvalidParams(_) | CoreError::CriticalLevel(_) | CoreError::SingularBoundary { .. })
            )
    })
}

fn write_outputs(dir: &Path, command: &str, outcome: &mut Outcome) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &outcome.files {
        std::fs::write(dir.join(name), contents)?;
        outcome.report.artifacts.push(name.clone());
    }
    let report = format!("{command}.json");
    outcome.report.artifacts.push(report.clone());
    std::fs::write(dir.join(report), outcome.report.to_json())?;
    Ok(())
}

/// Runs the CLI and returns the exit code: 0 when every check passes, 1 when a
/// check fails, 2 for bad input.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_PASS };
        }
    };
    let mut outcome = match cli.run() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return if is_input_error(&e) { EXIT_BAD_INPUT } else { EXIT_CHECK_FAILED };
        }
    };
    let out = std::env::var_os(OUT_ENV).map(PathBuf::from).or_else(|| cli.out.clone());
    if let Some(dir) = out {
        if let Err(e) = write_outputs(&dir, cli.command.name(), &mut outcome) {
            eprintln!("error: writing to {}: {e:#}", dir.display());
            return EXIT_BAD_INPUT;
        }
    }
    let text = match cli.format {
        Format::Json => outcome.report.to_json(),
        Format::Csv => outcome.csv.clone().unwrap_or_else(|| outcome.report.to_csv()),
    };
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return EXIT_CHECK_FAILED;
    }
    if outcome.report.passed {
        EXIT_PASS
    } else {
        for c in outcome.report.checks.iter().filter(|c| !c.passed) {
            eprintln!("failed: {} (residual {:e}, tolerance {:e})", c.name, c.residual, c.tolerance);
        }
        EXIT_CHECK_FAILED
    }
}
