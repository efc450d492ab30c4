//! `atlas` command-line front end: argument parsing, the four commands,
//! JSON reports and SVG figures.

pub mod commands;
pub mod report;
pub mod svg;

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{CommandError, Outcome};

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Hopf differentials of symmetric harmonic embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predicted ideal polygon for the family parameters.
    Predict(PredictArgs),
    /// Leaf-space tree of one foliation, with numeric edge checks.
    Tree(TreeArgs),
    /// Trace leaves through seed points.
    Trace(TraceArgs),
    /// Run a verification pipeline and report pass/fail per check.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Predict(_) => "predict",
            Command::Tree(_) => "tree",
            Command::Trace(_) => "trace",
            Command::Verify(_) => "verify",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Predict(a) => &a.common,
            Command::Tree(a) => &a.common,
            Command::Trace(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub m: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub b: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Also write `<command>.json` (and the figure) into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit the SVG figure (needs --out).
    #[arg(long)]
    pub svg: bool,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TreeArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value = "vertical")]
    pub foliation: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Text file with one `x y` seed per line.
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long, default_value = "horizontal")]
    pub kind: String,
    /// Φ-length followed in each direction.
    #[arg(long, default_value_t = 5.0)]
    pub budget: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// lemma1, lengths, alpha or develop.
    #[arg(long)]
    pub level: String,
    /// Solver configuration file (`key = value`).
    #[arg(long)]
    pub solver: Option<PathBuf>,
    /// Tree distance of the marked leaves from the centre.
    #[arg(long, default_value_t = 4.0)]
    pub l: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Holds `<dir>/.atlas.lock` for the lifetime of a run.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".atlas.lock");
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path)?;
        writeln!(f, "{}", std::process::id())?;
        Ok(Self { path })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Runs one parsed command, writes the report to `stdout` (and files under
/// `--out`), and returns the process exit code.
pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> i32 {
    let name = cli.command.name();
    let common = cli.command.common().clone();
    if common.svg && common.out.is_none() {
        let _ = writeln!(std::io::stderr(), "error: --svg needs --out");
        return 2;
    }
    let _lock = match &common.out {
        Some(dir) => match OutputLock::acquire(dir) {
            Ok(l) => Some(l),
            Err(e) => {
                let _ = writeln!(std::io::stderr(), "error: cannot lock {}: {e}", dir.display());
                return 1;
            }
        },
        None => None,
    };
    let result = match &cli.command {
        Command::Predict(a) => commands::predict(a),
        Command::Tree(a) => commands::tree(a),
        Command::Trace(a) => commands::trace(a),
        Command::Verify(a) => commands::verify(a),
    };
    let (text, svg, code) = match result {
        Ok(outcome) => (report::to_canonical(&outcome.report), outcome.svg, if outcome.passed { 0 } else { 1 }),
        Err(CommandError::Usage(msg)) => {
            let _ = writeln!(std::io::stderr(), "error: {msg}");
            return 2;
        }
        Err(err) => (report::to_canonical(&err.to_report(name, common.seed)), None, 1),
    };
    if stdout.write_all(text.as_bytes()).is_err() {
        return 1;
    }
    if let Some(dir) = &common.out {
        let write = |file: String, body: &str| File::create(dir.join(file)).and_then(|mut f| f.write_all(body.as_bytes()));
        if let Err(e) = write(format!("{name}.json"), &text) {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            return 1;
        }
        if let (true, Some(svg)) = (common.svg, svg) {
            if let Err(e) = write(format!("{name}.svg"), &svg) {
                let _ = writeln!(std::io::stderr(), "error: {e}");
                return 1;
            }
        }
    }
    code
}
