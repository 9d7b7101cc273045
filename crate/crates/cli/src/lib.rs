//! `wpir` command-line front end.
//!
//! Every subcommand produces a flat [`output::Report`] rendered as CSV (default) or
//! JSON, with numbers printed at 12 significant digits. Exit codes: 0 on
//! success, 1 when a verification fails, 2 on usage errors.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use output::Format;
use wpir_core::{Metric, Setting};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wpir", version, about = "Rate/leakage trade-offs for weak private information retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for sweeps and trials; 1 runs sequentially.
    #[arg(long, default_value_t = 1, global = true)]
    threads: usize,
}

#[derive(Debug, Clone, Args)]
struct ParamArgs {
    /// Storage setting: replicated, mds or tcol.
    #[arg(long, default_value = "replicated")]
    setting: Setting,
    /// Number of servers.
    #[arg(long)]
    n: usize,
    /// Code dimension (mds) or collusion size (tcol); 1 for replicated.
    #[arg(long, default_value_t = 1)]
    s: usize,
    /// Number of files.
    #[arg(long)]
    files: usize,
}

#[derive(Debug, Clone, Args)]
struct ProtocolArgs {
    /// Number of servers.
    #[arg(long)]
    n: usize,
    /// Number of files.
    #[arg(long)]
    files: usize,
    /// Mixing distribution over m' = 0..files-1, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p: Vec<f64>,
}

/// Inclusive `start:stop:step` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RhoGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| (self.start + i as f64 * self.step).min(self.stop))
            .collect()
    }
}

impl std::str::FromStr for RhoGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got '{s}'"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
        let grid = RhoGrid {
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        };
        if grid.step.is_nan() || grid.step <= 0.0 || !grid.start.is_finite() || !grid.stop.is_finite() {
            return Err("step must be positive and bounds finite".into());
        }
        if grid.start < 0.0 || grid.stop < grid.start {
            return Err("need 0 <= start <= stop".into());
        }
        Ok(grid)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form and LP-optimal rates over a budget grid.
    Tradeoff {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        metric: Metric,
        /// Budget grid `start:stop:step` in bits.
        #[arg(long, conflicts_with = "rho")]
        rho_grid: Option<RhoGrid>,
        /// Single budget in bits.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Optimal mixing distribution and sign diagnostics at one budget.
    Optimize {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        rho: f64,
    },
    /// Checks the two-point optimality claims on their parameter grids.
    VerifyTheorems {
        /// Budgets per parameter point, evenly spaced in [0, cap].
        #[arg(long, default_value_t = 25)]
        rho_points: usize,
        /// One row per parameter point instead of one per claim.
        #[arg(long)]
        details: bool,
    },
    /// Table of g(m', M) for M in 3..=8 and m' in 1..=5.
    Table1 {
        #[arg(long, default_value_t = wpir_core::appendix::TABLE_RATIO)]
        q: f64,
    },
    /// Numerical checks of the four appendix lemmas.
    Lemmas {
        #[arg(long, default_value_t = wpir_core::appendix::LEMMA1_MIN_EXPONENT)]
        a1: f64,
        #[arg(long, default_value_t = wpir_core::appendix::LEMMA2_MIN_EXPONENT)]
        a2: f64,
        #[arg(long, default_value_t = wpir_core::appendix::LEMMA4_MIN_Y)]
        y: f64,
        #[arg(long, default_value_t = 1000)]
        grid_points: usize,
    },
    /// Monte-Carlo runs of the replicated protocol.
    Simulate {
        #[command(flatten)]
        proto: ProtocolArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, env = "WPIR_SEED", default_value_t = 0)]
        seed: u64,
        /// Also write the binary transcript of one trial here.
        #[arg(long)]
        dump_transcript: Option<PathBuf>,
        /// Trial index to dump.
        #[arg(long, default_value_t = 0)]
        transcript_trial: u64,
    },
    /// Exact leakage by enumeration, or replay of a dumped transcript.
    Audit {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        files: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// auto, full or sufficient.
        #[arg(long, default_value = "auto")]
        mode: commands::ModeArg,
        /// Transcript written by `simulate --dump-transcript`.
        #[arg(long, conflicts_with_all = ["n", "files", "p"])]
        transcript: Option<PathBuf>,
    },
}

/// Bad arguments or inputs; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<wpir_core::Error> for UsageError {
    fn from(e: wpir_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

/// Runs with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    if cli.threads == 0 {
        let _ = writeln!(err, "error: --threads must be at least 1");
        return EXIT_USAGE;
    }

    let threads = cli.threads;
    let (report, failure) = match wpir_core::exec::with_threads(threads, || commands::execute(cli.command, threads)) {
        Ok(outcome) => outcome,
        Err(UsageError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };

    let text = report.render(cli.format);
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => out.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    match failure {
        None => EXIT_OK,
        Some(msg) => {
            let _ = writeln!(err, "verification failed: {msg}");
            EXIT_VERIFY
        }
    }
}
