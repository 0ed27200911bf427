//! `inclusion`: simulate and analyse differential inclusions `ẋ ∈ f(x) − A(x)`.
//!
//! Exit status: 0 when every check passes, 1 when a check or location verdict
//! fails, 2 on input or configuration errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "inclusion", version, about = "Differential inclusions driven by maximally monotone operators")]
struct Cli {
    /// Directory for reports, CSV files and manifests.
    #[arg(long, global = true, env = "INCLUSION_OUT_DIR", default_value = ".")]
    out: PathBuf,
    /// Worker thread cap for parallel analyses.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SystemArgs {
    /// Built-in system name or path to a TOML configuration.
    system: String,
    /// Configuration override `key=value`; bare keys set parameters.
    #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in systems.
    Catalog {
        /// Print the full configurations as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Integrate one trajectory and write it as CSV.
    Simulate {
        #[command(flatten)]
        sys: SystemArgs,
        /// Initial condition, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Estimate the ω-limit set of a trajectory.
    Omega {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long)]
        burn: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Check the Lyapunov pair condition on a grid or a list of points.
    CheckLyapunov {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value = "full")]
        variant: String,
        /// Points per axis of the check grid over the analysis box.
        #[arg(long, default_value_t = 40)]
        grid: usize,
        /// Explicit points `a,b;c,d` instead of a grid.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Verify a location statement for the ω-limit set.
    Locate {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, value_enum)]
        theorem: Theorem,
        /// Initial conditions `a,b;c,d`; defaults to the configured ones.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
    },
    /// Compute a grid set and export it.
    Sets {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long = "set", value_enum)]
        set: SetKind,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Replace the Lyapunov function `V` by this expression.
        #[arg(long = "V", allow_hyphen_values = true)]
        v: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Theorem {
    Thm31,
    Cor34,
    Thm41,
    Chain,
}

impl Theorem {
    fn id(self) -> &'static str {
        match self {
            Theorem::Thm31 => "thm31",
            Theorem::Cor34 => "cor34",
            Theorem::Thm41 => "thm41",
            Theorem::Chain => "chain",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SetKind {
    Band,
    Invariant,
    E,
    Es,
    Qi,
    Malpha,
}

impl SetKind {
    fn id(self) -> &'static str {
        match self {
            SetKind::Band => "band",
            SetKind::Invariant => "invariant",
            SetKind::E => "e",
            SetKind::Es => "es",
            SetKind::Qi => "qi",
            SetKind::Malpha => "malpha",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(passed) => ExitCode::from(if passed { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
