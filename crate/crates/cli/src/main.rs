//! `reassemble`: shred synthetic images, extract and score pairwise
//! candidates, solve the global assembly and evaluate or render it.

mod commands;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "reassemble", version, about = "Shredded-image reassembly pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Target number of pieces when shredding.
    #[arg(long, global = true)]
    pieces: Option<usize>,
    /// bf, glc, hlm, a comma-separated list, or all.
    #[arg(long, global = true)]
    solver: Option<String>,
    /// oracle, oracle:<noise> or model:<path>.
    #[arg(long, global = true)]
    scorer: Option<String>,
    /// Candidates scoring below this are dropped before assembly.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Merge attempts per HLM level.
    #[arg(long = "theta-m", global = true)]
    theta_m: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Cut an image into a puzzle bundle directory.
    Shred {
        /// Source image; a synthetic one is generated when omitted.
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Extract pairwise alignment candidates from a bundle.
    Match {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Train a compatibility detector on bundles and their candidates.
    Train {
        #[arg(long, num_args = 1.., required = true)]
        bundles: Vec<PathBuf>,
        /// Candidate files in bundle order; extracted afresh when omitted.
        #[arg(long, num_args = 1..)]
        candidates: Vec<PathBuf>,
        /// Boosting rounds.
        #[arg(long)]
        learners: Option<usize>,
    },
    /// Fill in each candidate's alignment score.
    Score {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Solve the global assembly from scored candidates.
    Assemble {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Score result files against the bundle's groundtruth.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        /// Scored candidates, to add detector precision and recall.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Composite the fragments at a result's poses (groundtruth when no
    /// result is given) into a PNG.
    Render {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        result: Option<PathBuf>,
        /// Outline every fragment.
        #[arg(long)]
        seams: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Shred { .. } => "shred",
            Command::Match { .. } => "match",
            Command::Train { .. } => "train",
            Command::Score { .. } => "score",
            Command::Assemble { .. } => "assemble",
            Command::Evaluate { .. } => "evaluate",
            Command::Render { .. } => "render",
        }
    }
}

/// Error kind and offending path, for the machine-readable report.
fn describe(err: &anyhow::Error) -> (&'static str, Option<String>) {
    use reassembly::Error;
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Format { path, .. }) => ("format", Some(path.display().to_string())),
        Some(Error::Io { path, .. }) => ("io", Some(path.display().to_string())),
        Some(Error::Parameter(_)) => ("parameter", None),
        Some(Error::Imbalance) => ("imbalance", None),
        Some(_) => ("input", None),
        None => ("internal", None),
    }
}

fn fail(kind: &str, message: String, path: Option<String>, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message, "path": path } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string(), None, 2),
    };
    let g = cli.global;
    let flags = Overrides {
        seed: g.seed,
        pieces: g.pieces,
        solver: g.solver,
        scorer: g.scorer,
        threshold: g.threshold,
        theta_m: g.theta_m,
        workers: g.workers,
        out: g.out,
    };
    let outcome = RunConfig::resolve(g.config.as_deref(), &flags).and_then(|cfg| {
        eprintln!("{}", json!({ "command": cli.command.name(), "seed": cfg.seed, "config": cfg }));
        if let Some(n) = cfg.workers {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        commands::run(&cli.command, &cfg)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, path) = describe(&e);
            fail(kind, format!("{e:#}"), path, 1)
        }
    }
}
