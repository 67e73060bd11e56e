use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rc_glauber::Suite;
use rc_glauber_cli::{run, CliError, ExperimentSpec, Kind};

#[derive(Parser, Debug)]
#[command(name = "rcg", version, about = "Random-cluster Glauber dynamics experiments")]
struct Cli {
    /// Experiment spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Overrides the seed in the spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory that receives the run directories.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Sample through the dual box when p is above the self-dual point.
    #[arg(long, global = true)]
    via_dual: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the dynamics for a fixed number of steps.
    Sample,
    /// Exact samples by coupling from the past.
    Cftp,
    /// Coupling times of the extremal pair.
    Couple,
    /// Exact enumeration on a small box.
    Oracle,
    /// Connectivity decay with distance.
    Decay,
    /// Spatial mixing discrepancy against box radius.
    Spatial,
    /// Coupling times across lattice sizes.
    Scaling,
    /// The four-chain sandwich around a box.
    Sandwich,
    /// Exact samples produced through the dual box.
    DualSample,
    /// Run an acceptance suite.
    Acceptance {
        /// One of exact, coupling, duality, decay, spatial, scaling.
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "usage", "message": e.to_string().trim_end() })
            );
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::spec("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::spec(e.to_string()))?;
    }
    let kind = match &cli.command {
        Command::Acceptance { suite } => return acceptance(suite),
        Command::Sample => Kind::Sample,
        Command::Cftp => Kind::Cftp,
        Command::Couple => Kind::Couple,
        Command::Oracle => Kind::Oracle,
        Command::Decay => Kind::Decay,
        Command::Spatial => Kind::Spatial,
        Command::Scaling => Kind::Scaling,
        Command::Sandwich => Kind::Sandwich,
        Command::DualSample => Kind::DualSample,
    };
    let path = cli.spec.ok_or_else(|| CliError::spec("--spec <file> is required"))?;
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::spec(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = ExperimentSpec::from_json(&text)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if cli.via_dual {
        spec.via_dual = Some(true);
    }
    let out = run(kind, &spec, &cli.out)?;
    println!(
        "{}",
        serde_json::json!({ "run_dir": out.dir.display().to_string(), "summary": out.summary })
    );
    Ok(())
}

fn acceptance(name: &str) -> Result<(), CliError> {
    let suite: Suite = name.parse()?;
    let reports = suite.run()?;
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.passed {
            failed.push(format!("[{}] {}", r.id, r.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed.join(", ")))
    }
}
