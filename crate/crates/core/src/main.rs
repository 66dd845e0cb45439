use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use priorcut::harness::{self, verify, ExperimentConfig};
use priorcut::numeric::RngSeed;
use priorcut::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_SOLVER_FAILURE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "priorcut",
    version,
    about = "Informed PhaseCut phase retrieval experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of available cores.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Exit with status 2 if any trial hit a solver failure.
        #[arg(long)]
        strict: bool,
    },
    /// Print the per-(sigma_n_sq, method) mean table of a results CSV.
    Summarize { csv: PathBuf },
    /// Run the built-in invariant suite.
    Verify,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn run(
    config: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
    strict: bool,
) -> Result<u8, Error> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(out) = out {
        cfg.output_path = out;
    }
    if let Some(seed) = seed {
        cfg.master_seed = RngSeed(seed);
    }
    let threads =
        threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }

    let results = harness::run_experiment(&cfg, threads)?;
    print!("{}", harness::format_summary_table(&results.summary));
    println!(
        "wrote {} and {}",
        cfg.output_path.display(),
        harness::summary_path_for(&cfg.output_path).display()
    );
    if results.solver_failures > 0 {
        log::warn!("{} solver failure(s)", results.solver_failures);
        if strict {
            return Ok(EXIT_SOLVER_FAILURE);
        }
    }
    Ok(0)
}

fn summarize(csv: PathBuf) -> Result<u8, Error> {
    let records = harness::read_records(std::fs::File::open(csv)?)?;
    print!(
        "{}",
        harness::format_summary_table(&harness::summarize_records(&records))
    );
    Ok(0)
}

fn run_verify() -> u8 {
    let mut failed = 0;
    for r in verify::run_all() {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        failed += usize::from(!r.passed);
    }
    if failed == 0 {
        0
    } else {
        EXIT_INVALID
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            threads,
            seed,
            strict,
        } => run(config, out, threads, seed, strict),
        Command::Summarize { csv } => summarize(csv),
        Command::Verify => Ok(run_verify()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
