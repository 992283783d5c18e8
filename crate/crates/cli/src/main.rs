use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kinfluid_cli::{parse_config, run, RunConfig, RunError, Summary};

#[derive(Parser)]
#[command(name = "kinfluid", version, about = "Kinetic-fluid experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV, summary and manifest files (overrides the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Initial-data seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config file and print the resolved configuration.
    Validate { config: PathBuf },
    /// Run the brute-force oracle suite.
    Oracles,
}

fn load(path: &PathBuf, cli: &Cli) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.initial_data.seed = seed;
    }
    Ok(cfg)
}

fn print_summary(s: &Summary) {
    for c in &s.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {:e} ({})", c.name, c.value, c.requirement);
    }
    println!(
        "{}: {}",
        s.experiment.name(),
        if s.passed { "passed" } else { "FAILED" }
    );
}

fn execute(cli: &Cli) -> Result<bool, RunError> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli)?;
            let summary = run(&cfg)?;
            print_summary(&summary);
            println!("artifacts written to {}", cfg.output_dir.display());
            Ok(summary.passed)
        }
        Command::Validate { config } => {
            let cfg = load(config, cli)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&cfg).expect("serializable")
            );
            Ok(true)
        }
        Command::Oracles => {
            let mut cfg = parse_config("experiment = \"oracle_suite\"")?;
            if let Some(dir) = &cli.output_dir {
                cfg.output_dir = dir.clone();
            }
            let summary = run(&cfg)?;
            print_summary(&summary);
            Ok(summary.passed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
