use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotorbit_cli::config::{ConfigError, ExperimentConfig, Task};
use rotorbit_cli::project::ProjectError;
use rotorbit_cli::{exit, project, run};

#[derive(Parser)]
#[command(name = "rotorbit", version, about = "Rotation sets of surface homeomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of an experiment config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated task names, replacing the configured list.
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<Task>>,
    },
    /// Project the `mz_cloud.csv` of a run onto coordinates `i,j` (1-based).
    Project {
        dir: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

fn load(path: &PathBuf, seed: Option<u64>, tasks: Option<Vec<Task>>) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        pointer: String::new(),
        message: format!("{}: {e}", path.display()),
    })?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tasks {
        cfg.tasks = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            tasks,
        } => match load(&config, seed, tasks) {
            Err(e) => {
                eprintln!("{e}");
                exit::CONFIG
            }
            Ok(cfg) => {
                let dir = run::output_dir(out, &cfg);
                match run(&cfg, &dir) {
                    Err(e) => {
                        eprintln!("cannot write {}: {e}", dir.display());
                        exit::TASK_FAILED
                    }
                    Ok(report) => {
                        for t in &report.tasks {
                            match &t.error {
                                None => println!("{:<20} ok      {:>8} ms", t.task.name(), t.wall_clock_ms),
                                Some(e) => println!(
                                    "{:<20} FAILED  {:>8} ms  {}: {}",
                                    t.task.name(),
                                    t.wall_clock_ms,
                                    e.kind,
                                    e.message
                                ),
                            }
                        }
                        println!("report: {}", dir.join("report.json").display());
                        if report.success() {
                            exit::OK
                        } else {
                            exit::TASK_FAILED
                        }
                    }
                }
            }
        },
        Command::Project { dir, pair } => match project(&dir, pair.0, pair.1) {
            Ok(path) => {
                println!("{}", path.display());
                exit::OK
            }
            Err(e @ ProjectError::MissingArtifact(_)) => {
                eprintln!("{e}");
                exit::MISSING_ARTIFACT
            }
            Err(e) => {
                eprintln!("{e}");
                exit::CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
