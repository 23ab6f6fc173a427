//! `shoplab` command-line front end. Exit codes: 0 success, 1 runtime
//! failure, 2 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use shoplab::experiment::{self, ExperimentConfig};
use shoplab::gantt::{render_svg, GanttOptions};
use shoplab::selfcheck::{run_all_tests, SelfCheckOptions};
use shoplab::{Error, ProofStatus, ScheduleExport, SolveLimits};

#[derive(Debug, Parser)]
#[command(name = "shoplab", version, about = "Job-shop scheduling experiments: instances, solver, DRL agents, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the train and test instance sets of an experiment.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's instances_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Annotate every instance file in a directory with its optimal makespan.
    Solve {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        node_limit: Option<u64>,
        /// Seconds per instance.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Also write one schedule export per instance here.
        #[arg(long)]
        schedules: Option<PathBuf>,
    },
    /// Train the configured agent; writes the model and a metrics log.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the configured methods on the test set.
    Test {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Render a schedule export as an SVG Gantt chart.
    Plot {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = GanttOptions::default().width_px)]
        width: u32,
        #[arg(long, default_value_t = GanttOptions::default().row_height_px)]
        row_height: u32,
        #[arg(long)]
        no_labels: bool,
    },
    /// Run the built-in property checks.
    Selftest {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failure plus the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::UnknownMethod { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn runtime(message: String) -> Failure {
    Failure { code: 1, message }
}

/// Any failure to obtain a usable config is a usage error.
fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn generate(config: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let config = load_config(config)?;
    let out = out.unwrap_or_else(|| config.paths.instances_dir.clone());
    let report = experiment::generate(&config, &out)?;
    for (label, path, set) in [
        ("train", &report.train_path, &report.train),
        ("test", &report.test_path, &report.test),
    ] {
        println!("{label}: {} instances -> {}", set.len(), path.display());
        for instance in set {
            println!("  {} {}", instance.id, instance.shape());
        }
    }
    Ok(())
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

fn solve(
    dir: &Path,
    node_limit: Option<u64>,
    time_limit: Option<f64>,
    schedules: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut limits = SolveLimits::default();
    if let Some(n) = node_limit {
        limits.node_limit = n;
    }
    if let Some(s) = time_limit {
        limits.time_limit = Duration::try_from_secs_f64(s).map_err(|e| Failure {
            code: 2,
            message: format!("--time-limit: {e}"),
        })?;
    }
    if let Some(out) = &schedules {
        std::fs::create_dir_all(out).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    }
    let (mut optimal, mut feasible, mut failed) = (0, 0, 0);
    for file in instance_files(dir)? {
        let outcomes = match experiment::solve_file(&file, limits) {
            Ok(outcomes) => outcomes,
            Err(e) => {
                eprintln!("error: {e}");
                failed += 1;
                continue;
            }
        };
        for o in &outcomes {
            let status = match o.status {
                ProofStatus::Optimal => {
                    optimal += 1;
                    "optimal"
                }
                ProofStatus::Feasible => {
                    feasible += 1;
                    "feasible"
                }
            };
            println!(
                "{} {} {status} makespan {} nodes {}",
                file.display(),
                o.instance_id,
                o.makespan,
                o.nodes_expanded
            );
            if let Some(out) = &schedules {
                o.schedule.to_export().write(out.join(format!("{}.json", o.instance_id)))?;
            }
        }
    }
    println!("optimal {optimal} feasible {feasible} failed files {failed}");
    if failed > 0 {
        return Err(runtime(format!("{failed} instance file(s) could not be solved")));
    }
    Ok(())
}

fn train(config: &Path) -> Result<(), Failure> {
    let config = load_config(config)?;
    let report = experiment::train(&config)?;
    println!("run {}", report.run_id);
    println!("model {}", report.model_path.display());
    println!("metrics {} ({} events)", report.metrics_path.display(), report.events.len());
    Ok(())
}

fn test(config: &Path, model: Option<PathBuf>) -> Result<(), Failure> {
    let config = load_config(config)?;
    let report = experiment::test(&config, model.as_deref())?;
    println!("{}", report.table);
    println!("records {}", report.csv_path.display());
    Ok(())
}

fn plot(schedule: &Path, out: &Path, options: GanttOptions) -> Result<(), Failure> {
    let export = ScheduleExport::read(schedule)?;
    let schedule = export.to_schedule()?;
    let violations = schedule.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(runtime(format!("refusing to plot an invalid schedule:\n  {}", list.join("\n  "))));
    }
    let svg = render_svg(&schedule, &options)?;
    std::fs::write(out, svg).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn selftest(cases: usize, seed: u64) -> Result<(), Failure> {
    let report = run_all_tests(SelfCheckOptions { cases, base_seed: seed });
    println!("{report}");
    if report.all_passed() {
        Ok(())
    } else {
        Err(runtime("self-test failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, out } => generate(&config, out),
        Command::Solve {
            instances,
            node_limit,
            time_limit,
            schedules,
        } => solve(&instances, node_limit, time_limit, schedules),
        Command::Train { config } => train(&config),
        Command::Test { config, model } => test(&config, model),
        Command::Plot {
            schedule,
            out,
            width,
            row_height,
            no_labels,
        } => plot(
            &schedule,
            &out,
            GanttOptions {
                width_px: width,
                row_height_px: row_height,
                show_labels: !no_labels,
            },
        ),
        Command::Selftest { cases, seed } => selftest(cases, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
