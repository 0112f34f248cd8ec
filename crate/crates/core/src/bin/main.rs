use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mppi_locomotion::costs::{CostSpec, Task};
use mppi_locomotion::harness::{self, DelayMode, ExperimentConfig};
use mppi_locomotion::planner::ExecutorMode;
use mppi_locomotion::spline::SplineKind;
use mppi_locomotion::Result;

#[derive(Parser)]
#[command(name = "mppi-loco", version, about = "Reference-free sampling MPC on planar legged robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed loop for every configured seed and export the logs.
    Run(Common),
    /// Run every spline kind with both executors and print a summary table.
    Ablate(Common),
    /// Time repeated plan steps.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        repetitions: usize,
    },
    /// Re-export saved `*_log.json` files.
    Export {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DelayArg {
    Fixed,
    Measured,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Task preset (walking, standing, jumping, handstand, backflip, bipedal).
    #[arg(long)]
    task: Option<String>,
    /// Spline kind (hermite, cubic, quadratic).
    #[arg(long)]
    spline: Option<String>,
    /// Executor mode (best_trajectory, nominal_only).
    #[arg(long)]
    executor: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    delay_mode: Option<DelayArg>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::new("planar_quadruped", Task::Walking)?,
        };
        if let Some(task) = &self.task {
            config.task = task.parse()?;
            config.cost = CostSpec::preset(config.task, &config.env);
        }
        if let Some(seed) = self.seed {
            config.seeds = vec![seed];
        }
        if let Some(s) = &self.spline {
            config.planner.spline = s.parse::<SplineKind>()?;
        }
        if let Some(e) = &self.executor {
            config.planner.executor = e.parse::<ExecutorMode>()?;
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        match self.delay_mode {
            Some(DelayArg::Measured) => config.delay = DelayMode::Measured,
            Some(DelayArg::Fixed) if config.delay == DelayMode::Measured => {
                config.delay = DelayMode::Fixed(config.planner.control_dt)
            }
            _ => {}
        }
        config.validate()?;
        Ok(config)
    }
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| mppi_locomotion::Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| mppi_locomotion::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(mppi_locomotion::Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let config = common.load()?;
            let logs = harness::run(&config)?;
            for log in &logs {
                let s = &log.summary;
                emit(&format!(
                    "seed {:>3}  success {:<5}  cost {:>12.2}  max height {:.3}  mean vx {:+.3}  flight steps {:>4}  no-improve {:5.1}%  plan {:.1} ms\n",
                    s.seed,
                    s.success,
                    s.total_cost,
                    s.max_base_height,
                    s.mean_forward_velocity,
                    s.flight_steps,
                    100.0 * s.improvement_failure_fraction,
                    log.timing.mean_plan_ms
                ))?;
            }
            let written = harness::export(&logs, &out_dir(&config))?;
            emit(&format!("wrote {} files to {}\n", written.len(), out_dir(&config).display()))?;
        }
        Command::Ablate(common) => {
            let config = common.load()?;
            let table = harness::run_ablation(&config)?;
            let text = table.format();
            emit(&text)?;
            let dir = out_dir(&config);
            write_text(&dir.join("ablation.txt"), &text)?;
            write_text(&dir.join("ablation.json"), &serde_json::to_string_pretty(&table)?)?;
        }
        Command::Bench { common, repetitions } => {
            let config = common.load()?;
            let report = harness::bench(&config, repetitions)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))?;
        }
        Command::Export { logs, out } => {
            let logs = logs.iter().map(|p| harness::read_log(p)).collect::<Result<Vec<_>>>()?;
            let written = harness::export(&logs, &out)?;
            emit(&format!("wrote {} files to {}\n", written.len(), out.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
