use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clockwatch::cli::{self, BatchArgs, CalibrationSource, DetectArgs};
use clockwatch::detector::{DetectorConfig, DEFAULT_WARMUP};

#[derive(Parser)]
#[command(
    name = "clockwatch",
    version,
    about = "Clock-ensemble detection of GNSS time manipulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory [env: CLOCKWATCH_OUT, default: clockwatch-out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectorArgs {
    /// Threshold multiplier applied to the calibrated sigmas
    #[arg(long)]
    multiplier: Option<f64>,
    /// Seconds after filter start without alarms
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    warmup: f64,
    /// Consecutive exceedances required to raise a flag
    #[arg(long, default_value_t = 1)]
    confirm: usize,
}

impl DetectorArgs {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            warmup: self.warmup,
            confirm: self.confirm,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trace
    Simulate {
        /// Config file or preset name
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Hadamard/Allan curves and fitted noise densities of every local clock
    Characterize {
        trace: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the ensemble filter and dual test over a trace
    Detect {
        /// Trace CSV (or measurement log with --measurements)
        input: PathBuf,
        /// Treat the input as an epoch_s,clock_id,phase_diff_s log
        #[arg(long)]
        measurements: bool,
        /// Config file or preset name [default: config.toml beside the input]
        #[arg(long)]
        config: Option<String>,
        /// Calibration TOML or benign trace CSV [default: simulated benign run]
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate and detect over every config and seed in parallel
    Batch {
        /// Glob of config files, or a preset name
        #[arg(long, required = true)]
        config: Vec<String>,
        /// Seeds as a..b, a..=b or a comma list
        #[arg(long, default_value = "0..20")]
        seeds: String,
        /// Calibration TOML or benign trace CSV applied to every config
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        out: OutArg,
    },
}

fn run(cli: Cli) -> clockwatch::Result<i32> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let out = cli::default_out_dir(out.out);
            let r = cli::cmd_simulate(&config, seed, &out)?;
            println!(
                "simulated {} epochs, {} local clocks (seed {}, config {})",
                r.epochs, r.local_clocks, r.seed, r.config_hash
            );
            println!("trace: {}", r.trace.display());
            println!("config: {}", r.resolved_config.display());
        }
        Command::Characterize { trace, out } => {
            let out = cli::default_out_dir(out.out);
            let r = cli::cmd_characterize(&trace, &out)?;
            for c in &r.clocks {
                match &c.fit {
                    Some(f) => println!(
                        "{}: q_theta {:.3e} q_gamma {:.3e} q_drift {:.3e} (residual {:.3})",
                        c.clock, f.spec.q_theta, f.spec.q_gamma, f.spec.q_drift, f.residual
                    ),
                    None => println!("{}: no fit", c.clock),
                }
            }
            println!("report: {}", out.join("stability.json").display());
        }
        Command::Detect {
            input,
            measurements,
            config,
            calibration,
            detector,
            out,
        } => {
            let args = DetectArgs {
                input,
                measurements,
                config,
                calibration: CalibrationSource::from_path(calibration),
                multiplier: detector.multiplier,
                detector: detector.config(),
                out_dir: cli::default_out_dir(out.out),
            };
            let r = cli::cmd_detect(&args)?;
            let m = &r.metrics;
            println!(
                "thresholds: phase {:.4e} s, frequency {:.4e}",
                r.calibration.phase_threshold(),
                r.calibration.frequency_threshold()
            );
            println!(
                "first alarm {:?} s, latency {:?} s, offset at detection {:?} s, false positives {}",
                m.first_alarm_epoch, m.detection_latency, m.offset_at_detection, m.false_positive_count
            );
            if let Some(note) = &r.blind_spot {
                println!("note: {note}");
            }
            println!("report: {}", args.out_dir.join("report.json").display());
        }
        Command::Batch {
            config,
            seeds,
            calibration,
            detector,
            out,
        } => {
            let mut configs = Vec::new();
            for pattern in &config {
                configs.extend(cli::expand_configs(pattern)?);
            }
            let args = BatchArgs {
                configs,
                seeds: cli::parse_seeds(&seeds)?,
                calibration,
                multiplier: detector.multiplier,
                detector: detector.config(),
                out_dir: cli::default_out_dir(out.out),
            };
            let r = cli::cmd_batch(&args)?;
            for s in &r.summaries {
                let med = |v: &Option<clockwatch::pipeline::Summary>| {
                    v.map(|s| format!("{:.3e}", s.median))
                        .unwrap_or_else(|| "-".into())
                };
                println!(
                    "{}: {} runs, {} failed, {} detected, median latency {} s, median offset {} s, false positives {}",
                    s.config,
                    s.runs,
                    s.failed,
                    s.detected,
                    med(&s.latency),
                    med(&s.offset_at_detection),
                    s.total_false_positives
                );
            }
            println!("table: {}", args.out_dir.join("metrics.csv").display());
            if let Some(code) = r.failure_code {
                eprintln!("error: some runs failed; see metrics.csv");
                return Ok(code);
            }
        }
    }
    Ok(cli::EXIT_SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
