//! Command implementations behind the `clockwatch` binary.
//!
//! Each command takes plain arguments, writes its artifacts into an output
//! directory and returns a report value. Errors map onto stable exit codes
//! through [`exit_code`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detector::{CalibrationResult, Classification, DetectorConfig, RunMetrics};
use crate::error::{Error, Result};
use crate::filter::MeasurementVector;
use crate::pipeline::{
    calibrate_from_trace, calibrate_scenario, detect_trace, summarize, track, EstimateSeries,
    Summary,
};
use crate::scenario::presets::PRESET_NAMES;
use crate::scenario::{
    load_measurement_csv, load_trace_csv, preset, save_trace_csv, simulate, write_file,
    ScenarioConfig, TraceSet,
};
use crate::stability::{
    allan_curve, fit_noise_coefficients, hadamard_curve, phase_to_frequency, NoiseFit,
    StabilityPoint,
};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CLOCKWATCH_OUT";
/// Output directory used when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "clockwatch-out";
/// Minimum trace length accepted by `characterize`.
pub const MIN_CHARACTERIZE_EPOCHS: usize = 1000;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for an error: 2 for usage, config and input data, 3 for I/O,
/// 4 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Numerical { .. } | Error::Internal(_) => EXIT_NUMERICAL,
        Error::InvalidArgument(_)
        | Error::InsufficientData { .. }
        | Error::Parse { .. }
        | Error::InvalidData { .. }
        | Error::Config { .. } => EXIT_USAGE,
    }
}

/// Resolves `--out`, then the environment, then the default.
pub fn default_out_dir(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// A config loaded from a file or a built-in preset name.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub source: String,
    pub config: ScenarioConfig,
}

impl ResolvedConfig {
    /// Loads `spec` as a preset name if it is one, otherwise as a file path.
    pub fn load(spec: &str, seed: Option<u64>) -> Result<Self> {
        let mut config = match preset(spec) {
            Some(cfg) if !Path::new(spec).exists() => cfg,
            _ => ScenarioConfig::load(Path::new(spec))?,
        };
        if let Some(seed) = seed {
            config.seed = seed;
        }
        Ok(Self {
            source: spec.to_string(),
            config,
        })
    }

    /// Short name for tables: the file stem or the preset name.
    pub fn name(&self) -> String {
        Path::new(&self.source)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.source.clone())
    }

    pub fn hash(&self) -> String {
        config_hash(&self.config)
    }
}

/// SHA-256 of the resolved config text, first 16 hex digits.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    hex::encode(digest)[..16].to_string()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))?;
    write_file(path, format!("{text}\n").as_bytes())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReport {
    pub tool_version: String,
    pub config_source: String,
    pub config_hash: String,
    pub seed: u64,
    pub epochs: usize,
    pub local_clocks: usize,
    pub trace: PathBuf,
    pub resolved_config: PathBuf,
}

/// Simulates a scenario and writes `trace.csv` plus the resolved `config.toml`.
pub fn cmd_simulate(config: &str, seed: Option<u64>, out_dir: &Path) -> Result<SimulateReport> {
    let resolved = ResolvedConfig::load(config, seed)?;
    resolved.config.validate().map_err(|e| Error::Config {
        path: PathBuf::from(config),
        message: e.to_string(),
    })?;
    let traces = simulate(&resolved.config)?;
    create_dir(out_dir)?;
    let trace_path = out_dir.join("trace.csv");
    let config_path = out_dir.join("config.toml");
    save_trace_csv(&traces, &trace_path)?;
    write_file(&config_path, resolved.config.to_toml().as_bytes())?;
    Ok(SimulateReport {
        tool_version: TOOL_VERSION.to_string(),
        config_source: resolved.source.clone(),
        config_hash: resolved.hash(),
        seed: resolved.config.seed,
        epochs: traces.len(),
        local_clocks: traces.n_local(),
        trace: trace_path,
        resolved_config: config_path,
    })
}

// ---------------------------------------------------------------- detect

/// Where detection thresholds come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationSource {
    /// TOML file with `sigma_theta`, `sigma_gamma` and optional `multiplier`.
    File(PathBuf),
    /// Benign trace CSV tracked with the same config.
    BenignTrace(PathBuf),
    /// Simulated long benign run of the config.
    Simulated,
}

impl CalibrationSource {
    /// `.csv` paths are benign traces, anything else a calibration file.
    pub fn from_path(path: Option<PathBuf>) -> Self {
        match path {
            None => CalibrationSource::Simulated,
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => {
                CalibrationSource::BenignTrace(p)
            }
            Some(p) => CalibrationSource::File(p),
        }
    }

    fn describe(&self) -> String {
        match self {
            CalibrationSource::File(p) => format!("file {}", p.display()),
            CalibrationSource::BenignTrace(p) => format!("benign trace {}", p.display()),
            CalibrationSource::Simulated => "simulated benign run".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectArgs {
    /// Trace CSV, or a measurement log when `measurements` is set.
    pub input: PathBuf,
    pub measurements: bool,
    /// Config path or preset; defaults to `config.toml` next to the input.
    pub config: Option<String>,
    pub calibration: CalibrationSource,
    /// Overrides the calibration's multiplier.
    pub multiplier: Option<f64>,
    pub detector: DetectorConfig,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub config_source: String,
    pub local_clocks: usize,
    pub epochs: usize,
    pub duration: f64,
    pub tau: f64,
    pub attack: String,
    pub attack_start: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub scenario: ScenarioSummary,
    pub calibration_source: String,
    pub calibration: CalibrationResult,
    pub detector: DetectorConfig,
    pub metrics: RunMetrics,
    pub classification_counts: BTreeMap<String, usize>,
    pub mean_nis: Option<f64>,
    /// Set when the attack was already active at the first epoch.
    pub blind_spot: Option<String>,
    pub series: Vec<PathBuf>,
}

/// Loads a calibration file.
pub fn load_calibration(path: &Path) -> Result<CalibrationResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: format!("cannot read calibration: {e}"),
    })?;
    let cal: CalibrationResult = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cal.validate().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(cal)
}

/// Writes a calibration file readable by [`load_calibration`].
pub fn save_calibration(cal: &CalibrationResult, path: &Path) -> Result<()> {
    let text = format!(
        "sigma_theta = {:e}\nsigma_gamma = {:e}\nmultiplier = {}\n",
        cal.sigma_theta, cal.sigma_gamma, cal.multiplier
    );
    write_file(path, text.as_bytes())
}

fn resolve_calibration(
    source: &CalibrationSource,
    config: &ScenarioConfig,
    multiplier: Option<f64>,
    detector: &DetectorConfig,
) -> Result<CalibrationResult> {
    let m = multiplier.unwrap_or(crate::detector::DEFAULT_MULTIPLIER);
    let cal = match source {
        CalibrationSource::File(p) => {
            let cal = load_calibration(p)?;
            match multiplier {
                Some(m) => cal.with_multiplier(m)?,
                None => cal,
            }
        }
        CalibrationSource::BenignTrace(p) => {
            let benign = load_trace_csv(p)?;
            if benign.n_local() != config.local_clocks.len() {
                return Err(Error::invalid(format!(
                    "benign trace {} has {} local clocks, config has {}",
                    p.display(),
                    benign.n_local(),
                    config.local_clocks.len()
                )));
            }
            calibrate_from_trace(config, &benign, m, detector.warmup)?
        }
        CalibrationSource::Simulated => calibrate_scenario(config, m, detector.warmup)?,
    };
    Ok(cal)
}

fn measurement_trace(
    log: crate::scenario::MeasurementLog,
) -> (TraceSet, Vec<Option<MeasurementVector>>) {
    let n = log.epochs.len();
    let traces = TraceSet {
        epochs: log.epochs,
        gnss_phase: vec![0.0; n],
        local_phases: vec![vec![0.0; n]; log.n_local],
        attack_truth: vec![0.0; n],
    };
    (traces, log.measurements)
}

fn write_series(
    path: &Path,
    est: &EstimateSeries,
    verdicts: &[crate::detector::DetectionVerdict],
    truth: &[f64],
    cal: &CalibrationResult,
) -> Result<()> {
    let mut out = String::from(
        "epoch_s,theta_hat_s,gamma_hat,theta_sigma_s,gamma_sigma,theta_threshold_s,gamma_threshold,phase_alarm,freq_alarm,classification,attack_truth_s,nis\n",
    );
    for k in 0..est.epochs.len() {
        let e = &est.estimates[k];
        let v = &verdicts[k];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            est.epochs[k],
            e.theta_hat,
            e.gamma_hat,
            e.theta_var.max(0.0).sqrt(),
            e.gamma_var.max(0.0).sqrt(),
            cal.phase_threshold(),
            cal.frequency_threshold(),
            u8::from(v.phase_alarm),
            u8::from(v.freq_alarm),
            v.classification,
            truth[k],
            opt(est.nis[k]),
        );
    }
    write_file(path, out.as_bytes())
}

fn resolve_detect_config(args: &DetectArgs) -> Result<ResolvedConfig> {
    match &args.config {
        Some(spec) => ResolvedConfig::load(spec, None),
        None => {
            let sibling = args
                .input
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join("config.toml");
            if sibling.exists() {
                ResolvedConfig::load(&sibling.to_string_lossy(), None)
            } else {
                Err(Error::Config {
                    path: sibling,
                    message: "no --config given and no config.toml beside the input".into(),
                })
            }
        }
    }
}

/// Runs the filter and detector over a trace and writes `series.csv` and `report.json`.
pub fn cmd_detect(args: &DetectArgs) -> Result<RunReport> {
    let resolved = resolve_detect_config(args)?;
    let config = &resolved.config;
    let (traces, measurements) = if args.measurements {
        measurement_trace(load_measurement_csv(&args.input)?)
    } else {
        let tr = load_trace_csv(&args.input)?;
        let z = crate::scenario::measure(&tr, config.quantization)
            .into_iter()
            .map(Some)
            .collect();
        (tr, z)
    };
    if traces.n_local() != config.local_clocks.len() {
        return Err(Error::invalid(format!(
            "input {} has {} local clocks, config {} has {}",
            args.input.display(),
            traces.n_local(),
            resolved.source,
            config.local_clocks.len()
        )));
    }
    let cal = resolve_calibration(&args.calibration, config, args.multiplier, &args.detector)?;

    let (estimates, verdicts, metrics, truth) = if args.measurements {
        let est = track(config.filter_model(), &traces.epochs, &measurements)?;
        let verdicts = crate::detector::detect_series(&est.triples(), &cal, &args.detector);
        let metrics = crate::detector::evaluate_run(&verdicts, &traces.attack_truth, None)?;
        (est, verdicts, metrics, traces.attack_truth)
    } else {
        let o = detect_trace(config, traces, &cal, &args.detector)?;
        (o.estimates, o.verdicts, o.metrics, o.traces.attack_truth)
    };

    create_dir(&args.out_dir)?;
    let series_path = args.out_dir.join("series.csv");
    write_series(&series_path, &estimates, &verdicts, &truth, &cal)?;

    let mut counts = BTreeMap::new();
    for c in [
        Classification::Nominal,
        Classification::ActiveAttack,
        Classification::PersistentOffset,
        Classification::FrequencyAnomaly,
    ] {
        counts.insert(c.to_string(), 0usize);
    }
    for v in &verdicts {
        *counts.entry(v.classification.to_string()).or_default() += 1;
    }
    let nis: Vec<f64> = estimates.nis.iter().flatten().copied().collect();
    let blind_spot = truth.first().filter(|a| **a != 0.0).map(|a| {
        format!(
            "attack offset {a:e} s was already present at the first epoch; an offset that predates filter start is not observable"
        )
    });
    let report = RunReport {
        tool_version: TOOL_VERSION.to_string(),
        seed: config.seed,
        config_hash: resolved.hash(),
        scenario: ScenarioSummary {
            config_source: resolved.source.clone(),
            local_clocks: config.local_clocks.len(),
            epochs: estimates.epochs.len(),
            duration: config.duration,
            tau: config.tau,
            attack: config.attack.name().to_string(),
            attack_start: config.attack.start(),
        },
        calibration_source: args.calibration.describe(),
        calibration: cal,
        detector: args.detector,
        metrics,
        classification_counts: counts,
        mean_nis: (!nis.is_empty()).then(|| nis.iter().sum::<f64>() / nis.len() as f64),
        blind_spot,
        series: vec![series_path],
    };
    let report_path = args.out_dir.join("report.json");
    let mut full = report.clone();
    full.series.push(report_path.clone());
    write_json(&report_path, &full)?;
    Ok(full)
}

// ---------------------------------------------------------------- characterize

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClockStability {
    pub clock: String,
    pub hadamard: Vec<StabilityPoint>,
    pub allan: Vec<StabilityPoint>,
    pub fit: Option<NoiseFit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub tool_version: String,
    pub trace: PathBuf,
    pub tau0: f64,
    pub epochs: usize,
    pub clocks: Vec<ClockStability>,
    pub series: Vec<PathBuf>,
}

/// Hadamard and Allan curves plus fitted densities for every local clock.
pub fn characterize_trace(traces: &TraceSet) -> Result<(f64, Vec<ClockStability>)> {
    if traces.len() < MIN_CHARACTERIZE_EPOCHS {
        return Err(Error::InsufficientData {
            required: MIN_CHARACTERIZE_EPOCHS,
            actual: traces.len(),
        });
    }
    let n = traces.len();
    let tau0 = (traces.epochs[n - 1] - traces.epochs[0]) / (n - 1) as f64;
    let irregular = traces
        .epochs
        .windows(2)
        .any(|w| ((w[1] - w[0]) / tau0 - 1.0).abs() > 1e-6);
    if irregular {
        return Err(Error::invalid(
            "characterization needs uniformly sampled epochs",
        ));
    }
    let clocks = traces
        .local_phases
        .iter()
        .enumerate()
        .map(|(i, phase)| {
            let y = phase_to_frequency(phase, tau0)?;
            let hadamard = hadamard_curve(&y)?;
            let allan = allan_curve(&y)?;
            let fit = fit_noise_coefficients(&hadamard).ok();
            Ok(ClockStability {
                clock: format!("clock{}", i + 1),
                hadamard,
                allan,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((tau0, clocks))
}

/// Writes `stability.csv` and `stability.json` for a trace.
pub fn cmd_characterize(trace: &Path, out_dir: &Path) -> Result<StabilityReport> {
    let traces = load_trace_csv(trace)?;
    let (tau0, clocks) = characterize_trace(&traces)?;
    create_dir(out_dir)?;
    let csv_path = out_dir.join("stability.csv");
    let mut out = String::from("clock,tau_s,hadamard_var,allan_var,num_terms\n");
    for c in &clocks {
        for (h, a) in c.hadamard.iter().zip(&c.allan) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.clock, h.tau, h.variance, a.variance, h.num_terms
            );
        }
    }
    write_file(&csv_path, out.as_bytes())?;
    let json_path = out_dir.join("stability.json");
    let report = StabilityReport {
        tool_version: TOOL_VERSION.to_string(),
        trace: trace.to_path_buf(),
        tau0,
        epochs: traces.len(),
        clocks,
        series: vec![csv_path, json_path.clone()],
    };
    write_json(&json_path, &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- batch

/// Parses `a..b` (half-open), `a..=b` or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::invalid(format!("cannot parse seeds '{text}'"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..=") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        (a..=b).collect()
    } else if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        (a..b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::invalid(format!("seed set '{text}' is empty")));
    }
    Ok(seeds)
}

/// Expands a glob pattern into config sources; a bare preset name passes through.
pub fn expand_configs(pattern: &str) -> Result<Vec<String>> {
    if PRESET_NAMES.contains(&pattern) && !Path::new(pattern).exists() {
        return Ok(vec![pattern.to_string()]);
    }
    let paths =
        glob::glob(pattern).map_err(|e| Error::invalid(format!("bad glob '{pattern}': {e}")))?;
    let mut out: Vec<String> = paths
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .map(|p| p.to_string_lossy().into_owned())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::invalid(format!("no config matches '{pattern}'")));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BatchArgs {
    pub configs: Vec<String>,
    pub seeds: Vec<u64>,
    pub calibration: Option<PathBuf>,
    pub multiplier: Option<f64>,
    pub detector: DetectorConfig,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRun {
    pub config: String,
    pub seed: u64,
    pub config_hash: String,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub config: String,
    pub runs: usize,
    pub failed: usize,
    pub calibration: Option<CalibrationResult>,
    pub detected: usize,
    pub latency: Option<Summary>,
    pub offset_at_detection: Option<Summary>,
    pub total_false_positives: usize,
    pub total_false_phase_alarms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<BatchRun>,
    pub summaries: Vec<BatchSummary>,
    pub series: Vec<PathBuf>,
    /// Exit code of the first failed run, if any.
    pub failure_code: Option<i32>,
}

fn summarize_runs(name: &str, runs: &[&BatchRun], cal: Option<CalibrationResult>) -> BatchSummary {
    let ok: Vec<&RunMetrics> = runs.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let latency: Vec<f64> = ok.iter().filter_map(|m| m.detection_latency).collect();
    let offset: Vec<f64> = ok.iter().filter_map(|m| m.offset_at_detection).collect();
    BatchSummary {
        config: name.to_string(),
        runs: runs.len(),
        failed: runs.len() - ok.len(),
        calibration: cal,
        detected: latency.len(),
        latency: summarize(&latency),
        offset_at_detection: summarize(&offset),
        total_false_positives: ok.iter().map(|m| m.false_positive_count).sum(),
        total_false_phase_alarms: ok.iter().map(|m| m.false_phase_alarm_count).sum(),
    }
}

/// Runs simulate + detect for every (config, seed) pair in parallel.
///
/// Each config is calibrated once, from the calibration file when given and
/// otherwise from its simulated benign companion. Failed runs are recorded
/// and the rest still complete; the report carries the first failure code.
pub fn cmd_batch(args: &BatchArgs) -> Result<BatchReport> {
    if args.configs.is_empty() {
        return Err(Error::invalid("batch needs at least one config"));
    }
    if args.seeds.is_empty() {
        return Err(Error::invalid("batch needs at least one seed"));
    }
    let resolved = args
        .configs
        .iter()
        .map(|c| ResolvedConfig::load(c, None))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&args.out_dir)?;

    let cals: Vec<std::result::Result<CalibrationResult, (i32, String)>> = resolved
        .par_iter()
        .map(|r| {
            let source = CalibrationSource::from_path(args.calibration.clone());
            resolve_calibration(&source, &r.config, args.multiplier, &args.detector)
                .map_err(|e| (exit_code(&e), e.to_string()))
        })
        .collect();

    let jobs: Vec<(usize, u64)> = (0..resolved.len())
        .flat_map(|i| args.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(BatchRun, Option<i32>)> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let r = &resolved[i];
            let mut cfg = r.config.clone();
            cfg.seed = seed;
            let outcome = cals[i].clone().and_then(|cal| {
                crate::pipeline::run_scenario(&cfg, &cal, &args.detector)
                    .map_err(|e| (exit_code(&e), e.to_string()))
            });
            let (metrics, error, code) = match outcome {
                Ok(o) => (Some(o.metrics), None, None),
                Err((code, msg)) => (None, Some(msg), Some(code)),
            };
            (
                BatchRun {
                    config: r.name(),
                    seed,
                    config_hash: config_hash(&cfg),
                    metrics,
                    error,
                },
                code,
            )
        })
        .collect();
    let failure_code = results.iter().find_map(|(_, c)| *c);
    let runs: Vec<BatchRun> = results.into_iter().map(|(r, _)| r).collect();

    let metrics_path = args.out_dir.join("metrics.csv");
    let mut out = String::from(
        "config,seed,config_hash,first_alarm_epoch_s,detection_latency_s,offset_at_detection_s,false_positive_count,false_phase_alarm_count,status\n",
    );
    for r in &runs {
        match &r.metrics {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},ok",
                    r.config,
                    r.seed,
                    r.config_hash,
                    opt(m.first_alarm_epoch),
                    opt(m.detection_latency),
                    opt(m.offset_at_detection),
                    m.false_positive_count,
                    m.false_phase_alarm_count
                );
            }
            None => {
                let msg = r
                    .error
                    .clone()
                    .unwrap_or_default()
                    .replace([',', '\n'], ";");
                let _ = writeln!(
                    out,
                    "{},{},{},,,,,,error: {msg}",
                    r.config, r.seed, r.config_hash
                );
            }
        }
    }
    write_file(&metrics_path, out.as_bytes())?;

    let summaries: Vec<BatchSummary> = resolved
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let name = r.name();
            let these: Vec<&BatchRun> = runs.iter().filter(|x| x.config == name).collect();
            summarize_runs(&name, &these, cals[i].clone().ok())
        })
        .collect();
    let summary_path = args.out_dir.join("summary.csv");
    let mut out = String::from(
        "config,runs,failed,detected,latency_median_s,latency_q1_s,latency_q3_s,latency_iqr_s,offset_median_s,offset_q1_s,offset_q3_s,offset_iqr_s,total_false_positives,total_false_phase_alarms\n",
    );
    for s in &summaries {
        let q = |v: &Option<Summary>| match v {
            Some(s) => format!("{},{},{},{}", s.median, s.q1, s.q3, s.iqr()),
            None => ",,,".to_string(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.config,
            s.runs,
            s.failed,
            s.detected,
            q(&s.latency),
            q(&s.offset_at_detection),
            s.total_false_positives,
            s.total_false_phase_alarms
        );
    }
    write_file(&summary_path, out.as_bytes())?;

    let report_path = args.out_dir.join("batch_report.json");
    let report = BatchReport {
        tool_version: TOOL_VERSION.to_string(),
        seeds: args.seeds.clone(),
        runs,
        summaries,
        series: vec![metrics_path, summary_path, report_path.clone()],
        failure_code,
    };
    write_json(&report_path, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_seeds("7, 9").unwrap(), vec![7, 9]);
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_USAGE);
        assert_eq!(
            exit_code(&Error::io("p", std::io::Error::other("x"))),
            EXIT_IO
        );
        assert_eq!(
            exit_code(&Error::Numerical {
                message: "x".into(),
                condition: 1.0
            }),
            EXIT_NUMERICAL
        );
    }

    #[test]
    fn calibration_source_by_extension() {
        assert_eq!(
            CalibrationSource::from_path(None),
            CalibrationSource::Simulated
        );
        assert!(matches!(
            CalibrationSource::from_path(Some("b.csv".into())),
            CalibrationSource::BenignTrace(_)
        ));
        assert!(matches!(
            CalibrationSource::from_path(Some("c.toml".into())),
            CalibrationSource::File(_)
        ));
    }

    #[test]
    fn calibration_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.toml");
        let cal = CalibrationResult::new(5.5834e-08, 1.4109e-09, 6.0).unwrap();
        save_calibration(&cal, &path).unwrap();
        assert_eq!(load_calibration(&path).unwrap(), cal);
    }
}
