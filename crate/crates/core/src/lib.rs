//! Clock-ensemble monitoring of a GNSS-disciplined time source.
//!
//! A few free-running local oscillators are compared with the GNSS clock once
//! per epoch. An ensemble Kalman filter estimates the GNSS-minus-ensemble
//! phase and frequency offsets, and a pair of calibrated threshold tests flags
//! manipulation of the GNSS time solution.
//!
//! - [`clock`]: three-state clock model, exact discretization, noise sampling
//! - [`stability`]: Hadamard and Allan variances, noise-density fit
//! - [`filter`]: ensemble Kalman filter and differential estimates
//! - [`scenario`]: attack profiles, presets, trace simulation and CSV I/O
//! - [`detector`]: calibration, phase/frequency tests, verdicts, run metrics
//! - [`pipeline`]: tracking, calibration and detection over whole traces
//! - [`cli`]: the `simulate`, `characterize`, `detect` and `batch` commands
//!
//! ```
//! use clockwatch::detector::{DetectorConfig, DEFAULT_MULTIPLIER, DEFAULT_WARMUP};
//! use clockwatch::pipeline::{calibrate_scenario, run_scenario};
//! use clockwatch::scenario::preset;
//!
//! let cfg = preset("texbat2-like").unwrap();
//! let cal = calibrate_scenario(&cfg, DEFAULT_MULTIPLIER, DEFAULT_WARMUP).unwrap();
//! let run = run_scenario(&cfg, &cal, &DetectorConfig::default()).unwrap();
//! assert!(run.metrics.detection_latency.unwrap() <= 60.0);
//! ```

pub mod cli;
pub mod clock;
pub mod detector;
pub mod error;
pub mod filter;
pub mod linalg;
pub mod pipeline;
pub mod scenario;
pub mod stability;

pub use error::{Error, Result};
