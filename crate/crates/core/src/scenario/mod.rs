//! Scenario simulation, attack profiles and trace I/O.

mod attack;
mod config;
mod io;
pub mod presets;
mod simulate;

pub use attack::{attack_offset, AttackProfile};
pub use config::{FilterTuning, GnssClockModel, ScenarioConfig, MIN_R_DIAG};
pub(crate) use io::write_file;
pub use io::{
    load_measurement_csv, load_trace_csv, save_measurement_csv, save_trace_csv, MeasurementLog,
};
pub use presets::preset;
pub use simulate::{measure, round_to_grid, simulate, TraceSet};
