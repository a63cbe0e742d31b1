//! Experiment orchestration: configs, the four-step pipeline with
//! baselines, parameter sweeps, entry/exit replays and result files.

pub mod config;
pub mod events;
pub mod output;
pub mod pipeline;
pub mod presets;
pub mod sweep;

pub use config::{BaselineKind, Config, ObjectiveKind, ScenarioSpec};
pub use events::{random_churn, replay, run_events, EventsOutcome};
pub use output::{manifest, write_metrics_csv, write_outputs};
pub use pipeline::{bounds_report, build_scenario, run_pipeline, BoundsReport, PipelineError, PolicyRow, RunResults};
pub use presets::{preset, preset_config, PRESETS};
pub use sweep::{sweep, write_sweep_csv, SweepAxis, SweepTable};
