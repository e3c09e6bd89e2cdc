//! Experiment runner for the nested-lattice distributed source codec:
//! TOML configs, regime ladders over `(θ, μ)`, Monte Carlo measurement
//! against the closed-form predictions, and property suites.

pub mod config;
pub mod experiment;
pub mod output;
pub mod suite;
pub mod theory_table;

pub use config::{ExperimentConfig, LadderPoint, Pairing, R0Rule};
pub use experiment::{build_codec, run_point, run_sweep, simulate_codec, PointOutcome, PointStatus, SweepReport};
pub use suite::{validate_suite, SuiteReport};
