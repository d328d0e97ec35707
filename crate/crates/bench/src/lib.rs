//! Evaluation harness: accuracy metrics, Cramér-Rao bounds, named
//! experiment presets, the Monte-Carlo runner, training profiles and the
//! `doa` command-line tool.

pub mod cli;
pub mod crlb;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod network;
pub mod presets;
pub mod training;

pub use error::{BenchError, Result};
pub use experiment::{calibrate_p_bar, run_preset, RunOptions, RunReport};
pub use network::NetworkModel;
pub use presets::{build_preset, Method, PresetParams, Scale};
pub use training::{Profile, TrainRequest};
