//! Narrowband ULA signal model: geometry, scenes, covariances, snapshot
//! simulation and the grid/label/input encodings used by the classifier.

mod covariance;
mod features;
mod geometry;
mod grid;
mod scene;
mod snapshots;

pub use covariance::{sample_covariance, true_covariance};
pub use features::{build_input_channels, CovarianceInput};
pub use geometry::UlaGeometry;
pub use grid::{decode_label, encode_label, GridSpec, LabelVector};
pub use scene::{noise_power_for_snr, SourceScene};
pub use snapshots::{simulate_snapshots, SnapshotBlock};
