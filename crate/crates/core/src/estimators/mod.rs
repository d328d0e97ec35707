//! Covariance- and snapshot-based DoA estimators.

mod l21;
mod music;
mod peaks;
mod root_music;

pub use l21::{dimensionality_reduce, l21_svd, BpdnConfig, L21Solution};
pub use music::{music_spectrum, noise_subspace, MusicSpectrum};
pub use peaks::{pick_peaks, EstimateSet};
pub use root_music::{root_music, root_music_polynomial};
