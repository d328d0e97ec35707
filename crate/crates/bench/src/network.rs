//! A trained network bundled with the array and grid it was trained for.

use std::path::Path;

use doa_core::array::{build_input_channels, GridSpec, UlaGeometry};
use doa_core::estimators::EstimateSet;
use doa_core::CMatrix;
use doa_net::{load_checkpoint, predict_batch, threshold_from_probs, topk_from_probs, CheckpointMetadata, ModelParams, NetworkSpec};

use crate::error::{domain_err, Result};

#[derive(Clone, Debug)]
pub struct NetworkModel {
    pub spec: NetworkSpec,
    pub params: ModelParams<f64>,
    pub metadata: CheckpointMetadata,
    pub grid: GridSpec,
    pub geometry: UlaGeometry,
}

impl NetworkModel {
    pub fn new(spec: NetworkSpec, params: ModelParams<f64>, metadata: CheckpointMetadata) -> Result<Self> {
        let grid = GridSpec::new(metadata.grid_half_points, metadata.grid_resolution_deg)?;
        let geometry = UlaGeometry::new(metadata.n_sensors, metadata.spacing_ratio)?;
        if spec.input_size != geometry.n_sensors() {
            return domain_err(format!(
                "network input is {0}x{0} but the checkpoint names {1} sensors",
                spec.input_size,
                geometry.n_sensors()
            ));
        }
        if spec.output_len()? != grid.len() {
            return domain_err(format!(
                "network has {} outputs but the checkpoint grid has {} points",
                spec.output_len()?,
                grid.len()
            ));
        }
        Ok(Self {
            spec,
            params,
            metadata,
            grid,
            geometry,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (spec, params, metadata) = load_checkpoint::<f64>(path)?;
        Self::new(spec, params, metadata)
    }

    /// True if the network was trained on a mixture of source counts.
    pub fn is_mixed(&self) -> bool {
        self.metadata.k_policy == "mixed"
    }

    /// Output probabilities for one covariance matrix.
    pub fn probabilities(&self, r: &CMatrix) -> Result<Vec<f64>> {
        Ok(self.probabilities_batch(std::slice::from_ref(r))?.pop().unwrap_or_default())
    }

    pub fn probabilities_batch(&self, rs: &[CMatrix]) -> Result<Vec<Vec<f64>>> {
        let inputs = rs.iter().map(build_input_channels).collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<_> = inputs.iter().collect();
        Ok(predict_batch(&self.spec, &self.params, &refs)?)
    }

    pub fn topk(&self, probs: &[f64], k: usize) -> Result<EstimateSet> {
        Ok(topk_from_probs(&self.grid, probs, k)?)
    }

    pub fn threshold(&self, probs: &[f64], p_bar: f64) -> Result<EstimateSet> {
        Ok(threshold_from_probs(&self.grid, probs, p_bar)?)
    }
}
