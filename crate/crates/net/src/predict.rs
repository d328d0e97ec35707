//! Decoding network output probabilities into direction estimates.

use doa_core::array::{CovarianceInput, GridSpec};
use doa_core::estimators::EstimateSet;
use doa_core::Real;

use crate::error::{domain_err, shape_err, Result};
use crate::network::forward;
use crate::params::ModelParams;
use crate::spec::NetworkSpec;

fn check_width(grid: &GridSpec, probs: &[f64]) -> Result<()> {
    if probs.len() != grid.len() {
        return shape_err(format!("{} probabilities for a {}-point grid", probs.len(), grid.len()));
    }
    Ok(())
}

/// Grid angles of the `k` largest probabilities (`1 <= k <= 2G+1`); ties
/// go to the smaller angle.
pub fn topk_from_probs(grid: &GridSpec, probs: &[f64], k: usize) -> Result<EstimateSet> {
    check_width(grid, probs)?;
    if k == 0 || k > grid.len() {
        return domain_err(format!("cannot select {k} of {} grid points", grid.len()));
    }
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    Ok(EstimateSet::new(idx[..k].iter().map(|&i| grid.angle(i)).collect()))
}

/// Grid angles whose probability is at least `threshold`.
pub fn threshold_from_probs(grid: &GridSpec, probs: &[f64], threshold: f64) -> Result<EstimateSet> {
    check_width(grid, probs)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return domain_err(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    Ok(EstimateSet::new(
        probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= threshold)
            .map(|(i, _)| grid.angle(i))
            .collect(),
    ))
}

fn probabilities<T: Real>(spec: &NetworkSpec, params: &ModelParams<T>, grid: &GridSpec, input: &CovarianceInput) -> Result<Vec<f64>> {
    if spec.output_len()? != grid.len() {
        return shape_err(format!("network emits {} outputs, grid has {}", spec.output_len()?, grid.len()));
    }
    Ok(forward(spec, params, input)?
        .into_iter()
        .map(|p| p.to_f64().unwrap_or(f64::NAN))
        .collect())
}

/// Known source count: the `k` most probable grid points.
pub fn predict_topk<T: Real>(
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    grid: &GridSpec,
    input: &CovarianceInput,
    k: usize,
) -> Result<EstimateSet> {
    topk_from_probs(grid, &probabilities(spec, params, grid, input)?, k)
}

/// Unknown source count: every grid point at or above `threshold`.
pub fn predict_threshold<T: Real>(
    spec: &NetworkSpec,
    params: &ModelParams<T>,
    grid: &GridSpec,
    input: &CovarianceInput,
    threshold: f64,
) -> Result<EstimateSet> {
    threshold_from_probs(grid, &probabilities(spec, params, grid, input)?, threshold)
}
