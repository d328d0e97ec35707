use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::{CMatrix, C64};

/// Uniform linear array: `n_sensors` elements spaced `spacing_ratio`
/// wavelengths apart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UlaGeometry {
    n_sensors: usize,
    spacing_ratio: f64,
}

impl UlaGeometry {
    pub fn new(n_sensors: usize, spacing_ratio: f64) -> Result<Self> {
        if n_sensors < 2 {
            return domain(format!("array needs at least 2 sensors, got {n_sensors}"));
        }
        if !(spacing_ratio > 0.0 && spacing_ratio.is_finite()) {
            return domain(format!("spacing ratio must be positive, got {spacing_ratio}"));
        }
        Ok(Self {
            n_sensors,
            spacing_ratio,
        })
    }

    /// Half-wavelength array.
    pub fn half_wavelength(n_sensors: usize) -> Result<Self> {
        Self::new(n_sensors, 0.5)
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.spacing_ratio
    }

    /// Electrical phase step between adjacent sensors, `2 pi (d/lambda) sin(theta)`.
    pub fn phase_step(&self, theta_deg: f64) -> f64 {
        2.0 * PI * self.spacing_ratio * theta_deg.to_radians().sin()
    }

    /// `a(theta)_n = exp(j 2 pi (d/lambda) sin(theta) n)` for `n = 0..N`.
    pub fn steering_vector(&self, theta_deg: f64) -> Result<Vec<C64>> {
        check_angle(theta_deg)?;
        let step = self.phase_step(theta_deg);
        Ok((0..self.n_sensors)
            .map(|n| C64::from_polar(1.0, step * n as f64))
            .collect())
    }

    /// Array manifold `[a(theta_1), ..., a(theta_K)]`; angles must be distinct.
    pub fn manifold(&self, thetas_deg: &[f64]) -> Result<CMatrix> {
        for (i, a) in thetas_deg.iter().enumerate() {
            if thetas_deg[..i].iter().any(|b| b == a) {
                return domain(format!("duplicate direction {a} deg in manifold"));
            }
        }
        let columns = thetas_deg
            .iter()
            .map(|&t| self.steering_vector(t))
            .collect::<Result<Vec<_>>>()?;
        if columns.is_empty() {
            return Ok(CMatrix::zeros(self.n_sensors, 0));
        }
        CMatrix::from_columns(&columns)
    }

    /// Grid dictionary: steering vectors for every angle, duplicates allowed.
    pub(crate) fn dictionary(&self, angles_deg: &[f64]) -> Result<CMatrix> {
        let columns = angles_deg
            .iter()
            .map(|&t| self.steering_vector(t))
            .collect::<Result<Vec<_>>>()?;
        CMatrix::from_columns(&columns)
    }
}

pub(crate) fn check_angle(theta_deg: f64) -> Result<()> {
    if !(theta_deg.abs() < 90.0) {
        return domain(format!("direction {theta_deg} deg outside (-90, 90)"));
    }
    Ok(())
}
