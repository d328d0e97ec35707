use super::geometry::{check_angle, UlaGeometry};
use crate::error::{domain, Result};

/// Ground-truth directions, per-source powers and noise power.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceScene {
    doas_deg: Vec<f64>,
    source_powers: Vec<f64>,
    noise_power: f64,
}

impl SourceScene {
    pub fn new(doas_deg: Vec<f64>, source_powers: Vec<f64>, noise_power: f64) -> Result<Self> {
        if doas_deg.len() != source_powers.len() {
            return domain(format!(
                "{} directions but {} source powers",
                doas_deg.len(),
                source_powers.len()
            ));
        }
        for (i, &a) in doas_deg.iter().enumerate() {
            check_angle(a)?;
            if doas_deg[..i].contains(&a) {
                return domain(format!("directions must be distinct, {a} deg repeated"));
            }
        }
        if let Some(p) = source_powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return domain(format!("source power must be positive, got {p}"));
        }
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return domain(format!("noise power must be non-negative, got {noise_power}"));
        }
        Ok(Self {
            doas_deg,
            source_powers,
            noise_power,
        })
    }

    /// Unit-power sources with the noise power that gives `snr_db`.
    pub fn with_snr(doas_deg: Vec<f64>, snr_db: f64) -> Result<Self> {
        let k = doas_deg.len();
        Self::new(doas_deg, vec![1.0; k], noise_power_for_snr(1.0, snr_db))
    }

    pub fn doas_deg(&self) -> &[f64] {
        &self.doas_deg
    }

    pub fn source_powers(&self) -> &[f64] {
        &self.source_powers
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn n_sources(&self) -> usize {
        self.doas_deg.len()
    }

    /// `K <= N - 1`.
    pub fn check_against(&self, geom: &UlaGeometry) -> Result<()> {
        if self.n_sources() >= geom.n_sensors() {
            return domain(format!(
                "{} sources cannot be resolved by {} sensors",
                self.n_sources(),
                geom.n_sensors()
            ));
        }
        Ok(())
    }

    /// `10 log10(min_k sigma_k^2 / sigma_e^2)`.
    pub fn snr_db(&self) -> Result<f64> {
        if self.noise_power == 0.0 {
            return domain("SNR is infinite for a noiseless scene");
        }
        let weakest = self
            .source_powers
            .iter()
            .copied()
            .reduce(f64::min)
            .ok_or_else(|| crate::DoaError::Domain("SNR undefined without sources".into()))?;
        Ok(10.0 * (weakest / self.noise_power).log10())
    }
}

/// Noise power giving `snr_db` for a weakest source of power `source_power`.
pub fn noise_power_for_snr(source_power: f64, snr_db: f64) -> f64 {
    source_power * 10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_examples() {
        let s = SourceScene::new(vec![1.0, 2.0], vec![1.0, 1.0], 1.0).unwrap();
        assert_eq!(s.snr_db().unwrap(), 0.0);
        let s = SourceScene::new(vec![1.0, 2.0], vec![0.7, 1.25], 10.0).unwrap();
        assert!((s.snr_db().unwrap() + 11.549).abs() < 1e-3);
        let s = SourceScene::new(vec![1.0, 2.0], vec![0.7, 1.25], 1.0).unwrap();
        assert!((s.snr_db().unwrap() + 1.549).abs() < 1e-3);
    }

    #[test]
    fn snr_errors() {
        let s = SourceScene::new(vec![1.0], vec![1.0], 0.0).unwrap();
        assert!(s.snr_db().is_err());
        let s = SourceScene::new(vec![], vec![], 1.0).unwrap();
        assert!(s.snr_db().is_err());
    }

    #[test]
    fn with_snr_round_trips() {
        for snr in [-20.0, -7.5, 0.0, 12.0] {
            let s = SourceScene::with_snr(vec![-3.0, 4.0], snr).unwrap();
            assert!((s.snr_db().unwrap() - snr).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(SourceScene::new(vec![1.0, 1.0], vec![1.0, 1.0], 1.0).is_err());
        assert!(SourceScene::new(vec![1.0], vec![0.0], 1.0).is_err());
        assert!(SourceScene::new(vec![1.0], vec![1.0, 2.0], 1.0).is_err());
        assert!(SourceScene::new(vec![90.0], vec![1.0], 1.0).is_err());
        assert!(SourceScene::new(vec![1.0], vec![1.0], -1.0).is_err());
        let g = UlaGeometry::new(3, 0.5).unwrap();
        let s = SourceScene::new(vec![1.0, 5.0, 9.0], vec![1.0; 3], 1.0).unwrap();
        assert!(s.check_against(&g).is_err());
    }
}
