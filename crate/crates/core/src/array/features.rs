use crate::error::{domain, Result};
use crate::CMatrix;

/// `N x N x 3` real network input stored height-width-channel: channel 0 is
/// the real part, channel 1 the imaginary part, channel 2 the phase.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceInput {
    n: usize,
    values: Vec<f64>,
}

impl CovarianceInput {
    pub const CHANNELS: usize = 3;

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n * Self::CHANNELS {
            return domain(format!(
                "{} values do not form a {n}x{n}x3 tensor",
                values.len()
            ));
        }
        Ok(Self { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.values[(row * self.n + col) * Self::CHANNELS + channel]
    }
}

/// Splits a covariance matrix into real, imaginary and phase channels.
/// Phase uses the four-quadrant arctangent in `(-pi, pi]`, with `arg(0) = 0`.
pub fn build_input_channels(r: &CMatrix) -> Result<CovarianceInput> {
    if !r.is_square() {
        return domain(format!("covariance must be square, got {}x{}", r.rows(), r.cols()));
    }
    let n = r.rows();
    let mut values = Vec::with_capacity(n * n * 3);
    for z in r.as_slice() {
        let phase = if z.re == 0.0 && z.im == 0.0 {
            0.0
        } else {
            // atan2 returns -pi for (-x, -0.0); fold it to +pi.
            let p = z.im.atan2(z.re);
            if p == -std::f64::consts::PI {
                std::f64::consts::PI
            } else {
                p
            }
        };
        values.extend_from_slice(&[z.re, z.im, phase]);
    }
    Ok(CovarianceInput { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{true_covariance, SourceScene, UlaGeometry};
    use crate::C64;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn identity_channels() {
        let x = build_input_channels(&CMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(x.get(i, j, 0), if i == j { 1.0 } else { 0.0 });
                assert_eq!(x.get(i, j, 1), 0.0);
                assert_eq!(x.get(i, j, 2), 0.0);
            }
        }
    }

    #[test]
    fn phase_of_imaginary_unit() {
        let mut r = CMatrix::identity(2);
        r[(0, 1)] = C64::new(0.0, 1.0);
        r[(1, 0)] = C64::new(0.0, -1.0);
        let x = build_input_channels(&r).unwrap();
        assert_eq!(x.get(0, 1, 2), FRAC_PI_2);
        assert_eq!(x.get(1, 0, 2), -FRAC_PI_2);
    }

    #[test]
    fn negative_real_axis_maps_to_plus_pi() {
        let mut r = CMatrix::identity(2);
        r[(0, 1)] = C64::new(-1.0, -0.0);
        r[(1, 0)] = C64::new(-1.0, 0.0);
        let x = build_input_channels(&r).unwrap();
        assert_eq!(x.get(0, 1, 2), PI);
        assert_eq!(x.get(1, 0, 2), PI);
    }

    #[test]
    fn channel_symmetries_on_model_covariance() {
        let g = UlaGeometry::new(8, 0.5).unwrap();
        let s = SourceScene::new(vec![-21.0, 4.0, 17.0], vec![1.0, 0.6, 1.3], 0.4).unwrap();
        let x = build_input_channels(&true_covariance(&g, &s).unwrap()).unwrap();
        for i in 0..8 {
            assert_eq!(x.get(i, i, 1), 0.0);
            assert_eq!(x.get(i, i, 2), 0.0);
            for j in 0..8 {
                assert_eq!(x.get(i, j, 0), x.get(j, i, 0));
                assert_eq!(x.get(i, j, 1), -x.get(j, i, 1));
                let p = x.get(i, j, 2);
                assert!(p > -PI && p <= PI);
            }
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(build_input_channels(&CMatrix::zeros(2, 3)).is_err());
    }
}
