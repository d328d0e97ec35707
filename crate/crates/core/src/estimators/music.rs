use crate::array::{GridSpec, UlaGeometry};
use crate::error::{domain, Result};
use crate::linalg::{hermitian_eig, inner};
use crate::CMatrix;

const DENOMINATOR_FLOOR: f64 = 1e-12;

/// MUSIC pseudospectrum sampled on a grid.
#[derive(Clone, Debug)]
pub struct MusicSpectrum {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

/// Orthonormal basis of the noise subspace: eigenvectors of the `N - K`
/// smallest eigenvalues.
pub fn noise_subspace(r: &CMatrix, k: usize) -> Result<CMatrix> {
    let n = r.rows();
    if k == 0 || k >= n {
        return domain(format!("source count {k} must satisfy 1 <= K < N = {n}"));
    }
    let eig = hermitian_eig(r)?;
    Ok(eig.eigenvectors.trailing_columns(k))
}

/// `P(phi) = 1 / (a(phi)^H Qe Qe^H a(phi))` with the denominator floored at 1e-12.
pub fn music_spectrum(r: &CMatrix, k: usize, grid: &GridSpec, geom: &UlaGeometry) -> Result<MusicSpectrum> {
    if r.rows() != geom.n_sensors() {
        return domain(format!(
            "covariance is {}x{} but the array has {} sensors",
            r.rows(),
            r.cols(),
            geom.n_sensors()
        ));
    }
    let qe = noise_subspace(r, k)?;
    let basis: Vec<_> = (0..qe.cols()).map(|j| qe.column(j)).collect();
    let values = grid
        .angles()
        .into_iter()
        .map(|phi| {
            let a = geom.steering_vector(phi)?;
            let den: f64 = basis.iter().map(|q| inner(q, &a).norm_sqr()).sum();
            Ok(1.0 / den.max(DENOMINATOR_FLOOR))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MusicSpectrum { grid: *grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{sample_covariance, simulate_snapshots, true_covariance, SourceScene};
    use crate::estimators::pick_peaks;

    fn projector(q: &CMatrix) -> CMatrix {
        q.matmul(&q.adjoint()).unwrap()
    }

    #[test]
    fn noise_subspace_orthogonal_to_source() {
        let g = UlaGeometry::new(4, 0.5).unwrap();
        let s = SourceScene::new(vec![0.0], vec![1.0], 1.0).unwrap();
        let q = noise_subspace(&true_covariance(&g, &s).unwrap(), 1).unwrap();
        assert_eq!((q.rows(), q.cols()), (4, 3));
        let a = g.steering_vector(0.0).unwrap();
        for j in 0..3 {
            assert!(inner(&q.column(j), &a).norm() < 1e-8);
        }
    }

    #[test]
    fn degenerate_spectrum_projector() {
        let q = noise_subspace(&CMatrix::identity(4), 1).unwrap();
        let p = projector(&q);
        // Any 3-dimensional subspace: projector is idempotent with trace 3.
        assert!(p.matmul(&p).unwrap().sub(&p).unwrap().max_abs() < 1e-12);
        assert!((p.trace().re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_projector_idempotent() {
        let g = UlaGeometry::new(8, 0.5).unwrap();
        let s = SourceScene::new(vec![-12.0, 25.0], vec![1.0, 1.0], 2.0).unwrap();
        let r = sample_covariance(&simulate_snapshots(&g, &s, 300, 4).unwrap()).unwrap();
        let p = projector(&noise_subspace(&r, 2).unwrap());
        assert!(p.matmul(&p).unwrap().sub(&p).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn invalid_source_count() {
        assert!(noise_subspace(&CMatrix::identity(4), 0).is_err());
        assert!(noise_subspace(&CMatrix::identity(4), 4).is_err());
    }

    #[test]
    fn peaks_at_true_directions() {
        let g = UlaGeometry::new(16, 0.5).unwrap();
        let grid = GridSpec::new(60, 1.0).unwrap();
        let s = SourceScene::new(vec![-30.0, 20.0], vec![1.0, 1.0], 1.0).unwrap();
        let spec = music_spectrum(&true_covariance(&g, &s).unwrap(), 2, &grid, &g).unwrap();
        assert_eq!(spec.values.len(), 121);
        let mut idx: Vec<usize> = (0..121).collect();
        idx.sort_by(|a, b| spec.values[*b].partial_cmp(&spec.values[*a]).unwrap());
        let mut top = vec![grid.angle(idx[0]), grid.angle(idx[1])];
        top.sort_by(f64::total_cmp);
        assert_eq!(top, vec![-30.0, 20.0]);
        assert_eq!(pick_peaks(&grid, &spec.values, 2).angles_deg(), &[-30.0, 20.0]);
    }

    #[test]
    fn noiseless_peak_dominates() {
        let g = UlaGeometry::new(8, 0.5).unwrap();
        let grid = GridSpec::new(30, 1.0).unwrap();
        let s = SourceScene::new(vec![0.0], vec![1.0], 0.0).unwrap();
        let spec = music_spectrum(&true_covariance(&g, &s).unwrap(), 1, &grid, &g).unwrap();
        let peak = spec.values[30];
        assert!(spec.values.iter().all(|v| v.is_finite() && *v > 0.0));
        for (i, v) in spec.values.iter().enumerate() {
            if i != 30 {
                assert!(peak >= 1e3 * v);
            }
        }
    }
}
