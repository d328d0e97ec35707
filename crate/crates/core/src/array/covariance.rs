use super::geometry::UlaGeometry;
use super::scene::SourceScene;
use super::snapshots::SnapshotBlock;
use crate::error::{domain, Result};
use crate::{CMatrix, C64};

/// `R = A diag(sigma_k^2) A^H + sigma_e^2 I`.
pub fn true_covariance(geom: &UlaGeometry, scene: &SourceScene) -> Result<CMatrix> {
    scene.check_against(geom)?;
    let n = geom.n_sensors();
    let a = geom.manifold(scene.doas_deg())?;
    let powers = scene.source_powers();
    let mut r = CMatrix::from_fn(n, n, |i, j| {
        powers
            .iter()
            .enumerate()
            .fold(C64::new(0.0, 0.0), |acc, (k, &p)| acc + a[(i, k)] * a[(j, k)].conj() * p)
    });
    for i in 0..n {
        r[(i, i)] += scene.noise_power();
    }
    Ok(r)
}

/// `(1/T) sum_t y(t) y(t)^H`.
pub fn sample_covariance(block: &SnapshotBlock) -> Result<CMatrix> {
    let y = block.data();
    let t = y.cols();
    if t == 0 {
        return domain("sample covariance of an empty snapshot block");
    }
    let n = y.rows();
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        let yi = y.row(i);
        for j in i..n {
            let yj = y.row(j);
            let s = yi
                .iter()
                .zip(yj)
                .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj());
            let v = s / t as f64;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
        r[(i, i)] = C64::new(r[(i, i)].re, 0.0);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_svd, hermitian_eig};

    #[test]
    fn single_broadside_source_is_all_ones() {
        let g = UlaGeometry::new(4, 0.5).unwrap();
        let s = SourceScene::new(vec![0.0], vec![1.0], 0.0).unwrap();
        let r = true_covariance(&g, &s).unwrap();
        assert!(r.as_slice().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn noise_only() {
        let g = UlaGeometry::new(5, 0.5).unwrap();
        let s = SourceScene::new(vec![], vec![], 2.0).unwrap();
        let r = true_covariance(&g, &s).unwrap();
        assert!(r.sub(&CMatrix::identity(5).scale(2.0)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn noise_floor_eigenvalues() {
        let g = UlaGeometry::new(16, 0.5).unwrap();
        let s = SourceScene::new(vec![10.11, 13.3], vec![1.0, 1.0], 10.0).unwrap();
        let r = true_covariance(&g, &s).unwrap();
        assert!(r.is_hermitian());
        let expected_trace = 2.0 * 16.0 + 16.0 * 10.0;
        assert!((r.trace().re - expected_trace).abs() < 1e-9);
        let e = hermitian_eig(&r).unwrap();
        assert!(e.eigenvalues[0] > 10.0 && e.eigenvalues[1] > 10.0);
        for &l in &e.eigenvalues[2..] {
            assert!((l - 10.0).abs() < 1e-8 * 10.0, "{l}");
        }
        // Signal part has rank exactly K.
        let signal = r.sub(&CMatrix::identity(16).scale(10.0)).unwrap();
        let svd = complex_svd(&signal).unwrap();
        let smax = svd.singular_values[0];
        assert_eq!(svd.singular_values.iter().filter(|&&v| v > 1e-8 * smax).count(), 2);
    }

    #[test]
    fn too_many_sources() {
        let g = UlaGeometry::new(2, 0.5).unwrap();
        let s = SourceScene::new(vec![1.0, 20.0], vec![1.0, 1.0], 1.0).unwrap();
        assert!(true_covariance(&g, &s).is_err());
    }

    #[test]
    fn sample_covariance_small_cases() {
        let g = UlaGeometry::new(3, 0.5).unwrap();
        let mut e1 = CMatrix::zeros(3, 1);
        e1[(0, 0)] = C64::new(1.0, 0.0);
        let r = sample_covariance(&SnapshotBlock::new(g, e1).unwrap()).unwrap();
        let mut want = CMatrix::zeros(3, 3);
        want[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(r, want);

        let y = [C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)];
        let block = CMatrix::from_fn(3, 4, |i, _| y[i]);
        let r = sample_covariance(&SnapshotBlock::new(g, block).unwrap()).unwrap();
        let outer = CMatrix::from_fn(3, 3, |i, j| y[i] * y[j].conj());
        assert!(r.sub(&outer).unwrap().max_abs() < 1e-12);
    }
}
