use doa_core::array::{
    sample_covariance, simulate_snapshots, true_covariance, GridSpec, SourceScene, UlaGeometry,
};
use doa_core::linalg::{complex_svd, hermitian_eig};
use doa_core::CMatrix;

#[test]
fn sample_covariance_is_unbiased() {
    let geom = UlaGeometry::half_wavelength(4).unwrap();
    let scene = SourceScene::new(vec![-20.0, 35.0], vec![1.0, 2.0], 0.5).unwrap();
    let truth = true_covariance(&geom, &scene).unwrap();
    let trials = 200;
    let n = geom.n_sensors();
    let mut sum = vec![(0.0, 0.0); n * n];
    let mut sum_sq = vec![(0.0, 0.0); n * n];
    for seed in 0..trials {
        let block = simulate_snapshots(&geom, &scene, 100, 1000 + seed).unwrap();
        let r = sample_covariance(&block).unwrap();
        for (k, z) in r.as_slice().iter().enumerate() {
            sum[k].0 += z.re;
            sum[k].1 += z.im;
            sum_sq[k].0 += z.re * z.re;
            sum_sq[k].1 += z.im * z.im;
        }
    }
    let t = trials as f64;
    for (k, want) in truth.as_slice().iter().enumerate() {
        for (s, s2, w) in [(sum[k].0, sum_sq[k].0, want.re), (sum[k].1, sum_sq[k].1, want.im)] {
            let mean = s / t;
            let var = (s2 / t - mean * mean) * t / (t - 1.0);
            let se = (var / t).sqrt();
            if se == 0.0 {
                // Imaginary part of a diagonal entry: exactly zero.
                assert_eq!(mean, w);
                continue;
            }
            assert!((mean - w).abs() < 3.0 * se, "entry {k}: mean {mean}, truth {w}, se {se}");
        }
    }
}

#[test]
fn covariance_error_shrinks_with_snapshots() {
    let geom = UlaGeometry::half_wavelength(8).unwrap();
    let scene = SourceScene::with_snr(vec![-5.0, 12.0], 0.0).unwrap();
    let truth = true_covariance(&geom, &scene).unwrap();
    let errors: Vec<f64> = [100, 1000, 10000]
        .iter()
        .map(|&t| {
            (0..50u64)
                .map(|seed| {
                    let b = simulate_snapshots(&geom, &scene, t, seed).unwrap();
                    sample_covariance(&b).unwrap().sub(&truth).unwrap().frobenius_norm()
                })
                .sum::<f64>()
                / 50.0
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0]), "{errors:?}");
}

#[test]
fn signal_part_of_true_covariance_has_rank_k() {
    let geom = UlaGeometry::half_wavelength(8).unwrap();
    for (doas, k) in [(vec![3.0], 1), (vec![-40.0, 10.0], 2), (vec![-60.0, 0.0, 0.5], 3)] {
        let scene = SourceScene::new(doas, vec![1.0; k], 0.7).unwrap();
        let r = true_covariance(&geom, &scene).unwrap();
        let signal = r.sub(&CMatrix::identity(8).scale(0.7)).unwrap();
        let svd = complex_svd(&signal).unwrap();
        let smax = svd.singular_values[0];
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-8 * smax).count();
        assert_eq!(rank, k);

        let eig = hermitian_eig(&r).unwrap();
        for &l in &eig.eigenvalues[k..] {
            assert!((l - 0.7).abs() <= 1e-8 * 0.7, "noise eigenvalue {l}");
        }
    }
}

#[test]
fn steering_entries_have_unit_modulus() {
    let geom = UlaGeometry::half_wavelength(16).unwrap();
    let grid = GridSpec::new(60, 1.0).unwrap();
    let a = geom.manifold(&grid.angles()).unwrap();
    assert!(a.as_slice().iter().all(|z| (z.norm() - 1.0).abs() <= 1e-12));
}

#[test]
fn snr_of_mismatched_scenes() {
    let g = UlaGeometry::half_wavelength(16).unwrap();
    let a = SourceScene::new(vec![10.0, 12.11], vec![0.7, 1.25], 1.0).unwrap();
    let b = SourceScene::new(vec![10.0, 14.0], vec![0.7, 1.25], 10.0).unwrap();
    a.check_against(&g).unwrap();
    assert!((a.snr_db().unwrap() - (-1.549)).abs() < 1e-3);
    assert!((b.snr_db().unwrap() - (-11.549)).abs() < 1e-3);
}
