//! Cramér-Rao bound of the unconditional (stochastic) signal model, and
//! an independent numerical Fisher-information oracle used to validate it.

use doa_core::array::{SourceScene, UlaGeometry};
use doa_core::linalg::hermitian_eig;
use doa_core::{CMatrix, C64};

use crate::error::{domain_err, BenchError, Result};

fn steering(geom: &UlaGeometry, theta_rad: f64) -> Vec<C64> {
    let step = 2.0 * std::f64::consts::PI * geom.spacing_ratio() * theta_rad.sin();
    (0..geom.n_sensors()).map(|n| C64::from_polar(1.0, step * n as f64)).collect()
}

fn steering_derivative(geom: &UlaGeometry, theta_rad: f64) -> Vec<C64> {
    let rate = 2.0 * std::f64::consts::PI * geom.spacing_ratio() * theta_rad.cos();
    steering(geom, theta_rad)
        .into_iter()
        .enumerate()
        .map(|(n, a)| a * C64::new(0.0, rate * n as f64))
        .collect()
}

fn columns(cols: &[Vec<C64>]) -> CMatrix {
    let rows = cols.first().map_or(0, Vec::len);
    CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Inverse and log-determinant of a Hermitian positive-definite matrix.
fn hpd_inverse(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let eig = hermitian_eig(&hermitian_part(m))?;
    let smallest = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let largest = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if !(smallest > largest * 1e-13 && smallest > 0.0) {
        return Err(BenchError::Numerical(format!(
            "matrix is singular or indefinite (eigenvalues {largest:e} .. {smallest:e})"
        )));
    }
    let q = &eig.eigenvectors;
    let n = m.rows();
    let inv = CMatrix::from_fn(n, n, |i, j| {
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold(C64::new(0.0, 0.0), |acc, (k, &l)| acc + q[(i, k)] * q[(j, k)].conj() / l)
    });
    Ok((inv, eig.eigenvalues.iter().map(|l| l.ln()).sum()))
}

fn real_symmetric_inverse(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    let c = CMatrix::from_fn(n, n, |i, j| C64::new(m[i][j], 0.0));
    let (inv, _) = hpd_inverse(&c)?;
    Ok((0..n).map(|i| (0..n).map(|j| inv[(i, j)].re).collect()).collect())
}

fn check(geom: &UlaGeometry, scene: &SourceScene, snapshots: usize) -> Result<()> {
    scene.check_against(geom)?;
    let k = scene.n_sources();
    if k == 0 || k >= geom.n_sensors() {
        return domain_err(format!("bound needs 1 <= K < N, got K = {k}"));
    }
    if scene.noise_power() <= 0.0 {
        return domain_err("bound needs a positive noise power");
    }
    if snapshots < k + 1 {
        return domain_err(format!("bound needs T >= K + 1, got T = {snapshots}"));
    }
    Ok(())
}

fn to_degrees(crb_rad2: &[f64]) -> Vec<f64> {
    crb_rad2.iter().map(|v| v.sqrt().to_degrees()).collect()
}

/// Per-angle standard-deviation bound in degrees,
/// `CRB = sigma^2 / (2T) * Re[(D^H P_A^perp D) o (P A^H R^-1 A P)^T]^-1`,
/// with `D` the steering derivatives with respect to angle in radians.
pub fn crlb_unconditional(geom: &UlaGeometry, scene: &SourceScene, snapshots: usize) -> Result<Vec<f64>> {
    check(geom, scene, snapshots)?;
    let k = scene.n_sources();
    let n = geom.n_sensors();
    let thetas: Vec<f64> = scene.doas_deg().iter().map(|d| d.to_radians()).collect();
    let a = columns(&thetas.iter().map(|&t| steering(geom, t)).collect::<Vec<_>>());
    let d = columns(&thetas.iter().map(|&t| steering_derivative(geom, t)).collect::<Vec<_>>());
    let p = CMatrix::from_real_diagonal(scene.source_powers());
    let sigma2 = scene.noise_power();

    let r = a
        .matmul(&p)?
        .matmul(&a.adjoint())?
        .add(&CMatrix::identity(n).scale(sigma2))?;
    let (r_inv, _) = hpd_inverse(&r)?;
    let (gram_inv, _) = hpd_inverse(&a.adjoint_mul(&a)?)?;
    let proj = CMatrix::identity(n).sub(&a.matmul(&gram_inv)?.matmul(&a.adjoint())?)?;
    let h1 = d.adjoint_mul(&proj.matmul(&d)?)?;
    let h2 = p.matmul(&a.adjoint_mul(&r_inv.matmul(&a)?)?)?.matmul(&p)?;
    let m: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| (h1[(i, j)] * h2[(j, i)]).re).collect())
        .collect();
    let inv = real_symmetric_inverse(&m)?;
    let scale = sigma2 / (2.0 * snapshots as f64);
    Ok(to_degrees(&(0..k).map(|i| scale * inv[i][i]).collect::<Vec<_>>()))
}

/// Parameters of the Gaussian snapshot model: angles (radians), the
/// Hermitian source covariance (diagonal, then real and imaginary parts of
/// the upper triangle) and the noise power.
fn unpack(psi: &[f64], k: usize) -> (Vec<f64>, CMatrix, f64) {
    let thetas = psi[..k].to_vec();
    let mut p = CMatrix::zeros(k, k);
    for i in 0..k {
        p[(i, i)] = C64::new(psi[k + i], 0.0);
    }
    let mut idx = 2 * k;
    for i in 0..k {
        for j in i + 1..k {
            let z = C64::new(psi[idx], psi[idx + 1]);
            p[(i, j)] = z;
            p[(j, i)] = z.conj();
            idx += 2;
        }
    }
    (thetas, p, psi[idx])
}

fn model_covariance(geom: &UlaGeometry, psi: &[f64], k: usize) -> Result<CMatrix> {
    let (thetas, p, sigma2) = unpack(psi, k);
    let a = columns(&thetas.iter().map(|&t| steering(geom, t)).collect::<Vec<_>>());
    Ok(a
        .matmul(&p)?
        .matmul(&a.adjoint())?
        .add(&CMatrix::identity(geom.n_sensors()).scale(sigma2))?)
}

/// Bound obtained by numerically differentiating the expected
/// log-likelihood `-T (ln det R(psi) + tr(R(psi)^-1 R0))` twice with
/// central differences and inverting the resulting Fisher matrix. The
/// source covariance is treated as an unknown Hermitian matrix, the
/// setting of the unconditional bound.
pub fn crlb_fisher_oracle(geom: &UlaGeometry, scene: &SourceScene, snapshots: usize) -> Result<Vec<f64>> {
    check(geom, scene, snapshots)?;
    let k = scene.n_sources();
    let mut psi: Vec<f64> = scene.doas_deg().iter().map(|d| d.to_radians()).collect();
    psi.extend_from_slice(scene.source_powers());
    psi.extend(std::iter::repeat_n(0.0, k * (k - 1)));
    psi.push(scene.noise_power());
    let r0 = model_covariance(geom, &psi, k)?;
    let t = snapshots as f64;
    let loglik = |x: &[f64]| -> Result<f64> {
        let r = model_covariance(geom, x, k)?;
        let (inv, logdet) = hpd_inverse(&r)?;
        Ok(-t * (logdet + inv.matmul(&r0)?.trace().re))
    };
    let m = psi.len();
    let h: Vec<f64> = psi.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let mut fisher = vec![vec![0.0; m]; m];
    let mut x = psi.clone();
    for i in 0..m {
        for j in i..m {
            let mut eval = |si: f64, sj: f64| -> Result<f64> {
                x.copy_from_slice(&psi);
                x[i] += si * h[i];
                x[j] += sj * h[j];
                loglik(&x)
            };
            let second = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?) / (4.0 * h[i] * h[j]);
            fisher[i][j] = -second;
            fisher[j][i] = -second;
        }
    }
    let inv = real_symmetric_inverse(&fisher)?;
    Ok(to_degrees(&(0..k).map(|i| inv[i][i]).collect::<Vec<_>>()))
}

/// Root-mean-square of a per-angle bound, comparable with an RMSE over the same sources.
pub fn rms(bound: &[f64]) -> f64 {
    (bound.iter().map(|b| b * b).sum::<f64>() / bound.len().max(1) as f64).sqrt()
}
