use std::f64::consts::PI;

use super::music::noise_subspace;
use super::peaks::EstimateSet;
use crate::array::UlaGeometry;
use crate::error::{domain, DoaError, Result};
use crate::linalg::polynomial_roots;
use crate::{CMatrix, C64};

const ON_CIRCLE_SLACK: f64 = 1e-9;

/// Ascending coefficients of `z^(N-1) f(z)`, where `f(z) = sum_l c_l z^l` and
/// `c_l` sums the entries `C[m][n]` of `C = Qe Qe^H` with `m - n = l`.
///
/// With this indexing `f(e^{-j psi}) = a^H C a` for `a = a(theta)` and
/// `psi = 2 pi (d/lambda) sin(theta)`, so a unit-circle root `z` maps back
/// through `theta = -asin(arg(z) / (2 pi d/lambda))`.
pub fn root_music_polynomial(r: &CMatrix, k: usize) -> Result<Vec<C64>> {
    let qe = noise_subspace(r, k)?;
    let c = qe.matmul(&qe.adjoint())?;
    let n = c.rows();
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n - 1];
    for m in 0..n {
        for col in 0..n {
            // l = m - col ranges over -(N-1)..=(N-1).
            coeffs[m + n - 1 - col] += c[(m, col)];
        }
    }
    Ok(coeffs)
}

/// Root-MUSIC: roots of the noise-subspace polynomial closest to the unit
/// circle, mapped back to angles.
pub fn root_music(r: &CMatrix, k: usize, geom: &UlaGeometry) -> Result<EstimateSet> {
    if geom.spacing_ratio() > 0.5 {
        return domain(format!(
            "root-MUSIC needs spacing <= lambda/2 for an unambiguous arcsine, got {}",
            geom.spacing_ratio()
        ));
    }
    if r.rows() != geom.n_sensors() {
        return domain("covariance size does not match the array");
    }
    let coeffs = root_music_polynomial(r, k)?;
    let roots = polynomial_roots(&coeffs)?.roots;

    let mut inside = inner_representatives(&roots);
    if inside.len() < k {
        inside = roots
            .iter()
            .copied()
            .filter(|z| z.norm() <= 1.0 + ON_CIRCLE_SLACK)
            .collect();
    }
    if inside.len() < k {
        return Err(DoaError::Estimator(format!(
            "only {} roots on or inside the unit circle, {k} needed",
            inside.len()
        )));
    }
    // Closest to the circle first; ties toward larger modulus, then smaller phase.
    inside.sort_by(|a, b| {
        let da = (1.0 - a.norm()).abs();
        let db = (1.0 - b.norm()).abs();
        da.total_cmp(&db)
            .then(b.norm().total_cmp(&a.norm()))
            .then(a.arg().total_cmp(&b.arg()))
    });
    let scale = 2.0 * PI * geom.spacing_ratio();
    let angles = inside[..k]
        .iter()
        .map(|z| -(z.arg() / scale).clamp(-1.0, 1.0).asin().to_degrees())
        .collect();
    Ok(EstimateSet::new(angles))
}

/// One root per `z <-> 1/conj(z)` pair, the one of smaller modulus.
///
/// Pairs on the unit circle are double roots in exact arithmetic and may
/// land on the same side of the circle after rounding, so pairing is done
/// by nearest mirror image rather than by testing `|z| < 1` root by root.
/// Such a representative can sit a hair outside the circle and is still
/// returned; it is the inside root of its pair in exact arithmetic.
fn inner_representatives(roots: &[C64]) -> Vec<C64> {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| roots[a].norm().total_cmp(&roots[b].norm()));
    let mut paired = vec![false; roots.len()];
    let mut kept = Vec::with_capacity(roots.len() / 2);
    for &i in &order {
        if paired[i] {
            continue;
        }
        paired[i] = true;
        let z = roots[i];
        let partner = if z.norm() > f64::MIN_POSITIVE {
            let mirror = C64::new(1.0, 0.0) / z.conj();
            order
                .iter()
                .copied()
                .filter(|&j| !paired[j])
                .min_by(|&a, &b| (roots[a] - mirror).norm().total_cmp(&(roots[b] - mirror).norm()))
        } else {
            order.iter().rev().copied().find(|&j| !paired[j])
        };
        if let Some(j) = partner {
            paired[j] = true;
        }
        kept.push(z);
    }
    kept
}
