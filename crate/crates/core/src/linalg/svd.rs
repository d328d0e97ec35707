//! Thin complex SVD by one-sided (Hestenes) Jacobi orthogonalisation.

use num_complex::Complex;

use super::matrix::{inner, norm2, ComplexMatrix};
use crate::error::{domain, DoaError, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 60;

/// `Y = U diag(singular_values) V^H` with `k = min(rows, cols)` columns in `U` and `V`.
#[derive(Clone, Debug)]
pub struct SvdResult<T> {
    pub u: ComplexMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: ComplexMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    /// Number of singular values above `1e-10 * max singular value`.
    pub fn rank(&self) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or_else(T::zero);
        let tol = T::lit(1e-10) * smax;
        self.singular_values.iter().filter(|&&s| s > tol && s > T::zero()).count()
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let k = self.singular_values.len();
        ComplexMatrix::from_fn(self.u.rows(), self.v.rows(), |i, j| {
            (0..k).fold(Complex::new(T::zero(), T::zero()), |acc, l| {
                acc + self.u[(i, l)] * self.v[(j, l)].conj() * self.singular_values[l]
            })
        })
    }
}

pub fn complex_svd<T: Real>(y: &ComplexMatrix<T>) -> Result<SvdResult<T>> {
    if y.rows() == 0 || y.cols() == 0 {
        return domain("SVD of an empty matrix");
    }
    if y.rows() >= y.cols() {
        tall_svd(y)
    } else {
        // Y^H = U' S V'^H  =>  Y = V' S U'^H
        let t = tall_svd(&y.adjoint())?;
        Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

fn tall_svd<T: Real>(y: &ComplexMatrix<T>) -> Result<SvdResult<T>> {
    let (m, n) = (y.rows(), y.cols());
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| y.column(j)).collect();
    let mut v: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex::new(T::zero(), T::zero()); n];
            e[j] = Complex::new(T::one(), T::zero());
            e
        })
        .collect();
    let eps = T::epsilon();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norm2(&cols[i]).powi(2);
                let beta = norm2(&cols[j]).powi(2);
                let gamma = inner(&cols[i], &cols[j]);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                rotate_pair(&mut cols, i, j, c, s, pc);
                rotate_pair(&mut v, i, j, c, s, pc);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DoaError::Numerical(format!(
            "one-sided Jacobi SVD did not converge for a {m}x{n} matrix"
        )));
    }

    let norms: Vec<T> = cols.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));
    let singular_values: Vec<T> = order.iter().map(|&i| norms[i]).collect();
    let smax = singular_values[0];
    let tiny = smax * eps * T::from_count(m.max(n));

    let mut u_cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (slot, &i) in order.iter().enumerate() {
        if norms[i] > tiny && norms[i] > T::zero() {
            u_cols.push(cols[i].iter().map(|z| z / norms[i]).collect());
        } else {
            u_cols.push(vec![Complex::new(T::zero(), T::zero()); m]);
            pending.push(slot);
        }
    }
    complete_basis(&mut u_cols, &pending, m);

    let u = ComplexMatrix::from_columns(&u_cols)?;
    let v_sorted: Vec<Vec<Complex<T>>> = order.iter().map(|&i| v[i].clone()).collect();
    let v = ComplexMatrix::from_columns(&v_sorted)?;
    Ok(SvdResult {
        u,
        singular_values,
        v,
    })
}

fn rotate_pair<T: Real>(
    vecs: &mut [Vec<Complex<T>>],
    i: usize,
    j: usize,
    c: T,
    s: T,
    pc: Complex<T>,
) {
    let (lo, hi) = vecs.split_at_mut(j);
    let (a, b) = (&mut lo[i], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let yp = *y * pc;
        let nx = *x * c - yp * s;
        let ny = *x * s + yp * c;
        *x = nx;
        *y = ny;
    }
}

/// Fills the `pending` columns with unit vectors orthogonal to all others.
fn complete_basis<T: Real>(cols: &mut [Vec<Complex<T>>], pending: &[usize], m: usize) {
    let mut candidate = 0;
    for &slot in pending {
        while candidate < m {
            let mut e = vec![Complex::new(T::zero(), T::zero()); m];
            e[candidate] = Complex::new(T::one(), T::zero());
            candidate += 1;
            for _ in 0..2 {
                for (k, col) in cols.iter().enumerate() {
                    if k == slot || norm2(col) == T::zero() {
                        continue;
                    }
                    let proj = inner(col, &e);
                    for (ei, ci) in e.iter_mut().zip(col) {
                        *ei = *ei - *ci * proj;
                    }
                }
            }
            let nrm = norm2(&e);
            if nrm > T::lit(0.5) {
                cols[slot] = e.iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
}
