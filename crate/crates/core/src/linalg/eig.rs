//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use num_complex::Complex;

use super::matrix::ComplexMatrix;
use crate::error::{domain, DoaError, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a Hermitian matrix, eigenvalues in non-increasing order.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    pub eigenvalues: Vec<T>,
    /// Column `i` is the unit-norm eigenvector paired with `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> EigenDecomposition<T> {
    /// `Q diag(lambda) Q^H`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let q = &self.eigenvectors;
        let n = q.rows();
        ComplexMatrix::from_fn(n, n, |i, j| {
            self.eigenvalues
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (k, &l)| {
                    acc + q[(i, k)] * q[(j, k)].conj() * l
                })
        })
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Rejects non-square input and input whose Hermitian defect exceeds
/// `1e-10 * max |entry|`.
pub fn hermitian_eig<T: Real>(m: &ComplexMatrix<T>) -> Result<EigenDecomposition<T>> {
    if !m.is_square() {
        return domain(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        ));
    }
    if !m.is_hermitian() {
        return domain(format!(
            "matrix is not Hermitian (defect {})",
            m.hermitian_defect()
        ));
    }
    let n = m.rows();
    // Symmetrise so that rounding in the input cannot leak into the diagonal.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex::new(m[(i, i)].re, T::zero())
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5)
        }
    });
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let tol = T::epsilon() * scale;

    let mut converged = n < 2 || scale == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off = off_diagonal_norm(&a);
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(DoaError::Numerical(format!(
            "Hermitian eigensolver did not converge for a {n}x{n} matrix"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Annihilates `a[(p, q)]` with a unitary plane rotation `J`, updating
/// `a <- J^H a J` and `v <- v J`.
fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == T::zero() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Phase that makes the off-diagonal entry real, then a real Jacobi angle.
    let phase = apq / mag;
    let theta = T::lit(0.5) * (mag + mag).atan2(aqq - app);
    let (s, c) = theta.sin_cos();
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * c + y * jqp;
        a[(k, q)] = x * s + y * jqq;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = x * c + y * jqp.conj();
        a[(q, k)] = x * s + y * jqq.conj();
    }
    a[(p, q)] = Complex::new(T::zero(), T::zero());
    a[(q, p)] = Complex::new(T::zero(), T::zero());
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

    for k in 0..v.rows() {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = x * c + y * jqp;
        v[(k, q)] = x * s + y * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    fn orthonormality_defect(q: &ComplexMatrix<f64>) -> f64 {
        let g = q.adjoint_mul(q).unwrap();
        g.sub(&ComplexMatrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = hermitian_eig(&ComplexMatrix::<f64>::identity(4)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 4]);
        assert!(orthonormality_defect(&e.eigenvectors) < 1e-12);
    }

    #[test]
    fn all_ones_is_rank_one() {
        let m = ComplexMatrix::<f64>::from_fn(4, 4, |_, _| Complex::new(1.0, 0.0));
        let e = hermitian_eig(&m).unwrap();
        assert!((e.eigenvalues[0] - 4.0).abs() < 1e-12);
        for &l in &e.eigenvalues[1..] {
            assert!(l.abs() < 1e-12);
        }
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..5 {
            let m = random_hermitian(8, seed);
            let e = hermitian_eig(&m).unwrap();
            let resid = m.sub(&e.reconstruct()).unwrap().frobenius_norm() / m.frobenius_norm();
            assert!(resid < 1e-10, "residual {resid}");
            assert!(orthonormality_defect(&e.eigenvectors) < 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn single_precision_instance() {
        let m = random_hermitian(6, 11);
        let m32 = ComplexMatrix::from_fn(6, 6, |i, j| {
            Complex::new(m[(i, j)].re as f32, m[(i, j)].im as f32)
        });
        let e = hermitian_eig(&m32).unwrap();
        let resid = m32.sub(&e.reconstruct()).unwrap().frobenius_norm() / m32.frobenius_norm();
        assert!(resid < 1e-5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::<f64>::zeros(2, 3)),
            Err(DoaError::Domain(_))
        ));
        let mut m = ComplexMatrix::<f64>::identity(3);
        m[(0, 2)] = Complex::new(0.5, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(DoaError::Domain(_))));
    }
}
