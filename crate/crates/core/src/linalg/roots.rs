//! Polynomial roots as eigenvalues of the companion matrix.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{domain, DoaError, Result};
use crate::scalar::Real;

/// Roots of a polynomial, repeated according to multiplicity.
#[derive(Clone, Debug, Default)]
pub struct RootSet<T> {
    pub roots: Vec<Complex<T>>,
}

/// Evaluates `sum_k coeffs[k] z^k` by Horner's rule.
pub fn evaluate<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    coeffs.iter().rev().fold(Complex::zero(), |acc, c| acc * z + c)
}

/// Roots of the polynomial with coefficients in ascending powers.
///
/// Trailing coefficients below `1e-12 * max |coeff|` are trimmed before the
/// degree is determined.
pub fn polynomial_roots<T: Real>(coeffs: &[Complex<T>]) -> Result<RootSet<T>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return domain("zero polynomial has no well-defined roots");
    }
    let cutoff = T::lit(1e-12) * scale;
    let degree = coeffs
        .iter()
        .rposition(|c| c.norm() > cutoff)
        .expect("non-zero coefficient exists");
    if degree == 0 {
        return Ok(RootSet::default());
    }
    let coeffs = &coeffs[..=degree];
    let lead = coeffs[degree];

    // Companion matrix in upper Hessenberg form: first row holds -a_{n-1}..-a_0.
    let n = degree;
    let mut h = vec![Complex::zero(); n * n];
    for j in 0..n {
        h[j] = -coeffs[n - 1 - j] / lead;
    }
    for i in 1..n {
        h[i * n + i - 1] = Complex::new(T::one(), T::zero());
    }
    balance(&mut h, n);
    let mut roots = hessenberg_eigenvalues(&mut h, n)?;
    for r in &mut roots {
        *r = polish(coeffs, *r);
    }
    Ok(RootSet { roots })
}

/// A few Newton steps on the original coefficients, kept only while they
/// reduce the residual.
fn polish<T: Real>(coeffs: &[Complex<T>], mut z: Complex<T>) -> Complex<T> {
    let deriv: Vec<Complex<T>> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * T::from_count(k))
        .collect();
    let mut best = evaluate(coeffs, z).norm();
    for _ in 0..3 {
        let d = evaluate(&deriv, z);
        if d.is_zero() {
            break;
        }
        let cand = z - evaluate(coeffs, z) / d;
        let r = evaluate(coeffs, cand).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = cand;
    }
    z
}

/// Diagonal similarity scaling by powers of two; preserves Hessenberg form.
fn balance<T: Real>(h: &mut [Complex<T>], n: usize) {
    let radix = T::lit(2.0);
    let l1 = |z: Complex<T>| z.re.abs() + z.im.abs();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + l1(h[j * n + i]);
                    r = r + l1(h[i * n + j]);
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            while c < g {
                f = f * radix;
                c = c * radix * radix;
            }
            g = r * radix;
            while c > g {
                f = f / radix;
                c = c / (radix * radix);
            }
            if (c + r) / f < T::lit(0.95) * s {
                done = false;
                let inv = T::one() / f;
                for j in 0..n {
                    h[i * n + j] = h[i * n + j] * inv;
                }
                for j in 0..n {
                    h[j * n + i] = h[j * n + i] * f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift QR with deflation.
fn hessenberg_eigenvalues<T: Real>(h: &mut [Complex<T>], n: usize) -> Result<Vec<Complex<T>>> {
    let at = |i: usize, j: usize| i * n + j;
    let eps = T::epsilon();
    let hnorm = h.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let mut eig = vec![Complex::zero(); n];
    let mut hi = n;
    let mut iter = 0usize;
    let max_iter = 60 * n.max(1);

    while hi > 0 {
        if hi == 1 {
            eig[0] = h[at(0, 0)];
            break;
        }
        // Locate the start of the trailing unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let mut s = h[at(lo - 1, lo - 1)].norm() + h[at(lo, lo)].norm();
            if s == T::zero() {
                s = hnorm;
            }
            if h[at(lo, lo - 1)].norm() <= eps * s {
                h[at(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            eig[hi - 1] = h[at(hi - 1, hi - 1)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter {
            return Err(DoaError::Numerical(format!(
                "Hessenberg QR did not converge for a {n}x{n} companion matrix"
            )));
        }

        let a = h[at(hi - 2, hi - 2)];
        let b = h[at(hi - 2, hi - 1)];
        let c = h[at(hi - 1, hi - 2)];
        let d = h[at(hi - 1, hi - 1)];
        let shift = if iter % 11 == 0 {
            // Exceptional shift to break cycles.
            d + Complex::new(c.norm() * T::lit(0.75), c.norm() * T::lit(0.3))
        } else {
            let half = T::lit(0.5);
            let mid = (a + d) * half;
            let disc = ((a - d) * (a - d) * T::lit(0.25) + b * c).sqrt();
            let (m1, m2) = (mid + disc, mid - disc);
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };

        for k in lo..hi {
            h[at(k, k)] = h[at(k, k)] - shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo - 1);
        for k in lo..hi - 1 {
            let x = h[at(k, k)];
            let y = h[at(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == T::zero() {
                (T::one(), Complex::zero())
            } else if x.norm() == T::zero() {
                (T::zero(), Complex::new(T::one(), T::zero()))
            } else {
                let xn = x.norm();
                (xn / r, (x / xn) * y.conj() / r)
            };
            for j in k..hi {
                let p = h[at(k, j)];
                let q = h[at(k + 1, j)];
                h[at(k, j)] = p * cs + sn * q;
                h[at(k + 1, j)] = q * cs - sn.conj() * p;
            }
            rotations.push((cs, sn));
        }
        for (off, &(cs, sn)) in rotations.iter().enumerate() {
            let k = lo + off;
            let top = (k + 2).min(hi - 1);
            for i in lo..=top {
                let p = h[at(i, k)];
                let q = h[at(i, k + 1)];
                h[at(i, k)] = p * cs + q * sn.conj();
                h[at(i, k + 1)] = q * cs - p * sn;
            }
        }
        for k in lo..hi {
            h[at(k, k)] = h[at(k, k)] + shift;
        }
    }
    Ok(eig)
}
