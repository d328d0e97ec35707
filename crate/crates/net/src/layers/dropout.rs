use doa_core::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mode;
use crate::error::{domain_err, shape_err, Result};
use crate::tensor::Tensor;

/// Inverted dropout with a fresh generator seeded from `seed`.
pub fn dropout<T: Real>(input: &Tensor<T>, rate: f64, mode: Mode, seed: u64) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    dropout_with_rng(input, rate, mode, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Training mode zeroes each element with probability `rate` and scales the
/// survivors by `1 / (1 - rate)`; the returned mask holds those factors.
/// Evaluation mode (or `rate == 0`) is the identity and returns no mask.
pub fn dropout_with_rng<T: Real, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    if !(0.0..1.0).contains(&rate) {
        return domain_err(format!("dropout rate {rate} outside [0, 1)"));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..input.len())
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect();
    let vals = input.values().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
    Ok((Tensor::new(input.shape().to_vec(), vals)?, Some(mask)))
}

pub fn dropout_backward<T: Real>(upstream: &Tensor<T>, mask: Option<&[T]>) -> Result<Tensor<T>> {
    match mask {
        None => Ok(upstream.clone()),
        Some(m) if m.len() == upstream.len() => {
            let vals = upstream.values().iter().zip(m).map(|(&g, &k)| g * k).collect();
            Tensor::new(upstream.shape().to_vec(), vals)
        }
        Some(_) => shape_err("dropout mask does not match the gradient"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_zero_rate_are_identity() {
        let x = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(dropout(&x, 0.2, Mode::Eval, 1).unwrap().0, x);
        assert_eq!(dropout(&x, 0.0, Mode::Train, 1).unwrap().0, x);
        assert!(dropout(&x, 1.0, Mode::Train, 1).is_err());
    }

    #[test]
    fn zero_fraction_concentrates() {
        let x = Tensor::new(vec![100_000], vec![1.0f64; 100_000]).unwrap();
        let (y, _) = dropout(&x, 0.2, Mode::Train, 9).unwrap();
        let zeros = y.values().iter().filter(|&&v| v == 0.0).count() as f64 / 1e5;
        assert!((zeros - 0.2).abs() < 0.01, "{zeros}");
        assert!(y.values().iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-12));
    }
}
