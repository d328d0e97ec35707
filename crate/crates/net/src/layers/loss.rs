use doa_core::Real;

use super::activation::sigmoid;
use crate::error::{shape_err, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Binary cross-entropy summed over the label entries, evaluated on
/// probabilities. Returns the loss and the gradient with respect to the
/// pre-sigmoid logits, `p - z`.
pub fn bce_loss<T: Real>(p: &[T], z: &[T]) -> Result<(T, Vec<T>)> {
    if p.len() != z.len() {
        return shape_err(format!("{} probabilities for {} labels", p.len(), z.len()));
    }
    let lo = T::lit(PROB_CLAMP);
    let hi = T::one() - lo;
    let mut loss = T::zero();
    for (&pi, &zi) in p.iter().zip(z) {
        let pc = pi.max(lo).min(hi);
        loss = loss - (zi * pc.ln() + (T::one() - zi) * (T::one() - pc).ln());
    }
    let grad = p.iter().zip(z).map(|(&pi, &zi)| pi - zi).collect();
    Ok((loss, grad))
}

/// Binary cross-entropy summed over entries, computed from logits as
/// `max(x, 0) - x z + ln(1 + e^{-|x|})`. Returns the loss and `sigmoid(x) - z`.
pub fn bce_with_logits<T: Real>(logits: &[T], z: &[T]) -> Result<(T, Vec<T>)> {
    if logits.len() != z.len() {
        return shape_err(format!("{} logits for {} labels", logits.len(), z.len()));
    }
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(z.len());
    for (&x, &zi) in logits.iter().zip(z) {
        loss = loss + x.max(T::zero()) - x * zi + (-x.abs()).exp().ln_1p();
        grad.push(sigmoid(x) - zi);
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let z = [1.0, 0.0, 0.0, 1.0];
        let (l, _) = bce_loss(&z, &z).unwrap();
        assert!(l <= 4.0 * 1e-6);
    }

    #[test]
    fn half_everywhere_is_ln2_per_entry() {
        let (l, _) = bce_loss(&[0.5; 61], &[0.0; 61]).unwrap();
        assert!((l - 61.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let (l, _) = bce_with_logits(&[0.0; 5], &[1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((l - 5.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn logits_form_matches_probability_form() {
        let x = [-3.0, -0.2, 0.0, 1.5, 6.0];
        let z = [0.0, 1.0, 0.0, 1.0, 1.0];
        let p: Vec<f64> = x.iter().map(|&v| sigmoid(v)).collect();
        let (a, ga) = bce_loss(&p, &z).unwrap();
        let (b, gb) = bce_with_logits(&x, &z).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert_eq!(ga, gb);
    }
}
