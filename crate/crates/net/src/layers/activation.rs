use doa_core::Real;

use crate::error::{shape_err, Result};
use crate::tensor::Tensor;

pub fn relu_forward<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    // NaN passes through so divergence is not masked.
    input.map(|v| if v > T::zero() || v.is_nan() { v } else { T::zero() })
}

/// Passes the gradient where the forward input was strictly positive.
pub fn relu_backward<T: Real>(upstream: &Tensor<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    if upstream.shape() != input.shape() {
        return shape_err("relu gradient shape mismatch");
    }
    let vals = upstream
        .values()
        .iter()
        .zip(input.values())
        .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape().to_vec(), vals)
}

/// Logistic function evaluated without overflow for either sign.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid_forward<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    input.map(sigmoid)
}

/// Gradient through the sigmoid given its forward output.
pub fn sigmoid_backward<T: Real>(upstream: &Tensor<T>, output: &Tensor<T>) -> Result<Tensor<T>> {
    if upstream.shape() != output.shape() {
        return shape_err("sigmoid gradient shape mismatch");
    }
    let vals = upstream
        .values()
        .iter()
        .zip(output.values())
        .map(|(&g, &s)| g * s * (T::one() - s))
        .collect();
    Tensor::new(output.shape().to_vec(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_values() {
        let x = Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu_forward(&x).values(), &[0.0, 0.0, 2.0]);
        let g = relu_backward(&Tensor::new(vec![3], vec![1.0; 3]).unwrap(), &x).unwrap();
        assert_eq!(g.values(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn sigmoid_saturates_cleanly() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((1.0 - sigmoid(40.0f64)).abs() < 1e-15);
        assert!(sigmoid(-40.0f64) < 1e-15 && sigmoid(-40.0f64) > 0.0);
        assert!(sigmoid(-800.0f64) >= 0.0 && sigmoid(800.0f64) <= 1.0);
    }
}
