use doa_core::Real;

use crate::error::{shape_err, Result};
use crate::tensor::{axpy, dot, Tensor};

#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    /// Row-major `[out][in]`, like the weights.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

fn dims<T: Real>(input: &Tensor<T>, weights: &[T], units: usize) -> Result<(usize, usize)> {
    let &[batch, m_in] = input.shape() else {
        return shape_err(format!("dense layer needs a [batch, features] input, got {:?}", input.shape()));
    };
    if weights.len() != units * m_in {
        return shape_err(format!(
            "{} weights do not form a {units}x{m_in} matrix",
            weights.len()
        ));
    }
    Ok((batch, m_in))
}

/// `y = W x + b` for every row of the batch; `W` is `[units][in]` row-major.
pub fn dense_forward<T: Real>(input: &Tensor<T>, weights: &[T], biases: &[T]) -> Result<Tensor<T>> {
    let units = biases.len();
    let (batch, m_in) = dims(input, weights, units)?;
    let mut out = Vec::with_capacity(batch * units);
    for x in input.values().chunks_exact(m_in.max(1)).take(batch) {
        for (o, b) in biases.iter().enumerate() {
            out.push(dot(&weights[o * m_in..(o + 1) * m_in], x) + *b);
        }
    }
    Tensor::new(vec![batch, units], out)
}

pub fn dense_backward<T: Real>(upstream: &Tensor<T>, input: &Tensor<T>, weights: &[T]) -> Result<DenseGrads<T>> {
    let &[batch, units] = upstream.shape() else {
        return shape_err("dense upstream gradient must be [batch, units]");
    };
    let (b_in, m_in) = dims(input, weights, units)?;
    if b_in != batch {
        return shape_err("dense gradient batch size mismatch");
    }
    let mut dw = vec![T::zero(); weights.len()];
    let mut db = vec![T::zero(); units];
    let mut dx = vec![T::zero(); batch * m_in];
    for (b, (g, x)) in upstream
        .values()
        .chunks_exact(units)
        .zip(input.values().chunks_exact(m_in.max(1)))
        .enumerate()
    {
        let dxb = &mut dx[b * m_in..(b + 1) * m_in];
        for (o, &go) in g.iter().enumerate() {
            if go == T::zero() {
                continue;
            }
            db[o] = db[o] + go;
            axpy(go, x, &mut dw[o * m_in..(o + 1) * m_in]);
            axpy(go, &weights[o * m_in..(o + 1) * m_in], dxb);
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(vec![batch, m_in], dx)?,
        weights: dw,
        biases: db,
    })
}
