use doa_core::Real;

use crate::error::{shape_err, Result};
use crate::spec::conv_output_dim;
use crate::tensor::{axpy, dot, Tensor};

/// Gradients of a convolution layer.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    /// Same layout as the kernels: `[filter][i][j][channel]`.
    pub kernels: Vec<T>,
    pub biases: Vec<T>,
}

struct Geometry {
    batch: usize,
    h: usize,
    w: usize,
    c: usize,
    ho: usize,
    wo: usize,
    filters: usize,
    kernel: usize,
    stride: usize,
}

impl Geometry {
    fn new<T: Real>(input: &Tensor<T>, kernels: &[T], biases: &[T], kernel: usize, stride: usize) -> Result<Self> {
        let &[batch, h, w, c] = input.shape() else {
            return shape_err(format!("convolution needs a [batch, h, w, c] input, got {:?}", input.shape()));
        };
        let filters = biases.len();
        if kernels.len() != filters * kernel * kernel * c {
            return shape_err(format!(
                "{} kernel values for {filters} filters of {kernel}x{kernel}x{c}",
                kernels.len()
            ));
        }
        let (Some(ho), Some(wo)) = (conv_output_dim(h, kernel, stride), conv_output_dim(w, kernel, stride)) else {
            return shape_err(format!("kernel {kernel} with stride {stride} does not fit a {h}x{w} input"));
        };
        Ok(Self { batch, h, w, c, ho, wo, filters, kernel, stride })
    }

    fn patch_len(&self) -> usize {
        self.kernel * self.kernel * self.c
    }

    /// Copies the receptive field of output pixel `(oy, ox)` into `patch`,
    /// ordered `[i][j][channel]` like the kernels.
    fn gather<T: Real>(&self, x: &[T], b: usize, oy: usize, ox: usize, patch: &mut [T]) {
        let row = self.kernel * self.c;
        for i in 0..self.kernel {
            let y = oy * self.stride + i;
            let start = ((b * self.h + y) * self.w + ox * self.stride) * self.c;
            patch[i * row..(i + 1) * row].copy_from_slice(&x[start..start + row]);
        }
    }

    fn scatter_add<T: Real>(&self, dx: &mut [T], b: usize, oy: usize, ox: usize, patch: &[T]) {
        let row = self.kernel * self.c;
        for i in 0..self.kernel {
            let y = oy * self.stride + i;
            let start = ((b * self.h + y) * self.w + ox * self.stride) * self.c;
            for (d, &p) in dx[start..start + row].iter_mut().zip(&patch[i * row..(i + 1) * row]) {
                *d = *d + p;
            }
        }
    }
}

/// Valid (unpadded) cross-correlation:
/// `out[m][n][q] = b[q] + sum_{i,j,k} K[q][i][j][k] x[m*s+i][n*s+j][k]`.
pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    kernels: &[T],
    biases: &[T],
    kernel: usize,
    stride: usize,
) -> Result<Tensor<T>> {
    let g = Geometry::new(input, kernels, biases, kernel, stride)?;
    let pl = g.patch_len();
    let mut out = vec![T::zero(); g.batch * g.ho * g.wo * g.filters];
    let mut patch = vec![T::zero(); pl];
    let x = input.values();
    for b in 0..g.batch {
        for oy in 0..g.ho {
            for ox in 0..g.wo {
                g.gather(x, b, oy, ox, &mut patch);
                let base = ((b * g.ho + oy) * g.wo + ox) * g.filters;
                for (q, o) in out[base..base + g.filters].iter_mut().enumerate() {
                    *o = dot(&patch, &kernels[q * pl..(q + 1) * pl]) + biases[q];
                }
            }
        }
    }
    Tensor::new(vec![g.batch, g.ho, g.wo, g.filters], out)
}

pub fn conv2d_backward<T: Real>(
    upstream: &Tensor<T>,
    input: &Tensor<T>,
    kernels: &[T],
    filters: usize,
    kernel: usize,
    stride: usize,
) -> Result<ConvGrads<T>> {
    let zero_bias = vec![T::zero(); filters];
    let g = Geometry::new(input, kernels, &zero_bias, kernel, stride)?;
    if upstream.shape() != [g.batch, g.ho, g.wo, g.filters] {
        return shape_err(format!(
            "upstream gradient {:?} does not match convolution output {:?}",
            upstream.shape(),
            [g.batch, g.ho, g.wo, g.filters]
        ));
    }
    let pl = g.patch_len();
    let x = input.values();
    let up = upstream.values();
    let mut dk = vec![T::zero(); kernels.len()];
    let mut db = vec![T::zero(); filters];
    let mut dx = vec![T::zero(); x.len()];
    let mut patch = vec![T::zero(); pl];
    let mut dpatch = vec![T::zero(); pl];
    for b in 0..g.batch {
        for oy in 0..g.ho {
            for ox in 0..g.wo {
                g.gather(x, b, oy, ox, &mut patch);
                dpatch.iter_mut().for_each(|v| *v = T::zero());
                let base = ((b * g.ho + oy) * g.wo + ox) * g.filters;
                for q in 0..filters {
                    let gq = up[base + q];
                    if gq == T::zero() {
                        continue;
                    }
                    db[q] = db[q] + gq;
                    axpy(gq, &patch, &mut dk[q * pl..(q + 1) * pl]);
                    axpy(gq, &kernels[q * pl..(q + 1) * pl], &mut dpatch);
                }
                g.scatter_add(&mut dx, b, oy, ox, &dpatch);
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), dx)?,
        kernels: dk,
        biases: db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kernel_is_identity() {
        let x = Tensor::new(vec![1, 3, 3, 1], (0..9).map(f64::from).collect()).unwrap();
        let y = conv2d_forward(&x, &[1.0], &[0.0], 1, 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn output_dims_follow_dimension_rule() {
        let x = Tensor::<f64>::zeros(vec![2, 16, 16, 3]);
        let y = conv2d_forward(&x, &vec![0.0; 4 * 27], &[0.0; 4], 3, 2).unwrap();
        assert_eq!(y.shape(), &[2, 7, 7, 4]);
        assert!(conv2d_forward(&x, &vec![0.0; 17 * 17 * 3], &[0.0], 17, 1).is_err());
    }

    #[test]
    fn single_pixel_gradient_is_the_patch() {
        let x = Tensor::new(vec![1, 3, 3, 1], (1..=9).map(f64::from).collect()).unwrap();
        let k = [0.5, -1.0, 2.0, 0.25];
        let mut up = Tensor::zeros(vec![1, 2, 2, 1]);
        up.values_mut()[3] = 1.0; // output pixel (1, 1)
        let g = conv2d_backward(&up, &x, &k, 1, 2, 1).unwrap();
        assert_eq!(g.kernels, vec![5.0, 6.0, 8.0, 9.0]);
        assert_eq!(g.biases, vec![1.0]);
        let zero = conv2d_backward(&Tensor::zeros(vec![1, 2, 2, 1]), &x, &k, 1, 2, 1).unwrap();
        assert!(zero.kernels.iter().chain(zero.input.values()).all(|&v| v == 0.0));
    }
}
