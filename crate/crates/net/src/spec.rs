//! Layer descriptors, shape propagation and parameter counting.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};

/// Number of input channels: real part, imaginary part and phase.
pub const INPUT_CHANNELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d { filters: usize, kernel: usize, stride: usize },
    BatchNorm,
    Relu,
    Flatten,
    Dense { units: usize },
    Dropout { rate: f64 },
    Sigmoid,
}

/// Activation shape of a single example.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Height x width x channels.
    Spatial { h: usize, w: usize, c: usize },
    Flat(usize),
}

impl Shape {
    pub fn size(&self) -> usize {
        match *self {
            Shape::Spatial { h, w, c } => h * w * c,
            Shape::Flat(n) => n,
        }
    }

    /// Size of the trailing (channel / feature) axis.
    pub fn channels(&self) -> usize {
        match *self {
            Shape::Spatial { c, .. } => c,
            Shape::Flat(n) => n,
        }
    }
}

/// `floor((n - kernel) / stride + 1)`, or `None` when the kernel does not fit.
pub fn conv_output_dim(n: usize, kernel: usize, stride: usize) -> Option<usize> {
    if kernel == 0 || stride == 0 || kernel > n {
        None
    } else {
        Some((n - kernel) / stride + 1)
    }
}

/// An ordered layer stack acting on `input_size x input_size x 3` inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_size: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// The canonical stack: four `Conv2d, BatchNorm, ReLU` blocks, flatten,
    /// three `Dense, ReLU, Dropout(0.2)` blocks, then `Dense(2G+1), Sigmoid`.
    /// The first convolution uses `(kernel 3, first_stride)`, the rest
    /// `(kernel 2, stride 1)`.
    pub fn standard(
        input_size: usize,
        grid_points: usize,
        filters: usize,
        first_stride: usize,
        dense: [usize; 3],
    ) -> Self {
        let mut layers = Vec::with_capacity(24);
        for (kernel, stride) in [(3, first_stride), (2, 1), (2, 1), (2, 1)] {
            layers.push(LayerSpec::Conv2d { filters, kernel, stride });
            layers.push(LayerSpec::BatchNorm);
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::Flatten);
        for units in dense {
            layers.push(LayerSpec::Dense { units });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::Dropout { rate: 0.2 });
        }
        layers.push(LayerSpec::Dense { units: grid_points });
        layers.push(LayerSpec::Sigmoid);
        Self { input_size, layers }
    }

    /// Full-size architecture: 16 sensors, 121 grid points, 256 filters,
    /// dense widths 4096/2048/1024.
    pub fn paper() -> Self {
        Self::standard(16, 121, 256, 2, [4096, 2048, 1024])
    }

    /// Desk-scale architecture for `n` sensors and `2g+1` grid points:
    /// 16 filters, dense widths 256/128/64. The first convolution has
    /// stride 1 because stride 2 would collapse an 8x8 input to zero.
    pub fn small(n: usize, g: usize) -> Self {
        Self::standard(n, 2 * g + 1, 16, 1, [256, 128, 64])
    }

    pub fn input_shape(&self) -> Shape {
        Shape::Spatial {
            h: self.input_size,
            w: self.input_size,
            c: INPUT_CHANNELS,
        }
    }

    /// Output shape of every layer, validating the chain on the way.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut cur = self.input_shape();
        let mut out = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            cur = match (*layer, cur) {
                (LayerSpec::Conv2d { filters, kernel, stride }, Shape::Spatial { h, w, .. }) => {
                    if filters == 0 {
                        return shape_err(format!("layer {idx}: convolution with zero filters"));
                    }
                    match (conv_output_dim(h, kernel, stride), conv_output_dim(w, kernel, stride)) {
                        (Some(h), Some(w)) => Shape::Spatial { h, w, c: filters },
                        _ => {
                            return shape_err(format!(
                                "layer {idx}: kernel {kernel} stride {stride} does not fit a {h}x{w} input"
                            ))
                        }
                    }
                }
                (LayerSpec::Conv2d { .. }, Shape::Flat(_)) => {
                    return shape_err(format!("layer {idx}: convolution after flatten"))
                }
                (LayerSpec::Flatten, s) => Shape::Flat(s.size()),
                (LayerSpec::Dense { units }, Shape::Flat(_)) => {
                    if units == 0 {
                        return shape_err(format!("layer {idx}: dense layer with zero units"));
                    }
                    Shape::Flat(units)
                }
                (LayerSpec::Dense { .. }, Shape::Spatial { .. }) => {
                    return shape_err(format!("layer {idx}: dense layer needs a flattened input"))
                }
                (LayerSpec::Dropout { rate }, s) => {
                    if !(0.0..1.0).contains(&rate) {
                        return shape_err(format!("layer {idx}: dropout rate {rate} outside [0, 1)"));
                    }
                    s
                }
                (LayerSpec::BatchNorm | LayerSpec::Relu | LayerSpec::Sigmoid, s) => s,
            };
            out.push(cur);
        }
        Ok(out)
    }

    /// Checks the chain and that it ends in `Dense, Sigmoid`.
    pub fn validate(&self) -> Result<()> {
        self.shapes()?;
        let n = self.layers.len();
        if n < 2
            || !matches!(self.layers[n - 1], LayerSpec::Sigmoid)
            || !matches!(self.layers[n - 2], LayerSpec::Dense { .. })
        {
            return shape_err("network must end with a dense layer followed by a sigmoid");
        }
        Ok(())
    }

    /// Length of the output probability vector.
    pub fn output_len(&self) -> Result<usize> {
        Ok(self.shapes()?.last().map_or(0, Shape::size))
    }

    /// Shape entering each layer.
    pub fn input_shapes(&self) -> Result<Vec<Shape>> {
        let outs = self.shapes()?;
        let mut ins = Vec::with_capacity(outs.len());
        ins.push(self.input_shape());
        ins.extend_from_slice(&outs[..outs.len().saturating_sub(1)]);
        Ok(ins)
    }

    /// Trainable parameters per layer: `k*k*C_in*n_C + n_C` for a convolution,
    /// `M_in*M_out + M_out` for a dense layer and `2*C` (gain and shift) for
    /// batch normalisation. Running statistics are not counted.
    pub fn layer_parameter_counts(&self) -> Result<Vec<usize>> {
        let ins = self.input_shapes()?;
        Ok(self
            .layers
            .iter()
            .zip(&ins)
            .map(|(layer, input)| match *layer {
                LayerSpec::Conv2d { filters, kernel, .. } => {
                    kernel * kernel * input.channels() * filters + filters
                }
                LayerSpec::Dense { units } => input.size() * units + units,
                LayerSpec::BatchNorm => 2 * input.channels(),
                _ => 0,
            })
            .collect())
    }

    pub fn parameter_count(&self) -> Result<usize> {
        Ok(self.layer_parameter_counts()?.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_dimension_chain() {
        let spec = NetworkSpec::paper();
        spec.validate().unwrap();
        assert_eq!(spec.layers.len(), 24);
        let spatial: Vec<usize> = spec
            .shapes()
            .unwrap()
            .iter()
            .filter_map(|s| match s {
                Shape::Spatial { h, .. } => Some(*h),
                _ => None,
            })
            .collect();
        // Each conv block contributes three entries (conv, bn, relu).
        assert_eq!(spatial, vec![7, 7, 7, 6, 6, 6, 5, 5, 5, 4, 4, 4]);
        assert_eq!(spec.shapes().unwrap()[12], Shape::Flat(4096));
        assert_eq!(spec.output_len().unwrap(), 121);
    }

    #[test]
    fn paper_parameter_count() {
        let spec = NetworkSpec::paper();
        let conv = 3 * 3 * 3 * 256 + 256 + 3 * (2 * 2 * 256 * 256 + 256);
        let bn = 4 * 2 * 256;
        let dense = 4096 * 4096 + 4096 + 4096 * 2048 + 2048 + 2048 * 1024 + 1024 + 1024 * 121 + 121;
        assert_eq!(spec.parameter_count().unwrap(), conv + bn + dense);
        assert_eq!(spec.parameter_count().unwrap(), 28_190_585);
    }

    #[test]
    fn small_profile_is_valid() {
        let spec = NetworkSpec::small(8, 30);
        spec.validate().unwrap();
        assert_eq!(spec.shapes().unwrap()[12], Shape::Flat(3 * 3 * 16));
        assert_eq!(spec.output_len().unwrap(), 61);
        // Stride 2 on an 8x8 input runs out of pixels.
        let strided = NetworkSpec::standard(8, 61, 16, 2, [256, 128, 64]);
        assert!(strided.validate().is_err());
    }

    #[test]
    fn conv_dims() {
        assert_eq!(conv_output_dim(16, 3, 2), Some(7));
        assert_eq!(conv_output_dim(2, 3, 1), None);
        assert_eq!(conv_output_dim(5, 5, 3), Some(1));
    }

    #[test]
    fn rejects_bad_tails() {
        let mut spec = NetworkSpec::small(8, 30);
        spec.layers.pop();
        assert!(spec.validate().is_err());
    }
}
