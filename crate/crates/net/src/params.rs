use doa_core::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::layers::RunningStats;
use crate::spec::{LayerSpec, NetworkSpec};

/// Parameters of one layer. Layers without parameters hold `None`.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerParams<T> {
    None,
    Conv {
        /// `[filter][i][j][channel]`.
        kernels: Vec<T>,
        biases: Vec<T>,
    },
    BatchNorm {
        gain: Vec<T>,
        shift: Vec<T>,
        running: RunningStats<T>,
    },
    Dense {
        /// `[out][in]` row-major.
        weights: Vec<T>,
        biases: Vec<T>,
    },
}

/// Identifies a parameter block inside a layer (also its on-disk tag).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    ConvKernels,
    ConvBiases,
    BnGain,
    BnShift,
    BnRunningMean,
    BnRunningVar,
    DenseWeights,
    DenseBiases,
}

impl BlockKind {
    pub fn tag(self) -> u32 {
        match self {
            BlockKind::ConvKernels => 1,
            BlockKind::ConvBiases => 2,
            BlockKind::BnGain => 3,
            BlockKind::BnShift => 4,
            BlockKind::BnRunningMean => 5,
            BlockKind::BnRunningVar => 6,
            BlockKind::DenseWeights => 7,
            BlockKind::DenseBiases => 8,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            1 => BlockKind::ConvKernels,
            2 => BlockKind::ConvBiases,
            3 => BlockKind::BnGain,
            4 => BlockKind::BnShift,
            5 => BlockKind::BnRunningMean,
            6 => BlockKind::BnRunningVar,
            7 => BlockKind::DenseWeights,
            8 => BlockKind::DenseBiases,
            _ => return None,
        })
    }

    pub fn is_trainable(self) -> bool {
        !matches!(self, BlockKind::BnRunningMean | BlockKind::BnRunningVar)
    }
}

impl<T: Real> LayerParams<T> {
    /// All blocks with their kinds, trainable ones first within a layer.
    pub fn blocks(&self) -> Vec<(BlockKind, &[T])> {
        match self {
            LayerParams::None => vec![],
            LayerParams::Conv { kernels, biases } => {
                vec![(BlockKind::ConvKernels, kernels), (BlockKind::ConvBiases, biases)]
            }
            LayerParams::BatchNorm { gain, shift, running } => vec![
                (BlockKind::BnGain, gain),
                (BlockKind::BnShift, shift),
                (BlockKind::BnRunningMean, &running.mean),
                (BlockKind::BnRunningVar, &running.var),
            ],
            LayerParams::Dense { weights, biases } => {
                vec![(BlockKind::DenseWeights, weights), (BlockKind::DenseBiases, biases)]
            }
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<(BlockKind, &mut Vec<T>)> {
        match self {
            LayerParams::None => vec![],
            LayerParams::Conv { kernels, biases } => {
                vec![(BlockKind::ConvKernels, kernels), (BlockKind::ConvBiases, biases)]
            }
            LayerParams::BatchNorm { gain, shift, running } => vec![
                (BlockKind::BnGain, gain),
                (BlockKind::BnShift, shift),
                (BlockKind::BnRunningMean, &mut running.mean),
                (BlockKind::BnRunningVar, &mut running.var),
            ],
            LayerParams::Dense { weights, biases } => {
                vec![(BlockKind::DenseWeights, weights), (BlockKind::DenseBiases, biases)]
            }
        }
    }

    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        for (_, b) in z.blocks_mut() {
            b.iter_mut().for_each(|v| *v = T::zero());
        }
        z
    }
}

/// Parameters of a whole network, one entry per layer of its spec.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub layers: Vec<LayerParams<T>>,
}

impl<T: Real> ModelParams<T> {
    /// He-normal weights (`std = sqrt(2 / fan_in)`), zero biases, batch-norm
    /// gain 1 and shift 0, running mean 0 and variance 1.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let ins = spec.input_shapes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gaussian = |n: usize, fan_in: usize| -> Vec<T> {
            let std = (2.0 / fan_in as f64).sqrt();
            (0..n)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    T::lit(std * x)
                })
                .collect()
        };
        let layers = spec
            .layers
            .iter()
            .zip(&ins)
            .map(|(layer, input)| match *layer {
                LayerSpec::Conv2d { filters, kernel, .. } => {
                    let fan_in = kernel * kernel * input.channels();
                    LayerParams::Conv {
                        kernels: gaussian(filters * fan_in, fan_in),
                        biases: vec![T::zero(); filters],
                    }
                }
                LayerSpec::Dense { units } => LayerParams::Dense {
                    weights: gaussian(units * input.size(), input.size()),
                    biases: vec![T::zero(); units],
                },
                LayerSpec::BatchNorm => {
                    let c = input.channels();
                    LayerParams::BatchNorm {
                        gain: vec![T::one(); c],
                        shift: vec![T::zero(); c],
                        running: RunningStats::new(c),
                    }
                }
                _ => LayerParams::None,
            })
            .collect();
        Ok(Self { layers })
    }

    /// Correctly shaped parameters with every value zero (batch-norm running
    /// variance included); a target for deserialisation.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let ins = spec.input_shapes()?;
        let layers = spec
            .layers
            .iter()
            .zip(&ins)
            .map(|(layer, input)| match *layer {
                LayerSpec::Conv2d { filters, kernel, .. } => LayerParams::Conv {
                    kernels: vec![T::zero(); filters * kernel * kernel * input.channels()],
                    biases: vec![T::zero(); filters],
                },
                LayerSpec::Dense { units } => LayerParams::Dense {
                    weights: vec![T::zero(); units * input.size()],
                    biases: vec![T::zero(); units],
                },
                LayerSpec::BatchNorm => {
                    let c = input.channels();
                    LayerParams::BatchNorm {
                        gain: vec![T::zero(); c],
                        shift: vec![T::zero(); c],
                        running: RunningStats {
                            mean: vec![T::zero(); c],
                            var: vec![T::zero(); c],
                        },
                    }
                }
                _ => LayerParams::None,
            })
            .collect();
        Ok(Self { layers })
    }

    /// Same structure with every value zero; used for gradients.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(LayerParams::zeroed).collect(),
        }
    }

    /// Trainable blocks in a fixed order (layer, then block).
    pub fn trainable(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| l.blocks())
            .filter(|(k, _)| k.is_trainable())
            .map(|(_, b)| b)
            .collect()
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Vec<T>> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.blocks_mut())
            .filter(|(k, _)| k.is_trainable())
            .map(|(_, b)| b)
            .collect()
    }

    pub fn trainable_count(&self) -> usize {
        self.trainable().iter().map(|b| b.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_matches_closed_form_count() {
        let spec = NetworkSpec::small(8, 30);
        let p = ModelParams::<f64>::init(&spec, 1).unwrap();
        assert_eq!(p.trainable_count(), spec.parameter_count().unwrap());
        assert_eq!(p.layers.len(), spec.layers.len());
    }

    #[test]
    fn init_is_seeded() {
        let spec = NetworkSpec::small(8, 30);
        let a = ModelParams::<f64>::init(&spec, 5).unwrap();
        assert_eq!(a, ModelParams::init(&spec, 5).unwrap());
        assert_ne!(a, ModelParams::init(&spec, 6).unwrap());
    }

    #[test]
    fn tags_round_trip() {
        for t in 1..=8 {
            assert_eq!(BlockKind::from_tag(t).unwrap().tag(), t);
        }
        assert!(BlockKind::from_tag(0).is_none());
    }
}
