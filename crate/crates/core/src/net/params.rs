use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NetworkConfig;
use crate::error::Result;
use crate::nn::{Activation, Mlp};
use crate::scalar::Real;

/// Shared point MLP plus the optional relation-weight regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct RrcParams<T> {
    pub shared: Mlp<T>,
    pub relation: Option<Mlp<T>>,
}

impl<T: Real> RrcParams<T> {
    fn zeros_like(&self) -> Self {
        Self {
            shared: self.shared.zeros_like(),
            relation: self.relation.as_ref().map(Mlp::zeros_like),
        }
    }
}

/// Every trainable array of the hierarchy and classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub layer1: RrcParams<T>,
    /// Lifts the layer-2 descriptors to `C` channels.
    pub lift2: Mlp<T>,
    pub layer2: RrcParams<T>,
    pub lift3: Mlp<T>,
    /// Layer-3 MLP over the concatenated `2C` features.
    pub fuse3: Mlp<T>,
    pub head: Mlp<T>,
}

impl<T: Real> NetworkParams<T> {
    pub fn init(cfg: &NetworkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = cfg.descriptor_width();
        let c = cfg.channels;
        let relu = Activation::Relu;
        let mut shared1 = vec![d];
        shared1.extend_from_slice(&cfg.layer1_hidden);
        shared1.push(c);
        let layer1 = RrcParams {
            shared: Mlp::init(&shared1, relu, relu, &mut rng),
            relation: cfg.use_relation_weights.then(|| {
                Mlp::init(
                    &[2 * cfg.n1, cfg.relation_hidden, c],
                    relu,
                    Activation::Sigmoid,
                    &mut rng,
                )
            }),
        };
        let lift2 = Mlp::init(&[d, cfg.lift_hidden, c], relu, relu, &mut rng);
        let layer2 = RrcParams {
            shared: Mlp::init(&[2 * c, 2 * c, c], relu, relu, &mut rng),
            relation: cfg.use_relation_weights.then(|| {
                Mlp::init(
                    &[2 * cfg.n2, cfg.relation_hidden, c],
                    relu,
                    Activation::Sigmoid,
                    &mut rng,
                )
            }),
        };
        let lift3 = Mlp::init(&[d, cfg.lift_hidden, c], relu, relu, &mut rng);
        let fuse3 = Mlp::init(&[2 * c, 2 * c, c], relu, relu, &mut rng);
        let head = Mlp::init(
            &[c, cfg.head_hidden, cfg.num_classes],
            relu,
            Activation::Identity,
            &mut rng,
        );
        Ok(Self {
            layer1,
            lift2,
            layer2,
            lift3,
            fuse3,
            head,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layer1: self.layer1.zeros_like(),
            lift2: self.lift2.zeros_like(),
            layer2: self.layer2.zeros_like(),
            lift3: self.lift3.zeros_like(),
            fuse3: self.fuse3.zeros_like(),
            head: self.head.zeros_like(),
        }
    }

    fn blocks(&self) -> Vec<(&'static str, &Mlp<T>)> {
        let mut out = vec![("layer1.shared", &self.layer1.shared)];
        if let Some(r) = &self.layer1.relation {
            out.push(("layer1.relation", r));
        }
        out.push(("layer2.lift", &self.lift2));
        out.push(("layer2.shared", &self.layer2.shared));
        if let Some(r) = &self.layer2.relation {
            out.push(("layer2.relation", r));
        }
        out.push(("layer3.lift", &self.lift3));
        out.push(("layer3.shared", &self.fuse3));
        out.push(("head", &self.head));
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut Mlp<T>> {
        let mut out = vec![&mut self.layer1.shared];
        if let Some(r) = &mut self.layer1.relation {
            out.push(r);
        }
        out.push(&mut self.lift2);
        out.push(&mut self.layer2.shared);
        if let Some(r) = &mut self.layer2.relation {
            out.push(r);
        }
        out.push(&mut self.lift3);
        out.push(&mut self.fuse3);
        out.push(&mut self.head);
        out
    }

    /// `(name, shape, values)` for every array, in a fixed order.
    pub fn named_arrays(&self) -> Vec<(String, Vec<usize>, &[T])> {
        let mut out = Vec::new();
        for (block, mlp) in self.blocks() {
            for (i, layer) in mlp.layers.iter().enumerate() {
                out.push((
                    format!("{block}.{i}.weight"),
                    vec![layer.inputs, layer.outputs],
                    layer.weight.as_slice(),
                ));
                out.push((format!("{block}.{i}.bias"), vec![layer.outputs], layer.bias.as_slice()));
            }
        }
        out
    }

    /// Mutable arrays in the same order as [`NetworkParams::named_arrays`].
    pub fn arrays_mut(&mut self) -> Vec<&mut [T]> {
        self.blocks_mut().into_iter().flat_map(|m| m.arrays_mut()).collect()
    }

    pub fn arrays(&self) -> Vec<&[T]> {
        self.named_arrays().into_iter().map(|(_, _, v)| v).collect()
    }

    pub fn array_sizes(&self) -> Vec<usize> {
        self.arrays().iter().map(|a| a.len()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.array_sizes().iter().sum()
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.arrays_mut().into_iter().zip(other.arrays()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.arrays().iter().all(|a| a.iter().all(|v| v.is_finite()))
    }
}
