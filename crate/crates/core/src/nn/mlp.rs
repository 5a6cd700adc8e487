use rand::Rng;

use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(T::zero()),
            Activation::Sigmoid => T::one() / (T::one() + (-v).exp()),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative_from_output<T: Real>(self, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

/// Fully connected layer, `weight` stored `in × out` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Real, R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Vec<T> {
    let limit = (6.0 / (inputs + outputs) as f64).sqrt();
    (0..inputs * outputs)
        .map(|_| T::lit(rng.random_range(-limit..=limit)))
        .collect()
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            inputs,
            outputs,
            weight: glorot_uniform(inputs, outputs, rng),
            bias: vec![T::zero(); outputs],
        }
    }

    /// `rows × in` → `rows × out`, activation applied.
    fn forward_rows(&self, x: &[T], rows: usize, act: Activation) -> Vec<T> {
        let (n_in, n_out) = (self.inputs, self.outputs);
        let mut out = Vec::with_capacity(rows * n_out);
        for r in 0..rows {
            let xr = &x[r * n_in..(r + 1) * n_in];
            let start = out.len();
            out.extend_from_slice(&self.bias);
            let acc = &mut out[start..];
            for (k, &xv) in xr.iter().enumerate() {
                if xv == T::zero() {
                    continue;
                }
                let wk = &self.weight[k * n_out..(k + 1) * n_out];
                for (o, &w) in acc.iter_mut().zip(wk) {
                    *o = *o + xv * w;
                }
            }
            for o in acc.iter_mut() {
                *o = act.apply(*o);
            }
        }
        out
    }
}

/// Stack of dense layers applied pointwise along the last axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Per-layer inputs and outputs recorded by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    leading: Vec<usize>,
    rows: usize,
    /// `activations[0]` is the input, `activations[i+1]` the output of layer i.
    activations: Vec<Vec<T>>,
}

impl<T: Real> Mlp<T> {
    /// Glorot-initialized stack through `widths` (input first).
    pub fn init<R: Rng>(widths: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Self {
        let layers = widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Self { layers, hidden, output }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
            hidden: self.hidden,
            output: self.output,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.last_dim() != self.input_width() {
            return Err(Error::shape(format!(
                "MLP expects last dimension {}, got {}",
                self.input_width(),
                x.last_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward_cached(x).map(|(y, _)| y)
    }

    pub fn forward_cached(&self, x: &Tensor<T>) -> Result<(Tensor<T>, MlpCache<T>)> {
        self.check_input(x)?;
        let rows = x.rows();
        let leading = x.shape()[..x.shape().len() - 1].to_vec();
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.data().to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let next = layer.forward_rows(activations.last().unwrap(), rows, self.activation(i));
            activations.push(next);
        }
        let mut shape = leading.clone();
        shape.push(self.output_width());
        let y = Tensor::new(shape, activations.last().unwrap().clone())?;
        Ok((
            y,
            MlpCache {
                leading,
                rows,
                activations,
            },
        ))
    }

    /// Reverse pass. Parameter gradients are accumulated into `grads`; the
    /// gradient w.r.t. the input is returned when `want_input` is set.
    pub fn backward(
        &self,
        cache: &MlpCache<T>,
        grad_out: &Tensor<T>,
        grads: &mut Mlp<T>,
        want_input: bool,
    ) -> Result<Option<Tensor<T>>> {
        if grad_out.data().len() != cache.rows * self.output_width() {
            return Err(Error::shape("upstream gradient does not match MLP output"));
        }
        let rows = cache.rows;
        let mut g = grad_out.data().to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = self.activation(i);
            let y = &cache.activations[i + 1];
            for (gv, &yv) in g.iter_mut().zip(y) {
                *gv = *gv * act.derivative_from_output(yv);
            }
            let x = &cache.activations[i];
            let (n_in, n_out) = (layer.inputs, layer.outputs);
            let acc = &mut grads.layers[i];
            for r in 0..rows {
                let gr = &g[r * n_out..(r + 1) * n_out];
                for (b, &gv) in acc.bias.iter_mut().zip(gr) {
                    *b = *b + gv;
                }
                let xr = &x[r * n_in..(r + 1) * n_in];
                for (k, &xv) in xr.iter().enumerate() {
                    if xv == T::zero() {
                        continue;
                    }
                    let wk = &mut acc.weight[k * n_out..(k + 1) * n_out];
                    for (w, &gv) in wk.iter_mut().zip(gr) {
                        *w = *w + xv * gv;
                    }
                }
            }
            if i == 0 && !want_input {
                return Ok(None);
            }
            let mut gin = vec![T::zero(); rows * n_in];
            for r in 0..rows {
                let gr = &g[r * n_out..(r + 1) * n_out];
                let dst = &mut gin[r * n_in..(r + 1) * n_in];
                for (k, d) in dst.iter_mut().enumerate() {
                    let wk = &layer.weight[k * n_out..(k + 1) * n_out];
                    *d = wk.iter().zip(gr).map(|(&w, &gv)| w * gv).sum();
                }
            }
            g = gin;
        }
        let mut shape = cache.leading.clone();
        shape.push(self.input_width());
        Ok(Some(Tensor::new(shape, g)?))
    }

    /// Parameter arrays in a fixed order: per layer, weight then bias.
    pub fn arrays(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}
