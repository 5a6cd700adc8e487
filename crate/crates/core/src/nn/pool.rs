use super::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Winning neighbor slot for every `(center, channel)` of a max pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    pub k: usize,
    pub channels: usize,
    pub argmax: Vec<usize>,
}

/// Max over the neighbor axis of an `N×K×C` tensor. Ties go to the smallest
/// neighbor slot.
pub fn max_pool_neighbors<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolIndices)> {
    let shape = x.shape();
    if shape.len() != 3 || shape[1] == 0 {
        return Err(Error::shape(format!(
            "max pool expects N×K×C with K ≥ 1, got {shape:?}"
        )));
    }
    let (n, k, c) = (shape[0], shape[1], shape[2]);
    let data = x.data();
    let mut out = vec![T::neg_infinity(); n * c];
    let mut argmax = vec![0usize; n * c];
    for i in 0..n {
        for j in 0..k {
            let row = &data[(i * k + j) * c..(i * k + j + 1) * c];
            for (ch, &v) in row.iter().enumerate() {
                let slot = i * c + ch;
                if j == 0 || v > out[slot] {
                    out[slot] = v;
                    argmax[slot] = j;
                }
            }
        }
    }
    Ok((Tensor::new(vec![n, c], out)?, PoolIndices { k, channels: c, argmax }))
}

/// Routes an `N×C` gradient back to the winning slots of an `N×K×C` input.
pub fn max_pool_backward<T: Real>(grad: &Tensor<T>, idx: &PoolIndices) -> Result<Tensor<T>> {
    if grad.data().len() != idx.argmax.len() {
        return Err(Error::shape("pool gradient does not match recorded indices"));
    }
    let n = idx.argmax.len() / idx.channels.max(1);
    let (k, c) = (idx.k, idx.channels);
    let mut out = vec![T::zero(); n * k * c];
    for (slot, (&g, &j)) in grad.data().iter().zip(&idx.argmax).enumerate() {
        let (i, ch) = (slot / c, slot % c);
        out[(i * k + j) * c + ch] = g;
    }
    Tensor::new(vec![n, k, c], out)
}
