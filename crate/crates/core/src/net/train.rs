use super::{hierarchical_forward, CloudGeometry, NetworkConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::geom::PointCloud;
use crate::nn::{softmax_cross_entropy, AdamConfig, AdamState, Tensor};
use crate::scalar::Real;

/// Parameters plus optimizer state, updated one mini-batch at a time.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub config: NetworkConfig,
    pub params: NetworkParams<T>,
    pub adam: AdamState<T>,
    pub optimizer: AdamConfig<T>,
}

impl<T: Real> Trainer<T> {
    pub fn new(config: NetworkConfig, seed: u64, optimizer: AdamConfig<T>) -> Result<Self> {
        let params = NetworkParams::init(&config, seed)?;
        let adam = AdamState::new(&params.array_sizes());
        Ok(Self {
            config,
            params,
            adam,
            optimizer,
        })
    }

    /// Mean cross-entropy and its parameter gradient over a batch.
    pub fn loss_and_gradient(&self, batch: &[(CloudGeometry<T>, usize)]) -> Result<(T, NetworkParams<T>)> {
        loss_and_gradient(&self.params, batch)
    }

    /// Forward, backward and one Adam update. Returns the batch loss.
    pub fn train_step(&mut self, batch: &[(CloudGeometry<T>, usize)]) -> Result<T> {
        let (loss, grads) = self.loss_and_gradient(batch)?;
        self.adam
            .update(self.params.arrays_mut(), grads.arrays(), &self.optimizer)?;
        Ok(loss)
    }

    /// Same as [`Trainer::train_step`] starting from raw normalized clouds.
    pub fn train_step_clouds(&mut self, batch: &[PointCloud<T>]) -> Result<T> {
        let prepared = batch
            .iter()
            .map(|c| {
                let label = c
                    .label
                    .ok_or_else(|| Error::invalid("training cloud without a label"))?;
                Ok((CloudGeometry::from_cloud(c, &self.config)?, label))
            })
            .collect::<Result<Vec<_>>>()?;
        self.train_step(&prepared)
    }
}

pub(crate) fn loss_and_gradient<T: Real>(
    params: &NetworkParams<T>,
    batch: &[(CloudGeometry<T>, usize)],
) -> Result<(T, NetworkParams<T>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let mut caches = Vec::with_capacity(batch.len());
    let mut logits = Vec::new();
    for (geometry, _) in batch {
        let (code, mut cache) = hierarchical_forward(geometry, params)?;
        logits.extend_from_slice(cache.logits(&code, params)?.data());
        caches.push(cache);
    }
    let classes = params.head.output_width();
    let labels: Vec<usize> = batch.iter().map(|(_, l)| *l).collect();
    let (loss, grad) = softmax_cross_entropy(&Tensor::new(vec![batch.len(), classes], logits)?, &labels)?;
    let mut grads = params.zeros_like();
    for (i, cache) in caches.iter().enumerate() {
        let row = Tensor::new(vec![1, classes], grad.row(i).to_vec())?;
        cache.backward(params, &row, &mut grads)?;
    }
    Ok((loss, grads))
}

/// Codeword of a normalized cloud.
pub fn embed<T: Real>(cloud: &PointCloud<T>, cfg: &NetworkConfig, params: &NetworkParams<T>) -> Result<Vec<T>> {
    let geometry = CloudGeometry::from_cloud(cloud, cfg)?;
    Ok(hierarchical_forward(&geometry, params)?.0.into_data())
}

/// Predicted class and logits for prepared geometry.
pub fn predict<T: Real>(geometry: &CloudGeometry<T>, params: &NetworkParams<T>) -> Result<(usize, Vec<T>)> {
    let (code, _) = hierarchical_forward(geometry, params)?;
    let logits = params.head.forward(&code)?.into_data();
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    Ok((best, logits))
}
