use super::{NetworkConfig, NetworkParams, RrcParams};
use crate::error::{Error, Result};
use crate::geom::{ball_query, farthest_point_sampling, mix_seed, Point3, PointCloud};
use crate::nn::{max_pool_backward, max_pool_neighbors, Mlp, MlpCache, PoolIndices, Tensor};
use crate::repr::{build_ri_tensor, relation_matrix, RelationMatrix};
use crate::scalar::Real;

/// Everything the network consumes that does not depend on parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudGeometry<T> {
    /// `N1×K1×D` layer-1 descriptors.
    pub input1: Tensor<T>,
    /// `N1×2N1` relation matrix over the layer-1 centers.
    pub relation1: Tensor<T>,
    /// `N2·K2` indices into the layer-1 centers.
    pub group2: Vec<usize>,
    pub input2: Tensor<T>,
    pub relation2: Tensor<T>,
    /// `K3` indices into the layer-2 centers.
    pub group3: Vec<usize>,
    pub input3: Tensor<T>,
}

fn relation_tensor<T: Real>(r: RelationMatrix<T>) -> Result<Tensor<T>> {
    Tensor::new(vec![r.n, 2 * r.n], r.values)
}

fn descriptor_tensor<T: Real>(
    points: &[Point3<T>],
    centers: &[usize],
    radius: f64,
    k: usize,
    cfg: &NetworkConfig,
    layer: u64,
) -> Result<(Vec<usize>, Tensor<T>)> {
    let hoods = ball_query(points, centers, T::lit(radius), k)?;
    let seed = mix_seed(cfg.geometry_seed, layer);
    let ri = build_ri_tensor(points, &hoods, &cfg.center, seed)?;
    let width = cfg.descriptor_width();
    let features = ri.features(cfg.use_global_descriptor);
    let groups = hoods.into_iter().flat_map(|h| h.neighbor_indices).collect();
    Ok((groups, Tensor::new(vec![centers.len(), k, width], features)?))
}

impl<T: Real> CloudGeometry<T> {
    /// Sample-and-group for all three layers of a normalized cloud.
    pub fn from_cloud(cloud: &PointCloud<T>, cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        if cloud.len() < cfg.n1 {
            return Err(Error::InsufficientPoints {
                needed: cfg.n1,
                got: cloud.len(),
            });
        }
        let points = &cloud.points;
        let centers1 = farthest_point_sampling(points, cfg.n1)?;
        let (_, input1) = descriptor_tensor(points, &centers1, cfg.r1, cfg.k1, cfg, 1)?;
        let pts1: Vec<Point3<T>> = centers1.iter().map(|&i| points[i]).collect();
        let relation1 = relation_tensor(relation_matrix(&pts1)?)?;

        let centers2 = farthest_point_sampling(&pts1, cfg.n2)?;
        let (group2, input2) = descriptor_tensor(&pts1, &centers2, cfg.r2, cfg.k2, cfg, 2)?;
        let pts2: Vec<Point3<T>> = centers2.iter().map(|&i| pts1[i]).collect();
        let relation2 = relation_tensor(relation_matrix(&pts2)?)?;

        let centers3 = farthest_point_sampling(&pts2, 1)?;
        let (group3, input3) = descriptor_tensor(&pts2, &centers3, cfg.r3, cfg.k3, cfg, 3)?;
        Ok(Self {
            input1,
            relation1,
            group2,
            input2,
            relation2,
            group3,
            input3,
        })
    }
}

/// Per-row relation weights `W ∈ (0,1)^{N×C}` regressed from the relation
/// matrix.
pub fn relation_weight<T: Real>(relation: &Tensor<T>, mlp: &Mlp<T>) -> Result<Tensor<T>> {
    mlp.forward(relation)
}

/// Cached intermediates of one region relation convolution.
#[derive(Debug, Clone)]
pub struct RrcCache<T> {
    shared: MlpCache<T>,
    pool: PoolIndices,
    pooled: Tensor<T>,
    relation: Option<(MlpCache<T>, Tensor<T>)>,
}

/// `F + W∘F` where `F` is the max-pooled shared-MLP feature and `W` the
/// relation weight; just `F` when the relation branch is disabled.
pub fn region_relation_conv<T: Real>(
    x: &Tensor<T>,
    relation: &Tensor<T>,
    params: &RrcParams<T>,
) -> Result<(Tensor<T>, RrcCache<T>)> {
    let (hidden, shared) = params.shared.forward_cached(x)?;
    let (pooled, pool) = max_pool_neighbors(&hidden)?;
    let Some(rel) = &params.relation else {
        return Ok((
            pooled.clone(),
            RrcCache {
                shared,
                pool,
                pooled,
                relation: None,
            },
        ));
    };
    if relation.rows() != pooled.rows() {
        return Err(Error::shape("relation matrix rows must match the number of centers"));
    }
    let (w, rel_cache) = rel.forward_cached(relation)?;
    if w.shape() != pooled.shape() {
        return Err(Error::shape("relation weights must match the feature map"));
    }
    let out: Vec<T> = pooled.data().iter().zip(w.data()).map(|(&f, &wv)| f + wv * f).collect();
    Ok((
        Tensor::new(pooled.shape().to_vec(), out)?,
        RrcCache {
            shared,
            pool,
            pooled,
            relation: Some((rel_cache, w)),
        },
    ))
}

fn region_relation_conv_backward<T: Real>(
    params: &RrcParams<T>,
    cache: &RrcCache<T>,
    grad: &Tensor<T>,
    grads: &mut RrcParams<T>,
    want_input: bool,
) -> Result<Option<Tensor<T>>> {
    let grad_pooled = match (&params.relation, &cache.relation, &mut grads.relation) {
        (Some(rel), Some((rel_cache, w)), Some(rel_grads)) => {
            let g = grad.data();
            let gf: Vec<T> = g.iter().zip(w.data()).map(|(&gv, &wv)| gv * (T::one() + wv)).collect();
            let gw: Vec<T> = g.iter().zip(cache.pooled.data()).map(|(&gv, &f)| gv * f).collect();
            rel.backward(rel_cache, &Tensor::new(w.shape().to_vec(), gw)?, rel_grads, false)?;
            Tensor::new(grad.shape().to_vec(), gf)?
        }
        (None, None, None) => grad.clone(),
        _ => {
            return Err(Error::shape(
                "relation branch presence differs between params and cache",
            ))
        }
    };
    let grad_hidden = max_pool_backward(&grad_pooled, &cache.pool)?;
    params
        .shared
        .backward(&cache.shared, &grad_hidden, &mut grads.shared, want_input)
}

fn gather_rows<T: Real>(features: &Tensor<T>, groups: &[usize], centers: usize) -> Result<Tensor<T>> {
    let c = features.last_dim();
    let k = groups.len() / centers.max(1);
    let mut data = Vec::with_capacity(groups.len() * c);
    for &g in groups {
        if g >= features.rows() {
            return Err(Error::shape("group index beyond the feature map"));
        }
        data.extend_from_slice(features.row(g));
    }
    Tensor::new(vec![centers, k, c], data)
}

fn scatter_rows<T: Real>(grad: &Tensor<T>, groups: &[usize], rows: usize) -> Tensor<T> {
    let c = grad.last_dim();
    let mut out = vec![T::zero(); rows * c];
    for (slot, &g) in groups.iter().enumerate() {
        let src = grad.row(slot);
        for (o, &v) in out[g * c..(g + 1) * c].iter_mut().zip(src) {
            *o = *o + v;
        }
    }
    Tensor::new(vec![rows, c], out).expect("scatter shape")
}

/// Intermediates of a full forward pass, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    rrc1: RrcCache<T>,
    rows1: usize,
    group2: Vec<usize>,
    lift2: MlpCache<T>,
    rrc2: RrcCache<T>,
    rows2: usize,
    group3: Vec<usize>,
    lift3: MlpCache<T>,
    fuse3: MlpCache<T>,
    pool3: PoolIndices,
    head: Option<MlpCache<T>>,
}

/// Codeword `1×C` of one cloud, with the cache needed for backprop.
pub fn hierarchical_forward<T: Real>(
    geometry: &CloudGeometry<T>,
    params: &NetworkParams<T>,
) -> Result<(Tensor<T>, ForwardCache<T>)> {
    let (f1, rrc1) = region_relation_conv(&geometry.input1, &geometry.relation1, &params.layer1)?;

    let n2 = geometry.input2.shape()[0];
    let grouped2 = gather_rows(&f1, &geometry.group2, n2)?;
    let (lifted2, lift2) = params.lift2.forward_cached(&geometry.input2)?;
    let fused2 = grouped2.concat_last(&lifted2)?;
    let (f2, rrc2) = region_relation_conv(&fused2, &geometry.relation2, &params.layer2)?;

    let grouped3 = gather_rows(&f2, &geometry.group3, 1)?;
    let (lifted3, lift3) = params.lift3.forward_cached(&geometry.input3)?;
    let fused3 = grouped3.concat_last(&lifted3)?;
    let (hidden3, fuse3) = params.fuse3.forward_cached(&fused3)?;
    let (codeword, pool3) = max_pool_neighbors(&hidden3)?;
    Ok((
        codeword,
        ForwardCache {
            rrc1,
            rows1: f1.rows(),
            group2: geometry.group2.clone(),
            lift2,
            rrc2,
            rows2: f2.rows(),
            group3: geometry.group3.clone(),
            lift3,
            fuse3,
            pool3,
            head: None,
        },
    ))
}

impl<T: Real> ForwardCache<T> {
    /// Runs the head on `codeword` and records it for the reverse pass.
    pub fn logits(&mut self, codeword: &Tensor<T>, params: &NetworkParams<T>) -> Result<Tensor<T>> {
        let (logits, cache) = params.head.forward_cached(codeword)?;
        self.head = Some(cache);
        Ok(logits)
    }

    /// Reverse pass from the logits gradient (when the head ran) or from the
    /// codeword gradient. Parameter gradients accumulate into `grads`.
    pub fn backward(
        &self,
        params: &NetworkParams<T>,
        upstream: &Tensor<T>,
        grads: &mut NetworkParams<T>,
    ) -> Result<()> {
        let g_code = match &self.head {
            Some(cache) => params.head.backward(cache, upstream, &mut grads.head, true)?.unwrap(),
            None => upstream.clone(),
        };
        let c = g_code.last_dim();
        let g_hidden3 = max_pool_backward(&g_code, &self.pool3)?;
        let g_fused3 = params
            .fuse3
            .backward(&self.fuse3, &g_hidden3, &mut grads.fuse3, true)?
            .unwrap();
        let (g_grouped3, g_lifted3) = g_fused3.split_last(c)?;
        params
            .lift3
            .backward(&self.lift3, &g_lifted3, &mut grads.lift3, false)?;
        let g_f2 = scatter_rows(&g_grouped3, &self.group3, self.rows2);

        let g_fused2 =
            region_relation_conv_backward(&params.layer2, &self.rrc2, &g_f2, &mut grads.layer2, true)?.unwrap();
        let (g_grouped2, g_lifted2) = g_fused2.split_last(c)?;
        params
            .lift2
            .backward(&self.lift2, &g_lifted2, &mut grads.lift2, false)?;
        let g_f1 = scatter_rows(&g_grouped2, &self.group2, self.rows1);

        region_relation_conv_backward(&params.layer1, &self.rrc1, &g_f1, &mut grads.layer1, false)?;
        Ok(())
    }
}

/// Class scores from a codeword.
pub fn classify<T: Real>(codeword: &Tensor<T>, head: &Mlp<T>) -> Result<Tensor<T>> {
    head.forward(codeword)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> T {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na * nb)
}

/// Gallery indices ranked by descending cosine similarity, ties by index.
pub fn retrieve<T: Real>(query: &[T], gallery: &[Vec<T>]) -> Result<Vec<usize>> {
    if gallery.iter().any(|g| g.len() != query.len()) {
        return Err(Error::shape("codeword widths differ"));
    }
    let sims: Vec<T> = gallery.iter().map(|g| cosine_similarity(query, g)).collect();
    let mut order: Vec<usize> = (0..gallery.len()).collect();
    order.sort_by(|&a, &b| {
        sims[b]
            .partial_cmp(&sims[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(order)
}
