//! Neighborhood center estimators: the subset-centroid approximation of the
//! geometric median, the exact Weiszfeld iteration, and the plain mean.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{centroid, Point3};
use crate::scalar::Real;

/// Parameters of the approximate geometric median.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MedianParams {
    /// Number of random subsets drawn.
    pub num_subsets: usize,
    /// Points per subset.
    pub subset_size: usize,
    pub seed: u64,
}

impl MedianParams {
    pub fn new(num_subsets: usize, subset_size: usize, seed: u64) -> Self {
        Self {
            num_subsets,
            subset_size,
            seed,
        }
    }

    /// Subset size `round(ratio * k)` clamped to `[1, k]`.
    pub fn for_neighborhood(k: usize, num_subsets: usize, ratio: f64, seed: u64) -> Self {
        let size = ((ratio * k as f64).round() as usize).clamp(1, k.max(1));
        Self::new(num_subsets, size, seed)
    }

    pub fn validate(&self, neighborhood_size: usize) -> Result<()> {
        if self.num_subsets == 0 {
            return Err(Error::invalid("median needs at least one subset"));
        }
        if self.subset_size == 0 || self.subset_size > neighborhood_size {
            return Err(Error::invalid(format!(
                "subset size {} outside [1, {neighborhood_size}]",
                self.subset_size
            )));
        }
        Ok(())
    }
}

/// How the local neighborhood center `m_i` is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterMode {
    /// Approximate geometric median with `num_subsets` subsets of
    /// `round(subset_ratio * K)` points.
    GeometricMedian { num_subsets: usize, subset_ratio: f64 },
    /// Arithmetic mean of the neighborhood.
    Mean,
}

impl Default for CenterMode {
    fn default() -> Self {
        CenterMode::GeometricMedian {
            num_subsets: 10,
            subset_ratio: 0.9,
        }
    }
}

impl CenterMode {
    /// Center of `points`, with a seed specific to this neighborhood.
    pub fn estimate<T: Real>(&self, points: &[Point3<T>], seed: u64) -> Result<Point3<T>> {
        match *self {
            CenterMode::GeometricMedian {
                num_subsets,
                subset_ratio,
            } => {
                let params = MedianParams::for_neighborhood(points.len(), num_subsets, subset_ratio, seed);
                approx_geometric_median(points, &params)
            }
            CenterMode::Mean => arithmetic_mean(points),
        }
    }
}

pub fn arithmetic_mean<T: Real>(points: &[Point3<T>]) -> Result<Point3<T>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(centroid(points))
}

/// Sum of Euclidean distances from `x` to every point.
pub fn distance_sum<T: Real>(points: &[Point3<T>], x: Point3<T>) -> T {
    points.iter().map(|&p| p.distance(x)).sum()
}

const COINCIDENCE: f64 = 1e-12;

/// Weiszfeld iteration with the Vardi–Zhang correction at data points.
///
/// Returns every iterate, starting from the centroid; the last entry is the
/// estimate.
pub fn weiszfeld_trace<T: Real>(points: &[Point3<T>], tol: T, max_iter: usize) -> Result<Vec<Point3<T>>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let eps = T::lit(COINCIDENCE);
    let mut x = centroid(points);
    let mut trace = vec![x];
    for _ in 0..max_iter {
        let mut num = Point3::zero();
        let mut den = T::zero();
        let mut coincident = T::zero();
        for &p in points {
            let d = p.distance(x);
            if d < eps {
                coincident = coincident + T::one();
            } else {
                num += p / d;
                den = den + T::one() / d;
            }
        }
        if den == T::zero() {
            break;
        }
        let target = num / den;
        let next = if coincident == T::zero() {
            target
        } else {
            // x sits on a data point: it is optimal iff the pull of the
            // remaining points does not exceed the coincident weight.
            let pull = ((target - x) * den).norm();
            if pull <= coincident {
                break;
            }
            let w = coincident / pull;
            target * (T::one() - w) + x * w
        };
        let step = next.distance(x);
        x = next;
        trace.push(x);
        if step < tol {
            break;
        }
    }
    Ok(trace)
}

/// Exact geometric median (to `tol`) by Weiszfeld iteration.
pub fn weiszfeld_median<T: Real>(points: &[Point3<T>], tol: T, max_iter: usize) -> Result<Point3<T>> {
    Ok(*weiszfeld_trace(points, tol, max_iter)?.last().unwrap())
}

/// Divide-and-conquer approximation of the geometric median.
///
/// Draws `num_subsets` index subsets (without replacement inside each
/// subset), takes their centroids, groups centroids lying within the median
/// pairwise centroid distance of an anchor, and returns the mean of the
/// largest group. Subset draws depend on indices only, so the result is
/// rotation-equivariant for a fixed seed.
pub fn approx_geometric_median<T: Real>(points: &[Point3<T>], params: &MedianParams) -> Result<Point3<T>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    params.validate(points.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let centroids: Vec<Point3<T>> = (0..params.num_subsets)
        .map(|_| {
            let mut idx = rand::seq::index::sample(&mut rng, points.len(), params.subset_size).into_vec();
            idx.sort_unstable();
            let mut sum = Point3::zero();
            for i in idx {
                sum += points[i];
            }
            sum / T::from_count(params.subset_size)
        })
        .collect();
    Ok(largest_cluster_mean(&centroids))
}

fn largest_cluster_mean<T: Real>(centroids: &[Point3<T>]) -> Point3<T> {
    let n = centroids.len();
    if n == 1 {
        return centroids[0];
    }
    let mut dist = vec![T::zero(); n * n];
    let mut pairwise = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = centroids[i].distance(centroids[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
            pairwise.push(d);
        }
    }
    // Ties in exact arithmetic (duplicated padding points) must not be
    // decided by rounding, so the threshold carries a small slack.
    let tau = median_of(&mut pairwise);
    let tau = tau + tau * T::lit(1e-9) + T::lit(1e-12);
    let mut best: Option<Vec<usize>> = None;
    for anchor in 0..n {
        let members: Vec<usize> = (0..n).filter(|&j| dist[anchor * n + j] <= tau).collect();
        if best.as_ref().is_none_or(|b| members.len() > b.len()) {
            best = Some(members);
        }
    }
    let members = best.unwrap();
    let mut sum = Point3::zero();
    for &j in &members {
        sum += centroids[j];
    }
    sum / T::from_count(members.len())
}

fn median_of<T: Real>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / T::lit(2.0)
    }
}
