//! Point containers, rigid rotations, sampling and neighborhood queries.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point (or free vector) in 3D.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Convenience constructor from `f64` literals.
    pub fn lit(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn max_abs_diff(self, other: Self) -> T {
        let d = self - other;
        d.x.abs().max(d.y.abs()).max(d.z.abs())
    }

    pub fn cast<U: Real>(self) -> Point3<U> {
        Point3::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Point3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Point3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Point3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Point3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Coordinate-wise mean of a non-empty slice.
pub fn centroid<T: Real>(points: &[Point3<T>]) -> Point3<T> {
    let mut sum = Point3::zero();
    for &p in points {
        sum += p;
    }
    sum / T::from_count(points.len())
}

/// An ordered point set with an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    pub points: Vec<Point3<T>>,
    pub label: Option<usize>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>) -> Self {
        Self { points, label: None }
    }

    pub fn with_label(points: Vec<Point3<T>>, label: usize) -> Self {
        Self {
            points,
            label: Some(label),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn map_points(&self, f: impl FnMut(&Point3<T>) -> Point3<T>) -> Self {
        Self {
            points: self.points.iter().map(f).collect(),
            label: self.label,
        }
    }

    /// Pointwise translation.
    pub fn translated(&self, t: Point3<T>) -> Self {
        self.map_points(|&p| p + t)
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        PointCloud {
            points: self.points.iter().map(|p| p.cast()).collect(),
            label: self.label,
        }
    }
}

/// A proper rotation of 3-space, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> RotationMatrix<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    /// Wraps a matrix after checking orthonormality and unit determinant.
    pub fn from_rows(m: [[T; 3]; 3], tol: T) -> Result<Self> {
        let r = Self { m };
        if r.is_proper_rotation(tol) {
            Ok(r)
        } else {
            Err(Error::invalid("matrix is not a proper rotation"))
        }
    }

    pub fn apply(&self, p: Point3<T>) -> Point3<T> {
        let m = &self.m;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    pub fn compose(&self, other: &Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Self { m: out }
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `RᵀR = I` entrywise and `det R = 1`, both within `tol`.
    pub fn is_proper_rotation(&self, tol: T) -> bool {
        let rtr = self.transpose().compose(self);
        for (i, row) in rtr.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                if !((v - target).abs() <= tol) {
                    return false;
                }
            }
        }
        (self.determinant() - T::one()).abs() <= tol
    }

    pub fn from_unit_quaternion(w: T, x: T, y: T, z: T) -> Self {
        let two = T::lit(2.0);
        let o = T::one();
        Self {
            m: [
                [o - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
                [two * (x * y + w * z), o - two * (x * x + z * z), two * (y * z - w * x)],
                [two * (x * z - w * y), two * (y * z + w * x), o - two * (x * x + y * y)],
            ],
        }
    }
}

/// Uniformly distributed rotation drawn from a normalized Gaussian quaternion.
pub fn random_rotation_so3<T: Real>(seed: u64) -> RotationMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-9 {
            return RotationMatrix::from_unit_quaternion(
                T::lit(q[0] / n),
                T::lit(q[1] / n),
                T::lit(q[2] / n),
                T::lit(q[3] / n),
            );
        }
    }
}

/// Rotation about the z (gravity) axis.
pub fn azimuthal_rotation<T: Real>(angle: T) -> RotationMatrix<T> {
    let (s, c) = angle.sin_cos();
    let (o, z) = (T::one(), T::zero());
    RotationMatrix {
        m: [[c, -s, z], [s, c, z], [z, z, o]],
    }
}

/// All 24 proper rotations that permute and negate coordinate axes.
///
/// Applying one of these never rounds, which makes exact invariance checks
/// meaningful.
pub fn signed_axis_permutations<T: Real>() -> Vec<RotationMatrix<T>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for signs in 0..8u32 {
            let mut m = [[T::zero(); 3]; 3];
            for (row, &col) in perm.iter().enumerate() {
                m[row][col] = if signs & (1 << row) != 0 { -T::one() } else { T::one() };
            }
            let r = RotationMatrix { m };
            if r.determinant() > T::zero() {
                out.push(r);
            }
        }
    }
    out
}

pub fn apply_rotation<T: Real>(cloud: &PointCloud<T>, rotation: &RotationMatrix<T>) -> PointCloud<T> {
    cloud.map_points(|&p| rotation.apply(p))
}

/// Centers on the centroid and scales into the unit sphere.
pub fn normalize_unit_sphere<T: Real>(cloud: &PointCloud<T>) -> Result<PointCloud<T>> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let c = centroid(&cloud.points);
    let centered: Vec<Point3<T>> = cloud.points.iter().map(|&p| p - c).collect();
    let mut scale = centered.iter().map(|p| p.norm()).fold(T::zero(), |a, b| a.max(b));
    if scale < T::lit(1e-12) {
        scale = T::one();
    }
    Ok(PointCloud {
        points: centered.into_iter().map(|p| p / scale).collect(),
        label: cloud.label,
    })
}

/// Farthest point sampling starting from index 0, ties to the smallest index.
pub fn farthest_point_sampling<T: Real>(points: &[Point3<T>], n: usize) -> Result<Vec<usize>> {
    let total = points.len();
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if n > total {
        return Err(Error::InsufficientPoints { needed: n, got: total });
    }
    let mut selected = Vec::with_capacity(n);
    let mut taken = vec![false; total];
    let mut min_dist = vec![T::infinity(); total];
    let mut current = 0usize;
    loop {
        selected.push(current);
        taken[current] = true;
        if selected.len() == n {
            break;
        }
        let anchor = points[current];
        let mut best: Option<(usize, T)> = None;
        for (j, p) in points.iter().enumerate() {
            let d = p.distance(anchor);
            if d < min_dist[j] {
                min_dist[j] = d;
            }
            if taken[j] {
                continue;
            }
            match best {
                Some((_, bd)) if !(min_dist[j] > bd) => {}
                _ => best = Some((j, min_dist[j])),
            }
        }
        current = best.expect("n <= total leaves an untaken point").0;
    }
    Ok(selected)
}

/// Fixed-size neighbor list around one center.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood<T> {
    pub center_index: usize,
    pub neighbor_indices: Vec<usize>,
    pub radius: T,
}

/// Ball query: neighbors within `radius`, center first, the rest ordered by
/// (distance, index). Sparse balls are padded by cycling the found list.
pub fn ball_query<T: Real>(
    points: &[Point3<T>],
    centers: &[usize],
    radius: T,
    k: usize,
) -> Result<Vec<Neighborhood<T>>> {
    if !(radius > T::zero()) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    if k == 0 {
        return Err(Error::invalid("neighbor count must be at least 1"));
    }
    centers
        .iter()
        .map(|&c| {
            let center = *points
                .get(c)
                .ok_or_else(|| Error::invalid(format!("center index {c} out of range")))?;
            let mut found: Vec<(T, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != c)
                .map(|(j, p)| (p.distance(center), j))
                .filter(|&(d, _)| d <= radius)
                .collect();
            found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut ordered = Vec::with_capacity(found.len() + 1);
            ordered.push(c);
            ordered.extend(found.into_iter().map(|(_, j)| j));
            let neighbor_indices = (0..k).map(|i| ordered[i % ordered.len()]).collect();
            Ok(Neighborhood {
                center_index: c,
                neighbor_indices,
                radius,
            })
        })
        .collect()
}

/// Adds i.i.d. zero-mean Gaussian noise of the given variance per coordinate.
pub fn add_gaussian_noise<T: Real>(cloud: &PointCloud<T>, variance: T, seed: u64) -> Result<PointCloud<T>> {
    if !(variance >= T::zero()) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    if variance == T::zero() {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, variance.to_f64_lossy().sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(cloud.map_points(|&p| {
        let mut draw = || T::lit(normal.sample(&mut rng));
        p + Point3::new(draw(), draw(), draw())
    }))
}

/// Uniform isotropic scaling followed by per-coordinate Gaussian jitter.
pub fn augment_scale_jitter<T: Real>(
    cloud: &PointCloud<T>,
    scale_range: (T, T),
    jitter_sigma: T,
    seed: u64,
) -> Result<PointCloud<T>> {
    let (lo, hi) = scale_range;
    if !(lo > T::zero() && hi >= lo) {
        return Err(Error::invalid("scale range must satisfy 0 < lo <= hi"));
    }
    if !(jitter_sigma >= T::zero()) {
        return Err(Error::invalid("jitter sigma must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = if hi > lo {
        T::lit(rng.random_range(lo.to_f64_lossy()..=hi.to_f64_lossy()))
    } else {
        lo
    };
    let normal = Normal::new(0.0, jitter_sigma.to_f64_lossy()).map_err(|e| Error::invalid(e.to_string()))?;
    let jitter = jitter_sigma > T::zero();
    Ok(cloud.map_points(|&p| {
        let scaled = p * scale;
        if jitter {
            let mut draw = || T::lit(normal.sample(&mut rng));
            scaled + Point3::new(draw(), draw(), draw())
        } else {
            scaled
        }
    }))
}

/// Combines two seeds into one (splitmix64 finalizer over a mixed word).
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(b)
        .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
