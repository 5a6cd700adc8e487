//! Rotation-invariant input representation.
//!
//! Every reference point `p_i` gets a reference triangle `p_i`-`m_i`-`s_i`
//! where `m_i` is a robust neighborhood center and `s_i` is the far
//! intersection of the outward ray through `p_i` with the query ball. The
//! global block describes the triangle, the local block places each neighbor
//! relative to it (distances, face angles and a signed dihedral angle that
//! separates mirror images).

use log::warn;

use crate::error::{Error, Result};
use crate::geom::{ball_query, farthest_point_sampling, mix_seed, Neighborhood, Point3};
use crate::median::CenterMode;
use crate::scalar::Real;

/// Width of the packed `[global | local]` row.
pub const RI_WIDTH: usize = 12;
pub const GLOBAL_WIDTH: usize = 5;
pub const LOCAL_WIDTH: usize = 7;

const DEGENERATE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalDescriptor<T> {
    /// `‖p_i‖`
    pub dp: T,
    /// `‖p_i − m_i‖`
    pub dpm: T,
    /// `‖s_i − m_i‖`
    pub dsm: T,
    /// Angle at `m_i`.
    pub cos_alpha: T,
    /// Angle at `s_i`.
    pub cos_beta: T,
}

impl<T: Real> GlobalDescriptor<T> {
    pub fn to_array(&self) -> [T; GLOBAL_WIDTH] {
        [self.dp, self.dpm, self.dsm, self.cos_alpha, self.cos_beta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDescriptor<T> {
    /// `‖p_ij − m_i‖`
    pub dpm: T,
    /// `‖p_ij − p_i‖`
    pub dpp: T,
    /// `‖p_ij − s_i‖`
    pub dps: T,
    /// Angle at `p_ij` between the directions to `p_i` and `s_i`.
    pub cos_gamma_p: T,
    /// Angle at `p_ij` between the directions to `m_i` and `p_i`.
    pub cos_gamma_m: T,
    /// Angle at `p_ij` between the directions to `s_i` and `m_i`.
    pub cos_gamma_s: T,
    /// `sin(θ/2)` of the signed dihedral angle.
    pub f_theta: T,
}

impl<T: Real> LocalDescriptor<T> {
    pub fn to_array(&self) -> [T; LOCAL_WIDTH] {
        [
            self.dpm,
            self.dpp,
            self.dps,
            self.cos_gamma_p,
            self.cos_gamma_m,
            self.cos_gamma_s,
            self.f_theta,
        ]
    }
}

/// Cosine of the angle between two vectors; 1 when either is degenerate.
pub fn cos_between<T: Real>(a: Point3<T>, b: Point3<T>) -> T {
    let (na, nb) = (a.norm(), b.norm());
    let eps = T::lit(DEGENERATE);
    if na < eps || nb < eps {
        return T::one();
    }
    (a.dot(b) / (na * nb)).max(-T::one()).min(T::one())
}

/// Unsigned angle in `[0, π]`, computed via `atan2` so near-parallel vectors
/// stay well conditioned; 0 when either vector is degenerate.
pub fn angle_between<T: Real>(a: Point3<T>, b: Point3<T>) -> T {
    let eps = T::lit(DEGENERATE);
    if a.norm() < eps || b.norm() < eps {
        return T::zero();
    }
    a.cross(b).norm().atan2(a.dot(b))
}

/// Far intersection of the ray from the origin through `p` with the ball of
/// radius `r` around `p`.
pub fn support_point<T: Real>(p: Point3<T>, r: T) -> Point3<T> {
    let n = p.norm();
    if n < T::lit(DEGENERATE) {
        warn!("reference point at the origin, support point falls back to (r, 0, 0)");
        return Point3::new(r, T::zero(), T::zero());
    }
    p * (T::one() + r / n)
}

pub fn global_descriptor<T: Real>(p: Point3<T>, m: Point3<T>, s: Point3<T>) -> GlobalDescriptor<T> {
    GlobalDescriptor {
        dp: p.norm(),
        dpm: p.distance(m),
        dsm: s.distance(m),
        cos_alpha: cos_between(p - m, s - m),
        cos_beta: cos_between(p - s, m - s),
    }
}

/// Signed angle in `[−π, π)` rotating the plane `m-p-s` onto the plane
/// `q-s-p` about the axis directed from `p` to `s`.
pub fn dihedral_angle<T: Real>(p: Point3<T>, s: Point3<T>, m: Point3<T>, q: Point3<T>) -> T {
    let eps = T::lit(DEGENERATE);
    let axis = s - p;
    let len = axis.norm();
    if len < eps {
        return T::zero();
    }
    let u = axis / len;
    let a = m - p;
    let b = q - p;
    let n1 = a - u * a.dot(u);
    let n2 = b - u * b.dot(u);
    if n1.norm() < eps || n2.norm() < eps {
        return T::zero();
    }
    let theta = n1.cross(n2).dot(u).atan2(n1.dot(n2));
    if theta >= T::PI() {
        -T::PI()
    } else {
        theta
    }
}

pub fn local_descriptor<T: Real>(p: Point3<T>, m: Point3<T>, s: Point3<T>, q: Point3<T>) -> LocalDescriptor<T> {
    let to_p = p - q;
    let to_m = m - q;
    let to_s = s - q;
    let theta = dihedral_angle(p, s, m, q);
    LocalDescriptor {
        dpm: to_m.norm(),
        dpp: to_p.norm(),
        dps: to_s.norm(),
        cos_gamma_p: cos_between(to_p, to_s),
        cos_gamma_m: cos_between(to_m, to_p),
        cos_gamma_s: cos_between(to_s, to_m),
        f_theta: (theta / T::lit(2.0)).sin(),
    }
}

/// Packed `N×K×12` representation, one `[G_i | L_ij]` row per neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct RiTensor<T> {
    pub centers: usize,
    pub k: usize,
    pub values: Vec<T>,
}

impl<T: Real> RiTensor<T> {
    pub fn row(&self, center: usize, neighbor: usize) -> &[T] {
        let start = (center * self.k + neighbor) * RI_WIDTH;
        &self.values[start..start + RI_WIDTH]
    }

    /// Row-major features, either all 12 columns or only the local 7.
    pub fn features(&self, include_global: bool) -> Vec<T> {
        if include_global {
            return self.values.clone();
        }
        self.values
            .chunks_exact(RI_WIDTH)
            .flat_map(|row| row[GLOBAL_WIDTH..].iter().copied())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.centers != other.centers || self.k != other.k {
            return Err(Error::shape("representation shapes differ"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), |a, b| a.max(b)))
    }
}

/// Reference triangle vertices for one neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFrame<T> {
    pub p: Point3<T>,
    pub m: Point3<T>,
    pub s: Point3<T>,
}

pub fn reference_frame<T: Real>(
    points: &[Point3<T>],
    hood: &Neighborhood<T>,
    center: &CenterMode,
    seed: u64,
) -> Result<ReferenceFrame<T>> {
    let p = *points
        .get(hood.center_index)
        .ok_or_else(|| Error::invalid("neighborhood center out of range"))?;
    let neighbors = hood
        .neighbor_indices
        .iter()
        .map(|&j| {
            points
                .get(j)
                .copied()
                .ok_or_else(|| Error::invalid("neighbor index out of range"))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = center.estimate(&neighbors, mix_seed(seed, hood.center_index as u64))?;
    Ok(ReferenceFrame {
        p,
        m,
        s: support_point(p, hood.radius),
    })
}

/// Builds the packed representation for every neighborhood.
pub fn build_ri_tensor<T: Real>(
    points: &[Point3<T>],
    neighborhoods: &[Neighborhood<T>],
    center: &CenterMode,
    seed: u64,
) -> Result<RiTensor<T>> {
    let k = neighborhoods.first().map_or(0, |h| h.neighbor_indices.len());
    let mut values = Vec::with_capacity(neighborhoods.len() * k * RI_WIDTH);
    for hood in neighborhoods {
        if hood.neighbor_indices.len() != k {
            return Err(Error::shape("neighborhoods must share a neighbor count"));
        }
        let frame = reference_frame(points, hood, center, seed)?;
        let g = global_descriptor(frame.p, frame.m, frame.s).to_array();
        for &j in &hood.neighbor_indices {
            let l = local_descriptor(frame.p, frame.m, frame.s, points[j]).to_array();
            values.extend_from_slice(&g);
            values.extend_from_slice(&l);
        }
    }
    Ok(RiTensor {
        centers: neighborhoods.len(),
        k,
        values,
    })
}

/// Pairwise `N×2N` relation matrix: for each pair, the distance and the angle
/// subtended at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationMatrix<T> {
    pub n: usize,
    pub values: Vec<T>,
}

impl<T: Real> RelationMatrix<T> {
    pub fn distance(&self, i: usize, j: usize) -> T {
        self.values[i * 2 * self.n + 2 * j]
    }

    pub fn angle(&self, i: usize, j: usize) -> T {
        self.values[i * 2 * self.n + 2 * j + 1]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * 2 * self.n..(i + 1) * 2 * self.n]
    }
}

pub fn relation_matrix<T: Real>(points: &[Point3<T>]) -> Result<RelationMatrix<T>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = points.len();
    let mut values = vec![T::zero(); 2 * n * n];
    for (i, &a) in points.iter().enumerate() {
        for (j, &b) in points.iter().enumerate().skip(i + 1) {
            let d = a.distance(b);
            let ang = angle_between(a, b);
            values[i * 2 * n + 2 * j] = d;
            values[i * 2 * n + 2 * j + 1] = ang;
            values[j * 2 * n + 2 * i] = d;
            values[j * 2 * n + 2 * i + 1] = ang;
        }
    }
    Ok(RelationMatrix { n, values })
}

/// Sample-and-group plus description: FPS centers, ball neighborhoods and
/// the packed representation.
#[derive(Debug, Clone)]
pub struct GroupedRepresentation<T> {
    pub centers: Vec<usize>,
    pub neighborhoods: Vec<Neighborhood<T>>,
    pub tensor: RiTensor<T>,
}

pub fn sample_and_describe<T: Real>(
    points: &[Point3<T>],
    num_centers: usize,
    radius: T,
    k: usize,
    center: &CenterMode,
    seed: u64,
) -> Result<GroupedRepresentation<T>> {
    let centers = farthest_point_sampling(points, num_centers)?;
    let neighborhoods = ball_query(points, &centers, radius, k)?;
    let tensor = build_ri_tensor(points, &neighborhoods, center, seed)?;
    Ok(GroupedRepresentation {
        centers,
        neighborhoods,
        tensor,
    })
}
