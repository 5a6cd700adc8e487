//! Synthetic labeled point clouds sampled from jittered primitive surfaces.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotinv::geom::{mix_seed, normalize_unit_sphere, Point3, PointCloud};
use rotinv::{Cloud64, Error, Point64, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeClass {
    Sphere,
    Box,
    Cylinder,
    Cone,
    Torus,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 5] = [
        ShapeClass::Sphere,
        ShapeClass::Box,
        ShapeClass::Cylinder,
        ShapeClass::Cone,
        ShapeClass::Torus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Sphere => "sphere",
            ShapeClass::Box => "box",
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Cone => "cone",
            ShapeClass::Torus => "torus",
        }
    }
}

impl FromStr for ShapeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeClass::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| Error::UnknownClass(s.trim().to_string()))
    }
}

/// Shape parameters for one draw; `nominal` leaves every primitive at its
/// reference size.
#[derive(Debug, Clone, Copy)]
struct Dims {
    a: f64,
    b: f64,
    c: f64,
}

fn draw_dims<R: Rng>(class: ShapeClass, jitter: bool, rng: &mut R) -> Dims {
    let mut j = |lo: f64, hi: f64| {
        if jitter {
            rng.random_range(lo..hi)
        } else {
            0.5 * (lo + hi)
        }
    };
    match class {
        ShapeClass::Sphere => Dims {
            a: j(0.9, 1.1),
            b: j(0.9, 1.1),
            c: j(0.9, 1.1),
        },
        ShapeClass::Box => Dims {
            a: j(0.6, 1.0),
            b: j(0.5, 0.9),
            c: j(0.4, 0.8),
        },
        ShapeClass::Cylinder | ShapeClass::Cone => Dims {
            a: j(0.4, 0.6),
            b: j(0.8, 1.2),
            c: 0.0,
        },
        ShapeClass::Torus => Dims {
            a: j(0.6, 0.8),
            b: j(0.2, 0.3),
            c: 0.0,
        },
    }
}

fn unit_sphere<R: Rng>(rng: &mut R) -> Point64 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    Point3::new(rho * phi.cos(), rho * phi.sin(), z)
}

fn pick<R: Rng>(areas: &[f64], rng: &mut R) -> usize {
    let total: f64 = areas.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, &a) in areas.iter().enumerate() {
        if u < a {
            return i;
        }
        u -= a;
    }
    areas.len() - 1
}

fn sample_surface<R: Rng>(class: ShapeClass, d: Dims, rng: &mut R) -> Point64 {
    match class {
        ShapeClass::Sphere => {
            let p = unit_sphere(rng);
            Point3::new(p.x * d.a, p.y * d.b, p.z * d.c)
        }
        ShapeClass::Box => {
            let (a, b, c) = (d.a, d.b, d.c);
            let face = pick(&[b * c, b * c, a * c, a * c, a * b, a * b], rng);
            let u = rng.random_range(-0.5..0.5);
            let v = rng.random_range(-0.5..0.5);
            let sign = if face % 2 == 0 { 0.5 } else { -0.5 };
            match face / 2 {
                0 => Point3::new(sign * a, u * b, v * c),
                1 => Point3::new(u * a, sign * b, v * c),
                _ => Point3::new(u * a, v * b, sign * c),
            }
        }
        ShapeClass::Cylinder => {
            let (r, h) = (d.a, d.b);
            let phi = rng.random_range(0.0..TAU);
            match pick(&[TAU * r * h, PI * r * r, PI * r * r], rng) {
                0 => Point3::new(r * phi.cos(), r * phi.sin(), rng.random_range(-0.5..0.5) * h),
                cap => {
                    let rho = r * rng.random::<f64>().sqrt();
                    let z = if cap == 1 { 0.5 * h } else { -0.5 * h };
                    Point3::new(rho * phi.cos(), rho * phi.sin(), z)
                }
            }
        }
        ShapeClass::Cone => {
            let (r, h) = (d.a, d.b);
            let slant = (r * r + h * h).sqrt();
            let phi = rng.random_range(0.0..TAU);
            let t = rng.random::<f64>().sqrt();
            if pick(&[PI * r * slant, PI * r * r], rng) == 0 {
                Point3::new(t * r * phi.cos(), t * r * phi.sin(), h * (0.5 - t))
            } else {
                Point3::new(t * r * phi.cos(), t * r * phi.sin(), -0.5 * h)
            }
        }
        ShapeClass::Torus => {
            let (big, small) = (d.a, d.b);
            let phi = loop {
                let phi = rng.random_range(0.0..TAU);
                if rng.random_range(0.0..big + small) < big + small * phi.cos() {
                    break phi;
                }
            };
            let theta = rng.random_range(0.0..TAU);
            let ring = big + small * phi.cos();
            Point3::new(ring * theta.cos(), ring * theta.sin(), small * phi.sin())
        }
    }
}

/// Raw surface samples of one primitive, before normalization.
pub fn sample_shape(class: ShapeClass, n: usize, jitter: bool, seed: u64) -> Vec<Point64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = draw_dims(class, jitter, &mut rng);
    (0..n).map(|_| sample_surface(class, dims, &mut rng)).collect()
}

/// `per_class` normalized clouds of each named class, labeled by position in
/// `classes` and ordered class-interleaved.
pub fn gen_synthetic_dataset(classes: &[&str], per_class: usize, points: usize, seed: u64) -> Result<Vec<Cloud64>> {
    if classes.is_empty() || per_class == 0 || points == 0 {
        return Err(Error::invalid(
            "class list, per-class count and point count must be positive",
        ));
    }
    let parsed = classes
        .iter()
        .map(|c| c.parse::<ShapeClass>())
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(parsed.len() * per_class);
    for i in 0..per_class {
        for (label, &class) in parsed.iter().enumerate() {
            let cloud_seed = mix_seed(seed, (i * parsed.len() + label) as u64);
            let raw = PointCloud::with_label(sample_shape(class, points, true, cloud_seed), label);
            out.push(normalize_unit_sphere(&raw)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_sphere_has_constant_norm() {
        let pts = sample_shape(ShapeClass::Sphere, 500, false, 3);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn samples_lie_on_their_surfaces() {
        let tol = 1e-9;
        for p in sample_shape(ShapeClass::Box, 300, false, 1) {
            let on = [(p.x, 0.4), (p.y, 0.35), (p.z, 0.3)]
                .iter()
                .any(|&(v, h)| (v.abs() - h).abs() < tol);
            assert!(on, "{p:?}");
        }
        for p in sample_shape(ShapeClass::Torus, 300, false, 1) {
            let ring = (p.x * p.x + p.y * p.y).sqrt() - 0.7;
            assert!((ring * ring + p.z * p.z - 0.25f64 * 0.25).abs() < tol);
        }
        for p in sample_shape(ShapeClass::Cylinder, 300, false, 1) {
            let rho = (p.x * p.x + p.y * p.y).sqrt();
            assert!((rho - 0.5).abs() < tol || (p.z.abs() - 0.5).abs() < tol);
        }
        for p in sample_shape(ShapeClass::Cone, 300, false, 1) {
            let rho = (p.x * p.x + p.y * p.y).sqrt();
            assert!((rho - 0.5 * (0.5 - p.z)).abs() < tol || (p.z + 0.5).abs() < tol);
        }
    }

    #[test]
    fn cylinder_side_share_matches_area() {
        let pts = sample_shape(ShapeClass::Cylinder, 20_000, false, 5);
        let side = pts.iter().filter(|p| p.z.abs() < 0.5 - 1e-12).count() as f64 / 20_000.0;
        assert!((side - 2.0 / 3.0).abs() < 0.02, "{side}");
    }

    #[test]
    fn dataset_is_seeded_and_labeled() {
        let names = ["sphere", "box", "cone"];
        let a = gen_synthetic_dataset(&names, 4, 64, 9).unwrap();
        let b = gen_synthetic_dataset(&names, 4, 64, 9).unwrap();
        let c = gen_synthetic_dataset(&names, 4, 64, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 12);
        assert_eq!(a.iter().map(|x| x.label.unwrap()).collect::<Vec<_>>()[..3], [0, 1, 2]);
        for cloud in &a {
            let max = cloud.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unknown_class_and_zero_counts() {
        assert!(matches!(
            gen_synthetic_dataset(&["icosahedron"], 1, 8, 0),
            Err(Error::UnknownClass(_))
        ));
        assert!(gen_synthetic_dataset(&["sphere"], 0, 8, 0).is_err());
    }

    #[test]
    fn generation_budget() {
        let start = std::time::Instant::now();
        let names: Vec<&str> = ShapeClass::ALL.iter().map(|c| c.name()).collect();
        gen_synthetic_dataset(&names, 40, 256, 1).unwrap();
        assert!(start.elapsed().as_secs_f64() < 5.0);
    }
}
