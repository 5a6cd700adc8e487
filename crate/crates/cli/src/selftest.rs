//! Invariance checks shared by the `selftest` command and the acceptance run.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotinv::geom::{apply_rotation, mix_seed, random_rotation_so3, signed_axis_permutations, Point3, RotationMatrix};
use rotinv::net::{cosine_similarity, embed, NetworkConfig, NetworkParams};
use rotinv::repr::{local_descriptor, sample_and_describe, support_point};
use rotinv::{Cloud64, Error, Result};

/// Largest deviation seen by one check, against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// Max componentwise change of the layer-1 descriptor tensor under random
/// rotations and under every signed axis permutation: `(so3, permutation)`.
pub fn descriptor_deviation(
    clouds: &[Cloud64],
    rotations: usize,
    net: &NetworkConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    let describe = |c: &Cloud64| sample_and_describe(&c.points, net.n1, net.r1, net.k1, &net.center, net.geometry_seed);
    let perms = signed_axis_permutations::<f64>();
    let (mut so3, mut perm) = (0.0f64, 0.0f64);
    for (i, cloud) in clouds.iter().enumerate() {
        let base = describe(cloud)?.tensor;
        for r in 0..rotations {
            let rot = random_rotation_so3(mix_seed(mix_seed(seed, i as u64), r as u64));
            so3 = so3.max(base.max_abs_diff(&describe(&apply_rotation(cloud, &rot))?.tensor)?);
        }
        for p in &perms {
            perm = perm.max(base.max_abs_diff(&describe(&apply_rotation(cloud, p))?.tensor)?);
        }
    }
    Ok((so3, perm))
}

/// Mirror pairs `q`, `q'` reflected through the reference-triangle plane;
/// returns the number of constructions violating the expected pattern.
pub fn mirror_failures(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planar = |rng: &mut ChaCha8Rng| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
    let mut failures = 0;
    for _ in 0..trials {
        let p = planar(&mut rng);
        let m = p + planar(&mut rng) * 0.2;
        let s = support_point(p, rng.random_range(0.05..0.5));
        let q = p + Point3::new(
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(0.01..0.3),
        );
        let mirror = Point3::new(q.x, q.y, -q.z);
        let a = local_descriptor(p, m, s, q).to_array();
        let b = local_descriptor(p, m, s, mirror).to_array();
        let ok = a[..6] == b[..6] && a[6] == -b[6] && a[6] != 0.0;
        failures += usize::from(!ok);
    }
    failures
}

/// `(1 − min cosine)` over random rotations and max componentwise change
/// over signed permutations of the codeword.
pub fn codeword_deviation(
    clouds: &[Cloud64],
    rotations: usize,
    net: &NetworkConfig,
    params: &NetworkParams<f64>,
    seed: u64,
) -> Result<(f64, f64)> {
    let perms: Vec<RotationMatrix<f64>> = signed_axis_permutations();
    let (mut cos_dev, mut perm) = (0.0f64, 0.0f64);
    for (i, cloud) in clouds.iter().enumerate() {
        let base = embed(cloud, net, params)?;
        for r in 0..rotations {
            let rot = random_rotation_so3(mix_seed(mix_seed(seed, i as u64), r as u64));
            let code = embed(&apply_rotation(cloud, &rot), net, params)?;
            cos_dev = cos_dev.max(1.0 - cosine_similarity(&base, &code));
        }
        for p in perms.iter().step_by(5) {
            let code = embed(&apply_rotation(cloud, p), net, params)?;
            let d = base.iter().zip(&code).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            perm = perm.max(d);
        }
    }
    Ok((cos_dev, perm))
}

/// Invariance suite on `clouds` for the full network and both ablations.
pub fn run_selftest(clouds: &[Cloud64], net: &NetworkConfig, seed: u64) -> Result<Vec<Check>> {
    if clouds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (so3, perm) = descriptor_deviation(clouds, 3, net, seed)?;
    let mut checks = vec![
        Check {
            name: "descriptor_so3".into(),
            deviation: so3,
            tolerance: 1e-5,
        },
        Check {
            name: "descriptor_signed_permutation".into(),
            deviation: perm,
            tolerance: 1e-12,
        },
        Check {
            name: "mirror_failures".into(),
            deviation: mirror_failures(1000, seed) as f64,
            tolerance: 0.0,
        },
    ];
    let variants = [
        ("full", net.clone()),
        (
            "local_only",
            NetworkConfig {
                use_global_descriptor: false,
                ..net.clone()
            },
        ),
        (
            "no_relation",
            NetworkConfig {
                use_relation_weights: false,
                ..net.clone()
            },
        ),
    ];
    for (name, cfg) in variants {
        let params = NetworkParams::init(&cfg, seed)?;
        let (cos_dev, perm) = codeword_deviation(clouds, 2, &cfg, &params, seed)?;
        checks.push(Check {
            name: format!("codeword_so3_{name}"),
            deviation: cos_dev,
            tolerance: 1e-6,
        });
        checks.push(Check {
            name: format!("codeword_signed_permutation_{name}"),
            deviation: perm,
            tolerance: 1e-12,
        });
    }
    Ok(checks)
}

pub fn write_checks<W: Write>(checks: &[Check], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["check", "deviation", "tolerance", "passed"])
        .map_err(io)?;
    for c in checks {
        w.write_record([
            c.name.clone(),
            format!("{:e}", c.deviation),
            format!("{:e}", c.tolerance),
            c.passed().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_synthetic_dataset;

    #[test]
    fn small_suite_passes() {
        let clouds = gen_synthetic_dataset(&["box", "torus"], 1, 48, 2).unwrap();
        let checks = run_selftest(&clouds, &NetworkConfig::miniature(), 4).unwrap();
        assert_eq!(checks.len(), 9);
        for c in &checks {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn mirror_constructions_hold() {
        assert_eq!(mirror_failures(1000, 1), 0);
    }
}
