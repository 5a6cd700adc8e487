use proptest::prelude::*;
use rotinv::geom::{
    apply_rotation, ball_query, farthest_point_sampling, normalize_unit_sphere, random_rotation_so3, Point3, PointCloud,
};
use rotinv::median::CenterMode;
use rotinv::median::{approx_geometric_median, MedianParams};
use rotinv::net::{CloudGeometry, NetworkConfig, Trainer};
use rotinv::nn::AdamConfig;
use rotinv::repr::{build_ri_tensor, local_descriptor, support_point};

type P = Point3<f64>;

fn point() -> impl Strategy<Value = P> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn cloud(min: usize, max: usize) -> impl Strategy<Value = Vec<P>> {
    prop::collection::vec(point(), min..max)
}

fn spread(points: &[P]) -> f64 {
    let c = rotinv::geom::centroid(points);
    points.iter().map(|p| p.distance(c)).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_idempotent(points in cloud(2, 40)) {
        prop_assume!(spread(&points) > 1e-3);
        let once = normalize_unit_sphere(&PointCloud::new(points)).unwrap();
        let twice = normalize_unit_sphere(&once).unwrap();
        for (a, b) in once.points.iter().zip(&twice.points) {
            prop_assert!(a.max_abs_diff(*b) < 1e-12);
        }
    }

    #[test]
    fn normalization_is_rotation_and_translation_equivariant(
        points in cloud(2, 40),
        seed in any::<u64>(),
        shift in point(),
        scale in 0.1..10.0f64,
    ) {
        prop_assume!(spread(&points) > 1e-3);
        let r = random_rotation_so3::<f64>(seed);
        let base = normalize_unit_sphere(&PointCloud::new(points.clone())).unwrap();
        let moved: Vec<P> = points.iter().map(|&p| r.apply(p) * scale + shift * 5.0).collect();
        let norm = normalize_unit_sphere(&PointCloud::new(moved)).unwrap();
        for (a, b) in base.points.iter().zip(&norm.points) {
            prop_assert!(r.apply(*a).max_abs_diff(*b) < 1e-9);
        }
    }

    #[test]
    fn mirrored_neighbor_flips_only_theta(
        (px, py) in (-1.0..1.0f64, -1.0..1.0f64),
        (mx, my) in (-0.2..0.2f64, -0.2..0.2f64),
        radius in 0.05..0.5f64,
        q in point(),
    ) {
        prop_assume!(q.z.abs() > 1e-6 && (px * px + py * py).sqrt() > 1e-3);
        let p = Point3::new(px, py, 0.0);
        let m = p + Point3::new(mx, my, 0.0);
        let s = support_point(p, radius);
        let a = local_descriptor(p, m, s, q).to_array();
        let b = local_descriptor(p, m, s, Point3::new(q.x, q.y, -q.z)).to_array();
        prop_assert_eq!(&a[..6], &b[..6]);
        prop_assert_eq!(a[6], -b[6]);
    }

    #[test]
    fn descriptor_values_stay_in_range(points in cloud(12, 48), seed in any::<u64>()) {
        let n = points.len();
        let centers = farthest_point_sampling(&points, 6).unwrap();
        let hoods = ball_query(&points, &centers, 0.5, 8).unwrap();
        let ri = build_ri_tensor(&points, &hoods, &CenterMode::default(), seed).unwrap();
        prop_assert_eq!(ri.values.len(), 6 * 8 * 12);
        for row in ri.values.chunks(12) {
            prop_assert!(row.iter().all(|v| v.is_finite()));
            for &i in &[0usize, 1, 2, 5, 6, 7] {
                prop_assert!(row[i] >= 0.0);
            }
            for &i in &[3usize, 4, 8, 9, 10, 11] {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&row[i]));
            }
        }
        prop_assert!(n >= 12);
    }

    #[test]
    fn f_theta_is_monotone_in_the_dihedral(
        (ax, sgap) in (0.2..0.8f64, 0.05..0.3f64),
        (mx, my) in (-0.1..0.1f64, 0.02..0.2f64),
        (qx, rho) in (0.0..1.0f64, 0.05..0.5f64),
    ) {
        let p = Point3::new(ax, 0.0, 0.0);
        let s = Point3::new(ax + sgap, 0.0, 0.0);
        let m = Point3::new(ax + mx, my, 0.0);
        let f: Vec<f64> = (-15..=15)
            .map(|i| {
                let phi = i as f64 * 0.2;
                local_descriptor(p, m, s, Point3::new(qx, rho * phi.cos(), rho * phi.sin())).f_theta
            })
            .collect();
        let up = f.windows(2).all(|w| w[1] > w[0]);
        let down = f.windows(2).all(|w| w[1] < w[0]);
        prop_assert!(up || down, "{:?}", f);
    }

    #[test]
    fn approximate_median_is_rotation_equivariant(points in cloud(4, 40), seed in any::<u64>(), rot in any::<u64>()) {
        let r = random_rotation_so3::<f64>(rot);
        let params = MedianParams::for_neighborhood(points.len(), 10, 0.9, seed);
        let rotated: Vec<P> = points.iter().map(|&p| r.apply(p)).collect();
        let a = approx_geometric_median(&points, &params).unwrap();
        let b = approx_geometric_median(&rotated, &params).unwrap();
        prop_assert!(r.apply(a).max_abs_diff(b) < 1e-9);
    }

    #[test]
    fn sampling_and_grouping_contracts(points in cloud(8, 40), n in 1usize..8, k in 1usize..10, radius in 0.05..1.5f64) {
        let centers = farthest_point_sampling(&points, n).unwrap();
        prop_assert_eq!(centers[0], 0);
        let mut sorted = centers.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), n);
        for h in ball_query(&points, &centers, radius, k).unwrap() {
            prop_assert_eq!(h.neighbor_indices.len(), k);
            prop_assert_eq!(h.neighbor_indices[0], h.center_index);
            for &j in &h.neighbor_indices {
                prop_assert!(points[j].distance(points[h.center_index]) <= radius);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_loss_stays_finite(clouds in prop::collection::vec(cloud(32, 48), 2..4), seed in any::<u64>()) {
        let cfg = NetworkConfig::miniature();
        let mut trainer = Trainer::<f64>::new(cfg.clone(), seed, AdamConfig::default()).unwrap();
        let batch: Vec<_> = clouds
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let norm = normalize_unit_sphere(&PointCloud::new(c.clone())).ok()?;
                Some((CloudGeometry::from_cloud(&norm, &cfg).ok()?, i % cfg.num_classes))
            })
            .collect();
        prop_assume!(!batch.is_empty());
        for _ in 0..3 {
            prop_assert!(trainer.train_step(&batch).unwrap().is_finite());
        }
        let rotated = apply_rotation(&PointCloud::new(clouds[0].clone()), &random_rotation_so3(seed));
        prop_assert!(rotated.points.iter().all(|p| p.is_finite()));
    }
}
