use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotinv::geom::{
    apply_rotation, normalize_unit_sphere, random_rotation_so3, signed_axis_permutations, Point3, PointCloud,
};
use rotinv::net::{
    cosine_similarity, embed, hierarchical_forward, predict, read_model, region_relation_conv, relation_weight,
    retrieve, write_model, CloudGeometry, NetworkConfig, NetworkParams, RrcParams, Trainer,
};
use rotinv::nn::{Activation, AdamConfig, Dense, Mlp, Tensor};
use rotinv::repr::relation_matrix;

fn blob(n: usize, seed: u64) -> PointCloud<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stretch = [
        rng.random_range(0.5..1.5),
        rng.random_range(0.5..1.5),
        rng.random_range(0.5..1.5),
    ];
    let points = (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-1.0..1.0) * stretch[0],
                rng.random_range(-1.0..1.0) * stretch[1],
                rng.random_range(-1.0..1.0) * stretch[2],
            )
        })
        .collect();
    normalize_unit_sphere(&PointCloud::new(points)).unwrap()
}

fn labeled(n: usize, seed: u64, label: usize) -> PointCloud<f64> {
    PointCloud {
        label: Some(label),
        ..blob(n, seed)
    }
}

fn constant_mlp(inputs: usize, outputs: usize, bias: f64, output: Activation) -> Mlp<f64> {
    Mlp {
        layers: vec![Dense {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![bias; outputs],
        }],
        hidden: Activation::Relu,
        output,
    }
}

fn identity_mlp(width: usize) -> Mlp<f64> {
    let mut weight = vec![0.0; width * width];
    for i in 0..width {
        weight[i * width + i] = 1.0;
    }
    Mlp {
        layers: vec![Dense {
            inputs: width,
            outputs: width,
            weight,
            bias: vec![0.0; width],
        }],
        hidden: Activation::Identity,
        output: Activation::Identity,
    }
}

fn random_input(n: usize, k: usize, d: usize, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * k * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(vec![n, k, d], data).unwrap()
}

fn relation_of(n: usize, seed: u64) -> Tensor<f64> {
    let r = relation_matrix(&blob(n, seed).points).unwrap();
    Tensor::new(vec![n, 2 * n], r.values).unwrap()
}

#[test]
fn zero_relation_mlp_gives_half() {
    let rel = relation_of(8, 1);
    let w = relation_weight(&rel, &constant_mlp(16, 16, 0.0, Activation::Sigmoid)).unwrap();
    assert_eq!(w.shape(), &[8, 16]);
    assert!(w.data().iter().all(|&v| v == 0.5));
}

#[test]
fn relation_weight_rejects_width_mismatch() {
    let rel = relation_of(8, 1);
    assert!(relation_weight(&rel, &constant_mlp(15, 4, 0.0, Activation::Sigmoid)).is_err());
}

#[test]
fn relation_weight_is_rotation_invariant() {
    let cloud = blob(8, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mlp = Mlp::init(&[16, 12, 6], Activation::Relu, Activation::Sigmoid, &mut rng);
    let rotated = apply_rotation(&cloud, &random_rotation_so3(4));
    let a = relation_weight(
        &Tensor::new(vec![8, 16], relation_matrix(&cloud.points).unwrap().values).unwrap(),
        &mlp,
    )
    .unwrap();
    let b = relation_weight(
        &Tensor::new(vec![8, 16], relation_matrix(&rotated.points).unwrap().values).unwrap(),
        &mlp,
    )
    .unwrap();
    assert!(a.max_abs_diff(&b) < 1e-9);
}

#[test]
fn forced_gates_give_identity_and_doubling() {
    let x = random_input(4, 5, 3, 2);
    let rel = relation_of(4, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shared = Mlp::init(&[3, 6], Activation::Relu, Activation::Relu, &mut rng);
    let plain = RrcParams {
        shared: shared.clone(),
        relation: None,
    };
    let (f, _) = region_relation_conv(&x, &rel, &plain).unwrap();
    let closed = RrcParams {
        shared: shared.clone(),
        relation: Some(constant_mlp(8, 6, -800.0, Activation::Sigmoid)),
    };
    let (out0, _) = region_relation_conv(&x, &rel, &closed).unwrap();
    assert_eq!(out0, f);
    let open = RrcParams {
        shared,
        relation: Some(constant_mlp(8, 6, 40.0, Activation::Sigmoid)),
    };
    let (out1, _) = region_relation_conv(&x, &rel, &open).unwrap();
    for (a, b) in out1.data().iter().zip(f.data()) {
        assert_eq!(*a, 2.0 * b);
    }
}

#[test]
fn single_point_hand_oracle() {
    let x = Tensor::new(vec![1, 1, 2], vec![0.5, -2.0]).unwrap();
    let rel = Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap();
    let relation = Mlp {
        layers: vec![Dense {
            inputs: 2,
            outputs: 2,
            weight: vec![1.0, 0.0, 0.0, 1.0],
            bias: vec![0.0, 1.0],
        }],
        hidden: Activation::Relu,
        output: Activation::Sigmoid,
    };
    let params = RrcParams {
        shared: identity_mlp(2),
        relation: Some(relation),
    };
    let (out, _) = region_relation_conv(&x, &rel, &params).unwrap();
    let s1 = 1.0 / (1.0 + (-1.0f64).exp());
    let expected = [0.5 + 0.5 * 0.5, -2.0 + s1 * -2.0];
    assert!((out.data()[0] - expected[0]).abs() < 1e-15);
    assert!((out.data()[1] - expected[1]).abs() < 1e-15);
}

#[test]
fn rrc_rejects_mismatched_relation_rows() {
    let x = random_input(4, 2, 3, 1);
    let rel = relation_of(3, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = RrcParams {
        shared: Mlp::init(&[3, 6], Activation::Relu, Activation::Relu, &mut rng),
        relation: Some(constant_mlp(6, 6, 0.0, Activation::Sigmoid)),
    };
    assert!(region_relation_conv(&x, &rel, &params).is_err());
}

#[test]
fn rrc_ignores_neighbor_order() {
    let (n, k, d) = (5, 6, 4);
    let x = random_input(n, k, d, 8);
    let rel = relation_of(n, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let params = RrcParams {
        shared: Mlp::init(&[d, 7, 5], Activation::Relu, Activation::Relu, &mut rng),
        relation: Some(Mlp::init(
            &[2 * n, 4, 5],
            Activation::Relu,
            Activation::Sigmoid,
            &mut rng,
        )),
    };
    let perm = [3, 0, 5, 1, 4, 2];
    let mut shuffled = Vec::with_capacity(x.data().len());
    for i in 0..n {
        for &j in &perm {
            let start = (i * k + j) * d;
            shuffled.extend_from_slice(&x.data()[start..start + d]);
        }
    }
    let y = Tensor::new(vec![n, k, d], shuffled).unwrap();
    let (a, _) = region_relation_conv(&x, &rel, &params).unwrap();
    let (b, _) = region_relation_conv(&y, &rel, &params).unwrap();
    assert_eq!(a, b);
}

#[test]
fn codeword_shape_and_insufficient_points() {
    let cfg = NetworkConfig::miniature();
    let params = NetworkParams::<f64>::init(&cfg, 1).unwrap();
    let code = embed(&blob(32, 1), &cfg, &params).unwrap();
    assert_eq!(code.len(), cfg.channels);
    assert!(code.iter().all(|v| v.is_finite()));
    let err = embed(&blob(10, 1), &cfg, &params).unwrap_err();
    assert!(err.to_string().contains("insufficient points"), "{err}");
}

fn assert_codeword_invariant(cfg: &NetworkConfig) {
    let params = NetworkParams::<f64>::init(cfg, 11).unwrap();
    for seed in 0..3 {
        let cloud = blob(64, 100 + seed);
        let base = embed(&cloud, cfg, &params).unwrap();
        for r in signed_axis_permutations::<f64>() {
            let code = embed(&apply_rotation(&cloud, &r), cfg, &params).unwrap();
            let worst = base.iter().zip(&code).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-12, "signed permutation moved the codeword by {worst}");
        }
        for r in 0..5 {
            let code = embed(
                &apply_rotation(&cloud, &random_rotation_so3(seed * 10 + r)),
                cfg,
                &params,
            )
            .unwrap();
            assert!(cosine_similarity(&base, &code) >= 1.0 - 1e-6);
        }
    }
}

#[test]
fn codeword_is_rotation_invariant() {
    assert_codeword_invariant(&NetworkConfig::miniature());
}

#[test]
fn ablations_stay_rotation_invariant() {
    let base = NetworkConfig::miniature();
    assert_codeword_invariant(&NetworkConfig {
        use_global_descriptor: false,
        ..base.clone()
    });
    assert_codeword_invariant(&NetworkConfig {
        use_relation_weights: false,
        ..base
    });
}

#[test]
fn zero_head_gives_uniform_logits() {
    let cfg = NetworkConfig::miniature();
    let mut params = NetworkParams::<f64>::init(&cfg, 2).unwrap();
    for layer in &mut params.head.layers {
        layer.weight.iter_mut().for_each(|w| *w = 0.0);
    }
    let geometry = CloudGeometry::from_cloud(&blob(32, 4), &cfg).unwrap();
    let (_, logits) = predict(&geometry, &params).unwrap();
    assert_eq!(logits.len(), cfg.num_classes);
    assert!(logits.iter().all(|&v| v == logits[0]));
}

#[test]
fn retrieval_ranking() {
    let q = vec![1.0, 2.0, 0.0];
    let gallery = vec![
        vec![0.0, 0.0, 5.0],
        vec![2.0, 4.0, 0.0],
        vec![1.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0],
    ];
    assert_eq!(retrieve(&q, &gallery).unwrap(), vec![1, 2, 0, 3]);
    assert!(retrieve(&q, &[vec![1.0]]).is_err());
    let ties = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
    assert_eq!(retrieve(&[1.0, 0.0, 0.0], &ties).unwrap(), vec![0, 1]);
}

#[test]
fn rotated_gallery_is_similar() {
    let cfg = NetworkConfig::miniature();
    let params = NetworkParams::<f64>::init(&cfg, 6).unwrap();
    let cloud = blob(40, 7);
    let q = embed(&cloud, &cfg, &params).unwrap();
    for r in 0..5 {
        let g = embed(&apply_rotation(&cloud, &random_rotation_so3(50 + r)), &cfg, &params).unwrap();
        assert!(cosine_similarity(&q, &g) >= 1.0 - 1e-6);
    }
}

fn block_relative_errors(cfg: &NetworkConfig, seed: u64) -> Vec<(String, f64)> {
    let trainer = Trainer::<f64>::new(cfg.clone(), seed, AdamConfig::default()).unwrap();
    let batch: Vec<(CloudGeometry<f64>, usize)> = (0..2)
        .map(|i| {
            (
                CloudGeometry::from_cloud(&blob(32, seed * 7 + i), cfg).unwrap(),
                i as usize,
            )
        })
        .collect();
    let (_, grads) = trainer.loss_and_gradient(&batch).unwrap();
    let names: Vec<String> = trainer.params.named_arrays().into_iter().map(|(n, _, _)| n).collect();
    let analytic: Vec<Vec<f64>> = grads.arrays().iter().map(|a| a.to_vec()).collect();
    let h = 1e-6;
    let mut probe = trainer.clone();
    let mut out = Vec::new();
    for (block, name) in names.iter().enumerate() {
        let len = analytic[block].len();
        let mut numeric = vec![0.0; len];
        for (j, slot) in numeric.iter_mut().enumerate() {
            let orig = probe.params.arrays_mut()[block][j];
            probe.params.arrays_mut()[block][j] = orig + h;
            let plus = probe.loss_and_gradient(&batch).unwrap().0;
            probe.params.arrays_mut()[block][j] = orig - h;
            let minus = probe.loss_and_gradient(&batch).unwrap().0;
            probe.params.arrays_mut()[block][j] = orig;
            *slot = (plus - minus) / (2.0 * h);
        }
        let a = &analytic[block];
        let diff = a.iter().zip(&numeric).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.push((name.clone(), diff / na.max(nn).max(1e-8)));
    }
    out
}

#[test]
fn gradients_match_finite_differences() {
    for (name, err) in block_relative_errors(&NetworkConfig::miniature(), 3) {
        assert!(err < 1e-4, "{name}: relative error {err}");
    }
}

#[test]
fn ablation_gradients_match_finite_differences() {
    let cfg = NetworkConfig {
        use_relation_weights: false,
        use_global_descriptor: false,
        ..NetworkConfig::miniature()
    };
    for (name, err) in block_relative_errors(&cfg, 4) {
        assert!(err < 1e-4, "{name}: relative error {err}");
    }
}

#[test]
fn overfits_two_clouds() {
    let cfg = NetworkConfig::miniature();
    let mut trainer = Trainer::<f64>::new(
        cfg.clone(),
        5,
        AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
    )
    .unwrap();
    let batch = [labeled(32, 1, 0), labeled(32, 2, 1)];
    let prepared: Vec<_> = batch
        .iter()
        .map(|c| (CloudGeometry::from_cloud(c, &cfg).unwrap(), c.label.unwrap()))
        .collect();
    let mut loss = f64::INFINITY;
    for _ in 0..500 {
        loss = trainer.train_step(&prepared).unwrap();
        assert!(loss.is_finite());
        if loss < 0.01 {
            break;
        }
    }
    assert!(loss < 0.01, "final loss {loss}");
    assert!(trainer.params.is_finite());
    let first = trainer.train_step_clouds(&batch).unwrap();
    assert!(first.is_finite());
}

#[test]
fn trained_predictions_survive_rotation() {
    let cfg = NetworkConfig::miniature();
    let mut trainer = Trainer::<f64>::new(
        cfg.clone(),
        8,
        AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
    )
    .unwrap();
    let batch = [labeled(32, 11, 0), labeled(32, 12, 1), labeled(32, 13, 2)];
    for _ in 0..30 {
        trainer.train_step_clouds(&batch).unwrap();
    }
    for cloud in &batch {
        let g = CloudGeometry::from_cloud(cloud, &cfg).unwrap();
        let (label, _) = predict(&g, &trainer.params).unwrap();
        for seed in 0..5 {
            let rotated = apply_rotation(cloud, &random_rotation_so3(seed));
            let gr = CloudGeometry::from_cloud(&rotated, &cfg).unwrap();
            assert_eq!(predict(&gr, &trainer.params).unwrap().0, label);
        }
    }
}

#[test]
fn saved_model_reproduces_codewords() {
    let cfg = NetworkConfig::miniature();
    let params = NetworkParams::<f64>::init(&cfg, 21).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    write_model(&params, std::fs::File::create(file.path()).unwrap()).unwrap();
    let reader = std::io::BufReader::new(std::fs::File::open(file.path()).unwrap());
    let loaded: NetworkParams<f64> = read_model(reader, &cfg).unwrap();
    let g = CloudGeometry::from_cloud(&blob(32, 3), &cfg).unwrap();
    assert_eq!(
        hierarchical_forward(&g, &params).unwrap().0,
        hierarchical_forward(&g, &loaded).unwrap().0
    );
}
