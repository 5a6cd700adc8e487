//! Training and evaluation runs under a rotation scenario.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rotinv::geom::{add_gaussian_noise, augment_scale_jitter, mix_seed, normalize_unit_sphere};
use rotinv::median::CenterMode;
use rotinv::net::{hierarchical_forward, retrieve, CloudGeometry, NetworkParams, Trainer};
use rotinv::nn::AdamConfig;
use rotinv::{Cloud64, Error, Result};

use crate::config::{DatasetSource, ExperimentConfig};
use crate::data::gen_synthetic_dataset;
use crate::io::{load_off, sample_mesh_surface};
use crate::metrics::{compute_metrics, retrieval_metrics, MetricReport};
use crate::scenario::{RotationMode, Scenario};

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Cloud64>,
    pub test: Vec<Cloud64>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let classes: Vec<&str> = cfg.classes.iter().map(String::as_str).collect();
    match &cfg.dataset {
        DatasetSource::Synthetic => Ok(Dataset {
            train: gen_synthetic_dataset(&classes, cfg.train_per_class, cfg.points, mix_seed(cfg.dataset_seed, 0))?,
            test: gen_synthetic_dataset(&classes, cfg.test_per_class, cfg.points, mix_seed(cfg.dataset_seed, 1))?,
        }),
        DatasetSource::OffDirectory(root) => Ok(Dataset {
            train: load_off_split(root, &classes, "train", cfg.train_per_class, cfg)?,
            test: load_off_split(root, &classes, "test", cfg.test_per_class, cfg)?,
        }),
    }
}

fn load_off_split(
    root: &Path,
    classes: &[&str],
    split: &str,
    limit: usize,
    cfg: &ExperimentConfig,
) -> Result<Vec<Cloud64>> {
    let mut out = Vec::new();
    for (label, class) in classes.iter().enumerate() {
        let dir = root.join(class).join(split);
        let mut files: Vec<_> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::invalid(format!("no .off files in {}", dir.display())));
        }
        for (i, path) in files.iter().take(limit).enumerate() {
            let mesh = load_off(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
            let seed = mix_seed(cfg.dataset_seed, (label * 1_000_003 + i) as u64);
            let mut cloud = normalize_unit_sphere(&sample_mesh_surface(&mesh, cfg.points, seed)?)?;
            cloud.label = Some(label);
            out.push(cloud);
        }
    }
    Ok(out)
}

/// Counts how often each phase rotated or augmented a cloud.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HookCounters {
    pub train_rotations: usize,
    pub train_augmentations: usize,
    pub test_rotations: usize,
    pub test_augmentations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Train,
    Test,
}

/// The single place where clouds are rotated and augmented before the network.
fn view(
    cloud: &Cloud64,
    phase: Phase,
    mode: RotationMode,
    cfg: &ExperimentConfig,
    seed: u64,
    counters: &mut HookCounters,
) -> Result<Cloud64> {
    let rotated = mode.apply(cloud, mix_seed(seed, 0));
    let rotated_count = usize::from(mode != RotationMode::None);
    match phase {
        Phase::Train => {
            counters.train_rotations += rotated_count;
            counters.train_augmentations += 1;
            augment_scale_jitter(&rotated, (cfg.scale_min, cfg.scale_max), cfg.jitter, mix_seed(seed, 1))
        }
        Phase::Test => {
            counters.test_rotations += rotated_count;
            Ok(rotated)
        }
    }
}

fn label_of(cloud: &Cloud64) -> Result<usize> {
    cloud.label.ok_or_else(|| Error::invalid("cloud without a label"))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trainer: Trainer<f64>,
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train_model(
    cfg: &ExperimentConfig,
    mode: RotationMode,
    train: &[Cloud64],
    counters: &mut HookCounters,
) -> Result<TrainOutcome> {
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut trainer = Trainer::new(cfg.network_config(), cfg.seed, adam)?;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let epoch_seed = mix_seed(mix_seed(cfg.seed, TRAIN_STREAM), epoch as u64);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed));
        let mut sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = chunk
                .iter()
                .map(|&i| {
                    let seen = view(
                        &train[i],
                        Phase::Train,
                        mode,
                        cfg,
                        mix_seed(epoch_seed, i as u64),
                        counters,
                    )?;
                    Ok((CloudGeometry::from_cloud(&seen, &trainer.config)?, label_of(&train[i])?))
                })
                .collect::<Result<Vec<_>>>()?;
            sum += trainer.train_step(&batch)?;
            batches += 1;
        }
        let mean = sum / batches.max(1) as f64;
        log::info!("epoch {} loss {mean:.6}", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome { trainer, epoch_losses })
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricReport,
    pub predictions: Vec<usize>,
    pub codewords: Vec<Vec<f64>>,
}

/// Codewords and predictions on (rotated, optionally noised) test clouds.
/// Retrieval queries each test cloud against all others.
pub fn evaluate(
    cfg: &ExperimentConfig,
    params: &NetworkParams<f64>,
    mode: RotationMode,
    test: &[Cloud64],
    noise_variance: f64,
    counters: &mut HookCounters,
) -> Result<Evaluation> {
    let net = cfg.network_config();
    let test_seed = mix_seed(cfg.seed, TEST_STREAM);
    let mut predictions = Vec::with_capacity(test.len());
    let mut codewords = Vec::with_capacity(test.len());
    let mut labels = Vec::with_capacity(test.len());
    for (i, cloud) in test.iter().enumerate() {
        let seen = view(cloud, Phase::Test, mode, cfg, mix_seed(test_seed, i as u64), counters)?;
        let noisy = add_gaussian_noise(
            &seen,
            noise_variance,
            mix_seed(mix_seed(cfg.seed, NOISE_STREAM), i as u64),
        )?;
        let geometry = CloudGeometry::from_cloud(&noisy, &net)?;
        let (code, _) = hierarchical_forward(&geometry, params)?;
        let logits = params.head.forward(&code)?.into_data();
        let best = (0..logits.len()).fold(0, |b, j| if logits[j] > logits[b] { j } else { b });
        predictions.push(best);
        codewords.push(code.into_data());
        labels.push(label_of(cloud)?);
    }
    let mut report = compute_metrics(&predictions, &labels, cfg.num_classes())?;
    if codewords.len() > 1 {
        let mut rankings = Vec::with_capacity(codewords.len());
        let mut relevance = Vec::with_capacity(codewords.len());
        for q in 0..codewords.len() {
            let others: Vec<usize> = (0..codewords.len()).filter(|&g| g != q).collect();
            let gallery: Vec<Vec<f64>> = others.iter().map(|&g| codewords[g].clone()).collect();
            rankings.push(retrieve(&codewords[q], &gallery)?);
            relevance.push(others.iter().map(|&g| labels[g] == labels[q]).collect());
        }
        report.retrieval = Some(retrieval_metrics(&rankings, &relevance, cfg.retrieval_n)?);
    }
    Ok(Evaluation {
        report,
        predictions,
        codewords,
    })
}

/// One line of experiment CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub variance: f64,
    pub accuracy: f64,
    pub map: f64,
    pub seed: u64,
    pub wall_seconds: f64,
}

pub const CSV_HEADER: [&str; 6] = ["scenario", "variance", "accuracy", "mAP", "seed", "wall_seconds"];

/// Writes rows; `timing = false` zeroes wall-clock so output is reproducible.
pub fn write_csv<W: Write>(rows: &[CsvRow], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let wall = if timing { r.wall_seconds } else { 0.0 };
        w.write_record([
            r.scenario.clone(),
            r.variance.to_string(),
            r.accuracy.to_string(),
            r.map.to_string(),
            r.seed.to_string(),
            format!("{wall:.3}"),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: MetricReport,
    pub row: CsvRow,
    pub counters: HookCounters,
    pub epoch_losses: Vec<f64>,
    pub params: NetworkParams<f64>,
}

pub fn run_scenario(cfg: &ExperimentConfig, scenario: Scenario) -> Result<ScenarioOutcome> {
    run_scenario_on(cfg, scenario, &load_dataset(cfg)?)
}

/// Trains under `scenario.train`, evaluates under `scenario.test`.
pub fn run_scenario_on(cfg: &ExperimentConfig, scenario: Scenario, data: &Dataset) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut counters = HookCounters::default();
    let trained = train_model(cfg, scenario.train, &data.train, &mut counters)?;
    let eval = evaluate(
        cfg,
        &trained.trainer.params,
        scenario.test,
        &data.test,
        0.0,
        &mut counters,
    )?;
    let row = CsvRow {
        scenario: scenario.to_string(),
        variance: 0.0,
        accuracy: eval.report.accuracy,
        map: eval.report.map(),
        seed: cfg.seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(ScenarioOutcome {
        report: eval.report,
        row,
        counters,
        epoch_losses: trained.epoch_losses,
        params: trained.trainer.params,
    })
}

pub fn center_mode_name(mode: &CenterMode) -> &'static str {
    match mode {
        CenterMode::GeometricMedian { .. } => "geometric",
        CenterMode::Mean => "mean",
    }
}

/// Trains once with the given center estimator, then evaluates the
/// configured scenario at each noise variance.
pub fn noise_bench(cfg: &ExperimentConfig, variances: &[f64], mode: CenterMode, data: &Dataset) -> Result<Vec<CsvRow>> {
    let mut cfg = cfg.clone();
    cfg.network.center = mode;
    cfg.validate()?;
    let label = format!("{}:{}", center_mode_name(&cfg.network.center), cfg.scenario);
    let mut counters = HookCounters::default();
    let start = Instant::now();
    let trained = train_model(&cfg, cfg.scenario.train, &data.train, &mut counters)?;
    let train_seconds = start.elapsed().as_secs_f64();
    variances
        .iter()
        .map(|&variance| {
            let start = Instant::now();
            let eval = evaluate(
                &cfg,
                &trained.trainer.params,
                cfg.scenario.test,
                &data.test,
                variance,
                &mut counters,
            )?;
            Ok(CsvRow {
                scenario: label.clone(),
                variance,
                accuracy: eval.report.accuracy,
                map: eval.report.map(),
                seed: cfg.seed,
                wall_seconds: train_seconds + start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "classes = sphere, box, torus\ntrain_per_class = 3\ntest_per_class = 2\npoints = 48\n\
             n1 = 16\nn2 = 8\nk1 = 4\nk2 = 6\nk3 = 8\nr1 = 0.35\nr2 = 0.7\nchannels = 8\n\
             layer1_hidden = 8\nlift_hidden = 8\nrelation_hidden = 8\nhead_hidden = 8\nepochs = 2\n",
        )
        .unwrap();
        cfg
    }

    #[test]
    fn hooks_separate_training_and_testing() {
        let cfg = small();
        let out = run_scenario(&cfg, Scenario::Z_SO3).unwrap();
        let (n_train, n_test) = (9, 6);
        assert_eq!(
            out.counters,
            HookCounters {
                train_rotations: cfg.epochs * n_train,
                train_augmentations: cfg.epochs * n_train,
                test_rotations: n_test,
                test_augmentations: 0,
            }
        );
        let none = run_scenario(&cfg, Scenario::NONE).unwrap();
        assert_eq!(none.counters.train_rotations + none.counters.test_rotations, 0);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small();
        let a = run_scenario(&cfg, Scenario::Z_Z).unwrap();
        let b = run_scenario(&cfg, Scenario::Z_Z).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.params, b.params);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn untrained_network_is_near_chance() {
        let mut cfg = small();
        cfg.epochs = 0;
        cfg.train_per_class = 1;
        cfg.test_per_class = 60;
        let out = run_scenario(&cfg, Scenario::NONE).unwrap();
        assert!(out.epoch_losses.is_empty());
        assert!(
            (out.report.accuracy - 1.0 / 3.0).abs() < 0.15,
            "{}",
            out.report.accuracy
        );
    }

    #[test]
    fn zero_variance_row_matches_clean_evaluation() {
        let cfg = small();
        let data = load_dataset(&cfg).unwrap();
        let rows = noise_bench(&cfg, &[0.0, 0.01], CenterMode::default(), &data).unwrap();
        let clean = run_scenario_on(&cfg, cfg.scenario, &data).unwrap();
        assert_eq!(rows[0].accuracy, clean.report.accuracy);
        assert_eq!(rows[0].scenario, "geometric:z/so3");
        assert_eq!(rows[1].variance, 0.01);
    }

    #[test]
    fn csv_schema() {
        let row = CsvRow {
            scenario: "z/z".into(),
            variance: 0.0,
            accuracy: 0.5,
            map: 0.25,
            seed: 3,
            wall_seconds: 1.5,
        };
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&row), false, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scenario,variance,accuracy,mAP,seed,wall_seconds\nz/z,0,0.5,0.25,3,0.000\n"
        );
        let mut timed = Vec::new();
        write_csv(&[row], true, &mut timed).unwrap();
        assert!(String::from_utf8(timed).unwrap().ends_with(",1.500\n"));
    }
}
