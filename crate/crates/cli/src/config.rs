//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rotinv::median::CenterMode;
use rotinv::net::NetworkConfig;
use rotinv::{Error, Result};

use crate::data::ShapeClass;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic,
    /// `root/<class>/{train,test}/*.off`.
    OffDirectory(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub classes: Vec<String>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub points: usize,
    pub dataset_seed: u64,
    pub network: NetworkConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Seed for parameter init, shuffling, augmentation and rotations.
    pub seed: u64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub jitter: f64,
    pub noise_variances: Vec<f64>,
    pub retrieval_n: usize,
    pub scenario: Scenario,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic,
            classes: ShapeClass::ALL.iter().map(|c| c.name().to_string()).collect(),
            train_per_class: 40,
            test_per_class: 20,
            points: 256,
            dataset_seed: 1,
            network: NetworkConfig::desk(),
            epochs: 60,
            batch_size: 6,
            lr: 0.001,
            seed: 0,
            scale_min: 0.8,
            scale_max: 1.25,
            jitter: 0.01,
            noise_variances: vec![0.0, 0.0005, 0.001, 0.002, 0.004],
            retrieval_n: 10,
            scenario: Scenario::Z_SO3,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::invalid(format!("bad value `{raw}` for `{key}`")))
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(key, s))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Applies one setting; unknown keys are errors.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let raw = raw.trim();
        let net = &mut self.network;
        match key.trim() {
            "dataset" => {
                self.dataset = match raw {
                    "synthetic" => DatasetSource::Synthetic,
                    path => DatasetSource::OffDirectory(PathBuf::from(path)),
                }
            }
            "classes" => self.classes = list(key, raw)?,
            "train_per_class" => self.train_per_class = value(key, raw)?,
            "test_per_class" => self.test_per_class = value(key, raw)?,
            "points" => self.points = value(key, raw)?,
            "dataset_seed" => self.dataset_seed = value(key, raw)?,
            "epochs" => self.epochs = value(key, raw)?,
            "batch_size" => self.batch_size = value(key, raw)?,
            "lr" => self.lr = value(key, raw)?,
            "seed" => self.seed = value(key, raw)?,
            "scale_min" => self.scale_min = value(key, raw)?,
            "scale_max" => self.scale_max = value(key, raw)?,
            "jitter" => self.jitter = value(key, raw)?,
            "noise_variances" => self.noise_variances = list(key, raw)?,
            "retrieval_n" => self.retrieval_n = value(key, raw)?,
            "scenario" => self.scenario = raw.parse()?,
            "n1" => net.n1 = value(key, raw)?,
            "n2" => net.n2 = value(key, raw)?,
            "k1" => net.k1 = value(key, raw)?,
            "k2" => net.k2 = value(key, raw)?,
            "k3" => net.k3 = value(key, raw)?,
            "r1" => net.r1 = value(key, raw)?,
            "r2" => net.r2 = value(key, raw)?,
            "r3" => net.r3 = value(key, raw)?,
            "channels" => net.channels = value(key, raw)?,
            "layer1_hidden" => net.layer1_hidden = list(key, raw)?,
            "lift_hidden" => net.lift_hidden = value(key, raw)?,
            "relation_hidden" => net.relation_hidden = value(key, raw)?,
            "head_hidden" => net.head_hidden = value(key, raw)?,
            "use_global_descriptor" => net.use_global_descriptor = value(key, raw)?,
            "use_relation_weights" => net.use_relation_weights = value(key, raw)?,
            "geometry_seed" => net.geometry_seed = value(key, raw)?,
            "center" => {
                net.center = match raw {
                    "geometric" => CenterMode::default(),
                    "mean" => CenterMode::Mean,
                    other => return Err(Error::invalid(format!("unknown center mode `{other}`"))),
                }
            }
            "median_subsets" | "median_ratio" => {
                let CenterMode::GeometricMedian {
                    num_subsets,
                    subset_ratio,
                } = &mut net.center
                else {
                    return Err(Error::invalid(format!("`{key}` needs `center = geometric` first")));
                };
                if key.trim() == "median_subsets" {
                    *num_subsets = value(key, raw)?;
                } else {
                    *subset_ratio = value(key, raw)?;
                }
            }
            other => return Err(Error::invalid(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines over the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected `key = value`"))?;
            self.set(key, raw).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Network settings with the class count taken from `classes`.
    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            num_classes: self.num_classes(),
            ..self.network.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::invalid("at least one class is required"));
        }
        if self.dataset == DatasetSource::Synthetic {
            for c in &self.classes {
                c.parse::<ShapeClass>()?;
            }
        }
        if self.train_per_class == 0 || self.test_per_class == 0 || self.points == 0 || self.batch_size == 0 {
            return Err(Error::invalid("counts must be positive"));
        }
        if self.points < self.network.n1 {
            return Err(Error::InsufficientPoints {
                needed: self.network.n1,
                got: self.points,
            });
        }
        if !(self.lr > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.scale_min > 0.0 && self.scale_max >= self.scale_min) || !(self.jitter >= 0.0) {
            return Err(Error::invalid(
                "augmentation needs 0 < scale_min <= scale_max and jitter >= 0",
            ));
        }
        if self.noise_variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("noise variances must be non-negative"));
        }
        if self.retrieval_n == 0 {
            return Err(Error::invalid("retrieval_n must be positive"));
        }
        self.network_config().validate()
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let n = &self.network;
        let mut s = String::new();
        let dataset = match &self.dataset {
            DatasetSource::Synthetic => "synthetic".to_string(),
            DatasetSource::OffDirectory(p) => p.display().to_string(),
        };
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to string");
        kv("dataset", dataset);
        kv("classes", self.classes.join(", "));
        kv("train_per_class", self.train_per_class.to_string());
        kv("test_per_class", self.test_per_class.to_string());
        kv("points", self.points.to_string());
        kv("dataset_seed", self.dataset_seed.to_string());
        kv("scenario", self.scenario.to_string());
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("lr", self.lr.to_string());
        kv("seed", self.seed.to_string());
        kv("scale_min", self.scale_min.to_string());
        kv("scale_max", self.scale_max.to_string());
        kv("jitter", self.jitter.to_string());
        kv("noise_variances", join(&self.noise_variances));
        kv("retrieval_n", self.retrieval_n.to_string());
        kv("n1", n.n1.to_string());
        kv("n2", n.n2.to_string());
        kv("k1", n.k1.to_string());
        kv("k2", n.k2.to_string());
        kv("k3", n.k3.to_string());
        kv("r1", n.r1.to_string());
        kv("r2", n.r2.to_string());
        kv("r3", n.r3.to_string());
        kv("channels", n.channels.to_string());
        kv("layer1_hidden", join(&n.layer1_hidden));
        kv("lift_hidden", n.lift_hidden.to_string());
        kv("relation_hidden", n.relation_hidden.to_string());
        kv("head_hidden", n.head_hidden.to_string());
        kv("use_global_descriptor", n.use_global_descriptor.to_string());
        kv("use_relation_weights", n.use_relation_weights.to_string());
        kv("geometry_seed", n.geometry_seed.to_string());
        match n.center {
            CenterMode::GeometricMedian {
                num_subsets,
                subset_ratio,
            } => {
                kv("center", "geometric".into());
                kv("median_subsets", num_subsets.to_string());
                kv("median_ratio", subset_ratio.to_string());
            }
            CenterMode::Mean => kv("center", "mean".into()),
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_training_settings() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.batch_size, 6);
        assert_eq!(cfg.lr, 0.001);
        assert_eq!((cfg.scale_min, cfg.scale_max, cfg.jitter), (0.8, 1.25, 0.01));
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_comments_and_overrides() {
        let text = "# experiment\nepochs = 3   # short\n\nclasses = sphere, box\nlayer1_hidden = 8,16\ncenter = mean\nscenario = so3/so3\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.classes, vec!["sphere", "box"]);
        assert_eq!(cfg.network.layer1_hidden, vec![8, 16]);
        assert_eq!(cfg.network.center, CenterMode::Mean);
        assert_eq!(cfg.scenario, Scenario::SO3_SO3);
        assert_eq!(cfg.network_config().num_classes, 2);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail_with_line() {
        let err = ExperimentConfig::from_text("epochs = 2\nlearning_rate = 0.1\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2") && err.contains("learning_rate"), "{err}");
        assert!(ExperimentConfig::from_text("epochs = many\n").is_err());
        assert!(ExperimentConfig::from_text("epochs\n").is_err());
        assert!(ExperimentConfig::from_text("classes = sphere, blob\n").is_err());
        assert!(ExperimentConfig::from_text("k1 = 40\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("median_ratio", "0.75").unwrap();
        cfg.set("noise_variances", "0, 0.1").unwrap();
        cfg.set("r1", "0.3333333333333333").unwrap();
        assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        cfg.set("center", "mean").unwrap();
        assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }
}
