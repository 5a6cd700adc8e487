//! Train/test rotation regimes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotinv::geom::{apply_rotation, azimuthal_rotation, random_rotation_so3};
use rotinv::{Cloud64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    /// Random angle about the z axis.
    Azimuthal,
    /// Uniformly random proper rotation.
    So3,
    None,
}

impl RotationMode {
    pub fn name(self) -> &'static str {
        match self {
            RotationMode::Azimuthal => "z",
            RotationMode::So3 => "so3",
            RotationMode::None => "none",
        }
    }

    pub fn apply(self, cloud: &Cloud64, seed: u64) -> Cloud64 {
        match self {
            RotationMode::Azimuthal => {
                let angle = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..std::f64::consts::TAU);
                apply_rotation(cloud, &azimuthal_rotation(angle))
            }
            RotationMode::So3 => apply_rotation(cloud, &random_rotation_so3(seed)),
            RotationMode::None => cloud.clone(),
        }
    }
}

impl FromStr for RotationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" | "azimuthal" => Ok(RotationMode::Azimuthal),
            "so3" => Ok(RotationMode::So3),
            "none" => Ok(RotationMode::None),
            other => Err(Error::invalid(format!("unknown rotation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub train: RotationMode,
    pub test: RotationMode,
}

impl Scenario {
    pub const Z_Z: Scenario = Scenario {
        train: RotationMode::Azimuthal,
        test: RotationMode::Azimuthal,
    };
    pub const Z_SO3: Scenario = Scenario {
        train: RotationMode::Azimuthal,
        test: RotationMode::So3,
    };
    pub const SO3_SO3: Scenario = Scenario {
        train: RotationMode::So3,
        test: RotationMode::So3,
    };
    pub const NONE: Scenario = Scenario {
        train: RotationMode::None,
        test: RotationMode::None,
    };
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.train.name(), self.test.name())
    }
}

/// `train/test`, e.g. `z/so3`.
impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (train, test) = s
            .split_once('/')
            .ok_or_else(|| Error::invalid(format!("scenario `{s}` is not of the form train/test")))?;
        Ok(Scenario {
            train: train.parse()?,
            test: test.parse()?,
        })
    }
}
