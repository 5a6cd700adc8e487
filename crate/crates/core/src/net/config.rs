use crate::error::{Error, Result};
use crate::median::CenterMode;

/// Sampling, grouping and width settings of the hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Centers sampled in layer 1.
    pub n1: usize,
    /// Centers sampled in layer 2 (out of the layer-1 centers).
    pub n2: usize,
    pub k1: usize,
    pub k2: usize,
    /// Neighbors of the single layer-3 center.
    pub k3: usize,
    pub r1: f64,
    pub r2: f64,
    /// Layer-3 radius; 2 covers the whole unit sphere.
    pub r3: f64,
    /// Channel width `C`.
    pub channels: usize,
    pub layer1_hidden: Vec<usize>,
    pub lift_hidden: usize,
    pub relation_hidden: usize,
    pub head_hidden: usize,
    pub num_classes: usize,
    pub use_global_descriptor: bool,
    pub use_relation_weights: bool,
    pub center: CenterMode,
    /// Seed for the median subset draws.
    pub geometry_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n1: 512,
            n2: 128,
            k1: 16,
            k2: 32,
            k3: 64,
            r1: 0.2,
            r2: 0.4,
            r3: 2.0,
            channels: 128,
            layer1_hidden: vec![32, 64],
            lift_hidden: 64,
            relation_hidden: 64,
            head_hidden: 64,
            num_classes: 5,
            use_global_descriptor: true,
            use_relation_weights: true,
            center: CenterMode::default(),
            geometry_seed: 0,
        }
    }
}

impl NetworkConfig {
    /// Preset for 256-point clouds that trains in minutes on one core.
    pub fn desk() -> Self {
        Self {
            n1: 64,
            n2: 24,
            k1: 12,
            k2: 16,
            k3: 24,
            r1: 0.3,
            r2: 0.6,
            channels: 32,
            layer1_hidden: vec![16, 32],
            lift_hidden: 32,
            relation_hidden: 32,
            head_hidden: 32,
            ..Self::default()
        }
    }

    /// Tiny network used by gradient checks.
    pub fn miniature() -> Self {
        Self {
            n1: 16,
            n2: 8,
            k1: 4,
            k2: 6,
            k3: 8,
            r1: 0.35,
            r2: 0.7,
            channels: 8,
            layer1_hidden: vec![8, 8],
            lift_hidden: 8,
            relation_hidden: 8,
            head_hidden: 8,
            num_classes: 3,
            ..Self::default()
        }
    }

    /// Width of one descriptor row fed to the network.
    pub fn descriptor_width(&self) -> usize {
        if self.use_global_descriptor {
            crate::repr::RI_WIDTH
        } else {
            crate::repr::LOCAL_WIDTH
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(m.to_string()));
        if !(self.n1 > self.n2 && self.n2 >= 1) {
            return fail("need N1 > N2 >= 1");
        }
        if !(self.k1 >= 1 && self.k1 < self.k2 && self.k2 < self.k3) {
            return fail("need 1 <= K1 < K2 < K3");
        }
        if !(self.r1 > 0.0 && self.r1 < self.r2 && self.r3 > 0.0) {
            return fail("need 0 < r1 < r2 and r3 > 0");
        }
        if self.channels == 0 || self.num_classes < 2 {
            return fail("need C >= 1 and at least two classes");
        }
        if self.layer1_hidden.contains(&0)
            || self.lift_hidden == 0
            || self.relation_hidden == 0
            || self.head_hidden == 0
        {
            return fail("hidden widths must be positive");
        }
        if let CenterMode::GeometricMedian {
            num_subsets,
            subset_ratio,
        } = self.center
        {
            if num_subsets == 0 || !(subset_ratio > 0.0) {
                return fail("median needs subsets >= 1 and a positive subset ratio");
            }
        }
        Ok(())
    }
}
