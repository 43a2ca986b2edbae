use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::MIN_CURVED_RESOLUTION;

/// Shape complexity tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complexity {
    #[serde(alias = "a")]
    SinglePrimitive,
    #[serde(alias = "b")]
    MultiPrimitive3,
    #[serde(alias = "c")]
    ComplexPrimitive9,
    #[serde(alias = "d")]
    Augmented,
}

impl Complexity {
    pub fn max_primitives(self) -> usize {
        match self {
            Complexity::SinglePrimitive => 1,
            Complexity::MultiPrimitive3 => 3,
            Complexity::ComplexPrimitive9 | Complexity::Augmented => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Complexity::SinglePrimitive => "single_primitive",
            Complexity::MultiPrimitive3 => "multi_primitive3",
            Complexity::ComplexPrimitive9 => "complex_primitive9",
            Complexity::Augmented => "augmented",
        }
    }
}

pub const DEFAULT_POINTS_PER_SHAPE: usize = 8192;
pub const DEFAULT_AUGMENTATION_PROBABILITY: f64 = 0.5;
pub const DEFAULT_TUBE_RADIUS: f64 = 0.02;
pub const TUBE_RADIUS_RANGE: [f64; 2] = [0.005, 0.05];

fn default_scale_range() -> [f64; 2] {
    [0.3, 1.0]
}
fn default_translation_range() -> [f64; 2] {
    [-0.6, 0.6]
}
fn default_torus_minor_ratio() -> [f64; 2] {
    [0.15, 0.5]
}
fn default_tube_radius() -> f64 {
    DEFAULT_TUBE_RADIUS
}
fn default_points() -> usize {
    DEFAULT_POINTS_PER_SHAPE
}
fn default_resolution() -> usize {
    crate::primitives::DEFAULT_RESOLUTION
}

/// Generation settings for one dataset. Rotations are always uniform over SO(3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub complexity: Complexity,
    /// Probability of appending one augmentation; only the augmented tier
    /// may set a nonzero value (default 0.5 there, 0 elsewhere).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation_probability: Option<f64>,
    /// Per-axis scale factor range.
    #[serde(default = "default_scale_range")]
    pub scale_range: [f64; 2],
    /// Per-axis translation range.
    #[serde(default = "default_translation_range")]
    pub translation_range: [f64; 2],
    /// Torus minor/major radius ratio range, strictly inside (0, 1).
    #[serde(default = "default_torus_minor_ratio")]
    pub torus_minor_ratio: [f64; 2],
    #[serde(default = "default_tube_radius")]
    pub wireframe_tube_radius: f64,
    #[serde(default = "default_points")]
    pub points_per_shape: usize,
    #[serde(default = "default_resolution")]
    pub tessellation_resolution: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self::new(Complexity::Augmented)
    }
}

fn range(field: &str, r: [f64; 2]) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be a finite [low, high] range, got {r:?}")))
    }
}

impl GenConfig {
    pub fn new(complexity: Complexity) -> Self {
        GenConfig {
            complexity,
            augmentation_probability: None,
            scale_range: default_scale_range(),
            translation_range: default_translation_range(),
            torus_minor_ratio: default_torus_minor_ratio(),
            wireframe_tube_radius: DEFAULT_TUBE_RADIUS,
            points_per_shape: DEFAULT_POINTS_PER_SHAPE,
            tessellation_resolution: default_resolution(),
            master_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.points_per_shape = n;
        self
    }

    pub fn with_augmentation_probability(mut self, p: f64) -> Self {
        self.augmentation_probability = Some(p);
        self
    }

    pub fn max_primitives(&self) -> usize {
        self.complexity.max_primitives()
    }

    pub fn effective_augmentation_probability(&self) -> f64 {
        match self.complexity {
            Complexity::Augmented => self
                .augmentation_probability
                .unwrap_or(DEFAULT_AUGMENTATION_PROBABILITY),
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.augmentation_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param("augmentation_probability", format!("must lie in [0, 1], got {p}")));
            }
            if p != 0.0 && self.complexity != Complexity::Augmented {
                return Err(Error::param(
                    "augmentation_probability",
                    format!("must be 0 for the {} tier, got {p}", self.complexity.name()),
                ));
            }
        }
        range("scale_range", self.scale_range)?;
        if self.scale_range[0] <= 0.0 {
            return Err(Error::param("scale_range", "scale factors must be > 0"));
        }
        range("translation_range", self.translation_range)?;
        range("torus_minor_ratio", self.torus_minor_ratio)?;
        let [lo, hi] = self.torus_minor_ratio;
        if lo <= 0.0 || hi >= 1.0 {
            return Err(Error::param(
                "torus_minor_ratio",
                format!("must lie strictly inside (0, 1) so the minor radius stays below the major radius, got {:?}", self.torus_minor_ratio),
            ));
        }
        let [rlo, rhi] = TUBE_RADIUS_RANGE;
        if !(rlo..=rhi).contains(&self.wireframe_tube_radius) {
            return Err(Error::param(
                "wireframe_tube_radius",
                format!("must lie in [{rlo}, {rhi}], got {}", self.wireframe_tube_radius),
            ));
        }
        if self.points_per_shape == 0 {
            return Err(Error::param("points_per_shape", "must be >= 1"));
        }
        if self.tessellation_resolution < MIN_CURVED_RESOLUTION {
            return Err(Error::param(
                "tessellation_resolution",
                format!("must be >= {MIN_CURVED_RESOLUTION}, got {}", self.tessellation_resolution),
            ));
        }
        Ok(())
    }

    /// Copy with the augmentation probability made explicit.
    pub fn resolved(&self) -> GenConfig {
        GenConfig {
            augmentation_probability: Some(self.effective_augmentation_probability()),
            ..self.clone()
        }
    }

    /// FNV-1a 64 of the canonical JSON of the resolved config.
    pub fn content_hash(&self) -> u64 {
        let json = serde_json::to_vec(&self.resolved()).expect("config serializes");
        crate::formats::fnv1a64(&json)
    }

    pub fn config_id(&self) -> String {
        format!("{:016x}", self.content_hash())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiers_fix_max_primitives() {
        assert_eq!(Complexity::SinglePrimitive.max_primitives(), 1);
        assert_eq!(Complexity::MultiPrimitive3.max_primitives(), 3);
        assert_eq!(Complexity::ComplexPrimitive9.max_primitives(), 9);
        assert_eq!(Complexity::Augmented.max_primitives(), 9);
    }

    #[test]
    fn augmentation_probability_defaults() {
        assert_eq!(GenConfig::new(Complexity::Augmented).effective_augmentation_probability(), 0.5);
        assert_eq!(GenConfig::new(Complexity::MultiPrimitive3).effective_augmentation_probability(), 0.0);
        let bad = GenConfig::new(Complexity::SinglePrimitive).with_augmentation_probability(0.3);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn validation_names_fields() {
        let c = GenConfig {
            torus_minor_ratio: [0.2, 1.2],
            ..GenConfig::default()
        };
        match c.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "torus_minor_ratio"),
            other => panic!("{other:?}"),
        }
        assert!(GenConfig::default().with_points(0).validate().is_err());
        assert!(GenConfig::default().validate().is_ok());
    }

    #[test]
    fn hash_tracks_content() {
        let a = GenConfig::default();
        assert_eq!(a.content_hash(), GenConfig::default().content_hash());
        assert_ne!(a.content_hash(), a.clone().with_seed(1).content_hash());
        // An implicit default probability hashes like the explicit one.
        assert_eq!(a.content_hash(), a.clone().with_augmentation_probability(0.5).content_hash());
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let err = serde_json::from_str::<GenConfig>(r#"{"complexity":"a","colour":1}"#);
        assert!(err.is_err());
        let ok: GenConfig = serde_json::from_str(r#"{"complexity":"d"}"#).unwrap();
        assert_eq!(ok, GenConfig::new(Complexity::Augmented));
    }
}
