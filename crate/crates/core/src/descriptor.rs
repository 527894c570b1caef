//! Per-image regional descriptor sets.

use crate::error::{Error, Result};
use ndarray::Array2;

/// The three information channels extracted from a group image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Face,
    Body,
    Scene,
}

impl Modality {
    pub fn tag(&self) -> u8 {
        match self {
            Modality::Face => 0,
            Modality::Body => 1,
            Modality::Scene => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Modality::Face),
            1 => Ok(Modality::Body),
            2 => Ok(Modality::Scene),
            other => Err(Error::Format(format!("unknown modality tag {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Modality::Face => "face",
            Modality::Body => "body",
            Modality::Scene => "scene",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "face" => Ok(Modality::Face),
            "body" => Ok(Modality::Body),
            "scene" => Ok(Modality::Scene),
            other => Err(Error::InvalidArgument(format!("unknown modality '{other}'"))),
        }
    }
}

/// All regional feature vectors of one modality for one image, one row per
/// region. Values are stored as `f32`, matching the on-disk container; all
/// downstream math widens to `f64`.
#[derive(Debug, Clone)]
pub struct DescriptorSet {
    pub modality: Modality,
    pub regions: Array2<f32>,
    /// Regions contributed by each detection, in detection order. Empty for
    /// an image with no detections; sums to `regions.nrows()`.
    pub source_counts: Vec<u32>,
}

impl DescriptorSet {
    pub fn new(modality: Modality, regions: Array2<f32>, source_counts: Vec<u32>) -> Result<Self> {
        let total: u64 = source_counts.iter().map(|&c| c as u64).sum();
        if total != regions.nrows() as u64 {
            return Err(Error::InvalidArgument(format!(
                "source counts sum {total} != region rows {}",
                regions.nrows()
            )));
        }
        if regions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "descriptor set contains non-finite values".into(),
            ));
        }
        Ok(DescriptorSet {
            modality,
            regions,
            source_counts,
        })
    }

    /// Empty set for an image with zero detections.
    pub fn empty(modality: Modality, dim: usize) -> Self {
        DescriptorSet {
            modality,
            regions: Array2::zeros((0, dim)),
            source_counts: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.regions.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.regions.ncols()
    }
}
