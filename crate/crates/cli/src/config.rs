//! Pipeline configuration: a flat key-value TOML file mirroring the
//! tuning surface, with the designed defaults (face 16x16/256/180, body
//! 16x16/128/130, scene -/64/10).

use gaffe_core::error::{Error, Result};
use gaffe_core::fusion::KernelSpec;
use serde::{Deserialize, Serialize};
use sha2::Digest;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// "intensity_regression" or "category_ovo".
    pub task: String,
    pub manifest: String,
    pub out_dir: String,
    /// "cv", "holdout" or "split_file".
    pub protocol: String,
    pub folds: usize,
    pub train_count: usize,
    pub split_file: String,
    /// "drop" or "mean_substitute".
    pub missing_modality: String,
    /// Reuse feature files already present in `out_dir`.
    pub reuse_features: bool,
    /// "fisher", "bow" or "vlad".
    pub encoder: String,

    pub face_grid: u32,
    pub face_overlap: f64,
    pub face_pca_dim: usize,
    pub face_words: usize,

    pub body_grid: u32,
    pub body_overlap: f64,
    pub body_pca_dim: usize,
    pub body_words: usize,

    pub scene_superpixels: usize,
    pub scene_ratio: f64,
    pub scene_sift_stride: usize,
    pub scene_pca_dim: usize,
    pub scene_words: usize,

    /// Cap on pooled vocabulary training rows per modality.
    pub vocab_subsample: usize,

    /// "linear", "gaussian" or "hi".
    pub kernel: String,
    pub gaussian_s: f64,
    pub c: f64,
    pub eps: f64,
    /// Inner 10-fold CV over C in {0.1,1,10,100} and eps in
    /// {0.05,0.1,0.2} on the training split.
    pub select_hyperparams: bool,
    /// 0 means min(n-1, d).
    pub fusion_whiten_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            task: "intensity_regression".into(),
            manifest: "manifest.jsonl".into(),
            out_dir: "run".into(),
            protocol: "cv".into(),
            folds: 4,
            train_count: 0,
            split_file: String::new(),
            missing_modality: "drop".into(),
            reuse_features: false,
            encoder: "fisher".into(),
            face_grid: 16,
            face_overlap: 0.7,
            face_pca_dim: 256,
            face_words: 180,
            body_grid: 16,
            body_overlap: 0.7,
            body_pca_dim: 128,
            body_words: 130,
            scene_superpixels: 200,
            scene_ratio: 0.075,
            scene_sift_stride: 2,
            scene_pca_dim: 64,
            scene_words: 10,
            vocab_subsample: 500_000,
            kernel: "linear".into(),
            gaussian_s: 10.0,
            c: 10.0,
            eps: 0.1,
            select_hyperparams: false,
            fusion_whiten_cap: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Format(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("config: {what}")))
            }
        };
        check(
            matches!(self.task.as_str(), "intensity_regression" | "category_ovo"),
            "task must be intensity_regression or category_ovo",
        )?;
        check(
            matches!(self.protocol.as_str(), "cv" | "holdout" | "split_file"),
            "protocol must be cv, holdout or split_file",
        )?;
        check(
            matches!(self.missing_modality.as_str(), "drop" | "mean_substitute"),
            "missing_modality must be drop or mean_substitute",
        )?;
        check(
            matches!(self.encoder.as_str(), "fisher" | "bow" | "vlad"),
            "encoder must be fisher, bow or vlad",
        )?;
        check(
            matches!(self.kernel.as_str(), "linear" | "gaussian" | "hi"),
            "kernel must be linear, gaussian or hi",
        )?;
        check(self.protocol != "cv" || self.folds >= 2, "cv needs folds >= 2")?;
        check(
            self.protocol != "holdout" || self.train_count >= 1,
            "holdout needs train_count >= 1",
        )?;
        check(
            self.protocol != "split_file" || !self.split_file.is_empty(),
            "split_file protocol needs split_file",
        )?;
        check((0.0..1.0).contains(&self.face_overlap), "face_overlap in [0,1)")?;
        check((0.0..1.0).contains(&self.body_overlap), "body_overlap in [0,1)")?;
        check(self.scene_sift_stride >= 1, "scene_sift_stride >= 1")?;
        check(self.c > 0.0, "c > 0")?;
        check(self.eps >= 0.0, "eps >= 0")?;
        check(self.gaussian_s > 0.0, "gaussian_s > 0")?;
        Ok(())
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match self.kernel.as_str() {
            "gaussian" => KernelSpec::Gaussian { s: self.gaussian_s },
            "hi" => KernelSpec::HistogramIntersection,
            _ => KernelSpec::Linear,
        }
    }

    /// SHA-256 over the canonical serialized form; changes iff a field
    /// changes.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let mut hasher = sha2::Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_designed_parameters() {
        let c = PipelineConfig::default();
        assert_eq!((c.face_grid, c.face_pca_dim, c.face_words), (16, 256, 180));
        assert_eq!((c.body_grid, c.body_pca_dim, c.body_words), (16, 128, 130));
        assert_eq!((c.scene_pca_dim, c.scene_words), (64, 10));
        c.validate().unwrap();
    }

    #[test]
    fn hash_changes_iff_config_changes() {
        let a = PipelineConfig::default();
        let b = PipelineConfig::default();
        assert_eq!(a.hash(), b.hash());
        let mut c = PipelineConfig::default();
        c.face_words = 181;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_values_rejected() {
        let mut c = PipelineConfig::default();
        c.task = "nope".into();
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.kernel = "rbf".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn flat_toml_round_trip() {
        let c = PipelineConfig::default();
        let text = toml::to_string(&c).unwrap();
        // flat: no nested tables
        assert!(!text.contains('['));
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.hash(), c.hash());
    }
}
