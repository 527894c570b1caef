//! End-to-end experiment: extract -> per-fold codebooks -> encode -> fit
//! single-modality and fused machines -> metrics report.
//!
//! Codebooks, PCA and whitening are fit per fold on training images only.
//! The canonical report (report.json) contains no wall-clock data so two
//! identical runs produce byte-identical files; timing goes to
//! timing.json next to it.

use crate::config::PipelineConfig;
use crate::encode::encode_file;
use crate::extract::run_extract;
use crate::vocab::run_codebook;
use gaffe_core::container::FeatureReader;
use gaffe_core::derive_seed;
use gaffe_core::descriptor::Modality;
use gaffe_core::encoding::Encoder;
use gaffe_core::error::{Error, Result};
use gaffe_core::folds::kfold_splits;
use gaffe_core::fusion::{fit_rlmkl, ovo_fit, ovo_predict, FitConfig, KernelSpec, Task};
use gaffe_core::manifest::{parse_manifest, GroupImageRecord};
use gaffe_core::metrics::{accuracy, mae};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MODALITIES: [Modality; 3] = [Modality::Face, Modality::Body, Modality::Scene];

#[derive(Debug, Clone, Serialize)]
pub struct ModalityMetrics {
    pub face: f64,
    pub body: f64,
    pub scene: f64,
    pub fusion: f64,
}

impl ModalityMetrics {
    pub fn best_single(&self, lower_is_better: bool) -> f64 {
        if lower_is_better {
            self.face.min(self.body).min(self.scene)
        } else {
            self.face.max(self.body).max(self.scene)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Images excluded by the missing-modality policy.
    pub dropped: usize,
    pub metrics: ModalityMetrics,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub extract_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub task: String,
    pub protocol: String,
    /// "mae" (lower is better) or "accuracy" (higher is better).
    pub metric: String,
    pub image_count: usize,
    pub selected_c: f64,
    pub selected_eps: f64,
    pub folds: Vec<FoldReport>,
    /// Mean of the fold metrics.
    pub aggregate: ModalityMetrics,
    #[serde(skip)]
    pub timing: Timing,
}

pub struct FeaturePaths {
    pub face: PathBuf,
    pub body: PathBuf,
    pub scene: PathBuf,
}

impl FeaturePaths {
    pub fn in_dir(dir: &Path) -> Self {
        FeaturePaths {
            face: dir.join("face.feat"),
            body: dir.join("body.feat"),
            scene: dir.join("scene.feat"),
        }
    }

    pub fn get(&self, modality: Modality) -> &Path {
        match modality {
            Modality::Face => &self.face,
            Modality::Body => &self.body,
            Modality::Scene => &self.scene,
        }
    }
}

/// Extracts the three feature files unless they already exist (with the
/// right image count) and `reuse_features` allows reuse. Returns the paths
/// and the names of images that failed to decode.
pub fn ensure_features(
    config: &PipelineConfig,
    records: &[GroupImageRecord],
    out_dir: &Path,
) -> Result<(FeaturePaths, Vec<String>)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let paths = FeaturePaths::in_dir(out_dir);
    let mut failed = Vec::new();
    for modality in MODALITIES {
        let path = paths.get(modality);
        if config.reuse_features && path.exists() {
            let reader = FeatureReader::open(path)?;
            if reader.image_count as usize == records.len() && reader.modality == modality {
                continue;
            }
        }
        let outcome = run_extract(records, modality, config, path)?;
        failed.extend(outcome.failed);
    }
    Ok((paths, failed))
}

struct Split {
    fold: usize,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn make_splits(config: &PipelineConfig, n: usize) -> Result<Vec<Split>> {
    match config.protocol.as_str() {
        "cv" => {
            let plan = kfold_splits(n, config.folds, config.seed)?;
            Ok((0..config.folds)
                .map(|fold| Split {
                    fold,
                    train: plan.rest_indices(fold),
                    test: plan.fold_indices(fold),
                })
                .collect())
        }
        "holdout" => {
            if config.train_count == 0 || config.train_count >= n {
                return Err(Error::InvalidArgument(format!(
                    "holdout train_count {} outside (0, {n})",
                    config.train_count
                )));
            }
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            order.shuffle(&mut rng);
            Ok(vec![Split {
                fold: 0,
                train: order[..config.train_count].to_vec(),
                test: order[config.train_count..].to_vec(),
            }])
        }
        "split_file" => {
            #[derive(Deserialize)]
            struct SplitFile {
                train: Vec<usize>,
                test: Vec<usize>,
            }
            let path = Path::new(&config.split_file);
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let s: SplitFile =
                serde_json::from_str(&text).map_err(|e| Error::Format(format!("split file: {e}")))?;
            if s.train.iter().chain(&s.test).any(|&i| i >= n) {
                return Err(Error::InvalidArgument("split file index out of range".into()));
            }
            Ok(vec![Split {
                fold: 0,
                train: s.train,
                test: s.test,
            }])
        }
        other => Err(Error::InvalidArgument(format!("unknown protocol {other}"))),
    }
}

/// Per-modality encoded vectors for a fold, with the missing-modality
/// policy already applied.
struct FoldData {
    train_features: Vec<Array2<f64>>,
    test_features: Vec<Array2<f64>>,
    train_labels: Vec<f64>,
    test_labels: Vec<f64>,
    dropped: usize,
}

fn assemble_fold(
    config: &PipelineConfig,
    records: &[GroupImageRecord],
    encoded: &[Vec<Option<Vec<f64>>>],
    split: &Split,
) -> Result<FoldData> {
    let present = |i: usize| encoded.iter().all(|m| m[i].is_some());
    let substitute = config.missing_modality == "mean_substitute";

    // training means per modality for substitution
    let mut train_means: Vec<Vec<f64>> = Vec::new();
    if substitute {
        for modal in encoded {
            let dim = modal
                .iter()
                .flatten()
                .map(|v| v.len())
                .next()
                .ok_or(Error::NoDetections)?;
            let mut mean = vec![0f64; dim];
            let mut count = 0usize;
            for &i in &split.train {
                if let Some(v) = &modal[i] {
                    for (m, x) in mean.iter_mut().zip(v) {
                        *m += x;
                    }
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::NoDetections);
            }
            for m in mean.iter_mut() {
                *m /= count as f64;
            }
            train_means.push(mean);
        }
    }

    let select = |indices: &[usize]| -> (Vec<usize>, usize) {
        if substitute {
            (indices.to_vec(), 0)
        } else {
            let kept: Vec<usize> = indices.iter().copied().filter(|&i| present(i)).collect();
            let dropped = indices.len() - kept.len();
            (kept, dropped)
        }
    };
    let (train_idx, dropped_train) = select(&split.train);
    let (test_idx, dropped_test) = select(&split.test);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::TooFewSamples {
            need: 1,
            have: 0,
        });
    }

    let gather = |indices: &[usize]| -> Vec<Array2<f64>> {
        encoded
            .iter()
            .enumerate()
            .map(|(m, modal)| {
                let dim = modal
                    .iter()
                    .flatten()
                    .map(|v| v.len())
                    .next()
                    .unwrap_or(0);
                let mut out = Array2::zeros((indices.len(), dim));
                for (row, &i) in indices.iter().enumerate() {
                    let vector = modal[i]
                        .as_deref()
                        .unwrap_or_else(|| train_means[m].as_slice());
                    for (j, &v) in vector.iter().enumerate() {
                        out[[row, j]] = v;
                    }
                }
                out
            })
            .collect()
    };

    Ok(FoldData {
        train_features: gather(&train_idx),
        test_features: gather(&test_idx),
        train_labels: train_idx.iter().map(|&i| records[i].label).collect(),
        test_labels: test_idx.iter().map(|&i| records[i].label).collect(),
        dropped: dropped_train + dropped_test,
    })
}

fn fit_config(config: &PipelineConfig, task: Task, kernel: KernelSpec, p: usize, c: f64, eps: f64) -> FitConfig {
    let mut fc = FitConfig::uniform(task, kernel, p, c, eps);
    if config.fusion_whiten_cap > 0 {
        fc.whiten_dim = Some(config.fusion_whiten_cap);
    }
    fc
}

/// Regression predictions are clipped to the label range here, at the
/// pipeline boundary.
fn clip_predictions(preds: &mut [f64]) {
    for p in preds.iter_mut() {
        *p = p.clamp(0.0, 5.0);
    }
}

fn eval_regression(
    config: &PipelineConfig,
    train: &[Array2<f64>],
    train_y: &[f64],
    test: &[Array2<f64>],
    test_y: &[f64],
    kernel: KernelSpec,
    c: f64,
    eps: f64,
) -> Result<f64> {
    let fc = fit_config(config, Task::Regression, kernel, train.len(), c, eps);
    let model = fit_rlmkl(train, train_y, &fc)?;
    let mut preds = model.predict_batch(test)?;
    clip_predictions(&mut preds);
    mae(&preds, test_y)
}

fn eval_ovo(
    config: &PipelineConfig,
    train: &[Array2<f64>],
    train_y: &[i64],
    test: &[Array2<f64>],
    test_y: &[i64],
    kernel: KernelSpec,
    c: f64,
) -> Result<f64> {
    let fc = fit_config(config, Task::Binary, kernel, train.len(), c, 0.1);
    let model = ovo_fit(train, train_y, &fc)?;
    let mut preds = Vec::with_capacity(test_y.len());
    for i in 0..test_y.len() {
        let rows: Vec<&[f64]> = test
            .iter()
            .map(|m| m.row(i).to_slice().expect("contiguous"))
            .collect();
        preds.push(ovo_predict(&model, &rows)?);
    }
    accuracy(&preds, test_y)
}

fn to_classes(labels: &[f64]) -> Result<Vec<i64>> {
    labels
        .iter()
        .map(|&l| {
            if l.fract() == 0.0 {
                Ok(l as i64)
            } else {
                Err(Error::DegenerateLabels(format!(
                    "classification needs integer labels, got {l}"
                )))
            }
        })
        .collect()
}

/// Inner 10-fold grid selection of (C, eps) on the fused machine over the
/// training split; C in {0.1, 1, 10, 100}, eps in {0.05, 0.1, 0.2}.
fn select_hyperparams(
    config: &PipelineConfig,
    train: &[Array2<f64>],
    train_y: &[f64],
    kernel: KernelSpec,
    regression: bool,
) -> Result<(f64, f64)> {
    let c_grid = [0.1, 1.0, 10.0, 100.0];
    let eps_grid: &[f64] = if regression { &[0.05, 0.1, 0.2] } else { &[0.1] };
    let n = train_y.len();
    let k = 10.min(n / 2).max(2);
    let plan = kfold_splits(n, k, derive_seed(config.seed, 0xC0DE))?;
    let classes = if regression { vec![] } else { to_classes(train_y)? };

    let mut best = (config.c, config.eps);
    let mut best_score = f64::INFINITY;
    for &c in &c_grid {
        for &eps in eps_grid {
            let mut total = 0.0;
            for fold in 0..k {
                let inner_train = plan.rest_indices(fold);
                let inner_test = plan.fold_indices(fold);
                let sub = |m: &Array2<f64>, idx: &[usize]| {
                    let mut out = Array2::zeros((idx.len(), m.ncols()));
                    for (r, &i) in idx.iter().enumerate() {
                        out.row_mut(r).assign(&m.row(i));
                    }
                    out
                };
                let tr: Vec<Array2<f64>> = train.iter().map(|m| sub(m, &inner_train)).collect();
                let te: Vec<Array2<f64>> = train.iter().map(|m| sub(m, &inner_test)).collect();
                if regression {
                    let tr_y: Vec<f64> = inner_train.iter().map(|&i| train_y[i]).collect();
                    let te_y: Vec<f64> = inner_test.iter().map(|&i| train_y[i]).collect();
                    total += eval_regression(config, &tr, &tr_y, &te, &te_y, kernel, c, eps)?;
                } else {
                    let tr_y: Vec<i64> = inner_train.iter().map(|&i| classes[i]).collect();
                    let te_y: Vec<i64> = inner_test.iter().map(|&i| classes[i]).collect();
                    // maximize accuracy = minimize (1 - accuracy)
                    total += 1.0 - eval_ovo(config, &tr, &tr_y, &te, &te_y, kernel, c)?;
                }
            }
            let score = total / k as f64;
            if score < best_score {
                best_score = score;
                best = (c, eps);
            }
        }
    }
    Ok(best)
}

/// Runs every fold against already-extracted feature files.
pub fn evaluate_with_features(
    config: &PipelineConfig,
    records: &[GroupImageRecord],
    paths: &FeaturePaths,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let n = records.len();
    let splits = make_splits(config, n)?;
    let encoder: Encoder = config.encoder.parse()?;
    let regression = config.task == "intensity_regression";
    let kernel = config.kernel_spec();

    let dims = |m: Modality| match m {
        Modality::Face => (config.face_pca_dim, config.face_words),
        Modality::Body => (config.body_pca_dim, config.body_words),
        Modality::Scene => (config.scene_pca_dim, config.scene_words),
    };

    let mut fold_reports = Vec::new();
    let mut selected = (config.c, config.eps);
    for split in &splits {
        let mut train_mask = vec![false; n];
        for &i in &split.train {
            train_mask[i] = true;
        }
        // per-fold vocabulary on training images only, then encode all
        let mut encoded = Vec::new();
        for (m_idx, modality) in MODALITIES.iter().enumerate() {
            let (pca_dim, words) = dims(*modality);
            let vocab_seed = derive_seed(config.seed, (split.fold * 8 + m_idx) as u64);
            let codebook = run_codebook(
                paths.get(*modality),
                pca_dim,
                words,
                vocab_seed,
                config.vocab_subsample,
                Some(&train_mask),
            )?;
            encoded.push(encode_file(paths.get(*modality), &codebook, encoder)?);
        }

        let data = assemble_fold(config, records, &encoded, split)?;
        let (c, eps) = if config.select_hyperparams {
            select_hyperparams(config, &data.train_features, &data.train_labels, kernel, regression)?
        } else {
            (config.c, config.eps)
        };
        selected = (c, eps);

        // single-modality machines use the linear kernel
        let mut singles = [0f64; 3];
        let classes_train;
        let classes_test;
        if regression {
            classes_train = vec![];
            classes_test = vec![];
        } else {
            classes_train = to_classes(&data.train_labels)?;
            classes_test = to_classes(&data.test_labels)?;
        }
        for m in 0..3 {
            let train_one = vec![data.train_features[m].clone()];
            let test_one = vec![data.test_features[m].clone()];
            singles[m] = if regression {
                eval_regression(
                    config,
                    &train_one,
                    &data.train_labels,
                    &test_one,
                    &data.test_labels,
                    KernelSpec::Linear,
                    c,
                    eps,
                )?
            } else {
                eval_ovo(
                    config,
                    &train_one,
                    &classes_train,
                    &test_one,
                    &classes_test,
                    KernelSpec::Linear,
                    c,
                )?
            };
        }
        let fusion = if regression {
            eval_regression(
                config,
                &data.train_features,
                &data.train_labels,
                &data.test_features,
                &data.test_labels,
                kernel,
                c,
                eps,
            )?
        } else {
            eval_ovo(
                config,
                &data.train_features,
                &classes_train,
                &data.test_features,
                &classes_test,
                kernel,
                c,
            )?
        };

        fold_reports.push(FoldReport {
            fold: split.fold,
            train_size: data.train_labels.len(),
            test_size: data.test_labels.len(),
            dropped: data.dropped,
            metrics: ModalityMetrics {
                face: singles[0],
                body: singles[1],
                scene: singles[2],
                fusion,
            },
        });
        eprintln!(
            "  fold {}: face {:.4} body {:.4} scene {:.4} fusion {:.4}",
            split.fold,
            singles[0],
            singles[1],
            singles[2],
            fusion
        );
    }

    let k = fold_reports.len() as f64;
    let aggregate = ModalityMetrics {
        face: fold_reports.iter().map(|f| f.metrics.face).sum::<f64>() / k,
        body: fold_reports.iter().map(|f| f.metrics.body).sum::<f64>() / k,
        scene: fold_reports.iter().map(|f| f.metrics.scene).sum::<f64>() / k,
        fusion: fold_reports.iter().map(|f| f.metrics.fusion).sum::<f64>() / k,
    };
    Ok(ExperimentReport {
        config_hash: config.hash(),
        task: config.task.clone(),
        protocol: config.protocol.clone(),
        metric: if regression { "mae".into() } else { "accuracy".into() },
        image_count: n,
        selected_c: selected.0,
        selected_eps: selected.1,
        folds: fold_reports,
        aggregate,
        timing: Timing {
            extract_seconds: 0.0,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// Full experiment from a config: extraction (or reuse), evaluation, and
/// persisted report.json / timing.json in the output directory. The bool
/// is true when some images failed to decode (partial failure).
pub fn run_experiment(config: &PipelineConfig) -> Result<(ExperimentReport, bool)> {
    config.validate()?;
    let start = Instant::now();
    let records = parse_manifest(Path::new(&config.manifest))?;
    let out_dir = PathBuf::from(&config.out_dir);
    let (paths, failed) = ensure_features(config, &records, &out_dir)?;
    let extract_seconds = start.elapsed().as_secs_f64();

    let mut report = evaluate_with_features(config, &records, &paths)?;
    report.timing.extract_seconds = extract_seconds;
    report.timing.total_seconds = start.elapsed().as_secs_f64();
    save_report(&report, &out_dir)?;
    Ok((report, !failed.is_empty()))
}

/// Writes the canonical report (no timing) and the timing sidecar.
pub fn save_report(report: &ExperimentReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;
    let timing_path = out_dir.join("timing.json");
    let timing = serde_json::to_string_pretty(&report.timing).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(&timing_path, timing).map_err(|e| Error::io(&timing_path, e))?;
    Ok(())
}
