//! Standalone fuse-train / predict stages over encoded feature files.

use crate::encode::read_encoded;
use gaffe_core::error::{Error, Result};
use gaffe_core::fusion::io::{load_model, save_fusion_model, save_ovo_model, LoadedModel};
use gaffe_core::fusion::{fit_rlmkl, ovo_fit, ovo_predict, FitConfig, KernelSpec, Task};
use gaffe_core::manifest::parse_manifest;
use gaffe_core::metrics::{accuracy, mae};
use ndarray::Array2;
use std::path::Path;

/// Loads encoded files and pairs them with labels; images missing any
/// modality are dropped (reported in the count).
fn load_aligned(
    inputs: &[&Path],
    manifest: &Path,
) -> Result<(Vec<Array2<f64>>, Vec<f64>, usize)> {
    let records = parse_manifest(manifest)?;
    let mut encoded = Vec::new();
    for path in inputs {
        let (_, vectors) = read_encoded(path)?;
        if vectors.len() != records.len() {
            return Err(Error::DimensionMismatch {
                expected: records.len(),
                got: vectors.len(),
            });
        }
        encoded.push(vectors);
    }
    let usable: Vec<usize> = (0..records.len())
        .filter(|&i| encoded.iter().all(|m| m[i].is_some()))
        .collect();
    if usable.is_empty() {
        return Err(Error::NoDetections);
    }
    let dropped = records.len() - usable.len();
    let features: Vec<Array2<f64>> = encoded
        .iter()
        .map(|m| {
            let dim = m.iter().flatten().next().map(|v| v.len()).unwrap_or(0);
            let mut out = Array2::zeros((usable.len(), dim));
            for (row, &i) in usable.iter().enumerate() {
                for (j, &v) in m[i].as_ref().unwrap().iter().enumerate() {
                    out[[row, j]] = v;
                }
            }
            out
        })
        .collect();
    let labels: Vec<f64> = usable.iter().map(|&i| records[i].label).collect();
    Ok((features, labels, dropped))
}

pub struct FuseTrainArgs<'a> {
    pub task: &'a str,
    pub kernel: KernelSpec,
    pub c: f64,
    pub eps: f64,
    pub whiten_cap: Option<usize>,
    pub inputs: Vec<&'a Path>,
    pub manifest: &'a Path,
    pub out: &'a Path,
}

pub fn fuse_train(args: &FuseTrainArgs) -> Result<usize> {
    let (features, labels, dropped) = load_aligned(&args.inputs, args.manifest)?;
    if dropped > 0 {
        eprintln!("note: dropped {dropped} images missing a modality");
    }
    let p = features.len();
    match args.task {
        "reg" => {
            let mut fc = FitConfig::uniform(Task::Regression, args.kernel, p, args.c, args.eps);
            fc.whiten_dim = args.whiten_cap;
            let model = fit_rlmkl(&features, &labels, &fc)?;
            save_fusion_model(args.out, &model)?;
        }
        "ovo" => {
            let classes: Vec<i64> = labels
                .iter()
                .map(|&l| {
                    if l.fract() == 0.0 {
                        Ok(l as i64)
                    } else {
                        Err(Error::DegenerateLabels(format!("non-integer class {l}")))
                    }
                })
                .collect::<Result<_>>()?;
            let mut fc = FitConfig::uniform(Task::Binary, args.kernel, p, args.c, args.eps);
            fc.whiten_dim = args.whiten_cap;
            let model = ovo_fit(&features, &classes, &fc)?;
            save_ovo_model(args.out, &model)?;
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "task must be reg or ovo, got {other}"
            )))
        }
    }
    Ok(labels.len())
}

/// Predicts every image in the encoded inputs; lines are
/// `index,prediction` (or `index,skipped` when a modality is missing).
/// With a manifest, the matching metric is printed to stderr.
pub fn predict(
    model_path: &Path,
    inputs: &[&Path],
    manifest: Option<&Path>,
    out: &mut dyn std::io::Write,
) -> Result<()> {
    let model = load_model(model_path)?;
    let mut encoded = Vec::new();
    let mut count = None;
    for path in inputs {
        let (_, vectors) = read_encoded(path)?;
        if let Some(c) = count {
        if vectors.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: vectors.len(),
                });
            }
        }
        count = Some(vectors.len());
        encoded.push(vectors);
    }
    let n = count.unwrap_or(0);
    let mut predictions: Vec<Option<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        if encoded.iter().any(|m| m[i].is_none()) {
            predictions.push(None);
            writeln!(out, "{i},skipped").map_err(|e| Error::io("<out>", e))?;
            continue;
        }
        let rows: Vec<&[f64]> = encoded
            .iter()
            .map(|m| m[i].as_ref().unwrap().as_slice())
            .collect();
        let value = match &model {
            LoadedModel::Single(m) => {
                let raw = m.predict(&rows)?;
                if m.task == Task::Regression {
                    raw.clamp(0.0, 5.0)
                } else {
                    raw
                }
            }
            LoadedModel::Ovo(m) => ovo_predict(m, &rows)? as f64,
        };
        predictions.push(Some(value));
        writeln!(out, "{i},{value}").map_err(|e| Error::io("<out>", e))?;
    }

    if let Some(manifest) = manifest {
        let records = parse_manifest(manifest)?;
        let pairs: Vec<(f64, f64)> = predictions
            .iter()
            .zip(&records)
            .filter_map(|(p, r)| p.map(|v| (v, r.label)))
            .collect();
        if !pairs.is_empty() {
            let (preds, truths): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            match &model {
                LoadedModel::Single(m) if m.task == Task::Regression => {
                    eprintln!("mae: {:.4}", mae(&preds, &truths)?);
                }
                _ => {
                    let p: Vec<i64> = preds.iter().map(|&v| v as i64).collect();
                    let t: Vec<i64> = truths.iter().map(|&v| v as i64).collect();
                    eprintln!("accuracy: {:.4}", accuracy(&p, &t)?);
                }
            }
        }
    }
    Ok(())
}
