//! Shared state for the acceptance suite: one synthetic corpus with its
//! extracted features, reused by the end-to-end criteria.
//!
//! Extraction of the 400-image corpus is the dominant cost, so the
//! workspace lives under `target/gaffe-acceptance` and is reused across
//! test invocations when present (delete the directory, or set
//! GAFFE_ACCEPTANCE_FRESH=1, to force a rebuild). All downstream stages
//! are recomputed every run.

use gaffe_cli::config::PipelineConfig;
use gaffe_cli::experiment::{ensure_features, FeaturePaths};
use gaffe_cli::synth::{gen_synthetic, SynthParams};
use gaffe_core::manifest::{parse_manifest, GroupImageRecord};
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

pub const CORPUS_N: usize = 400;
pub const CORPUS_SEED: u64 = 7;

pub struct Workspace {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub records: Vec<GroupImageRecord>,
    pub features: FeaturePaths,
    /// Wall seconds spent on synthesis + extraction in this process
    /// (zero when the cached workspace was reused).
    pub build_seconds: f64,
}

/// Benchmark configuration: the designed defaults with the vocabulary
/// scaled to K=20, D=32 for runtime, linear kernel, 300/100 holdout.
pub fn acceptance_config(seed: u64, workspace: &Workspace) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.seed = seed;
    c.task = "intensity_regression".into();
    c.manifest = workspace.manifest.display().to_string();
    c.out_dir = workspace.dir.join(format!("run_{seed}")).display().to_string();
    c.protocol = "holdout".into();
    c.train_count = 300;
    c.reuse_features = true;
    c.face_pca_dim = 32;
    c.face_words = 20;
    c.body_pca_dim = 32;
    c.body_words = 20;
    c.scene_pca_dim = 32;
    c.scene_words = 20;
    c.vocab_subsample = 12_000;
    c.kernel = "linear".into();
    c.c = 10.0;
    c.eps = 0.1;
    c
}

pub fn workspace() -> &'static Workspace {
    static WS: OnceLock<Workspace> = OnceLock::new();
    WS.get_or_init(build_workspace)
}

/// Serializes the corpus-scale criteria so their timings are meaningful
/// on a small machine.
pub fn heavy_lock() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(Mutex::default)
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn build_workspace() -> Workspace {
    let target = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target");
    let dir = target.join("gaffe-acceptance");
    if std::env::var_os("GAFFE_ACCEPTANCE_FRESH").is_some() && dir.exists() {
        std::fs::remove_dir_all(&dir).expect("wipe acceptance workspace");
    }
    std::fs::create_dir_all(&dir).expect("create acceptance workspace");
    let corpus_dir = dir.join("corpus");
    let manifest = corpus_dir.join("manifest.jsonl");

    let start = Instant::now();
    let mut built = false;
    if !manifest.exists() {
        gen_synthetic(
            &corpus_dir,
            &SynthParams {
                n: CORPUS_N,
                seed: CORPUS_SEED,
                classes: None,
            },
        )
        .expect("synthesize corpus");
        built = true;
    }
    let records = parse_manifest(&manifest).expect("parse corpus manifest");
    assert_eq!(records.len(), CORPUS_N);

    // a reuse-enabled config makes ensure_features skip files that exist
    let mut probe = Workspace {
        dir: dir.clone(),
        manifest: manifest.clone(),
        records,
        features: FeaturePaths::in_dir(&dir),
        build_seconds: 0.0,
    };
    let mut config = acceptance_config(0, &probe);
    config.reuse_features = true;
    let had_features = probe.features.face.exists()
        && probe.features.body.exists()
        && probe.features.scene.exists();
    let (features, failed) =
        ensure_features(&config, &probe.records, &dir).expect("extract features");
    assert!(failed.is_empty(), "synthetic corpus must decode cleanly");
    probe.features = features;
    probe.build_seconds = if built || !had_features {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    probe
}

/// Wall-clock budget equivalent to the stated limit on an 8-core desktop,
/// rescaled for the cores actually available.
pub fn desktop_budget_seconds(limit: f64) -> f64 {
    let cores = std::thread::available_parallelism()
        .map(|c| c.get())
        .unwrap_or(1) as f64;
    limit * (8.0 / cores).max(1.0)
}

pub fn report_criterion(number: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number:>2} [{name}]: {verdict} - {detail}");
    eprintln!("criterion {number:>2} [{name}]: {verdict} - {detail}");
}
