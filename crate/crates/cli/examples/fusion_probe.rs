use gaffe_cli::config::PipelineConfig;
use gaffe_cli::encode::encode_file;
use gaffe_cli::vocab::run_codebook;
use gaffe_core::encoding::Encoder;
use gaffe_core::fusion::{fit_rlmkl, FitConfig, KernelSpec, Task};
use gaffe_core::manifest::parse_manifest;
use ndarray::Array2;
use std::path::Path;

fn main() {
    let records = parse_manifest(Path::new("/tmp/smoke/corpus/manifest.jsonl")).unwrap();
    let n = records.len();
    let train_n = 90;
    // same split as holdout seed 1
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    order.shuffle(&mut rng);
    let (train_idx, test_idx) = order.split_at(train_n);

    let mut config = PipelineConfig::default();
    config.vocab_subsample = 8000;
    let mut train_mask = vec![false; n];
    for &i in train_idx { train_mask[i] = true; }

    let paths = ["/tmp/smoke/run/face.feat", "/tmp/smoke/run/body.feat", "/tmp/smoke/run/scene.feat"];
    let dims = [(16usize, 8usize); 3];
    let mut encoded = Vec::new();
    for (p, (d, k)) in paths.iter().zip(dims) {
        let cb = run_codebook(Path::new(p), d, k, 42, 8000, Some(&train_mask)).unwrap();
        encoded.push(encode_file(Path::new(p), &cb, Encoder::Fisher).unwrap());
    }
    let gather = |idx: &[usize]| -> Vec<Array2<f64>> {
        encoded.iter().map(|m| {
            let dim = m.iter().flatten().next().unwrap().len();
            let mut out = Array2::zeros((idx.len(), dim));
            for (r, &i) in idx.iter().enumerate() {
                for (j, &v) in m[i].as_ref().unwrap().iter().enumerate() { out[[r, j]] = v; }
            }
            out
        }).collect()
    };
    let train = gather(train_idx);
    let test = gather(test_idx);
    let train_y: Vec<f64> = train_idx.iter().map(|&i| records[i].label).collect();
    let test_y: Vec<f64> = test_idx.iter().map(|&i| records[i].label).collect();

    let mae = |p: &[f64], t: &[f64]| -> f64 {
        p.iter().zip(t).map(|(a, b)| (a.clamp(0.0, 5.0) - b).abs()).sum::<f64>() / p.len() as f64
    };

    for cap in [0usize, 16, 32, 64, 89] {
        for outer in [0usize, 50] {
            let mut fc = FitConfig::uniform(Task::Regression, KernelSpec::Linear, 3, 10.0, 0.1);
            if cap > 0 { fc.whiten_dim = Some(cap); }
            fc.max_outer = outer;
            let model = fit_rlmkl(&train, &train_y, &fc).unwrap();
            let tr = model.predict_batch(&train).unwrap();
            let te = model.predict_batch(&test).unwrap();
            let mean_eta: Vec<f64> = (0..3).map(|r| model.support_eta.column(r).mean().unwrap()).collect();
            let vnorm: f64 = model.gating.v.iter().map(|v| v.dot(v)).sum::<f64>().sqrt();
            let t0 = model.objective_trace.first().copied().unwrap_or(0.0);
            let t_last = model.objective_trace.last().copied().unwrap_or(0.0);
            println!(
                "cap {cap:>3} outer {outer:>2}: train {:.4} test {:.4} | eta {:.2}/{:.2}/{:.2} | steps {} J {:.3} -> {:.3} |v| {:.3}",
                mae(&tr, &train_y), mae(&te, &test_y), mean_eta[0], mean_eta[1], mean_eta[2],
                model.objective_trace.len(), t0, t_last, vnorm
            );
        }
    }
}
// supplementary diagnostics entry point replaced inline by editing main above
