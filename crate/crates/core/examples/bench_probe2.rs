use gaffe_core::face::gabor::{build_log_gabor_bank, LogGaborParams};
use gaffe_core::face::lbp_top::{lbp_top, LbpBinning};
use gaffe_core::face::riesz::RieszEngine;
use rand::Rng;
use rand::SeedableRng;
use std::time::Instant;

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let block = ndarray::Array2::from_shape_fn((24, 24), |_| rng.gen_range(0.0..255.0));
    let bank = build_log_gabor_bank(24, LogGaborParams::default()).unwrap();
    let engine = RieszEngine::new(&bank).unwrap();

    let t = Instant::now();
    let mut vols = None;
    for _ in 0..256 {
        vols = Some(engine.volumes(&block.view()).unwrap());
    }
    println!("riesz_volumes x256: {:?}", t.elapsed());

    let vols = vols.unwrap();
    let t = Instant::now();
    for _ in 0..256 {
        for v in &vols.volumes {
            let _ = lbp_top(&v.view(), 8, 1.0, LbpBinning::Uniform).unwrap();
        }
    }
    println!("lbp_top 5 vols x256: {:?}", t.elapsed());
}
