use gaffe_core::body::{BodyExtractor, BodyParams};
use gaffe_core::face::{FaceExtractor, FaceParams};
use gaffe_core::scene::{SceneExtractor, SceneParams};
use rand::Rng;
use rand::SeedableRng;
use std::time::Instant;

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let face = image::GrayImage::from_fn(128, 128, |_, _| image::Luma([rng.gen::<u8>()]));
    let fx = FaceExtractor::new(&FaceParams::default()).unwrap();
    let t = Instant::now();
    let d = fx.descriptor(&face).unwrap();
    println!("face descriptor: {:?} (dim {:?})", t.elapsed(), d.dim());
    let t = Instant::now();
    let _ = fx.descriptor(&face).unwrap();
    println!("face descriptor 2nd: {:?}", t.elapsed());

    let bx = BodyExtractor::new(&BodyParams::default()).unwrap();
    let t = Instant::now();
    let d = bx.descriptor(&face).unwrap();
    println!("body descriptor: {:?} (dim {:?})", t.elapsed(), d.dim());

    let img = image::RgbImage::from_fn(256, 192, |x, y| {
        image::Rgb([(x % 251) as u8, (y % 241) as u8, ((x + y) % 239) as u8])
    });
    let sx = SceneExtractor::new(SceneParams::default());
    let t = Instant::now();
    let d = sx.extract(&img).unwrap();
    println!("scene extract: {:?} (regions {})", t.elapsed(), d.nrows());

    // PCA + eigen scaling probe
    let t = Instant::now();
    let data = ndarray::Array2::from_shape_fn((12000, 1106), |_| rng.gen_range(-1.0f64..1.0));
    println!("alloc 12000x1106: {:?}", t.elapsed());
    let t = Instant::now();
    let model = gaffe_core::encoding::fit_pca(&data.view(), 32).unwrap();
    println!("fit_pca 12000x1106 -> 32: {:?} (basis {:?})", t.elapsed(), model.basis.dim());
}
