//! Synthetic desk-scale corpus generator.
//!
//! Each image carries the same latent affect level through three partial,
//! independently-noised channels: smile-arc curvature on the faces, stripe
//! orientation on the torsos, and a warm/cool background tint. No single
//! channel determines the label, so fusing the three modalities should
//! beat any one of them.

use gaffe_core::error::{Error, Result};
use image::{Rgb, RgbImage};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const IMAGE_W: u32 = 256;
pub const IMAGE_H: u32 = 192;

#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub n: usize,
    pub seed: u64,
    /// `None` renders six intensity levels labeled 0-5; `Some(c)` renders
    /// `c` category prototypes labeled `0..c`.
    pub classes: Option<usize>,
}

#[derive(Serialize)]
struct ManifestLine {
    image: String,
    label: f64,
    faces: Vec<[u32; 4]>,
    bodies: Vec<[u32; 4]>,
}

struct Person {
    cx: f64,
    cy: f64,
    radius: f64,
}

/// Renders the corpus into `out_dir` and writes `manifest.jsonl`.
/// Deterministic in `(n, seed, classes)`.
pub fn gen_synthetic(out_dir: &Path, params: &SynthParams) -> Result<PathBuf> {
    if params.n < 20 {
        return Err(Error::InvalidArgument(format!(
            "synthetic corpus needs n >= 20, got {}",
            params.n
        )));
    }
    let levels = params.classes.unwrap_or(6);
    if !(2..=6).contains(&levels) {
        return Err(Error::InvalidArgument("classes must be in 2..=6".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // balanced label list, then shuffled
    let mut labels: Vec<usize> = (0..params.n).map(|i| i % levels).collect();
    use rand::seq::SliceRandom;
    labels.shuffle(&mut rng);

    let manifest_path = out_dir.join("manifest.jsonl");
    let mut manifest =
        std::fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;

    for (idx, &label) in labels.iter().enumerate() {
        let intensity = if levels == 6 {
            label as f64
        } else {
            label as f64 * 5.0 / (levels - 1) as f64
        };
        let name = format!("img_{idx:04}.png");
        let (img, faces, bodies) = render_image(&mut rng, intensity);
        let path = out_dir.join(&name);
        img.save(&path).map_err(|e| Error::Image {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let line = ManifestLine {
            image: name,
            label: label as f64,
            faces,
            bodies,
        };
        let json = serde_json::to_string(&line).expect("serializable");
        writeln!(manifest, "{json}").map_err(|e| Error::io(&manifest_path, e))?;
    }
    Ok(manifest_path)
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    // Box-Muller from two uniform draws
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: [f64; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(
            x as u32,
            y as u32,
            Rgb([
                color[0].clamp(0.0, 255.0) as u8,
                color[1].clamp(0.0, 255.0) as u8,
                color[2].clamp(0.0, 255.0) as u8,
            ]),
        );
    }
}

fn render_image(rng: &mut ChaCha8Rng, intensity: f64) -> (RgbImage, Vec<[u32; 4]>, Vec<[u32; 4]>) {
    let (w, h) = (IMAGE_W as i64, IMAGE_H as i64);
    let mut img = RgbImage::new(IMAGE_W, IMAGE_H);

    // Each modality reads the latent level through its own per-image noise
    // (which no amount of per-person averaging removes), so the three
    // channels stay comparably informative and complementary.
    let face_base = (intensity + gauss(rng, 0.70)).clamp(0.0, 5.0);
    let body_base = (intensity + gauss(rng, 0.60)).clamp(0.0, 5.0);

    // background tint carries a noisy copy of the intensity
    let cool = [72.0, 102.0, 168.0];
    let warm = [208.0, 156.0, 88.0];
    let t_bg = ((intensity + gauss(rng, 0.80)) / 5.0).clamp(0.0, 1.0);
    let base = lerp3(cool, warm, t_bg);
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..5)
        .map(|_| {
            let tint = rng.gen_range(-30.0..30.0);
            (
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(18.0..55.0),
                [tint, rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)],
            )
        })
        .collect();
    for y in 0..h {
        let shade = 0.85 + 0.3 * y as f64 / h as f64;
        for x in 0..w {
            let mut color = [base[0] * shade, base[1] * shade, base[2] * shade];
            for &(bx, by, br, tint) in &blobs {
                let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                let fall = (-d2 / (2.0 * br * br)).exp();
                for c in 0..3 {
                    color[c] += tint[c] * fall;
                }
            }
            let noise = rng.gen_range(-6.0..6.0);
            for c in color.iter_mut() {
                *c += noise;
            }
            put(&mut img, x, y, color);
        }
    }

    // place 1..=6 non-colliding people
    let count = rng.gen_range(1..=6usize);
    let mut people: Vec<Person> = Vec::new();
    for _ in 0..count {
        let mut placed = false;
        for _try in 0..50 {
            let radius = rng.gen_range(13.0..20.0);
            let cx = rng.gen_range(radius + 8.0..w as f64 - radius - 8.0);
            let cy = rng.gen_range(radius + 14.0..h as f64 * 0.45);
            if people
                .iter()
                .all(|p| (p.cx - cx).abs() > (p.radius + radius) * 1.35)
            {
                people.push(Person { cx, cy, radius });
                placed = true;
                break;
            }
        }
        if !placed && people.is_empty() {
            people.push(Person {
                cx: w as f64 / 2.0,
                cy: h as f64 / 4.0,
                radius: 16.0,
            });
        }
    }

    let mut faces = Vec::new();
    let mut bodies = Vec::new();
    for person in &people {
        let (cx, cy, r) = (person.cx, person.cy, person.radius);

        // torso with orientation-coded stripes
        let torso_level = (body_base + gauss(rng, 0.4)).clamp(0.0, 5.0);
        let theta = (torso_level / 5.0 * 80.0 + gauss(rng, 5.0)).to_radians();
        let period = rng.gen_range(6.0..9.0);
        let palette = [
            [60.0, 90.0, 140.0],
            [140.0, 60.0, 80.0],
            [70.0, 120.0, 70.0],
            [120.0, 100.0, 60.0],
        ];
        let base_cloth = palette[rng.gen_range(0..palette.len())];
        let alt_cloth = [
            base_cloth[0] + 55.0,
            base_cloth[1] + 55.0,
            base_cloth[2] + 55.0,
        ];
        let tw = 3.0 * r;
        let th = 3.2 * r;
        let tx0 = (cx - tw / 2.0).max(0.0) as i64;
        let tx1 = ((cx + tw / 2.0) as i64).min(w - 1);
        let ty0 = (cy + 0.95 * r) as i64;
        let ty1 = ((cy + 0.95 * r + th) as i64).min(h - 1);
        let (dir_x, dir_y) = (theta.cos(), theta.sin());
        for y in ty0..=ty1 {
            for x in tx0..=tx1 {
                let phase = (x as f64 * dir_x + y as f64 * dir_y) * 2.0 * std::f64::consts::PI
                    / period;
                let cloth = if phase.sin() > 0.0 { base_cloth } else { alt_cloth };
                let noise = rng.gen_range(-5.0..5.0);
                put(
                    &mut img,
                    x,
                    y,
                    [cloth[0] + noise, cloth[1] + noise, cloth[2] + noise],
                );
            }
        }

        // face with curvature-coded smile
        let skin = [
            228.0 + rng.gen_range(-8.0..8.0),
            198.0 + rng.gen_range(-8.0..8.0),
            168.0 + rng.gen_range(-8.0..8.0),
        ];
        let ir = r.ceil() as i64;
        for dy in -ir..=ir {
            for dx in -ir..=ir {
                if (dx * dx + dy * dy) as f64 <= r * r {
                    let shade = 1.0 - 0.15 * (dx * dx + dy * dy) as f64 / (r * r);
                    let noise = rng.gen_range(-4.0..4.0);
                    put(
                        &mut img,
                        cx as i64 + dx,
                        cy as i64 + dy,
                        [
                            skin[0] * shade + noise,
                            skin[1] * shade + noise,
                            skin[2] * shade + noise,
                        ],
                    );
                }
            }
        }
        let eye_r = (r / 6.0).max(1.0) as i64;
        for &side in &[-1.0, 1.0] {
            let ex = cx + side * 0.38 * r;
            let ey = cy - 0.30 * r;
            for dy in -eye_r..=eye_r {
                for dx in -eye_r..=eye_r {
                    if dx * dx + dy * dy <= eye_r * eye_r {
                        put(&mut img, ex as i64 + dx, ey as i64 + dy, [42.0, 32.0, 32.0]);
                    }
                }
            }
        }
        let face_level = (face_base + gauss(rng, 0.6)).clamp(0.0, 5.0);
        let depth = face_level / 5.0 * 0.5 * r;
        let wm = 0.55 * r;
        let y_mouth = cy + 0.32 * r;
        let steps = (wm * 8.0) as i64;
        for i in -steps..=steps {
            let dx = i as f64 / steps as f64 * wm;
            let yy = y_mouth + depth * (1.0 - (dx / wm) * (dx / wm));
            for t in 0..2 {
                put(
                    &mut img,
                    (cx + dx).round() as i64,
                    yy.round() as i64 + t,
                    [118.0, 42.0, 42.0],
                );
            }
        }

        // boxes, clamped inside the image
        let side = (2.6 * r).ceil() as u32;
        let side = side.min(IMAGE_W).min(IMAGE_H);
        let fx = ((cx - side as f64 / 2.0).round().max(0.0) as u32).min(IMAGE_W - side);
        let fy = ((cy - side as f64 / 2.0).round().max(0.0) as u32).min(IMAGE_H - side);
        faces.push([fx, fy, side, side]);

        let bx0 = tx0.min(fx as i64) as u32;
        let by0 = fy;
        let bx1 = (tx1.max((fx + side) as i64 - 1) as u32).min(IMAGE_W - 1);
        let by1 = (ty1.max((fy + side) as i64 - 1) as u32).min(IMAGE_H - 1);
        bodies.push([bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1]);
    }

    (img, faces, bodies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaffe_core::parse_manifest;

    #[test]
    fn corpus_is_deterministic_and_balanced() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let params = SynthParams {
            n: 24,
            seed: 11,
            classes: None,
        };
        let ma = gen_synthetic(dir_a.path(), &params).unwrap();
        let mb = gen_synthetic(dir_b.path(), &params).unwrap();
        assert_eq!(
            std::fs::read(&ma).unwrap(),
            std::fs::read(&mb).unwrap(),
            "manifests differ across identical runs"
        );
        // image bytes identical too
        let img_a = std::fs::read(dir_a.path().join("img_0000.png")).unwrap();
        let img_b = std::fs::read(dir_b.path().join("img_0000.png")).unwrap();
        assert_eq!(img_a, img_b);

        let records = parse_manifest(&ma).unwrap();
        assert_eq!(records.len(), 24);
        let mut counts = [0usize; 6];
        for r in &records {
            counts[r.label as usize] += 1;
            assert!(!r.face_boxes.is_empty(), "every record needs a face box");
            assert!(!r.body_boxes.is_empty());
        }
        assert_eq!(counts, [4; 6]);
    }

    #[test]
    fn class_mode_labels() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            n: 21,
            seed: 3,
            classes: Some(3),
        };
        let manifest = gen_synthetic(dir.path(), &params).unwrap();
        let records = parse_manifest(&manifest).unwrap();
        assert!(records.iter().all(|r| (0.0..=2.0).contains(&r.label)));
        let c0 = records.iter().filter(|r| r.label == 0.0).count();
        assert_eq!(c0, 7);
    }

    #[test]
    fn tiny_corpus_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            n: 10,
            seed: 0,
            classes: None,
        };
        assert!(gen_synthetic(dir.path(), &params).is_err());
    }
}
