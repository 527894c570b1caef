//! Manifest ingestion.
//!
//! A corpus is described by a UTF-8 manifest with one JSON object per line:
//!
//! ```text
//! {"image":"a.jpg","label":3,"faces":[[10,10,40,40]],"bodies":[[5,5,60,90]]}
//! ```
//!
//! Face and body boxes are `[x, y, w, h]` in pixel coordinates. Boxes are
//! validated against the image header dimensions at parse time; images are
//! not decoded here.

use crate::error::{Error, Result};
use crate::geom::Rect;
use serde::Deserialize;
use std::io::BufRead;
use std::path::{Path, PathBuf};

/// One labeled group image with its detection boxes.
#[derive(Debug, Clone)]
pub struct GroupImageRecord {
    /// Resolved path (manifest-relative entries are joined onto the
    /// manifest's directory).
    pub image_path: PathBuf,
    /// Happiness intensity in `[0, 5]` for regression, or an integer class
    /// id for classification.
    pub label: f64,
    pub face_boxes: Vec<Rect>,
    pub body_boxes: Vec<Rect>,
    pub width: u32,
    pub height: u32,
}

#[derive(Deserialize)]
struct RawRecord {
    image: String,
    label: f64,
    #[serde(default)]
    faces: Vec<[u32; 4]>,
    #[serde(default)]
    bodies: Vec<[u32; 4]>,
}

/// Parses a manifest file into records, in file order.
///
/// Blank lines are skipped. A malformed line is a parse error carrying the
/// 1-based line number; a box that escapes the image bounds is a validation
/// error naming the record.
pub fn parse_manifest(path: &Path) -> Result<Vec<GroupImageRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut records = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::ManifestParse {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(validate(raw, base, line_no)?);
    }
    Ok(records)
}

fn validate(raw: RawRecord, base: &Path, line: usize) -> Result<GroupImageRecord> {
    if !raw.label.is_finite() || !(0.0..=5.0).contains(&raw.label) {
        return Err(Error::RecordInvalid {
            record: raw.image.clone(),
            message: format!("label {} outside [0,5] (line {line})", raw.label),
        });
    }
    let image_path = if Path::new(&raw.image).is_absolute() {
        PathBuf::from(&raw.image)
    } else {
        base.join(&raw.image)
    };
    let (width, height) = image::image_dimensions(&image_path).map_err(|e| Error::Image {
        path: image_path.clone(),
        message: format!("cannot read header: {e}"),
    })?;
    let to_rects = |boxes: &[[u32; 4]], kind: &str| -> Result<Vec<Rect>> {
        boxes
            .iter()
            .map(|&[x, y, w, h]| {
                let rect = Rect::new(x, y, w, h).map_err(|_| Error::RecordInvalid {
                    record: raw.image.clone(),
                    message: format!("{kind} box [{x},{y},{w},{h}] has empty side (line {line})"),
                })?;
                if !rect.fits_in(width, height) {
                    return Err(Error::RecordInvalid {
                        record: raw.image.clone(),
                        message: format!(
                            "{kind} box [{x},{y},{w},{h}] outside {width}x{height} image (line {line})"
                        ),
                    });
                }
                Ok(rect)
            })
            .collect()
    };
    Ok(GroupImageRecord {
        face_boxes: to_rects(&raw.faces, "face")?,
        body_boxes: to_rects(&raw.bodies, "body")?,
        image_path,
        label: raw.label,
        width,
        height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_test_image(dir: &Path, name: &str, w: u32, h: u32) {
        let img = image::RgbImage::from_pixel(w, h, image::Rgb([10, 20, 30]));
        img.save(dir.join(name)).unwrap();
    }

    fn write_manifest(dir: &Path, lines: &[&str]) -> PathBuf {
        let path = dir.join("manifest.jsonl");
        let mut f = std::fs::File::create(&path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        path
    }

    #[test]
    fn parses_basic_record() {
        let dir = tempfile::tempdir().unwrap();
        write_test_image(dir.path(), "a.png", 100, 100);
        let path = write_manifest(
            dir.path(),
            &[r#"{"image":"a.png","label":3,"faces":[[10,10,40,40]],"bodies":[[5,5,60,90]]}"#],
        );
        let records = parse_manifest(&path).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].label, 3.0);
        assert_eq!(records[0].face_boxes.len(), 1);
        assert_eq!(records[0].body_boxes.len(), 1);
        assert_eq!(records[0].width, 100);
    }

    #[test]
    fn empty_faces_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        write_test_image(dir.path(), "a.png", 64, 64);
        let path = write_manifest(
            dir.path(),
            &[r#"{"image":"a.png","label":0,"faces":[],"bodies":[[0,0,10,10]]}"#],
        );
        let records = parse_manifest(&path).unwrap();
        assert!(records[0].face_boxes.is_empty());
    }

    #[test]
    fn zero_width_box_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_test_image(dir.path(), "a.png", 64, 64);
        let path = write_manifest(
            dir.path(),
            &[r#"{"image":"a.png","label":1,"faces":[[10,10,0,40]],"bodies":[]}"#],
        );
        assert!(matches!(
            parse_manifest(&path).unwrap_err(),
            Error::RecordInvalid { .. }
        ));
    }

    #[test]
    fn out_of_bounds_box_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_test_image(dir.path(), "a.png", 64, 64);
        let path = write_manifest(
            dir.path(),
            &[r#"{"image":"a.png","label":1,"faces":[[40,40,40,40]],"bodies":[]}"#],
        );
        assert!(matches!(
            parse_manifest(&path).unwrap_err(),
            Error::RecordInvalid { .. }
        ));
    }

    #[test]
    fn malformed_line_reports_number() {
        let dir = tempfile::tempdir().unwrap();
        write_test_image(dir.path(), "a.png", 64, 64);
        let path = write_manifest(
            dir.path(),
            &[
                r#"{"image":"a.png","label":1,"faces":[],"bodies":[]}"#,
                "not json at all",
            ],
        );
        match parse_manifest(&path).unwrap_err() {
            Error::ManifestParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
