//! Binary feature container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   [u8; 4] = "GAFE"
//! version u32     = 1
//! modality u8     (0 face, 1 body, 2 scene)
//! image_count u32
//! region_dim  u32
//! then per image, in manifest order:
//!   region_count u32
//!   region_count * region_dim  f32 values, row-major
//! ```
//!
//! A `region_count` of zero marks an image with no detections for this
//! modality.

use crate::descriptor::{DescriptorSet, Modality};
use crate::error::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"GAFE";
pub const VERSION: u32 = 1;

/// Streams descriptor sets into a feature file. The declared `image_count`
/// must match the number of `write_set` calls by `finish` time.
pub struct FeatureWriter<W: Write> {
    out: W,
    modality: Modality,
    region_dim: u32,
    declared: u32,
    written: u32,
}

impl FeatureWriter<BufWriter<std::fs::File>> {
    pub fn create(
        path: &Path,
        modality: Modality,
        image_count: u32,
        region_dim: u32,
    ) -> Result<Self> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        FeatureWriter::new(BufWriter::new(file), modality, image_count, region_dim)
    }
}

impl<W: Write> FeatureWriter<W> {
    pub fn new(mut out: W, modality: Modality, image_count: u32, region_dim: u32) -> Result<Self> {
        out.write_all(MAGIC).map_err(io_err)?;
        out.write_u32::<LittleEndian>(VERSION).map_err(io_err)?;
        out.write_u8(modality.tag()).map_err(io_err)?;
        out.write_u32::<LittleEndian>(image_count).map_err(io_err)?;
        out.write_u32::<LittleEndian>(region_dim).map_err(io_err)?;
        Ok(FeatureWriter {
            out,
            modality,
            region_dim,
            declared: image_count,
            written: 0,
        })
    }

    pub fn write_set(&mut self, set: &DescriptorSet) -> Result<()> {
        if set.modality != self.modality {
            return Err(Error::InvalidArgument(format!(
                "writing {} set into {} container",
                set.modality.name(),
                self.modality.name()
            )));
        }
        if !set.is_empty() && set.dim() != self.region_dim as usize {
            return Err(Error::DimensionMismatch {
                expected: self.region_dim as usize,
                got: set.dim(),
            });
        }
        if self.written == self.declared {
            return Err(Error::Format("container already full".into()));
        }
        self.out
            .write_u32::<LittleEndian>(set.regions.nrows() as u32)
            .map_err(io_err)?;
        for &v in set.regions.iter() {
            self.out.write_f32::<LittleEndian>(v).map_err(io_err)?;
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.declared {
            return Err(Error::Format(format!(
                "container declared {} images, wrote {}",
                self.declared, self.written
            )));
        }
        self.out.flush().map_err(io_err)
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<feature stream>".into(),
        source: e,
    }
}

/// Header of a feature file plus a sequential region reader.
pub struct FeatureReader<R: Read> {
    input: R,
    pub modality: Modality,
    pub image_count: u32,
    pub region_dim: u32,
    read: u32,
}

impl FeatureReader<BufReader<std::fs::File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        FeatureReader::new(BufReader::new(file))
    }
}

impl<R: Read> FeatureReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(io_err)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, not a feature file".into()));
        }
        let version = input.read_u32::<LittleEndian>().map_err(io_err)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let modality = Modality::from_tag(input.read_u8().map_err(io_err)?)?;
        let image_count = input.read_u32::<LittleEndian>().map_err(io_err)?;
        let region_dim = input.read_u32::<LittleEndian>().map_err(io_err)?;
        Ok(FeatureReader {
            input,
            modality,
            image_count,
            region_dim,
            read: 0,
        })
    }

    /// Reads the next image's descriptor set, or `None` past the end.
    pub fn next_set(&mut self) -> Result<Option<DescriptorSet>> {
        if self.read == self.image_count {
            return Ok(None);
        }
        let rows = self.input.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let dim = self.region_dim as usize;
        let mut data = vec![0f32; rows * dim];
        self.input
            .read_f32_into::<LittleEndian>(&mut data)
            .map_err(io_err)?;
        self.read += 1;
        let regions = Array2::from_shape_vec((rows, dim), data)
            .map_err(|e| Error::Format(e.to_string()))?;
        // source_counts are not persisted; the container keeps only the
        // pooled per-image regions.
        let counts = if rows > 0 { vec![rows as u32] } else { Vec::new() };
        Ok(Some(DescriptorSet {
            modality: self.modality,
            regions,
            source_counts: counts,
        }))
    }

    /// Reads all remaining descriptor sets.
    pub fn read_all(mut self) -> Result<Vec<DescriptorSet>> {
        let mut sets = Vec::with_capacity(self.image_count as usize);
        while let Some(set) = self.next_set()? {
            sets.push(set);
        }
        Ok(sets)
    }
}

/// Convenience: writes one descriptor set per image to `path`.
pub fn write_feature_file(
    path: &Path,
    modality: Modality,
    region_dim: u32,
    sets: &[DescriptorSet],
) -> Result<()> {
    let mut writer = FeatureWriter::create(path, modality, sets.len() as u32, region_dim)?;
    for set in sets {
        writer.write_set(set)?;
    }
    writer.finish()
}
