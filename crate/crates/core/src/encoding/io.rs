//! Codebook persistence: PCA model, GMM vocabulary, k-means dictionary and
//! provenance in one versioned binary file (magic "GACB").

use crate::descriptor::Modality;
use crate::encoding::gmm::GmmCodebook;
use crate::encoding::kmeans::KmeansCodebook;
use crate::encoding::pca::PcaModel;
use crate::error::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"GACB";
const VERSION: u32 = 1;

/// The trained visual vocabulary for one modality.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub modality: Modality,
    pub seed: u64,
    pub pca: PcaModel,
    pub gmm: GmmCodebook,
    /// Dictionary for the BoW/VLAD baselines, same word count as the GMM.
    pub kmeans: KmeansCodebook,
}

fn write_vec<W: Write>(out: &mut W, data: &[f64]) -> std::io::Result<()> {
    out.write_u64::<LittleEndian>(data.len() as u64)?;
    for &v in data {
        out.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_vec<R: Read>(input: &mut R) -> std::io::Result<Vec<f64>> {
    let len = input.read_u64::<LittleEndian>()? as usize;
    let mut data = vec![0f64; len];
    input.read_f64_into::<LittleEndian>(&mut data)?;
    Ok(data)
}

fn write_matrix<W: Write>(out: &mut W, m: &Array2<f64>) -> std::io::Result<()> {
    out.write_u64::<LittleEndian>(m.nrows() as u64)?;
    out.write_u64::<LittleEndian>(m.ncols() as u64)?;
    for &v in m.iter() {
        out.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_matrix<R: Read>(input: &mut R) -> Result<Array2<f64>> {
    let rows = input.read_u64::<LittleEndian>().map_err(stream_err)? as usize;
    let cols = input.read_u64::<LittleEndian>().map_err(stream_err)? as usize;
    let mut data = vec![0f64; rows * cols];
    input.read_f64_into::<LittleEndian>(&mut data).map_err(stream_err)?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))
}

fn stream_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<codebook stream>".into(),
        source: e,
    }
}

impl Codebook {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e: std::io::Error| Error::io(path, e);
        out.write_all(MAGIC).map_err(io)?;
        out.write_u32::<LittleEndian>(VERSION).map_err(io)?;
        out.write_u8(self.modality.tag()).map_err(io)?;
        out.write_u64::<LittleEndian>(self.seed).map_err(io)?;
        write_vec(&mut out, self.pca.mean.as_slice().unwrap()).map_err(io)?;
        write_matrix(&mut out, &self.pca.basis).map_err(io)?;
        write_vec(&mut out, self.pca.eigenvalues.as_slice().unwrap()).map_err(io)?;
        write_vec(&mut out, self.gmm.weights.as_slice().unwrap()).map_err(io)?;
        write_matrix(&mut out, &self.gmm.means).map_err(io)?;
        write_matrix(&mut out, &self.gmm.variances).map_err(io)?;
        write_matrix(&mut out, &self.kmeans.centroids).map_err(io)?;
        out.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut input = BufReader::new(file);
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(stream_err)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a codebook file".into()));
        }
        let version = input.read_u32::<LittleEndian>().map_err(stream_err)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported codebook version {version}")));
        }
        let modality = Modality::from_tag(input.read_u8().map_err(stream_err)?)?;
        let seed = input.read_u64::<LittleEndian>().map_err(stream_err)?;
        let mean = Array1::from_vec(read_vec(&mut input).map_err(stream_err)?);
        let basis = read_matrix(&mut input)?;
        let eigenvalues = Array1::from_vec(read_vec(&mut input).map_err(stream_err)?);
        let weights = Array1::from_vec(read_vec(&mut input).map_err(stream_err)?);
        let means = read_matrix(&mut input)?;
        let variances = read_matrix(&mut input)?;
        let centroids = read_matrix(&mut input)?;
        Ok(Codebook {
            modality,
            seed,
            pca: PcaModel {
                mean,
                basis,
                eigenvalues,
            },
            gmm: GmmCodebook {
                weights,
                means,
                variances,
                log_likelihood_trace: Vec::new(),
            },
            kmeans: KmeansCodebook { centroids },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn codebook_round_trips() {
        let cb = Codebook {
            modality: Modality::Scene,
            seed: 42,
            pca: PcaModel {
                mean: array![1.0, 2.0, 3.0],
                basis: array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
                eigenvalues: array![2.0, 1.0],
            },
            gmm: GmmCodebook {
                weights: array![0.4, 0.6],
                means: array![[0.0, 1.0], [2.0, 3.0]],
                variances: array![[1.0, 1.0], [0.5, 2.0]],
                log_likelihood_trace: vec![],
            },
            kmeans: KmeansCodebook {
                centroids: array![[0.1, 0.9], [1.9, 3.1]],
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.gacb");
        cb.save(&path).unwrap();
        let back = Codebook::load(&path).unwrap();
        assert_eq!(back.modality, Modality::Scene);
        assert_eq!(back.seed, 42);
        assert_eq!(back.pca.mean, cb.pca.mean);
        assert_eq!(back.pca.basis, cb.pca.basis);
        assert_eq!(back.gmm.weights, cb.gmm.weights);
        assert_eq!(back.gmm.means, cb.gmm.means);
        assert_eq!(back.gmm.variances, cb.gmm.variances);
        assert_eq!(back.kmeans.centroids, cb.kmeans.centroids);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"JUNKJUNKJUNK").unwrap();
        assert!(Codebook::load(&path).is_err());
    }
}
