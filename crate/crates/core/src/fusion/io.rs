//! Fusion model persistence (magic "GAFM").

use crate::error::{Error, Result};
use crate::fusion::{DualVars, FusionModel, GatingModel, KernelSpec, OvoModel, Task, Whitener};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"GAFM";
const VERSION: u32 = 1;

fn stream_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<model stream>".into(),
        source: e,
    }
}

fn write_slice<W: Write>(out: &mut W, data: &[f64]) -> std::io::Result<()> {
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
    input
        .read_f64_into::<LittleEndian>(&mut data)
        .map_err(stream_err)?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))
}

fn write_kernel<W: Write>(out: &mut W, spec: &KernelSpec) -> std::io::Result<()> {
    out.write_u8(spec.tag())?;
    if let KernelSpec::Gaussian { s } = spec {
        out.write_f64::<LittleEndian>(*s)?;
    }
    Ok(())
}

fn read_kernel<R: Read>(input: &mut R) -> Result<KernelSpec> {
    match input.read_u8().map_err(stream_err)? {
        0 => Ok(KernelSpec::Linear),
        1 => Ok(KernelSpec::Gaussian {
            s: input.read_f64::<LittleEndian>().map_err(stream_err)?,
        }),
        2 => Ok(KernelSpec::HistogramIntersection),
        other => Err(Error::Format(format!("unknown kernel tag {other}"))),
    }
}

fn write_model<W: Write>(out: &mut W, model: &FusionModel) -> std::io::Result<()> {
    out.write_u8(match model.task {
        Task::Regression => 0,
        Task::Binary => 1,
    })?;
    out.write_f64::<LittleEndian>(model.c)?;
    out.write_f64::<LittleEndian>(model.epsilon)?;
    out.write_f64::<LittleEndian>(model.bias)?;
    out.write_u32::<LittleEndian>(model.modalities() as u32)?;
    for r in 0..model.modalities() {
        write_kernel(out, &model.kernels[r])?;
        write_slice(out, model.whiteners[r].mean.as_slice().unwrap())?;
        write_matrix(out, &model.whiteners[r].transform)?;
        write_slice(out, model.gating.v[r].as_slice().unwrap())?;
        out.write_f64::<LittleEndian>(model.gating.v0[r])?;
        write_matrix(out, &model.support[r])?;
    }
    write_matrix(out, &model.support_eta)?;
    write_slice(out, &model.coef)?;
    write_slice(out, &model.labels)?;
    match &model.duals {
        DualVars::Svc { alpha } => {
            out.write_u8(0)?;
            write_slice(out, alpha)?;
        }
        DualVars::Svr { alpha_pos, alpha_neg } => {
            out.write_u8(1)?;
            write_slice(out, alpha_pos)?;
            write_slice(out, alpha_neg)?;
        }
    }
    Ok(())
}

fn read_model<R: Read>(input: &mut R) -> Result<FusionModel> {
    let task = match input.read_u8().map_err(stream_err)? {
        0 => Task::Regression,
        1 => Task::Binary,
        other => return Err(Error::Format(format!("unknown task tag {other}"))),
    };
    let c = input.read_f64::<LittleEndian>().map_err(stream_err)?;
    let epsilon = input.read_f64::<LittleEndian>().map_err(stream_err)?;
    let bias = input.read_f64::<LittleEndian>().map_err(stream_err)?;
    let p = input.read_u32::<LittleEndian>().map_err(stream_err)? as usize;
    let mut kernels = Vec::with_capacity(p);
    let mut whiteners = Vec::with_capacity(p);
    let mut v = Vec::with_capacity(p);
    let mut v0 = Vec::with_capacity(p);
    let mut support = Vec::with_capacity(p);
    for _ in 0..p {
        kernels.push(read_kernel(input)?);
        let mean = Array1::from_vec(read_vec(input).map_err(stream_err)?);
        let transform = read_matrix(input)?;
        whiteners.push(Whitener { mean, transform });
        v.push(Array1::from_vec(read_vec(input).map_err(stream_err)?));
        v0.push(input.read_f64::<LittleEndian>().map_err(stream_err)?);
        support.push(read_matrix(input)?);
    }
    let support_eta = read_matrix(input)?;
    let coef = read_vec(input).map_err(stream_err)?;
    let labels = read_vec(input).map_err(stream_err)?;
    let duals = match input.read_u8().map_err(stream_err)? {
        0 => DualVars::Svc {
            alpha: read_vec(input).map_err(stream_err)?,
        },
        1 => DualVars::Svr {
            alpha_pos: read_vec(input).map_err(stream_err)?,
            alpha_neg: read_vec(input).map_err(stream_err)?,
        },
        other => return Err(Error::Format(format!("unknown dual tag {other}"))),
    };
    Ok(FusionModel {
        task,
        kernels,
        whiteners,
        gating: GatingModel { v, v0 },
        support,
        support_eta,
        coef,
        duals,
        bias,
        labels,
        c,
        epsilon,
        objective_trace: Vec::new(),
    })
}

/// Saves a single fusion machine (`count = 1`) or a one-vs-one ensemble.
pub fn save_fusion_model(path: &Path, model: &FusionModel) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    out.write_all(MAGIC).map_err(io)?;
    out.write_u32::<LittleEndian>(VERSION).map_err(io)?;
    out.write_u8(0).map_err(io)?; // single machine
    write_model(&mut out, model).map_err(io)?;
    out.flush().map_err(io)
}

pub fn save_ovo_model(path: &Path, model: &OvoModel) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    out.write_all(MAGIC).map_err(io)?;
    out.write_u32::<LittleEndian>(VERSION).map_err(io)?;
    out.write_u8(1).map_err(io)?; // one-vs-one ensemble
    out.write_u32::<LittleEndian>(model.classes.len() as u32).map_err(io)?;
    for &c in &model.classes {
        out.write_i64::<LittleEndian>(c).map_err(io)?;
    }
    out.write_u32::<LittleEndian>(model.machines.len() as u32).map_err(io)?;
    for (a, b, machine) in &model.machines {
        out.write_i64::<LittleEndian>(*a).map_err(io)?;
        out.write_i64::<LittleEndian>(*b).map_err(io)?;
        write_model(&mut out, machine).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Either kind of persisted model.
pub enum LoadedModel {
    Single(FusionModel),
    Ovo(OvoModel),
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(stream_err)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a fusion model file".into()));
    }
    let version = input.read_u32::<LittleEndian>().map_err(stream_err)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    match input.read_u8().map_err(stream_err)? {
        0 => Ok(LoadedModel::Single(read_model(&mut input)?)),
        1 => {
            let n_classes = input.read_u32::<LittleEndian>().map_err(stream_err)? as usize;
            let mut classes = Vec::with_capacity(n_classes);
            for _ in 0..n_classes {
                classes.push(input.read_i64::<LittleEndian>().map_err(stream_err)?);
            }
            let n_machines = input.read_u32::<LittleEndian>().map_err(stream_err)? as usize;
            let mut machines = Vec::with_capacity(n_machines);
            for _ in 0..n_machines {
                let a = input.read_i64::<LittleEndian>().map_err(stream_err)?;
                let b = input.read_i64::<LittleEndian>().map_err(stream_err)?;
                machines.push((a, b, read_model(&mut input)?));
            }
            Ok(LoadedModel::Ovo(OvoModel { classes, machines }))
        }
        other => Err(Error::Format(format!("unknown model kind {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{fit_rlmkl, FitConfig};
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn model_round_trip_preserves_predictions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = 16;
        let labels: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let m1 = Array2::from_shape_fn((n, 3), |(i, _)| labels[i] + rng.gen_range(-0.3..0.3));
        let m2 = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.0..1.0));
        let config = FitConfig::uniform(crate::fusion::Task::Binary, KernelSpec::Gaussian { s: 10.0 }, 2, 5.0, 0.1);
        let model = fit_rlmkl(&[m1.clone(), m2.clone()], &labels, &config).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gafm");
        save_fusion_model(&path, &model).unwrap();
        let LoadedModel::Single(back) = load_model(&path).unwrap() else {
            panic!("expected single model");
        };
        let orig = model.predict_batch(&[m1.clone(), m2.clone()]).unwrap();
        let loaded = back.predict_batch(&[m1, m2]).unwrap();
        for (a, b) in orig.iter().zip(&loaded) {
            assert_eq!(a, b, "prediction changed across save/load");
        }
    }
}
