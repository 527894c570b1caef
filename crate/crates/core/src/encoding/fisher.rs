//! Image-level encoders: Fisher differences against the GMM vocabulary,
//! plus bag-of-words and VLAD baselines over a k-means dictionary.
//!
//! The Fisher vector stacks, per component k, the weight-normalized
//! average first-order differences
//! `phi1_k = 1/(R sqrt(w_k)) sum_p alpha_p(k) (x_p - mu_k) / sigma_k`
//! and second-order differences
//! `phi2_k = 1/(R sqrt(2 w_k)) sum_p alpha_p(k) ((x_p - mu_k)^2 / sigma_k^2 - 1)`
//! over the R projected regions, in the layout
//! `[phi1_1, phi2_1, ..., phi1_K, phi2_K]`. No power or L2 normalization
//! is applied by default; `improved_normalize` offers the signed
//! square-root + L2 variant for ablations.

use crate::descriptor::{DescriptorSet, Modality};
use crate::encoding::gmm::{posterior_matrix, GmmCodebook};
use crate::encoding::kmeans::{nearest, KmeansCodebook};
use crate::encoding::pca::{transform_pca, PcaModel};
use crate::error::{Error, Result};
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    Fisher,
    Bow,
    Vlad,
}

impl Encoder {
    pub fn name(&self) -> &'static str {
        match self {
            Encoder::Fisher => "fisher",
            Encoder::Bow => "bow",
            Encoder::Vlad => "vlad",
        }
    }

    /// Encoded length for a vocabulary of `k` words over `d` dimensions.
    pub fn dim(&self, k: usize, d: usize) -> usize {
        match self {
            Encoder::Fisher => 2 * k * d,
            Encoder::Bow => k,
            Encoder::Vlad => k * d,
        }
    }
}

impl std::str::FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher" => Ok(Encoder::Fisher),
            "bow" => Ok(Encoder::Bow),
            "vlad" => Ok(Encoder::Vlad),
            other => Err(Error::InvalidArgument(format!("unknown encoder '{other}'"))),
        }
    }
}

/// One aggregated vector per image and modality.
#[derive(Debug, Clone)]
pub struct EncodedImage {
    pub vector: Vec<f64>,
    pub encoder: Encoder,
    pub modality: Modality,
}

fn project(pca: &PcaModel, set: &DescriptorSet) -> Result<Array2<f64>> {
    if set.is_empty() {
        return Err(Error::NoDetections);
    }
    let as_f64 = set.regions.mapv(|v| v as f64);
    transform_pca(pca, &as_f64.view())
}

/// Fisher encoding of one image's regions.
pub fn fisher_encode(
    codebook: &GmmCodebook,
    pca: &PcaModel,
    set: &DescriptorSet,
) -> Result<EncodedImage> {
    let projected = project(pca, set)?;
    let vector = fisher_from_projected(codebook, &projected);
    Ok(EncodedImage {
        vector,
        encoder: Encoder::Fisher,
        modality: set.modality,
    })
}

/// Fisher vector of already-projected regions (rows in codebook space).
pub fn fisher_from_projected(codebook: &GmmCodebook, projected: &Array2<f64>) -> Vec<f64> {
    let k = codebook.k();
    let d = codebook.dim();
    let r = projected.nrows();
    let alpha = posterior_matrix(codebook, &projected.view());

    let mut sigma = Array2::zeros((k, d));
    for c in 0..k {
        for j in 0..d {
            sigma[[c, j]] = codebook.variances[[c, j]].sqrt();
        }
    }

    let mut first = Array2::<f64>::zeros((k, d));
    let mut second = Array2::<f64>::zeros((k, d));
    for (p, row) in projected.rows().into_iter().enumerate() {
        for c in 0..k {
            let a = alpha[[p, c]];
            if a == 0.0 {
                continue;
            }
            let mu = codebook.means.row(c);
            let sg = sigma.row(c);
            for j in 0..d {
                let u = (row[j] - mu[j]) / sg[j];
                first[[c, j]] += a * u;
                second[[c, j]] += a * (u * u - 1.0);
            }
        }
    }

    let rn = r as f64;
    let mut out = Vec::with_capacity(2 * k * d);
    for c in 0..k {
        let w = codebook.weights[c];
        let scale1 = 1.0 / (rn * w.sqrt());
        let scale2 = 1.0 / (rn * (2.0 * w).sqrt());
        out.extend(first.row(c).iter().map(|v| v * scale1));
        out.extend(second.row(c).iter().map(|v| v * scale2));
    }
    out
}

/// Signed square root followed by L2 normalization (the "improved" Fisher
/// vector post-processing). Off by default in the pipeline.
pub fn improved_normalize(vector: &mut [f64]) {
    for v in vector.iter_mut() {
        *v = v.signum() * v.abs().sqrt();
    }
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in vector.iter_mut() {
            *v /= norm;
        }
    }
}

/// L1-normalized hard-assignment histogram.
pub fn bow_encode(
    dictionary: &KmeansCodebook,
    pca: &PcaModel,
    set: &DescriptorSet,
) -> Result<EncodedImage> {
    let projected = project(pca, set)?;
    let k = dictionary.k();
    let mut hist = vec![0f64; k];
    for row in projected.rows() {
        hist[nearest(&dictionary.centroids.view(), &row)] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        for v in hist.iter_mut() {
            *v /= total;
        }
    }
    Ok(EncodedImage {
        vector: hist,
        encoder: Encoder::Bow,
        modality: set.modality,
    })
}

/// Per-centroid residual sums with intra-block then global L2
/// normalization.
pub fn vlad_encode(
    dictionary: &KmeansCodebook,
    pca: &PcaModel,
    set: &DescriptorSet,
) -> Result<EncodedImage> {
    let projected = project(pca, set)?;
    let k = dictionary.k();
    let d = dictionary.dim();
    let mut blocks = Array2::<f64>::zeros((k, d));
    for row in projected.rows() {
        let c = nearest(&dictionary.centroids.view(), &row);
        for j in 0..d {
            blocks[[c, j]] += row[j] - dictionary.centroids[[c, j]];
        }
    }
    for mut block in blocks.rows_mut() {
        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            block /= norm;
        }
    }
    let mut vector: Vec<f64> = blocks.iter().copied().collect();
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in vector.iter_mut() {
            *v /= norm;
        }
    }
    Ok(EncodedImage {
        vector,
        encoder: Encoder::Vlad,
        modality: set.modality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn identity_pca(d: usize) -> PcaModel {
        PcaModel {
            mean: Array1::zeros(d),
            basis: Array2::eye(d),
            eigenvalues: Array1::ones(d),
        }
    }

    fn single_component(d: usize) -> GmmCodebook {
        GmmCodebook {
            weights: array![1.0],
            means: Array2::zeros((1, d)),
            variances: Array2::ones((1, d)),
            log_likelihood_trace: vec![],
        }
    }

    fn set_of(rows: Vec<Vec<f32>>) -> DescriptorSet {
        let n = rows.len();
        let d = rows[0].len();
        let flat: Vec<f32> = rows.concat();
        DescriptorSet::new(
            Modality::Face,
            Array2::from_shape_vec((n, d), flat).unwrap(),
            vec![n as u32],
        )
        .unwrap()
    }

    #[test]
    fn region_at_mean_gives_minus_inv_sqrt2() {
        let cb = single_component(3);
        let pca = identity_pca(3);
        let set = set_of(vec![vec![0.0, 0.0, 0.0]]);
        let enc = fisher_encode(&cb, &pca, &set).unwrap();
        assert_eq!(enc.vector.len(), 6);
        let expect2 = -1.0 / 2f64.sqrt();
        for j in 0..3 {
            assert!(enc.vector[j].abs() < 1e-15);
            assert!((enc.vector[3 + j] - expect2).abs() < 1e-15);
        }
    }

    #[test]
    fn region_at_mean_plus_sigma() {
        let cb = single_component(2);
        let pca = identity_pca(2);
        let set = set_of(vec![vec![1.0, 1.0]]);
        let enc = fisher_encode(&cb, &pca, &set).unwrap();
        for j in 0..2 {
            assert!((enc.vector[j] - 1.0).abs() < 1e-15);
            assert!(enc.vector[2 + j].abs() < 1e-15);
        }
    }

    #[test]
    fn fisher_length_matches_2kd() {
        let cb = GmmCodebook {
            weights: Array1::from_elem(4, 0.25),
            means: Array2::zeros((4, 5)),
            variances: Array2::ones((4, 5)),
            log_likelihood_trace: vec![],
        };
        let pca = identity_pca(5);
        let set = set_of(vec![vec![0.5; 5], vec![-0.5; 5]]);
        let enc = fisher_encode(&cb, &pca, &set).unwrap();
        assert_eq!(enc.vector.len(), 2 * 4 * 5);
    }

    #[test]
    fn empty_set_is_no_detections() {
        let cb = single_component(2);
        let pca = identity_pca(2);
        let set = DescriptorSet::empty(Modality::Face, 2);
        assert!(matches!(
            fisher_encode(&cb, &pca, &set).unwrap_err(),
            Error::NoDetections
        ));
    }

    #[test]
    fn fisher_region_order_invariant_and_duplication_invariant() {
        let cb = GmmCodebook {
            weights: array![0.3, 0.7],
            means: array![[0.0, 1.0], [2.0, -1.0]],
            variances: array![[1.0, 0.5], [2.0, 1.5]],
            log_likelihood_trace: vec![],
        };
        let pca = identity_pca(2);
        let a = set_of(vec![vec![0.1, 0.2], vec![1.5, -0.7], vec![2.2, 0.0]]);
        let b = set_of(vec![vec![2.2, 0.0], vec![0.1, 0.2], vec![1.5, -0.7]]);
        let doubled = set_of(vec![
            vec![0.1, 0.2],
            vec![1.5, -0.7],
            vec![2.2, 0.0],
            vec![0.1, 0.2],
            vec![1.5, -0.7],
            vec![2.2, 0.0],
        ]);
        let ea = fisher_encode(&cb, &pca, &a).unwrap().vector;
        let eb = fisher_encode(&cb, &pca, &b).unwrap().vector;
        let ed = fisher_encode(&cb, &pca, &doubled).unwrap().vector;
        for i in 0..ea.len() {
            assert!((ea[i] - eb[i]).abs() < 1e-12);
            assert!((ea[i] - ed[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bow_properties() {
        let dict = KmeansCodebook {
            centroids: array![[0.0, 0.0], [5.0, 5.0]],
        };
        let pca = identity_pca(2);
        let one = set_of(vec![vec![4.9, 5.2]]);
        let enc = bow_encode(&dict, &pca, &one).unwrap();
        assert_eq!(enc.vector, vec![0.0, 1.0]);

        let many = set_of(vec![vec![0.1, 0.0], vec![5.0, 4.8], vec![0.0, 0.2]]);
        let enc = bow_encode(&dict, &pca, &many).unwrap();
        assert!((enc.vector.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vlad_zero_block_for_exact_centroid() {
        let dict = KmeansCodebook {
            centroids: array![[1.0, 2.0], [5.0, 5.0]],
        };
        let pca = identity_pca(2);
        let set = set_of(vec![vec![1.0, 2.0]]);
        let enc = vlad_encode(&dict, &pca, &set).unwrap();
        assert_eq!(enc.vector.len(), 4);
        assert!(enc.vector.iter().all(|&v| v == 0.0));
    }
}
