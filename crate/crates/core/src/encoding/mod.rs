//! Aggregation of regional descriptors into one vector per image:
//! PCA reduction, a GMM visual vocabulary, and Fisher/BoW/VLAD encoders.

pub mod fisher;
pub mod gmm;
pub mod io;
pub mod kmeans;
pub mod pca;

pub use fisher::{bow_encode, fisher_encode, improved_normalize, vlad_encode, EncodedImage, Encoder};
pub use gmm::{fit_gmm, posteriors, GmmCodebook};
pub use io::Codebook;
pub use kmeans::{fit_kmeans, KmeansCodebook};
pub use pca::{fit_pca, transform_pca, PcaModel};
