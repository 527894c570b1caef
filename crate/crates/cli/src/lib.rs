//! Pipeline library behind the `gaffe` binary: configuration, the
//! synthetic corpus generator, and the extract / codebook / encode /
//! fuse / experiment stages.

pub mod config;
pub mod encode;
pub mod experiment;
pub mod extract;
pub mod fuse;
pub mod synth;
pub mod vocab;

pub use config::PipelineConfig;
pub use experiment::{run_experiment, ExperimentReport};
pub use synth::{gen_synthetic, SynthParams};
