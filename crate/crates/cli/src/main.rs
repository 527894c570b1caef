//! `gaffe` command line: group affect estimation pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/processing error,
//! 3 success with partial failures (some images skipped).

use clap::{Args, Parser, Subcommand};
use gaffe_cli::config::PipelineConfig;
use gaffe_cli::experiment::run_experiment;
use gaffe_cli::extract::run_extract;
use gaffe_cli::fuse::{fuse_train, predict, FuseTrainArgs};
use gaffe_cli::synth::{gen_synthetic, SynthParams};
use gaffe_cli::vocab::run_codebook;
use gaffe_core::descriptor::Modality;
use gaffe_core::encoding::{Codebook, Encoder};
use gaffe_core::fusion::KernelSpec;
use gaffe_core::manifest::parse_manifest;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gaffe", version, about = "Group affect estimation from images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract regional descriptors for one modality into a feature file.
    Extract(ExtractArgs),
    /// Fit the PCA + GMM (+ k-means) vocabulary from a feature file.
    Codebook(CodebookArgs),
    /// Aggregate regional descriptors into one vector per image.
    Encode(EncodeArgs),
    /// Train the multi-kernel fusion machine on encoded files.
    FuseTrain(FuseTrainCli),
    /// Predict with a trained fusion model.
    Predict(PredictArgs),
    /// Run a full experiment from a TOML config.
    Experiment(ExperimentArgs),
    /// Generate the synthetic benchmark corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// face | body | scene
    #[arg(long)]
    modality: String,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Optional pipeline config for grid/superpixel parameters.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long = "pca-dim")]
    pca_dim: usize,
    #[arg(long)]
    words: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500_000)]
    subsample: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    /// fisher | bow | vlad
    #[arg(long, default_value = "fisher")]
    encoder: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseTrainCli {
    /// reg | ovo
    #[arg(long)]
    task: String,
    /// linear | gaussian | hi
    #[arg(long, default_value = "linear")]
    kernel: String,
    /// Gaussian kernel standard deviation.
    #[arg(long, default_value_t = 10.0)]
    s: f64,
    #[arg(long = "C", default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Cap on the whitened dimension (0 = automatic).
    #[arg(long, default_value_t = 0)]
    whiten_cap: usize,
    /// Comma-separated encoded feature files, one per modality.
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<PathBuf>,
    /// Optional manifest with ground truth; prints the metric to stderr.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Render class prototypes (2..=6) instead of six intensity levels.
    #[arg(long)]
    classes: Option<usize>,
}

fn kernel_from(name: &str, s: f64) -> Result<KernelSpec, gaffe_core::Error> {
    match name {
        "linear" => Ok(KernelSpec::Linear),
        "gaussian" => Ok(KernelSpec::Gaussian { s }),
        "hi" => Ok(KernelSpec::HistogramIntersection),
        other => Err(gaffe_core::Error::InvalidArgument(format!(
            "unknown kernel '{other}'"
        ))),
    }
}

fn run(cli: Cli) -> Result<ExitCode, gaffe_core::Error> {
    match cli.command {
        Command::Extract(args) => {
            let config = match &args.config {
                Some(path) => PipelineConfig::load(path)?,
                None => PipelineConfig::default(),
            };
            let modality: Modality = args.modality.parse()?;
            let records = parse_manifest(&args.manifest)?;
            let outcome = run_extract(&records, modality, &config, &args.out)?;
            eprintln!(
                "extracted {} images ({} empty, {} failed)",
                outcome.written,
                outcome.empty,
                outcome.failed.len()
            );
            Ok(if outcome.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Command::Codebook(args) => {
            let codebook = run_codebook(
                &args.features,
                args.pca_dim,
                args.words,
                args.seed,
                args.subsample,
                None,
            )?;
            codebook.save(&args.out)?;
            eprintln!(
                "codebook: {} words over {} dims ({} modality)",
                codebook.gmm.k(),
                codebook.pca.output_dim(),
                codebook.modality.name()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Encode(args) => {
            let codebook = Codebook::load(&args.codebook)?;
            let encoder: Encoder = args.encoder.parse()?;
            let encoded = gaffe_cli::encode::encode_file(&args.features, &codebook, encoder)?;
            let missing = encoded.iter().filter(|e| e.is_none()).count();
            gaffe_cli::encode::write_encoded(&args.out, codebook.modality, &encoded)?;
            eprintln!("encoded {} images ({missing} without detections)", encoded.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::FuseTrain(args) => {
            let kernel = kernel_from(&args.kernel, args.s)?;
            let inputs: Vec<&std::path::Path> = args.inputs.iter().map(|p| p.as_path()).collect();
            let trained = fuse_train(&FuseTrainArgs {
                task: &args.task,
                kernel,
                c: args.c,
                eps: args.eps,
                whiten_cap: (args.whiten_cap > 0).then_some(args.whiten_cap),
                inputs,
                manifest: &args.manifest,
                out: &args.out,
            })?;
            eprintln!("trained on {trained} samples -> {}", args.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict(args) => {
            let inputs: Vec<&std::path::Path> = args.inputs.iter().map(|p| p.as_path()).collect();
            match &args.out {
                Some(path) => {
                    let mut file = std::fs::File::create(path)
                        .map_err(|e| gaffe_core::Error::io(path, e))?;
                    predict(&args.model, &inputs, args.manifest.as_deref(), &mut file)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    predict(&args.model, &inputs, args.manifest.as_deref(), &mut lock)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment(args) => {
            let config = PipelineConfig::load(&args.config)?;
            let (report, partial) = run_experiment(&config)?;
            println!(
                "{} ({}): face {:.4} body {:.4} scene {:.4} fusion {:.4}",
                report.task,
                report.metric,
                report.aggregate.face,
                report.aggregate.body,
                report.aggregate.scene,
                report.aggregate.fusion
            );
            println!("report: {}/report.json", config.out_dir);
            Ok(if partial { ExitCode::from(3) } else { ExitCode::SUCCESS })
        }
        Command::Synth(args) => {
            let manifest = gen_synthetic(
                &args.out,
                &SynthParams {
                    n: args.n,
                    seed: args.seed,
                    classes: args.classes,
                },
            )?;
            eprintln!("wrote {}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not usage errors
            let benign = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
