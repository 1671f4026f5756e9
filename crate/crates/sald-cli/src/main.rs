//! `sald`: train small implicit networks as signed distance fields from
//! raw, unoriented geometry, extract their level sets, and verify the
//! numerical properties the method rests on.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 numeric failure,
//! 3 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sald_cli::config::{ExperimentConfig, LossKindConfig};
use sald_cli::pipeline::{self, FigurePreset, PipelineError, ReconstructArgs};

#[derive(Parser)]
#[command(name = "sald", version, about = "Sign-agnostic implicit surface learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a geometry file into a binary training batch.
    Prepare(PrepareArgs),
    /// Train a checkpoint from a config file (flags override fields).
    Train(TrainArgs),
    /// Extract the zero level set of a checkpoint (OBJ or SVG).
    Reconstruct(ReconstructCli),
    /// Chamfer/normal metrics between reconstruction and reference.
    Eval(EvalArgs),
    /// Run the numerical property sweeps.
    Verify(VerifyArgs),
    /// One-command desk-scale figure reproductions.
    Figure(FigureArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Geometry file (.seg2d, .xyz, .obj).
    #[arg(long)]
    input: PathBuf,
    /// Output sample file.
    #[arg(long)]
    out: PathBuf,
    /// Total samples to draw.
    #[arg(long, default_value_t = 50_000)]
    total: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian centers (default: total/6).
    #[arg(long)]
    n_surface: Option<usize>,
    /// Neighbor rank for the local bandwidth.
    #[arg(long, default_value_t = 50)]
    k: usize,
    /// Fixed global bandwidth.
    #[arg(long, default_value_t = 0.3)]
    sigma2: f64,
    /// Fraction of samples carrying normals.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    grad_fraction: f64,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry input (repeatable; overrides config "inputs").
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Precomputed sample file (repeatable; overrides config "samples").
    #[arg(long)]
    samples: Vec<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// sal | sald
    #[arg(long, value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<LossKindConfig>()))]
    loss: Option<LossKindConfig>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_points: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReconstructCli {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 256)]
    res: usize,
    /// Output file: .obj for 3D checkpoints, .svg for 2D.
    #[arg(long)]
    out: PathBuf,
    /// Latent table row for conditioned checkpoints.
    #[arg(long)]
    shape: Option<usize>,
    /// Explicit latent code, comma-separated.
    #[arg(long)]
    latent: Option<String>,
    /// Evaluation box "x0,y0[,z0],x1,y1[,z1]".
    #[arg(long)]
    bbox: Option<String>,
    /// Geometry drawn under 2D reconstructions.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Also write extracted 2D chains as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Reconstruction .obj file or directory of them.
    #[arg(long)]
    recon: PathBuf,
    /// Reference .obj file or directory.
    #[arg(long)]
    reference: PathBuf,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Surface samples per side.
    #[arg(long, default_value_t = 30_000)]
    samples_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Unit-vector pairs per dimension.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    /// Random nets per dimension in the gradient sweep.
    #[arg(long, default_value_t = 100)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FigureArgs {
    /// fig2 | fig3-minimal-curve | fig4
    #[arg(value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<FigurePreset>()))]
    preset: FigurePreset,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the preset's training epochs (quick previews).
    #[arg(long)]
    epochs: Option<usize>,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, PipelineError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| PipelineError::Usage(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Thread count for batch fan-out, from SALD_THREADS (default: cores).
fn init_thread_pool() {
    if let Ok(v) = std::env::var("SALD_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Prepare(a) => {
            let sample = sald_cli::config::SampleConfig {
                total: a.total,
                n_surface: a.n_surface,
                k: a.k,
                sigma2: a.sigma2,
                grad_fraction: a.grad_fraction,
            };
            let batch = pipeline::prepare(&a.input, &a.out, &sample, a.seed)?;
            println!(
                "wrote {} ({} value samples, {} grad samples, dim {})",
                a.out.display(),
                batch.values.len(),
                batch.grads.len(),
                batch.dim
            );
            Ok(())
        }
        Command::Train(a) => {
            let mut cfg = match &a.config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            if !a.input.is_empty() {
                cfg.inputs = a.input;
            }
            if !a.samples.is_empty() {
                cfg.samples = a.samples;
            }
            if let Some(v) = a.out_dir {
                cfg.out_dir = v;
            }
            if let Some(v) = a.loss {
                cfg.loss_kind = v;
            }
            if let Some(v) = a.lambda {
                cfg.lambda = v;
            }
            if let Some(v) = a.epochs {
                cfg.train.epochs = v;
            }
            if let Some(v) = a.lr {
                cfg.train.lr = v;
            }
            if let Some(v) = a.batch_points {
                cfg.train.batch_points = v;
            }
            if let Some(v) = a.hidden {
                cfg.net.hidden = v;
            }
            if let Some(v) = a.depth {
                cfg.net.depth = v;
            }
            if let Some(v) = a.latent_dim {
                cfg.net.latent_dim = v;
            }
            if let Some(v) = a.seed {
                cfg.seed = v;
            }
            let out = pipeline::train(&cfg)?;
            let last = out.history.last().expect("at least one epoch");
            println!(
                "wrote {} and {} (final loss {:.6})",
                out.checkpoint.display(),
                out.history_csv.display(),
                last.total
            );
            Ok(())
        }
        Command::Reconstruct(a) => {
            let bbox = match a.bbox.as_deref().map(parse_floats).transpose()? {
                None => None,
                Some(v) if v.len() == 4 => {
                    Some(([v[0], v[1], 0.0], [v[2], v[3], 0.0]))
                }
                Some(v) if v.len() == 6 => {
                    Some(([v[0], v[1], v[2]], [v[3], v[4], v[5]]))
                }
                Some(_) => {
                    return Err(PipelineError::Usage(
                        "--bbox needs 4 (2D) or 6 (3D) numbers".into(),
                    ))
                }
            };
            let latent = a.latent.as_deref().map(parse_floats).transpose()?;
            pipeline::reconstruct(&ReconstructArgs {
                checkpoint: &a.checkpoint,
                res: a.res,
                out: &a.out,
                shape: a.shape,
                latent,
                bbox,
                overlay: a.overlay.as_deref(),
                csv: a.csv.as_deref(),
            })?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Eval(a) => {
            pipeline::evaluate(&a.recon, &a.reference, &a.out, a.samples_n, a.seed)?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Verify(a) => {
            let report = pipeline::verify(a.pairs, a.cases, a.seed);
            print!("{}", pipeline::format_verify_report(&report));
            if report.all_pass() {
                Ok(())
            } else {
                Err(PipelineError::Verification(
                    "one or more properties failed".into(),
                ))
            }
        }
        Command::Figure(a) => {
            pipeline::figure(a.preset, &a.out, a.seed, a.epochs)?;
            println!("figure artifacts in {}", a.out.display());
            Ok(())
        }
    }
}
