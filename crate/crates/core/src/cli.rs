//! `msp` command-line frontend. JSON results go to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 I/O or format error, 3 algorithm failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::color::srgb_to_lab;
use crate::config::{MspConfig, SuperpixelAlgorithm, ADE20K_SCALES, DEFAULT_ALPHA};
use crate::error::Error;
use crate::gradcheck::{run_gradcheck, GradcheckSpec};
use crate::io::{read_image, read_mspt, write_mspt, write_ppm};
use crate::metrics::{evaluate, evaluate_superpixels, DEFAULT_BOUNDARY_TOLERANCE, DEFAULT_IGNORE_LABEL};
use crate::msp::{msp_cascade_forward, refine_probs};
use crate::partition::SuperpixelPartition;
use crate::quickshift::{quickshift_for_lambda, quickshift_segment, QuickShiftParams};
use crate::render::{render_overlay, OverlayMode};
use crate::slic::{slic_segment, SlicParams};
use crate::tensor::{LabelGrid, LabelMap};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_ARGS: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ALGORITHM: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "msp", version, about = "Superpixels, superpixel message passing and segmentation metrics")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment an image into superpixels and write the label map.
    Superpixel(SuperpixelArgs),
    /// Apply the multiscale message-passing cascade to a feature map.
    MspApply(MspApplyArgs),
    /// Refine class probabilities with the cascade and write the argmax labels.
    Refine(RefineArgs),
    /// Score a predicted label map against ground truth.
    Metrics(MetricsArgs),
    /// Score a superpixel label map against ground truth.
    SpxEval(SpxEvalArgs),
    /// Verify the analytic backward pass on a seeded random instance.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Algo {
    Slic,
    Quickshift,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VisMode {
    Boundaries,
    MeanColor,
}

impl From<VisMode> for OverlayMode {
    fn from(m: VisMode) -> Self {
        match m {
            VisMode::Boundaries => OverlayMode::Boundaries,
            VisMode::MeanColor => OverlayMode::MeanColor,
        }
    }
}

#[derive(Debug, Args)]
struct AlgoArgs {
    #[arg(long, value_enum, default_value = "slic")]
    algo: Algo,
    /// SLIC compactness m.
    #[arg(long, default_value_t = 10.0)]
    compactness: f64,
    /// Quick Shift kernel bandwidth.
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    /// Quick Shift maximum link distance.
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    /// Quick Shift color weight.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
}

impl AlgoArgs {
    fn slic(&self, lambda: usize) -> SlicParams {
        SlicParams {
            compactness: self.compactness,
            ..SlicParams::new(lambda)
        }
    }

    fn quickshift(&self) -> QuickShiftParams {
        QuickShiftParams {
            sigma: self.sigma,
            tau: self.tau,
            color_ratio: self.ratio,
        }
    }

    fn algorithm(&self) -> SuperpixelAlgorithm {
        match self.algo {
            Algo::Slic => SuperpixelAlgorithm::Slic(self.slic(1)),
            Algo::Quickshift => SuperpixelAlgorithm::QuickShift(self.quickshift()),
        }
    }
}

#[derive(Debug, Args)]
struct SuperpixelArgs {
    /// Input image (PPM P6 or PGM P5).
    input: PathBuf,
    /// Requested superpixel count (required for SLIC).
    #[arg(long)]
    lambda: Option<usize>,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Output label map (MSPT u32 [H, W]).
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    /// Optional overlay image (PPM).
    #[arg(long)]
    vis: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "boundaries")]
    vis_mode: VisMode,
}

#[derive(Debug, Args)]
struct CascadeArgs {
    /// Superpixel counts per stage, strictly increasing.
    #[arg(long, value_delimiter = ',', default_values_t = ADE20K_SCALES)]
    scales: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[command(flatten)]
    algo: AlgoArgs,
}

impl CascadeArgs {
    fn config(&self) -> Result<MspConfig, Error> {
        MspConfig::new(self.alpha, self.scales.clone(), self.algo.algorithm())
    }
}

#[derive(Debug, Args)]
struct MspApplyArgs {
    #[arg(long)]
    image: PathBuf,
    /// Feature map (MSPT f32 [C, H, W]).
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    cascade: CascadeArgs,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    image: PathBuf,
    /// Class probabilities (MSPT f32 [C, H, W]).
    #[arg(long)]
    probs: PathBuf,
    #[command(flatten)]
    cascade: CascadeArgs,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    classes: usize,
    #[arg(long, default_value_t = DEFAULT_IGNORE_LABEL)]
    ignore: u32,
    #[arg(long, default_value_t = DEFAULT_BOUNDARY_TOLERANCE)]
    boundary_tol: usize,
}

#[derive(Debug, Args)]
struct SpxEvalArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BOUNDARY_TOLERANCE)]
    tol: usize,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long)]
    channels: usize,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    blocks: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Number of cascade stages.
    #[arg(long, default_value_t = 1)]
    scales: usize,
}

#[derive(Serialize)]
struct BlockCount {
    num_blocks: usize,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_BAD_ARGS,
        Error::Io { .. } | Error::Format { .. } => EXIT_IO,
        Error::Algorithm(_) => EXIT_ALGORITHM,
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Error> {
    let json = serde_json::to_string(value).map_err(|e| Error::Algorithm(e.to_string()))?;
    writeln!(out, "{json}").map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn read_label_map(path: &PathBuf) -> Result<LabelMap, Error> {
    LabelMap::from_tensor(&read_mspt(path)?)
}

fn superpixel(args: &SuperpixelArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    if args.lambda == Some(0) {
        return Err(Error::InvalidArgument("--lambda must be at least 1".into()));
    }
    let image = read_image(&args.input)?;
    let lab = srgb_to_lab(&image);
    let partition = match args.algo.algo {
        Algo::Slic => {
            let lambda = args
                .lambda
                .ok_or_else(|| Error::InvalidArgument("--lambda is required for --algo slic".into()))?;
            slic_segment(&lab, &args.algo.slic(lambda))?
        }
        Algo::Quickshift => {
            let params = args.algo.quickshift();
            for w in params.warnings() {
                let _ = writeln!(err, "warning: {w}");
            }
            match args.lambda {
                Some(lambda) => quickshift_for_lambda(&lab, &params, lambda)?,
                None => quickshift_segment(&lab, &params)?,
            }
        }
    };
    write_mspt(&LabelMap::new(image.height(), image.width(), partition.labels().to_vec())?.to_tensor(), &args.output)?;
    if let Some(vis) = &args.vis {
        write_ppm(&render_overlay(&image, &partition, args.vis_mode.into())?, vis)?;
    }
    emit(out, &BlockCount {
        num_blocks: partition.num_blocks(),
    })
}

fn msp_apply(args: &MspApplyArgs) -> Result<(), Error> {
    let config = args.cascade.config()?;
    let image = read_image(&args.image)?;
    let features = read_mspt(&args.features)?;
    let (out, _) = msp_cascade_forward(&features, &image, &config)?;
    write_mspt(&out, &args.output)
}

fn refine(args: &RefineArgs) -> Result<(), Error> {
    let config = args.cascade.config()?;
    let image = read_image(&args.image)?;
    let probs = read_mspt(&args.probs)?;
    let labels = refine_probs(&probs, &image, &config)?;
    write_mspt(&labels.to_tensor(), &args.output)
}

fn metrics(args: &MetricsArgs, out: &mut dyn Write) -> Result<(), Error> {
    if args.classes == 0 {
        return Err(Error::InvalidArgument("--classes must be at least 1".into()));
    }
    let pred = read_label_map(&args.pred)?;
    let gt = read_label_map(&args.gt)?;
    emit(out, &evaluate(&pred, &gt, args.classes, args.ignore, args.boundary_tol)?)
}

fn spx_eval(args: &SpxEvalArgs, out: &mut dyn Write) -> Result<(), Error> {
    let labels = read_label_map(&args.labels)?;
    let gt = read_label_map(&args.gt)?;
    let partition = SuperpixelPartition::relabel_contiguous(labels.height(), labels.width(), labels.labels())?;
    emit(out, &evaluate_superpixels(&partition, &gt, args.tol)?)
}

fn gradcheck(args: &GradcheckArgs, out: &mut dyn Write) -> Result<(), Error> {
    let report = run_gradcheck(&GradcheckSpec {
        channels: args.channels,
        height: args.height,
        width: args.width,
        blocks: args.blocks,
        seed: args.seed,
        alpha: args.alpha,
        stages: args.scales,
    })?;
    emit(out, &report)
}

/// Parses `argv` (including the program name) and runs the chosen subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_BAD_ARGS
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Superpixel(a) => superpixel(a, out, err),
        Command::MspApply(a) => msp_apply(a),
        Command::Refine(a) => refine(a),
        Command::Metrics(a) => metrics(a, out),
        Command::SpxEval(a) => spx_eval(a, out),
        Command::Gradcheck(a) => gradcheck(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
