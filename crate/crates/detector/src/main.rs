use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use osklad_core::{
    build_whitener, fit_ekfs, fit_linear, load_model, save_model, FitConfig, KernelSpec,
    MasterMethod, OskladModel, DEFAULT_EIGEN_FLOOR,
};
use osklad_detector::{
    build_scoremap, default_header_path, default_sigma_grid, gen_synthetic, load_cube,
    select_bandwidth, write_cube, write_pgm, write_score_csv, write_truth, BandwidthConfig, Error,
    ImageCube, Rect, SynthConfig, DEFAULT_REGIONS,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "osklad",
    version,
    about = "Sparse-kernel SVDD anomaly detection for image cubes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a detector on a background patch and save the model.
    Train(TrainArgs),
    /// Score every pixel of a cube and write the score map.
    Score(ScoreArgs),
    /// Generate a seeded synthetic cube with planted anomalies.
    Gen(GenArgs),
    /// Pick an RBF bandwidth by the minimax rule and print it.
    Bandwidth(BandwidthArgs),
}

#[derive(Args)]
struct CubeArgs {
    /// Pixel CSV: one row per pixel, one column per band.
    #[arg(long)]
    data: PathBuf,
    /// Side header; defaults to the data path with extension `hdr`.
    #[arg(long)]
    header: Option<PathBuf>,
}

impl CubeArgs {
    fn load(&self) -> Result<ImageCube, Error> {
        let header = self
            .header
            .clone()
            .unwrap_or_else(|| default_header_path(&self.data));
        load_cube(&self.data, header)
    }
}

#[derive(Args)]
struct SelectionArgs {
    /// Number of random background windows.
    #[arg(long, default_value_t = DEFAULT_REGIONS)]
    n_regions: usize,
    /// Window size as WxH.
    #[arg(long, default_value = "5x5", value_parser = parse_dims)]
    region: (usize, usize),
    /// Candidate bandwidths; defaults to multiples of the median patch distance.
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MasterArg {
    InteriorPoint,
    ProjectedGradient,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cube: CubeArgs,
    /// Background patch x,y,w,h; defaults to the whole image.
    #[arg(long)]
    patch: Option<Rect>,
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// RBF bandwidth.
    #[arg(long, conflicts_with = "sigma_auto")]
    sigma: Option<f64>,
    /// Choose the RBF bandwidth by the minimax rule.
    #[arg(long)]
    sigma_auto: bool,
    #[command(flatten)]
    selection: SelectionArgs,
    /// Features per mask; defaults to half the band count (linear) or half
    /// the retained EKFS rank (rbf).
    #[arg(long)]
    budget: Option<usize>,
    /// SVDD box bound.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_EIGEN_FLOOR)]
    eigen_floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    master_method: Option<MasterArg>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    cube: CubeArgs,
    #[arg(long)]
    out_pgm: Option<PathBuf>,
    /// Per-pixel scores as CSV (x,y,score,normalized).
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 20)]
    bands: usize,
    /// Informative band indices.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    informative: Vec<usize>,
    /// Variance of the informative bands (the others have variance 1).
    #[arg(long, default_value_t = 10.0)]
    informative_variance: f64,
    #[arg(long, default_value_t = 30)]
    anomalies: usize,
    #[arg(long, default_value_t = 10.0)]
    offset: f64,
    /// Rectangle x,y,w,h kept free of anomalies.
    #[arg(long)]
    keep_out: Option<Rect>,
    /// Output pixel CSV.
    #[arg(long)]
    out: PathBuf,
    /// Output header; defaults to the output path with extension `hdr`.
    #[arg(long)]
    header_out: Option<PathBuf>,
    /// Output truth file; defaults to the output path with extension `truth`.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct BandwidthArgs {
    #[command(flatten)]
    cube: CubeArgs,
    #[arg(long)]
    patch: Option<Rect>,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((num(w)?, num(h)?))
}

fn whole_image(cube: &ImageCube) -> Rect {
    Rect::new(0, 0, cube.width(), cube.height())
}

fn pick_sigma(
    cube: &ImageCube,
    patch: Rect,
    selection: &SelectionArgs,
    seed: u64,
) -> Result<f64, Error> {
    let sigma_grid = match &selection.sigma_grid {
        Some(g) => g.clone(),
        None => default_sigma_grid(&cube.patch(&patch)?)?,
    };
    let config = BandwidthConfig {
        patch,
        n_regions: selection.n_regions,
        region: selection.region,
        sigma_grid,
        seed,
    };
    let report = select_bandwidth(cube, &config)?;
    for (sigma, worst) in &report.candidates {
        eprintln!("sigma {sigma:.6e}  max window score {worst:.6}");
    }
    Ok(report.sigma)
}

fn train(args: &TrainArgs) -> Result<(), Error> {
    let cube = args.cube.load()?;
    let patch = args.patch.unwrap_or_else(|| whole_image(&cube));
    let x = cube.patch(&patch)?;

    let mut config = FitConfig::new(1);
    config.solver.c = args.c;
    if let Some(m) = args.master_method {
        config.master.method = match m {
            MasterArg::InteriorPoint => MasterMethod::InteriorPoint,
            MasterArg::ProjectedGradient => MasterMethod::ProjectedGradient,
        };
    }
    if let Some(v) = args.max_outer {
        config.max_outer = v;
    }
    if let Some(v) = args.outer_tol {
        config.outer_tol = v;
    }

    let (model, report) = match args.kernel {
        KernelArg::Linear => {
            config.budget = args.budget.unwrap_or((x.cols() / 2).max(1));
            fit_linear(&x, &config)?
        }
        KernelArg::Rbf => {
            let sigma = match (args.sigma, args.sigma_auto) {
                (Some(s), _) => s,
                (None, true) => pick_sigma(&cube, patch, &args.selection, args.seed)?,
                (None, false) => {
                    return Err(Error::InvalidParameter(
                        "the rbf kernel needs --sigma or --sigma-auto".into(),
                    ))
                }
            };
            let spec = KernelSpec::rbf(sigma)?;
            config.budget = match args.budget {
                Some(b) => b,
                None => (build_whitener(&x, spec, args.eigen_floor)?.retained_rank() / 2).max(1),
            };
            fit_ekfs(&x, spec, args.eigen_floor, &config)?
        }
    };
    save_model(&model, &args.model_out)?;
    summarize(&model);
    eprintln!(
        "iterations {}  stop {:?}  t {:.12e}",
        report.iterations, report.stop_reason, report.master.t
    );
    Ok(())
}

fn summarize(model: &OskladModel) {
    eprintln!(
        "masks {}  budget {}  radius_sq {:.12e}",
        model.masks().len(),
        model.config().budget,
        model.radius_sq()
    );
}

fn score(args: &ScoreArgs) -> Result<(), Error> {
    let model = load_model(&args.model)?;
    let cube = args.cube.load()?;
    let map = build_scoremap(&model, &cube)?;
    if let Some(p) = &args.out_pgm {
        write_pgm(&map, p)?;
    }
    if let Some(p) = &args.out_csv {
        write_score_csv(&map, p)?;
    }
    let outside = map.raw().iter().filter(|&&s| s > 1.0).count();
    eprintln!("pixels {}  outside sphere {outside}", map.raw().len());
    Ok(())
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn gen(args: &GenArgs) -> Result<(), Error> {
    let config = SynthConfig {
        seed: args.seed,
        width: args.width,
        height: args.height,
        bands: args.bands,
        informative: args.informative.clone(),
        informative_variance: args.informative_variance,
        anomalies: args.anomalies,
        offset: args.offset,
        keep_out: args.keep_out,
    };
    let s = gen_synthetic(&config)?;
    let header = args
        .header_out
        .clone()
        .unwrap_or_else(|| with_ext(&args.out, "hdr"));
    let truth = args
        .truth_out
        .clone()
        .unwrap_or_else(|| with_ext(&args.out, "truth"));
    write_cube(&s.cube, &args.out, header)?;
    write_truth(&s.truth, args.width, truth)?;
    Ok(())
}

fn bandwidth(args: &BandwidthArgs) -> Result<(), Error> {
    let cube = args.cube.load()?;
    let patch = args.patch.unwrap_or_else(|| whole_image(&cube));
    let sigma = pick_sigma(&cube, patch, &args.selection, args.seed)?;
    println!("{sigma:e}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Score(a) => score(a),
        Command::Gen(a) => gen(a),
        Command::Bandwidth(a) => bandwidth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(EXIT_NUMERICAL)
            } else if e.is_usage() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}
