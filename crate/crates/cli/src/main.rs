use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtface::evalharness::{load_samples, render_report, run_experiment};
use dtface::{
    build_gallery, delaunay, fit_eigenmodel, load_gallery, load_image, load_landmarks,
    load_manifest, recognize, save_gallery, write_atomic, Category, Error, ExperimentConfig,
    MatchMode, ReportFormat, DEFAULT_DT_DIVISOR, DEFAULT_K,
};

/// Face recognition from eigenfaces fused with a Delaunay landmark-mesh descriptor.
#[derive(Parser, Debug)]
#[command(name = "dtface", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Triangulate a landmark file and print the mesh as JSON
    Triangulate(TriangulateArgs),
    /// Fit an eigenspace on a manifest and write the gallery file
    Train(TrainArgs),
    /// Match one probe image against a gallery
    Recognize(RecognizeArgs),
    /// Run a train/test split and report accuracy
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct TriangulateArgs {
    /// Landmark CSV, one `x,y` per line
    #[arg(long)]
    landmarks: PathBuf,
    /// Write the mesh here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Number of eigenfaces to keep (clamped to the data rank)
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Gallery file to write
    #[arg(long)]
    out: PathBuf,
    /// Read each landmark file by name from this directory instead
    #[arg(long)]
    scheme_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RecognizeArgs {
    #[arg(long)]
    gallery: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// Probe landmarks, required for dt-pca
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// pca-only or dt-pca
    #[arg(long)]
    mode: MatchMode,
    #[arg(long, default_value_t = DEFAULT_DT_DIVISOR)]
    dt_divisor: f64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Leading variants per subject used for training; the rest are test images
    #[arg(long)]
    train_variants: usize,
    /// Comma-separated list of pca-only, dt-pca
    #[arg(long, value_delimiter = ',', default_value = "pca-only,dt-pca")]
    modes: Vec<MatchMode>,
    #[arg(long, default_value_t = DEFAULT_DT_DIVISOR)]
    dt_divisor: f64,
    /// text or csv
    #[arg(long, default_value = "text")]
    report: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            println!("{}", text.trim_end_matches('\n'));
            Ok(())
        }
    }
}

fn triangulate(args: TriangulateArgs) -> Result<(), Error> {
    let landmarks = load_landmarks(&args.landmarks)?;
    let mesh = delaunay(&landmarks)?;
    emit(&mesh.to_json(), args.out.as_deref())
}

fn train(args: TrainArgs) -> Result<(), Error> {
    let manifest = load_manifest(&args.manifest)?;
    let with_landmarks = args.scheme_dir.is_some()
        || manifest
            .entries
            .iter()
            .all(|e| !e.landmark_path.as_os_str().is_empty());
    let samples = load_samples(&manifest.entries, with_landmarks, args.scheme_dir.as_deref())?;
    let images: Vec<_> = samples.iter().map(|s| s.image.clone()).collect();
    let model = fit_eigenmodel(&images, args.k)?;
    let gallery = build_gallery(&model, &samples)?;
    save_gallery(&gallery, &model, &args.out)?;
    eprintln!(
        "trained {} entries, k = {}{}",
        gallery.len(),
        model.k(),
        if with_landmarks { ", with landmarks" } else { "" }
    );
    Ok(())
}

fn recognize_cmd(args: RecognizeArgs) -> Result<(), Error> {
    if args.mode == MatchMode::DtPca && args.landmarks.is_none() {
        return Err(Error::InvalidArgument("dt-pca needs --landmarks".into()));
    }
    let (gallery, model) = load_gallery(&args.gallery)?;
    let image = load_image(&args.image)?;
    let landmarks = match (args.mode, &args.landmarks) {
        (MatchMode::DtPca, Some(path)) => Some(load_landmarks(path)?),
        _ => None,
    };
    let report = recognize(
        &gallery,
        &model,
        &image,
        landmarks.as_ref(),
        args.mode,
        args.dt_divisor,
    )?;
    emit(&report.to_json(), None)
}

fn evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::new(&args.manifest, args.train_variants);
    config.modes = args.modes;
    config.dt_divisor = args.dt_divisor;
    let table = run_experiment(&config)?;
    emit(&render_report(&table, args.report)?, args.out.as_deref())
}

fn fail(category: Category, detail: &str) -> ExitCode {
    eprintln!("error: {}: {}", category.as_str(), detail);
    ExitCode::from(category.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            return fail(Category::Usage, first.trim_start_matches("error: "));
        }
    };
    let result = match cli.command {
        Command::Triangulate(a) => triangulate(a),
        Command::Train(a) => train(a),
        Command::Recognize(a) => recognize_cmd(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.category(), &e.to_string().replace('\n', " ")),
    }
}
