//! Command-line entry points.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. Every
//! tuning flag can also be set through a `CARDIOFOCUS_*` environment
//! variable.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::features::{FeatureConfig, StaticFrame, TemporalBoundary};
use crate::focus::{run_focus, FocusConfig, FusionWeights};
use crate::io::{self, RoiManifest, RoiRecord, RunConfig};
use crate::metrics::{self, EvalReport};
use crate::par;
use crate::phantom::{generate, PhantomSpec};
use crate::roi::{extract_with_box, paste_mask, plan_roi, RoiConfig};
use crate::tensor::{normalize, Coord, Dims4, Mask4D};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cardiofocus", version, about = "Motion-driven heart localization for 4D cardiac MRI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Localize the heart and write a region manifest plus focus maps.
    Focus(FocusArgs),
    /// Extract the regions listed in a manifest.
    Crop(CropArgs),
    /// Generate a synthetic beating phantom and its labels.
    Phantom(PhantomArgs),
    /// Score predictions against labels.
    Eval(EvalArgs),
    /// Time the segmenter on the full sequence versus the extracted region.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FrameArg {
    First,
    TimeMean,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TimeBoundaryArg {
    Periodic,
    Replicate,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Static and motion fusion weights.
    #[arg(long, env = "CARDIOFOCUS_WEIGHTS", default_value = "0.1,0.9", value_parser = parse_weights)]
    weights: FusionWeights,
    /// Quantile of the fused map used as threshold.
    #[arg(long, env = "CARDIOFOCUS_PERCENTILE", default_value_t = 0.9)]
    percentile: f64,
    /// Gaussian smoothing of the fused map, in voxels.
    #[arg(long, env = "CARDIOFOCUS_SMOOTH_SIGMA", default_value_t = 5.0)]
    smooth_sigma: f64,
    /// Box half-extent in units of scale times grid extent.
    #[arg(long, env = "CARDIOFOCUS_K", default_value_t = 2.0)]
    k: f64,
    /// In-plane output shape, HxW.
    #[arg(long, env = "CARDIOFOCUS_TARGET", default_value = "128x128", value_parser = parse_shape)]
    target: (usize, usize),
    /// Output extents are rounded up to a multiple of this.
    #[arg(long, env = "CARDIOFOCUS_MULTIPLE", default_value_t = 32)]
    multiple: usize,
    /// Numerator of the scale estimate.
    #[arg(long, env = "CARDIOFOCUS_SCALE_FACTOR", default_value_t = 3.0)]
    scale_factor: f64,
    #[arg(long, env = "CARDIOFOCUS_EPSILON", default_value_t = crate::tensor::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Frame feeding the static features.
    #[arg(long, env = "CARDIOFOCUS_STATIC_FRAME", value_enum, default_value = "first")]
    static_frame: FrameArg,
    #[arg(long, env = "CARDIOFOCUS_TEMPORAL_BOUNDARY", value_enum, default_value = "periodic")]
    temporal_boundary: TimeBoundaryArg,
}

impl PipelineArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            focus: FocusConfig {
                epsilon: self.epsilon,
                weights: self.weights,
                percentile: self.percentile,
                smooth_sigma: self.smooth_sigma,
                scale_factor: self.scale_factor,
                features: FeatureConfig {
                    static_frame: match self.static_frame {
                        FrameArg::First => StaticFrame::First,
                        FrameArg::TimeMean => StaticFrame::TimeMean,
                    },
                    temporal_boundary: match self.temporal_boundary {
                        TimeBoundaryArg::Periodic => TemporalBoundary::Periodic,
                        TimeBoundaryArg::Replicate => TemporalBoundary::Replicate,
                    },
                },
            },
            roi: RoiConfig {
                k: self.k,
                target: Some(self.target),
                multiple: self.multiple,
                renormalize: true,
                epsilon: self.epsilon,
            },
        }
    }
}

#[derive(Debug, Args)]
struct FocusArgs {
    /// Input sequences (.nii, .nii.gz or tensor container).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Patients processed in parallel (0 = all cores).
    #[arg(long, env = "CARDIOFOCUS_JOBS", default_value_t = 1)]
    jobs: usize,
    /// Skip writing PGM heatmaps.
    #[arg(long)]
    no_heatmaps: bool,
}

#[derive(Debug, Args)]
struct CropArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, env = "CARDIOFOCUS_JOBS", default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct PhantomArgs {
    /// Output sequence path.
    #[arg(long)]
    out: PathBuf,
    /// Label output path; defaults to the sequence path with `.mask` before
    /// the extension.
    #[arg(long)]
    masks: Option<PathBuf>,
    /// TOML phantom description; flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, env = "CARDIOFOCUS_SEED")]
    seed: Option<u64>,
    /// Extents as TxZxHxW.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims4>,
    /// Ring center as x,y,z.
    #[arg(long, value_parser = parse_coord)]
    center: Option<Coord>,
    #[arg(long)]
    noise: Option<f32>,
    /// No contraction and no noise.
    #[arg(long = "static")]
    static_: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Ground-truth labels on the source grid.
    #[arg(long)]
    labels: PathBuf,
    /// Predicted mask on the source grid.
    #[arg(long, conflicts_with = "roi")]
    pred: Option<PathBuf>,
    /// Extracted region to segment with the threshold segmenter; needs
    /// `--manifest` to map the result back.
    #[arg(long, requires = "manifest")]
    roi: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Manifest record index.
    #[arg(long, default_value_t = 0)]
    record: usize,
    /// Baseline prediction for the McNemar test.
    #[arg(long)]
    base_pred: Option<PathBuf>,
    /// Quantile used by the threshold segmenter.
    #[arg(long, env = "CARDIOFOCUS_SEGMENT_PERCENTILE", default_value_t = 0.7)]
    segment_percentile: f64,
    #[arg(long, env = "CARDIOFOCUS_MIN_PIXELS", default_value_t = metrics::MIN_LABEL_PIXELS)]
    min_pixels: usize,
    /// key=value report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, env = "CARDIOFOCUS_SEGMENT_PERCENTILE", default_value_t = 0.7)]
    segment_percentile: f64,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn parse_list<T: std::str::FromStr>(s: &str, sep: char, n: usize) -> std::result::Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(sep).collect();
    if parts.len() != n {
        return Err(format!("expected {n} values separated by '{sep}', got {s:?}"));
    }
    parts.iter().map(|p| p.trim().parse::<T>().map_err(|_| format!("cannot parse {p:?}"))).collect()
}

fn parse_weights(s: &str) -> std::result::Result<FusionWeights, String> {
    let v = parse_list::<f64>(s, ',', 2)?;
    FusionWeights::new(v[0], v[1]).map_err(|e| e.to_string())
}

fn parse_shape(s: &str) -> std::result::Result<(usize, usize), String> {
    let v = parse_list::<usize>(s, 'x', 2)?;
    if v.contains(&0) {
        return Err("extents must be positive".into());
    }
    Ok((v[0], v[1]))
}

fn parse_dims(s: &str) -> std::result::Result<Dims4, String> {
    let v = parse_list::<usize>(s, 'x', 4)?;
    Ok(Dims4::new(v[0], v[1], v[2], v[3]))
}

fn parse_coord(s: &str) -> std::result::Result<Coord, String> {
    let v = parse_list::<f64>(s, ',', 3)?;
    Ok(Coord::new(v[0], v[1], v[2]))
}

/// File name with a known volume extension removed.
fn stem_of(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("input");
    for ext in [".nii.gz", ".nii", ".t4d"] {
        if let Some(s) = name.strip_suffix(ext) {
            return s.to_string();
        }
    }
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string()
}

fn default_mask_path(out: &Path) -> PathBuf {
    let name = out.file_name().and_then(|n| n.to_str()).unwrap_or("phantom");
    let file = match name.find('.') {
        Some(i) => format!("{}.mask{}", &name[..i], &name[i..]),
        None => format!("{name}.mask"),
    };
    out.with_file_name(file)
}

fn write_sequence(path: &Path, v: &crate::tensor::Volume4D) -> CliResult {
    if io::nifti::is_nifti_path(path) {
        io::write_nifti(path, v)?;
    } else {
        io::write_volume4(path, v)?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(Error::file(dir, e)))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| CliError::Data(Error::file(path, e)))
}

/// Runs `f` over `items`: sequentially for `jobs == 1`, otherwise on a pool
/// of `jobs` workers (0 = all cores). Output order follows input order.
fn run_jobs<T: Sync, U: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    if jobs == 1 {
        items.iter().map(f).collect()
    } else {
        par::with_threads(jobs, || par::map_collect(items, f))
    }
}

fn check_unique_stems(paths: &[PathBuf]) -> CliResult {
    let mut seen = std::collections::BTreeSet::new();
    for p in paths {
        if !seen.insert(stem_of(p)) {
            return Err(CliError::Usage(format!("two inputs share the output name {:?}", stem_of(p))));
        }
    }
    Ok(())
}

fn cmd_focus(args: FocusArgs) -> CliResult {
    let cfg = args.pipeline.config();
    check_unique_stems(&args.inputs)?;
    create_dir(&args.out_dir)?;
    let results = run_jobs(&args.inputs, args.jobs, |input| -> CliResult<RoiRecord> {
        let v = io::read_sequence(input)?;
        let f = run_focus(&v, &cfg.focus)?;
        let roi = plan_roi(&f, &cfg.roi)?;
        let stem = stem_of(input);
        let out = |suffix: &str| args.out_dir.join(format!("{stem}.{suffix}"));
        io::write_volume3(out("fused.t3d"), &f.fused)?;
        io::write_volume3(out("rbf.t3d"), &f.rbf)?;
        let mask = f.fused.with_data(f.mask.data().iter().map(|&b| b as u8 as f32).collect());
        io::write_volume3(out("mask.t3d"), &mask)?;
        if !args.no_heatmaps {
            let (z, _, _) = f.center.nearest_voxel(f.dims());
            io::write_heatmap(&f.fused, z, out("fused.pgm"))?;
            io::write_heatmap(&f.rbf, z, out("rbf.pgm"))?;
        }
        Ok(RoiRecord::new(input.to_string_lossy(), v.dims(), &f, roi))
    });
    let records = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    for r in &records {
        let fb = r.fallback.map_or("none".to_string(), |f| format!("{f:?}"));
        println!(
            "{}: center=({:.2},{:.2},{:.2}) scale={:.4} box={:?}..{:?} fallback={fb}",
            r.source, r.center.x, r.center.y, r.center.z, r.scale, r.roi.lo, r.roi.hi
        );
    }
    RoiManifest::new(cfg, records).write(args.out_dir.join("manifest.json"))?;
    Ok(())
}

fn cmd_crop(args: CropArgs) -> CliResult {
    let manifest = RoiManifest::read(&args.manifest)?;
    let sources: Vec<PathBuf> = manifest.records.iter().map(|r| PathBuf::from(&r.source)).collect();
    check_unique_stems(&sources)?;
    create_dir(&args.out_dir)?;
    let cfg = manifest.config.roi;
    let results = run_jobs(&manifest.records, args.jobs, |r| -> CliResult {
        let v = io::read_sequence(&r.source)?;
        if v.dims() != r.dims {
            return Err(CliError::Data(Error::DimMismatch {
                expected: r.dims.as_array().to_vec(),
                found: v.dims().as_array().to_vec(),
            }));
        }
        let roi = extract_with_box(&v, &r.roi, &cfg)?;
        let path = args.out_dir.join(format!("{}.roi.t4d", stem_of(Path::new(&r.source))));
        io::write_volume4(&path, &roi)?;
        println!("{} -> {} dims={:?}", r.source, path.display(), roi.dims().as_array());
        Ok(())
    });
    results.into_iter().collect::<CliResult<Vec<_>>>()?;
    Ok(())
}

fn cmd_phantom(args: PhantomArgs) -> CliResult {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(Error::file(path, e)))?;
            toml::from_str::<PhantomSpec>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => PhantomSpec::default(),
    };
    if let Some(d) = args.dims {
        spec = PhantomSpec { seed: spec.seed, noise: spec.noise, ..PhantomSpec::for_dims(d) };
    }
    if let Some(c) = args.center {
        spec.center = c;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(n) = args.noise {
        spec.noise = n;
    }
    if args.static_ {
        spec = spec.without_motion();
        spec.noise = 0.0;
    }
    let out = generate(&spec)?;
    let mask_path = args.masks.clone().unwrap_or_else(|| default_mask_path(&args.out));
    write_sequence(&args.out, &out.volume)?;
    write_sequence(&mask_path, &out.mask.to_volume(spec.spacing))?;
    println!(
        "phantom dims={:?} center=({},{},{}) seed={} labels={} -> {}, {}",
        spec.dims.as_array(),
        out.center.x,
        out.center.y,
        out.center.z,
        spec.seed,
        out.mask.count(),
        args.out.display(),
        mask_path.display()
    );
    Ok(())
}

fn manifest_record(path: &Path, index: usize) -> CliResult<RoiRecord> {
    let m = RoiManifest::read(path)?;
    let n = m.records.len();
    m.records
        .into_iter()
        .nth(index)
        .ok_or_else(|| CliError::Usage(format!("manifest has {n} records, asked for {index}")))
}

fn cmd_eval(args: EvalArgs) -> CliResult {
    let labels = io::read_mask(&args.labels)?;
    let record = args.manifest.as_deref().map(|p| manifest_record(p, args.record)).transpose()?;
    let pred: Mask4D = match (&args.pred, &args.roi) {
        (Some(p), _) => io::read_mask(p)?,
        (None, Some(r)) => {
            let roi = io::read_volume4(r)?;
            let seg = metrics::threshold_segmenter(&roi, args.segment_percentile)?;
            let rec = record.as_ref().expect("clap enforces --manifest with --roi");
            let e = rec.roi.extent();
            let seg_dims = seg.dims();
            if seg_dims.z != e.z {
                return Err(CliError::Data(Error::DimMismatch { expected: vec![e.z], found: vec![seg_dims.z] }));
            }
            paste_mask(&seg, &rec.roi)?
        }
        (None, None) => return Err(CliError::Usage("one of --pred or --roi is required".into())),
    };
    let slices = metrics::filter_slices(&labels, args.min_pixels);
    let counts = metrics::confusion_on_slices(&labels, &pred, &slices)?;
    let mut report = EvalReport::from_counts(counts);
    report.slices_scored = slices.len();
    report.slices_total = labels.dims().t * labels.dims().z;
    report.min_pixels = args.min_pixels;
    if let Some(rec) = &record {
        report.roi_recall = Some(metrics::box_recall(&labels, &rec.roi)?);
    }
    if let Some(b) = &args.base_pred {
        let base = io::read_mask(b)?;
        let (b, c) = metrics::discordant_on_slices(&labels, &base, &pred, &slices)?;
        report.mcnemar_chi2 = metrics::mcnemar_corrected(b, c).ok();
    }
    let kv = report.to_key_value();
    match &args.out {
        Some(p) => write_text(p, &kv)?,
        None => print!("{kv}"),
    }
    if let Some(p) = &args.json {
        let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.into()))?;
        s.push('\n');
        write_text(p, &s)?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be >= 1".into()));
    }
    let cfg = args.pipeline.config();
    let v = io::read_sequence(&args.input)?;
    let (focus_time, f) = metrics::median_time(1, || run_focus(&v, &cfg.focus));
    let f = f?;
    let b = plan_roi(&f, &cfg.roi)?;
    let (extract_time, roi) = metrics::median_time(1, || extract_with_box(&v, &b, &cfg.roi));
    let roi = roi?;
    let full = normalize(&v, cfg.focus.epsilon)?;
    let p = args.segment_percentile;
    let (base_time, base) = metrics::median_time(args.runs, || metrics::threshold_segmenter(&full, p));
    base?;
    let (ours_time, ours) = metrics::median_time(args.runs, || metrics::threshold_segmenter(&roi, p));
    ours?;
    let (bt, ot) = (base_time.as_secs_f64(), ours_time.as_secs_f64());
    let speedup = metrics::speedup(bt.max(1e-9), ot.max(1e-9))?;
    let text = format!(
        "full_voxels={}\nroi_voxels={}\nfocus_time={:.6}\nextract_time={:.6}\nbase_time={bt:.6}\nours_time={ot:.6}\nspeedup={speedup:.3}\nruns={}\n",
        v.dims().len(),
        roi.dims().len(),
        focus_time.as_secs_f64(),
        extract_time.as_secs_f64(),
        args.runs
    );
    match &args.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Focus(a) => cmd_focus(a),
        Command::Crop(a) => cmd_crop(a),
        Command::Phantom(a) => cmd_phantom(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
