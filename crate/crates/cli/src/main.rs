//! Command-line front end for aesthetic QR generation and measurement.
//!
//! Subcommands: `encode` renders a plain symbol to a PNG, `beautify`
//! blends a symbol into an image under a per-module decode-success floor,
//! `scan` decodes an image, `bench` sweeps one perturbation axis over
//! generated targets, and `eta-sweep` measures robustness versus the
//! floor value.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, unreadable
//! inputs), 2 on domain errors (capacity, verification, an image that
//! cannot be decoded). With `--json` the machine-readable result goes to
//! stdout; human-readable progress and summaries go to stderr. Nothing is
//! written outside the paths given by `--out`, `--csv` and `--diag-dir`.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use artqr_core::bench::{self, BenchTarget, PerturbationKind, PerturbationSpec};
use artqr_core::luminance::VarpiPreset;
use artqr_core::pipeline::{
    beautify, success_heatmap, BeautifyConfig, BeautifyResult, EtaMode, PipelineError,
};
use artqr_core::qr_symbol::{encode_symbol, EcLevel, Payload, QrSpec};
use artqr_core::scanner::{scan_rgb, Outcome, ScanReport};
use artqr_core::testimg;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use image::imageops::FilterType;
use image::RgbImage;
use rayon::prelude::*;

use config::Settings;

/// Payload used by the benchmark commands when none is given.
const DEFAULT_PAYLOAD: &str = "https://example.com/art";

/// Aesthetic QR codes that still scan: generate, blend, decode, measure.
#[derive(Parser)]
#[command(name = "artqr", version, about, max_term_width = 100)]
struct Cli {
    /// defaults file with key=value lines; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// machine-readable JSON on stdout
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a plain code to a PNG
    Encode(EncodeArgs),
    /// Blend a code into an image under a decode-success floor
    Beautify(BeautifyArgs),
    /// Decode a code from an image
    Scan(ScanArgs),
    /// Sweep one perturbation axis and measure decode success
    Bench(BenchArgs),
    /// Success-rate curve versus the uniform floor value
    EtaSweep(EtaSweepArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// text payload to encode
    #[arg(long)]
    data: Option<String>,
    /// symbol version 1-10; default: the smallest that fits
    #[arg(long)]
    version: Option<u8>,
    /// error-correction level: L, M, Q or H
    #[arg(long)]
    ec: Option<String>,
    /// mask pattern 0-7
    #[arg(long)]
    mask: Option<u8>,
    /// approximate output edge length in pixels
    #[arg(long)]
    size: Option<u32>,
    /// output PNG path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BeautifyArgs {
    /// source image the code is blended into
    #[arg(long)]
    image: Option<PathBuf>,
    /// text payload to encode
    #[arg(long)]
    data: Option<String>,
    /// symbol version 1-10; default: the smallest that fits
    #[arg(long)]
    version: Option<u8>,
    /// error-correction level: L, M, Q or H
    #[arg(long)]
    ec: Option<String>,
    /// mask pattern 0-7
    #[arg(long)]
    mask: Option<u8>,
    /// per-module success floor in [0, 1], or `map` to derive floors from
    /// image detail
    #[arg(long)]
    eta: Option<String>,
    /// initial adjustment-weight preset: gaussian, constant, random,
    /// center, edge or image:<path>
    #[arg(long = "omega-preset")]
    omega_preset: Option<String>,
    /// binarization-threshold variance of the channel model
    #[arg(long)]
    sigma2: Option<f64>,
    /// sampling spread in pixels; default derives from the module size
    #[arg(long)]
    sigma3: Option<f64>,
    /// working resolution the source is resampled toward
    #[arg(long)]
    size: Option<usize>,
    /// seed for the random pieces (random preset, success-rate draws)
    #[arg(long)]
    seed: Option<u64>,
    /// re-scan the output and fail if it cannot be decoded
    #[arg(long)]
    verify: bool,
    /// output PNG path
    #[arg(long)]
    out: Option<PathBuf>,
    /// directory for stage outputs and the diagnostics sidecar
    #[arg(long = "diag-dir")]
    diag_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// image to decode
    image: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// perturbation axis: x, y, z, brightness, scale, coverage or eta
    #[arg(long)]
    sweep: Option<String>,
    /// directory of source images beautified into targets; default: the
    /// built-in corpus
    #[arg(long)]
    images: Option<PathBuf>,
    /// payload for the generated targets
    #[arg(long)]
    data: Option<String>,
    /// uniform success floor for the generated targets
    #[arg(long)]
    eta: Option<String>,
    /// seed for generation and perturbation draws
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads; default: logical cores
    #[arg(long)]
    jobs: Option<usize>,
    /// write per-scan rows to this CSV file instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EtaSweepArgs {
    /// directory of source images; default: the built-in corpus
    #[arg(long)]
    images: Option<PathBuf>,
    /// payload for the generated outputs
    #[arg(long)]
    data: Option<String>,
    /// seed for generation and perturbation draws
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads; default: logical cores
    #[arg(long)]
    jobs: Option<usize>,
    /// write per-scan rows to this CSV file instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Failure category deciding the process exit code.
#[derive(Debug)]
enum CliError {
    /// bad flags or unreadable inputs: exit 1
    Usage(String),
    /// the work itself failed (capacity, verification, decode): exit 2
    Domain(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => write!(f, "{}", m),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn domain(msg: impl Into<String>) -> CliError {
    CliError::Domain(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(path) => config::load(path).map_err(CliError::Usage)?,
        None => Settings::new(),
    };
    match cli.command {
        Command::Encode(mut a) => {
            a.absorb(&settings)?;
            run_encode(a, cli.json)
        }
        Command::Beautify(mut a) => {
            a.absorb(&settings)?;
            run_beautify(a, cli.json)
        }
        Command::Scan(a) => run_scan(a, cli.json),
        Command::Bench(mut a) => {
            a.absorb(&settings)?;
            run_bench(a, cli.json)
        }
        Command::EtaSweep(mut a) => {
            a.absorb(&settings)?;
            run_eta_sweep(a, cli.json)
        }
    }
}

// ---------------------------------------------------------------------------
// config-file merging: a config value fills a flag only when the flag was
// not passed on the command line

fn fill_str(slot: &mut Option<String>, s: &Settings, key: &str) {
    if slot.is_none() {
        if let Some(v) = s.get(key) {
            *slot = Some(v.clone());
        }
    }
}

fn fill_path(slot: &mut Option<PathBuf>, s: &Settings, key: &str) {
    if slot.is_none() {
        if let Some(v) = s.get(key) {
            *slot = Some(PathBuf::from(v));
        }
    }
}

fn fill_parsed<T>(slot: &mut Option<T>, s: &Settings, key: &str) -> Result<(), CliError>
where
    T: std::str::FromStr,
    T::Err: fmt::Display,
{
    if slot.is_none() {
        if let Some(v) = s.get(key) {
            let parsed = v
                .parse()
                .map_err(|e| usage(format!("config key `{}`: {}", key, e)))?;
            *slot = Some(parsed);
        }
    }
    Ok(())
}

fn fill_flag(flag: &mut bool, s: &Settings, key: &str) -> Result<(), CliError> {
    if !*flag {
        if let Some(v) = s.get(key) {
            *flag = config::parse_bool(v)
                .map_err(|e| usage(format!("config key `{}`: {}", key, e)))?;
        }
    }
    Ok(())
}

impl EncodeArgs {
    fn absorb(&mut self, s: &Settings) -> Result<(), CliError> {
        fill_str(&mut self.data, s, "data");
        fill_parsed(&mut self.version, s, "version")?;
        fill_str(&mut self.ec, s, "ec");
        fill_parsed(&mut self.mask, s, "mask")?;
        fill_parsed(&mut self.size, s, "size")?;
        fill_path(&mut self.out, s, "out");
        Ok(())
    }
}

impl BeautifyArgs {
    fn absorb(&mut self, s: &Settings) -> Result<(), CliError> {
        fill_path(&mut self.image, s, "image");
        fill_str(&mut self.data, s, "data");
        fill_parsed(&mut self.version, s, "version")?;
        fill_str(&mut self.ec, s, "ec");
        fill_parsed(&mut self.mask, s, "mask")?;
        fill_str(&mut self.eta, s, "eta");
        fill_str(&mut self.omega_preset, s, "omega-preset");
        fill_parsed(&mut self.sigma2, s, "sigma2")?;
        fill_parsed(&mut self.sigma3, s, "sigma3")?;
        fill_parsed(&mut self.size, s, "size")?;
        fill_parsed(&mut self.seed, s, "seed")?;
        fill_flag(&mut self.verify, s, "verify")?;
        fill_path(&mut self.out, s, "out");
        fill_path(&mut self.diag_dir, s, "diag-dir");
        Ok(())
    }
}

impl BenchArgs {
    fn absorb(&mut self, s: &Settings) -> Result<(), CliError> {
        fill_str(&mut self.sweep, s, "sweep");
        fill_path(&mut self.images, s, "images");
        fill_str(&mut self.data, s, "data");
        fill_str(&mut self.eta, s, "eta");
        fill_parsed(&mut self.seed, s, "seed")?;
        fill_parsed(&mut self.jobs, s, "jobs")?;
        fill_path(&mut self.csv, s, "csv");
        Ok(())
    }
}

impl EtaSweepArgs {
    fn absorb(&mut self, s: &Settings) -> Result<(), CliError> {
        fill_path(&mut self.images, s, "images");
        fill_str(&mut self.data, s, "data");
        fill_parsed(&mut self.seed, s, "seed")?;
        fill_parsed(&mut self.jobs, s, "jobs")?;
        fill_path(&mut self.csv, s, "csv");
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// shared flag parsing

fn parse_ec(flag: Option<&str>) -> Result<EcLevel, CliError> {
    match flag {
        None => Ok(EcLevel::M),
        Some(s) => EcLevel::from_str_loose(s)
            .ok_or_else(|| usage(format!("--ec must be one of L, M, Q, H, got `{}`", s))),
    }
}

fn parse_mask(flag: Option<u8>) -> Result<u8, CliError> {
    match flag {
        None => Ok(0),
        Some(m) if m <= 7 => Ok(m),
        Some(m) => Err(usage(format!("--mask must be 0..=7, got {}", m))),
    }
}

fn parse_eta_scalar(flag: Option<&str>, default: f64) -> Result<f64, CliError> {
    let s = match flag {
        None => return Ok(default),
        Some(s) => s,
    };
    let v: f64 = s
        .parse()
        .map_err(|_| usage(format!("--eta must be a number in [0, 1], got `{}`", s)))?;
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(usage(format!("--eta must lie in [0, 1], got {}", s)));
    }
    Ok(v)
}

fn parse_eta_mode(flag: Option<&str>) -> Result<EtaMode, CliError> {
    match flag {
        Some(s) if s.eq_ignore_ascii_case("map") => Ok(EtaMode::PriorityMap),
        other => Ok(EtaMode::Scalar(parse_eta_scalar(other, 0.9)?)),
    }
}

fn parse_varpi(flag: Option<&str>) -> Result<VarpiPreset, CliError> {
    let s = match flag {
        None => return Ok(VarpiPreset::Gaussian),
        Some(s) => s,
    };
    if let Some(path) = s.strip_prefix("image:") {
        let img = image::open(path)
            .map_err(|e| usage(format!("cannot read weight image {}: {}", path, e)))?;
        return Ok(VarpiPreset::ImageMask(img.to_luma8()));
    }
    match s.to_ascii_lowercase().as_str() {
        "gaussian" => Ok(VarpiPreset::Gaussian),
        "constant" => Ok(VarpiPreset::Constant),
        "random" => Ok(VarpiPreset::Random),
        "center" => Ok(VarpiPreset::CenterHeavy),
        "edge" => Ok(VarpiPreset::GaussianEdge),
        other => Err(usage(format!(
            "--omega-preset must be gaussian, constant, random, center, edge or image:<path>, got `{}`",
            other
        ))),
    }
}

fn validate_version(v: u8) -> Result<u8, CliError> {
    if (1..=10).contains(&v) {
        Ok(v)
    } else {
        Err(usage(format!("--version must be 1..=10, got {}", v)))
    }
}

/// Explicit version if given, otherwise the smallest that fits the
/// payload. No version fitting at all is a capacity problem, not a flag
/// problem.
fn resolve_version(flag: Option<u8>, len: usize, ec: EcLevel) -> Result<u8, CliError> {
    match flag {
        Some(v) => validate_version(v),
        None => QrSpec::min_version(len, ec).ok_or_else(|| {
            domain(format!(
                "payload of {} bytes exceeds version 10 capacity at level {}",
                len, ec
            ))
        }),
    }
}

fn load_rgb(path: &Path) -> Result<RgbImage, CliError> {
    let img = image::open(path)
        .map_err(|e| usage(format!("cannot read image {}: {}", path.display(), e)))?;
    Ok(img.to_rgb8())
}

fn write_fail(path: &Path, e: impl fmt::Display) -> CliError {
    usage(format!("cannot write {}: {}", path.display(), e))
}

/// Sorts pipeline failures into the two exit-code buckets: problems with
/// the inputs are usage errors, problems with the work are domain errors.
fn pipeline_error(e: PipelineError) -> CliError {
    match e {
        PipelineError::EtaOutOfRange(_) | PipelineError::Prep(_) => usage(e.to_string()),
        PipelineError::Capacity { .. }
        | PipelineError::Symbol(_)
        | PipelineError::Adjust(_)
        | PipelineError::Verification(_) => domain(e.to_string()),
    }
}

/// Sizes the worker pool. Without the flag rayon's default (logical
/// cores) stands; a repeat call keeps the pool that already exists.
fn init_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

// ---------------------------------------------------------------------------
// encode

fn run_encode(a: EncodeArgs, json: bool) -> Result<(), CliError> {
    let data = a.data.ok_or_else(|| usage("--data is required"))?;
    let out = a.out.ok_or_else(|| usage("--out is required"))?;
    let ec = parse_ec(a.ec.as_deref())?;
    let mask = parse_mask(a.mask)?;
    let size = a.size.unwrap_or(512);
    if size == 0 {
        return Err(usage("--size must be positive"));
    }
    let version = resolve_version(a.version, data.len(), ec)?;
    let spec = QrSpec::new(version, ec, mask).map_err(|e| usage(e.to_string()))?;
    let matrix =
        encode_symbol(&Payload::new(data.as_bytes()), &spec).map_err(|e| domain(e.to_string()))?;

    let side = matrix.side() + 2 * artqr_core::luminance::QUIET_MODULES;
    let module_px = ((size as f64 / side as f64).round() as usize).max(1);
    let img = matrix.render_gray(module_px);
    img.save(&out).map_err(|e| write_fail(&out, e))?;

    if json {
        println!(
            "{}",
            serde_json::json!({
                "version": version,
                "ec": ec.to_string(),
                "mask": mask,
                "side": matrix.side(),
                "module_px": module_px,
                "payload_bytes": data.len(),
                "out": out,
            })
        );
    } else {
        eprintln!(
            "wrote {}: version {} level {} mask {}, {} modules a side at {} px",
            out.display(),
            version,
            ec,
            mask,
            matrix.side(),
            module_px
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// beautify

fn run_beautify(a: BeautifyArgs, json: bool) -> Result<(), CliError> {
    let image_path = a.image.ok_or_else(|| usage("--image is required"))?;
    let data = a.data.ok_or_else(|| usage("--data is required"))?;
    let out = a.out.ok_or_else(|| usage("--out is required"))?;

    let mut cfg = BeautifyConfig::new(data.into_bytes());
    cfg.ec = parse_ec(a.ec.as_deref())?;
    cfg.mask = parse_mask(a.mask)?;
    cfg.eta = parse_eta_mode(a.eta.as_deref())?;
    cfg.varpi = parse_varpi(a.omega_preset.as_deref())?;
    if let Some(v) = a.version {
        cfg.version = Some(validate_version(v)?);
    }
    if let Some(s2) = a.sigma2 {
        if s2 <= 0.0 || s2.is_nan() {
            return Err(usage("--sigma2 must be positive"));
        }
        cfg.sigma2 = s2;
    }
    if let Some(s3) = a.sigma3 {
        if s3 <= 0.0 || s3.is_nan() {
            return Err(usage("--sigma3 must be positive"));
        }
        cfg.sigma3 = Some(s3);
    }
    if let Some(size) = a.size {
        if size < 64 {
            return Err(usage("--size must be at least 64"));
        }
        cfg.size = size;
    }
    cfg.seed = a.seed.unwrap_or(0);
    cfg.verify = a.verify;

    // flags are settled; only now does the expensive part start
    let source = load_rgb(&image_path)?;
    let result = beautify(&source, &cfg).map_err(pipeline_error)?;

    let framed = result.framed();
    framed.save(&out).map_err(|e| write_fail(&out, e))?;
    if let Some(dir) = &a.diag_dir {
        write_diag_dir(dir, &result)?;
    }

    let d = &result.diagnostics;
    if json {
        println!(
            "{}",
            serde_json::json!({ "out": out, "diagnostics": d })
        );
    } else {
        eprintln!(
            "wrote {}: version {} level {} mask {}, {} px/module; \
             mean success {:.3}, min {:.3}, {} exhausted / {} unresolved modules",
            out.display(),
            d.version,
            d.ec,
            d.mask,
            d.module_size,
            d.mean_success,
            d.min_success,
            d.exhausted_modules,
            d.unresolved_modules
        );
    }
    Ok(())
}

/// Writes the stage outputs next to the diagnostics sidecar: the adjusted
/// symbol, the optimized grays, the recolored result and a success-
/// probability heatmap.
fn write_diag_dir(dir: &Path, result: &BeautifyResult) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| usage(format!("cannot create {}: {}", dir.display(), e)))?;

    let sidecar = dir.join("diagnostics.json");
    let text = serde_json::to_string_pretty(&result.diagnostics).expect("diagnostics serialize");
    std::fs::write(&sidecar, text).map_err(|e| write_fail(&sidecar, e))?;

    let binary = dir.join("binary.png");
    result
        .matrix
        .render_gray(result.module_size)
        .save(&binary)
        .map_err(|e| write_fail(&binary, e))?;

    let gray = dir.join("gray.png");
    result.gray.save(&gray).map_err(|e| write_fail(&gray, e))?;

    let color = dir.join("color.png");
    result.color.save(&color).map_err(|e| write_fail(&color, e))?;

    let heat = dir.join("success.png");
    success_heatmap(
        &result.diagnostics.success_map,
        result.matrix.side(),
        result.module_size,
    )
    .save(&heat)
    .map_err(|e| write_fail(&heat, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// scan

/// Reductions tried after a failed native-resolution scan, as longest-side
/// pixel targets.
const SCAN_LADDER: [u32; 5] = [640, 448, 320, 224, 160];

/// Scans as given, then at progressively smaller camera-like reductions.
/// Large renders defeat the block binarizer — solid features wider than
/// its neighborhood window read as light — so a failure at native
/// resolution retries at sizes that put the module scale back in range.
fn scan_with_ladder(img: &RgbImage) -> ScanReport {
    let mut best = scan_rgb(img, None);
    if best.is_decoded() {
        return best;
    }
    let longest = img.width().max(img.height());
    for target in SCAN_LADDER {
        if target >= longest {
            continue;
        }
        let s = target as f64 / longest as f64;
        let w = ((img.width() as f64 * s).round() as u32).max(1);
        let h = ((img.height() as f64 * s).round() as u32).max(1);
        let small = image::imageops::resize(img, w, h, FilterType::CatmullRom);
        let report = scan_rgb(&small, None);
        if report.is_decoded() {
            return report;
        }
        if progress_rank(&report) > progress_rank(&best) {
            best = report;
        }
    }
    best
}

/// How far a failed scan got, for picking the most informative report.
fn progress_rank(r: &ScanReport) -> u8 {
    match r.outcome {
        Outcome::DetectFailed => 0,
        Outcome::DecodeFailed => 1,
        Outcome::Decoded => 2,
    }
}

fn run_scan(a: ScanArgs, json: bool) -> Result<(), CliError> {
    let img = load_rgb(&a.image)?;
    let report = scan_with_ladder(&img);

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serialize")
        );
    } else if let Some(text) = &report.payload {
        println!("{}", text);
    }

    if report.is_decoded() {
        if !json {
            eprintln!(
                "decoded version {} level {} with {} corrected codewords",
                report.version.unwrap_or(0),
                report.ec.as_deref().unwrap_or("?"),
                report.corrections.unwrap_or(0)
            );
        }
        Ok(())
    } else {
        Err(domain(format!(
            "cannot decode {}: {} ({})",
            a.image.display(),
            report.outcome.as_str(),
            report.reason.as_deref().unwrap_or("no detail")
        )))
    }
}

// ---------------------------------------------------------------------------
// bench and eta-sweep

fn run_bench(a: BenchArgs, json: bool) -> Result<(), CliError> {
    let sweep = a.sweep.clone().ok_or_else(|| usage("--sweep is required"))?;
    init_jobs(a.jobs)?;
    let data = a.data.clone().unwrap_or_else(|| DEFAULT_PAYLOAD.to_string());
    let seed = a.seed.unwrap_or(0);

    if sweep.eq_ignore_ascii_case("eta") {
        return run_eta_curve(a.images.as_deref(), &data, seed, a.csv.as_deref(), json);
    }

    let kind = match sweep.to_ascii_lowercase().as_str() {
        "x" | "rotate_x" => PerturbationKind::RotateX,
        "y" | "rotate_y" => PerturbationKind::RotateY,
        "z" | "rotate_z" => PerturbationKind::RotateZ,
        "brightness" => PerturbationKind::Brightness,
        "scale" => PerturbationKind::Scale,
        "coverage" => PerturbationKind::Coverage,
        other => {
            return Err(usage(format!(
                "--sweep must be x, y, z, brightness, scale, coverage or eta, got `{}`",
                other
            )))
        }
    };

    let eta = parse_eta_scalar(a.eta.as_deref(), 0.9)?;
    let targets = load_targets(a.images.as_deref(), &data, eta, seed)?;
    let mut spec = PerturbationSpec::new(kind);
    spec.seed = seed;
    let result = bench::run_sweep(&targets, &spec);

    deliver_csv(&bench::csv(&result.rows), a.csv.as_deref(), json)?;
    if json {
        let points: Vec<_> = result
            .points
            .iter()
            .map(|p| {
                serde_json::json!({
                    "parameter": p.parameter,
                    "success_rate": p.success_rate,
                    "measurements": p.measurements,
                })
            })
            .collect();
        println!(
            "{}",
            serde_json::json!({ "sweep": kind.name(), "targets": targets.len(), "points": points })
        );
    } else {
        for p in &result.points {
            eprintln!(
                "{} {:>8.2}: {:5.1}% of {}",
                kind.name(),
                p.parameter,
                p.success_rate * 100.0,
                p.measurements
            );
        }
    }
    Ok(())
}

fn run_eta_sweep(a: EtaSweepArgs, json: bool) -> Result<(), CliError> {
    init_jobs(a.jobs)?;
    let data = a.data.clone().unwrap_or_else(|| DEFAULT_PAYLOAD.to_string());
    run_eta_curve(
        a.images.as_deref(),
        &data,
        a.seed.unwrap_or(0),
        a.csv.as_deref(),
        json,
    )
}

/// Generates an output per (image, floor value), scans each under the
/// mild-perturbation fixture and reports success per floor.
fn run_eta_curve(
    dir: Option<&Path>,
    data: &str,
    seed: u64,
    csv: Option<&Path>,
    json: bool,
) -> Result<(), CliError> {
    let images: Vec<(String, RgbImage)> = match dir {
        Some(dir) => read_image_dir(dir)?,
        None => testimg::corpus()
            .into_iter()
            .map(|(id, img)| (id.to_string(), img))
            .collect(),
    };
    let etas: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let result = bench::eta_sweep(&images, data.as_bytes(), &etas, seed).map_err(pipeline_error)?;

    deliver_csv(&bench::csv(&result.rows), csv, json)?;
    if json {
        let curve: Vec<_> = result
            .curve
            .iter()
            .map(|p| serde_json::json!({ "eta": p.eta, "success_rate": p.success_rate }))
            .collect();
        println!(
            "{}",
            serde_json::json!({ "sweep": "eta", "images": images.len(), "curve": curve })
        );
    } else {
        for p in &result.curve {
            eprintln!("eta {:.2}: {:5.1}%", p.eta, p.success_rate * 100.0);
        }
    }
    Ok(())
}

/// CSV rows go to the `--csv` file when given, otherwise to stdout —
/// unless stdout is reserved for the JSON summary.
fn deliver_csv(text: &str, path: Option<&Path>, json: bool) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| write_fail(p, e))?;
            eprintln!("wrote {}", p.display());
        }
        None if !json => print!("{}", text),
        None => {}
    }
    Ok(())
}

/// Sweep targets: either the built-in corpus or every image in a
/// directory, each beautified with the same payload, floor and seed.
fn load_targets(
    dir: Option<&Path>,
    data: &str,
    eta: f64,
    seed: u64,
) -> Result<Vec<BenchTarget>, CliError> {
    match dir {
        None => bench::corpus_targets(data.as_bytes(), eta, seed).map_err(pipeline_error),
        Some(dir) => {
            let images = read_image_dir(dir)?;
            images
                .into_par_iter()
                .map(|(id, img)| {
                    let mut cfg = BeautifyConfig::new(data.as_bytes());
                    cfg.eta = EtaMode::Scalar(eta);
                    cfg.seed = seed;
                    let r = beautify(&img, &cfg).map_err(pipeline_error)?;
                    Ok(BenchTarget {
                        id,
                        image: r.presentation(),
                        truth: r.matrix,
                    })
                })
                .collect()
        }
    }
}

/// PNG/JPEG files of a directory in name order, stems as target ids.
fn read_image_dir(dir: &Path) -> Result<Vec<(String, RgbImage)>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| usage(format!("cannot read {}: {}", dir.display(), e)))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| e.to_ascii_lowercase())
                    .as_deref(),
                Some("png") | Some("jpg") | Some("jpeg")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(usage(format!("no .png/.jpg images in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            Ok((id, load_rgb(p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ec_parsing_accepts_case_and_defaults_to_m() {
        assert_eq!(parse_ec(None).unwrap(), EcLevel::M);
        assert_eq!(parse_ec(Some("h")).unwrap(), EcLevel::H);
        assert_eq!(parse_ec(Some(" Q ")).unwrap(), EcLevel::Q);
        assert!(parse_ec(Some("x")).is_err());
    }

    #[test]
    fn mask_parsing_bounds() {
        assert_eq!(parse_mask(None).unwrap(), 0);
        assert_eq!(parse_mask(Some(7)).unwrap(), 7);
        assert!(parse_mask(Some(8)).is_err());
    }

    #[test]
    fn eta_parsing_checks_the_range() {
        assert_eq!(parse_eta_scalar(None, 0.9).unwrap(), 0.9);
        assert_eq!(parse_eta_scalar(Some("0.25"), 0.9).unwrap(), 0.25);
        assert!(parse_eta_scalar(Some("1.5"), 0.9).is_err());
        assert!(parse_eta_scalar(Some("-0.1"), 0.9).is_err());
        assert!(parse_eta_scalar(Some("NaN"), 0.9).is_err());
        assert!(parse_eta_scalar(Some("abc"), 0.9).is_err());
        assert!(matches!(
            parse_eta_mode(Some("map")).unwrap(),
            EtaMode::PriorityMap
        ));
    }

    #[test]
    fn varpi_presets_by_name() {
        assert!(matches!(parse_varpi(None).unwrap(), VarpiPreset::Gaussian));
        assert!(matches!(
            parse_varpi(Some("constant")).unwrap(),
            VarpiPreset::Constant
        ));
        assert!(matches!(
            parse_varpi(Some("edge")).unwrap(),
            VarpiPreset::GaussianEdge
        ));
        assert!(parse_varpi(Some("nope")).is_err());
        assert!(parse_varpi(Some("image:/no/such/file.png")).is_err());
    }

    #[test]
    fn version_resolution_distinguishes_flag_and_capacity_problems() {
        assert_eq!(resolve_version(Some(4), 10, EcLevel::L).unwrap(), 4);
        assert!(matches!(
            resolve_version(Some(11), 10, EcLevel::L),
            Err(CliError::Usage(_))
        ));
        // version 10 at L holds 271 bytes; 400 cannot fit anywhere
        assert!(matches!(
            resolve_version(None, 400, EcLevel::L),
            Err(CliError::Domain(_))
        ));
    }

    #[test]
    fn usage_and_domain_map_to_exit_codes() {
        assert_eq!(usage("x").exit_code(), 1);
        assert_eq!(domain("x").exit_code(), 2);
    }
}
