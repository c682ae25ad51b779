//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibration::{calibrate, CalibrationRecord, CalibrationSpec};
use crate::cube::{
    classify_cube, encode_ppm, hypothesis_csv, map_csv, read_cube, read_map_csv, synthetic_split_cube,
    write_cube,
};
use crate::detector::{Architecture, Hypothesis};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::sim::{loglik_variation_study, metrics_csv, nominal_matrices, run_experiment, variation_csv, ExperimentSpec};
use crate::structures::StructureClass;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "PCM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "pcm-detect", version, about = "Detect changes of polarimetric covariance structure")]
pub struct Cli {
    /// Worker threads (defaults to $PCM_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Calibrate a detection threshold by Monte Carlo.
    Calibrate(CalibrateArgs),
    /// Estimate Pd / Pc / RMSCE for one architecture.
    Simulate(SimulateArgs),
    /// Classify every window of a datacube.
    Classify(ClassifyArgs),
    /// Render a class-map CSV as a PPM image.
    Render(RenderArgs),
    /// Write a synthetic two-region datacube.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct EmArgs {
    #[arg(long, default_value_t = 10)]
    pub h_max: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
}

impl EmArgs {
    fn config(&self) -> EmConfig {
        EmConfig {
            h_max: self.h_max,
            epsilon: self.epsilon,
            ..EmConfig::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub arch: String,
    /// GIC parameter; defaults depend on the architecture.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub pfa: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub em: EmArgs,
    /// Output JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub arch: String,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_parser = Hypothesis::from_str)]
    pub scenario: Hypothesis,
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Calibration JSON, or a plain number. Not needed for baselines.
    #[arg(long)]
    pub eta: Option<String>,
    #[command(flatten)]
    pub em: EmArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write mean log-likelihood variations per iteration.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long, default_value = "11x11", value_parser = parse_window)]
    pub window: (usize, usize),
    /// Calibration JSON, or a plain number. Not needed for baselines.
    #[arg(long)]
    pub eta: Option<String>,
    /// Defaults to the architecture recorded in the calibration file.
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[command(flatten)]
    pub em: EmArgs,
    /// Class map CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Declared hypothesis per window, as CSV.
    #[arg(long)]
    pub hypotheses: Option<PathBuf>,
    /// Also render the map as PPM.
    #[arg(long)]
    pub ppm: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Class of the left region.
    #[arg(long, default_value_t = 1)]
    pub left: u8,
    /// Class of the right region.
    #[arg(long, default_value_t = 4)]
    pub right: u8,
    /// First column of the right region (defaults to half the width).
    #[arg(long)]
    pub split: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// `.pcube` or `.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in {s:?}"))?;
    if r == 0 || c == 0 {
        return Err(format!("window sides must be positive, got {s:?}"));
    }
    Ok((r, c))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidRho(_)
        | Error::InvalidAlphabet(_)
        | Error::WindowTooLarge { .. }
        | Error::TooFewSamples { .. } => 2,
        _ => 1,
    }
}

fn parse_arch(name: &str, rho: Option<f64>) -> Result<Architecture> {
    Architecture::parse(name, rho).map_err(|e| match e {
        Error::Parse(msg) => Error::Config(msg),
        other => other,
    })
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Render(a) => cmd_render(a),
        Command::Synth(a) => cmd_synth(a),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Reads `--eta` as either a number or a calibration record.
fn load_eta(eta: Option<&str>, arch: Option<&Architecture>) -> Result<(f64, Option<CalibrationRecord>)> {
    match eta {
        None if arch.is_some_and(|a| a.is_baseline()) => Ok((f64::INFINITY, None)),
        None => Err(Error::Config("--eta is required for detectors".into())),
        Some(s) => {
            if let Ok(v) = s.parse::<f64>() {
                return Ok((v, None));
            }
            let text = fs::read_to_string(s)?;
            let record = CalibrationRecord::from_json(&text)?;
            Ok((record.eta, Some(record)))
        }
    }
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let arch = parse_arch(&a.arch, a.rho)?;
    let mut spec = CalibrationSpec::new(a.k, a.pfa, a.trials, a.seed);
    spec.em = a.em.config();
    let record = calibrate(&spec, &arch)?;
    emit(a.out.as_deref(), &(record.to_json()? + "\n"))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let arch = parse_arch(&a.arch, a.rho)?;
    let (eta, record) = load_eta(a.eta.as_deref(), Some(&arch))?;
    if let Some(r) = &record {
        if r.architecture != arch.name() || r.rho != arch.rule().rho {
            return Err(Error::Config(format!(
                "calibration is for {} (rho {}), not {}",
                r.architecture,
                r.rho,
                arch.name()
            )));
        }
    }
    let mut spec = ExperimentSpec::new(a.k, a.scenario, a.trials, a.seed);
    spec.em = a.em.config();
    spec.em.validate()?;
    let report = run_experiment(&arch, eta, &spec)?;
    let text = match a.format {
        ReportFormat::Csv => metrics_csv(std::slice::from_ref(&report)),
        ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    emit(a.out.as_deref(), &text)?;
    if let Some(path) = &a.trace {
        let rows = loglik_variation_study(&[a.k], a.scenario, a.trials, a.seed, &spec.em)?;
        fs::write(path, variation_csv(&rows))?;
    }
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let explicit = a.arch.as_deref().map(|n| parse_arch(n, a.rho)).transpose()?;
    let (eta, record) = load_eta(a.eta.as_deref(), explicit.as_ref())?;
    let arch = match (explicit, &record) {
        (Some(arch), _) => arch,
        (None, Some(r)) => r.architecture()?,
        (None, None) => return Err(Error::Config("--arch is required with a numeric --eta".into())),
    };
    let cfg = a.em.config();
    cfg.validate()?;
    let cube = read_cube(&a.cube)?;
    let (wr, wc) = a.window;
    let map = classify_cube(&cube, &arch, eta, wr, wc, &cfg, false)?;
    emit(a.out.as_deref(), &map_csv(&map))?;
    if let Some(p) = &a.hypotheses {
        fs::write(p, hypothesis_csv(&map))?;
    }
    if let Some(p) = &a.ppm {
        fs::write(p, encode_ppm(map.rows, map.cols, &map.classes))?;
    }
    Ok(())
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let (rows, cols, classes) = read_map_csv(&a.map)?;
    fs::write(&a.out, encode_ppm(rows, cols, &classes))?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let class = |i: u8| {
        StructureClass::from_index(i).ok_or_else(|| Error::Config(format!("class must be 1..=4, got {i}")))
    };
    let (left, right) = (class(a.left)?, class(a.right)?);
    let split = a.split.unwrap_or(a.cols / 2);
    if split > a.cols {
        return Err(Error::Config(format!("split {split} beyond {} columns", a.cols)));
    }
    let m = nominal_matrices();
    let cube = synthetic_split_cube(a.rows, a.cols, split, &m[left.slot()], &m[right.slot()], a.seed)?;
    write_cube(&cube, &a.out)
}
