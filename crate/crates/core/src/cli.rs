//! `specsmooth` command-line front end: `smooth`, `synth` and `compare`.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::{convolve_smooth, Boundary, KernelName};
use crate::basis::PhantomMode;
use crate::error::Error;
use crate::metrics::{measure_peak, rmse};
use crate::refine::{format_decimal, smooth, write_trace_csv, RefinementConfig, SelectionRule};
use crate::spectrum::{load_smoothed, load_spectrum, save_spectrum, ChannelRange, Spectrum, SpectrumFormat};
use crate::synth::{self, Background, PeakSpec};

pub const SEED_ENV: &str = "SPECSMOOTH_SEED";
pub const COMPARE_HEADER: &str = "method,rmse_vs_truth,centroid_shift,fwhm_ratio,runtime_ms";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "specsmooth", version, about = "B-spline smoothing of pulse-height spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth a spectrum with the B-spline refinement or a weighted-mean baseline.
    Smooth(SmoothArgs),
    /// Generate a synthetic truth/noisy spectrum pair.
    Synth(SynthArgs),
    /// Score smoothed spectra against a known truth.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bspline,
    Wavg3,
    Wavg5,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Method as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Phantom,
    Strict,
}

impl From<BasisArg> for PhantomMode {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Phantom => PhantomMode::PhantomExtended,
            BasisArg::Strict => PhantomMode::PaperStrict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Plain,
    Csv,
}

impl From<FormatArg> for SpectrumFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Plain => SpectrumFormat::Plain,
            FormatArg::Csv => SpectrumFormat::Csv,
        }
    }
}

/// Inclusive channel-label range written `A:B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelSpan {
    pub first: i64,
    pub last: i64,
}

impl FromStr for ChannelSpan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
        let first = a.trim().parse().map_err(|_| format!("bad channel {a:?}"))?;
        let last = b.trim().parse().map_err(|_| format!("bad channel {b:?}"))?;
        Ok(Self { first, last })
    }
}

impl fmt::Display for ChannelSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.first, self.last)
    }
}

impl ChannelSpan {
    fn resolve(self, spectrum: &Spectrum) -> CliResult<ChannelRange> {
        Ok(spectrum.range_for_channels(self.first, self.last)?)
    }
}

fn parse_rule(s: &str) -> Result<SelectionRule, String> {
    s.parse::<SelectionRule>().map_err(|e| e.to_string())
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse::<Boundary>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Refinement trace CSV (bspline only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Input format; defaults to csv for `.csv` files and plain otherwise.
    #[arg(long, value_enum)]
    input_format: Option<FormatArg>,
    /// key=value file supplying defaults for the options below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Channel range A:B to fit (channel labels, inclusive).
    #[arg(long)]
    range: Option<ChannelSpan>,
    /// global-min, first-local-min or fixed:K
    #[arg(long = "select", value_parser = parse_rule)]
    select: Option<SelectionRule>,
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    #[arg(long)]
    min_spacing: Option<f64>,
    #[arg(long)]
    max_levels: Option<u32>,
    /// Passes of the weighted-mean kernel (wavg3/wavg5 only).
    #[arg(long)]
    iterations: Option<u32>,
    /// mirror or clamp
    #[arg(long, value_parser = parse_boundary)]
    boundary: Option<Boundary>,
    /// Replace negative smoothed counts by 0 in the written output.
    #[arg(long)]
    clamp_nonnegative: bool,
    /// Also write a gnuplot script plotting input and output.
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

/// Fully resolved `smooth` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub range: Option<ChannelSpan>,
    pub rule: SelectionRule,
    pub mode: PhantomMode,
    pub min_spacing: f64,
    pub max_levels: u32,
    pub iterations: u32,
    pub boundary: Boundary,
    pub clamp_nonnegative: bool,
    pub input: PathBuf,
    pub input_format: SpectrumFormat,
    pub output: PathBuf,
    pub trace: Option<PathBuf>,
    pub gnuplot: Option<PathBuf>,
}

impl RunConfig {
    pub fn refinement(&self) -> RefinementConfig {
        RefinementConfig {
            mode: self.mode,
            min_spacing: self.min_spacing,
            max_levels: self.max_levels,
            rule: self.rule,
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.iterations < 1 {
            return Err(CliError::Usage("--iterations must be at least 1".into()));
        }
        if !(self.min_spacing.is_finite() && self.min_spacing >= 1.0) {
            return Err(CliError::Usage("--min-spacing must be at least 1.0".into()));
        }
        if self.max_levels < 2 {
            return Err(CliError::Usage("--max-levels must be at least 2".into()));
        }
        if self.trace.is_some() && self.method != Method::Bspline {
            return Err(CliError::Usage("--trace applies to --method bspline only".into()));
        }
        let mut paths = vec![&self.input, &self.output];
        paths.extend(self.trace.iter());
        paths.extend(self.gnuplot.iter());
        for (i, p) in paths.iter().enumerate() {
            if paths[..i].contains(p) {
                return Err(CliError::Usage(format!("path {} is used twice", p.display())));
            }
        }
        Ok(())
    }
}

/// Parses a `key = value` config file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn config_value<T>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> CliResult<Option<T>> {
    map.remove(key)
        .map(|v| parse(&v).map_err(|e| CliError::Usage(format!("config key {key}: {e}"))))
        .transpose()
}

fn parse_with<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn resolve_smooth(args: SmoothArgs) -> CliResult<RunConfig> {
    let mut file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let basis = |s: &str| <BasisArg as ValueEnum>::from_str(s, false);
    let bool_value = |s: &str| parse_with::<bool>(s);

    let cfg_method = config_value(&mut file, "method", parse_with::<Method>)?;
    let cfg_range = config_value(&mut file, "range", parse_with::<ChannelSpan>)?;
    let cfg_rule = config_value(&mut file, "select", parse_rule)?;
    let cfg_basis = config_value(&mut file, "basis", basis)?;
    let cfg_min_spacing = config_value(&mut file, "min_spacing", parse_with::<f64>)?;
    let cfg_max_levels = config_value(&mut file, "max_levels", parse_with::<u32>)?;
    let cfg_iterations = config_value(&mut file, "iterations", parse_with::<u32>)?;
    let cfg_boundary = config_value(&mut file, "boundary", parse_boundary)?;
    let cfg_clamp = config_value(&mut file, "clamp_nonnegative", bool_value)?;
    if let Some(key) = file.keys().next() {
        return Err(CliError::Usage(format!("unknown config key {key:?}")));
    }

    let defaults = RefinementConfig::default();
    let input_format = args
        .input_format
        .map(SpectrumFormat::from)
        .unwrap_or_else(|| SpectrumFormat::from_path(&args.input));
    let config = RunConfig {
        method: args.method.or(cfg_method).unwrap_or(Method::Bspline),
        range: args.range.or(cfg_range),
        rule: args.select.or(cfg_rule).unwrap_or(defaults.rule),
        mode: args.basis.or(cfg_basis).map(PhantomMode::from).unwrap_or(defaults.mode),
        min_spacing: args.min_spacing.or(cfg_min_spacing).unwrap_or(defaults.min_spacing),
        max_levels: args.max_levels.or(cfg_max_levels).unwrap_or(defaults.max_levels),
        iterations: args.iterations.or(cfg_iterations).unwrap_or(1),
        boundary: args.boundary.or(cfg_boundary).unwrap_or_default(),
        clamp_nonnegative: args.clamp_nonnegative || cfg_clamp.unwrap_or(false),
        input: args.input,
        input_format,
        output: args.output,
        trace: args.trace,
        gnuplot: args.gnuplot,
    };
    config.validate()?;
    Ok(config)
}

/// Smooths the spectrum with `method`; returns the smoothed spectrum and,
/// for bspline, the trace.
fn apply_method(
    spectrum: &Spectrum,
    range: ChannelRange,
    method: Method,
    refinement: &RefinementConfig,
    iterations: u32,
    boundary: Boundary,
) -> CliResult<(Spectrum, Option<crate::refine::RefinementTrace>)> {
    match method {
        Method::Bspline => {
            let (out, trace) = smooth(spectrum, range, refinement)?;
            Ok((out, Some(trace)))
        }
        Method::Wavg3 | Method::Wavg5 => {
            let name = if method == Method::Wavg3 {
                KernelName::Wavg3
            } else {
                KernelName::Wavg5
            };
            let smoothed = convolve_smooth(spectrum, &name.kernel(), iterations, boundary)?;
            // Channels outside the range pass through, as for bspline.
            let mut counts = spectrum.counts().to_vec();
            counts[range.channels()].copy_from_slice(&smoothed.counts()[range.channels()]);
            let out = Spectrum::from_smoothed(counts)?.with_channel_offset(spectrum.channel_offset());
            Ok((out, None))
        }
    }
}

pub fn cmd_smooth(config: &RunConfig, stdout: &mut impl Write) -> CliResult<()> {
    let spectrum = load_spectrum(&config.input, config.input_format)?;
    let range = match config.range {
        Some(span) => span.resolve(&spectrum)?,
        None => spectrum.full_range(),
    };
    let (mut out, trace) = apply_method(
        &spectrum,
        range,
        config.method,
        &config.refinement(),
        config.iterations,
        config.boundary,
    )?;
    if config.clamp_nonnegative {
        let clamped = out.counts().iter().map(|v| v.max(0.0)).collect();
        out = Spectrum::from_smoothed(clamped)?.with_channel_offset(out.channel_offset());
    }
    save_spectrum(&out, &config.output)?;

    if let Some(trace) = &trace {
        if let Some(path) = &config.trace {
            let file = File::create(path).map_err(|e| io_failure(path, e))?;
            let mut w = BufWriter::new(file);
            write_trace_csv(trace, &mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_failure(path, e))?;
        }
        let record = trace.selected_record().expect("smooth selects a level");
        writeln!(
            stdout,
            "selected level {} ({} knots, spacing {}), epsilon {}",
            record.level,
            record.knot_count,
            format_decimal(record.spacing),
            record.epsilon.map(format_decimal).unwrap_or_default()
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    if let Some(path) = &config.gnuplot {
        let script = gnuplot_script(config);
        fs::write(path, script).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn gnuplot_script(config: &RunConfig) -> String {
    let input = match config.input_format {
        SpectrumFormat::Csv => format!("'{}' every ::1 using 1:2", config.input.display()),
        SpectrumFormat::Plain => format!("'{}' using ($0):1", config.input.display()),
    };
    let method = match config.method {
        Method::Bspline => "bspline",
        Method::Wavg3 => "wavg3",
        Method::Wavg5 => "wavg5",
    };
    format!(
        "set datafile separator ','\n\
         set xlabel 'channel'\n\
         set ylabel 'counts'\n\
         plot {input} with points pt 7 ps 0.3 title 'input', \\\n     \
         '{}' every ::1 using 1:2 with lines lw 2 title '{method}'\n\
         pause mouse close\n",
        config.output.display()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Benchmark,
    None,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = synth::BENCHMARK_CHANNELS, value_parser = parse_channels)]
    channels: usize,
    /// Overridden by the SPECSMOOTH_SEED environment variable when set.
    #[arg(long, default_value_t = synth::BENCHMARK_SEED)]
    seed: u64,
    /// Peak/background preset; `benchmark` unless --peak or --background is given.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// centroid,amplitude,sigma (repeatable)
    #[arg(long = "peak", value_parser = parse_peak)]
    peaks: Vec<PeakSpec>,
    /// constant:L, linear:I,S or exponential:A,D
    #[arg(long, value_parser = parse_background)]
    background: Option<Background>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_channels(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|_| format!("{s:?} is not a channel count"))?;
    if n < crate::spectrum::MIN_CHANNELS {
        return Err(format!(
            "at least {} channels are required",
            crate::spectrum::MIN_CHANNELS
        ));
    }
    Ok(n)
}

fn numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("{p:?} is not a number")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

pub fn parse_peak(s: &str) -> Result<PeakSpec, String> {
    let v = numbers(s, 3)?;
    Ok(PeakSpec::new(v[0], v[1], v[2]))
}

pub fn parse_background(s: &str) -> Result<Background, String> {
    let (kind, params) = s
        .split_once(':')
        .ok_or_else(|| format!("expected KIND:PARAMS, got {s:?}"))?;
    match kind {
        "constant" => Ok(Background::Constant {
            level: numbers(params, 1)?[0],
        }),
        "linear" => {
            let v = numbers(params, 2)?;
            Ok(Background::Linear {
                intercept: v[0],
                slope: v[1],
            })
        }
        "exponential" => {
            let v = numbers(params, 2)?;
            Ok(Background::Exponential {
                amplitude: v[0],
                decay: v[1],
            })
        }
        other => Err(format!("unknown background kind {other:?}")),
    }
}

fn cmd_synth(args: SynthArgs, seed_env: Option<String>, stdout: &mut impl Write) -> CliResult<()> {
    let seed = match seed_env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
        None => args.seed,
    };
    let custom = !args.peaks.is_empty() || args.background.is_some();
    let (peaks, background) = match (args.preset, custom) {
        (Some(Preset::Benchmark), true) => {
            return Err(CliError::Usage(
                "--preset benchmark cannot be combined with --peak/--background".into(),
            ))
        }
        (Some(Preset::Benchmark), false) | (None, false) => (synth::benchmark_peaks(), synth::benchmark_background()),
        (Some(Preset::None), _) | (None, true) => (
            args.peaks,
            args.background.unwrap_or(Background::Constant { level: 0.0 }),
        ),
    };
    let generated = synth::generate(args.channels, &peaks, background, seed)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| io_failure(&args.out_dir, e))?;
    let truth_path = args.out_dir.join("truth.csv");
    let noisy_path = args.out_dir.join("noisy.csv");
    let sidecar_path = args.out_dir.join("synth.json");
    save_spectrum(&generated.truth, &truth_path)?;
    save_spectrum(&generated.noisy, &noisy_path)?;
    let mut json = serde_json::to_string_pretty(&generated.sidecar()).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    fs::write(&sidecar_path, json).map_err(|e| io_failure(&sidecar_path, e))?;
    writeln!(
        stdout,
        "wrote {}, {}, {} (seed {seed})",
        truth_path.display(),
        noisy_path.display(),
        sidecar_path.display()
    )
    .map_err(|e| CliError::Runtime(e.to_string()))
}

/// A smoothed spectrum named for the metrics table: `NAME=PATH` or `PATH`.
#[derive(Debug, Clone, PartialEq)]
struct NamedPath {
    name: String,
    path: PathBuf,
}

impl FromStr for NamedPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once('=') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(Self {
                name: name.to_string(),
                path: PathBuf::from(path),
            }),
            Some(_) => Err(format!("expected NAME=PATH, got {s:?}")),
            None => {
                let path = PathBuf::from(s);
                let name = path
                    .file_stem()
                    .and_then(|n| n.to_str())
                    .ok_or_else(|| format!("cannot derive a name from {s:?}"))?
                    .to_string();
                Ok(Self { name, path })
            }
        }
    }
}

/// `METHOD` or `METHOD:ITERATIONS`, run in-process and timed.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RunSpec {
    method: Method,
    iterations: u32,
}

impl FromStr for RunSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (m, iters) = match s.split_once(':') {
            Some((m, i)) => (m, i.parse::<u32>().map_err(|_| format!("bad iteration count {i:?}"))?),
            None => (s, 1),
        };
        let method: Method = m.parse()?;
        if iters == 0 {
            return Err("iterations must be at least 1".into());
        }
        Ok(Self {
            method,
            iterations: iters,
        })
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.method {
            Method::Bspline => f.write_str("bspline"),
            Method::Wavg3 => write!(f, "wavg3x{}", self.iterations),
            Method::Wavg5 => write!(f, "wavg5x{}", self.iterations),
        }
    }
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    truth: PathBuf,
    /// Smoothed spectra as NAME=PATH or PATH (name taken from the file stem).
    smoothed: Vec<NamedPath>,
    /// Noisy input for --run.
    #[arg(long)]
    noisy: Option<PathBuf>,
    /// Smooth --noisy in-process and time it: bspline, wavg3:ITER or wavg5:ITER.
    #[arg(long = "run", requires = "noisy")]
    runs: Vec<RunSpec>,
    /// Peak window A:B in channel labels (repeatable).
    #[arg(long = "window")]
    windows: Vec<ChannelSpan>,
    /// Channel range A:B for rmse_vs_truth (default: all channels).
    #[arg(long)]
    range: Option<ChannelSpan>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub method: String,
    pub rmse_vs_truth: f64,
    pub centroid_shift: Option<f64>,
    pub fwhm_ratio: Option<f64>,
    pub runtime_ms: Option<f64>,
}

impl fmt::Display for CompareRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        write!(
            f,
            "{},{},{},{},{}",
            self.method,
            self.rmse_vs_truth,
            opt(self.centroid_shift),
            opt(self.fwhm_ratio),
            self.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default()
        )
    }
}

/// Metrics rows for one smoothed spectrum, one per window (or a single row
/// without peak columns when no window is given).
pub fn compare_rows(
    name: &str,
    truth: &Spectrum,
    smoothed: &Spectrum,
    range: ChannelRange,
    windows: &[ChannelRange],
    runtime_ms: Option<f64>,
) -> crate::error::Result<Vec<CompareRow>> {
    let error = rmse(truth, smoothed, range)?;
    if windows.is_empty() {
        return Ok(vec![CompareRow {
            method: name.to_string(),
            rmse_vs_truth: error,
            centroid_shift: None,
            fwhm_ratio: None,
            runtime_ms,
        }]);
    }
    windows
        .iter()
        .map(|&w| {
            let t = measure_peak(truth, w)?;
            let s = measure_peak(smoothed, w)?;
            let method = if windows.len() == 1 {
                name.to_string()
            } else {
                format!(
                    "{name}@{}:{}",
                    w.start() as i64 + truth.channel_offset(),
                    w.end() as i64 + truth.channel_offset()
                )
            };
            Ok(CompareRow {
                method,
                rmse_vs_truth: error,
                centroid_shift: Some(s.centroid - t.centroid),
                fwhm_ratio: Some(s.fwhm / t.fwhm),
                runtime_ms,
            })
        })
        .collect()
}

fn cmd_compare(args: CompareArgs, stdout: &mut impl Write) -> CliResult<()> {
    if args.smoothed.is_empty() && args.runs.is_empty() {
        return Err(CliError::Usage(
            "compare needs at least one smoothed spectrum or --run method".into(),
        ));
    }
    let truth = load_smoothed(&args.truth, SpectrumFormat::from_path(&args.truth))?;
    let range = match args.range {
        Some(span) => span.resolve(&truth)?,
        None => ChannelRange::new(0, truth.len() - 1)?,
    };
    let windows: Vec<ChannelRange> = args
        .windows
        .iter()
        .map(|w| w.resolve(&truth))
        .collect::<CliResult<_>>()?;

    let mut rows = Vec::new();
    for entry in &args.smoothed {
        let smoothed = load_smoothed(&entry.path, SpectrumFormat::from_path(&entry.path))?;
        if smoothed.channel_offset() != truth.channel_offset() {
            return Err(CliError::Runtime(format!(
                "{} starts at channel {}, truth at {}",
                entry.path.display(),
                smoothed.channel_offset(),
                truth.channel_offset()
            )));
        }
        rows.extend(compare_rows(&entry.name, &truth, &smoothed, range, &windows, None)?);
    }
    if let Some(noisy_path) = &args.noisy {
        let noisy = load_spectrum(noisy_path, SpectrumFormat::from_path(noisy_path))?;
        let full = noisy.full_range();
        for run in &args.runs {
            let start = Instant::now();
            let (smoothed, _) = apply_method(
                &noisy,
                full,
                run.method,
                &RefinementConfig::default(),
                run.iterations,
                Boundary::default(),
            )?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            rows.extend(compare_rows(
                &run.to_string(),
                &truth,
                &smoothed,
                range,
                &windows,
                Some(elapsed),
            )?);
        }
    }

    let mut table = String::from(COMPARE_HEADER);
    table.push('\n');
    for row in &rows {
        table.push_str(&row.to_string());
        table.push('\n');
    }
    match &args.output {
        Some(path) => fs::write(path, table).map_err(|e| io_failure(path, e)),
        None => stdout
            .write_all(table.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match cli.command {
        Command::Smooth(args) => resolve_smooth(args).and_then(|config| cmd_smooth(&config, stdout)),
        Command::Synth(args) => cmd_synth(args, std::env::var(SEED_ENV).ok(), stdout),
        Command::Compare(args) => cmd_compare(args, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
