//! `penbeat` command-line front end.
//!
//! Subcommands wire the library stages end to end: `extract` runs the
//! accelerometer pipeline, `validate` scores it against an ECG-derived beat
//! reference, `sweep` reproduces the cutoff verification loop, and `synth`
//! generates test traces with known beat times. All outputs are
//! deterministic functions of the inputs and flags; failures emit a
//! machine-readable JSON object on stderr and a stable exit code.

// Validation deliberately writes `!(x > 0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use penbeat::beats::{self, detect_beats, summarize};
use penbeat::dsp::{self, apply_filter, design_butterworth, magnitude, FilterMode};
use penbeat::ingest::{parse_accel_csv, parse_reference, rescale};
use penbeat::synth::generate;
use penbeat::tune::{self, default_cutoff_grid, sweep};
use penbeat::validate::{self, align, build_report, OffsetMode};
use penbeat::{
    AlignmentSpec64, BeatSeries64, DetectorSpec64, Error, FilterRealization64, FilterSpec64,
    ReferenceBeats64, Result, ScaleSpec64, Signal64, SweepSpec64, SynthSpec64,
};

use config::ConfigMap;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DETECTION: u8 = 4;
const EXIT_ALIGNMENT: u8 = 5;
const EXIT_SWEEP: u8 = 6;

#[derive(Parser)]
#[command(
    name = "penbeat",
    version,
    about = "Heart-rate recovery from a smart pen's accelerometer trace"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on an accelerometer CSV and emit beats, intervals,
    /// and a heart-rate summary.
    Extract(ExtractArgs),
    /// Run the pipeline and score it against a reference beat file.
    Validate(ValidateArgs),
    /// Score a grid of low-pass cutoffs against the reference.
    Sweep(SweepArgs),
    /// Generate a synthetic trace plus its ground-truth reference file.
    Synth(SynthArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum FilterModeArg {
    ZeroPhase,
    Causal,
}

impl FromStr for FilterModeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero-phase" => Ok(Self::ZeroPhase),
            "causal" => Ok(Self::Causal),
            other => Err(format!("unknown filter mode `{other}`")),
        }
    }
}

impl From<FilterModeArg> for FilterMode {
    fn from(arg: FilterModeArg) -> Self {
        match arg {
            FilterModeArg::ZeroPhase => FilterMode::ZeroPhase,
            FilterModeArg::Causal => FilterMode::Causal,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum OffsetModeArg {
    None,
    MedianShift,
}

impl FromStr for OffsetModeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "median-shift" => Ok(Self::MedianShift),
            other => Err(format!("unknown offset mode `{other}`")),
        }
    }
}

impl From<OffsetModeArg> for OffsetMode {
    fn from(arg: OffsetModeArg) -> Self {
        match arg {
            OffsetModeArg::None => OffsetMode::None,
            OffsetModeArg::MedianShift => OffsetMode::MedianShift,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// key=value file supplying defaults for any long flag
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for output artifacts [default: .]
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Accelerometer CSV with header t,ax,ay,az
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Nominal sample rate of the trace, Hz [default: 100]
    #[arg(long, value_name = "HZ")]
    sample_rate_hz: Option<f64>,
    /// Counts-to-g conversion factor, g per count (required; comes from the
    /// sensor's published specifications)
    #[arg(long, value_name = "G_PER_COUNT")]
    scale: Option<f64>,
    /// Low-pass cutoff, Hz [default: 2]
    #[arg(long, value_name = "HZ")]
    cutoff_hz: Option<f64>,
    /// Butterworth order, 1-8 [default: 4]
    #[arg(long)]
    order: Option<usize>,
    /// Filtering mode [default: zero-phase]
    #[arg(long, value_enum)]
    filter_mode: Option<FilterModeArg>,
    /// Minimum beat spacing, seconds [default: 0.33]
    #[arg(long, value_name = "S")]
    refractory_s: Option<f64>,
    /// Prominence threshold as a multiple of the robust spread [default: 0.5]
    #[arg(long)]
    prominence: Option<f64>,
    /// Minimum half-prominence width of a beat, seconds [default: 0]
    #[arg(long, value_name = "S")]
    min_duration_s: Option<f64>,
    /// Also write stage dumps (magnitude/filtered CSVs) and filter
    /// diagnostics (sections, frequency response)
    #[arg(long)]
    debug_dumps: bool,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Reference beat file (beat_time_s or rr_ms format)
    #[arg(long, value_name = "PATH")]
    reference: Option<PathBuf>,
    /// Matching window, seconds [default: 0.5]
    #[arg(long, value_name = "S")]
    tolerance_s: Option<f64>,
    /// Global offset handling before matching [default: none]
    #[arg(long, value_enum)]
    offset_mode: Option<OffsetModeArg>,
    /// Compare the reference against itself, bypassing the accelerometer
    /// pipeline (sanity check; --input and --scale are not needed)
    #[arg(long)]
    self_compare: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Reference beat file
    #[arg(long, value_name = "PATH")]
    reference: Option<PathBuf>,
    /// Cutoff grid: "start:stop:step" or a comma list [default: 0.5:5.0:0.25]
    #[arg(long, value_name = "GRID")]
    grid: Option<String>,
    /// Matching window, seconds [default: 0.5]
    #[arg(long, value_name = "S")]
    tolerance_s: Option<f64>,
    /// Global offset handling before matching [default: none]
    #[arg(long, value_enum)]
    offset_mode: Option<OffsetModeArg>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Trace length, seconds [default: 300]
    #[arg(long, value_name = "S")]
    duration_s: Option<f64>,
    /// Sample rate, Hz [default: 100]
    #[arg(long, value_name = "HZ")]
    sample_rate_hz: Option<f64>,
    /// Mean heart rate, bpm [default: 72]
    #[arg(long, value_name = "BPM")]
    hr_bpm: Option<f64>,
    /// Std of the Gaussian inter-beat jitter, seconds [default: 0.02]
    #[arg(long, value_name = "S")]
    hrv_std_s: Option<f64>,
    /// Per-beat bump amplitude, g [default: 0.03]
    #[arg(long, value_name = "G")]
    pulse_amplitude_g: Option<f64>,
    /// Per-beat bump width, seconds [default: 0.22]
    #[arg(long, value_name = "S")]
    pulse_width_s: Option<f64>,
    /// Writing-motion RMS amplitude, g [default: 0.04]
    #[arg(long, value_name = "G")]
    motion_amplitude_g: Option<f64>,
    /// Writing-motion band as "low,high" Hz [default: 4,9]
    #[arg(long, value_name = "LO,HI")]
    motion_band: Option<String>,
    /// White sensor noise std, g [default: 0.003]
    #[arg(long, value_name = "G")]
    noise_std_g: Option<f64>,
    /// Generator seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Counts-to-g factor used to quantize the written CSV
    /// [default: 1/4096]
    #[arg(long, value_name = "G_PER_COUNT")]
    scale: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(args) => run_extract(args),
        Command::Validate(args) => run_validate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Synth(args) => run_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            let payload = serde_json::json!({
                "error": {
                    "kind": err.kind(),
                    "message": err.to_string(),
                    "exit_code": code,
                }
            });
            eprintln!("{payload}");
            ExitCode::from(code)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Design(_) | Error::Usage(_) => EXIT_CONFIG,
        Error::Parse { .. } | Error::Structure(_) | Error::Io(_) => EXIT_IO,
        Error::Detection(_) => EXIT_DETECTION,
        Error::Alignment(_) => EXIT_ALIGNMENT,
        Error::Sweep(_) => EXIT_SWEEP,
    }
}

/// Fully resolved pipeline settings.
struct PipelineConfig {
    input: PathBuf,
    sample_rate_hz: f64,
    scale: ScaleSpec64,
    filter: FilterSpec64,
    detector: DetectorSpec64,
    debug_dumps: bool,
}

/// Stage outputs kept around for debug dumps.
struct PipelineRun {
    magnitude: Signal64,
    filtered: Signal64,
    realization: FilterRealization64,
    beats: BeatSeries64,
}

fn resolve_pipeline(args: &PipelineArgs, cfg: &ConfigMap) -> Result<PipelineConfig> {
    let detector_default = DetectorSpec64::default();
    let filter_default = FilterSpec64::default();
    let mode: FilterModeArg = cfg
        .opt(args.filter_mode, "filter-mode")?
        .unwrap_or(FilterModeArg::ZeroPhase);
    Ok(PipelineConfig {
        input: cfg.required(args.input.clone(), "input")?,
        sample_rate_hz: cfg.get_or(args.sample_rate_hz, "sample-rate-hz", 100.0)?,
        scale: ScaleSpec64::new(cfg.required(args.scale, "scale")?)?,
        filter: FilterSpec64 {
            order: cfg.get_or(args.order, "order", filter_default.order)?,
            cutoff_hz: cfg.get_or(args.cutoff_hz, "cutoff-hz", filter_default.cutoff_hz)?,
            mode: mode.into(),
        },
        detector: DetectorSpec64 {
            refractory_s: cfg.get_or(
                args.refractory_s,
                "refractory-s",
                detector_default.refractory_s,
            )?,
            prominence_factor: cfg.get_or(
                args.prominence,
                "prominence",
                detector_default.prominence_factor,
            )?,
            min_duration_s: cfg.get_or(
                args.min_duration_s,
                "min-duration-s",
                detector_default.min_duration_s,
            )?,
        },
        debug_dumps: cfg.flag(args.debug_dumps, "debug-dumps")?,
    })
}

fn resolve_alignment(
    tolerance_s: Option<f64>,
    offset_mode: Option<OffsetModeArg>,
    cfg: &ConfigMap,
) -> Result<AlignmentSpec64> {
    let default = AlignmentSpec64::default();
    let mode: Option<OffsetModeArg> = cfg.opt(offset_mode, "offset-mode")?;
    Ok(AlignmentSpec64 {
        tolerance_s: cfg.get_or(tolerance_s, "tolerance-s", default.tolerance_s)?,
        offset_mode: mode.map(Into::into).unwrap_or(default.offset_mode),
    })
}

fn resolve_out_dir(common: &CommonArgs, cfg: &ConfigMap) -> Result<PathBuf> {
    Ok(cfg
        .opt(common.out_dir.clone(), "out-dir")?
        .unwrap_or_else(|| PathBuf::from(".")))
}

fn run_chain(p: &PipelineConfig) -> Result<PipelineRun> {
    let trace = parse_accel_csv(&p.input, p.sample_rate_hz)?;
    let trace_g = rescale(&trace, &p.scale);
    let mag = magnitude(&trace_g);
    let realization = design_butterworth(&p.filter, p.sample_rate_hz)?;
    let filtered = apply_filter(&mag, &realization, p.filter.mode)?;
    let beats = detect_beats(&filtered, &p.detector)?;
    Ok(PipelineRun {
        magnitude: mag,
        filtered,
        realization,
        beats,
    })
}

fn write_signal_csv(signal: &Signal64, path: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from("t_s,value_g\n");
    for (i, v) in signal.values().iter().enumerate() {
        writeln!(out, "{},{v}", signal.time_at(i)).expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_debug_dumps(run: &PipelineRun, out_dir: &Path) -> Result<()> {
    write_signal_csv(&run.magnitude, &out_dir.join("magnitude.csv"))?;
    write_signal_csv(&run.filtered, &out_dir.join("filtered.csv"))?;
    dsp::write_sections_csv(&run.realization, out_dir.join("sos.csv"))?;
    dsp::write_response_csv(&run.realization, 512, out_dir.join("response.csv"))?;
    Ok(())
}

fn run_extract(args: ExtractArgs) -> Result<()> {
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let p = resolve_pipeline(&args.pipeline, &cfg)?;
    let out_dir = resolve_out_dir(&args.common, &cfg)?;

    let run = run_chain(&p)?;
    let summary = summarize(&run.beats)?;
    let summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");

    fs::create_dir_all(&out_dir)?;
    beats::write_beats_csv(&run.beats, out_dir.join("beats.csv"))?;
    beats::write_intervals_csv(&run.beats, out_dir.join("dt.csv"))?;
    fs::write(out_dir.join("summary.json"), &summary_json)?;
    if p.debug_dumps {
        write_debug_dumps(&run, &out_dir)?;
    }
    println!("{summary_json}");
    Ok(())
}

fn run_validate(args: ValidateArgs) -> Result<()> {
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let out_dir = resolve_out_dir(&args.common, &cfg)?;
    let alignment = resolve_alignment(args.tolerance_s, args.offset_mode, &cfg)?;
    let self_compare = cfg.flag(args.self_compare, "self-compare")?;
    let reference_path: PathBuf = cfg.required(args.reference.clone(), "reference")?;

    let reference: ReferenceBeats64 = parse_reference(&reference_path)?;
    let (candidate, run) = if self_compare {
        (BeatSeries64::from_reference(&reference), None)
    } else {
        let p = resolve_pipeline(&args.pipeline, &cfg)?;
        let run = run_chain(&p)?;
        (run.beats.clone(), Some((run, p.debug_dumps)))
    };

    let report = build_report(&reference, &candidate, &alignment)?;
    let matched = align(&reference, &candidate, &alignment)?;
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");

    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("report.json"), &report_json)?;
    validate::write_pairs_csv(&matched, out_dir.join("pairs.csv"))?;
    validate::write_boxplot_csv(
        &reference.intervals_s(),
        candidate.intervals_s(),
        out_dir.join("boxplot.csv"),
    )?;
    if let Some((run, true)) = run {
        write_debug_dumps(&run, &out_dir)?;
    }
    println!("{report_json}");
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let out_dir = resolve_out_dir(&args.common, &cfg)?;
    let sample_rate_hz = cfg.get_or(args.pipeline.sample_rate_hz, "sample-rate-hz", 100.0)?;

    let grid = match cfg.opt(args.grid.clone(), "grid")? {
        Some(spec) => parse_grid(&spec)?,
        None => default_cutoff_grid(),
    };
    let detector_default = DetectorSpec64::default();
    let spec = SweepSpec64 {
        cutoffs_hz: grid,
        detector: DetectorSpec64 {
            refractory_s: cfg.get_or(
                args.pipeline.refractory_s,
                "refractory-s",
                detector_default.refractory_s,
            )?,
            prominence_factor: cfg.get_or(
                args.pipeline.prominence,
                "prominence",
                detector_default.prominence_factor,
            )?,
            min_duration_s: cfg.get_or(
                args.pipeline.min_duration_s,
                "min-duration-s",
                detector_default.min_duration_s,
            )?,
        },
        alignment: resolve_alignment(args.tolerance_s, args.offset_mode, &cfg)?,
    };
    // Reject a bad grid before touching any input file.
    spec.validate(sample_rate_hz)?;

    let input: PathBuf = cfg.required(args.pipeline.input.clone(), "input")?;
    let scale = ScaleSpec64::new(cfg.required(args.pipeline.scale, "scale")?)?;
    let reference_path: PathBuf = cfg.required(args.reference.clone(), "reference")?;

    let trace = parse_accel_csv(&input, sample_rate_hz)?;
    let mag = magnitude(&rescale(&trace, &scale));
    let reference: ReferenceBeats64 = parse_reference(&reference_path)?;

    let result = sweep(&mag, &reference, &spec)?;
    let result_json = serde_json::to_string_pretty(&result).expect("sweep result serializes");

    fs::create_dir_all(&out_dir)?;
    tune::write_sweep_csv(&result, out_dir.join("sweep.csv"))?;
    fs::write(out_dir.join("sweep.json"), &result_json)?;
    println!(
        "{}",
        serde_json::json!({ "best_cutoff_hz": result.best_cutoff_hz })
    );
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let cfg = ConfigMap::load(args.common.config.as_deref())?;
    let out_dir = resolve_out_dir(&args.common, &cfg)?;
    let d = SynthSpec64::default();

    let band = match cfg.opt(args.motion_band.clone(), "motion-band")? {
        Some(raw) => parse_band(&raw)?,
        None => d.writing_motion_band_hz,
    };
    let spec = SynthSpec64 {
        duration_s: cfg.get_or(args.duration_s, "duration-s", d.duration_s)?,
        sample_rate_hz: cfg.get_or(args.sample_rate_hz, "sample-rate-hz", d.sample_rate_hz)?,
        mean_hr_bpm: cfg.get_or(args.hr_bpm, "hr-bpm", d.mean_hr_bpm)?,
        hrv_std_s: cfg.get_or(args.hrv_std_s, "hrv-std-s", d.hrv_std_s)?,
        pulse_amplitude_g: cfg.get_or(
            args.pulse_amplitude_g,
            "pulse-amplitude-g",
            d.pulse_amplitude_g,
        )?,
        pulse_width_s: cfg.get_or(args.pulse_width_s, "pulse-width-s", d.pulse_width_s)?,
        writing_motion_amplitude_g: cfg.get_or(
            args.motion_amplitude_g,
            "motion-amplitude-g",
            d.writing_motion_amplitude_g,
        )?,
        writing_motion_band_hz: band,
        noise_std_g: cfg.get_or(args.noise_std_g, "noise-std-g", d.noise_std_g)?,
        seed: cfg.get_or(args.seed, "seed", 0)?,
    };
    let scale = ScaleSpec64::new(cfg.get_or(args.scale, "scale", 1.0 / 4096.0)?)?;

    let st = generate(&spec)?;
    fs::create_dir_all(&out_dir)?;
    let accel_path = out_dir.join("accel.csv");
    let reference_path = out_dir.join("reference.csv");
    st.write_dataset(&scale, &accel_path, &reference_path)?;
    println!(
        "{}",
        serde_json::json!({
            "accel_csv": accel_path,
            "reference_csv": reference_path,
            "beat_count": st.truth_beats_s().len(),
            "seed": spec.seed,
        })
    );
    Ok(())
}

/// Parses "start:stop:step" (inclusive stop, within half a step) or a comma
/// list of cutoffs.
fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Config(m);
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid `{raw}`: expected start:stop:step")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| bad(format!("grid `{raw}`: cannot parse `{s}`")))
        };
        let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad(format!(
                "grid `{raw}`: need stop >= start and step > 0"
            )));
        }
        let count = ((stop - start) / step + 0.5).floor() as usize + 1;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| bad(format!("grid `{raw}`: cannot parse `{s}`")))
            })
            .collect()
    }
}

fn parse_band(raw: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "motion band `{raw}`: expected low,high"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::Config(format!("motion band `{raw}`: cannot parse `{s}`")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}
