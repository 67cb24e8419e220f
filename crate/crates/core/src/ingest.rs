//! File ingestion: accelerometer traces, reference beats, and rescaling.
//!
//! Accelerometer CSV format: header `t,ax,ay,az`, `t` in decimal seconds,
//! axes in sensor counts, UTF-8, LF or CRLF line endings.
//!
//! Reference file format, one of:
//! * header `beat_time_s`, one beat timestamp (seconds) per line;
//! * line 1 `# start=<seconds>`, line 2 header `rr_ms`, one inter-beat
//!   interval (milliseconds) per line. Beat times are the cumulative sum
//!   from the start offset.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::real::Real;

/// Allowed deviation of successive timestamp gaps from the nominal period,
/// as a fraction of that period.
pub const DEFAULT_JITTER_TOLERANCE: f64 = 0.1;

/// Plausibility gate on reference inter-beat intervals, seconds (exclusive).
pub const DEFAULT_RR_BOUNDS_S: (f64, f64) = (0.2, 3.0);

/// A uniformly sampled triaxial accelerometer record.
///
/// Axis units are whatever the source file held (sensor counts before
/// [`rescale`], g after). Timestamps are strictly increasing and their gaps
/// stay within the jitter tolerance of the nominal period; traces that
/// violate this are rejected rather than resampled.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrace<F> {
    sample_rate_hz: F,
    t: Vec<F>,
    ax: Vec<F>,
    ay: Vec<F>,
    az: Vec<F>,
}

impl<F: Real> RawTrace<F> {
    /// Builds a trace with the default jitter tolerance.
    pub fn new(sample_rate_hz: F, t: Vec<F>, ax: Vec<F>, ay: Vec<F>, az: Vec<F>) -> Result<Self> {
        Self::with_jitter_tolerance(
            sample_rate_hz,
            t,
            ax,
            ay,
            az,
            F::of(DEFAULT_JITTER_TOLERANCE),
        )
    }

    /// Builds a trace, allowing gaps to deviate from the nominal period by
    /// at most `jitter_fraction` of that period.
    pub fn with_jitter_tolerance(
        sample_rate_hz: F,
        t: Vec<F>,
        ax: Vec<F>,
        ay: Vec<F>,
        az: Vec<F>,
        jitter_fraction: F,
    ) -> Result<Self> {
        if !(sample_rate_hz > F::zero()) || !sample_rate_hz.is_finite() {
            return Err(Error::structure("sample rate must be positive and finite"));
        }
        if t.is_empty() {
            return Err(Error::structure("empty trace"));
        }
        if t.len() != ax.len() || t.len() != ay.len() || t.len() != az.len() {
            return Err(Error::structure("axis columns have mismatched lengths"));
        }
        for axis in [&t, &ax, &ay, &az] {
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::structure("non-finite value in trace"));
            }
        }
        let period = F::one() / sample_rate_hz;
        let tol = jitter_fraction * period;
        for i in 1..t.len() {
            let gap = t[i] - t[i - 1];
            if !(gap > F::zero()) {
                return Err(Error::structure("non-monotone timestamps"));
            }
            // gaps must stay strictly below the jitter tolerance
            if !((gap - period).abs() < tol) {
                return Err(Error::structure(format!(
                    "timestamp gap {gap} deviates from nominal period {period} by at least {tol}"
                )));
            }
        }
        Ok(Self {
            sample_rate_hz,
            t,
            ax,
            ay,
            az,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn sample_rate_hz(&self) -> F {
        self.sample_rate_hz
    }

    pub fn times_s(&self) -> &[F] {
        &self.t
    }

    pub fn ax(&self) -> &[F] {
        &self.ax
    }

    pub fn ay(&self) -> &[F] {
        &self.ay
    }

    pub fn az(&self) -> &[F] {
        &self.az
    }
}

/// Conversion factor from raw sensor counts to g.
///
/// The factor comes from the sensor's published specifications and is a
/// required configuration input with no default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSpec<F> {
    counts_to_g: F,
}

impl<F: Real> ScaleSpec<F> {
    pub fn new(counts_to_g: F) -> Result<Self> {
        if !(counts_to_g > F::zero()) || !counts_to_g.is_finite() {
            return Err(Error::config(
                "counts-to-g factor must be positive and finite",
            ));
        }
        Ok(Self { counts_to_g })
    }

    pub fn counts_to_g(&self) -> F {
        self.counts_to_g
    }
}

/// Ordered beat timestamps from the ECG reference device.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBeats<F> {
    beat_times_s: Vec<F>,
}

impl<F: Real> ReferenceBeats<F> {
    /// Builds from beat timestamps with the default interval plausibility gate.
    pub fn from_beat_times(beat_times_s: Vec<F>) -> Result<Self> {
        let (lo, hi) = DEFAULT_RR_BOUNDS_S;
        Self::from_beat_times_with_bounds(beat_times_s, (F::of(lo), F::of(hi)))
    }

    /// Builds from beat timestamps, requiring every inter-beat interval to lie
    /// strictly inside `rr_bounds_s`.
    pub fn from_beat_times_with_bounds(beat_times_s: Vec<F>, rr_bounds_s: (F, F)) -> Result<Self> {
        if beat_times_s.is_empty() {
            return Err(Error::structure("empty beat reference"));
        }
        if beat_times_s.iter().any(|v| !v.is_finite()) {
            return Err(Error::structure("non-finite beat timestamp"));
        }
        let (lo, hi) = rr_bounds_s;
        for w in beat_times_s.windows(2) {
            let rr = w[1] - w[0];
            if !(rr > F::zero()) {
                return Err(Error::structure("non-monotone timestamps"));
            }
            if rr <= lo || rr >= hi {
                return Err(Error::structure(format!(
                    "inter-beat interval {rr} s outside plausibility bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(Self { beat_times_s })
    }

    /// Builds from inter-beat intervals (seconds), summed from `start_s`.
    /// The first beat sits at `start_s`; each interval appends one beat.
    pub fn from_rr_intervals(start_s: F, rr_s: &[F]) -> Result<Self> {
        if !start_s.is_finite() {
            return Err(Error::structure("non-finite start offset"));
        }
        let mut beats = Vec::with_capacity(rr_s.len() + 1);
        let mut t = start_s;
        beats.push(t);
        for &rr in rr_s {
            if !(rr > F::zero()) || !rr.is_finite() {
                return Err(Error::structure(format!("non-positive interval {rr}")));
            }
            t += rr;
            beats.push(t);
        }
        Self::from_beat_times(beats)
    }

    pub fn len(&self) -> usize {
        self.beat_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn beat_times_s(&self) -> &[F] {
        &self.beat_times_s
    }

    /// Inter-beat intervals (length `len() - 1`).
    pub fn intervals_s(&self) -> Vec<F> {
        self.beat_times_s.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Parses an accelerometer CSV (`t,ax,ay,az` header) at the given nominal
/// sample rate. Row order is preserved.
pub fn parse_accel_csv<F: Real>(path: impl AsRef<Path>, sample_rate_hz: F) -> Result<RawTrace<F>> {
    let content = fs::read_to_string(path)?;
    if content.trim().is_empty() {
        return Err(Error::structure("empty file"));
    }
    let mut lines = numbered_lines(&content);

    let (header_no, header) = lines.next().ok_or_else(|| Error::structure("empty file"))?;
    if header.trim() != "t,ax,ay,az" {
        return Err(Error::parse(header_no, "expected header `t,ax,ay,az`"));
    }

    let mut t = Vec::new();
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut az = Vec::new();
    for (no, line) in lines {
        let mut fields = line.split(',');
        let mut next_field = |name: &str| -> Result<F> {
            let raw = fields
                .next()
                .ok_or_else(|| Error::parse(no, format!("missing field `{name}`")))?
                .trim();
            parse_number(raw, no, name)
        };
        t.push(next_field("t")?);
        ax.push(next_field("ax")?);
        ay.push(next_field("ay")?);
        az.push(next_field("az")?);
        if fields.next().is_some() {
            return Err(Error::parse(no, "expected 4 fields"));
        }
    }

    RawTrace::new(sample_rate_hz, t, ax, ay, az)
}

/// Parses a reference beat file in either timestamp or RR-interval form.
pub fn parse_reference<F: Real>(path: impl AsRef<Path>) -> Result<ReferenceBeats<F>> {
    let content = fs::read_to_string(path)?;
    if content.trim().is_empty() {
        return Err(Error::structure("empty file"));
    }
    let mut lines = numbered_lines(&content);
    let (first_no, first) = lines.next().ok_or_else(|| Error::structure("empty file"))?;
    let first = first.trim();

    if let Some(rest) = first.strip_prefix('#') {
        // RR mode: `# start=<seconds>` then an `rr_ms` column.
        let start_s: F = match rest.trim().strip_prefix("start=") {
            Some(v) => parse_number(v.trim(), first_no, "start")?,
            None => return Err(Error::parse(first_no, "expected `# start=<seconds>`")),
        };
        let (hdr_no, hdr) = lines
            .next()
            .ok_or_else(|| Error::parse(first_no, "missing `rr_ms` header after start line"))?;
        if hdr.trim() != "rr_ms" {
            return Err(Error::parse(hdr_no, "expected header `rr_ms`"));
        }
        let ms_to_s = F::of(1e-3);
        let mut rr = Vec::new();
        for (no, line) in lines {
            rr.push(parse_number::<F>(line.trim(), no, "rr_ms")? * ms_to_s);
        }
        ReferenceBeats::from_rr_intervals(start_s, &rr)
    } else if first == "beat_time_s" {
        let mut beats = Vec::new();
        for (no, line) in lines {
            beats.push(parse_number::<F>(line.trim(), no, "beat_time_s")?);
        }
        ReferenceBeats::from_beat_times(beats)
    } else {
        Err(Error::parse(
            first_no,
            "expected header `beat_time_s` or `# start=<seconds>`",
        ))
    }
}

/// Converts a counts trace to g by multiplying every axis by the scale
/// factor. Timestamps are untouched.
pub fn rescale<F: Real>(trace: &RawTrace<F>, scale: &ScaleSpec<F>) -> RawTrace<F> {
    let k = scale.counts_to_g();
    let mul = |axis: &[F]| axis.iter().map(|&v| v * k).collect();
    RawTrace {
        sample_rate_hz: trace.sample_rate_hz,
        t: trace.t.clone(),
        ax: mul(&trace.ax),
        ay: mul(&trace.ay),
        az: mul(&trace.az),
    }
}

/// Writes a trace in the accelerometer CSV format. Values round-trip
/// exactly through [`parse_accel_csv`].
pub fn write_accel_csv<F: Real>(trace: &RawTrace<F>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(trace.len() * 24 + 16);
    out.push_str("t,ax,ay,az\n");
    for i in 0..trace.len() {
        writeln!(
            out,
            "{},{},{},{}",
            trace.t[i], trace.ax[i], trace.ay[i], trace.az[i]
        )
        .expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes reference beats in the `beat_time_s` format.
pub fn write_reference_beats<F: Real>(
    beats: &ReferenceBeats<F>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::with_capacity(beats.len() * 12 + 16);
    out.push_str("beat_time_s\n");
    for b in beats.beat_times_s() {
        writeln!(out, "{b}").expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Yields `(1-based line number, line)` skipping blank lines, tolerating CRLF.
fn numbered_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_number<F: Real>(raw: &str, line: usize, name: &str) -> Result<F> {
    let value: F = raw
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{raw}` as {name}")))?;
    if !value.is_finite() {
        return Err(Error::parse(line, format!("non-finite {name}")));
    }
    Ok(value)
}
