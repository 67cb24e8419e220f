//! Beat detection and inter-beat statistics.
//!
//! Beats are prominence-thresholded strict local maxima of the filtered
//! magnitude signal, thinned by a refractory period (higher peak wins) and
//! refined to sub-sample precision by a three-point parabolic fit. The
//! prominence threshold adapts to the signal: `prominence_factor` times the
//! robust spread `1.4826 * MAD`, which makes detection invariant under
//! positive amplitude scaling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::Signal;
use crate::error::{Error, Result};
use crate::ingest::ReferenceBeats;
use crate::real::{mean, median_in_place, sample_variance, Real};

/// Scales median absolute deviation to a Gaussian-consistent sigma.
const MAD_TO_SIGMA: f64 = 1.4826;

/// Peak detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec<F> {
    /// Minimum spacing between reported beats, seconds. The default 0.33 s
    /// caps the reportable rate near 180 bpm.
    pub refractory_s: F,
    /// Multiplies the robust spread of the signal to form the prominence
    /// threshold.
    pub prominence_factor: F,
    /// Minimum time the signal must stay above the half-prominence level
    /// around a peak; 0 disables the gate.
    pub min_duration_s: F,
}

impl<F: Real> Default for DetectorSpec<F> {
    fn default() -> Self {
        Self {
            refractory_s: F::of(0.33),
            prominence_factor: F::of(0.5),
            min_duration_s: F::zero(),
        }
    }
}

impl<F: Real> DetectorSpec<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.refractory_s > F::of(0.1)) || !(self.refractory_s < F::of(2.0)) {
            return Err(Error::config(format!(
                "refractory {} s outside (0.1, 2.0)",
                self.refractory_s
            )));
        }
        if !(self.prominence_factor > F::zero()) || !self.prominence_factor.is_finite() {
            return Err(Error::config("prominence factor must be positive"));
        }
        if !(self.min_duration_s >= F::zero()) || !self.min_duration_s.is_finite() {
            return Err(Error::config("minimum duration must be non-negative"));
        }
        Ok(())
    }
}

/// Ordered beat timestamps plus their first differences.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSeries<F> {
    beat_times_s: Vec<F>,
    intervals_s: Vec<F>,
}

impl<F: Real> BeatSeries<F> {
    /// Builds a series from strictly increasing beat times; intervals are
    /// exactly the first differences.
    pub fn new(beat_times_s: Vec<F>) -> Result<Self> {
        if beat_times_s.is_empty() {
            return Err(Error::structure("empty beat series"));
        }
        if beat_times_s.iter().any(|v| !v.is_finite()) {
            return Err(Error::structure("non-finite beat time"));
        }
        if beat_times_s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::structure("non-monotone beat times"));
        }
        let intervals_s = beat_times_s.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            beat_times_s,
            intervals_s,
        })
    }

    /// Adopts reference beats as a candidate-shaped series.
    pub fn from_reference(reference: &ReferenceBeats<F>) -> Self {
        Self::new(reference.beat_times_s().to_vec())
            .expect("reference beats satisfy beat-series invariants")
    }

    pub fn beat_times_s(&self) -> &[F] {
        &self.beat_times_s
    }

    pub fn intervals_s(&self) -> &[F] {
        &self.intervals_s
    }

    pub fn len(&self) -> usize {
        self.beat_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }
}

/// Mean interval, interval spread, and mean heart rate of one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeartRateSummary<F> {
    pub mean_dt_s: F,
    /// Sample standard deviation (n-1 denominator); 0 for a single interval.
    pub std_dt_s: F,
    pub mean_hr_bpm: F,
    pub beat_count: usize,
}

/// Detects beats in a filtered magnitude signal.
pub fn detect_beats<F: Real>(signal: &Signal<F>, spec: &DetectorSpec<F>) -> Result<BeatSeries<F>> {
    spec.validate()?;
    let v = signal.values();
    let n = v.len();
    let fs = signal.sample_rate_hz();

    let mut buf = v.to_vec();
    let med = median_in_place(&mut buf);
    for (b, &x) in buf.iter_mut().zip(v) {
        *b = (x - med).abs();
    }
    let mad = median_in_place(&mut buf);
    let threshold = spec.prominence_factor * F::of(MAD_TO_SIGMA) * mad;

    // Candidate peaks as (time offset from signal start, height).
    let mut candidates: Vec<(F, F)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(v[i] > v[i - 1] && v[i] > v[i + 1]) {
            continue;
        }
        let prom = prominence(v, i);
        if !(prom > threshold) {
            continue;
        }
        if spec.min_duration_s > F::zero() {
            let level = v[i] - prom * F::of(0.5);
            if above_level_duration(v, i, level, fs) < spec.min_duration_s {
                continue;
            }
        }
        let delta = parabolic_offset(v[i - 1], v[i], v[i + 1]);
        candidates.push(((F::of_usize(i) + delta) / fs, v[i]));
    }

    // Refractory thinning: higher peaks claim their window first.
    candidates.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite heights")
            .then(a.0.partial_cmp(&b.0).expect("finite times"))
    });
    let mut kept: Vec<F> = Vec::with_capacity(candidates.len());
    for &(t, _) in &candidates {
        let idx = kept.partition_point(|&k| k < t);
        let clear_left = idx == 0 || t - kept[idx - 1] >= spec.refractory_s;
        let clear_right = idx == kept.len() || kept[idx] - t >= spec.refractory_s;
        if clear_left && clear_right {
            kept.insert(idx, t);
        }
    }

    if kept.len() < 2 {
        return Err(Error::detection(format!(
            "insufficient beats: found {}",
            kept.len()
        )));
    }
    let start = signal.start_time_s();
    BeatSeries::new(kept.into_iter().map(|off| start + off).collect())
}

/// Height of the peak at `i` above the higher of its two bases. A base is
/// the minimum between the peak and the nearest strictly higher sample on
/// that side (or the signal edge).
fn prominence<F: Real>(v: &[F], i: usize) -> F {
    let peak = v[i];
    let mut left_min = peak;
    let mut j = i;
    while j > 0 {
        j -= 1;
        if v[j] > peak {
            break;
        }
        if v[j] < left_min {
            left_min = v[j];
        }
    }
    let mut right_min = peak;
    let mut j = i;
    while j + 1 < v.len() {
        j += 1;
        if v[j] > peak {
            break;
        }
        if v[j] < right_min {
            right_min = v[j];
        }
    }
    peak - left_min.max(right_min)
}

/// Length of the contiguous run around `i` where the signal exceeds `level`,
/// in seconds.
fn above_level_duration<F: Real>(v: &[F], i: usize, level: F, fs: F) -> F {
    let mut lo = i;
    while lo > 0 && v[lo - 1] > level {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < v.len() && v[hi + 1] > level {
        hi += 1;
    }
    F::of_usize(hi - lo + 1) / fs
}

/// Sub-sample offset of the vertex of the parabola through three points
/// around a strict maximum; always in (-0.5, 0.5).
fn parabolic_offset<F: Real>(ym: F, y0: F, yp: F) -> F {
    let denom = ym - y0 - y0 + yp;
    if denom == F::zero() {
        return F::zero();
    }
    F::of(0.5) * (ym - yp) / denom
}

/// Element-wise heart rate 60/dt in bpm.
pub fn heart_rate<F: Real>(intervals_s: &[F]) -> Result<Vec<F>> {
    if let Some(bad) = intervals_s.iter().find(|d| !(**d > F::zero())) {
        return Err(Error::usage(format!("non-positive interval {bad}")));
    }
    let sixty = F::of(60.0);
    Ok(intervals_s.iter().map(|&d| sixty / d).collect())
}

/// Interval statistics for a series of at least two beats.
pub fn summarize<F: Real>(series: &BeatSeries<F>) -> Result<HeartRateSummary<F>> {
    let dt = series.intervals_s();
    if dt.is_empty() {
        return Err(Error::usage("summary requires at least 2 beats"));
    }
    let mean_dt = mean(dt);
    let std_dt = sample_variance(dt, mean_dt).sqrt();
    Ok(HeartRateSummary {
        mean_dt_s: mean_dt,
        std_dt_s: std_dt,
        mean_hr_bpm: F::of(60.0) / mean_dt,
        beat_count: series.len(),
    })
}

/// Writes beat times as CSV (`beat_time_s`).
pub fn write_beats_csv<F: Real>(series: &BeatSeries<F>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("beat_time_s\n");
    for t in series.beat_times_s() {
        writeln!(out, "{t}").expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes inter-beat intervals as CSV (`dt_s`).
pub fn write_intervals_csv<F: Real>(series: &BeatSeries<F>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("dt_s\n");
    for dt in series.intervals_s() {
        writeln!(out, "{dt}").expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}
