//! Synthetic pen-accelerometer traces with known ground-truth beat times.
//!
//! Each beat contributes a Gaussian-windowed bump split across the three
//! axes on top of a 1 g gravity offset, band-limited "writing motion"
//! noise, and white sensor noise. The logged beat times are the oracle the
//! rest of the pipeline is validated against. The pulse shape is a smooth
//! bump, not a physiological waveform template; it is enough to exercise
//! the pipeline.

use std::path::Path;

use rand::distr::{Distribution, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::{self, RawTrace, ReferenceBeats, ScaleSpec};
use crate::real::Real;

/// Floor on generated inter-beat intervals, seconds.
pub const MIN_RR_S: f64 = 0.25;

/// Sinusoid components in the band-limited writing-motion bank.
const MOTION_COMPONENTS: usize = 24;

/// Generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec<F> {
    pub duration_s: F,
    pub sample_rate_hz: F,
    pub mean_hr_bpm: F,
    /// Standard deviation of the Gaussian inter-beat jitter, seconds.
    pub hrv_std_s: F,
    /// Peak amplitude of the per-beat bump, g.
    pub pulse_amplitude_g: F,
    /// Bump width (two standard deviations of its Gaussian window), seconds.
    pub pulse_width_s: F,
    /// RMS amplitude of the writing-motion band noise, g.
    pub writing_motion_amplitude_g: F,
    /// Writing-motion band `(low, high)`, Hz.
    pub writing_motion_band_hz: (F, F),
    /// White sensor noise standard deviation, g.
    pub noise_std_g: F,
    pub seed: u64,
}

impl<F: Real> Default for SynthSpec<F> {
    fn default() -> Self {
        Self {
            duration_s: F::of(300.0),
            sample_rate_hz: F::of(100.0),
            mean_hr_bpm: F::of(72.0),
            hrv_std_s: F::of(0.02),
            pulse_amplitude_g: F::of(0.03),
            pulse_width_s: F::of(0.22),
            writing_motion_amplitude_g: F::of(0.04),
            writing_motion_band_hz: (F::of(4.0), F::of(9.0)),
            noise_std_g: F::of(0.003),
            seed: 0,
        }
    }
}

impl<F: Real> SynthSpec<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > F::zero()) || !self.duration_s.is_finite() {
            return Err(Error::config("duration must be positive and finite"));
        }
        if !(self.sample_rate_hz > F::zero()) || !self.sample_rate_hz.is_finite() {
            return Err(Error::config("sample rate must be positive and finite"));
        }
        if !(self.mean_hr_bpm > F::zero()) || !self.mean_hr_bpm.is_finite() {
            return Err(Error::config("mean heart rate must be positive"));
        }
        if !(self.hrv_std_s >= F::zero()) || !self.hrv_std_s.is_finite() {
            return Err(Error::config("inter-beat jitter must be non-negative"));
        }
        let mean_rr = F::of(60.0) / self.mean_hr_bpm;
        if !(mean_rr > F::of(4.0) * self.hrv_std_s) {
            return Err(Error::config(format!(
                "mean RR {mean_rr} s must exceed 4x the jitter std {} s",
                self.hrv_std_s
            )));
        }
        for (name, v) in [
            ("pulse amplitude", self.pulse_amplitude_g),
            ("writing-motion amplitude", self.writing_motion_amplitude_g),
            ("noise std", self.noise_std_g),
        ] {
            if !(v >= F::zero()) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be non-negative")));
            }
        }
        if !(self.pulse_width_s > F::zero()) || !self.pulse_width_s.is_finite() {
            return Err(Error::config("pulse width must be positive"));
        }
        let (lo, hi) = self.writing_motion_band_hz;
        let nyquist = self.sample_rate_hz / F::of(2.0);
        if !(lo > F::zero()) || !(hi > lo) || !(hi <= nyquist) {
            return Err(Error::config(format!(
                "writing-motion band ({lo}, {hi}) must satisfy 0 < low < high <= Nyquist"
            )));
        }
        Ok(())
    }
}

/// A generated trace (axes in g) plus the beat times that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrace<F> {
    trace: RawTrace<F>,
    truth_beats_s: Vec<F>,
}

impl<F: Real> SynthTrace<F> {
    /// The generated accelerometer record, axes in g.
    pub fn trace(&self) -> &RawTrace<F> {
        &self.trace
    }

    /// Ground-truth beat times, seconds.
    pub fn truth_beats_s(&self) -> &[F] {
        &self.truth_beats_s
    }

    pub fn into_parts(self) -> (RawTrace<F>, Vec<F>) {
        (self.trace, self.truth_beats_s)
    }

    /// Quantizes the g-valued axes to integer sensor counts under `scale`,
    /// matching what a real device would stream.
    pub fn quantized(&self, scale: &ScaleSpec<F>) -> Result<RawTrace<F>> {
        let k = scale.counts_to_g();
        let to_counts = |axis: &[F]| axis.iter().map(|&v| (v / k).round()).collect();
        RawTrace::new(
            self.trace.sample_rate_hz(),
            self.trace.times_s().to_vec(),
            to_counts(self.trace.ax()),
            to_counts(self.trace.ay()),
            to_counts(self.trace.az()),
        )
    }

    /// Writes the quantized accelerometer CSV and the truth reference file
    /// in the ingestion formats, ready for end-to-end runs from files.
    pub fn write_dataset(
        &self,
        scale: &ScaleSpec<F>,
        accel_path: impl AsRef<Path>,
        reference_path: impl AsRef<Path>,
    ) -> Result<()> {
        let counts = self.quantized(scale)?;
        ingest::write_accel_csv(&counts, accel_path)?;
        let reference = ReferenceBeats::from_beat_times(self.truth_beats_s.clone())?;
        ingest::write_reference_beats(&reference, reference_path)
    }
}

/// Generates a trace; identical spec and seed give bitwise-identical output.
pub fn generate<F>(spec: &SynthSpec<F>) -> Result<SynthTrace<F>>
where
    F: Real,
    StandardNormal: Distribution<F>,
    StandardUniform: Distribution<F>,
{
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fs = spec.sample_rate_hz;
    let mean_rr = F::of(60.0) / spec.mean_hr_bpm;
    let min_rr = F::of(MIN_RR_S);

    // Beat times: cumulative jittered intervals, clamped to stay positive.
    let mut truth = Vec::new();
    let mut t = F::zero();
    loop {
        let z: F = rng.sample(StandardNormal);
        let rr = (mean_rr + spec.hrv_std_s * z).max(min_rr);
        t += rr;
        if t > spec.duration_s {
            break;
        }
        truth.push(t);
    }

    let n = (spec.duration_s * fs)
        .round()
        .to_usize()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::config("duration times sample rate must be a sane sample count"))?;
    let times: Vec<F> = (0..n).map(|i| F::of_usize(i) / fs).collect();

    // Gravity sits on z; the pulse direction leans mostly along it so the
    // bump survives magnitude fusion at first order.
    let dir_x = F::of(0.3);
    let dir_y = F::of(0.3);
    let dir_z = (F::one() - dir_x * dir_x - dir_y * dir_y).sqrt();

    let mut ax = vec![F::zero(); n];
    let mut ay = vec![F::zero(); n];
    let mut az = vec![F::one(); n];

    let sigma = spec.pulse_width_s / F::of(2.0);
    let window = F::of(4.0) * sigma;
    let two_sigma_sq = F::of(2.0) * sigma * sigma;
    for &tb in &truth {
        let lo = ((tb - window) * fs).ceil().max(F::zero());
        let lo = lo.to_usize().unwrap_or(0).min(n - 1);
        let hi = ((tb + window) * fs)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(n - 1);
        for i in lo..=hi {
            let dt = times[i] - tb;
            let w = spec.pulse_amplitude_g * (-(dt * dt) / two_sigma_sq).exp();
            ax[i] += dir_x * w;
            ay[i] += dir_y * w;
            az[i] += dir_z * w;
        }
    }

    // Writing motion: pen strokes act mostly laterally.
    let (band_lo, band_hi) = spec.writing_motion_band_hz;
    for (axis, weight) in [(&mut ax, 1.0), (&mut ay, 1.0), (&mut az, 0.5)] {
        add_band_noise(
            &mut rng,
            axis,
            &times,
            spec.writing_motion_amplitude_g * F::of(weight),
            band_lo,
            band_hi,
        );
    }

    if spec.noise_std_g > F::zero() {
        for axis in [&mut ax, &mut ay, &mut az] {
            for v in axis.iter_mut() {
                let z: F = rng.sample(StandardNormal);
                *v += spec.noise_std_g * z;
            }
        }
    }

    let trace = RawTrace::new(fs, times, ax, ay, az)?;
    Ok(SynthTrace {
        trace,
        truth_beats_s: truth,
    })
}

/// Adds a random-phase sinusoid bank with frequencies uniform in the band,
/// normalized so the sum's RMS is `amplitude`. Draws happen even for zero
/// amplitude so the noise stream does not depend on it.
fn add_band_noise<F, R>(
    rng: &mut R,
    values: &mut [F],
    times: &[F],
    amplitude: F,
    lo_hz: F,
    hi_hz: F,
) where
    F: Real,
    R: Rng,
    StandardUniform: Distribution<F>,
{
    let two_pi = F::of(2.0) * F::PI();
    let components: Vec<(F, F)> = (0..MOTION_COMPONENTS)
        .map(|_| {
            let u: F = rng.sample(StandardUniform);
            let phase: F = rng.sample(StandardUniform);
            (two_pi * (lo_hz + (hi_hz - lo_hz) * u), two_pi * phase)
        })
        .collect();
    if amplitude <= F::zero() {
        return;
    }
    let scale = amplitude * (F::of(2.0) / F::of_usize(MOTION_COMPONENTS)).sqrt();
    for (v, &t) in values.iter_mut().zip(times) {
        let mut acc = F::zero();
        for &(omega, phase) in &components {
            acc += (omega * t + phase).sin();
        }
        *v += scale * acc;
    }
}
