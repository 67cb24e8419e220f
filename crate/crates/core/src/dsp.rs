//! Axis fusion and low-pass filtering.
//!
//! The three accelerometer axes are fused into a scalar magnitude signal,
//! then smoothed with a Butterworth low-pass realized as cascaded
//! second-order sections. Sections come from the analog prototype via the
//! bilinear transform with cutoff prewarping, which keeps the -3 dB point
//! exactly on the requested cutoff.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::ingest::RawTrace;
use crate::real::{mean, Real};

/// One uniformly sampled scalar channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<F> {
    sample_rate_hz: F,
    start_time_s: F,
    values: Vec<F>,
}

impl<F: Real> Signal<F> {
    pub fn new(sample_rate_hz: F, start_time_s: F, values: Vec<F>) -> Result<Self> {
        if !(sample_rate_hz > F::zero()) || !sample_rate_hz.is_finite() {
            return Err(Error::structure("sample rate must be positive and finite"));
        }
        if !start_time_s.is_finite() {
            return Err(Error::structure("non-finite start time"));
        }
        if values.is_empty() {
            return Err(Error::structure("empty signal"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::structure("non-finite sample value"));
        }
        Ok(Self {
            sample_rate_hz,
            start_time_s,
            values,
        })
    }

    pub fn sample_rate_hz(&self) -> F {
        self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> F {
        self.start_time_s
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    /// Timestamp of sample `i` under the uniform-sampling model.
    pub fn time_at(&self, i: usize) -> F {
        self.start_time_s + F::of_usize(i) / self.sample_rate_hz
    }
}

/// How a filter is applied to a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Forward pass then time-reversed pass: squared magnitude response and
    /// no phase shift. The default, so detected peak times need no group
    /// delay correction when compared against the reference.
    #[default]
    ZeroPhase,
    /// Single forward pass with zero initial state.
    Causal,
}

/// Low-pass design parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec<F> {
    pub order: usize,
    pub cutoff_hz: F,
    pub mode: FilterMode,
}

impl<F: Real> FilterSpec<F> {
    pub fn new(order: usize, cutoff_hz: F) -> Self {
        Self {
            order,
            cutoff_hz,
            mode: FilterMode::default(),
        }
    }

    /// Checks the design parameters against the target sample rate.
    pub fn validate(&self, sample_rate_hz: F) -> Result<()> {
        if self.order == 0 || self.order > 8 {
            return Err(Error::design(format!(
                "order {} outside supported range [1, 8]",
                self.order
            )));
        }
        if !(self.cutoff_hz > F::zero()) || !self.cutoff_hz.is_finite() {
            return Err(Error::design("cutoff must be positive and finite"));
        }
        let nyquist = sample_rate_hz / F::of(2.0);
        if self.cutoff_hz >= nyquist {
            return Err(Error::design(format!(
                "cutoff {} Hz at or above Nyquist {} Hz",
                self.cutoff_hz, nyquist
            )));
        }
        Ok(())
    }
}

impl<F: Real> Default for FilterSpec<F> {
    fn default() -> Self {
        Self {
            order: 4,
            cutoff_hz: F::of(2.0),
            mode: FilterMode::default(),
        }
    }
}

/// One second-order section, denominator normalized to `1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<F> {
    pub b0: F,
    pub b1: F,
    pub b2: F,
    pub a1: F,
    pub a2: F,
}

impl<F: Real> Biquad<F> {
    /// Stability triangle: both poles strictly inside the unit circle.
    fn is_stable(&self) -> bool {
        self.a2.abs() < F::one() && self.a1.abs() < F::one() + self.a2
    }

    fn dc_gain(&self) -> F {
        (self.b0 + self.b1 + self.b2) / (F::one() + self.a1 + self.a2)
    }
}

/// A designed recursive low-pass: a cascade of stable second-order sections
/// with unit DC gain, pinned to the sample rate it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRealization<F> {
    sections: Vec<Biquad<F>>,
    design_sample_rate_hz: F,
}

impl<F: Real> FilterRealization<F> {
    /// Builds a realization, checking per-section stability and that the
    /// cascade DC gain is 1 (within 1e-9, widened to 100 epsilon for
    /// scalar types coarser than that).
    pub fn new(sections: Vec<Biquad<F>>, design_sample_rate_hz: F) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::design("empty section cascade"));
        }
        if !(design_sample_rate_hz > F::zero()) || !design_sample_rate_hz.is_finite() {
            return Err(Error::design(
                "design sample rate must be positive and finite",
            ));
        }
        for (i, s) in sections.iter().enumerate() {
            if !s.is_stable() {
                return Err(Error::design(format!("section {i} is unstable")));
            }
        }
        let realization = Self {
            sections,
            design_sample_rate_hz,
        };
        let tol = F::of(1e-9).max(F::epsilon() * F::of(100.0));
        if (realization.dc_gain() - F::one()).abs() > tol {
            return Err(Error::design(format!(
                "cascade DC gain {} differs from 1",
                realization.dc_gain()
            )));
        }
        Ok(realization)
    }

    pub fn sections(&self) -> &[Biquad<F>] {
        &self.sections
    }

    pub fn design_sample_rate_hz(&self) -> F {
        self.design_sample_rate_hz
    }

    pub fn dc_gain(&self) -> F {
        self.sections.iter().fold(F::one(), |g, s| g * s.dc_gain())
    }

    /// Complex frequency response at `freq_hz`, evaluated on the unit circle.
    pub fn response_at(&self, freq_hz: F) -> Complex<F> {
        let w = F::of(2.0) * F::PI() * freq_hz / self.design_sample_rate_hz;
        let zinv = Complex::new(w.cos(), -w.sin());
        let zinv2 = zinv * zinv;
        let one = Complex::new(F::one(), F::zero());
        self.sections.iter().fold(one, |acc, s| {
            let num = Complex::new(s.b0, F::zero()) + zinv * s.b1 + zinv2 * s.b2;
            let den = one + zinv * s.a1 + zinv2 * s.a2;
            acc * (num / den)
        })
    }

    pub fn magnitude_at(&self, freq_hz: F) -> F {
        self.response_at(freq_hz).norm()
    }

    /// `(freq_hz, magnitude, phase_rad)` on `n_points` evenly spaced from DC
    /// to Nyquist inclusive.
    pub fn frequency_response(&self, n_points: usize) -> Vec<(F, F, F)> {
        assert!(n_points >= 2, "need at least DC and Nyquist");
        let nyquist = self.design_sample_rate_hz / F::of(2.0);
        (0..n_points)
            .map(|i| {
                let f = nyquist * F::of_usize(i) / F::of_usize(n_points - 1);
                let h = self.response_at(f);
                (f, h.norm(), h.arg())
            })
            .collect()
    }

    /// First `n` samples of the causal impulse response.
    pub fn impulse_response(&self, n: usize) -> Vec<F> {
        let mut impulse = vec![F::zero(); n];
        if n > 0 {
            impulse[0] = F::one();
        }
        sosfilt(&self.sections, &impulse)
    }

    /// Samples until the impulse response has decayed below `fraction` of its
    /// peak magnitude for good, capped at 2^22 samples.
    pub fn decay_len(&self, fraction: F) -> usize {
        const MAX_LEN: usize = 1 << 22;
        let mut len = 256;
        loop {
            let h = self.impulse_response(len);
            let peak = h.iter().fold(F::zero(), |m, v| m.max(v.abs()));
            let thr = peak * fraction;
            let last = h.iter().rposition(|v| v.abs() >= thr);
            match last {
                Some(i) if i + 1 < len => return i + 1,
                None => return 1,
                _ if len >= MAX_LEN => return len,
                _ => len *= 2,
            }
        }
    }

    /// Reflection padding used by zero-phase filtering: three times the 1%
    /// impulse-response decay length.
    fn settle_pad(&self) -> usize {
        3 * self.decay_len(F::of(0.01))
    }
}

/// Fuses the three axes of a rescaled trace into the scalar magnitude
/// `sqrt(ax^2 + ay^2 + az^2)`, preserving sample count and timing.
pub fn magnitude<F: Real>(trace: &RawTrace<F>) -> Signal<F> {
    let values = trace
        .ax()
        .iter()
        .zip(trace.ay())
        .zip(trace.az())
        .map(|((&x, &y), &z)| (x * x + y * y + z * z).sqrt())
        .collect();
    Signal::new(trace.sample_rate_hz(), trace.times_s()[0], values)
        .expect("magnitude of a valid trace is a valid signal")
}

/// Designs a Butterworth low-pass as cascaded second-order sections.
///
/// The analog prototype poles are scaled to the prewarped cutoff
/// `2 fs tan(pi fc / fs)` and mapped through the bilinear transform; each
/// conjugate pole pair yields one section with unit DC gain. Odd orders add
/// one first-order section for the real pole.
pub fn design_butterworth<F: Real>(
    spec: &FilterSpec<F>,
    sample_rate_hz: F,
) -> Result<FilterRealization<F>> {
    spec.validate(sample_rate_hz)?;
    let order = spec.order;
    let two = F::of(2.0);
    let warped = two * sample_rate_hz * (F::PI() * spec.cutoff_hz / sample_rate_hz).tan();
    let k = two * sample_rate_hz;

    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for pair in 0..order / 2 {
        // Upper-half-plane prototype pole angle.
        let theta = F::PI() * F::of_usize(2 * pair + order + 1) / F::of_usize(2 * order);
        let a1_analog = -two * warped * theta.cos();
        let a2_analog = warped * warped;
        let a0 = k * k + a1_analog * k + a2_analog;
        sections.push(normalize_dc(Biquad {
            b0: a2_analog / a0,
            b1: two * a2_analog / a0,
            b2: a2_analog / a0,
            a1: two * (a2_analog - k * k) / a0,
            a2: (k * k - a1_analog * k + a2_analog) / a0,
        }));
    }
    if order % 2 == 1 {
        let a0 = k + warped;
        sections.push(normalize_dc(Biquad {
            b0: warped / a0,
            b1: warped / a0,
            b2: F::zero(),
            a1: (warped - k) / a0,
            a2: F::zero(),
        }));
    }
    FilterRealization::new(sections, sample_rate_hz)
}

/// Runs a signal through the cascade.
///
/// Causal mode is a single direct-form pass with zero initial state.
/// Zero-phase mode subtracts the signal mean, extends both ends by odd
/// reflection over the filter's settling length, runs forward and backward
/// passes, trims the extensions, and restores the mean; the mean handling
/// keeps the ~1 g gravity offset out of the edge transients.
pub fn apply_filter<F: Real>(
    signal: &Signal<F>,
    realization: &FilterRealization<F>,
    mode: FilterMode,
) -> Result<Signal<F>> {
    if signal.sample_rate_hz() != realization.design_sample_rate_hz() {
        return Err(Error::usage(format!(
            "signal sample rate {} Hz does not match design rate {} Hz",
            signal.sample_rate_hz(),
            realization.design_sample_rate_hz()
        )));
    }
    let values = match mode {
        FilterMode::Causal => sosfilt(&realization.sections, signal.values()),
        FilterMode::ZeroPhase => {
            let x = signal.values();
            let n = x.len();
            let m = mean(x);
            let centered: Vec<F> = x.iter().map(|&v| v - m).collect();
            let pad = realization.settle_pad().min(n - 1);
            let two = F::of(2.0);

            let mut ext = Vec::with_capacity(n + 2 * pad);
            let first = centered[0];
            let last = centered[n - 1];
            for i in 0..pad {
                ext.push(two * first - centered[pad - i]);
            }
            ext.extend_from_slice(&centered);
            for i in 0..pad {
                ext.push(two * last - centered[n - 2 - i]);
            }

            let mut y = sosfilt(&realization.sections, &ext);
            y.reverse();
            let mut y = sosfilt(&realization.sections, &y);
            y.reverse();

            y[pad..pad + n].iter().map(|&v| v + m).collect()
        }
    };
    Signal::new(signal.sample_rate_hz(), signal.start_time_s(), values)
}

/// Rescales the numerator so the section's DC gain is 1 up to rounding. The
/// analytic gain is already 1; this strips the cancellation error of
/// `1 + a1 + a2`, which matters at f32 precision.
fn normalize_dc<F: Real>(mut s: Biquad<F>) -> Biquad<F> {
    let g = s.dc_gain();
    s.b0 /= g;
    s.b1 /= g;
    s.b2 /= g;
    s
}

/// Direct-form II transposed cascade with zero initial state.
fn sosfilt<F: Real>(sections: &[Biquad<F>], input: &[F]) -> Vec<F> {
    let mut out = input.to_vec();
    for s in sections {
        let mut w1 = F::zero();
        let mut w2 = F::zero();
        for v in out.iter_mut() {
            let x = *v;
            let y = s.b0 * x + w1;
            w1 = s.b1 * x - s.a1 * y + w2;
            w2 = s.b2 * x - s.a2 * y;
            *v = y;
        }
    }
    out
}

/// Dumps section coefficients as CSV (`b0,b1,b2,a1,a2`).
pub fn write_sections_csv<F: Real>(
    realization: &FilterRealization<F>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::from("b0,b1,b2,a1,a2\n");
    for s in realization.sections() {
        writeln!(out, "{},{},{},{},{}", s.b0, s.b1, s.b2, s.a1, s.a2)
            .expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Dumps a sampled frequency response as CSV (`freq_hz,magnitude,phase_rad`).
pub fn write_response_csv<F: Real>(
    realization: &FilterRealization<F>,
    n_points: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::from("freq_hz,magnitude,phase_rad\n");
    for (f, mag, phase) in realization.frequency_response(n_points) {
        writeln!(out, "{f},{mag},{phase}").expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}
