//! Heart-rate recovery from a smart pen's triaxial accelerometer.
//!
//! The pipeline: parse and rescale the raw trace ([`ingest`]), fuse axes
//! into a magnitude signal and low-pass it ([`dsp`]), detect beats and
//! derive inter-beat statistics ([`beats`]), validate against an
//! ECG-derived beat reference ([`validate`]), and sweep filter cutoffs
//! against that reference ([`tune`]). The [`synth`] module generates traces
//! with known beat times for end-to-end verification.
//!
//! All numeric stages are generic over the scalar type through
//! [`real::Real`]; the `*32`/`*64` aliases below pin them to `f32`/`f64`.

// Validation deliberately writes `!(x > 0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beats;
pub mod dsp;
pub mod error;
pub mod ingest;
pub mod real;
pub mod special;
pub mod synth;
pub mod tune;
pub mod validate;

pub use error::{Error, Result};
pub use real::Real;

pub type RawTrace32 = ingest::RawTrace<f32>;
pub type RawTrace64 = ingest::RawTrace<f64>;
pub type ScaleSpec32 = ingest::ScaleSpec<f32>;
pub type ScaleSpec64 = ingest::ScaleSpec<f64>;
pub type ReferenceBeats32 = ingest::ReferenceBeats<f32>;
pub type ReferenceBeats64 = ingest::ReferenceBeats<f64>;

pub type Signal32 = dsp::Signal<f32>;
pub type Signal64 = dsp::Signal<f64>;
pub type FilterSpec32 = dsp::FilterSpec<f32>;
pub type FilterSpec64 = dsp::FilterSpec<f64>;
pub type FilterRealization32 = dsp::FilterRealization<f32>;
pub type FilterRealization64 = dsp::FilterRealization<f64>;

pub type DetectorSpec32 = beats::DetectorSpec<f32>;
pub type DetectorSpec64 = beats::DetectorSpec<f64>;
pub type BeatSeries32 = beats::BeatSeries<f32>;
pub type BeatSeries64 = beats::BeatSeries<f64>;
pub type HeartRateSummary32 = beats::HeartRateSummary<f32>;
pub type HeartRateSummary64 = beats::HeartRateSummary<f64>;

pub type AlignmentSpec32 = validate::AlignmentSpec<f32>;
pub type AlignmentSpec64 = validate::AlignmentSpec<f64>;
pub type MatchedPairs32 = validate::MatchedPairs<f32>;
pub type MatchedPairs64 = validate::MatchedPairs<f64>;
pub type ValidationReport32 = validate::ValidationReport<f32>;
pub type ValidationReport64 = validate::ValidationReport<f64>;

pub type SweepSpec32 = tune::SweepSpec<f32>;
pub type SweepSpec64 = tune::SweepSpec<f64>;
pub type SweepResult32 = tune::SweepResult<f32>;
pub type SweepResult64 = tune::SweepResult<f64>;

pub type SynthSpec32 = synth::SynthSpec<f32>;
pub type SynthSpec64 = synth::SynthSpec<f64>;
pub type SynthTrace32 = synth::SynthTrace<f32>;
pub type SynthTrace64 = synth::SynthTrace<f64>;
