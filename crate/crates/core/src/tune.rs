//! Cutoff-frequency verification sweep.
//!
//! Runs the fixed-order low-pass at each candidate cutoff, detects beats,
//! and scores the cutoff by beat-count agreement with the reference,
//! breaking ties by timestamp correlation and then by the lower cutoff.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beats::{detect_beats, DetectorSpec};
use crate::dsp::{apply_filter, design_butterworth, FilterMode, FilterSpec, Signal};
use crate::error::{Error, Result};
use crate::ingest::ReferenceBeats;
use crate::real::Real;
use crate::validate::{align, pearson, AlignmentSpec};

/// Filter order held fixed while sweeping cutoffs.
pub const SWEEP_FILTER_ORDER: usize = 4;

/// Sweep parameters: the candidate grid plus the detector and alignment
/// settings reused at every cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<F> {
    /// Strictly increasing candidate cutoffs, Hz.
    pub cutoffs_hz: Vec<F>,
    pub detector: DetectorSpec<F>,
    pub alignment: AlignmentSpec<F>,
}

impl<F: Real> Default for SweepSpec<F> {
    fn default() -> Self {
        Self {
            cutoffs_hz: default_cutoff_grid(),
            detector: DetectorSpec::default(),
            alignment: AlignmentSpec::default(),
        }
    }
}

/// 0.5 Hz to 5.0 Hz in 0.25 Hz steps.
pub fn default_cutoff_grid<F: Real>() -> Vec<F> {
    (0..19)
        .map(|i| (F::of(2.0) + F::of_usize(i)) / F::of(4.0))
        .collect()
}

impl<F: Real> SweepSpec<F> {
    pub fn validate(&self, sample_rate_hz: F) -> Result<()> {
        if self.cutoffs_hz.is_empty() {
            return Err(Error::config("empty cutoff grid"));
        }
        let nyquist = sample_rate_hz / F::of(2.0);
        for w in self.cutoffs_hz.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::config("cutoff grid must be strictly increasing"));
            }
        }
        for &c in &self.cutoffs_hz {
            if !(c > F::zero()) || !c.is_finite() {
                return Err(Error::config("cutoffs must be positive and finite"));
            }
            if c >= nyquist {
                return Err(Error::config(format!(
                    "cutoff {c} Hz at or above Nyquist {nyquist} Hz"
                )));
            }
        }
        self.detector.validate()?;
        self.alignment.validate()
    }
}

/// Score for one candidate cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffScore<F> {
    pub cutoff_hz: F,
    /// Beats detected at this cutoff; 0 when detection failed.
    pub beat_count: usize,
    /// |detected - reference| beat count, or the reference count when
    /// detection failed.
    pub count_error: usize,
    /// Pearson R on matched timestamps; absent when detection, alignment,
    /// or the correlation itself was unavailable.
    pub pearson_r: Option<F>,
}

/// Full sweep table plus the winning cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<F> {
    pub per_cutoff: Vec<CutoffScore<F>>,
    pub best_cutoff_hz: F,
}

/// Scores every cutoff in the grid against the reference.
///
/// `signal` must be the unfiltered magnitude. Per-cutoff evaluations run in
/// parallel; the result order and the selection are deterministic.
pub fn sweep<F: Real>(
    signal: &Signal<F>,
    reference: &ReferenceBeats<F>,
    spec: &SweepSpec<F>,
) -> Result<SweepResult<F>> {
    spec.validate(signal.sample_rate_hz())?;
    let n_ref = reference.len();

    let per_cutoff: Vec<CutoffScore<F>> = spec
        .cutoffs_hz
        .par_iter()
        .map(|&cutoff| score_cutoff(signal, reference, spec, cutoff, n_ref))
        .collect();

    if per_cutoff.iter().all(|row| row.beat_count == 0) {
        return Err(Error::Sweep("detection failed at every cutoff".into()));
    }
    let best = select_best(&per_cutoff);
    Ok(SweepResult {
        best_cutoff_hz: best,
        per_cutoff,
    })
}

fn score_cutoff<F: Real>(
    signal: &Signal<F>,
    reference: &ReferenceBeats<F>,
    spec: &SweepSpec<F>,
    cutoff: F,
    n_ref: usize,
) -> CutoffScore<F> {
    let filter_spec = FilterSpec {
        order: SWEEP_FILTER_ORDER,
        cutoff_hz: cutoff,
        mode: FilterMode::ZeroPhase,
    };
    let realization = design_butterworth(&filter_spec, signal.sample_rate_hz())
        .expect("grid was validated below Nyquist");
    let filtered = apply_filter(signal, &realization, FilterMode::ZeroPhase)
        .expect("sample rates match by construction");
    match detect_beats(&filtered, &spec.detector) {
        Err(_) => CutoffScore {
            cutoff_hz: cutoff,
            beat_count: 0,
            count_error: n_ref,
            pearson_r: None,
        },
        Ok(series) => {
            let beat_count = series.len();
            let pearson_r = align(reference, &series, &spec.alignment)
                .ok()
                .and_then(|m| pearson(&m.ref_times(), &m.cand_times()).ok());
            CutoffScore {
                cutoff_hz: cutoff,
                beat_count,
                count_error: beat_count.abs_diff(n_ref),
                pearson_r,
            }
        }
    }
}

/// Lexicographic selection: count_error ascending, then pearson descending
/// (absent correlation loses to any present), then cutoff ascending.
pub(crate) fn select_best<F: Real>(rows: &[CutoffScore<F>]) -> F {
    rows.iter()
        .min_by(|a, b| {
            let rank = |p: Option<F>| p.unwrap_or_else(F::neg_infinity);
            a.count_error
                .cmp(&b.count_error)
                .then_with(|| {
                    rank(b.pearson_r)
                        .partial_cmp(&rank(a.pearson_r))
                        .expect("finite correlations")
                })
                .then_with(|| {
                    a.cutoff_hz
                        .partial_cmp(&b.cutoff_hz)
                        .expect("finite cutoffs")
                })
        })
        .expect("validated grid is non-empty")
        .cutoff_hz
}

/// Writes the sweep table as CSV (`cutoff_hz,beat_count,count_error,pearson_r`);
/// an absent correlation leaves the field empty.
pub fn write_sweep_csv<F: Real>(result: &SweepResult<F>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("cutoff_hz,beat_count,count_error,pearson_r\n");
    for row in &result.per_cutoff {
        match row.pearson_r {
            Some(r) => writeln!(
                out,
                "{},{},{},{r}",
                row.cutoff_hz, row.beat_count, row.count_error
            ),
            None => writeln!(
                out,
                "{},{},{},",
                row.cutoff_hz, row.beat_count, row.count_error
            ),
        }
        .expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cutoff: f64, count_error: usize, pearson_r: Option<f64>) -> CutoffScore<f64> {
        CutoffScore {
            cutoff_hz: cutoff,
            beat_count: 100,
            count_error,
            pearson_r,
        }
    }

    #[test]
    fn selection_is_lexicographic() {
        // count error dominates
        assert_eq!(
            select_best(&[row(1.0, 2, Some(0.999)), row(2.0, 0, Some(0.5))]),
            2.0
        );
        // pearson breaks count ties, descending
        assert_eq!(
            select_best(&[row(1.0, 1, Some(0.9)), row(2.0, 1, Some(0.95))]),
            2.0
        );
        // absent pearson loses to present
        assert_eq!(
            select_best(&[row(1.0, 1, None), row(2.0, 1, Some(0.1))]),
            2.0
        );
        // remaining ties go to the lower cutoff
        assert_eq!(
            select_best(&[row(1.0, 1, Some(0.9)), row(2.0, 1, Some(0.9))]),
            1.0
        );
    }

    #[test]
    fn default_grid_shape() {
        let grid: Vec<f64> = default_cutoff_grid();
        assert_eq!(grid.len(), 19);
        assert_eq!(grid[0], 0.5);
        assert_eq!(grid[18], 5.0);
        assert!((grid[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn spec_validation_gates() {
        let mut spec = SweepSpec::<f64>::default();
        assert!(spec.validate(100.0).is_ok());

        spec.cutoffs_hz = vec![];
        assert!(spec.validate(100.0).is_err());

        spec.cutoffs_hz = vec![2.0, 1.0];
        assert!(spec.validate(100.0).is_err());

        spec.cutoffs_hz = vec![2.0, 50.0];
        assert!(matches!(spec.validate(100.0), Err(Error::Config(_))));
    }
}
