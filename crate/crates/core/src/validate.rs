//! Reference/candidate alignment and the validation statistics battery:
//! Pearson R and cosine similarity on matched beat timestamps, Welch and
//! Student t-tests and MSE on the matched inter-beat intervals, and
//! five-number summaries of each full interval distribution.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beats::{summarize, BeatSeries, HeartRateSummary};
use crate::error::{Error, Result};
use crate::ingest::ReferenceBeats;
use crate::real::{mean, median_in_place, sample_variance, Real};
use crate::special::student_t_two_sided_p;

/// Optional global offset removal before matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetMode {
    /// Match raw timestamps.
    #[default]
    None,
    /// Subtract the median nearest-neighbor offset before matching, which
    /// absorbs a constant acquisition or group delay between the devices.
    MedianShift,
}

/// Beat matching parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentSpec<F> {
    /// Largest allowed |reference - candidate - offset| for a pair, seconds.
    pub tolerance_s: F,
    pub offset_mode: OffsetMode,
}

impl<F: Real> Default for AlignmentSpec<F> {
    fn default() -> Self {
        Self {
            tolerance_s: F::of(0.5),
            offset_mode: OffsetMode::default(),
        }
    }
}

impl<F: Real> AlignmentSpec<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance_s > F::zero()) || !(self.tolerance_s < F::of(1.5)) {
            return Err(Error::config(format!(
                "alignment tolerance {} s outside (0, 1.5)",
                self.tolerance_s
            )));
        }
        Ok(())
    }
}

/// One-to-one matched beat timestamps, ordered by reference time.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPairs<F> {
    pairs: Vec<(F, F)>,
    unmatched_ref: usize,
    unmatched_cand: usize,
    offset_s: F,
}

impl<F: Real> MatchedPairs<F> {
    /// `(t_ref, t_cand)` pairs in reference-time order.
    pub fn pairs(&self) -> &[(F, F)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn unmatched_ref(&self) -> usize {
        self.unmatched_ref
    }

    pub fn unmatched_cand(&self) -> usize {
        self.unmatched_cand
    }

    /// Global offset removed before matching (0 for [`OffsetMode::None`]).
    pub fn offset_s(&self) -> F {
        self.offset_s
    }

    pub fn ref_times(&self) -> Vec<F> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn cand_times(&self) -> Vec<F> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

/// Five-number summary of a distribution: the data behind one boxplot.
/// Quartiles interpolate linearly between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber<F> {
    pub min: F,
    pub q1: F,
    pub median: F,
    pub q3: F,
    pub max: F,
}

/// Every statistic reported for one reference/candidate comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport<F> {
    /// Pearson correlation of matched beat timestamps.
    pub pearson_r: F,
    /// Cosine similarity of matched beat timestamps.
    pub cosine_similarity: F,
    /// Two-sided Welch t-test p-value on matched inter-beat intervals.
    pub welch_p: F,
    /// Two-sided pooled-variance Student t-test p-value on the same intervals.
    pub student_p: F,
    /// Mean squared error between matched inter-beat intervals, s^2.
    pub mse_dt: F,
    /// Matched pairs over max(reference count, candidate count).
    pub match_rate: F,
    pub matched_pairs: usize,
    pub unmatched_ref: usize,
    pub unmatched_cand: usize,
    /// Global offset removed before matching, seconds.
    pub offset_s: F,
    pub ref_summary: HeartRateSummary<F>,
    pub cand_summary: HeartRateSummary<F>,
    /// Five-number summary of the full reference interval vector.
    pub boxplot_ref: FiveNumber<F>,
    /// Five-number summary of the full candidate interval vector.
    pub boxplot_cand: FiveNumber<F>,
}

/// Matches candidate beats to reference beats: greedy nearest-neighbor in
/// time order, one-to-one, within the tolerance window, optionally after
/// removing the median global offset.
pub fn align<F: Real>(
    reference: &ReferenceBeats<F>,
    candidate: &BeatSeries<F>,
    spec: &AlignmentSpec<F>,
) -> Result<MatchedPairs<F>> {
    spec.validate()?;
    let r = reference.beat_times_s();
    let c = candidate.beat_times_s();

    let offset = match spec.offset_mode {
        OffsetMode::None => F::zero(),
        OffsetMode::MedianShift => {
            let mut deltas: Vec<F> = r.iter().map(|&t| t - nearest(c, t)).collect();
            median_in_place(&mut deltas)
        }
    };

    let mut pairs = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < r.len() && j < c.len() {
        let adj = c[j] + offset;
        let d = adj - r[i];
        if d.abs() <= spec.tolerance_s {
            // Later candidates may be closer to this reference beat.
            while j + 1 < c.len() && (c[j + 1] + offset - r[i]).abs() < (c[j] + offset - r[i]).abs()
            {
                j += 1;
            }
            pairs.push((r[i], c[j]));
            i += 1;
            j += 1;
        } else if adj < r[i] {
            j += 1;
        } else {
            i += 1;
        }
    }

    if pairs.is_empty() {
        return Err(Error::alignment(format!(
            "no beats matched within tolerance {} s",
            spec.tolerance_s
        )));
    }
    Ok(MatchedPairs {
        unmatched_ref: r.len() - pairs.len(),
        unmatched_cand: c.len() - pairs.len(),
        pairs,
        offset_s: offset,
    })
}

/// Value in sorted `xs` nearest to `t`.
fn nearest<F: Real>(xs: &[F], t: F) -> F {
    let idx = xs.partition_point(|&x| x < t);
    if idx == 0 {
        xs[0]
    } else if idx == xs.len() {
        xs[xs.len() - 1]
    } else {
        let before = xs[idx - 1];
        let after = xs[idx];
        if t - before <= after - t {
            before
        } else {
            after
        }
    }
}

/// Sample Pearson correlation of two equal-length vectors.
pub fn pearson<F: Real>(x: &[F], y: &[F]) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::usage("vectors must have equal length"));
    }
    if x.len() < 3 {
        return Err(Error::usage("correlation requires at least 3 points"));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = F::zero();
    let mut syy = F::zero();
    let mut sxy = F::zero();
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == F::zero() || syy == F::zero() {
        return Err(Error::usage("correlation undefined for a constant vector"));
    }
    Ok(clamp_unit(sxy / (sxx.sqrt() * syy.sqrt())))
}

/// Cosine similarity <x,y> / (|x| |y|) of two equal-length non-zero vectors.
pub fn cosine_similarity<F: Real>(x: &[F], y: &[F]) -> Result<F> {
    if x.len() != y.len() {
        return Err(Error::usage("vectors must have equal length"));
    }
    if x.is_empty() {
        return Err(Error::usage("cosine similarity requires non-empty vectors"));
    }
    let mut dot = F::zero();
    let mut nx = F::zero();
    let mut ny = F::zero();
    for (&a, &b) in x.iter().zip(y) {
        dot += a * b;
        nx += a * a;
        ny += b * b;
    }
    if nx == F::zero() || ny == F::zero() {
        return Err(Error::usage(
            "cosine similarity undefined for a zero vector",
        ));
    }
    Ok(clamp_unit(dot / (nx.sqrt() * ny.sqrt())))
}

fn clamp_unit<F: Real>(v: F) -> F {
    v.max(-F::one()).min(F::one())
}

/// Which two-sample mean test to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestKind {
    /// Unequal variances, Welch-Satterthwaite degrees of freedom.
    Welch,
    /// Pooled variance, n1 + n2 - 2 degrees of freedom.
    Student,
}

/// Two-sided two-sample t-test p-value.
///
/// Both samples constant with equal means is defined as p = 1.0; any other
/// zero-variance input is a degenerate-input error.
pub fn t_test<F: Real>(a: &[F], b: &[F], kind: TTestKind) -> Result<F> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::usage("each sample needs at least 2 values"));
    }
    let n1 = F::of_usize(a.len());
    let n2 = F::of_usize(b.len());
    let m1 = mean(a);
    let m2 = mean(b);
    let v1 = sample_variance(a, m1);
    let v2 = sample_variance(b, m2);

    if v1 <= F::zero() && v2 <= F::zero() {
        return if m1 == m2 {
            Ok(F::one())
        } else {
            Err(Error::usage(
                "degenerate input: zero variance with unequal means",
            ))
        };
    }
    if v1 <= F::zero() || v2 <= F::zero() {
        return Err(Error::usage(
            "degenerate input: zero variance in one sample",
        ));
    }

    let (t, df) = match kind {
        TTestKind::Welch => {
            let se1 = v1 / n1;
            let se2 = v2 / n2;
            let se = se1 + se2;
            let df = se * se / (se1 * se1 / (n1 - F::one()) + se2 * se2 / (n2 - F::one()));
            ((m1 - m2) / se.sqrt(), df)
        }
        TTestKind::Student => {
            let df = n1 + n2 - F::of(2.0);
            let pooled = ((n1 - F::one()) * v1 + (n2 - F::one()) * v2) / df;
            let se = (pooled * (F::one() / n1 + F::one() / n2)).sqrt();
            ((m1 - m2) / se, df)
        }
    };
    Ok(student_t_two_sided_p(t, df))
}

pub fn welch_t_test<F: Real>(a: &[F], b: &[F]) -> Result<F> {
    t_test(a, b, TTestKind::Welch)
}

pub fn student_t_test<F: Real>(a: &[F], b: &[F]) -> Result<F> {
    t_test(a, b, TTestKind::Student)
}

/// Mean squared error between two equal-length paired vectors.
pub fn mse<F: Real>(a: &[F], b: &[F]) -> Result<F> {
    if a.len() != b.len() {
        return Err(Error::usage("vectors must have equal length"));
    }
    if a.is_empty() {
        return Err(Error::usage("mse requires at least one pair"));
    }
    let sum = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum::<F>();
    Ok(sum / F::of_usize(a.len()))
}

/// Five-number summary with linearly interpolated quartiles.
pub fn five_number_summary<F: Real>(values: &[F]) -> Result<FiveNumber<F>> {
    if values.is_empty() {
        return Err(Error::usage("summary requires at least one value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values order totally"));
    let quantile = |p: f64| -> F {
        let pos = F::of(p) * F::of_usize(sorted.len() - 1);
        let lo = pos.floor().to_usize().unwrap_or(0);
        let hi = (lo + 1).min(sorted.len() - 1);
        let frac = pos - F::of_usize(lo);
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    };
    Ok(FiveNumber {
        min: sorted[0],
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Runs alignment and assembles the full statistics battery.
///
/// Pearson and cosine run on matched timestamp pairs; the t-tests and MSE on
/// interval vectors derived from the matched pairs; the five-number
/// summaries on each series' full interval vector.
pub fn build_report<F: Real>(
    reference: &ReferenceBeats<F>,
    candidate: &BeatSeries<F>,
    spec: &AlignmentSpec<F>,
) -> Result<ValidationReport<F>> {
    let matched = align(reference, candidate, spec)?;
    let rt = matched.ref_times();
    let ct = matched.cand_times();

    let pearson_r = pearson(&rt, &ct).map_err(|e| e.labeled("pearson"))?;
    let cosine = cosine_similarity(&rt, &ct).map_err(|e| e.labeled("cosine"))?;

    let dt_ref = first_differences(&rt);
    let dt_cand = first_differences(&ct);
    let welch_p = welch_t_test(&dt_ref, &dt_cand).map_err(|e| e.labeled("welch"))?;
    let student_p = student_t_test(&dt_ref, &dt_cand).map_err(|e| e.labeled("student"))?;
    let mse_dt = mse(&dt_ref, &dt_cand).map_err(|e| e.labeled("mse"))?;

    let ref_series = BeatSeries::from_reference(reference);
    let ref_summary = summarize(&ref_series).map_err(|e| e.labeled("reference summary"))?;
    let cand_summary = summarize(candidate).map_err(|e| e.labeled("candidate summary"))?;
    let boxplot_ref = five_number_summary(ref_series.intervals_s())
        .map_err(|e| e.labeled("reference boxplot"))?;
    let boxplot_cand =
        five_number_summary(candidate.intervals_s()).map_err(|e| e.labeled("candidate boxplot"))?;

    let denom = reference.len().max(candidate.len());
    Ok(ValidationReport {
        pearson_r,
        cosine_similarity: cosine,
        welch_p,
        student_p,
        mse_dt,
        match_rate: F::of_usize(matched.len()) / F::of_usize(denom),
        matched_pairs: matched.len(),
        unmatched_ref: matched.unmatched_ref(),
        unmatched_cand: matched.unmatched_cand(),
        offset_s: matched.offset_s(),
        ref_summary,
        cand_summary,
        boxplot_ref,
        boxplot_cand,
    })
}

pub(crate) fn first_differences<F: Real>(xs: &[F]) -> Vec<F> {
    xs.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Writes matched pairs as CSV (`t_ref_s,t_cand_s`).
pub fn write_pairs_csv<F: Real>(matched: &MatchedPairs<F>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("t_ref_s,t_cand_s\n");
    for (r, c) in matched.pairs() {
        writeln!(out, "{r},{c}").expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes both interval distributions as long-format CSV (`source,dt_s`)
/// ready for external boxplot rendering.
pub fn write_boxplot_csv<F: Real>(
    ref_intervals: &[F],
    cand_intervals: &[F],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = String::from("source,dt_s\n");
    for dt in ref_intervals {
        writeln!(out, "reference,{dt}").expect("writing to String cannot fail");
    }
    for dt in cand_intervals {
        writeln!(out, "candidate,{dt}").expect("writing to String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}
