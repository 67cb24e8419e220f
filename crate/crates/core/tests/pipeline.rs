//! End-to-end checks of the file -> filter -> beats -> report chain against
//! generator ground truth.

use penbeat::beats::{detect_beats, summarize, BeatSeries, DetectorSpec};
use penbeat::dsp::{apply_filter, design_butterworth, magnitude, FilterMode, FilterSpec};
use penbeat::ingest::{self, ReferenceBeats, ScaleSpec};
use penbeat::synth::{generate, SynthSpec};
use penbeat::tune::{sweep, SweepSpec};
use penbeat::validate::{align, build_report, AlignmentSpec};

fn run_pipeline(spec: &SynthSpec<f64>) -> (Vec<f64>, BeatSeries<f64>) {
    let st = generate(spec).unwrap();
    let mag = magnitude(st.trace());
    let filt = design_butterworth(&FilterSpec::new(4, 2.0), spec.sample_rate_hz).unwrap();
    let filtered = apply_filter(&mag, &filt, FilterMode::ZeroPhase).unwrap();
    let beats = detect_beats(&filtered, &DetectorSpec::default()).unwrap();
    (st.truth_beats_s().to_vec(), beats)
}

#[test]
fn thirty_thousand_row_file_round_trips_bit_for_bit() {
    let spec = SynthSpec::<f64> {
        seed: 99,
        ..SynthSpec::default()
    };
    let st = generate(&spec).unwrap();
    assert_eq!(st.trace().len(), 30_000);

    let dir = tempfile::tempdir().unwrap();
    let accel = dir.path().join("accel.csv");
    let reference = dir.path().join("reference.csv");
    let scale = ScaleSpec::new(1.0 / 4096.0).unwrap();
    st.write_dataset(&scale, &accel, &reference).unwrap();

    let parsed = ingest::parse_accel_csv::<f64>(&accel, 100.0).unwrap();
    assert_eq!(parsed, st.quantized(&scale).unwrap());

    // parse -> serialize -> parse is the identity
    let again = dir.path().join("again.csv");
    ingest::write_accel_csv(&parsed, &again).unwrap();
    let reparsed = ingest::parse_accel_csv::<f64>(&again, 100.0).unwrap();
    assert_eq!(parsed, reparsed);

    let ref_parsed = ingest::parse_reference::<f64>(&reference).unwrap();
    assert_eq!(ref_parsed.beat_times_s(), st.truth_beats_s());
}

#[test]
fn impulse_train_is_recovered_within_twenty_milliseconds() {
    // Jitter-free pulses at exactly 1 s spacing, no motion or noise. The
    // half-second margin keeps the last pulse fully inside the trace.
    let spec = SynthSpec::<f64> {
        duration_s: 30.5,
        mean_hr_bpm: 60.0,
        hrv_std_s: 0.0,
        writing_motion_amplitude_g: 0.0,
        noise_std_g: 0.0,
        ..SynthSpec::default()
    };
    let (truth, beats) = run_pipeline(&spec);
    assert_eq!(beats.len(), truth.len());
    for (k, (&t, &b)) in truth.iter().zip(beats.beat_times_s()).enumerate() {
        assert!((t - (k as f64 + 1.0)).abs() < 1e-9, "truth beat {k} at {t}");
        assert!((b - t).abs() < 0.02, "beat {k}: detected {b}, truth {t}");
    }
}

#[test]
fn clean_run_beats_land_within_half_pulse_width() {
    let spec = SynthSpec::<f64> {
        duration_s: 60.0,
        writing_motion_amplitude_g: 0.0,
        noise_std_g: 0.0,
        seed: 5,
        ..SynthSpec::default()
    };
    let (truth, beats) = run_pipeline(&spec);
    let half_width = spec.pulse_width_s / 2.0;
    assert_eq!(beats.len(), truth.len());
    for (&t, &b) in truth.iter().zip(beats.beat_times_s()) {
        assert!((b - t).abs() <= half_width, "detected {b} vs truth {t}");
    }
}

#[test]
fn default_preset_recovers_count_and_rate() {
    let spec = SynthSpec::<f64> {
        seed: 17,
        ..SynthSpec::default()
    };
    let (truth, beats) = run_pipeline(&spec);
    assert!(
        (beats.len() as i64 - truth.len() as i64).abs() <= 1,
        "{} detected vs {} truth",
        beats.len(),
        truth.len()
    );
    let truth_hr = summarize(&BeatSeries::new(truth).unwrap())
        .unwrap()
        .mean_hr_bpm;
    let got_hr = summarize(&beats).unwrap().mean_hr_bpm;
    assert!((truth_hr - got_hr).abs() <= 0.76, "{got_hr} vs {truth_hr}");
}

#[test]
fn expected_beat_count_over_twenty_seeds() {
    // duration * hr / 60 = 360 beats; the seed-averaged count stays within 3.
    let mut total = 0usize;
    for seed in 0..20 {
        let spec = SynthSpec::<f64> {
            seed,
            ..SynthSpec::default()
        };
        total += generate(&spec).unwrap().truth_beats_s().len();
    }
    let mean_count = total as f64 / 20.0;
    assert!((mean_count - 360.0).abs() <= 3.0, "mean count {mean_count}");
}

#[test]
fn five_percent_dropout_shows_in_match_rate() {
    let spec = SynthSpec::<f64> {
        seed: 23,
        ..SynthSpec::default()
    };
    let st = generate(&spec).unwrap();
    let mag = magnitude(st.trace());
    let filt = design_butterworth(&FilterSpec::new(4, 2.0), 100.0).unwrap();
    let filtered = apply_filter(&mag, &filt, FilterMode::ZeroPhase).unwrap();
    let beats = detect_beats(&filtered, &DetectorSpec::default()).unwrap();

    // Delete every 20th detected beat, as if the detector had missed them.
    let thinned: Vec<f64> = beats
        .beat_times_s()
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1) % 20 != 0)
        .map(|(_, &t)| t)
        .collect();
    let thinned = BeatSeries::new(thinned).unwrap();

    let reference = ReferenceBeats::from_beat_times(st.truth_beats_s().to_vec()).unwrap();
    let report = build_report(&reference, &thinned, &AlignmentSpec::default()).unwrap();
    assert!(
        (report.match_rate - 0.95).abs() <= 0.02,
        "match rate {}",
        report.match_rate
    );
}

#[test]
fn sweep_on_clean_seventy_bpm_trace() {
    let spec = SynthSpec::<f64> {
        mean_hr_bpm: 70.0,
        seed: 3,
        ..SynthSpec::default()
    };
    let st = generate(&spec).unwrap();
    let mag = magnitude(st.trace());
    let reference = ReferenceBeats::from_beat_times(st.truth_beats_s().to_vec()).unwrap();

    let result = sweep(&mag, &reference, &SweepSpec::default()).unwrap();
    assert!(
        (1.5..=3.0).contains(&result.best_cutoff_hz),
        "best cutoff {}",
        result.best_cutoff_hz
    );
    // best cutoff is a grid member
    assert!(result
        .per_cutoff
        .iter()
        .any(|r| r.cutoff_hz == result.best_cutoff_hz));
    // deterministic despite parallel per-cutoff evaluation
    let again = sweep(&mag, &reference, &SweepSpec::default()).unwrap();
    assert_eq!(result, again);

    // single-candidate sweep picks the only candidate
    let single = SweepSpec {
        cutoffs_hz: vec![2.0],
        ..SweepSpec::default()
    };
    assert_eq!(
        sweep(&mag, &reference, &single).unwrap().best_cutoff_hz,
        2.0
    );
}

#[test]
fn detected_intervals_reconstruct_beat_times() {
    let spec = SynthSpec::<f64> {
        duration_s: 120.0,
        seed: 7,
        ..SynthSpec::default()
    };
    let (_, beats) = run_pipeline(&spec);
    let times = beats.beat_times_s();
    let intervals = beats.intervals_s();
    assert_eq!(intervals.len(), times.len() - 1);
    for (i, dt) in intervals.iter().enumerate() {
        assert_eq!(*dt, times[i + 1] - times[i]);
    }
    assert!(intervals.iter().all(|&dt| dt >= 0.33));
}

#[test]
fn pipeline_runs_in_single_precision() {
    // The whole chain is generic over the scalar; f32 carries a short run.
    let spec = SynthSpec::<f32> {
        duration_s: 60.0,
        seed: 2,
        ..SynthSpec::default()
    };
    let st = generate(&spec).unwrap();
    let mag = magnitude(st.trace());
    let filt = design_butterworth(&FilterSpec::new(4, 2.0f32), 100.0).unwrap();
    let filtered = apply_filter(&mag, &filt, FilterMode::ZeroPhase).unwrap();
    let beats = detect_beats(&filtered, &DetectorSpec::default()).unwrap();
    let truth = st.truth_beats_s();
    assert!(
        (beats.len() as i64 - truth.len() as i64).abs() <= 1,
        "{} detected vs {} truth",
        beats.len(),
        truth.len()
    );
    let truth_hr = summarize(&BeatSeries::new(truth.to_vec()).unwrap())
        .unwrap()
        .mean_hr_bpm;
    let got_hr = summarize(&beats).unwrap().mean_hr_bpm;
    assert!((truth_hr - got_hr).abs() <= 0.76, "{got_hr} vs {truth_hr}");
}

#[test]
fn zero_phase_keeps_tones_at_lag_zero() {
    // Cross-correlation of a band-limited tone with its filtered version
    // peaks at lag 0; the causal filter shows its group delay instead.
    let fs = 100.0;
    let n = 2000;
    let filt = design_butterworth(&FilterSpec::new(4, 2.0), fs).unwrap();
    for freq in [0.5, 1.0, 1.5] {
        let tone: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect();
        let signal = penbeat::dsp::Signal::new(fs, 0.0, tone.clone()).unwrap();
        let out = apply_filter(&signal, &filt, FilterMode::ZeroPhase).unwrap();

        let max_lag = (fs / (4.0 * freq)) as i64;
        let core = 200..n - 200;
        let xcorr = |lag: i64| -> f64 {
            core.clone()
                .map(|i| tone[i] * out.values()[(i as i64 + lag) as usize])
                .sum()
        };
        let best = (-max_lag..=max_lag)
            .max_by(|a, b| xcorr(*a).partial_cmp(&xcorr(*b)).unwrap())
            .unwrap();
        assert_eq!(best, 0, "freq {freq}: peak at lag {best}");
    }
}

#[test]
fn amplitude_scaling_leaves_beat_times_alone() {
    let spec = SynthSpec::<f64> {
        duration_s: 60.0,
        seed: 11,
        ..SynthSpec::default()
    };
    let st = generate(&spec).unwrap();
    let mag = magnitude(st.trace());
    let filt = design_butterworth(&FilterSpec::new(4, 2.0), 100.0).unwrap();
    let filtered = apply_filter(&mag, &filt, FilterMode::ZeroPhase).unwrap();
    let beats = detect_beats(&filtered, &DetectorSpec::default()).unwrap();

    let scaled = penbeat::dsp::Signal::new(
        100.0,
        filtered.start_time_s(),
        filtered.values().iter().map(|v| v * 7.5).collect(),
    )
    .unwrap();
    let beats_scaled = detect_beats(&scaled, &DetectorSpec::default()).unwrap();
    assert_eq!(beats.len(), beats_scaled.len());
    for (a, b) in beats.beat_times_s().iter().zip(beats_scaled.beat_times_s()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn alignment_beats_a_constant_device_offset() {
    // A candidate running 0.4 s late still matches inside the 0.5 s window;
    // median-shift alignment centers the offset out entirely.
    let spec = SynthSpec::<f64> {
        duration_s: 120.0,
        seed: 29,
        ..SynthSpec::default()
    };
    let st = generate(&spec).unwrap();
    let reference = ReferenceBeats::from_beat_times(st.truth_beats_s().to_vec()).unwrap();
    let late: Vec<f64> = st.truth_beats_s().iter().map(|t| t + 0.4).collect();
    let candidate = BeatSeries::new(late).unwrap();

    let raw = align(&reference, &candidate, &AlignmentSpec::default()).unwrap();
    assert_eq!(raw.len(), reference.len());

    let shifted = align(
        &reference,
        &candidate,
        &AlignmentSpec {
            tolerance_s: 0.1,
            offset_mode: penbeat::validate::OffsetMode::MedianShift,
        },
    )
    .unwrap();
    assert_eq!(shifted.len(), reference.len());
    assert!((shifted.offset_s() - (-0.4)).abs() < 1e-9);
}
