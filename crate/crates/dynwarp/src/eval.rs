//! Scoring (overlap, recall, retrieval quality), per-tick timing
//! measurement, and the analytic delay model.

use std::time::Instant;

use serde::Serialize;

use crate::engine::MatchEvent;
use crate::synth::TruthInterval;
use crate::{Error, Result};

/// Overlap percentage of two inclusive index intervals: intersection length
/// over union length, zero when they do not intersect.
pub fn overlap(a: (usize, usize), b: (usize, usize)) -> Result<f64> {
    let ((i, j), (i2, j2)) = (a, b);
    if i > j || i2 > j2 {
        return Err(Error::Config(format!("malformed interval ({a:?}, {b:?})")));
    }
    let lo = j.min(j2);
    let hi = i.max(i2);
    if lo < hi {
        return Ok(0.0);
    }
    Ok((lo - hi + 1) as f64 / (j.max(j2) - i.min(i2) + 1) as f64)
}

/// Per-event scoring detail.
#[derive(Debug, Clone, Serialize)]
pub struct EventScore {
    pub start: usize,
    pub end: usize,
    pub distance: f64,
    /// Best overlap against any truth interval of the scored class.
    pub best_overlap: f64,
    /// Label of the truth interval this event retrieved, if any.
    pub matched_label: Option<String>,
}

/// Retrieval scores for one query against a labeled stream.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub matched: usize,
    pub total_truth: usize,
    pub total_events: usize,
    pub per_event: Vec<EventScore>,
}

/// Score events against ground truth. A truth interval counts as retrieved
/// when an event overlaps it by at least `alpha_min`; assignment is greedy
/// one-to-one by descending overlap. `label` restricts the truth set to one
/// class (events are always scored as given).
pub fn score(
    events: &[MatchEvent],
    truth: &[TruthInterval],
    alpha_min: f64,
    label: Option<&str>,
) -> ScoreReport {
    let truth: Vec<&TruthInterval> = truth
        .iter()
        .filter(|t| label.map_or(true, |l| t.label == l))
        .collect();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    let mut best = vec![0.0f64; events.len()];
    for (e, ev) in events.iter().enumerate() {
        for (t, tr) in truth.iter().enumerate() {
            let a = overlap((ev.start, ev.end), (tr.start, tr.end)).unwrap_or(0.0);
            if a > best[e] {
                best[e] = a;
            }
            if a >= alpha_min && a > 0.0 {
                pairs.push((e, t, a));
            }
        }
    }
    pairs.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    let mut event_used = vec![false; events.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut matched_label = vec![None; events.len()];
    let mut matched = 0usize;
    for (e, t, _) in pairs {
        if !event_used[e] && !truth_used[t] {
            event_used[e] = true;
            truth_used[t] = true;
            matched_label[e] = Some(truth[t].label.clone());
            matched += 1;
        }
    }
    let recall = if truth.is_empty() { 0.0 } else { matched as f64 / truth.len() as f64 };
    let precision = if events.is_empty() { 0.0 } else { matched as f64 / events.len() as f64 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let per_event = events
        .iter()
        .enumerate()
        .map(|(e, ev)| EventScore {
            start: ev.start,
            end: ev.end,
            distance: ev.distance,
            best_overlap: best[e],
            matched_label: matched_label[e].clone(),
        })
        .collect();
    ScoreReport {
        recall,
        precision,
        f1,
        matched,
        total_truth: truth.len(),
        total_events: events.len(),
        per_event,
    }
}

/// Delay estimation model of the evaluation methodology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMethod {
    /// Processes each sample the moment it arrives.
    DnrtpmLike,
    /// Buffers `m` subsequent samples before a sample can be processed.
    Buffered,
}

/// Average reporting delay in seconds given the mean per-point processing
/// time `dt_p`, the sensor sampling interval `dt_s`, the stream length `n`,
/// and the query length `m`.
pub fn delay_model(dt_p: f64, dt_s: f64, n: usize, m: usize, method: DelayMethod) -> f64 {
    debug_assert!(dt_p > 0.0 && dt_s > 0.0);
    match method {
        DelayMethod::DnrtpmLike => {
            if dt_p < dt_s {
                dt_p
            } else {
                n as f64 * (dt_p - dt_s) / 2.0 + dt_s
            }
        }
        DelayMethod::Buffered => {
            if dt_p < dt_s {
                m as f64 * dt_s + dt_p
            } else {
                n as f64 * (dt_p - dt_s) / 2.0 + (m as f64 + 1.0) * dt_s
            }
        }
    }
}

/// Per-tick timing summary (nanoseconds).
#[derive(Debug, Clone, Serialize)]
pub struct TickStats {
    pub ticks: usize,
    pub mean_ns: f64,
    pub p50_ns: f64,
    pub p99_ns: f64,
    /// Mean per-tick time of each consecutive window of `window_size` ticks.
    pub window_size: usize,
    pub window_means_ns: Vec<f64>,
    /// Ordinary least-squares trend of the window means against the window
    /// index, with confidence intervals for the no-growth check.
    pub slope_ns_per_window: f64,
    pub slope_stderr: f64,
    pub slope_ci95: (f64, f64),
    pub slope_ci99: (f64, f64),
}

/// Ordinary least squares of `ys` against `0..len`: slope, intercept, and
/// the standard error of the slope.
pub fn linear_fit(ys: &[f64]) -> (f64, f64, f64) {
    let n = ys.len() as f64;
    if ys.len() < 3 {
        return (0.0, ys.first().copied().unwrap_or(0.0), 0.0);
    }
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let r = y - (intercept + slope * i as f64);
            r * r
        })
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    (slope, intercept, stderr)
}

/// Time a per-sample step function over a stream, windowing the per-tick
/// wall times for the trend analysis. Single-threaded by design: this
/// measures latency.
pub fn bench_step<F: FnMut(f64)>(mut step: F, samples: &[f64], window_size: usize) -> TickStats {
    let window_size = window_size.max(1);
    let mut per_tick = Vec::with_capacity(samples.len());
    for &s in samples {
        let t0 = Instant::now();
        step(s);
        per_tick.push(t0.elapsed().as_nanos() as f64);
    }
    let ticks = per_tick.len();
    let mean_ns = per_tick.iter().sum::<f64>() / ticks.max(1) as f64;
    let mut sorted = per_tick.clone();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| -> f64 {
        if sorted.is_empty() {
            return 0.0;
        }
        sorted[((sorted.len() - 1) as f64 * q).round() as usize]
    };
    let window_means_ns: Vec<f64> = per_tick
        .chunks(window_size)
        .filter(|c| c.len() == window_size)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let (slope, _, stderr) = linear_fit(&window_means_ns);
    TickStats {
        ticks,
        mean_ns,
        p50_ns: quantile(0.5),
        p99_ns: quantile(0.99),
        window_size,
        window_means_ns,
        slope_ns_per_window: slope,
        slope_stderr: stderr,
        slope_ci95: (slope - 1.96 * stderr, slope + 1.96 * stderr),
        slope_ci99: (slope - 2.576 * stderr, slope + 2.576 * stderr),
    }
}

/// Full evaluation report, serialized as a single JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub matched: usize,
    pub total_truth: usize,
    pub total_events: usize,
    pub alpha_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub per_event: Vec<EventScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_znorm_dtw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_tick_ns: Option<TickSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modeled_delay_s: Option<f64>,
}

/// Compact timing summary embedded in reports.
#[derive(Debug, Clone, Serialize)]
pub struct TickSummary {
    pub mean_ns: f64,
    pub p50_ns: f64,
    pub p99_ns: f64,
}

impl From<&TickStats> for TickSummary {
    fn from(t: &TickStats) -> Self {
        Self { mean_ns: t.mean_ns, p50_ns: t.p50_ns, p99_ns: t.p99_ns }
    }
}

impl EvalReport {
    pub fn from_score(score: ScoreReport, alpha_min: f64, label: Option<String>) -> Self {
        Self {
            recall: score.recall,
            precision: score.precision,
            f1: score.f1,
            matched: score.matched,
            total_truth: score.total_truth,
            total_events: score.total_events,
            alpha_min,
            label,
            per_event: score.per_event,
            mean_znorm_dtw: None,
            per_tick_ns: None,
            modeled_delay_s: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EventKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(start: usize, end: usize) -> MatchEvent {
        MatchEvent { start, end, distance: 0.1, emitted_at: end, kind: EventKind::Disjoint }
    }

    fn tr(start: usize, end: usize, label: &str) -> TruthInterval {
        TruthInterval { start, end, label: label.to_string() }
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap((0, 9), (0, 9)).unwrap(), 1.0);
        assert_eq!(overlap((0, 4), (10, 14)).unwrap(), 0.0);
        assert_relative_eq!(overlap((0, 9), (5, 14)).unwrap(), 5.0 / 15.0, epsilon = 1e-12);
        assert!(overlap((5, 2), (0, 9)).is_err());
    }

    #[test]
    fn score_perfect_and_empty() {
        let truth = vec![tr(0, 9, "a"), tr(20, 29, "a")];
        let events = vec![ev(0, 9), ev(20, 29)];
        let r = score(&events, &truth, 0.5, Some("a"));
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.f1, 1.0);
        let none = score(&[], &truth, 0.5, Some("a"));
        assert_eq!(none.recall, 0.0);
    }

    #[test]
    fn score_threshold_semantics() {
        // 30 plants; every event overlaps its plant by exactly 0.6.
        let mut truth = Vec::new();
        let mut events = Vec::new();
        for i in 0..30 {
            let s = i * 100;
            truth.push(tr(s, s + 9, "a"));
            // Overlap (s+4..s+9 vs s..s+9) = 6/10.
            events.push(ev(s + 4, s + 9));
        }
        assert_eq!(score(&events, &truth, 0.5, Some("a")).recall, 1.0);
        // Events overlapping only 0.4 fall below the default threshold.
        let weak: Vec<MatchEvent> = (0..30).map(|i| ev(i * 100 + 6, i * 100 + 9)).collect();
        assert_eq!(score(&weak, &truth, 0.5, Some("a")).recall, 0.0);
    }

    #[test]
    fn score_respects_class_label_and_one_to_one_assignment() {
        let truth = vec![tr(0, 9, "a"), tr(0, 9, "b")];
        let events = vec![ev(0, 9)];
        let r = score(&events, &truth, 0.5, Some("a"));
        assert_eq!(r.total_truth, 1);
        assert_eq!(r.recall, 1.0);
        // One event cannot retrieve two truths.
        let both = score(&events, &truth, 0.5, None);
        assert_eq!(both.matched, 1);
        assert_eq!(both.total_truth, 2);
        assert_eq!(both.recall, 0.5);
    }

    #[test]
    fn delay_model_branch_values() {
        assert!((delay_model(0.001, 0.004, 1000, 100, DelayMethod::DnrtpmLike) - 0.001).abs() < 1e-12);
        assert!((delay_model(0.001, 0.004, 1000, 100, DelayMethod::Buffered) - 0.401).abs() < 1e-12);
        assert!((delay_model(0.005, 0.004, 1000, 100, DelayMethod::DnrtpmLike) - 0.504).abs() < 1e-12);
    }

    #[test]
    fn delay_model_continuous_at_branch_boundary() {
        let dt = 0.004;
        let below = delay_model(dt - 1e-12, dt, 1000, 50, DelayMethod::DnrtpmLike);
        let at = delay_model(dt, dt, 1000, 50, DelayMethod::DnrtpmLike);
        assert!((at - below).abs() <= dt);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let ys: Vec<f64> = (0..50).map(|i| 3.0 + 0.5 * i as f64).collect();
        let (slope, intercept, stderr) = linear_fit(&ys);
        assert_relative_eq!(slope, 0.5, epsilon = 1e-12);
        assert_relative_eq!(intercept, 3.0, epsilon = 1e-12);
        assert!(stderr < 1e-9);
    }

    #[test]
    fn linear_fit_flat_noise_has_insignificant_slope() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let ys: Vec<f64> = (0..200).map(|_| 100.0 + rng.random_range(-1.0..1.0)).collect();
        let (slope, _, stderr) = linear_fit(&ys);
        assert!(slope.abs() < 4.0 * stderr, "slope {slope} stderr {stderr}");
    }

    #[test]
    fn bench_handles_trivially_short_streams() {
        let stats = bench_step(|_| {}, &[1.0; 10], 10_000);
        assert_eq!(stats.ticks, 10);
        assert!(stats.mean_ns >= 0.0);
        assert!(stats.window_means_ns.is_empty());
    }

    proptest! {
        #[test]
        fn prop_overlap_symmetric_and_bounded(
            a0 in 0usize..1000, alen in 0usize..100,
            b0 in 0usize..1000, blen in 0usize..100,
        ) {
            let a = (a0, a0 + alen);
            let b = (b0, b0 + blen);
            let ab = overlap(a, b).unwrap();
            let ba = overlap(b, a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn prop_score_monotone_in_events(
            n_truth in 1usize..8,
            n_events in 0usize..8,
            extra_start in 0usize..800,
        ) {
            let truth: Vec<TruthInterval> = (0..n_truth).map(|i| tr(i * 100, i * 100 + 9, "a")).collect();
            let events: Vec<MatchEvent> = (0..n_events).map(|i| ev(i * 100, i * 100 + 9)).collect();
            let before = score(&events, &truth, 0.5, Some("a")).recall;
            let mut more = events.clone();
            more.push(ev(extra_start, extra_start + 9));
            let after = score(&more, &truth, 0.5, Some("a")).recall;
            prop_assert!(after >= before);
        }
    }
}
