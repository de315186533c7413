//! Fixed-length sliding-window z-normalization baseline: a streaming matcher
//! that normalizes each sample over the trailing `w` samples and runs the
//! plain subsequence warping recurrence on the normalized values.
//!
//! This is the comparison point for the dynamic-normalization engine: it
//! needs the pattern's intrinsic duration as its window length to normalize
//! correctly, and degrades when the hidden patterns are time-scaled.

use std::collections::VecDeque;

use crate::dtw::CostNorm;
use crate::engine::{MatchEvent, Mode, Reporter, StwmCell};
use crate::prefix_norm::{znormalize, SIGMA_FLOOR};
use crate::{Error, Result};

/// Z-normalize each point over the trailing `w` samples ending at it; the
/// first `w - 1` points use the prefix available so far. Degenerate windows
/// normalize to zero.
pub fn fixed_window_znorm(stream: &[f64], w: usize) -> Result<Vec<f64>> {
    if w < 2 {
        return Err(Error::Config(format!("window length must be at least 2, got {w}")));
    }
    if stream.len() < w {
        return Err(Error::Config(format!(
            "stream of {} samples is shorter than the window {w}",
            stream.len()
        )));
    }
    if let Some(i) = stream.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut out = Vec::with_capacity(stream.len());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (t, &s) in stream.iter().enumerate() {
        sum += s;
        sum_sq += s * s;
        if t >= w {
            let old = stream[t - w];
            sum -= old;
            sum_sq -= old * old;
        }
        let n = (t + 1).min(w) as f64;
        let mu = sum / n;
        let var = sum_sq / n - mu * mu;
        let sigma = if var > 0.0 { var.sqrt() } else { 0.0 };
        out.push(if sigma < SIGMA_FLOOR { 0.0 } else { (s - mu) / sigma });
    }
    Ok(out)
}

/// Streaming matcher over fixed-window-normalized samples.
///
/// The recurrence is the beginning-tracking warping matrix with cost
/// `|z(s_t) - q_z[k]|`; since the normalized value of `s_t` does not depend
/// on the candidate beginning, the cost is shared by all three predecessors.
#[derive(Debug, Clone)]
pub struct FixedWindowMatcher {
    query_z: Vec<f64>,
    window_len: usize,
    cost: CostNorm,
    ring: VecDeque<f64>,
    sum: f64,
    sum_sq: f64,
    prev: Vec<StwmCell>,
    cur: Vec<StwmCell>,
    reporter: Reporter,
    tick: usize,
}

impl FixedWindowMatcher {
    /// The query is z-normalized whole; `window_len` is the normalization
    /// window applied to the stream.
    pub fn new(query: &[f64], window_len: usize, mode: Mode, cost: CostNorm) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::Config(format!(
                "window length must be at least 2, got {window_len}"
            )));
        }
        if query.len() < 2 {
            return Err(Error::DegenerateQuery("fewer than 2 samples"));
        }
        let query_z = znormalize(query).map_err(|_| Error::DegenerateQuery("constant sequence"))?;
        let reporter = Reporter::new(mode)?;
        let m = query_z.len();
        Ok(Self {
            query_z,
            window_len,
            cost,
            ring: VecDeque::with_capacity(window_len + 1),
            sum: 0.0,
            sum_sq: 0.0,
            prev: vec![StwmCell { dist: f64::INFINITY, begin: 0 }; m],
            cur: vec![StwmCell { dist: f64::INFINITY, begin: 0 }; m],
            reporter,
            tick: 0,
        })
    }

    pub fn tick(&self) -> usize {
        self.tick
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Current best-k list (top-k mode).
    pub fn top_events(&self) -> &[MatchEvent] {
        self.reporter.best()
    }

    /// Normalized value of the newest sample over the trailing window.
    fn normalize_incoming(&mut self, s_t: f64) -> f64 {
        self.ring.push_back(s_t);
        self.sum += s_t;
        self.sum_sq += s_t * s_t;
        if self.ring.len() > self.window_len {
            let old = self.ring.pop_front().unwrap();
            self.sum -= old;
            self.sum_sq -= old * old;
        }
        let n = self.ring.len() as f64;
        let mu = self.sum / n;
        let var = self.sum_sq / n - mu * mu;
        let sigma = if var > 0.0 { var.sqrt() } else { 0.0 };
        if sigma < SIGMA_FLOOR {
            0.0
        } else {
            (s_t - mu) / sigma
        }
    }

    /// Consume one sample; returns the events emitted at this tick.
    pub fn step(&mut self, s_t: f64) -> Result<Vec<MatchEvent>> {
        if !s_t.is_finite() {
            return Err(Error::NonFinite(self.tick));
        }
        let t = self.tick;
        let z = self.normalize_incoming(s_t);
        let m = self.query_z.len();
        self.cur[0] = StwmCell { dist: self.cost.apply(z - self.query_z[0]), begin: t };
        for k in 1..m {
            let c = self.cost.apply(z - self.query_z[k]);
            let diag = self.prev[k - 1];
            let prev_tick = self.prev[k];
            let same_tick = self.cur[k - 1];
            let mut dist = diag.dist;
            let mut begin = diag.begin;
            if prev_tick.dist < dist {
                dist = prev_tick.dist;
                begin = prev_tick.begin;
            }
            if same_tick.dist < dist {
                dist = same_tick.dist;
                begin = same_tick.begin;
            }
            self.cur[k] = StwmCell { dist: c + dist, begin };
        }
        let events = self.reporter.observe_column(t, &mut self.cur);
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.tick = t + 1;
        Ok(events)
    }

    /// Flush the held optimum at end of stream. Idempotent.
    pub fn finalize(&mut self) -> Vec<MatchEvent> {
        self.reporter.flush(self.tick)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Matcher, MatcherConfig};
    use crate::eval::{overlap, score};
    use crate::prefix_norm::PreparedQuery;
    use crate::synth::{build_stream, make_shape, ShapeKind, StreamSpec};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn fixed_window_znorm_constant_stream_is_zero() {
        let out = fixed_window_znorm(&[3.0; 20], 5).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fixed_window_znorm_full_length_matches_whole_sequence() {
        let seq: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin() * 3.0 + 1.0).collect();
        let out = fixed_window_znorm(&seq, seq.len()).unwrap();
        let z = znormalize(&seq).unwrap();
        assert_relative_eq!(*out.last().unwrap(), *z.last().unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn fixed_window_znorm_ramp_matches_two_pass_oracle() {
        let seq: Vec<f64> = (0..30).map(|i| 2.0 * i as f64 + 1.0).collect();
        let w = 3;
        let out = fixed_window_znorm(&seq, w).unwrap();
        for t in 2..seq.len() {
            let win = &seq[t + 1 - w..=t];
            let mu = win.iter().sum::<f64>() / w as f64;
            let var = win.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / w as f64;
            let expect = (seq[t] - mu) / var.sqrt();
            assert_relative_eq!(out[t], expect, max_relative = 1e-9);
            // Linear ramp: every full window normalizes its last point the same way.
            assert_relative_eq!(out[t], out[2], max_relative = 1e-9);
        }
    }

    #[test]
    fn fixed_window_znorm_validates_inputs() {
        assert!(fixed_window_znorm(&[1.0, 2.0, 3.0], 1).is_err());
        assert!(fixed_window_znorm(&[1.0, 2.0], 3).is_err());
        assert!(fixed_window_znorm(&[1.0, f64::NAN, 3.0], 2).is_err());
    }

    #[test]
    fn baseline_finds_undistorted_plant_with_intrinsic_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = 96usize;
        let query: Vec<f64> = znormalize(
            &(0..m).map(|i| (i as f64 * 0.25).sin() + 0.03 * i as f64).collect::<Vec<f64>>(),
        )
        .unwrap();
        let mut stream: Vec<f64> = (0..400).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let start = stream.len();
        stream.extend_from_slice(&query);
        let end = stream.len() - 1;
        stream.extend((0..400).map(|_| rng.sample::<f64, _>(StandardNormal)));

        let mut matcher =
            FixedWindowMatcher::new(&query, m, Mode::TopK { k: 1 }, CostNorm::Abs).unwrap();
        for &s in &stream {
            matcher.step(s).unwrap();
        }
        matcher.finalize();
        let best = matcher.top_events().first().expect("one event").clone();
        let a = overlap((best.start, best.end), (start, end)).unwrap();
        assert!(a >= 0.9, "overlap {a}, event {best:?}");
    }

    #[test]
    fn baseline_stays_silent_on_constant_stream() {
        let query: Vec<f64> = (0..32).map(|i| (i as f64 * 0.4).sin()).collect();
        let mut matcher =
            FixedWindowMatcher::new(&query, 32, Mode::Disjoint { epsilon: 0.5 }, CostNorm::Abs)
                .unwrap();
        let mut events = Vec::new();
        for _ in 0..5000 {
            events.extend(matcher.step(4.2).unwrap());
        }
        events.extend(matcher.finalize());
        assert!(events.is_empty());
    }

    #[test]
    fn baseline_rejects_bad_construction() {
        let query: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert!(FixedWindowMatcher::new(&query, 1, Mode::TopK { k: 1 }, CostNorm::Abs).is_err());
        assert!(FixedWindowMatcher::new(&[1.0; 16], 8, Mode::TopK { k: 1 }, CostNorm::Abs).is_err());
        assert!(matches!(
            FixedWindowMatcher::new(&query, 8, Mode::Monitor { epsilon: 0.0 }, CostNorm::Abs),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn baseline_normalization_matches_dynamic_on_matched_interval() {
        // Undistorted plant in matched-scale noise, window = intrinsic
        // length: both normalization mechanisms see nearly the same values.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = 256usize;
        let shape: Vec<f64> = (0..m)
            .map(|i| {
                let x = i as f64 / (m - 1) as f64;
                (6.28 * x).sin() + 0.5 * (18.8 * x).sin()
            })
            .collect();
        let query = znormalize(&shape).unwrap();
        let mut stream: Vec<f64> = (0..600).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let start = stream.len();
        stream.extend_from_slice(&query);
        let end = stream.len() - 1;
        stream.extend((0..600).map(|_| rng.sample::<f64, _>(StandardNormal)));

        let q = PreparedQuery::new(query.clone()).unwrap();
        let cfg = MatcherConfig::new(Mode::TopK { k: 1 }).trace_window(8 * m);
        let mut dyn_matcher = Matcher::new(q, cfg).unwrap();
        for &s in &stream {
            dyn_matcher.step(s).unwrap();
        }
        dyn_matcher.finalize();
        let ev = dyn_matcher.top_events().first().expect("retrieved").clone();
        assert!(overlap((ev.start, ev.end), (start, end)).unwrap() > 0.95);
        let dyn_values = dyn_matcher.reconstruct_normalized(&ev).unwrap();

        let baseline_values = fixed_window_znorm(&stream, m).unwrap();
        let rms = (dyn_values
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let b = baseline_values[ev.start + i];
                (d - b) * (d - b)
            })
            .sum::<f64>()
            / dyn_values.len() as f64)
            .sqrt();
        assert!(rms <= 0.1, "rms = {rms}");
    }

    #[test]
    fn baseline_recall_drops_under_time_scaling_while_dynamic_holds() {
        // 30 plants compressed to half duration; the baseline normalizes
        // over the wrong window and loses plants that the dynamic engine
        // still retrieves.
        let m = 64usize;
        let shape = make_shape(ShapeKind::TriangleWave, m).unwrap();
        let query = znormalize(&shape).unwrap();
        let spec = StreamSpec {
            plants_per_shape: 30,
            gap_len: 2 * m,
            lambda: 2.0,
            ..Default::default()
        };
        let shapes = vec![("triangle_wave".to_string(), shape)];
        let ls = build_stream(&shapes, &spec, 77).unwrap();

        let q = PreparedQuery::new(query.clone()).unwrap();
        let mut dyn_matcher = Matcher::new(q, MatcherConfig::new(Mode::TopK { k: 30 })).unwrap();
        let mut base_matcher =
            FixedWindowMatcher::new(&query, m, Mode::TopK { k: 30 }, CostNorm::Abs).unwrap();
        for &s in &ls.samples {
            dyn_matcher.step(s).unwrap();
            base_matcher.step(s).unwrap();
        }
        dyn_matcher.finalize();
        base_matcher.finalize();

        let dyn_recall =
            score(dyn_matcher.top_events(), &ls.truth, 0.5, Some("triangle_wave")).recall;
        let base_recall =
            score(base_matcher.top_events(), &ls.truth, 0.5, Some("triangle_wave")).recall;
        assert!(
            base_recall < dyn_recall,
            "baseline {base_recall} vs dynamic {dyn_recall}"
        );
    }
}
