//! The streaming matcher: a two-column subsequence time warping matrix whose
//! per-cell cost dynamically z-normalizes the incoming sample against the
//! candidate window of each predecessor cell.
//!
//! Every cell carries the accumulated distance together with the beginning
//! tick of its best candidate. Because the normalization window of a cell
//! depends on the predecessor's beginning, the cost is evaluated per
//! predecessor before taking the minimum. Row 0 opens a zero-cost fresh
//! candidate at every tick, so no restart bookkeeping is needed; memory stays
//! proportional to the query length regardless of how long the stream runs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dtw::CostNorm;
use crate::prefix_norm::{dyn_norm_value, PreparedQuery, RollingPrefixSums, SIGMA_FLOOR};
use crate::{Error, Result};

/// One cell of the subsequence time warping matrix: accumulated distance and
/// the beginning tick of the candidate it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StwmCell {
    pub dist: f64,
    pub begin: usize,
}

impl StwmCell {
    const DISABLED: StwmCell = StwmCell { dist: f64::INFINITY, begin: 0 };
}

/// How a match was reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Reported the moment the threshold was crossed (real-time monitoring).
    Instant,
    /// Confirmed optimal among all overlapping candidates.
    Disjoint,
    /// Admitted to the running best-k list.
    Topk,
}

/// A reported subsequence match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEvent {
    pub start: usize,
    pub end: usize,
    pub distance: f64,
    pub emitted_at: usize,
    pub kind: EventKind,
}

/// Reporting mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Report every tick whose full-query distance is within `epsilon`.
    Monitor { epsilon: f64 },
    /// Report non-overlapping matches, each locally optimal among all
    /// candidates that overlap it.
    Disjoint { epsilon: f64 },
    /// The `k` best disjoint matches; the admission threshold adapts to the
    /// current k-th best distance.
    TopK { k: usize },
}

/// Shared reporting state machine for the disjoint / top-k rules, used by
/// both the dynamic-normalization matcher and the fixed-window baseline.
#[derive(Debug, Clone)]
pub(crate) struct Reporter {
    mode: Mode,
    kind: EventKind,
    best: Vec<MatchEvent>,
    d_min: f64,
    t_s: usize,
    t_e: usize,
}

impl Reporter {
    pub(crate) fn new(mode: Mode) -> Result<Self> {
        match mode {
            Mode::Monitor { epsilon } | Mode::Disjoint { epsilon } => {
                if !(epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(Error::Config(format!(
                        "epsilon must be positive and finite, got {epsilon}"
                    )));
                }
            }
            Mode::TopK { k } => {
                if k == 0 {
                    return Err(Error::Config("k must be at least 1".into()));
                }
            }
        }
        let kind = match mode {
            Mode::Monitor { .. } => EventKind::Instant,
            Mode::Disjoint { .. } => EventKind::Disjoint,
            Mode::TopK { .. } => EventKind::Topk,
        };
        Ok(Self { mode, kind, best: Vec::new(), d_min: f64::INFINITY, t_s: 0, t_e: 0 })
    }

    /// Threshold a new candidate has to beat right now.
    fn admission_threshold(&self) -> f64 {
        match self.mode {
            Mode::Monitor { epsilon } | Mode::Disjoint { epsilon } => epsilon,
            Mode::TopK { k } => {
                if self.best.len() < k {
                    f64::INFINITY
                } else {
                    self.best.iter().map(|e| e.distance).fold(f64::NEG_INFINITY, f64::max)
                }
            }
        }
    }

    fn push_best(&mut self, event: &MatchEvent) {
        if let Mode::TopK { k } = self.mode {
            self.best.push(event.clone());
            if self.best.len() > k {
                let worst = self
                    .best
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.distance.total_cmp(&b.1.distance))
                    .map(|(i, _)| i)
                    .unwrap();
                self.best.swap_remove(worst);
            }
        }
    }

    /// Inspect the freshly computed column; may emit events and disable
    /// cells that overlap an emitted optimum.
    pub(crate) fn observe_column(&mut self, tick: usize, cells: &mut [StwmCell]) -> Vec<MatchEvent> {
        let mut out = Vec::new();
        let top = cells[cells.len() - 1];
        if let Mode::Monitor { epsilon } = self.mode {
            if top.dist <= epsilon {
                out.push(MatchEvent {
                    start: top.begin,
                    end: tick,
                    distance: top.dist,
                    emitted_at: tick,
                    kind: EventKind::Instant,
                });
            }
            return out;
        }
        // Disjoint rule: the held optimum is confirmed once every live cell
        // either cannot beat it or begins after it ends.
        if self.d_min.is_finite()
            && cells.iter().all(|c| c.dist >= self.d_min || c.begin > self.t_e)
        {
            let event = MatchEvent {
                start: self.t_s,
                end: self.t_e,
                distance: self.d_min,
                emitted_at: tick,
                kind: self.kind,
            };
            self.push_best(&event);
            out.push(event);
            self.d_min = f64::INFINITY;
            for c in cells.iter_mut() {
                if c.begin <= self.t_e {
                    c.dist = f64::INFINITY;
                }
            }
        }
        let top = cells[cells.len() - 1];
        let threshold = self.admission_threshold();
        let admit = match self.mode {
            Mode::Disjoint { .. } => top.dist <= threshold,
            Mode::TopK { .. } => top.dist < threshold,
            Mode::Monitor { .. } => unreachable!(),
        };
        if admit && top.dist < self.d_min {
            self.d_min = top.dist;
            self.t_s = top.begin;
            self.t_e = tick;
        }
        out
    }

    /// Flush the held optimum at end of stream. Idempotent.
    pub(crate) fn flush(&mut self, tick: usize) -> Vec<MatchEvent> {
        if matches!(self.mode, Mode::Monitor { .. }) || !self.d_min.is_finite() {
            return Vec::new();
        }
        let mut out = Vec::new();
        if self.d_min <= self.admission_threshold() {
            let event = MatchEvent {
                start: self.t_s,
                end: self.t_e,
                distance: self.d_min,
                emitted_at: tick,
                kind: self.kind,
            };
            self.push_best(&event);
            out.push(event);
        }
        self.d_min = f64::INFINITY;
        out
    }

    /// Current best-k list (top-k mode only; empty otherwise).
    pub(crate) fn best(&self) -> &[MatchEvent] {
        &self.best
    }
}

/// Which predecessor won a cell; retained only in trace mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PredTag {
    Fresh,
    Diag,
    PrevTick,
    SameTick,
}

#[derive(Debug, Clone)]
struct Trace {
    window: usize,
    first_tick: usize,
    tags: VecDeque<Box<[PredTag]>>,
    samples: VecDeque<f64>,
}

impl Trace {
    fn push(&mut self, tags: Box<[PredTag]>, sample: f64) {
        self.tags.push_back(tags);
        self.samples.push_back(sample);
        while self.tags.len() > self.window {
            self.tags.pop_front();
            self.samples.pop_front();
            self.first_tick += 1;
        }
    }
}

/// Matcher configuration.
#[derive(Debug, Clone, Copy)]
pub struct MatcherConfig {
    pub mode: Mode,
    pub cost: CostNorm,
    /// Number of most recent columns to retain for alignment reconstruction.
    /// `None` keeps memory strictly proportional to the query length.
    pub trace_window: Option<usize>,
}

impl MatcherConfig {
    pub fn new(mode: Mode) -> Self {
        Self { mode, cost: CostNorm::Abs, trace_window: None }
    }

    pub fn cost(mut self, cost: CostNorm) -> Self {
        self.cost = cost;
        self
    }

    pub fn trace_window(mut self, window: usize) -> Self {
        self.trace_window = Some(window);
        self
    }
}

/// Streaming matcher state: two matrix columns, the rolling prefix-sum
/// buffers, and the reporting machinery. Single writer; may move between
/// threads between calls.
#[derive(Debug, Clone)]
pub struct Matcher {
    query: PreparedQuery,
    cost: CostNorm,
    prev: Vec<StwmCell>,
    cur: Vec<StwmCell>,
    sums: RollingPrefixSums,
    reporter: Reporter,
    tick: usize,
    trace: Option<Trace>,
}

impl Matcher {
    pub fn new(query: PreparedQuery, config: MatcherConfig) -> Result<Self> {
        let reporter = Reporter::new(config.mode)?;
        let m = query.len();
        let trace = match config.trace_window {
            Some(0) => return Err(Error::Config("trace window must be at least 1".into())),
            Some(w) => Some(Trace {
                window: w,
                first_tick: 0,
                tags: VecDeque::new(),
                samples: VecDeque::new(),
            }),
            None => None,
        };
        Ok(Self {
            query,
            cost: config.cost,
            prev: vec![StwmCell::DISABLED; m],
            cur: vec![StwmCell::DISABLED; m],
            sums: RollingPrefixSums::new(),
            reporter,
            tick: 0,
            trace,
        })
    }

    pub fn query(&self) -> &PreparedQuery {
        &self.query
    }

    /// Next tick to be consumed.
    pub fn tick(&self) -> usize {
        self.tick
    }

    /// Top-row cell of the most recently computed column.
    pub fn top_cell(&self) -> StwmCell {
        self.prev[self.prev.len() - 1]
    }

    /// Smallest candidate beginning in the most recent column.
    pub fn min_begin(&self) -> usize {
        self.prev.iter().map(|c| c.begin).min().unwrap_or(0)
    }

    /// Number of prefix-sum entries currently retained.
    pub fn retained_len(&self) -> usize {
        self.sums.len()
    }

    /// Current best-k list (top-k mode).
    pub fn top_events(&self) -> &[MatchEvent] {
        self.reporter.best()
    }

    /// Cost of extending the candidate that begins at `begin` with the
    /// current sample, aligned to query row `k`.
    #[inline]
    fn cell_cost(&self, begin: usize, t: usize, s_t: f64, k: usize) -> f64 {
        let eta = self.query.eta()[k];
        if eta.is_infinite() {
            return 0.0;
        }
        let (mu, sigma) = self
            .sums
            .window_stats(begin, t)
            .expect("candidate window is retained by construction");
        if sigma < SIGMA_FLOOR {
            // A flat candidate segment cannot be normalized.
            return f64::INFINITY;
        }
        let s_norm = (s_t - mu) / sigma;
        self.cost.apply((s_norm - self.query.pnorm()[k]) / eta)
    }

    #[inline]
    fn extend(&self, pred: StwmCell, t: usize, s_t: f64, k: usize) -> f64 {
        if !pred.dist.is_finite() {
            return f64::INFINITY;
        }
        self.cell_cost(pred.begin, t, s_t, k) + pred.dist
    }

    /// Consume one sample; returns the events emitted at this tick.
    pub fn step(&mut self, s_t: f64) -> Result<Vec<MatchEvent>> {
        if !s_t.is_finite() {
            return Err(Error::NonFinite(self.tick));
        }
        let t = self.tick;
        let m = self.query.len();
        self.sums.append(s_t);

        let mut tags: Option<Vec<PredTag>> = self.trace.as_ref().map(|_| vec![PredTag::Fresh; m]);

        // Row 0 always opens a zero-cost fresh candidate: the single-point
        // window has no spread, so the amplification sentinel zeroes its cost.
        self.cur[0] = StwmCell { dist: 0.0, begin: t };
        for k in 1..m {
            let diag = self.prev[k - 1];
            let prev_tick = self.prev[k];
            let same_tick = self.cur[k - 1];
            let d_diag = self.extend(diag, t, s_t, k);
            let d_prev = self.extend(prev_tick, t, s_t, k);
            let d_same = self.extend(same_tick, t, s_t, k);
            // Tie-break: diagonal, then previous tick, then same tick.
            let mut dist = d_diag;
            let mut begin = diag.begin;
            let mut tag = PredTag::Diag;
            if d_prev < dist {
                dist = d_prev;
                begin = prev_tick.begin;
                tag = PredTag::PrevTick;
            }
            if d_same < dist {
                dist = d_same;
                begin = same_tick.begin;
                tag = PredTag::SameTick;
            }
            self.cur[k] = StwmCell { dist, begin };
            if let Some(tags) = tags.as_mut() {
                tags[k] = tag;
            }
        }

        // Beginnings only move forward, so this can never fail.
        let min_begin = self.cur.iter().map(|c| c.begin).min().unwrap();
        self.sums.trim(min_begin)?;

        let events = self.reporter.observe_column(t, &mut self.cur);

        if let Some(trace) = self.trace.as_mut() {
            trace.push(tags.unwrap().into_boxed_slice(), s_t);
        }
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.tick = t + 1;
        Ok(events)
    }

    /// Flush the held optimum at end of stream (disjoint / top-k modes).
    /// Idempotent; the matcher can keep stepping afterwards.
    pub fn finalize(&mut self) -> Vec<MatchEvent> {
        self.reporter.flush(self.tick)
    }

    /// Dynamically normalized values of an emitted match, one per stream
    /// tick of the interval. Stream points aligned to several query rows
    /// average their per-row normalizations. Requires trace mode.
    pub fn reconstruct_normalized(&self, event: &MatchEvent) -> Result<Vec<f64>> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| Error::Config("matcher was not built with a trace window".into()))?;
        let last_traced = trace.first_tick + trace.tags.len();
        if event.start < trace.first_tick || event.end >= last_traced {
            return Err(Error::TraceExhausted {
                needed: event.start,
                oldest: trace.first_tick,
            });
        }
        let m = self.query.len();
        let len = event.end - event.start + 1;
        let mut rows_per_col: Vec<Vec<usize>> = vec![Vec::new(); len];
        let (mut col, mut row) = (event.end, m - 1);
        loop {
            rows_per_col[col - event.start].push(row);
            if row == 0 {
                break;
            }
            match trace.tags[col - trace.first_tick][row] {
                PredTag::Diag => {
                    col -= 1;
                    row -= 1;
                }
                PredTag::PrevTick => col -= 1,
                PredTag::SameTick => row -= 1,
                PredTag::Fresh => break,
            }
            if col < event.start {
                return Err(Error::TraceExhausted {
                    needed: col,
                    oldest: event.start,
                });
            }
        }
        debug_assert_eq!(col, event.start, "alignment must begin at the event start");

        let eta = self.query.eta();
        let delta = self.query.delta();
        let mut out = Vec::with_capacity(len);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (i, tick) in (event.start..=event.end).enumerate() {
            let s = trace.samples[tick - trace.first_tick];
            sum += s;
            sum_sq += s * s;
            let n = (i + 1) as f64;
            let mu = sum / n;
            let var = sum_sq / n - mu * mu;
            let sigma = if var > 0.0 { var.sqrt() } else { 0.0 };
            let s_norm = if sigma < SIGMA_FLOOR { 0.0 } else { (s - mu) / sigma };
            let rows = &rows_per_col[i];
            let total: f64 = rows.iter().map(|&k| dyn_norm_value(s_norm, eta[k], delta[k])).sum();
            out.push(total / rows.len() as f64);
        }
        Ok(out)
    }
}
