//! Prefix (expanding-window) statistics, prefix normalization, and the
//! rolling prefix-sum buffers that back the streaming matcher.
//!
//! Prefix normalization scales each point of a sequence using only the
//! samples between a fixed start and the point itself, so appending new
//! samples never changes previously normalized values. The amplification
//! factor `eta` and the shift factor `delta` relate a prefix-normalized
//! value back to its whole-interval z-normalized counterpart; both are
//! invariant under affine amplitude transforms and uniform time scaling,
//! which is what makes window-free normalization possible.

use std::collections::VecDeque;

use crate::{Error, Result};

/// Standard deviations below this floor are treated as zero (a constant
/// window cannot be normalized).
pub const SIGMA_FLOOR: f64 = 1e-12;

fn check_finite(seq: &[f64]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = seq.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// Mean and population standard deviation of every prefix of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixStats {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

/// Expanding-window mean and population standard deviation, one entry per
/// prefix `seq[0..=k]`.
pub fn prefix_stats(seq: &[f64]) -> Result<PrefixStats> {
    check_finite(seq)?;
    let mut means = Vec::with_capacity(seq.len());
    let mut stddevs = Vec::with_capacity(seq.len());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (k, &s) in seq.iter().enumerate() {
        sum += s;
        sum_sq += s * s;
        let n = (k + 1) as f64;
        let mu = sum / n;
        let var = sum_sq / n - mu * mu;
        means.push(mu);
        // Differencing can dip slightly below zero for constant data.
        stddevs.push(if var > 0.0 { var.sqrt() } else { 0.0 });
    }
    Ok(PrefixStats { means, stddevs })
}

/// Normalize each point against the statistics of its own prefix.
///
/// Points whose prefix is (numerically) constant normalize to zero; this
/// includes the first point, whose single-sample prefix has no spread.
pub fn prefix_normalize(seq: &[f64]) -> Result<Vec<f64>> {
    let stats = prefix_stats(seq)?;
    Ok(seq
        .iter()
        .zip(stats.means.iter().zip(&stats.stddevs))
        .map(|(&s, (&mu, &sd))| if sd < SIGMA_FLOOR { 0.0 } else { (s - mu) / sd })
        .collect())
}

/// Amplification factors `eta[k] = sigma_full / sigma_prefix(k)` and shift
/// factors `delta[k] = (mu_prefix(k) - mu_full) / sigma_full`.
///
/// A degenerate prefix yields the `+inf` sentinel for `eta` (a single point
/// has no spread to amplify). The last entries are exactly `1` and `0`.
pub fn scale_factors(seq: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if seq.len() < 2 {
        return Err(Error::DegenerateQuery("fewer than 2 samples"));
    }
    let stats = prefix_stats(seq)?;
    let sigma_full = *stats.stddevs.last().unwrap();
    let mu_full = *stats.means.last().unwrap();
    if sigma_full < SIGMA_FLOOR {
        return Err(Error::DegenerateQuery("constant sequence"));
    }
    let eta = stats
        .stddevs
        .iter()
        .map(|&sd| if sd < SIGMA_FLOOR { f64::INFINITY } else { sigma_full / sd })
        .collect();
    let delta = stats.means.iter().map(|&mu| (mu - mu_full) / sigma_full).collect();
    Ok((eta, delta))
}

/// Whole-sequence z-normalization (zero mean, unit population std).
pub fn znormalize(seq: &[f64]) -> Result<Vec<f64>> {
    check_finite(seq)?;
    let stats = prefix_stats(seq)?;
    let mu = *stats.means.last().unwrap();
    let sd = *stats.stddevs.last().unwrap();
    if sd < SIGMA_FLOOR {
        return Err(Error::DegenerateInput("constant sequence"));
    }
    Ok(seq.iter().map(|&s| (s - mu) / sd).collect())
}

/// Map a prefix-normalized value to the dynamically normalized scale of its
/// aligned query position: `s' / eta + delta`. The infinite-`eta` sentinel
/// collapses the value to `delta`.
#[inline]
pub fn dyn_norm_value(s_prefix_norm: f64, eta_k: f64, delta_k: f64) -> f64 {
    debug_assert!(eta_k > 0.0);
    if eta_k.is_infinite() {
        delta_k
    } else {
        s_prefix_norm / eta_k + delta_k
    }
}

/// A query prepared for streaming matching: raw samples, their
/// prefix-normalized values, and the per-position scale factors.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    raw: Vec<f64>,
    pnorm: Vec<f64>,
    eta: Vec<f64>,
    delta: Vec<f64>,
}

impl PreparedQuery {
    /// Prefix-normalize the query and compute its scale factors.
    ///
    /// The query must have at least two samples and a nonzero spread.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        let (eta, delta) = scale_factors(&raw)?;
        let pnorm = prefix_normalize(&raw)?;
        Ok(Self { raw, pnorm, eta, delta })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Prefix-normalized query values `q'_k`.
    pub fn pnorm(&self) -> &[f64] {
        &self.pnorm
    }

    /// Amplification factors; `eta[0]` is the `+inf` sentinel.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Shift factors; `delta[last]` is exactly zero.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }
}

/// Rolling buffers of prefix sums and prefix sums of squares.
///
/// Supports O(1) append at the back, O(1) removal at the front, and O(1)
/// random access, which is what the per-tick window statistics need. Entry
/// `i` holds the sums over stream ticks `0..=i`; the virtual entry at index
/// `-1` is zero and never stored.
#[derive(Debug, Clone, Default)]
pub struct RollingPrefixSums {
    ps: VecDeque<f64>,
    pss: VecDeque<f64>,
    first_index: usize,
}

impl RollingPrefixSums {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of retained entries.
    pub fn len(&self) -> usize {
        self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ps.is_empty()
    }

    /// Stream tick of the earliest retained entry.
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    /// Stream tick of the latest retained entry.
    pub fn last_index(&self) -> Option<usize> {
        if self.ps.is_empty() {
            None
        } else {
            Some(self.first_index + self.ps.len() - 1)
        }
    }

    /// Append the sums for the next tick.
    pub fn append(&mut self, sample: f64) {
        debug_assert!(sample.is_finite());
        let (ps_last, pss_last) = match self.ps.back() {
            Some(&p) => (p, *self.pss.back().unwrap()),
            None => (0.0, 0.0),
        };
        self.ps.push_back(ps_last + sample);
        self.pss.push_back(pss_last + sample * sample);
    }

    /// Drop entries no longer needed once every live candidate begins at
    /// `new_min_begin` or later. Keeps entry `new_min_begin - 1` (needed to
    /// difference windows starting exactly there).
    pub fn trim(&mut self, new_min_begin: usize) -> Result<()> {
        let target_front = new_min_begin.saturating_sub(1);
        if target_front < self.first_index {
            return Err(Error::TrimOutOfRange {
                requested: new_min_begin,
                first: self.first_index,
            });
        }
        match self.last_index() {
            Some(last) if target_front <= last => {}
            _ => {
                if target_front > self.first_index {
                    return Err(Error::TrimOutOfRange {
                        requested: new_min_begin,
                        first: self.first_index,
                    });
                }
            }
        }
        while self.first_index < target_front {
            self.ps.pop_front();
            self.pss.pop_front();
            self.first_index += 1;
        }
        Ok(())
    }

    /// Mean and population standard deviation of the stream window
    /// `[begin, end]`, from prefix-sum differences.
    pub fn window_stats(&self, begin: usize, end: usize) -> Result<(f64, f64)> {
        let last = self.last_index().ok_or(Error::WindowOutOfRange {
            begin,
            end,
            first: self.first_index,
            last: 0,
        })?;
        let lower_ok = begin == 0 && self.first_index == 0 || begin > self.first_index;
        if !lower_ok || begin > end || end > last {
            return Err(Error::WindowOutOfRange {
                begin,
                end,
                first: self.first_index,
                last,
            });
        }
        let at = |i: usize| (self.ps[i - self.first_index], self.pss[i - self.first_index]);
        let (ps_t, pss_t) = at(end);
        let (ps_b, pss_b) = if begin == 0 { (0.0, 0.0) } else { at(begin - 1) };
        let n = (end - begin + 1) as f64;
        let mu = (ps_t - ps_b) / n;
        let var = (pss_t - pss_b) / n - mu * mu;
        let sigma = if var > 0.0 { var.sqrt() } else { 0.0 };
        Ok((mu, sigma))
    }
}
