//! Reference (whole-matrix) DTW, the fixed-start normalized variant used as
//! a verification oracle, and the z-normalized DTW retrieval-quality metric.

use serde::{Deserialize, Serialize};

use crate::prefix_norm::{prefix_normalize, znormalize, PreparedQuery};
use crate::{Error, Result};

/// Pointwise cost applied to a scalar difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CostNorm {
    /// Absolute difference (default).
    #[default]
    Abs,
    /// Squared difference.
    Squared,
}

impl CostNorm {
    #[inline]
    pub fn apply(self, diff: f64) -> f64 {
        match self {
            CostNorm::Abs => diff.abs(),
            CostNorm::Squared => diff * diff,
        }
    }
}

impl std::str::FromStr for CostNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(CostNorm::Abs),
            "squared" => Ok(CostNorm::Squared),
            other => Err(Error::Config(format!("unknown cost norm `{other}`"))),
        }
    }
}

/// Optimal alignment between two whole sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingResult {
    pub distance: f64,
    /// Index pairs `(i, j)` from `(0, 0)` to `(len(x)-1, len(y)-1)`,
    /// advancing by `(1,0)`, `(0,1)` or `(1,1)` at each step.
    pub path: Vec<(usize, usize)>,
}

/// Dynamic time warping distance and path between two sequences.
pub fn dtw(x: &[f64], y: &[f64]) -> Result<WarpingResult> {
    dtw_with(x, y, CostNorm::Abs, None)
}

/// DTW with a configurable pointwise cost and an optional Sakoe-Chiba band.
///
/// The band constrains cells to `|i/(n-1) - j/(m-1)| <= r` (relative
/// positions), so `r >= 1` is equivalent to no constraint.
pub fn dtw_with(x: &[f64], y: &[f64], cost: CostNorm, band: Option<f64>) -> Result<WarpingResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if let Some(j) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(j));
    }
    let n = x.len();
    let m = y.len();
    let in_band = |i: usize, j: usize| -> bool {
        match band {
            None => true,
            Some(r) => {
                let pi = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let pj = if m > 1 { j as f64 / (m - 1) as f64 } else { 0.0 };
                (pi - pj).abs() <= r
            }
        }
    };
    let mut d = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j) {
                continue;
            }
            let c = cost.apply(x[i] - y[j]);
            let best = predecessor_min(&d, m, i, j);
            d[i * m + j] = c + best;
        }
    }
    let distance = d[n * m - 1];
    let path = backtrack(&d, m, n - 1, m - 1);
    Ok(WarpingResult { distance, path })
}

/// Minimum over the three DTW predecessors with the corner boundary:
/// `D(-1,-1) = 0`, everything else outside the matrix is infinite.
#[inline]
fn predecessor_min(d: &[f64], m: usize, i: usize, j: usize) -> f64 {
    if i == 0 && j == 0 {
        return 0.0;
    }
    let diag = if i > 0 && j > 0 { d[(i - 1) * m + (j - 1)] } else { f64::INFINITY };
    let vert = if i > 0 { d[(i - 1) * m + j] } else { f64::INFINITY };
    let horiz = if j > 0 { d[i * m + (j - 1)] } else { f64::INFINITY };
    diag.min(vert).min(horiz)
}

/// Recover a path by walking predecessors; ties prefer the diagonal, then
/// the vertical `(i-1, j)`, then the horizontal `(i, j-1)` step.
fn backtrack(d: &[f64], m: usize, end_i: usize, end_j: usize) -> Vec<(usize, usize)> {
    let mut path = vec![(end_i, end_j)];
    let (mut i, mut j) = (end_i, end_j);
    while i > 0 || j > 0 {
        let chosen = predecessor_min(d, m, i, j);
        let diag = if i > 0 && j > 0 { d[(i - 1) * m + (j - 1)] } else { f64::INFINITY };
        let vert = if i > 0 { d[(i - 1) * m + j] } else { f64::INFINITY };
        if diag == chosen {
            i -= 1;
            j -= 1;
        } else if vert == chosen {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    path
}

/// Normalized DTW distance between a stream slice and a prepared query, with
/// the candidate start fixed at the first element of the slice.
///
/// Each slice point is prefix-normalized from that fixed start and compared
/// to the prefix-normalized query value, with the difference attenuated by
/// the query's amplification factor for the aligned position; rows whose
/// factor is the infinite sentinel cost nothing.
pub fn dnorm_fixed_start(
    stream_slice: &[f64],
    query: &PreparedQuery,
    cost: CostNorm,
) -> Result<(f64, Vec<(usize, usize)>)> {
    if stream_slice.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sp = prefix_normalize(stream_slice)?;
    let n = sp.len();
    let m = query.len();
    let qp = query.pnorm();
    let eta = query.eta();
    let mut d = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let c = if eta[j].is_infinite() { 0.0 } else { cost.apply((sp[i] - qp[j]) / eta[j]) };
            d[i * m + j] = c + predecessor_min(&d, m, i, j);
        }
    }
    let distance = d[n * m - 1];
    let path = backtrack(&d, m, n - 1, m - 1);
    Ok((distance, path))
}

/// DTW between the z-normalized versions of two sequences; the
/// retrieval-quality metric.
pub fn znorm_dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateInput("fewer than 2 samples"));
    }
    let za = znormalize(a)?;
    let zb = znormalize(b)?;
    Ok(dtw(&za, &zb)?.distance)
}
