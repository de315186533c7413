//! Synthetic shapes, distortion, and labeled stream construction for
//! evaluating the matchers under controlled amplitude and time distortion.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parametric query shapes. Reflected variants negate the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Stairs,
    TriangleWave,
    ArcBlob,
    StairsReflected,
    TriangleWaveReflected,
    ArcBlobReflected,
}

impl ShapeKind {
    pub const BASE: [ShapeKind; 3] = [ShapeKind::Stairs, ShapeKind::TriangleWave, ShapeKind::ArcBlob];

    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Stairs,
        ShapeKind::TriangleWave,
        ShapeKind::ArcBlob,
        ShapeKind::StairsReflected,
        ShapeKind::TriangleWaveReflected,
        ShapeKind::ArcBlobReflected,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ShapeKind::Stairs => "stairs",
            ShapeKind::TriangleWave => "triangle_wave",
            ShapeKind::ArcBlob => "arc_blob",
            ShapeKind::StairsReflected => "stairs_reflected",
            ShapeKind::TriangleWaveReflected => "triangle_wave_reflected",
            ShapeKind::ArcBlobReflected => "arc_blob_reflected",
        }
    }

    pub fn reflected(self) -> ShapeKind {
        match self {
            ShapeKind::Stairs => ShapeKind::StairsReflected,
            ShapeKind::TriangleWave => ShapeKind::TriangleWaveReflected,
            ShapeKind::ArcBlob => ShapeKind::ArcBlobReflected,
            ShapeKind::StairsReflected => ShapeKind::Stairs,
            ShapeKind::TriangleWaveReflected => ShapeKind::TriangleWave,
            ShapeKind::ArcBlobReflected => ShapeKind::ArcBlob,
        }
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown shape `{s}`")))
    }
}

/// Linear interpolation through `(x, y)` breakpoints with `x` in `[0, 1]`.
fn piecewise(points: &[(f64, f64)], x: f64) -> f64 {
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    points.last().unwrap().1
}

/// Deterministic, non-constant query shape of length `m`.
pub fn make_shape(kind: ShapeKind, m: usize) -> Result<Vec<f64>> {
    if m < 16 {
        return Err(Error::Config(format!("shape length must be at least 16, got {m}")));
    }
    let base = match kind {
        ShapeKind::Stairs | ShapeKind::StairsReflected => {
            (0..m).map(|i| (i * 4 / m) as f64).collect::<Vec<f64>>()
        }
        ShapeKind::TriangleWave | ShapeKind::TriangleWaveReflected => {
            // Two teeth of unequal height and slope; its reflection is not a
            // phase-shifted copy, so the pair stays far apart under warping.
            let pts = [(0.0, 0.0), (0.15, 1.0), (0.5, 0.0), (0.65, 0.6), (1.0, 0.0)];
            (0..m)
                .map(|i| piecewise(&pts, i as f64 / (m - 1) as f64))
                .collect()
        }
        ShapeKind::ArcBlob | ShapeKind::ArcBlobReflected => {
            // Half-ellipse bump.
            (0..m)
                .map(|i| {
                    let x = 2.0 * (i as f64 / (m - 1) as f64) - 1.0;
                    (1.0 - x * x).max(0.0).sqrt()
                })
                .collect()
        }
    };
    Ok(match kind {
        ShapeKind::StairsReflected | ShapeKind::TriangleWaveReflected | ShapeKind::ArcBlobReflected => {
            base.into_iter().map(|v| -v).collect()
        }
        _ => base,
    })
}

/// Uniformly rescale a sequence in time to length `round(len / lambda)` by
/// linear interpolation, then apply the affine amplitude transform
/// `amp * v + shift`.
pub fn distort(seq: &[f64], amp: f64, shift: f64, lambda: f64) -> Result<Vec<f64>> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(lambda > 0.0) || !lambda.is_finite() || !amp.is_finite() || !shift.is_finite() {
        return Err(Error::Config(format!(
            "distortion parameters must be finite with lambda > 0 (amp {amp}, shift {shift}, lambda {lambda})"
        )));
    }
    let n = seq.len();
    let out_len = (n as f64 / lambda).round() as usize;
    if out_len < 2 {
        return Err(Error::Config(format!(
            "rescaled length {out_len} is too short (lambda {lambda} on {n} samples)"
        )));
    }
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let pos = j as f64 * (n - 1) as f64 / (out_len - 1) as f64;
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        let i1 = (i0 + 1).min(n - 1);
        let v = seq[i0] * (1.0 - frac) + seq[i1] * frac;
        out.push(amp * v + shift);
    }
    Ok(out)
}

/// A ground-truth pattern interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthInterval {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

/// A synthetic sample stream with labeled pattern plants.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub samples: Vec<f64>,
    pub truth: Vec<TruthInterval>,
    pub seed: u64,
}

/// Stream construction parameters.
#[derive(Debug, Clone)]
pub struct StreamSpec {
    /// Plants per shape.
    pub plants_per_shape: usize,
    /// Standard-normal noise samples before every plant and after the last.
    pub gap_len: usize,
    /// Uniform time-scaling factor; plants have length `round(m / lambda)`.
    pub lambda: f64,
    /// Per-plant amplitude factor range (uniform).
    pub amp_range: (f64, f64),
    /// Per-plant amplitude shift range (uniform).
    pub shift_range: (f64, f64),
    /// Apply `1 / lambda` instead of `lambda` with probability one half,
    /// independently per plant.
    pub lambda_coin_flip: bool,
}

impl Default for StreamSpec {
    fn default() -> Self {
        Self {
            plants_per_shape: 30,
            gap_len: 240,
            lambda: 1.0,
            amp_range: (0.0, 10.0),
            shift_range: (-5.0, 5.0),
            lambda_coin_flip: false,
        }
    }
}

/// Concatenate independently distorted plants of every shape, in randomized
/// order, separated by white noise. Deterministic in the seed.
pub fn build_stream(shapes: &[(String, Vec<f64>)], spec: &StreamSpec, seed: u64) -> Result<LabeledStream> {
    if shapes.is_empty() {
        return Err(Error::Config("at least one shape is required".into()));
    }
    if spec.gap_len == 0 {
        return Err(Error::Config("noise gap must be at least 1 sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..shapes.len())
        .flat_map(|s| std::iter::repeat(s).take(spec.plants_per_shape))
        .collect();
    order.shuffle(&mut rng);

    let mut samples = Vec::new();
    let mut truth = Vec::new();
    for &shape_idx in &order {
        for _ in 0..spec.gap_len {
            samples.push(rng.sample::<f64, _>(StandardNormal));
        }
        let lambda = if spec.lambda_coin_flip && rng.random_bool(0.5) {
            1.0 / spec.lambda
        } else {
            spec.lambda
        };
        let amp = rng.random_range(spec.amp_range.0..spec.amp_range.1);
        let shift = rng.random_range(spec.shift_range.0..spec.shift_range.1);
        let (label, shape) = &shapes[shape_idx];
        let plant = distort(shape, amp, shift, lambda)?;
        let start = samples.len();
        samples.extend_from_slice(&plant);
        truth.push(TruthInterval { start, end: samples.len() - 1, label: label.clone() });
    }
    for _ in 0..spec.gap_len {
        samples.push(rng.sample::<f64, _>(StandardNormal));
    }
    Ok(LabeledStream { samples, truth, seed })
}
