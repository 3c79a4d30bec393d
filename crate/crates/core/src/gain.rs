//! Gain matching: pick the best-correlated frame by windowed Pearson
//! correlation, then fit a single least-squares scale on that frame's raw
//! samples.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio::{ensure_same_shape, MonoSignal};
use crate::error::{Error, Result};
use crate::framing::Framing;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameCorrelation {
    pub frame_index: usize,
    pub start_sample: usize,
    /// `None` when either windowed frame has zero variance.
    pub pearson_r: Option<f64>,
    pub usable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub alpha: f64,
    pub frame_index: usize,
    pub pearson_r: f64,
    pub frame_count: usize,
}

/// Periodic Hann window (denominator `len`).
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Pearson correlation; `None` if either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

pub fn framewise_pearson(
    live_voc: &MonoSignal,
    rec_voc: &MonoSignal,
    frame_seconds: f64,
    hop_seconds: f64,
) -> Result<Vec<FrameCorrelation>> {
    ensure_same_shape(live_voc, rec_voc)?;
    let framing = Framing::from_seconds(frame_seconds, hop_seconds, live_voc.sample_rate())?;
    framewise_pearson_with(live_voc.samples(), rec_voc.samples(), framing)
}

pub(crate) fn framewise_pearson_with(
    live: &[f64],
    rec: &[f64],
    framing: Framing,
) -> Result<Vec<FrameCorrelation>> {
    let count = framing.count(live.len());
    if count == 0 {
        return Err(Error::Degenerate(format!(
            "signal of {} samples is shorter than one {}-sample frame",
            live.len(),
            framing.frame_len
        )));
    }
    let window = hann_periodic(framing.frame_len);
    let windowed = |s: &[f64]| -> Vec<f64> { s.iter().zip(&window).map(|(x, w)| x * w).collect() };

    Ok((0..count)
        .map(|frame_index| {
            let range = framing.range(frame_index);
            let r = pearson(
                &windowed(&live[range.clone()]),
                &windowed(&rec[range.clone()]),
            );
            FrameCorrelation {
                frame_index,
                start_sample: range.start,
                pearson_r: r,
                usable: r.is_some(),
            }
        })
        .collect())
}

/// Highest-r usable frame, earliest on ties.
pub fn best_frame(correlations: &[FrameCorrelation]) -> Result<FrameCorrelation> {
    let mut best: Option<(FrameCorrelation, f64)> = None;
    for fc in correlations {
        let Some(r) = fc.pearson_r.filter(|_| fc.usable) else {
            continue;
        };
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((*fc, r));
        }
    }
    best.map(|(fc, _)| fc).ok_or_else(|| {
        Error::Degenerate(format!(
            "none of {} frames has usable correlation (silent stems?)",
            correlations.len()
        ))
    })
}

/// Closed-form minimizer of `|alpha * rec - live|^2`.
pub fn least_squares_scale(rec_frame: &[f64], live_frame: &[f64]) -> Result<f64> {
    if rec_frame.len() != live_frame.len() {
        return Err(Error::LengthMismatch {
            left: rec_frame.len(),
            right: live_frame.len(),
        });
    }
    if rec_frame.is_empty() {
        return Err(Error::EmptySignal("least-squares frame is empty"));
    }
    let energy: f64 = rec_frame.iter().map(|x| x * x).sum();
    if energy == 0.0 {
        return Err(Error::Degenerate("reference frame has zero energy".into()));
    }
    let dot: f64 = rec_frame.iter().zip(live_frame).map(|(r, l)| r * l).sum();
    Ok(dot / energy)
}

pub fn estimate_scale(
    live_voc: &MonoSignal,
    rec_voc: &MonoSignal,
    frame_seconds: f64,
    hop_seconds: f64,
) -> Result<ScaleEstimate> {
    ensure_same_shape(live_voc, rec_voc)?;
    let framing = Framing::from_seconds(frame_seconds, hop_seconds, live_voc.sample_rate())?;
    let correlations = framewise_pearson_with(live_voc.samples(), rec_voc.samples(), framing)?;
    scale_from_correlations(live_voc, rec_voc, framing, &correlations)
}

pub(crate) fn scale_from_correlations(
    live_voc: &MonoSignal,
    rec_voc: &MonoSignal,
    framing: Framing,
    correlations: &[FrameCorrelation],
) -> Result<ScaleEstimate> {
    let best = best_frame(correlations)?;
    let range = framing.range(best.frame_index);
    let alpha = least_squares_scale(
        &rec_voc.samples()[range.clone()],
        &live_voc.samples()[range],
    )?;
    Ok(ScaleEstimate {
        alpha,
        frame_index: best.frame_index,
        pearson_r: best.pearson_r.unwrap_or(f64::NAN),
        frame_count: correlations.len(),
    })
}
