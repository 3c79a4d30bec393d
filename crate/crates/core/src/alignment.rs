//! Time-delay estimation with GCC-PHAT.
//!
//! Sign convention: a positive lag means `x` is delayed relative to `y`, so
//! `shift(y, lag)` lines `y` up with `x`. Ties between equal correlation
//! values go to the smallest `|lag|`, then to the negative lag.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::audio::{ensure_same_rate, ensure_same_shape, rms_dbfs_of, MonoSignal};
use crate::error::{Error, Result};
use crate::framing::Framing;

/// Cross-spectrum bins below this magnitude are zeroed instead of whitened.
pub const PHAT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagEstimate {
    /// Samples; positive means `x` lags `y`.
    pub lag: i64,
    /// Real part of the whitened correlation at `lag`.
    pub peak_value: f64,
    /// Search bound in samples.
    pub max_lag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLagVote {
    pub frame_index: usize,
    pub lag: i64,
    /// False when the frame was gated out as silence.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineLag {
    pub lag: i64,
    pub votes: Vec<FrameLagVote>,
    pub max_lag: usize,
}

impl FineLag {
    pub fn included_lags(&self) -> impl Iterator<Item = i64> + '_ {
        self.votes.iter().filter(|v| v.included).map(|v| v.lag)
    }
}

/// Transform length for linear (non-circular) correlation of the two lengths.
pub fn transform_len(len_x: usize, len_y: usize) -> usize {
    (len_x + len_y - 1).next_power_of_two()
}

fn validate(x: &MonoSignal, y: &MonoSignal, max_lag: usize) -> Result<usize> {
    ensure_same_rate(x, y)?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySignal("GCC-PHAT needs non-empty inputs"));
    }
    let n = transform_len(x.len(), y.len());
    if max_lag == 0 || max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} outside (0, {n})"
        )));
    }
    Ok(n)
}

/// Candidate lags in tie-break order: 0, -1, +1, -2, +2, ...
///
/// Lags are limited to the span where the two inputs overlap at all, so a
/// large `max_lag` never aliases positive and negative lags.
fn candidate_lags(len_x: usize, len_y: usize, max_lag: usize) -> impl Iterator<Item = i64> {
    let pos = max_lag.min(len_x - 1) as i64;
    let neg = max_lag.min(len_y - 1) as i64;
    std::iter::once(0).chain((1..=pos.max(neg)).flat_map(move |m| {
        let minus = (m <= neg).then_some(-m);
        let plus = (m <= pos).then_some(m);
        minus.into_iter().chain(plus)
    }))
}

fn pick_peak(
    len_x: usize,
    len_y: usize,
    max_lag: usize,
    value_at: impl Fn(i64) -> f64,
) -> LagEstimate {
    let mut best = LagEstimate {
        lag: 0,
        peak_value: f64::NEG_INFINITY,
        max_lag,
    };
    for lag in candidate_lags(len_x, len_y, max_lag) {
        let v = value_at(lag);
        if v > best.peak_value {
            best.lag = lag;
            best.peak_value = v;
        }
    }
    best
}

fn phat_weight(c: Complex<f64>) -> Complex<f64> {
    let mag = c.norm();
    if mag < PHAT_EPSILON {
        Complex::new(0.0, 0.0)
    } else {
        c / mag
    }
}

/// Reusable FFT plans for one transform length.
pub struct PhatCorrelator {
    n: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl PhatCorrelator {
    pub fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn fft_len(&self) -> usize {
        self.n
    }

    fn spectrum(&self, samples: &[f64]) -> Vec<Complex<f64>> {
        let mut buf = self.forward.make_input_vec();
        buf[..samples.len()].copy_from_slice(samples);
        let mut out = self.forward.make_output_vec();
        self.forward
            .process(&mut buf, &mut out)
            .expect("buffer sizes come from the plan");
        out
    }

    /// Whitened correlation sequence, circular index `k` holding lag `k`
    /// (negative lags wrap to `n + lag`), scaled by `1/n`.
    pub fn correlate(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        assert!(x.len() + y.len() - 1 <= self.n, "transform too short");
        let sx = self.spectrum(x);
        let sy = self.spectrum(y);
        let mut cross: Vec<Complex<f64>> = sx
            .iter()
            .zip(&sy)
            .map(|(a, b)| phat_weight(a * b.conj()))
            .collect();
        // DC and Nyquist bins of a real sequence have no imaginary part.
        cross[0].im = 0.0;
        if let Some(last) = cross.last_mut() {
            last.im = 0.0;
        }
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut cross, &mut out)
            .expect("buffer sizes come from the plan");
        let norm = 1.0 / self.n as f64;
        out.iter_mut().for_each(|v| *v *= norm);
        out
    }

    fn estimate(&self, x: &[f64], y: &[f64], max_lag: usize) -> LagEstimate {
        let r = self.correlate(x, y);
        let n = self.n as i64;
        pick_peak(x.len(), y.len(), max_lag, |lag| {
            r[lag.rem_euclid(n) as usize]
        })
    }
}

/// GCC-PHAT delay estimate of `x` relative to `y`, searched over
/// `[-max_lag, max_lag]`.
pub fn gcc_phat(x: &MonoSignal, y: &MonoSignal, max_lag: usize) -> Result<LagEstimate> {
    let n = validate(x, y, max_lag)?;
    Ok(PhatCorrelator::new(n).estimate(x.samples(), y.samples(), max_lag))
}

/// Direct-summation evaluation of the same PHAT-weighted correlation, for
/// checking [`gcc_phat`]. Quadratic cost; keep inputs to a few thousand
/// samples.
pub fn gcc_phat_naive(x: &MonoSignal, y: &MonoSignal, max_lag: usize) -> Result<LagEstimate> {
    let n = validate(x, y, max_lag)?;
    let twiddle: Vec<Complex<f64>> = (0..n)
        .map(|j| Complex::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
        .collect();

    let dft = |s: &[f64]| -> Vec<Complex<f64>> {
        let half: Vec<Complex<f64>> = (0..=n / 2)
            .map(|k| {
                let mut acc = Complex::new(0.0, 0.0);
                let mut idx = 0usize;
                for &v in s {
                    acc += twiddle[idx] * v;
                    idx += k;
                    if idx >= n {
                        idx -= n;
                    }
                }
                acc
            })
            .collect();
        // Real input: upper half mirrors the lower half.
        (0..n)
            .map(|k| {
                if k <= n / 2 {
                    half[k]
                } else {
                    half[n - k].conj()
                }
            })
            .collect()
    };

    let sx = dft(x.samples());
    let sy = dft(y.samples());
    let cross: Vec<Complex<f64>> = sx
        .iter()
        .zip(&sy)
        .map(|(a, b)| phat_weight(a * b.conj()))
        .collect();

    let inverse_at = |lag: i64| -> f64 {
        let step = lag.rem_euclid(n as i64) as usize;
        let mut acc = 0.0;
        let mut idx = 0usize;
        for c in &cross {
            // e^{+i theta} = conj(e^{-i theta})
            acc += (c * twiddle[idx].conj()).re;
            idx += step;
            if idx >= n {
                idx -= n;
            }
        }
        acc / n as f64
    };

    Ok(pick_peak(x.len(), y.len(), max_lag, inverse_at))
}

/// Coarse offset between the live and studio accompaniments: the returned
/// lag is how far to shift the studio stems to line up with the live one.
pub fn coarse_align(
    live_acc: &MonoSignal,
    rec_acc: &MonoSignal,
    max_lag_seconds: f64,
) -> Result<LagEstimate> {
    ensure_same_rate(live_acc, rec_acc)?;
    if max_lag_seconds.is_nan() || max_lag_seconds <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "coarse max lag must be positive, got {max_lag_seconds} s"
        )));
    }
    if live_acc.is_empty() || rec_acc.is_empty() {
        return Err(Error::EmptySignal("accompaniment stem is empty"));
    }
    let requested = live_acc.seconds_to_samples(max_lag_seconds).max(1);
    // Lags beyond the overlap span carry no information.
    let span = live_acc.len().max(rec_acc.len()).saturating_sub(1).max(1);
    gcc_phat(live_acc, rec_acc, requested.min(span))
}

/// Mode of `lags`; ties go to the smallest `|lag|`, then the negative one.
pub fn mode_lag(lags: impl IntoIterator<Item = i64>) -> Option<i64> {
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for lag in lags {
        *counts.entry(lag).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(la, ca), (lb, cb)| {
            ca.cmp(cb)
                .then_with(|| lb.unsigned_abs().cmp(&la.unsigned_abs()))
                .then_with(|| lb.cmp(la))
        })
        .map(|(lag, _)| lag)
}

/// Per-frame GCC-PHAT between two already-aligned stems; returns the most
/// frequent frame lag.
///
/// Frames where either side is quieter than `silence_floor_dbfs` do not
/// vote. With no voting frames the lag is 0 and the vote list shows every
/// frame excluded.
pub fn framewise_fine_lag(
    live_voc: &MonoSignal,
    rec_voc_scaled: &MonoSignal,
    frame_seconds: f64,
    hop_seconds: f64,
    max_shift_seconds: f64,
    silence_floor_dbfs: f64,
) -> Result<FineLag> {
    ensure_same_shape(live_voc, rec_voc_scaled)?;
    let framing = Framing::from_seconds(frame_seconds, hop_seconds, live_voc.sample_rate())?;
    let max_lag = live_voc.seconds_to_samples(max_shift_seconds);
    let n = transform_len(framing.frame_len, framing.frame_len);
    if max_lag == 0 || max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "fine max shift of {max_lag} samples outside (0, {n})"
        )));
    }
    let correlator = PhatCorrelator::new(n);

    let votes: Vec<FrameLagVote> = (0..framing.count(live_voc.len()))
        .into_par_iter()
        .map(|frame_index| {
            let range = framing.range(frame_index);
            let live = &live_voc.samples()[range.clone()];
            let rec = &rec_voc_scaled.samples()[range];
            if rms_dbfs_of(live) < silence_floor_dbfs || rms_dbfs_of(rec) < silence_floor_dbfs {
                FrameLagVote {
                    frame_index,
                    lag: 0,
                    included: false,
                }
            } else {
                FrameLagVote {
                    frame_index,
                    lag: correlator.estimate(live, rec, max_lag).lag,
                    included: true,
                }
            }
        })
        .collect();

    let mut fine = FineLag {
        lag: 0,
        votes,
        max_lag,
    };
    fine.lag = mode_lag(fine.included_lags()).unwrap_or(0);
    Ok(fine)
}
