//! Sample-exact audio containers and the waveform primitives the rest of the
//! crate is built from.
//!
//! Samples are held as `f64` regardless of the on-disk encoding so that deep
//! cancellation is never limited by processing precision.

use crate::error::{Error, Result};

/// Multi-channel audio, stored planar (one `Vec` per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if channels.is_empty() {
            return Err(Error::InvalidArgument(
                "clip needs at least one channel".into(),
            ));
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch {
                left: len,
                right: bad.len(),
            });
        }
        if channels.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample value".into()));
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    /// Build a clip from interleaved samples.
    pub fn from_interleaved(samples: &[f64], channels: usize, sample_rate: u32) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidArgument(
                "clip needs at least one channel".into(),
            ));
        }
        if !samples.len().is_multiple_of(channels) {
            return Err(Error::InvalidArgument(format!(
                "{} interleaved samples do not divide into {channels} channels",
                samples.len()
            )));
        }
        let mut planar = vec![Vec::with_capacity(samples.len() / channels); channels];
        for frame in samples.chunks_exact(channels) {
            for (ch, &s) in planar.iter_mut().zip(frame) {
                ch.push(s);
            }
        }
        Self::new(planar, sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.channel_count());
        for i in 0..self.len() {
            out.extend(self.channels.iter().map(|c| c[i]));
        }
        out
    }

    /// Multiply every channel by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|s| s * alpha).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

impl From<MonoSignal> for AudioClip {
    fn from(signal: MonoSignal) -> Self {
        Self {
            channels: vec![signal.samples],
            sample_rate: signal.sample_rate,
        }
    }
}

/// A single-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl MonoSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample value".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Copy of `range` as a new signal at the same rate.
    pub fn slice(&self, range: std::ops::Range<usize>) -> MonoSignal {
        MonoSignal {
            samples: self.samples[range].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// Keep only the first `len` samples (no-op if already shorter).
    pub fn truncated(&self, len: usize) -> MonoSignal {
        self.slice(0..len.min(self.len()))
    }

    /// Samples-from-seconds at this signal's rate, rounded to nearest.
    pub fn seconds_to_samples(&self, seconds: f64) -> usize {
        seconds_to_samples(seconds, self.sample_rate)
    }
}

pub(crate) fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    (seconds * f64::from(sample_rate)).round().max(0.0) as usize
}

pub(crate) fn ensure_same_rate(a: &MonoSignal, b: &MonoSignal) -> Result<()> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::SampleRateMismatch {
            left: a.sample_rate,
            right: b.sample_rate,
        });
    }
    Ok(())
}

pub(crate) fn ensure_same_shape(a: &MonoSignal, b: &MonoSignal) -> Result<()> {
    ensure_same_rate(a, b)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Unweighted mean across channels.
pub fn to_mono(clip: &AudioClip) -> MonoSignal {
    let samples = if clip.channel_count() == 1 {
        clip.channel(0).to_vec()
    } else {
        let n = clip.channel_count() as f64;
        (0..clip.len())
            .map(|i| clip.channels().iter().map(|c| c[i]).sum::<f64>() / n)
            .collect()
    };
    MonoSignal {
        samples,
        sample_rate: clip.sample_rate(),
    }
}

/// Delay (`lag > 0`, prepend zeros) or advance (`lag < 0`, drop leading
/// samples) a signal.
pub fn shift(s: &MonoSignal, lag: i64) -> Result<MonoSignal> {
    let samples = if lag >= 0 {
        let mut out = vec![0.0; lag as usize];
        out.extend_from_slice(&s.samples);
        out
    } else {
        let drop = lag.unsigned_abs() as usize;
        if drop >= s.len() {
            return Err(Error::ShiftUnderflow { lag, len: s.len() });
        }
        s.samples[drop..].to_vec()
    };
    Ok(MonoSignal {
        samples,
        sample_rate: s.sample_rate,
    })
}

/// Zero-pad the shorter of the two signals to the longer one's length.
pub fn match_lengths(a: &MonoSignal, b: &MonoSignal) -> Result<(MonoSignal, MonoSignal)> {
    ensure_same_rate(a, b)?;
    let len = a.len().max(b.len());
    let pad = |s: &MonoSignal| {
        let mut samples = s.samples.clone();
        samples.resize(len, 0.0);
        MonoSignal {
            samples,
            sample_rate: s.sample_rate,
        }
    };
    Ok((pad(a), pad(b)))
}

pub fn scale(s: &MonoSignal, alpha: f64) -> Result<MonoSignal> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scale factor {alpha} is not finite"
        )));
    }
    Ok(MonoSignal {
        samples: s.samples.iter().map(|x| x * alpha).collect(),
        sample_rate: s.sample_rate,
    })
}

/// Per-sample `live - rec`.
pub fn subtract(live: &MonoSignal, rec: &MonoSignal) -> Result<MonoSignal> {
    ensure_same_shape(live, rec)?;
    Ok(MonoSignal {
        samples: live
            .samples
            .iter()
            .zip(&rec.samples)
            .map(|(l, r)| l - r)
            .collect(),
        sample_rate: live.sample_rate,
    })
}

/// RMS level in dBFS; `f64::NEG_INFINITY` for digital silence.
pub fn rms_dbfs(s: &MonoSignal) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySignal("cannot meter an empty signal"));
    }
    Ok(rms_dbfs_of(&s.samples))
}

pub(crate) fn rms_dbfs_of(samples: &[f64]) -> f64 {
    let mean_sq = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    if mean_sq == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * mean_sq.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mono(v: &[f64]) -> MonoSignal {
        MonoSignal::new(v.to_vec(), 44_100).unwrap()
    }

    #[test]
    fn to_mono_examples() {
        let m = to_mono(&AudioClip::new(vec![vec![0.1, -0.3]], 8000).unwrap());
        assert_eq!(m.samples(), &[0.1, -0.3]);

        let c = AudioClip::new(vec![vec![0.5; 4], vec![-0.5; 4]], 8000).unwrap();
        assert_eq!(to_mono(&c).samples(), &[0.0; 4]);

        let c = AudioClip::new(vec![vec![0.2; 3], vec![0.6; 3]], 8000).unwrap();
        for s in to_mono(&c).samples() {
            assert!((s - 0.4).abs() < 1e-15);
        }
        assert_eq!(to_mono(&c).sample_rate(), 8000);
    }

    #[test]
    fn clip_rejects_ragged_channels() {
        assert!(matches!(
            AudioClip::new(vec![vec![0.0; 3], vec![0.0; 2]], 8000),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(AudioClip::new(vec![vec![0.0]], 0).is_err());
        assert!(MonoSignal::new(vec![f64::NAN], 8000).is_err());
    }

    #[test]
    fn shift_examples() {
        let s = mono(&[1.0, 2.0, 3.0]);
        assert_eq!(shift(&s, 0).unwrap(), s);
        assert_eq!(shift(&s, 2).unwrap().samples(), &[0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(shift(&s, -1).unwrap().samples(), &[2.0, 3.0]);
        assert!(matches!(shift(&s, -3), Err(Error::ShiftUnderflow { .. })));
    }

    #[test]
    fn match_lengths_pads_shorter() {
        let a = mono(&[1.0; 5]);
        let b = mono(&[2.0; 3]);
        let (a2, b2) = match_lengths(&a, &b).unwrap();
        assert_eq!(a2, a);
        assert_eq!(b2.samples(), &[2.0, 2.0, 2.0, 0.0, 0.0]);
        let (b3, a3) = match_lengths(&b, &a).unwrap();
        assert_eq!(b3, b2);
        assert_eq!(a3, a);

        let other = MonoSignal::new(vec![0.0], 48_000).unwrap();
        assert!(matches!(
            match_lengths(&a, &other),
            Err(Error::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn scale_examples() {
        let s = mono(&[0.25, -0.5]);
        assert_eq!(scale(&s, 1.0).unwrap(), s);
        assert_eq!(scale(&s, 0.0).unwrap().samples(), &[0.0, 0.0]);
        assert_eq!(scale(&s, -1.0).unwrap().samples(), &[-0.25, 0.5]);
        assert!(scale(&s, f64::INFINITY).is_err());
    }

    #[test]
    fn subtract_examples() {
        let s = mono(&[0.3, -0.7, 0.1]);
        assert_eq!(subtract(&s, &s).unwrap().samples(), &[0.0; 3]);
        assert_eq!(subtract(&s, &mono(&[0.0; 3])).unwrap(), s);
        let d = subtract(&mono(&[0.5]), &mono(&[0.2])).unwrap();
        assert!((d.samples()[0] - 0.3).abs() < 1e-15);
        assert!(matches!(
            subtract(&s, &mono(&[0.0; 2])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rms_examples() {
        assert_eq!(rms_dbfs(&mono(&[1.0; 10])).unwrap(), 0.0);
        assert!((rms_dbfs(&mono(&[0.1; 10])).unwrap() + 20.0).abs() < 1e-12);
        assert_eq!(rms_dbfs(&mono(&[0.0; 10])).unwrap(), f64::NEG_INFINITY);
        assert!(rms_dbfs(&mono(&[])).is_err());
    }

    fn samples() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 1..200)
    }

    proptest! {
        #[test]
        fn shift_round_trip(v in samples(), k in 0usize..200) {
            let s = mono(&v);
            let k = k % s.len();
            let back = shift(&shift(&s, k as i64).unwrap(), -(k as i64)).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn subtract_then_add_back(a in samples(), b in samples()) {
            let (a, b) = match_lengths(&mono(&a), &mono(&b)).unwrap();
            let d = subtract(&a, &b).unwrap();
            for ((d, b), a) in d.samples().iter().zip(b.samples()).zip(a.samples()) {
                prop_assert!((d + b - a).abs() <= f64::EPSILON * a.abs().max(b.abs()).max(1.0));
            }
        }

        #[test]
        fn mono_commutes_with_scale(l in samples(), alpha in -4.0f64..4.0) {
            let r: Vec<f64> = l.iter().map(|x| x * 0.5 - 0.1).collect();
            let clip = AudioClip::new(vec![l, r], 44_100).unwrap();
            let a = to_mono(&clip.scaled(alpha));
            let b = scale(&to_mono(&clip), alpha).unwrap();
            for (x, y) in a.samples().iter().zip(b.samples()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
