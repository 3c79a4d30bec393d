use serde::{Deserialize, Serialize};

use crate::audio::seconds_to_samples;
use crate::error::{Error, Result};

/// Frame length and hop in samples. Frames start at `i * hop`; a trailing
/// partial frame is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Framing {
    pub frame_len: usize,
    pub hop: usize,
}

impl Framing {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        if frame_len == 0 || hop == 0 || hop > frame_len {
            return Err(Error::InvalidArgument(format!(
                "need 0 < hop ({hop}) <= frame ({frame_len}) samples"
            )));
        }
        Ok(Self { frame_len, hop })
    }

    pub fn from_seconds(frame_seconds: f64, hop_seconds: f64, sample_rate: u32) -> Result<Self> {
        if !(frame_seconds > 0.0 && hop_seconds > 0.0 && hop_seconds <= frame_seconds) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < hop ({hop_seconds} s) <= frame ({frame_seconds} s)"
            )));
        }
        Self::new(
            seconds_to_samples(frame_seconds, sample_rate),
            seconds_to_samples(hop_seconds, sample_rate),
        )
    }

    /// Number of whole frames that fit in `len` samples.
    pub fn count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    pub fn range(&self, index: usize) -> std::ops::Range<usize> {
        let start = index * self.hop;
        start..start + self.frame_len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_at_44k1() {
        let f = Framing::from_seconds(1.0, 0.5, 44_100).unwrap();
        assert_eq!(
            f,
            Framing {
                frame_len: 44_100,
                hop: 22_050
            }
        );
    }

    #[test]
    fn counts_whole_frames_only() {
        let f = Framing::new(4, 2).unwrap();
        assert_eq!(f.count(3), 0);
        assert_eq!(f.count(4), 1);
        assert_eq!(f.count(5), 1);
        assert_eq!(f.count(6), 2);
        assert_eq!(f.range(2), 4..8);
    }

    #[test]
    fn rejects_hop_longer_than_frame() {
        assert!(Framing::new(4, 5).is_err());
        assert!(Framing::from_seconds(0.5, 1.0, 8000).is_err());
        assert!(Framing::from_seconds(0.0, 0.0, 8000).is_err());
    }
}
