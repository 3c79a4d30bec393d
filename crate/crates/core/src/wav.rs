//! RIFF/WAVE reading and writing.
//!
//! Reads PCM16, PCM24 and IEEE float32; writes float32 or PCM16.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

const PCM16_FULL_SCALE: f64 = 32_768.0;
const PCM24_FULL_SCALE: f64 = 8_388_608.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Float32,
    Pcm16,
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float32" => Ok(Encoding::Float32),
            "pcm16" => Ok(Encoding::Pcm16),
            other => Err(Error::InvalidArgument(format!(
                "unknown encoding {other:?} (expected float32 or pcm16)"
            ))),
        }
    }
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.into(),
            detail: "format not supported by the WAV decoder".into(),
        },
        other => Error::MalformedWav {
            path: path.into(),
            detail: other.to_string(),
        },
    }
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / PCM16_FULL_SCALE))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Int, 24) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| f64::from(v) / PCM24_FULL_SCALE))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.into(),
                detail: format!("{bits}-bit {format:?}; expected PCM16, PCM24 or float32"),
            })
        }
    };

    if interleaved.is_empty() {
        return Err(Error::MalformedWav {
            path: path.into(),
            detail: "no sample frames".into(),
        });
    }
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(Error::MalformedWav {
            path: path.into(),
            detail: "non-finite float sample".into(),
        });
    }
    AudioClip::from_interleaved(&interleaved, usize::from(spec.channels), spec.sample_rate).map_err(
        |e| Error::MalformedWav {
            path: path.into(),
            detail: e.to_string(),
        },
    )
}

fn pcm16_code(sample: f64) -> i16 {
    (sample.clamp(-1.0, 1.0) * PCM16_FULL_SCALE)
        .round()
        .clamp(-PCM16_FULL_SCALE, PCM16_FULL_SCALE - 1.0) as i16
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>, encoding: Encoding) -> Result<()> {
    let path = path.as_ref();
    let channels = u16::try_from(clip.channel_count())
        .map_err(|_| Error::InvalidArgument("too many channels for WAV".into()))?;
    let spec = match encoding {
        Encoding::Float32 => WavSpec {
            channels,
            sample_rate: clip.sample_rate(),
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        },
        Encoding::Pcm16 => WavSpec {
            channels,
            sample_rate: clip.sample_rate(),
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    let written: Result<(), hound::Error> = (|| {
        for i in 0..clip.len() {
            for ch in clip.channels() {
                match encoding {
                    Encoding::Float32 => writer.write_sample(ch[i] as f32)?,
                    Encoding::Pcm16 => writer.write_sample(pcm16_code(ch[i]))?,
                }
            }
        }
        writer.finalize()
    })();
    written.map_err(|e| map_hound(path, e))
}
