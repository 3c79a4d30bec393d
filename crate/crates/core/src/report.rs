use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::{FrameLagVote, LagEstimate};
use crate::error::{Error, Result};
use crate::gain::{FrameCorrelation, ScaleEstimate};
use crate::pipeline::AnalysisParams;
use crate::separation::SeparatorSpec;

/// Parameters converted to samples at the run's sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub sample_rate: u32,
    pub frame_samples: usize,
    pub hop_samples: usize,
    pub fine_max_lag_samples: usize,
    pub coarse_max_lag_samples: usize,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageDurations {
    pub separation: f64,
    pub coarse_align: f64,
    pub gain_match: f64,
    pub fine_align: f64,
    pub subtract: f64,
    pub total: f64,
}

impl StageDurations {
    /// Everything except the separation stage.
    pub fn processing(&self) -> f64 {
        self.coarse_align + self.gain_match + self.fine_align + self.subtract
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub live_source: String,
    pub studio_source: String,
    pub resolved: ResolvedParams,
    pub coarse_lag: LagEstimate,
    pub frame_correlations: Vec<FrameCorrelation>,
    pub scale: ScaleEstimate,
    pub fine_lag: i64,
    pub fine_max_lag: usize,
    pub fine_votes: Vec<FrameLagVote>,
    /// Population standard deviation of the included fine-lag votes, samples.
    pub lag_dispersion: f64,
    pub residual_len: usize,
    #[serde(with = "extended_float")]
    pub residual_rms_dbfs: f64,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub config_echo: AnalysisParams,
    pub live_separator: Option<SeparatorSpec>,
    pub studio_separator: Option<SeparatorSpec>,
    pub durations: StageDurations,
}

impl ExtractionReport {
    /// Same report with durations zeroed, for comparing runs.
    pub fn without_durations(&self) -> Self {
        Self {
            durations: StageDurations::default(),
            ..self.clone()
        }
    }
}

pub fn write_report(report: &ExtractionReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<ExtractionReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("cannot parse report {}: {e}", path.display())))
}

/// JSON has no infinities; encode them as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}
