//! End-to-end extraction: separate both recordings, align the studio stems to
//! the live ones on the accompaniment, match gain on the vocals, refine the
//! lag frame by frame and subtract.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alignment::{coarse_align, framewise_fine_lag};
use crate::audio::{
    match_lengths, rms_dbfs, scale, seconds_to_samples, shift, subtract, MonoSignal,
};
use crate::error::{Error, Result};
use crate::framing::Framing;
use crate::gain::{framewise_pearson_with, scale_from_correlations};
use crate::report::{extended_float, ExtractionReport, ResolvedParams, StageDurations};
use crate::separation::{separate, SeparatorSpec, StemPair};
use crate::wav::Encoding;

pub const DEFAULT_COARSE_MAX_LAG_SECONDS: f64 = 20.0;
pub const DEFAULT_FINE_MAX_SHIFT_SECONDS: f64 = 0.25;
pub const DEFAULT_FRAME_SECONDS: f64 = 1.0;
pub const DEFAULT_HOP_SECONDS: f64 = 0.5;
pub const DEFAULT_SILENCE_FLOOR_DBFS: f64 = -60.0;

/// Fine-lag vote spread (standard deviation) above which a tempo mismatch is
/// reported: 220 samples at 44.1 kHz, scaled with the sample rate.
pub const DISPERSION_WARNING_SAMPLES_AT_44K1: f64 = 220.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub coarse_max_lag_seconds: f64,
    pub fine_max_shift_seconds: f64,
    pub frame_seconds: f64,
    pub hop_seconds: f64,
    #[serde(with = "extended_float")]
    pub silence_floor_dbfs: f64,
    pub output_encoding: Encoding,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            coarse_max_lag_seconds: DEFAULT_COARSE_MAX_LAG_SECONDS,
            fine_max_shift_seconds: DEFAULT_FINE_MAX_SHIFT_SECONDS,
            frame_seconds: DEFAULT_FRAME_SECONDS,
            hop_seconds: DEFAULT_HOP_SECONDS,
            silence_floor_dbfs: DEFAULT_SILENCE_FLOOR_DBFS,
            output_encoding: Encoding::Float32,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("coarse max lag", self.coarse_max_lag_seconds),
            ("fine max shift", self.fine_max_shift_seconds),
            ("frame", self.frame_seconds),
            ("hop", self.hop_seconds),
        ];
        for (name, v) in durations {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.hop_seconds > self.frame_seconds {
            return Err(Error::InvalidArgument(format!(
                "hop ({} s) longer than frame ({} s)",
                self.hop_seconds, self.frame_seconds
            )));
        }
        if self.silence_floor_dbfs.is_nan() {
            return Err(Error::InvalidArgument("silence floor is NaN".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, sample_rate: u32) -> ResolvedParams {
        ResolvedParams {
            sample_rate,
            frame_samples: seconds_to_samples(self.frame_seconds, sample_rate),
            hop_samples: seconds_to_samples(self.hop_seconds, sample_rate),
            fine_max_lag_samples: seconds_to_samples(self.fine_max_shift_seconds, sample_rate),
            coarse_max_lag_samples: seconds_to_samples(self.coarse_max_lag_seconds, sample_rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub params: AnalysisParams,
    pub live_separator: SeparatorSpec,
    pub studio_separator: SeparatorSpec,
}

impl PipelineConfig {
    pub fn new(live_separator: SeparatorSpec, studio_separator: SeparatorSpec) -> Self {
        Self {
            params: AnalysisParams::default(),
            live_separator,
            studio_separator,
        }
    }
}

/// Separate both recordings and run the extraction on their stems.
pub fn extract_live_vocals(
    live_path: &Path,
    studio_path: &Path,
    config: &PipelineConfig,
) -> Result<(MonoSignal, ExtractionReport)> {
    config.params.validate()?;
    let started = Instant::now();

    let (live, studio) = std::thread::scope(|scope| {
        let live = scope.spawn(|| separate(&config.live_separator, live_path));
        let studio = separate(&config.studio_separator, studio_path);
        let live = live.join().expect("separator thread panicked");
        (live, studio)
    });
    let live = live.map_err(|e| e.in_stage("separate live"))?;
    let studio = studio.map_err(|e| e.in_stage("separate studio"))?;
    let separation = started.elapsed().as_secs_f64();

    let (residual, mut report) = extract_from_stems(&live, &studio, &config.params)?;
    report.live_separator = Some(config.live_separator.clone());
    report.studio_separator = Some(config.studio_separator.clone());
    report.durations.separation = separation;
    report.durations.total = started.elapsed().as_secs_f64();
    Ok((residual, report))
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot = t.elapsed().as_secs_f64();
    out
}

fn population_std(values: &[i64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    (values
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Extraction on already-separated stems.
pub fn extract_from_stems(
    live: &StemPair,
    studio: &StemPair,
    params: &AnalysisParams,
) -> Result<(MonoSignal, ExtractionReport)> {
    params.validate()?;
    let started = Instant::now();
    let rate = live.sample_rate();
    if studio.sample_rate() != rate {
        return Err(Error::SampleRateMismatch {
            left: rate,
            right: studio.sample_rate(),
        }
        .in_stage("inputs"));
    }
    let resolved = params.resolve(rate);
    let mut durations = StageDurations::default();
    let mut notes = vec![
        "gain fitted on raw frame samples; Hann window used only for frame selection".to_owned(),
        format!(
            "fine-lag frames quieter than {} dBFS on either side do not vote",
            params.silence_floor_dbfs
        ),
    ];
    let mut warnings = Vec::new();

    let coarse = timed(&mut durations.coarse_align, || {
        coarse_align(
            live.accompaniment(),
            studio.accompaniment(),
            params.coarse_max_lag_seconds,
        )
    })
    .map_err(|e| e.in_stage("coarse align"))?;
    if coarse.max_lag < resolved.coarse_max_lag_samples {
        notes.push(format!(
            "coarse search limited to {} samples by signal length",
            coarse.max_lag
        ));
    }

    let framing = Framing::from_seconds(params.frame_seconds, params.hop_seconds, rate)?;
    let (live_voc, rec_voc, correlations, scale_est) = timed(&mut durations.gain_match, || {
        let shifted = shift(studio.vocals(), coarse.lag)?;
        let (live_voc, rec_voc) = match_lengths(live.vocals(), &shifted)?;
        let correlations = framewise_pearson_with(live_voc.samples(), rec_voc.samples(), framing)?;
        let est = scale_from_correlations(&live_voc, &rec_voc, framing, &correlations)?;
        Ok::<_, Error>((live_voc, rec_voc, correlations, est))
    })
    .map_err(|e| e.in_stage("gain match"))?;
    if scale_est.alpha <= 0.0 {
        warnings.push(format!(
            "non-positive gain {:.6}: studio and live vocals may have opposite polarity",
            scale_est.alpha
        ));
    }

    let (rec_scaled, fine) = timed(&mut durations.fine_align, || {
        let rec_scaled = scale(&rec_voc, scale_est.alpha)?;
        let fine = framewise_fine_lag(
            &live_voc,
            &rec_scaled,
            params.frame_seconds,
            params.hop_seconds,
            params.fine_max_shift_seconds,
            params.silence_floor_dbfs,
        )?;
        Ok::<_, Error>((rec_scaled, fine))
    })
    .map_err(|e| e.in_stage("fine align"))?;

    let included: Vec<i64> = fine.included_lags().collect();
    let lag_dispersion = population_std(&included);
    if included.is_empty() {
        warnings.push("no frame passed the silence gate; fine lag left at 0".to_owned());
    }
    let threshold = DISPERSION_WARNING_SAMPLES_AT_44K1 * f64::from(rate) / 44_100.0;
    if lag_dispersion > threshold {
        warnings.push(format!(
            "lag dispersion {lag_dispersion:.1} samples exceeds {threshold:.1}: \
             frame lags disagree, likely a tempo mismatch between recordings"
        ));
    }
    if fine.lag.unsigned_abs() as usize == fine.max_lag {
        warnings.push(format!("fine lag {} sits at the search bound", fine.lag));
    }

    let residual = timed(&mut durations.subtract, || {
        let adjusted = shift(&rec_scaled, fine.lag)?;
        let (live_final, rec_final) = match_lengths(&live_voc, &adjusted)?;
        subtract(&live_final, &rec_final)
    })
    .map_err(|e| e.in_stage("subtract"))?;
    let residual_rms_dbfs = rms_dbfs(&residual)?;
    durations.total = started.elapsed().as_secs_f64();

    let report = ExtractionReport {
        live_source: live.source_label().to_owned(),
        studio_source: studio.source_label().to_owned(),
        resolved,
        coarse_lag: coarse,
        frame_correlations: correlations,
        scale: scale_est,
        fine_lag: fine.lag,
        fine_max_lag: fine.max_lag,
        fine_votes: fine.votes,
        lag_dispersion,
        residual_len: residual.len(),
        residual_rms_dbfs,
        notes,
        warnings,
        config_echo: *params,
        live_separator: None,
        studio_separator: None,
        durations,
    };
    Ok((residual, report))
}
