//! Synthetic live-performance fixtures with known ground truth, and the
//! metrics used to score an extraction against them.
//!
//! A fixture models the situation the pipeline is built for: the live
//! recording contains the studio playback (delayed and gain-scaled, possibly
//! at a slightly different speed), optionally a separately sung live vocal,
//! and optionally crowd noise. Exact stems are written next to the mixes so
//! the pipeline can run in pre-separated mode without any model.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{rms_dbfs_of, to_mono, AudioClip, MonoSignal};
use crate::error::{Error, Result};
use crate::report::extended_float;
use crate::separation::{ACCOMPANIMENT_FILE, VOCALS_FILE};
use crate::wav::{load_wav, write_wav, Encoding};

pub const STUDIO_MIX_FILE: &str = "studio_mix.wav";
pub const LIVE_MIX_FILE: &str = "live_mix.wav";
pub const STUDIO_STEMS_DIR: &str = "studio_stems";
pub const LIVE_STEMS_DIR: &str = "live_stems";
pub const TRUTH_LIVE_VOCAL_FILE: &str = "truth_live_vocal.wav";
pub const SPEC_FILE: &str = "fixture.txt";

const ACCOMPANIMENT_DBFS: f64 = -16.0;
const STUDIO_VOCAL_DBFS: f64 = -10.0;

// Independent random streams per source.
const STREAM_ACCOMPANIMENT: u64 = 1;
const STREAM_STUDIO_VOCAL: u64 = 2;
const STREAM_LIVE_VOCAL: u64 = 3;
const STREAM_NOISE: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub delay_samples: usize,
    pub playback_gain: f64,
    pub live_vocal_gain_dbfs: Option<f64>,
    pub noise_floor_dbfs: Option<f64>,
    pub tempo_ratio: f64,
    pub seed: u64,
    pub duration_seconds: f64,
    pub sample_rate: u32,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            delay_samples: 0,
            playback_gain: 1.0,
            live_vocal_gain_dbfs: None,
            noise_floor_dbfs: None,
            tempo_ratio: 1.0,
            seed: 0,
            duration_seconds: 10.0,
            sample_rate: 44_100,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_seconds > 0.0 && self.duration_seconds.is_finite()) {
            return Err(Error::InvalidArgument(
                "duration_seconds must be positive".into(),
            ));
        }
        if !(self.tempo_ratio > 0.9 && self.tempo_ratio < 1.1) {
            return Err(Error::InvalidArgument(format!(
                "tempo_ratio {} outside (0.9, 1.1)",
                self.tempo_ratio
            )));
        }
        if !(self.playback_gain > 0.0 && self.playback_gain.is_finite()) {
            return Err(Error::InvalidArgument(
                "playback_gain must be positive".into(),
            ));
        }
        if self.sample_rate == 0 {
            return Err(Error::InvalidArgument(
                "sample_rate must be positive".into(),
            ));
        }
        for level in [self.live_vocal_gain_dbfs, self.noise_floor_dbfs]
            .into_iter()
            .flatten()
        {
            if !level.is_finite() {
                return Err(Error::InvalidArgument(
                    "levels must be finite dBFS values".into(),
                ));
            }
        }
        Ok(())
    }

    /// Parse a flat `key = value` document. Blank lines and `#` comments are
    /// ignored; omitted keys keep their defaults; `none` clears an optional level.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::InvalidArgument(format!(
                    "line {}: {key}: invalid {what} {value:?}",
                    lineno + 1
                ))
            };
            let real = || value.parse::<f64>().map_err(|_| bad("number"));
            let optional = || -> Result<Option<f64>> {
                if value.eq_ignore_ascii_case("none") || value.is_empty() {
                    Ok(None)
                } else {
                    real().map(Some)
                }
            };
            match key {
                "delay_samples" => {
                    spec.delay_samples = value.parse().map_err(|_| bad("integer"))?
                }
                "playback_gain" => spec.playback_gain = real()?,
                "live_vocal_gain_dbfs" => spec.live_vocal_gain_dbfs = optional()?,
                "noise_floor_dbfs" => spec.noise_floor_dbfs = optional()?,
                "tempo_ratio" => spec.tempo_ratio = real()?,
                "seed" => spec.seed = value.parse().map_err(|_| bad("integer"))?,
                "duration_seconds" => spec.duration_seconds = real()?,
                "sample_rate" => spec.sample_rate = value.parse().map_err(|_| bad("integer"))?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_owned(), |v| v.to_string());
        let mut out = String::new();
        let _ = writeln!(out, "delay_samples = {}", self.delay_samples);
        let _ = writeln!(out, "playback_gain = {}", self.playback_gain);
        let _ = writeln!(
            out,
            "live_vocal_gain_dbfs = {}",
            opt(self.live_vocal_gain_dbfs)
        );
        let _ = writeln!(out, "noise_floor_dbfs = {}", opt(self.noise_floor_dbfs));
        let _ = writeln!(out, "tempo_ratio = {}", self.tempo_ratio);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "duration_seconds = {}", self.duration_seconds);
        let _ = writeln!(out, "sample_rate = {}", self.sample_rate);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureBundle {
    pub root: PathBuf,
    pub studio_mix: PathBuf,
    pub live_mix: PathBuf,
    pub studio_stems_dir: PathBuf,
    pub live_stems_dir: PathBuf,
    /// Live-timeline ground truth; absent when the fixture has no live vocal.
    pub truth_live_vocal: Option<PathBuf>,
    pub spec_echo: FixtureSpec,
}

impl FixtureBundle {
    fn layout(root: &Path, spec: FixtureSpec) -> Self {
        Self {
            root: root.to_owned(),
            studio_mix: root.join(STUDIO_MIX_FILE),
            live_mix: root.join(LIVE_MIX_FILE),
            studio_stems_dir: root.join(STUDIO_STEMS_DIR),
            live_stems_dir: root.join(LIVE_STEMS_DIR),
            truth_live_vocal: spec
                .live_vocal_gain_dbfs
                .map(|_| root.join(TRUTH_LIVE_VOCAL_FILE)),
            spec_echo: spec,
        }
    }

    /// Reopen a bundle previously written by [`generate_fixture`].
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let spec_path = root.join(SPEC_FILE);
        let text = std::fs::read_to_string(&spec_path).map_err(|e| Error::io(&spec_path, e))?;
        let bundle = Self::layout(root, FixtureSpec::parse(&text)?);
        let mut expected = vec![
            bundle.studio_mix.clone(),
            bundle.live_mix.clone(),
            bundle.live_stems_dir.join(VOCALS_FILE),
            bundle.live_stems_dir.join(ACCOMPANIMENT_FILE),
            bundle.studio_stems_dir.join(VOCALS_FILE),
            bundle.studio_stems_dir.join(ACCOMPANIMENT_FILE),
        ];
        expected.extend(bundle.truth_live_vocal.clone());
        if let Some(missing) = expected.into_iter().find(|p| !p.is_file()) {
            return Err(Error::io(
                missing,
                std::io::Error::new(std::io::ErrorKind::NotFound, "fixture file missing"),
            ));
        }
        Ok(bundle)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normalize_to_dbfs(samples: &mut [f64], dbfs: f64) {
    let current = rms_dbfs_of(samples);
    if current.is_finite() {
        let gain = 10f64.powf((dbfs - current) / 20.0);
        samples.iter_mut().for_each(|s| *s *= gain);
    }
}

/// One-pole lowpass coefficient for cutoff `hz`.
fn one_pole(hz: f64, rate: f64) -> f64 {
    1.0 - (-2.0 * PI * hz / rate).exp()
}

/// White noise band-passed between `lo` and `hi` Hz (difference of two one-pole lowpasses).
fn band_noise(rng: &mut ChaCha8Rng, len: usize, rate: f64, lo: f64, hi: f64) -> Vec<f64> {
    let (a_hi, a_lo) = (one_pole(hi, rate), one_pole(lo, rate));
    let (mut y_hi, mut y_lo) = (0.0, 0.0);
    (0..len)
        .map(|_| {
            let x: f64 = rng.gen_range(-1.0..1.0);
            y_hi += a_hi * (x - y_hi);
            y_lo += a_lo * (x - y_lo);
            y_hi - y_lo
        })
        .collect()
}

/// Broadband accompaniment: detuned tones under a pulsing beat envelope plus
/// filtered noise.
fn synth_accompaniment(rng: &mut ChaCha8Rng, len: usize, rate: f64) -> Vec<f64> {
    let tones: Vec<(f64, f64, f64)> = (0..8)
        .map(|_| {
            let f = 55.0 * 2f64.powf(rng.gen_range(0.0..6.5));
            (f, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.3..1.0))
        })
        .collect();
    let beat_hz = rng.gen_range(1.6..2.4);
    let noise = band_noise(rng, len, rate, 60.0, 9_000.0);
    (0..len)
        .map(|i| {
            let t = i as f64 / rate;
            let beat_phase = (t * beat_hz).fract();
            let pulse = 0.4 + 0.6 * (-8.0 * beat_phase).exp();
            let tonal: f64 = tones
                .iter()
                .map(|(f, ph, a)| a * (2.0 * PI * f * t + ph).sin())
                .sum();
            0.5 * tonal + pulse * 2.0 * noise[i]
        })
        .collect()
}

/// Sung-vocal stand-in: a harmonic tone following a random note sequence
/// with glides between notes, vibrato and a syllable envelope that never
/// falls fully silent, plus breath noise in the vocal band.
///
/// `detune_semitones` moves the whole pitch grid; two vocals on grids a
/// quarter tone apart never hold a shared harmonic, so they stay uncorrelated
/// frame by frame.
fn synth_vocal(rng: &mut ChaCha8Rng, len: usize, rate: f64, detune_semitones: f64) -> Vec<f64> {
    const GLIDE: f64 = 0.4;
    let note_len = ((rng.gen_range(0.3..0.5) * rate) as usize).max(1);
    let pitches: Vec<f64> = (0..len / note_len + 2)
        .map(|_| f64::from(rng.gen_range(0..19u8)) + detune_semitones)
        .collect();
    let vibrato_hz = rng.gen_range(5.0..6.5);
    let breath = band_noise(rng, len, rate, 300.0, 4_000.0);
    let mut phase = 0.0;
    (0..len)
        .map(|i| {
            let t = i as f64 / rate;
            let note = i / note_len + 1;
            let within = (i % note_len) as f64 / note_len as f64;
            let pitch = if within < GLIDE {
                let blend = 0.5 - 0.5 * (PI * within / GLIDE).cos();
                pitches[note - 1] + blend * (pitches[note] - pitches[note - 1])
            } else {
                pitches[note]
            };
            let f0 =
                196.0 * 2f64.powf(pitch / 12.0) * (1.0 + 0.01 * (2.0 * PI * vibrato_hz * t).sin());
            phase = (phase + 2.0 * PI * f0 / rate) % (2.0 * PI);
            let envelope = 0.35 + 0.65 * (PI * within).sin();
            let voiced: f64 = (1..=8)
                .map(|h| (f64::from(h) * phase).sin() / f64::from(h))
                .sum();
            envelope * (voiced + 1.5 * breath[i])
        })
        .collect()
}

/// Crowd-noise stand-in: pink-ish noise (Kellet's economy filter).
fn synth_crowd(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..len)
        .map(|_| {
            let w: f64 = rng.gen_range(-1.0..1.0);
            b0 = 0.99765 * b0 + w * 0.099_046;
            b1 = 0.96300 * b1 + w * 0.296_516_4;
            b2 = 0.57000 * b2 + w * 1.052_691_3;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

/// Linear-interpolation resampling that plays `input` `ratio` times faster.
fn tempo_resample(input: &[f64], ratio: f64) -> Vec<f64> {
    if ratio == 1.0 {
        return input.to_vec();
    }
    let last = (input.len() - 1) as f64;
    let out_len = (last / ratio).floor() as usize + 1;
    (0..out_len)
        .map(|n| {
            let pos = n as f64 * ratio;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i + 1 < input.len() {
                input[i] * (1.0 - frac) + input[i + 1] * frac
            } else {
                input[i]
            }
        })
        .collect()
}

/// `gain * (zeros(delay) ++ x)`.
fn delayed(x: &[f64], delay: usize, gain: f64) -> Vec<f64> {
    let mut out = vec![0.0; delay];
    out.extend(x.iter().map(|v| gain * v));
    out
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

fn write_mono(samples: Vec<f64>, rate: u32, path: &Path) -> Result<()> {
    let clip = AudioClip::from(MonoSignal::new(samples, rate)?);
    write_wav(&clip, path, Encoding::Float32)
}

/// Synthesize a fixture into `out_dir`. Output is a pure function of `spec`.
pub fn generate_fixture(spec: &FixtureSpec, out_dir: impl AsRef<Path>) -> Result<FixtureBundle> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let bundle = FixtureBundle::layout(out_dir, spec.clone());
    for dir in [out_dir, &bundle.studio_stems_dir, &bundle.live_stems_dir] {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let rate = f64::from(spec.sample_rate);
    let len = ((spec.duration_seconds * rate).round() as usize).max(1);

    let mut accompaniment =
        synth_accompaniment(&mut rng_for(spec.seed, STREAM_ACCOMPANIMENT), len, rate);
    normalize_to_dbfs(&mut accompaniment, ACCOMPANIMENT_DBFS);
    let mut vocal = synth_vocal(&mut rng_for(spec.seed, STREAM_STUDIO_VOCAL), len, rate, 0.0);
    normalize_to_dbfs(&mut vocal, STUDIO_VOCAL_DBFS);
    let studio_mix: Vec<f64> = vocal
        .iter()
        .zip(&accompaniment)
        .map(|(v, a)| v + a)
        .collect();

    let play_vocal = tempo_resample(&vocal, spec.tempo_ratio);
    let play_acc = tempo_resample(&accompaniment, spec.tempo_ratio);
    let play_mix = tempo_resample(&studio_mix, spec.tempo_ratio);
    let gain = spec.playback_gain;
    let mut live_vocal_stem = delayed(&play_vocal, spec.delay_samples, gain);
    let mut live_acc_stem = delayed(&play_acc, spec.delay_samples, gain);
    let mut live_mix = delayed(&play_mix, spec.delay_samples, gain);
    let live_len = live_mix.len();

    if let Some(dbfs) = spec.live_vocal_gain_dbfs {
        let mut live_vocal = synth_vocal(
            &mut rng_for(spec.seed, STREAM_LIVE_VOCAL),
            live_len,
            rate,
            0.5,
        );
        normalize_to_dbfs(&mut live_vocal, dbfs);
        add_into(&mut live_vocal_stem, &live_vocal);
        add_into(&mut live_mix, &live_vocal);
        write_mono(
            live_vocal,
            spec.sample_rate,
            &out_dir.join(TRUTH_LIVE_VOCAL_FILE),
        )?;
    }
    if let Some(dbfs) = spec.noise_floor_dbfs {
        let mut crowd = synth_crowd(&mut rng_for(spec.seed, STREAM_NOISE), live_len);
        normalize_to_dbfs(&mut crowd, dbfs);
        add_into(&mut live_acc_stem, &crowd);
        add_into(&mut live_mix, &crowd);
    }

    let sr = spec.sample_rate;
    write_mono(studio_mix, sr, &bundle.studio_mix)?;
    write_mono(vocal, sr, &bundle.studio_stems_dir.join(VOCALS_FILE))?;
    write_mono(
        accompaniment,
        sr,
        &bundle.studio_stems_dir.join(ACCOMPANIMENT_FILE),
    )?;
    write_mono(live_mix, sr, &bundle.live_mix)?;
    write_mono(
        live_vocal_stem,
        sr,
        &bundle.live_stems_dir.join(VOCALS_FILE),
    )?;
    write_mono(
        live_acc_stem,
        sr,
        &bundle.live_stems_dir.join(ACCOMPANIMENT_FILE),
    )?;
    let spec_path = out_dir.join(SPEC_FILE);
    std::fs::write(&spec_path, spec.to_text()).map_err(|e| Error::io(&spec_path, e))?;
    Ok(bundle)
}

/// `10 log10(|reference|^2 / |reference - estimate|^2)`; `+inf` on an exact match.
pub fn snr_db(reference: &MonoSignal, estimate: &MonoSignal) -> Result<f64> {
    crate::audio::ensure_same_shape(reference, estimate)?;
    snr_db_of(reference.samples(), estimate.samples())
}

fn snr_db_of(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    let signal: f64 = reference.iter().map(|x| x * x).sum();
    if signal == 0.0 {
        return Err(Error::Degenerate("SNR reference is all zeros".into()));
    }
    let error: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e).powi(2))
        .sum();
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / error).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    /// Level of the playback vocal left in the residual relative to the live
    /// vocal stem before subtraction, dB. 0 means nothing was cancelled.
    #[serde(with = "extended_float")]
    pub cancellation_db: f64,
    /// `snr_db(truth, residual)`; absent for fixtures without a live vocal.
    pub live_vocal_snr_db: Option<f64>,
    pub compared_samples: usize,
}

/// Score a residual produced from this bundle's inputs.
///
/// The truth vocal is stored on the live timeline, which the residual shares,
/// so it is compared at offset zero. When a truth vocal exists it is removed
/// from both the residual and the live vocal stem before the cancellation
/// ratio is taken, so that ratio measures only the leftover playback.
pub fn score_extraction(bundle: &FixtureBundle, residual: &MonoSignal) -> Result<Scorecard> {
    let live_voc = to_mono(&load_wav(bundle.live_stems_dir.join(VOCALS_FILE))?);
    crate::audio::ensure_same_rate(&live_voc, residual)?;
    let truth = bundle
        .truth_live_vocal
        .as_ref()
        .map(|p| load_wav(p).map(|c| to_mono(&c)))
        .transpose()?;

    let mut n = live_voc.len().min(residual.len());
    if let Some(t) = &truth {
        n = n.min(t.len());
    }
    if n == 0 {
        return Err(Error::EmptySignal("nothing to score after truncation"));
    }
    let live = &live_voc.samples()[..n];
    let res = &residual.samples()[..n];

    let (before, after): (Vec<f64>, Vec<f64>) = match &truth {
        Some(t) => {
            let t = &t.samples()[..n];
            (
                live.iter().zip(t).map(|(l, t)| l - t).collect(),
                res.iter().zip(t).map(|(r, t)| r - t).collect(),
            )
        }
        None => (live.to_vec(), res.to_vec()),
    };
    let cancellation_db = rms_dbfs_of(&after) - rms_dbfs_of(&before);
    let live_vocal_snr_db = truth
        .as_ref()
        .map(|t| snr_db_of(&t.samples()[..n], res))
        .transpose()?;
    Ok(Scorecard {
        cancellation_db,
        live_vocal_snr_db,
        compared_samples: n,
    })
}
