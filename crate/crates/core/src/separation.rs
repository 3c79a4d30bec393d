//! Vocal/accompaniment separation boundary.
//!
//! A separator, whatever model sits behind it, must leave two files in an
//! output directory: `vocals.wav` and `accompaniment.wav`, at the input's
//! sample rate. Either an external command is run to produce them, or they
//! are read from a directory that already holds them.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::audio::{match_lengths, to_mono, MonoSignal};
use crate::error::{Error, Result};
use crate::wav::load_wav;

pub const VOCALS_FILE: &str = "vocals.wav";
pub const ACCOMPANIMENT_FILE: &str = "accompaniment.wav";
pub const INPUT_PLACEHOLDER: &str = "{input}";
pub const OUTDIR_PLACEHOLDER: &str = "{outdir}";
pub const DEFAULT_TIMEOUT_SECONDS: f64 = 600.0;

/// Vocal and accompaniment stems of one recording, equal length and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StemPair {
    vocals: MonoSignal,
    accompaniment: MonoSignal,
    source_label: String,
}

impl StemPair {
    /// Zero-pads the shorter stem so both have the same length.
    pub fn new(
        vocals: MonoSignal,
        accompaniment: MonoSignal,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        if vocals.is_empty() || accompaniment.is_empty() {
            return Err(Error::EmptySignal("stems must be non-empty"));
        }
        let (vocals, accompaniment) = match_lengths(&vocals, &accompaniment)?;
        Ok(Self {
            vocals,
            accompaniment,
            source_label: source_label.into(),
        })
    }

    pub fn vocals(&self) -> &MonoSignal {
        &self.vocals
    }

    pub fn accompaniment(&self) -> &MonoSignal {
        &self.accompaniment
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn sample_rate(&self) -> u32 {
        self.vocals.sample_rate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SeparatorMode {
    ExternalCommand { command_template: String },
    PreSeparated { stems_dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatorSpec {
    #[serde(flatten)]
    pub mode: SeparatorMode,
    pub timeout_seconds: f64,
}

impl SeparatorSpec {
    pub fn external(command_template: impl Into<String>) -> Self {
        Self {
            mode: SeparatorMode::ExternalCommand {
                command_template: command_template.into(),
            },
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
        }
    }

    pub fn pre_separated(stems_dir: impl Into<PathBuf>) -> Self {
        Self {
            mode: SeparatorMode::PreSeparated {
                stems_dir: stems_dir.into(),
            },
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
        }
    }

    pub fn with_timeout(mut self, seconds: f64) -> Self {
        self.timeout_seconds = seconds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_seconds > 0.0 && self.timeout_seconds.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "separator timeout must be positive, got {}",
                self.timeout_seconds
            )));
        }
        if let SeparatorMode::ExternalCommand { command_template } = &self.mode {
            for placeholder in [INPUT_PLACEHOLDER, OUTDIR_PLACEHOLDER] {
                let n = command_template.matches(placeholder).count();
                if n != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "separator template must contain {placeholder} exactly once (found {n})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Split a stem pair out of `input` as configured by `spec`.
pub fn separate(spec: &SeparatorSpec, input: &Path) -> Result<StemPair> {
    spec.validate()?;
    let label = input.display().to_string();
    match &spec.mode {
        SeparatorMode::PreSeparated { stems_dir } => load_stems(stems_dir, label),
        SeparatorMode::ExternalCommand { command_template } => {
            std::fs::metadata(input).map_err(|e| Error::io(input, e))?;
            run_external(command_template, spec.timeout_seconds, input, label)
        }
    }
}

/// Read `vocals.wav` and `accompaniment.wav` from `dir`, mixed to mono.
pub fn load_stems(dir: &Path, source_label: impl Into<String>) -> Result<StemPair> {
    let load = |name: &str| -> Result<MonoSignal> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingStem { path });
        }
        Ok(to_mono(&load_wav(&path)?))
    };
    StemPair::new(load(VOCALS_FILE)?, load(ACCOMPANIMENT_FILE)?, source_label)
}

fn command_line(template: &str, input: &Path, outdir: &Path) -> Result<Vec<String>> {
    let tokens = shlex::split(template).ok_or_else(|| {
        Error::InvalidArgument(format!("cannot parse separator template {template:?}"))
    })?;
    if tokens.is_empty() {
        return Err(Error::InvalidArgument("separator template is empty".into()));
    }
    let input = input.to_string_lossy();
    let outdir = outdir.to_string_lossy();
    Ok(tokens
        .into_iter()
        .map(|t| {
            t.replace(INPUT_PLACEHOLDER, &input)
                .replace(OUTDIR_PLACEHOLDER, &outdir)
        })
        .collect())
}

fn run_external(template: &str, timeout: f64, input: &Path, label: String) -> Result<StemPair> {
    let workdir = tempfile::Builder::new()
        .prefix("livevox-sep-")
        .tempdir()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let argv = command_line(template, input, workdir.path())?;

    let outcome = run_with_timeout(&argv, Duration::from_secs_f64(timeout), workdir.path())
        .and_then(|()| load_stems(workdir.path(), label));
    if outcome.is_err() {
        // Leave the directory behind for inspection.
        let _ = workdir.keep();
    }
    outcome
}

fn run_with_timeout(argv: &[String], timeout: Duration, outdir: &Path) -> Result<()> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::SeparatorFailed {
            code: None,
            stderr: format!("failed to launch {:?}: {e}", argv[0]),
            outdir: outdir.into(),
        })?;

    let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
    let stderr_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait().map_err(|e| Error::io(&argv[0], e))? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::SeparatorTimeout {
                    seconds: timeout.as_secs_f64(),
                    outdir: outdir.into(),
                });
            }
            None => std::thread::sleep(Duration::from_millis(10)),
        }
    };
    let stderr = stderr_reader.join().unwrap_or_default();
    if status.success() {
        Ok(())
    } else {
        Err(Error::SeparatorFailed {
            code: status.code(),
            stderr: stderr.trim_end().to_owned(),
            outdir: outdir.into(),
        })
    }
}
