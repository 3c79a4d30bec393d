//! Live vocal extraction.
//!
//! Given a recording of a live performance and the released studio track it
//! was performed over, both are split into vocal and accompaniment stems. The
//! studio stems are aligned to the live ones by GCC-PHAT on the
//! accompaniments, the studio vocal is gain-matched by least squares on the
//! best-correlated frame, a final frame-wise lag correction is applied and
//! the studio vocal is subtracted. What remains is the live singing.
//!
//! ```no_run
//! use livevox::{extract_live_vocals, PipelineConfig, SeparatorSpec};
//! use std::path::Path;
//!
//! let config = PipelineConfig::new(
//!     SeparatorSpec::pre_separated("stems/live"),
//!     SeparatorSpec::pre_separated("stems/studio"),
//! );
//! let (residual, report) =
//!     extract_live_vocals(Path::new("live.wav"), Path::new("studio.wav"), &config)?;
//! println!("coarse lag {} samples, gain {:.4}", report.coarse_lag.lag, report.scale.alpha);
//! # Ok::<(), livevox::Error>(())
//! ```

pub mod alignment;
pub mod audio;
pub mod error;
pub mod framing;
pub mod gain;
pub mod harness;
pub mod pipeline;
pub mod report;
pub mod separation;
pub mod wav;

pub use alignment::{
    coarse_align, framewise_fine_lag, gcc_phat, gcc_phat_naive, FineLag, FrameLagVote, LagEstimate,
};
pub use audio::{match_lengths, rms_dbfs, scale, shift, subtract, to_mono, AudioClip, MonoSignal};
pub use error::{Error, Result};
pub use gain::{
    best_frame, estimate_scale, framewise_pearson, least_squares_scale, FrameCorrelation,
    ScaleEstimate,
};
pub use pipeline::{extract_from_stems, extract_live_vocals, AnalysisParams, PipelineConfig};
pub use report::{read_report, write_report, ExtractionReport};
pub use separation::{separate, SeparatorMode, SeparatorSpec, StemPair};
pub use wav::{load_wav, write_wav, Encoding};
