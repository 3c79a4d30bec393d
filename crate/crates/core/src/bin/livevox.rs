use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use livevox::{
    extract_live_vocals, write_report, write_wav, AnalysisParams, AudioClip, Encoding, Error,
    PipelineConfig, SeparatorSpec,
};

#[derive(Parser)]
#[command(
    name = "livevox",
    version,
    about = "Extract live vocals from a performance recording"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cancel the studio vocal out of a live recording.
    Extract(ExtractArgs),
}

#[derive(Parser)]
struct ExtractArgs {
    /// Live performance audio.
    #[arg(long)]
    live: PathBuf,
    /// Released studio track.
    #[arg(long)]
    studio: PathBuf,
    /// Where to write the extracted live vocal.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON report of every intermediate decision.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Separator command with {input} and {outdir} placeholders.
    #[arg(long)]
    separator_cmd: Option<String>,
    /// Directory with vocals.wav and accompaniment.wav for the live input.
    #[arg(long)]
    live_stems: Option<PathBuf>,
    /// Directory with vocals.wav and accompaniment.wav for the studio input.
    #[arg(long)]
    studio_stems: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    coarse_max_lag: f64,
    #[arg(long, default_value_t = 0.25)]
    fine_max_shift: f64,
    #[arg(long, default_value_t = 1.0)]
    frame: f64,
    #[arg(long, default_value_t = 0.5)]
    hop: f64,
    #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
    silence_floor: f64,
    #[arg(long, default_value = "float32")]
    encoding: Encoding,
}

fn separator_for(
    stems: Option<PathBuf>,
    cmd: &Option<String>,
    which: &str,
) -> Result<SeparatorSpec, Error> {
    match (stems, cmd) {
        (Some(dir), _) => Ok(SeparatorSpec::pre_separated(dir)),
        (None, Some(cmd)) => Ok(SeparatorSpec::external(cmd.clone())),
        (None, None) => Err(Error::InvalidArgument(format!(
            "no separator for the {which} input: pass --{which}-stems or --separator-cmd"
        ))),
    }
}

fn run(args: ExtractArgs) -> Result<(), Error> {
    let config = PipelineConfig {
        params: AnalysisParams {
            coarse_max_lag_seconds: args.coarse_max_lag,
            fine_max_shift_seconds: args.fine_max_shift,
            frame_seconds: args.frame,
            hop_seconds: args.hop,
            silence_floor_dbfs: args.silence_floor,
            output_encoding: args.encoding,
        },
        live_separator: separator_for(args.live_stems, &args.separator_cmd, "live")?,
        studio_separator: separator_for(args.studio_stems, &args.separator_cmd, "studio")?,
    };
    let (residual, report) = extract_live_vocals(&args.live, &args.studio, &config)?;
    write_wav(
        &AudioClip::from(residual),
        &args.out,
        config.params.output_encoding,
    )?;
    if let Some(path) = &args.report {
        write_report(&report, path)?;
    }
    eprintln!(
        "coarse lag {} samples, gain {:.6} (frame {}, r = {:.4}), fine lag {} samples, residual {:.1} dBFS",
        report.coarse_lag.lag,
        report.scale.alpha,
        report.scale.frame_index,
        report.scale.pearson_r,
        report.fine_lag,
        report.residual_rms_dbfs
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Extract(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
