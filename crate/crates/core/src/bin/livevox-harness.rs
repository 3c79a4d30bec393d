use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use livevox::harness::{generate_fixture, score_extraction, FixtureBundle, FixtureSpec};
use livevox::{load_wav, to_mono, Error};

#[derive(Parser)]
#[command(
    name = "livevox-harness",
    version,
    about = "Synthetic fixtures and scoring for livevox"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fixture bundle described by a key=value spec file.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an extracted residual against a fixture bundle.
    Score {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        residual: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { spec, out } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::Io {
                path: spec,
                source: e,
            })?;
            let bundle = generate_fixture(&FixtureSpec::parse(&text)?, &out)?;
            println!("{}", bundle.root.display());
        }
        Command::Score {
            bundle,
            residual,
            report,
        } => {
            let bundle = FixtureBundle::open(&bundle)?;
            let residual = to_mono(&load_wav(&residual)?);
            let card = score_extraction(&bundle, &residual)?;
            let text = serde_json::to_string_pretty(&card)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            std::fs::write(&report, text + "\n").map_err(|e| Error::Io {
                path: report,
                source: e,
            })?;
            println!("cancellation {:.2} dB", card.cancellation_db);
            if let Some(snr) = card.live_vocal_snr_db {
                println!("live vocal SNR {snr:.2} dB");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
