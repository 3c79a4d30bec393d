//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the summary is always printed.

use std::path::Path;
use std::time::Instant;

use livevox::harness::{generate_fixture, score_extraction, snr_db, FixtureBundle, FixtureSpec};
use livevox::{
    coarse_align, extract_live_vocals, gcc_phat, gcc_phat_naive, least_squares_scale, shift,
    write_wav, AudioClip, Encoding, ExtractionReport, MonoSignal, PipelineConfig, SeparatorSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RATE: u32 = 44_100;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn white(len: usize, rng: &mut ChaCha8Rng, amp: f64) -> Vec<f64> {
    (0..len).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
}

fn mono(v: Vec<f64>) -> MonoSignal {
    MonoSignal::new(v, RATE).unwrap()
}

fn run_fixture(bundle: &FixtureBundle) -> (MonoSignal, ExtractionReport) {
    let config = PipelineConfig::new(
        SeparatorSpec::pre_separated(&bundle.live_stems_dir),
        SeparatorSpec::pre_separated(&bundle.studio_stems_dir),
    );
    extract_live_vocals(&bundle.live_mix, &bundle.studio_mix, &config).expect("pipeline run")
}

fn lip_sync_spec(duration_seconds: f64) -> FixtureSpec {
    FixtureSpec {
        delay_samples: 88_200,
        playback_gain: 0.8,
        live_vocal_gain_dbfs: None,
        noise_floor_dbfs: None,
        tempo_ratio: 1.0,
        seed: 2024,
        duration_seconds,
        sample_rate: RATE,
    }
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let x = mono(white(rng.gen_range(1..=4096), &mut rng, 1.0));
        let y = mono(white(rng.gen_range(1..=4096), &mut rng, 1.0));
        let max_lag = rng.gen_range(1..=512);
        let fast = gcc_phat(&x, &y, max_lag).map_err(|e| e.to_string())?;
        let slow = gcc_phat_naive(&x, &y, max_lag).map_err(|e| e.to_string())?;
        check(
            fast.lag == slow.lag,
            format!("case {case}: lag {} vs {}", fast.lag, slow.lag),
        )?;
        worst = worst.max((fast.peak_value - slow.peak_value).abs());
    }
    let secs = started.elapsed().as_secs_f64();
    check(worst <= 1e-9, format!("peak value differs by {worst:e}"))?;
    check(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("200 pairs, max peak diff {worst:.1e}, {secs:.1} s"))
}

fn exact_lag_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = mono(white(5 * RATE as usize, &mut rng, 0.5));
    let mut worst_noisy = 0i64;
    for d in [0i64, 1, 441, 44_100, 881_999] {
        let x = shift(&s, d).unwrap();
        let est = coarse_align(&x, &s, 20.0).map_err(|e| e.to_string())?;
        check(est.lag == d, format!("clean d={d}: got {}", est.lag))?;

        // independent white noise on both sides at 10 dB SNR
        let noise_amp = 0.5 * 10f64.powf(-10.0 / 20.0);
        let xn = mono(
            x.samples()
                .iter()
                .zip(white(x.len(), &mut rng, noise_amp))
                .map(|(a, b)| a + b)
                .collect(),
        );
        let yn = mono(
            s.samples()
                .iter()
                .zip(white(s.len(), &mut rng, noise_amp))
                .map(|(a, b)| a + b)
                .collect(),
        );
        let est = coarse_align(&xn, &yn, 20.0).map_err(|e| e.to_string())?;
        let err = (est.lag - d).abs();
        check(err <= 1, format!("noisy d={d}: got {}", est.lag))?;
        worst_noisy = worst_noisy.max(err);
    }
    Ok(format!(
        "clean exact, noisy max |error| {worst_noisy} samples"
    ))
}

/// Coarse grid then golden-section refinement of |a*rec - live|^2.
fn numeric_argmin(rec: &[f64], live: &[f64]) -> f64 {
    let cost = |a: f64| -> f64 { rec.iter().zip(live).map(|(r, l)| (a * r - l).powi(2)).sum() };
    let step = 0.01;
    let start = (-500..=500)
        .map(|i| f64::from(i) * step)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .unwrap();
    let (mut lo, mut hi) = (start - step, start + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

fn closed_form_gain() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_rel, mut worst_orth) = (0.0f64, 0.0f64);
    for case in 0..100 {
        let rec = white(512, &mut rng, 1.0);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let g = sign * rng.gen_range(0.2..3.0);
        let live: Vec<f64> = rec
            .iter()
            .zip(white(512, &mut rng, 0.3))
            .map(|(r, n)| g * r + n)
            .collect();
        let alpha = least_squares_scale(&rec, &live).map_err(|e| e.to_string())?;
        let numeric = numeric_argmin(&rec, &live);
        let rel = (alpha - numeric).abs() / alpha.abs();
        check(rel <= 1e-6, format!("case {case}: {alpha} vs {numeric}"))?;
        worst_rel = worst_rel.max(rel);

        let resid: Vec<f64> = rec.iter().zip(&live).map(|(r, l)| alpha * r - l).collect();
        let dot: f64 = resid.iter().zip(&rec).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ratio = dot.abs() / (norm(&rec) * norm(&resid));
        check(
            ratio <= 1e-6,
            format!("case {case}: orthogonality {ratio:e}"),
        )?;
        worst_orth = worst_orth.max(ratio);
    }
    let secs = started.elapsed().as_secs_f64();
    check(secs < 10.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "max rel {worst_rel:.1e}, max orthogonality {worst_orth:.1e}, {secs:.2} s"
    ))
}

fn paper_parameters(report: &ExtractionReport) -> Outcome {
    let r = report.resolved;
    check(r.sample_rate == RATE, format!("rate {}", r.sample_rate))?;
    check(
        r.frame_samples == 44_100,
        format!("frame {}", r.frame_samples),
    )?;
    check(r.hop_samples == 22_050, format!("hop {}", r.hop_samples))?;
    check(
        r.fine_max_lag_samples == 11_025,
        format!("fine {}", r.fine_max_lag_samples),
    )?;
    check(
        report.fine_max_lag == 11_025,
        format!("fine used {}", report.fine_max_lag),
    )?;
    check(
        r.coarse_max_lag_samples == 882_000,
        format!("coarse {}", r.coarse_max_lag_samples),
    )?;
    check(
        report.coarse_lag.max_lag == 882_000,
        format!("coarse used {}", report.coarse_lag.max_lag),
    )?;
    let c = report.config_echo;
    check(
        (
            c.coarse_max_lag_seconds,
            c.fine_max_shift_seconds,
            c.frame_seconds,
            c.hop_seconds,
        ) == (20.0, 0.25, 1.0, 0.5),
        "config echo differs from defaults",
    )?;
    Ok("frame 44100, hop 22050, fine 11025, coarse 882000".into())
}

fn lip_sync(bundle: &FixtureBundle, report: &ExtractionReport, secs: f64) -> Outcome {
    check(
        report.coarse_lag.lag == 88_200,
        format!("coarse lag {}", report.coarse_lag.lag),
    )?;
    check(
        (report.scale.alpha - 0.8).abs() <= 1e-6,
        format!("alpha {}", report.scale.alpha),
    )?;
    check(
        report.residual_rms_dbfs <= -40.0,
        format!("residual {:.1} dBFS", report.residual_rms_dbfs),
    )?;
    check(secs < 30.0, format!("took {secs:.1} s"))?;
    check(
        bundle.spec_echo.duration_seconds == 60.0,
        "fixture must be 60 s",
    )?;
    Ok(format!(
        "lag {}, alpha {:.9}, residual {:.1} dBFS, {secs:.1} s",
        report.coarse_lag.lag, report.scale.alpha, report.residual_rms_dbfs
    ))
}

fn live_vocal(dir: &Path) -> Outcome {
    let spec = FixtureSpec {
        live_vocal_gain_dbfs: Some(-10.0),
        ..lip_sync_spec(60.0)
    };
    let bundle = generate_fixture(&spec, dir).map_err(|e| e.to_string())?;
    let (residual, report) = run_fixture(&bundle);
    let card = score_extraction(&bundle, &residual).map_err(|e| e.to_string())?;
    let snr = card.live_vocal_snr_db.ok_or("no truth vocal")?;
    // cross-check the scorecard's SNR with the metric applied directly
    let truth =
        livevox::to_mono(&livevox::load_wav(bundle.truth_live_vocal.as_ref().unwrap()).unwrap());
    let n = truth.len().min(residual.len());
    let direct = snr_db(&truth.truncated(n), &residual.truncated(n)).map_err(|e| e.to_string())?;
    check(
        (direct - snr).abs() < 1e-9,
        "scorecard SNR disagrees with snr_db",
    )?;
    check(snr >= 20.0, format!("SNR {snr:.2} dB"))?;
    check(
        card.cancellation_db <= -25.0,
        format!("cancellation {:.2} dB", card.cancellation_db),
    )?;
    Ok(format!(
        "SNR {snr:.1} dB, cancellation {:.1} dB, alpha {:.6}, fine lag {}",
        card.cancellation_db, report.scale.alpha, report.fine_lag
    ))
}

fn tempo_mismatch(dir: &Path) -> Outcome {
    let spec = FixtureSpec {
        tempo_ratio: 1.005,
        ..lip_sync_spec(60.0)
    };
    let bundle = generate_fixture(&spec, dir).map_err(|e| e.to_string())?;
    let (_, report) = run_fixture(&bundle);
    let warned = report.warnings.iter().any(|w| w.contains("lag dispersion"));
    check(
        warned,
        format!(
            "no dispersion warning (dispersion {:.1})",
            report.lag_dispersion
        ),
    )?;
    Ok(format!(
        "dispersion {:.1} samples, warning raised",
        report.lag_dispersion
    ))
}

fn determinism(bundle: &FixtureBundle, dir: &Path) -> Outcome {
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for i in 0..2 {
        let (residual, report) = run_fixture(bundle);
        let path = dir.join(format!("residual-{i}.wav"));
        write_wav(&AudioClip::from(residual), &path, Encoding::Float32)
            .map_err(|e| e.to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        reports.push(report.without_durations());
    }
    check(files[0] == files[1], "residual WAV bytes differ")?;
    check(reports[0] == reports[1], "reports differ beyond durations")?;
    Ok(format!("{} identical bytes", files[0].len()))
}

fn performance(dir: &Path) -> Outcome {
    let spec = FixtureSpec {
        live_vocal_gain_dbfs: Some(-10.0),
        ..lip_sync_spec(210.0)
    };
    let bundle = generate_fixture(&spec, dir).map_err(|e| e.to_string())?;
    let (_, report) = run_fixture(&bundle);
    let secs = report.durations.processing();
    check(secs < 10.0, format!("processing took {secs:.2} s"))?;
    check(
        report.coarse_lag.lag == 88_200,
        format!("coarse lag {}", report.coarse_lag.lag),
    )?;
    Ok(format!(
        "3.5 min pair: {secs:.2} s excluding separation (coarse {:.2} s, gain {:.2} s, fine {:.2} s)",
        report.durations.coarse_align, report.durations.gain_match, report.durations.fine_align
    ))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let lip_dir = work.path().join("lip-sync");
    let lip_bundle = generate_fixture(&lip_sync_spec(60.0), &lip_dir).expect("lip-sync fixture");
    let started = Instant::now();
    let (_, lip_report) = run_fixture(&lip_bundle);
    let lip_secs = started.elapsed().as_secs_f64();

    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "GCC-PHAT matches direct-summation oracle",
            Box::new(oracle_equivalence),
        ),
        (
            "exact lag recovery up to the 20 s bound",
            Box::new(exact_lag_recovery),
        ),
        (
            "closed-form gain vs numeric minimizer",
            Box::new(closed_form_gain),
        ),
        (
            "frame/hop/lag bounds in samples",
            Box::new(|| paper_parameters(&lip_report)),
        ),
        (
            "lip-sync end-to-end",
            Box::new(|| lip_sync(&lip_bundle, &lip_report, lip_secs)),
        ),
        (
            "live-vocal end-to-end",
            Box::new(|| live_vocal(&work.path().join("live-vocal"))),
        ),
        (
            "tempo-mismatch diagnostic",
            Box::new(|| tempo_mismatch(&work.path().join("tempo"))),
        ),
        (
            "determinism",
            Box::new(|| determinism(&lip_bundle, work.path())),
        ),
        (
            "performance on 3.5 minutes",
            Box::new(|| performance(&work.path().join("long"))),
        ),
    ];

    let mut failed = 0;
    for (name, criterion) in &criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(criterion))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
