//! Acceptance suite: one PASS/FAIL line per criterion, each with its
//! measured statistic and wall time against the time limit. Exits nonzero
//! if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gp_audio_core::tasks::synth::{self, GapExcerpt, PitchExcerpt};
use gp_audio_core::{
    estimate_pitch, fill_gaps, kernel_spectrum, resample_to_8k, AudioBuffer, KernelFamily,
    KernelSpec, Param,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let passed = outcome.passed && in_time;
    println!(
        "{} {name}: {} [{:.2} s, limit {} s{}]",
        if passed { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" },
    );
    passed
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn oracle_equivalence() -> Outcome {
    let mut lml = 0.0f64;
    let mut posterior = 0.0f64;
    let mut largest = 0;
    for seed in 0..50 {
        let n = 8 + (seed as usize * 7) % 57;
        let (model, data) = random_instance(seed, n);
        largest = largest.max(data.len());
        lml = lml.max(lml_oracle_error(&model, &data));
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let test = random_grid(&mut rng, 7, 0.03);
        posterior = posterior.max(posterior_oracle_error(&model, &data, &test));
    }
    Outcome {
        passed: lml < 1e-8 && posterior < 1e-8,
        detail: format!(
            "50 instances, N <= {largest}: max |LML error| {lml:.2e}, max |posterior error| {posterior:.2e} (tolerance 1e-8)"
        ),
    }
}

fn gradient_suite() -> Outcome {
    let mut lml = 0.0f64;
    let mut gram = 0.0f64;
    let mut covered = BTreeSet::new();
    for seed in 0..40 {
        let n = 12 + seed as usize % 21;
        let (model, data) = random_instance(2000 + seed, n);
        for p in all_params(&model.kernel) {
            covered.insert(match p {
                Param::Noise => "noise",
                Param::Event { param, .. } => param.name(),
            });
        }
        lml = lml.max(lml_gradient_fd_error(&model, &data));
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let kernel = random_kernel(&mut rng, 0.03);
        let times = random_grid(&mut rng, n, 0.03);
        gram = gram.max(gram_gradient_fd_error(&kernel, &times));
    }
    let all = ["noise", "sigma2", "l", "z", "omega"];
    let every_type = all.iter().all(|p| covered.contains(p));
    Outcome {
        passed: lml < 1e-5 && gram < 1e-5 && every_type,
        detail: format!(
            "40 models, N <= 32, parameters {{{}}}: max relative error LML gradient {lml:.2e}, Gram gradient {gram:.2e} (tolerance 1e-5)",
            covered.iter().copied().collect::<Vec<_>>().join(", ")
        ),
    }
}

fn sampling_fidelity() -> Outcome {
    let (err, tol) = sample_covariance_error(10_000, 17);
    Outcome {
        passed: err < tol,
        detail: format!("10000 draws on 6 points: max |empirical - K| {err:.4} (tolerance 5 k(0)/100 = {tol:.4})"),
    }
}

/// Modified Bessel function of the first kind by its power series.
fn bessel_i(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..100 {
        term *= half * half / (k as f64 * (k + n) as f64);
        sum += term;
    }
    sum
}

fn spectral_lines() -> Outcome {
    let spec = KernelSpec::ec(2.0, 2.0 * PI * 6.0).unwrap();
    let density = kernel_spectrum(&spec, 40.0, 401).unwrap();
    let bin = density.bin_width();
    // Taper sidelobes of the truncated lag grid leave ripple maxima below
    // 1e-5 of the peak; the lines themselves are above 1e-2.
    let peak = density.power.iter().copied().fold(0.0, f64::max);
    let maxima: Vec<f64> = density
        .local_maxima()
        .into_iter()
        .filter(|&i| density.frequencies[i] <= 20.0 && density.power[i] >= 1e-4 * peak)
        .map(|i| density.frequencies[i])
        .collect();
    let expected_lines = [0.0, 6.0, 12.0, 18.0];
    let found = maxima.len() == expected_lines.len()
        && maxima.iter().zip(&expected_lines).all(|(m, f)| (m - f).abs() <= bin + 1e-9);
    let weight = |h: usize| density.lines.iter().find(|l| l.harmonic == h).map(|l| l.weight);
    let (ratio, expected) = match (weight(1), weight(2)) {
        (Some(w1), Some(w2)) => (w1 / w2, bessel_i(1, 2.0) / bessel_i(2, 2.0)),
        _ => (f64::NAN, f64::NAN),
    };
    let rel = (ratio / expected - 1.0).abs();
    Outcome {
        passed: found && rel < 0.02,
        detail: format!(
            "EC(z=2, 6 Hz) maxima in 0-20 Hz above 1e-4 of peak at {maxima:?} Hz (bin {bin} Hz); 6:12 Hz weight ratio {ratio:.4} vs I1(2)/I2(2) = {expected:.4} ({:.2}% off, tolerance 2%)",
            100.0 * rel
        ),
    }
}

fn pitch_recovery(seeds: u64) -> Outcome {
    let (optim, options) = PitchExcerpt::search_settings();
    let mut rms: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for seed in 0..seeds {
        let excerpt = synth::paper_pitch(seed, None).unwrap();
        for (family, name) in [(KernelFamily::Ecq, "ECQ"), (KernelFamily::Ec, "EC")] {
            let result = estimate_pitch(
                &excerpt.data,
                &excerpt.events(family),
                excerpt.noise_variance,
                &optim,
                &options,
            );
            let value = match result {
                Ok(r) => r.rms_semitones.unwrap_or(f64::INFINITY),
                Err(_) => f64::INFINITY,
            };
            rms.entry(name).or_default().push(value);
        }
    }
    let (ecq, ec) = (median(&rms["ECQ"]), median(&rms["EC"]));
    Outcome {
        passed: ecq < 0.15 && ecq < ec,
        detail: format!(
            "{seeds} excerpts (N = 5600): median RMS ECQ {ecq:.4} st (< 0.15), EC {ec:.4} st (ECQ < EC)"
        ),
    }
}

fn gap_imputation(seeds: u64) -> Outcome {
    let families = [(KernelFamily::Ecq, "ECQ"), (KernelFamily::Ec, "EC"), (KernelFamily::Eq, "EQ")];
    let mut decay: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut transient: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for seed in 0..seeds {
        let excerpt = synth::paper_gaps(seed).unwrap();
        for (family, name) in families {
            let rms = excerpt
                .model(family)
                .and_then(|model| fill_gaps(&excerpt.data, &excerpt.gaps, &model, Some(&excerpt.truth), false))
                .map(|r| {
                    let g = &r.gaps;
                    (g[GapExcerpt::DECAY].rms.unwrap(), g[GapExcerpt::TRANSIENT].rms.unwrap())
                })
                .unwrap_or((f64::INFINITY, f64::INFINITY));
            decay.entry(name).or_default().push(rms.0);
            transient.entry(name).or_default().push(rms.1);
        }
    }
    let d = |name| median(&decay[name]);
    let t = |name| median(&transient[name]);
    Outcome {
        passed: d("ECQ") < d("EC") && d("EC") < d("EQ") && t("ECQ") < t("EQ"),
        detail: format!(
            "{seeds} excerpts: median decay-gap RMS ECQ {:.4} < EC {:.4} < EQ {:.4}; median transient-gap RMS ECQ {:.4} < EQ {:.4}",
            d("ECQ"),
            d("EC"),
            d("EQ"),
            t("ECQ"),
            t("EQ")
        ),
    }
}

fn resampler_sweep() -> Outcome {
    let rate = 44_100u32;
    let n = rate as usize / 2;
    let amplitude = 0.8;
    let tone = |hz: f64| {
        let samples = (0..n)
            .map(|i| amplitude * (2.0 * PI * hz * i as f64 / rate as f64).sin())
            .collect();
        resample_to_8k(&AudioBuffer::new(rate, samples).unwrap()).unwrap()
    };
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    // Skip the filter's reach at both ends, where the input is truncated.
    let interior = |x: &[f64]| x[400..x.len() - 400].to_vec();

    let mut worst_pass = 0.0f64;
    let mut hz = 50.0;
    while hz <= 3600.0 {
        let out = tone(hz);
        let ideal: Vec<f64> = (0..out.samples().len())
            .map(|i| amplitude * (2.0 * PI * hz * i as f64 / 8000.0).sin())
            .collect();
        let gain = rms(&interior(out.samples())) / rms(&interior(&ideal));
        worst_pass = worst_pass.max((gain - 1.0).abs());
        hz += 50.0;
    }
    let mut worst_stop = 0.0f64;
    let mut hz = 4000.0;
    while hz < 22_050.0 {
        let out = tone(hz);
        let gain = rms(&interior(out.samples())) / (amplitude / 2f64.sqrt());
        worst_stop = worst_stop.max(gain);
        hz += 100.0;
    }
    let stop_db = 20.0 * worst_stop.log10();
    Outcome {
        passed: worst_pass < 0.01 && stop_db <= -60.0,
        detail: format!(
            "44.1 kHz tones: passband 50-3600 Hz max gain error {:.4}% (< 1%), stopband 4-22 kHz max gain {stop_db:.1} dB (<= -60 dB)",
            100.0 * worst_pass
        ),
    }
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gp-audio");
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let write = |name: &str, text: &str| std::fs::write(root.join(name), text).unwrap();
    write(
        "sample.json",
        r#"{"sample": {"kernel": {"noise_variance": 0.0, "events": [{"window": {"varsigma": 1000, "alpha": 0.1, "beta": 0.4}, "kernel": {"type": "ECQ", "z": 2, "omega": 62.83185307179586, "l": 0.5}}]}, "grid": {"start": 0.0, "step": 0.005, "n": 100}, "n_samples": 3}}"#,
    );
    write(
        "spectrum.json",
        r#"{"spectrum": {"kernel": {"type": "ECQ", "z": 5, "omega": 37.69911184307752, "l": 4}, "f_max": 40, "n_points": 401}}"#,
    );
    write("gen_pitch.json", r#"{"gen": {"preset": "paper-pitch"}}"#);
    write("gen_gaps.json", r#"{"gen": {"preset": "paper-gaps"}}"#);

    let run = |command: &str, config: &str, out: &str| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let status = Command::new(bin)
            .args([command, "--config", config, "--out", out, "--seed", "11", "--quiet"])
            .current_dir(root)
            .env_remove("GP_AUDIO_MAX_N")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("{command} failed: {}", String::from_utf8_lossy(&status.stderr).trim()));
        }
        Ok(snapshot(&root.join(out)))
    };
    // The generated excerpts feed the pitch and fill runs.
    let jobs = [
        ("sample", "sample.json"),
        ("spectrum", "spectrum.json"),
        ("gen", "gen_pitch.json"),
        ("gen", "gen_gaps.json"),
        ("pitch", "gen_pitch.json.a/pitch_ecq.json"),
        ("fill", "gen_gaps.json.a/fill_ecq.json"),
    ];
    let mut checked = Vec::new();
    for (command, config) in jobs {
        let a = run(command, config, &format!("{}.a", config.replace('/', "_")));
        let b = run(command, config, &format!("{}.b", config.replace('/', "_")));
        let (a, b) = match (a, b) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return Outcome {
                    passed: false,
                    detail: e,
                }
            }
        };
        if a != b || a.is_empty() {
            return Outcome {
                passed: false,
                detail: format!("`{command} --config {config}` outputs differ between runs"),
            };
        }
        checked.push(format!("{command} ({} files)", a.len()));
    }
    Outcome {
        passed: true,
        detail: format!("byte-identical outputs across two runs: {}", checked.join(", ")),
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
                })
                .collect()
        })
        .unwrap_or_default()
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        check("oracle-equivalence", secs(10), oracle_equivalence),
        check("gradient-suite", secs(30), gradient_suite),
        check("sampling-fidelity", secs(10), sampling_fidelity),
        check("spectral-lines", secs(10), spectral_lines),
        check("resampler", secs(5), resampler_sweep),
        check("cli-determinism", secs(600), cli_determinism),
        check("pitch-recovery", secs(15 * 60), || pitch_recovery(20)),
        check("gap-imputation", secs(20 * 60), || gap_imputation(20)),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
