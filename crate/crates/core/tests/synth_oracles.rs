//! Monte-Carlo paths against analytic variances and the spectral module.

mod common;

use clockstab::noise_synth::{
    estimate_adev, estimate_adev_with, estimate_npaj, estimate_psd, synthesize, SynthSpec,
};
use clockstab::pn_profile::{db_to_lin, PowerLawTerm};
use clockstab::spectral_jitter::{closed_form, ClosedMetric, NoiseShape};
use common::{loglog_slope, mean, rel_err, std_dev};

fn spec(terms: Vec<PowerLawTerm>, f_min: f64, n: usize, seed: u64) -> SynthSpec {
    SynthSpec {
        terms,
        f_min_hz: f_min,
        duration_periods: n,
        seed,
    }
}

#[test]
fn white_fm_period_jitter_variance() {
    // Ls = 1e-10 at fs = 1 MHz, f0 = 1 GHz.
    let f0 = 1e9;
    let p = synthesize(&spec(vec![PowerLawTerm::new(2, 100.0)], 1e3, 10_000_000, 1), f0).unwrap();
    let d: Vec<f64> = p.phase_err_s.windows(2).map(|w| w[1] - w[0]).collect();
    let var = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
    let want = 1e-10 * 1e12 / f0.powi(3);
    assert!(rel_err(var, want) < 0.03, "{var} vs {want}");

    let a = estimate_adev(&p, &[1000]).unwrap().sigma_y[0];
    assert!(rel_err(a, 1e-5) < 0.10, "adev {a}");

    let n: Vec<usize> = vec![1, 3, 10, 30, 100, 300, 1000, 3000, 10000];
    let j = estimate_npaj(&p, &n).unwrap();
    let slope = loglog_slope(&j.n_values, &j.sigma_s);
    assert!((slope + 0.5).abs() < 0.05, "npaj slope {slope}");
}

#[test]
fn white_pm_npaj_at_one() {
    let f0 = 1e9;
    let c0 = db_to_lin(-150.0);
    let p = synthesize(&spec(vec![PowerLawTerm::new(0, c0)], 1e3, 1_000_000, 2), f0).unwrap();
    let sigma = p.phase_err_s.iter().map(|v| v * v).sum::<f64>() / p.n_samples() as f64;
    let j = estimate_npaj(&p, &[1]).unwrap().sigma_s[0];
    assert!(rel_err(j, (2.0 * sigma).sqrt()) < 0.03);
    // Analytic per-sample variance c0·f0/(4π²f0²).
    let want = c0 / (4.0 * std::f64::consts::PI.powi(2) * f0);
    assert!(rel_err(sigma, want) < 0.01, "{sigma} vs {want}");
}

#[test]
fn flicker_fm_flat_adev_and_npaj() {
    // Ls = 1e-10 at fs = 1 kHz, f0 = 1 MHz.
    let f0 = 1e6;
    let c3 = 1e-10 * 1e9;
    let p = synthesize(&spec(vec![PowerLawTerm::new(3, c3)], 1.0, 4_000_000, 3), f0).unwrap();
    let flat = closed_form(NoiseShape::Flicker { ls: 1e-10, fs_hz: 1e3, f_min_hz: 1.0 }, ClosedMetric::Adev, f0, 1.0)
        .unwrap();
    let n = vec![10, 30, 100, 300, 1000, 3000, 10000];
    let a = estimate_adev(&p, &n).unwrap();
    for (&nn, &s) in n.iter().zip(&a.sigma_y) {
        assert!(rel_err(s, flat) < 0.15, "N = {nn}: {s} vs {flat}");
    }
    let j = estimate_npaj(&p, &[100, 300, 1000]).unwrap();
    let slope = loglog_slope(&j.n_values, &j.sigma_s);
    assert!(slope.abs() <= 0.1, "flicker npaj slope {slope}");
}

#[test]
fn psd_of_white_pm_is_flat_at_level() {
    let f0 = 1e9;
    let level = -150.0;
    let p = synthesize(&spec(vec![PowerLawTerm::new(0, db_to_lin(level))], 1e3, 1 << 20, 4), f0)
        .unwrap();
    let e = estimate_psd(&p).unwrap();
    for (&f, &l) in e.freqs_hz.iter().zip(&e.level_dbc) {
        if f > 1e-3 * f0 && f < 0.3 * f0 {
            assert!((l - level).abs() < 1.0, "{f} Hz: {l} dBc/Hz");
        }
    }
    e.to_profile().unwrap();
}

fn fitted_psd_slope(e: &clockstab::noise_synth::PsdEstimate, lo: f64, hi: f64) -> f64 {
    let (mut f, mut l) = (Vec::new(), Vec::new());
    for (&x, &y) in e.freqs_hz.iter().zip(&e.level_dbc) {
        if x >= lo && x <= hi {
            f.push(x);
            l.push(10f64.powf(y / 10.0));
        }
    }
    assert!(f.len() >= 5, "too few bins in [{lo}, {hi}]");
    loglog_slope(&f, &l)
}

#[test]
fn psd_slopes() {
    let f0 = 1e6;
    let n = 1 << 22;
    let p = synthesize(&spec(vec![PowerLawTerm::new(2, 1.0)], 1.0, n, 5), f0).unwrap();
    let e = estimate_psd(&p).unwrap();
    let s2 = fitted_psd_slope(&e, 4.0 * e.resolution_hz, f0 / 20.0);
    assert!((s2 + 2.0).abs() < 0.15, "alpha 2 slope {s2}");

    let f_min = 2.0 * f0 / n as f64;
    let p = synthesize(&spec(vec![PowerLawTerm::new(3, 1.0)], f_min, n, 6), f0).unwrap();
    let e = estimate_psd(&p).unwrap();
    let lo = (10.0 * f_min).max(4.0 * e.resolution_hz);
    let s3 = fitted_psd_slope(&e, lo, f0 / 20.0);
    assert!((s3 + 3.0).abs() < 0.15, "alpha 3 slope {s3}");
}

#[test]
fn ensemble_standard_error_shrinks() {
    let f0 = 1e9;
    let one = |seed: u64| {
        let p = synthesize(&spec(vec![PowerLawTerm::new(2, 100.0)], 1e3, 1 << 14, seed), f0).unwrap();
        estimate_adev(&p, &[64]).unwrap().sigma_y[0]
    };
    let singles: Vec<f64> = (0..64).map(one).collect();
    let groups: Vec<f64> = (0..64)
        .map(|g| mean(&(0..16).map(|i| one(1000 + 16 * g + i)).collect::<Vec<_>>()))
        .collect();
    let ratio = std_dev(&groups) / std_dev(&singles);
    assert!((ratio - 0.25).abs() <= 0.3 * 0.25, "ratio {ratio}");
}

#[test]
fn non_overlapping_estimator_agrees_on_average() {
    let p = synthesize(&spec(vec![PowerLawTerm::new(2, 100.0)], 1e3, 1 << 20, 7), 1e9).unwrap();
    let a = estimate_adev_with(&p, &[16], true).unwrap().sigma_y[0];
    let b = estimate_adev_with(&p, &[16], false).unwrap().sigma_y[0];
    assert!(rel_err(b, a) < 0.1);
}
