//! Verdict invariants and preset behavior.

use clockstab::feasibility::{
    builtin_presets, evaluate, preset_by_name, report, ReferencePreset, ReportFormat, Requirement,
};
use clockstab::pn_profile::{PnProfile, PowerLawTerm};
use clockstab::spectral_jitter::{adev, IntegrationSpec};
use std::f64::consts::LN_2;

fn spec() -> IntegrationSpec {
    IntegrationSpec::new(1.0, 2.0)
}

#[test]
fn level_offset_scales_min_adev() {
    let base = preset_by_name("rc_osc").unwrap();
    let v0 = evaluate(&base, &Requirement::ble(), &spec()).unwrap();
    for db in [-6.0, 3.0, 10.0] {
        let p = ReferencePreset {
            profile: base.profile.with_level_offset(db).unwrap(),
            ..base.clone()
        };
        let v = evaluate(&p, &Requirement::ble(), &spec()).unwrap();
        let want = v0.min_adev * 10f64.powf(db / 20.0);
        assert!(((v.min_adev - want) / want).abs() < 1e-9, "{db} dB: {} vs {want}", v.min_adev);
    }
}

#[test]
fn pass_iff_positive_margin() {
    for p in builtin_presets() {
        for ppm in [1e-3, 0.01, 0.1, 60.0] {
            let r = Requirement { ppm, ..Requirement::ble() };
            let v = evaluate(&p, &r, &spec()).unwrap();
            assert_eq!(v.pass, v.margin_db > 0.0, "{} at {ppm} ppm", p.name);
        }
    }
}

#[test]
fn json_round_trip_keeps_verdict() {
    for p in builtin_presets() {
        let back = PnProfile::from_json(&p.profile.to_json().unwrap()).unwrap();
        let q = ReferencePreset { profile: back, ..p.clone() };
        let a = evaluate(&p, &Requirement::ble(), &spec()).unwrap();
        let b = evaluate(&q, &Requirement::ble(), &spec()).unwrap();
        assert!(((a.min_adev - b.min_adev) / a.min_adev).abs() <= 1e-12, "{}", p.name);
        assert_eq!(a.pass, b.pass);
    }
}

#[test]
fn threshold_flips_at_tenth_of_a_db() {
    let f0: f64 = 2.4e9;
    // Flicker floor exactly 60e-6: 4·ln2·c3/f0² = (60e-6)².
    let c3 = (60e-6 * f0).powi(2) / (4.0 * LN_2);
    let profile = PnProfile::from_power_law(f0, vec![PowerLawTerm::new(3, c3)], 1.0, 100.0 * f0).unwrap();
    let mk = |db: f64| ReferencePreset {
        name: "edge".into(),
        native_hz: f0,
        profile: profile.with_level_offset(db).unwrap(),
        notes: String::new(),
    };
    assert!(evaluate(&mk(-0.1), &Requirement::ble(), &spec()).unwrap().pass);
    assert!(!evaluate(&mk(0.1), &Requirement::ble(), &spec()).unwrap().pass);
}

#[test]
fn gfsk_and_single_tone_converge() {
    let tone = preset_by_name("rf_single_tone").unwrap().profile;
    let gfsk = preset_by_name("rf_gfsk").unwrap().profile;
    let s = IntegrationSpec::for_spectrum(&tone);
    let g = IntegrationSpec::for_spectrum(&gfsk);
    let ratio = |n: f64| adev(&gfsk, n, &g).unwrap() / adev(&tone, n, &s).unwrap();
    let r_mid = ratio(3000.0);
    assert!(r_mid > 2.0, "modulation should dominate near one bit period: {r_mid}");
    let r = ratio(1e8);
    assert!((r - 1.0).abs() <= 0.2, "ratio at 1e8 periods: {r}");
}

#[test]
fn markdown_table_for_three_presets() {
    let v: Vec<_> = ["rtc_div_xo", "rc_osc", "rf_single_tone"]
        .iter()
        .map(|n| evaluate(&preset_by_name(n).unwrap(), &Requirement::ble(), &spec()).unwrap())
        .collect();
    let md = report(&v, ReportFormat::Markdown).unwrap();
    let rows: Vec<&str> = md.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.trim_end().ends_with("| yes |")));
    assert!(md.starts_with("| preset | f_c (Hz) | min ADEV | N_flat | requirement | pass |"));
}

#[test]
fn json_report_carries_fields() {
    let v = evaluate(&preset_by_name("rtc_div_xo").unwrap(), &Requirement::ble(), &spec()).unwrap();
    let text = report(std::slice::from_ref(&v), ReportFormat::Json).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let o = &parsed[0];
    assert_eq!(o["pass"], true);
    for key in ["preset", "min_adev", "n_flat", "margin_db", "f_c_hz", "annotations"] {
        assert!(o.get(key).is_some(), "missing {key}");
    }
    let csv = report(&[v], ReportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 2);
}
