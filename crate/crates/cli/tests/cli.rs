//! End-to-end runs of the `clockstab` binary.

use std::path::Path;
use std::process::{Command, Output};

use clockstab::pn_profile::{PnProfile, PowerLawTerm};
use clockstab::spectral_jitter::{closed_form, parse_curve_csv, ClosedMetric, NoiseShape};

fn clockstab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clockstab"))
        .args(args)
        .current_dir(dir)
        .env_remove("CLOCKSTAB_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

const F0: f64 = 1e9;

#[test]
fn analyze_white_fm_slope() {
    let d = tempfile::tempdir().unwrap();
    PnProfile::from_power_law(F0, vec![PowerLawTerm::new(2, 100.0)], 1e-3, 100.0 * F0)
        .unwrap()
        .save(d.path().join("white.json"))
        .unwrap();
    let o = clockstab(
        &["analyze", "--profile", "white.json", "--nmin", "1", "--nmax", "1e6", "--out", "res"],
        d.path(),
    );
    ok(&o);
    let t = parse_curve_csv(&std::fs::read_to_string(d.path().join("res/adev.csv")).unwrap()).unwrap();
    let slope = loglog_slope(&t.n, &t.sigma);
    assert!((slope + 0.5).abs() <= 0.05, "slope {slope}");
    assert!(d.path().join("res/npaj.csv").exists());
    let m = json(&d.path().join("res/manifest.json"));
    assert_eq!(m["command"], "analyze");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["inputs"][0], "white.json");
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn analyze_flicker_summary_min_adev() {
    let d = tempfile::tempdir().unwrap();
    let (ls, fs, f_min) = (1e-10, 1e3, 1e-3);
    PnProfile::from_power_law(F0, vec![PowerLawTerm::new(3, ls * fs * fs * fs)], f_min, 100.0 * F0)
        .unwrap()
        .save(d.path().join("flicker.json"))
        .unwrap();
    ok(&clockstab(&["analyze", "--profile", "flicker.json", "--out", "."], d.path()));
    let s = json(&d.path().join("summary.json"));
    let got = s["min_adev"].as_f64().unwrap();
    let want = closed_form(NoiseShape::Flicker { ls, fs_hz: fs, f_min_hz: f_min }, ClosedMetric::Adev, F0, 1.0).unwrap();
    assert!(((got - want) / want).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn analyze_json_format_and_bad_metric() {
    let d = tempfile::tempdir().unwrap();
    ok(&clockstab(
        &["analyze", "--preset", "rtc_div_xo", "--metrics", "npj,cc", "--format", "json", "--nmax", "1e3"],
        d.path(),
    ));
    let c = json(&d.path().join("curves.json"));
    assert_eq!(c["npj"]["n"].as_array().unwrap().len(), c["cc"]["sigma"].as_array().unwrap().len());
    let o = clockstab(&["analyze", "--preset", "rtc_div_xo", "--metrics", "bogus"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.json"), "{not json").unwrap();
    for args in [
        vec!["analyze", "--profile", "bad.json"],
        vec!["analyze", "--profile", "missing.json"],
        vec!["analyze", "--preset", "no_such_preset"],
        vec!["plot", "missing.csv"],
    ] {
        let o = clockstab(&args, d.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    std::fs::write(d.path().join("empty.csv"), "").unwrap();
    assert_eq!(clockstab(&["plot", "empty.csv"], d.path()).status.code(), Some(2));
}

#[test]
fn feasibility_builtin_markdown() {
    let d = tempfile::tempdir().unwrap();
    let o = clockstab(&["feasibility", "--format", "md"], d.path());
    ok(&o);
    let md = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = md.lines().skip(2).filter(|l| l.starts_with('|')).collect();
    assert_eq!(rows.len(), 4, "{md}");
    assert!(rows.iter().all(|r| r.ends_with("| yes |")), "{md}");
    assert_eq!(std::fs::read_to_string(d.path().join("report.md")).unwrap(), md);
    assert!(d.path().join("manifest.json").exists());
}

#[test]
fn feasibility_strict_requirement_fails() {
    let d = tempfile::tempdir().unwrap();
    ok(&clockstab(&["feasibility", "--preset", "rc_osc", "--ppm", "0.01", "--format", "json"], d.path()));
    let v = json(&d.path().join("report.json"));
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["pass"], false);
}

#[test]
fn pll_both_modes_sqrt_w() {
    let d = tempfile::tempdir().unwrap();
    ok(&clockstab(&["pll", "--mode", "both", "--window", "16", "--ensemble", "500", "--seed", "9"], d.path()));
    let s = json(&d.path().join("summary.json"));
    let ratio = s["std_ratio"].as_f64().unwrap();
    assert!((ratio / 0.25 - 1.0).abs() < 0.2, "ratio {ratio}");
    let m = json(&d.path().join("manifest.json"));
    assert_eq!(m["seeds"].as_array().unwrap().len(), 500);
    assert_eq!(m["seeds"][0], 9);
    let csv = std::fs::read_to_string(d.path().join("release.csv")).unwrap();
    assert_eq!(csv.lines().count(), 501);
}

#[test]
fn pll_without_lock_exits_4() {
    let d = tempfile::tempdir().unwrap();
    let o = clockstab(&["pll", "--ensemble", "100", "--max-lock-cycles", "3", "--seed", "1"], d.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn synth_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["synth", "--preset", "rf_single_tone", "--samples", "100000", "--seed", "42", "--ensemble", "2", "--out", out]
    };
    ok(&clockstab(&args("a"), d.path()));
    ok(&clockstab(&args("b"), d.path()));
    for f in ["path_42.csph", "path_43.csph", "path_42.json", "adev_43.csv"] {
        let a = std::fs::read(d.path().join("a").join(f)).unwrap();
        let b = std::fs::read(d.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn synth_records_generated_seed() {
    let d = tempfile::tempdir().unwrap();
    ok(&clockstab(&["synth", "--preset", "rf_single_tone", "--samples", "50000"], d.path()));
    let m = json(&d.path().join("manifest.json"));
    let seed = m["seeds"][0].as_u64().unwrap();
    assert!(d.path().join(format!("path_{seed}.csph")).exists());
}

fn write_curve(dir: &Path, name: &str, scale: f64) {
    let mut s = String::from("n,tau_s,sigma\n");
    for k in 0..5 {
        let n = 10f64.powi(k);
        s.push_str(&format!("{n},{},{}\n", n / F0, scale / n.sqrt()));
    }
    std::fs::write(dir.join(name), s).unwrap();
}

#[test]
fn plot_three_adev_curves_with_threshold() {
    let d = tempfile::tempdir().unwrap();
    for (i, n) in ["rtc_adev.csv", "rc_adev.csv", "rf_adev.csv"].iter().enumerate() {
        write_curve(d.path(), n, 1e-7 * (i + 1) as f64);
    }
    ok(&clockstab(&["plot", "rtc_adev.csv", "rc_adev.csv", "rf_adev.csv", "--ppm", "60"], d.path()));
    let svg = std::fs::read_to_string(d.path().join("plot.svg")).unwrap();
    let drawables = svg.matches(r#"class="series""#).count() + svg.matches(r#"class="threshold""#).count();
    assert_eq!(drawables, 4);
    assert_eq!(svg.matches(r#"class="panel""#).count(), 1);
    assert!(svg.starts_with("<svg"));
}

#[test]
fn plot_npaj_and_adev_two_panels() {
    let d = tempfile::tempdir().unwrap();
    write_curve(d.path(), "npaj.csv", 1e-12);
    write_curve(d.path(), "adev.csv", 1e-6);
    ok(&clockstab(&["plot", "npaj.csv", "adev.csv", "--name", "fig.svg"], d.path()));
    let svg = std::fs::read_to_string(d.path().join("fig.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="panel""#).count(), 2);
    let jitter = svg.find(r#"data-kind="jitter""#).unwrap();
    let adev = svg.find(r#"data-kind="adev""#).unwrap();
    assert!(jitter < adev);
}

#[test]
fn thread_cap_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_clockstab"))
            .args(["feasibility", "--preset", "rtc_div_xo"])
            .current_dir(d.path())
            .env("CLOCKSTAB_THREADS", v)
            .output()
            .unwrap()
    };
    ok(&run("2"));
    assert_eq!(json(&d.path().join("manifest.json"))["threads"], 2);
    assert_eq!(run("zero").status.code(), Some(2));
}
