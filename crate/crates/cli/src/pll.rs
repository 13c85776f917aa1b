use clockstab::adpll_sim::{
    apu_window_sweep, predicted_release_std, release_samples, run as run_loop, AdpllConfig, ReleaseMode,
    ReleaseSummary, WindowSweep,
};
use clockstab::noise_synth::NoiseModel;
use clockstab::pn_profile::{PnProfile, PowerLawTerm};
use clockstab::Result;
use serde::Serialize;

use crate::args::{Format, PllArgs, PllMode};
use crate::manifest::{seed_or_random, RunLog};
use crate::profile_input;

#[derive(Debug, Serialize)]
struct Summary {
    window: usize,
    ensemble: usize,
    instantaneous: Option<ReleaseSummary>,
    averaged: Option<ReleaseSummary>,
    predicted_instantaneous_std_hz: Option<f64>,
    predicted_averaged_std_hz: Option<f64>,
    /// std(averaged)/std(instantaneous), with `1/sqrt(W)` for comparison.
    std_ratio: Option<f64>,
    inv_sqrt_window: f64,
    sweep: Option<WindowSweep>,
}

#[derive(Debug, Serialize)]
struct Parameters<'a> {
    args: &'a PllArgs,
    config: &'a AdpllConfig,
}

fn reference_noise(a: &PllArgs, log: &mut RunLog) -> Result<NoiseModel> {
    let terms = match &a.profile {
        Some(path) => {
            log.input(path);
            let p = PnProfile::load(path)?;
            let r2 = (a.fref_hz / p.carrier_hz()).powi(2);
            profile_input::power_law_terms(&p)?
                .into_iter()
                .map(|t| PowerLawTerm::new(t.exponent, t.coefficient * r2))
                .collect()
        }
        None => vec![PowerLawTerm::anchored(2, -120.0, 1e4)],
    };
    Ok(NoiseModel::new(terms, a.fmin_hz))
}

fn summary_csv(s: &Summary) -> String {
    let mut out = String::from("mode,window,n,mean_hz,std_hz,p3sigma_hz,predicted_std_hz\n");
    for (r, pred) in [
        (&s.instantaneous, s.predicted_instantaneous_std_hz),
        (&s.averaged, s.predicted_averaged_std_hz),
    ] {
        if let Some(r) = r {
            let mode = match r.mode {
                ReleaseMode::Instantaneous => "instantaneous",
                ReleaseMode::Averaged => "averaged",
            };
            out.push_str(&format!(
                "{mode},{},{},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                r.window,
                r.n,
                r.mean_hz,
                r.std_hz,
                r.p3sigma_hz,
                pred.unwrap_or(f64::NAN)
            ));
        }
    }
    out
}

fn summary_md(s: &Summary) -> String {
    let mut out = String::from("| mode | W | n | mean (Hz) | std (Hz) | predicted std (Hz) |\n|---|---|---|---|---|---|\n");
    for (r, pred) in [
        (&s.instantaneous, s.predicted_instantaneous_std_hz),
        (&s.averaged, s.predicted_averaged_std_hz),
    ]
    .into_iter()
    .filter_map(|(r, p)| r.as_ref().map(|r| (r, p)))
    {
        out.push_str(&format!(
            "| {:?} | {} | {} | {:.3e} | {:.3e} | {:.3e} |\n",
            r.mode,
            r.window,
            r.n,
            r.mean_hz,
            r.std_hz,
            pred.unwrap_or(f64::NAN)
        ));
    }
    if let Some(ratio) = s.std_ratio {
        out.push_str(&format!(
            "\nstd ratio {ratio:.4}, 1/sqrt(W) = {:.4}\n",
            s.inv_sqrt_window
        ));
    }
    out
}

pub fn run(a: &PllArgs, threads: usize) -> Result<()> {
    let mut log = RunLog::start("pll", &a.out, threads)?;
    let seed = seed_or_random(a.seed);
    let cfg = AdpllConfig {
        loop_gain: a.loop_gain,
        apu_window: a.window,
        ref_noise: Some(reference_noise(a, &mut log)?),
        seed,
        max_lock_cycles: a.max_lock_cycles,
        ..AdpllConfig::new(a.fref_hz, a.fcw, a.kdco_hz)
    };
    log.seeds((0..a.ensemble as u64).map(|i| seed.wrapping_add(i)));

    let samples = release_samples(&cfg, a.ensemble)?;
    let mut csv = String::from("seed,instantaneous_hz,averaged_hz,locked_at\n");
    for s in &samples {
        csv.push_str(&format!(
            "{},{:.9e},{:.9e},{}\n",
            s.seed, s.instantaneous_hz, s.averaged_hz, s.locked_at
        ));
    }
    log.write("release.csv", &csv)?;

    let want_inst = a.mode != PllMode::Avg;
    let want_avg = a.mode != PllMode::Inst;
    let inst = want_inst.then(|| ReleaseSummary::from_samples(&samples, ReleaseMode::Instantaneous, 1));
    let avg = want_avg.then(|| ReleaseSummary::from_samples(&samples, ReleaseMode::Averaged, a.window));
    let pred_inst = match want_inst {
        true => Some(predicted_release_std(&cfg, ReleaseMode::Instantaneous, 1)?),
        false => None,
    };
    let pred_avg = match want_avg {
        true => Some(predicted_release_std(&cfg, ReleaseMode::Averaged, a.window)?),
        false => None,
    };
    let sweep = match a.windows.is_empty() {
        true => None,
        false => Some(apu_window_sweep(&cfg, &a.windows, a.ensemble)?),
    };
    let summary = Summary {
        window: a.window,
        ensemble: a.ensemble,
        std_ratio: match (&inst, &avg) {
            (Some(i), Some(v)) => Some(v.std_hz / i.std_hz),
            _ => None,
        },
        inv_sqrt_window: 1.0 / (a.window as f64).sqrt(),
        instantaneous: inst,
        averaged: avg,
        predicted_instantaneous_std_hz: pred_inst,
        predicted_averaged_std_hz: pred_avg,
        sweep,
    };
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&summary)?,
        Format::Csv => summary_csv(&summary),
        Format::Md => summary_md(&summary),
    };
    log.write(&format!("summary.{}", a.format.ext()), &text)?;
    if let Some(sw) = &summary.sweep {
        let mut out = String::from("window,std_hz,mean_hz,predicted_std_hz\n");
        for r in &sw.rows {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e}\n",
                r.window, r.std_hz, r.mean_hz, r.predicted_std_hz
            ));
        }
        log.write("windows.csv", &out)?;
    }
    if a.trace_cycles > 0 {
        let trace = run_loop(&cfg, a.trace_cycles)?;
        log.write("trace.csv", &trace.to_csv())?;
    }
    println!("{}", summary_md(&summary));
    log.finish(&Parameters { args: a, config: &cfg })
}
