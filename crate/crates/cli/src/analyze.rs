use std::collections::BTreeMap;

use clockstab::feasibility::stability_floor;
use clockstab::spectral_jitter::{critical_periods, log_spaced_periods, sweep, IntegrationSpec, Metric};
use clockstab::{Error, Result};
use serde::Serialize;

use crate::args::{AnalyzeArgs, Format};
use crate::manifest::RunLog;
use crate::profile_input;

#[derive(Debug, Serialize)]
struct Summary {
    profile: String,
    carrier_hz: f64,
    f_min_hz: f64,
    f_max_hz: f64,
    f_c_hz: Option<f64>,
    n_c: Option<u64>,
    min_adev: f64,
    flicker_floor_adev: Option<f64>,
    sweep_min_adev: f64,
    sweep_min_n: f64,
}

#[derive(Debug, Serialize)]
struct CurveJson<'a> {
    n: &'a [f64],
    sigma: &'a [f64],
}

pub fn run(a: &AnalyzeArgs, threads: usize) -> Result<()> {
    if a.format == Format::Md {
        return Err(Error::Argument("analyze writes csv or json curves".into()));
    }
    let mut log = RunLog::start("analyze", &a.out, threads)?;
    let (p, label) = profile_input::load(&a.source, &mut log)?;
    let p = profile_input::with_f_min(p, a.fmin_hz)?;
    let metrics = a
        .metrics
        .iter()
        .map(|m| m.trim().parse::<Metric>())
        .collect::<Result<Vec<_>>>()?;
    if metrics.is_empty() {
        return Err(Error::Argument("no metrics requested".into()));
    }
    let n_list = log_spaced_periods(a.nmin, a.nmax, a.points)?;
    let spec = IntegrationSpec::for_spectrum(&p);

    let mut json = BTreeMap::new();
    let curves = metrics
        .iter()
        .map(|&m| sweep(&p, &n_list, m, &spec).map(|c| (m, c)))
        .collect::<Result<Vec<_>>>()?;
    for (m, c) in &curves {
        match a.format {
            Format::Json => {
                json.insert(m.name(), CurveJson { n: c.n_values(), sigma: c.sigma() });
            }
            _ => log.write(&format!("{}.csv", m.name()), &c.to_csv())?,
        }
    }
    if a.format == Format::Json {
        log.write("curves.json", &serde_json::to_string_pretty(&json)?)?;
    }

    let f0 = p.carrier_hz();
    let sf = stability_floor(&p, &spec)?;
    let n_c = match sf.f_c_hz.filter(|&fc| fc < f0) {
        Some(fc) => Some(critical_periods(f0, fc)?),
        None => None,
    };
    let summary = Summary {
        profile: label,
        carrier_hz: f0,
        f_min_hz: p.f_min_hz(),
        f_max_hz: p.f_max_hz(),
        f_c_hz: sf.f_c_hz,
        n_c,
        min_adev: sf.min_adev(),
        flicker_floor_adev: sf.flicker_floor_adev,
        sweep_min_adev: sf.sweep_min_adev,
        sweep_min_n: sf.sweep_min_n,
    };
    log.write("summary.json", &serde_json::to_string_pretty(&summary)?)?;
    log.finish(a)
}
