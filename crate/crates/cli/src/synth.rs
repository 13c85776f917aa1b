use std::collections::BTreeMap;

use clockstab::noise_synth::{estimate_adev, synthesize_many, write_path, SynthSpec};
use clockstab::spectral_jitter::{log_spaced_periods, Curve};
use clockstab::{Error, Result};
use serde::Serialize;

use crate::args::{Format, SynthArgs};
use crate::manifest::{seed_or_random, RunLog};
use crate::profile_input;

#[derive(Debug, Serialize)]
struct Parameters<'a> {
    args: &'a SynthArgs,
    carrier_hz: f64,
    f_min_hz: f64,
    spec: &'a SynthSpec,
    seeds: &'a [u64],
}

#[derive(Debug, Serialize)]
struct CurveJson<'a> {
    seed: u64,
    n: &'a [f64],
    sigma: &'a [f64],
}

pub fn run(a: &SynthArgs, threads: usize) -> Result<()> {
    if a.format == Format::Md {
        return Err(Error::Argument("synth writes csv or json ADEV estimates".into()));
    }
    if a.ensemble == 0 {
        return Err(Error::Argument("ensemble must be >= 1".into()));
    }
    let mut log = RunLog::start("synth", &a.out, threads)?;
    let (p, _) = profile_input::load(&a.source, &mut log)?;
    let f0 = p.carrier_hz();
    let terms = profile_input::power_law_terms(&p)?;
    let flicker = terms.iter().any(|t| matches!(t.exponent, 1 | 3) && t.coefficient > 0.0);
    let f_min = a.fmin_hz.unwrap_or_else(|| {
        let resolvable = 2.0 * f0 / a.samples as f64;
        if flicker {
            p.f_min_hz().max(resolvable)
        } else {
            p.f_min_hz()
        }
    });
    let seed = seed_or_random(a.seed);
    let spec = SynthSpec {
        terms,
        f_min_hz: f_min,
        duration_periods: a.samples,
        seed,
    };
    let seeds: Vec<u64> = (0..a.ensemble as u64).map(|i| seed.wrapping_add(i)).collect();
    log.seeds(seeds.iter().copied());

    let n_max = a.nmax.unwrap_or((a.samples / 4) as f64);
    let n_list: Vec<usize> = log_spaced_periods(a.nmin, n_max, a.points)?
        .into_iter()
        .map(|n| n as usize)
        .collect();
    let paths = synthesize_many(&spec, f0, &seeds)?;
    let mut json = Vec::new();
    let mut curves = Vec::new();
    for path in &paths {
        let name = format!("path_{}.csph", path.seed);
        let file = log.output_path(&name);
        let sidecar = file.with_extension("json");
        write_path(&file, path, &SynthSpec { seed: path.seed, ..spec.clone() })?;
        log.output_path(&sidecar.file_name().unwrap().to_string_lossy());
        curves.push((path.seed, Curve::Adev(estimate_adev(path, &n_list)?)));
    }
    for (s, c) in &curves {
        match a.format {
            Format::Json => json.push(CurveJson { seed: *s, n: c.n_values(), sigma: c.sigma() }),
            _ => log.write(&format!("adev_{s}.csv"), &c.to_csv())?,
        }
    }
    if a.format == Format::Json {
        let by_seed: BTreeMap<String, &CurveJson> = json.iter().map(|c| (c.seed.to_string(), c)).collect();
        log.write("adev.json", &serde_json::to_string_pretty(&by_seed)?)?;
    }
    log.finish(&Parameters {
        args: a,
        carrier_hz: f0,
        f_min_hz: f_min,
        spec: &spec,
        seeds: &seeds,
    })
}
