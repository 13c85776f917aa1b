use clockstab::feasibility::{builtin_presets, evaluate, preset_by_name, report, ReferencePreset, ReportFormat, Requirement};
use clockstab::pn_profile::PnProfile;
use clockstab::spectral_jitter::IntegrationSpec;
use clockstab::Result;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{FeasibilityArgs, Format};
use crate::manifest::RunLog;
use crate::profile_input;

#[derive(Debug, Serialize)]
struct Parameters<'a> {
    args: &'a FeasibilityArgs,
    requirement: &'a Requirement,
    presets: Vec<&'a str>,
}

pub fn run(a: &FeasibilityArgs, threads: usize) -> Result<()> {
    let mut log = RunLog::start("feasibility", &a.out, threads)?;
    let requirement = match &a.requirement {
        Some(path) => {
            log.input(path);
            Requirement::load(path)?
        }
        None => Requirement {
            ppm: a.ppm,
            target_hz: a.target_hz,
            ..Requirement::ble()
        },
    };
    let mut presets: Vec<ReferencePreset> = if a.preset.is_empty() && a.profile.is_empty() {
        builtin_presets()
    } else {
        a.preset.iter().map(|n| preset_by_name(n.trim())).collect::<Result<_>>()?
    };
    for path in &a.profile {
        log.input(path);
        let profile = PnProfile::load(path)?;
        presets.push(ReferencePreset {
            name: profile_input::stem(path),
            native_hz: profile.carrier_hz(),
            profile,
            notes: String::new(),
        });
    }
    for p in &mut presets {
        p.profile = profile_input::with_f_min(p.profile.clone(), a.fmin_hz)?;
    }
    let spec = IntegrationSpec::new(1.0, 2.0);
    let verdicts = presets
        .par_iter()
        .map(|p| evaluate(p, &requirement, &spec))
        .collect::<Result<Vec<_>>>()?;
    let fmt = match a.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
        Format::Md => ReportFormat::Markdown,
    };
    let text = report(&verdicts, fmt)?;
    print!("{text}");
    log.write(&format!("report.{}", a.format.ext()), &text)?;
    log.finish(&Parameters {
        args: a,
        requirement: &requirement,
        presets: presets.iter().map(|p| p.name.as_str()).collect(),
    })
}
