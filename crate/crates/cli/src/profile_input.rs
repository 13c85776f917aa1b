use std::path::Path;

use clockstab::feasibility::preset_by_name;
use clockstab::pn_profile::{PnProfile, PowerLawTerm};
use clockstab::{Error, Result};

use crate::args::ProfileSource;
use crate::manifest::RunLog;

/// Load the selected profile, recording file inputs. Returns the profile and
/// a label for reports.
pub fn load(src: &ProfileSource, log: &mut RunLog) -> Result<(PnProfile, String)> {
    match (&src.profile, &src.preset) {
        (Some(path), _) => {
            log.input(path);
            Ok((PnProfile::load(path)?, stem(path)))
        }
        (None, Some(name)) => Ok((preset_by_name(name)?.profile, name.clone())),
        (None, None) => Err(Error::Argument("need --profile or --preset".into())),
    }
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn with_f_min(p: PnProfile, f_min_hz: Option<f64>) -> Result<PnProfile> {
    match f_min_hz {
        Some(f) => p.with_bounds(f, p.f_max_hz()),
        None => Ok(p),
    }
}

/// Power-law terms of a profile: exact when it was built from terms,
/// otherwise the fitted flicker, white and floor asymptotes.
pub fn power_law_terms(p: &PnProfile) -> Result<Vec<PowerLawTerm>> {
    if let Some(t) = p.terms() {
        return Ok(t.to_vec());
    }
    let fit = p
        .fit_asymptotes()
        .ok_or_else(|| Error::Numeric("could not fit power-law asymptotes to the profile".into()))?;
    let terms: Vec<PowerLawTerm> = [(3, fit.flicker_coeff), (2, fit.white_coeff), (0, fit.floor_coeff)]
        .into_iter()
        .filter(|&(_, c)| c > 0.0)
        .map(|(a, c)| PowerLawTerm::new(a, c))
        .collect();
    if terms.is_empty() {
        return Err(Error::Numeric("profile fit produced no positive terms".into()));
    }
    Ok(terms)
}
