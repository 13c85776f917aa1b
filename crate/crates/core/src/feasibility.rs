//! Reference-clock presets and pass/fail verdicts against a frequency
//! accuracy requirement.
//!
//! Preset levels are parametric power-law fits to verbal constraints (corner
//! frequency, flicker-floor ADEV, relative ratios), not digitized spectra.

use std::f64::consts::LN_2;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adpll_sim::GfskConfig;
use crate::error::{Error, Result};
use crate::pn_profile::{default_f_min, lin_to_db, PnAnchor, PnProfile, PowerLawTerm, Spectrum};
use crate::spectral_jitter::{adev, critical_periods, log_spaced_periods, IntegrationSpec};

/// Carrier every preset is calibrated for.
pub const PRESET_TARGET_HZ: f64 = 2.4e9;
const SWEEP_POINTS_PER_DECADE: usize = 10;
const SWEEP_MAX_N_WITHOUT_CORNER: f64 = 1e6;
const GFSK_ANCHORS_PER_DECADE: f64 = 40.0;
/// Steepest fall allowed in a digitized preset, dB/decade.
const MAX_FALL_DB_PER_DECADE: f64 = 40.0;

pub const TEMPERATURE_CAVEAT: &str =
    "assumes an accurately characterized temperature coefficient; drift with temperature is not modeled";

#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePreset {
    pub name: String,
    pub native_hz: f64,
    pub profile: PnProfile,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub name: String,
    pub ppm: f64,
    pub target_hz: f64,
}

impl Requirement {
    /// ±150 kHz at 2.4 GHz, quoted as 60 ppm (the exact ratio is 62.5 ppm).
    pub fn ble() -> Self {
        Self {
            name: "BLE".into(),
            ppm: 60.0,
            target_hz: 2.4e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ppm > 0.0 && self.ppm.is_finite()) {
            return Err(Error::arg(format!("requirement ppm {} must be > 0", self.ppm)));
        }
        if !(self.target_hz > 0.0 && self.target_hz.is_finite()) {
            return Err(Error::arg(format!(
                "requirement target {} Hz must be > 0",
                self.target_hz
            )));
        }
        Ok(())
    }

    pub fn limit(&self) -> f64 {
        self.ppm * 1e-6
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Requirement =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("requirement: {e}")))?;
        r.validate()?;
        Ok(r)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub preset: String,
    pub requirement: String,
    pub ppm: f64,
    pub target_hz: f64,
    pub f_c_hz: Option<f64>,
    /// Flat-region ADEV at the target carrier.
    pub min_adev: f64,
    /// `sqrt(4·ln2·c₃)/f₀` from the fitted flicker term.
    pub flicker_floor_adev: Option<f64>,
    /// Quadrature minimum beyond the sweep's peak, and where it occurs.
    pub sweep_min_adev: f64,
    pub sweep_min_n: f64,
    /// Periods to reach the flat region, `ceil(ln2·f₀/(4·f_c))`.
    pub n_flat: Option<u64>,
    /// Half of `n_flat`, the lower estimate.
    pub n_flat_lower: Option<u64>,
    pub pass: bool,
    pub margin_db: f64,
    pub annotations: Vec<String>,
}

/// Long-term stability limit of a profile at its own carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityFloor {
    pub f_c_hz: Option<f64>,
    /// `sqrt(4·ln2·c₃)/f₀` from the fitted flicker term.
    pub flicker_floor_adev: Option<f64>,
    /// Quadrature minimum beyond the sweep's peak, and where it occurs.
    pub sweep_min_adev: f64,
    pub sweep_min_n: f64,
}

impl StabilityFloor {
    pub fn min_adev(&self) -> f64 {
        self.flicker_floor_adev
            .map_or(self.sweep_min_adev, |f| f.min(self.sweep_min_adev))
    }
}

/// Minimum ADEV of `p` at its own carrier, ignoring any low-N rise.
pub fn stability_floor(p: &PnProfile, spec: &IntegrationSpec) -> Result<StabilityFloor> {
    let f0 = p.carrier_hz();
    let fit = p.fit_asymptotes();
    let f_c = p.flicker_corner();
    let floor = fit
        .filter(|f| f.flicker_coeff > 0.0)
        .map(|f| (4.0 * LN_2 * f.flicker_coeff).sqrt() / f0);
    let n_hi = match f_c.filter(|&fc| fc < f0) {
        Some(fc) => 100.0 * critical_periods(f0, fc)? as f64,
        None => SWEEP_MAX_N_WITHOUT_CORNER,
    };
    let n_list = log_spaced_periods(1.0, n_hi, SWEEP_POINTS_PER_DECADE)?;
    let spec = spec.with_window_of(p);
    let sigma = n_list
        .par_iter()
        .map(|&n| adev(p, n, &spec))
        .collect::<Result<Vec<f64>>>()?;
    // A spectrum cut at f_max with no floor makes ADEV rise at small N; that
    // rise is a band-edge artifact, so search only past the peak.
    let peak = sigma
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (i_min, s_min) = sigma[peak..]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &s)| (i + peak, s))
        .unwrap();
    Ok(StabilityFloor {
        f_c_hz: f_c,
        flicker_floor_adev: floor,
        sweep_min_adev: s_min,
        sweep_min_n: n_list[i_min],
    })
}

pub fn evaluate(preset: &ReferencePreset, requirement: &Requirement, spec: &IntegrationSpec) -> Result<Verdict> {
    requirement.validate()?;
    let p = preset
        .profile
        .upconvert(requirement.target_hz / preset.profile.carrier_hz())?;
    let sf = stability_floor(&p, spec)?;
    let (floor, f_c) = (sf.flicker_floor_adev, sf.f_c_hz);
    let min_adev = sf.min_adev();
    let mut annotations = Vec::new();
    if floor.is_none() {
        annotations.push("no-floor".to_string());
    }
    let n_flat = match f_c.filter(|&fc| fc < requirement.target_hz) {
        Some(fc) => Some(critical_periods(requirement.target_hz, fc)?),
        None => None,
    };
    if n_flat.is_some() {
        annotations.push(
            "n_flat_lower is half the critical averaging length; flat-region onset is quoted at about half the formula value"
                .to_string(),
        );
    }
    annotations.push(TEMPERATURE_CAVEAT.to_string());
    let limit = requirement.limit();
    Ok(Verdict {
        preset: preset.name.clone(),
        requirement: requirement.name.clone(),
        ppm: requirement.ppm,
        target_hz: requirement.target_hz,
        f_c_hz: f_c,
        min_adev,
        flicker_floor_adev: floor,
        sweep_min_adev: sf.sweep_min_adev,
        sweep_min_n: sf.sweep_min_n,
        n_flat,
        n_flat_lower: n_flat.map(|n| n.div_ceil(2)),
        pass: min_adev < limit,
        margin_db: 20.0 * (limit / min_adev).log10(),
        annotations,
    })
}

/// Flicker coefficient at `target_hz` giving a flicker-floor ADEV of `adev`.
fn flicker_coeff_for(adev: f64, target_hz: f64) -> f64 {
    (adev * target_hz).powi(2) / (4.0 * LN_2)
}

fn scaled_terms(terms: &[PowerLawTerm], from_hz: f64, to_hz: f64) -> Vec<PowerLawTerm> {
    let r2 = (to_hz / from_hz).powi(2);
    terms
        .iter()
        .map(|t| PowerLawTerm::new(t.exponent, t.coefficient * r2))
        .collect()
}

/// RTC-class terms at `PRESET_TARGET_HZ`: flicker floor 6e-9, corner 50 kHz.
fn rtc_terms_at_target() -> Vec<PowerLawTerm> {
    let c3 = flicker_coeff_for(6e-9, PRESET_TARGET_HZ);
    vec![PowerLawTerm::new(3, c3), PowerLawTerm::new(2, c3 / 50e3)]
}

fn rf_single_tone_terms() -> Vec<PowerLawTerm> {
    // -115 dBc/Hz white FM at 1 MHz, corner 500 kHz, -150 dBc/Hz floor.
    let c2 = 10f64.powf(-11.5) * 1e12;
    vec![
        PowerLawTerm::new(3, c2 * 500e3),
        PowerLawTerm::new(2, c2),
        PowerLawTerm::new(0, 1e-15),
    ]
}

const RF_F_MAX_HZ: f64 = 100e6;

fn rtc_preset() -> Result<ReferencePreset> {
    let native = 32_768.0;
    let terms = scaled_terms(&rtc_terms_at_target(), PRESET_TARGET_HZ, native);
    let profile = PnProfile::from_power_law(native, terms, default_f_min(native), 10e6)?;
    Ok(ReferencePreset {
        name: "rtc_div_xo".into(),
        native_hz: native,
        profile,
        notes: "approximate levels: flicker-FM floor set for ADEV 6e-9, flicker corner 50 kHz \
                (both at 2.4 GHz equivalent), no white-PM floor; offsets extend to 10 MHz"
            .into(),
    })
}

fn rc_preset() -> Result<ReferencePreset> {
    let native = 10e6;
    // ADEV 30x the RTC class at the same corner, i.e. every level +29.5 dB.
    let terms: Vec<PowerLawTerm> = scaled_terms(&rtc_terms_at_target(), PRESET_TARGET_HZ, native)
        .into_iter()
        .map(|t| PowerLawTerm::new(t.exponent, t.coefficient * 900.0))
        .collect();
    let mut all = terms;
    all.push(PowerLawTerm::new(0, 10f64.powf(-16.5)));
    let profile = PnProfile::from_power_law(native, all, default_f_min(native), native / 2.0)?;
    Ok(ReferencePreset {
        name: "rc_osc".into(),
        native_hz: native,
        profile,
        notes: "approximate levels: 30x the RTC-class ADEV at the same 50 kHz corner, \
                -165 dBc/Hz white-PM floor at 10 MHz"
            .into(),
    })
}

fn rf_single_tone_preset() -> Result<ReferencePreset> {
    let native = PRESET_TARGET_HZ;
    let profile =
        PnProfile::from_power_law(native, rf_single_tone_terms(), default_f_min(native), RF_F_MAX_HZ)?;
    Ok(ReferencePreset {
        name: "rf_single_tone".into(),
        native_hz: native,
        profile,
        notes: "approximate levels: -115 dBc/Hz at 1 MHz, flicker corner 500 kHz, \
                -150 dBc/Hz floor"
            .into(),
    })
}

fn rf_gfsk_preset() -> Result<ReferencePreset> {
    let native = PRESET_TARGET_HZ;
    let base = PnProfile::from_power_law(native, rf_single_tone_terms(), default_f_min(native), RF_F_MAX_HZ)?;
    let g = GfskConfig::ble();
    let deviation_hz = g.deviation_frac * native;
    let f_min = base.f_min_hz();
    let n = ((RF_F_MAX_HZ / f_min).log10() * GFSK_ANCHORS_PER_DECADE).ceil() as usize;
    let step = 1.0 / GFSK_ANCHORS_PER_DECADE;
    let mut anchors: Vec<PnAnchor> = Vec::with_capacity(n);
    for k in 1..=n {
        let f = (f_min * 10f64.powf(k as f64 * step)).min(RF_F_MAX_HZ);
        let raw = lin_to_db(base.density(f) + g.modulation_density(deviation_hz, f));
        let level = match anchors.last() {
            // Never rising, never steeper than the limit: nulls of the
            // modulation spectrum become a 1/f⁴ skirt.
            Some(prev) => {
                let decades = (f / prev.offset_hz).log10();
                raw.min(prev.level_dbc)
                    .max(prev.level_dbc - MAX_FALL_DB_PER_DECADE * decades)
            }
            None => raw,
        };
        anchors.push(PnAnchor::new(f, level));
        if f >= RF_F_MAX_HZ {
            break;
        }
    }
    let profile = PnProfile::from_anchors(native, anchors, f_min, RF_F_MAX_HZ)?;
    Ok(ReferencePreset {
        name: "rf_gfsk".into(),
        native_hz: native,
        profile,
        notes: "rf_single_tone plus GFSK modulation (500 kHz deviation, 1 Mbps, BT 0.5, \
                DC-balanced data); modulation nulls clipped to a 40 dB/decade skirt"
            .into(),
    })
}

pub fn builtin_presets() -> Vec<ReferencePreset> {
    [rtc_preset(), rc_preset(), rf_single_tone_preset(), rf_gfsk_preset()]
        .into_iter()
        .map(|p| p.expect("builtin preset parameters are valid"))
        .collect()
}

pub fn preset_by_name(name: &str) -> Result<ReferencePreset> {
    builtin_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| {
            let names: Vec<String> = builtin_presets().into_iter().map(|p| p.name).collect();
            Error::arg(format!("unknown preset `{name}`; builtin: {}", names.join(", ")))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::arg(format!(
                "unknown report format `{other}` (json, csv, md)"
            ))),
        }
    }
}

fn opt_num<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report(verdicts: &[Verdict], format: ReportFormat) -> Result<String> {
    if verdicts.is_empty() {
        return Err(Error::arg("report needs at least one verdict"));
    }
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(verdicts)?,
        ReportFormat::Csv => {
            let mut out = String::from(
                "preset,requirement,ppm,target_hz,f_c_hz,min_adev,flicker_floor_adev,sweep_min_adev,sweep_min_n,n_flat,n_flat_lower,pass,margin_db\n",
            );
            for v in verdicts {
                out.push_str(&format!(
                    "{},{},{},{},{},{:.6e},{},{:.6e},{},{},{},{},{:.3}\n",
                    v.preset,
                    v.requirement,
                    v.ppm,
                    v.target_hz,
                    opt_num(v.f_c_hz.map(|f| format!("{f:.6e}"))),
                    v.min_adev,
                    opt_num(v.flicker_floor_adev.map(|f| format!("{f:.6e}"))),
                    v.sweep_min_adev,
                    v.sweep_min_n,
                    opt_num(v.n_flat),
                    opt_num(v.n_flat_lower),
                    v.pass,
                    v.margin_db
                ));
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::from(
                "| preset | f_c (Hz) | min ADEV | N_flat | requirement | pass |\n|---|---|---|---|---|---|\n",
            );
            for v in verdicts {
                let n_flat = match (v.n_flat_lower, v.n_flat) {
                    (Some(lo), Some(hi)) => format!("{lo}-{hi}"),
                    _ => "-".into(),
                };
                out.push_str(&format!(
                    "| {} | {} | {:.3e} | {} | {} ({} ppm) | {} |\n",
                    v.preset,
                    v.f_c_hz.map(|f| format!("{f:.3e}")).unwrap_or_else(|| "-".into()),
                    v.min_adev,
                    n_flat,
                    v.requirement,
                    v.ppm,
                    if v.pass { "yes" } else { "no" }
                ));
            }
            out
        }
    })
}
