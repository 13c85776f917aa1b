//! One-sided phase-noise spectra L(f).
//!
//! A [`PnProfile`] stores L(f) as dBc/Hz anchors joined by straight lines in
//! (log f, dB) space. Profiles built from exact power-law terms keep those
//! terms and evaluate them directly, so integrals over synthetic profiles are
//! not limited by the anchor grid. Loop low-pass shaping is kept as a list of
//! stages applied multiplicatively at evaluation time.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anchors per decade used when sampling power-law terms.
pub const POWER_LAW_ANCHORS_PER_DECADE: f64 = 20.0;

/// Samples per decade for the asymptote fit in [`PnProfile::fit_asymptotes`].
const FIT_SAMPLES_PER_DECADE: f64 = 20.0;

/// Default lower spectral bound: one part in 2^32 of the carrier.
pub fn default_f_min(carrier_hz: f64) -> f64 {
    carrier_hz / 4_294_967_296.0
}

/// Default upper spectral bound for profiles that do not state one: the
/// Nyquist frequency of one-sample-per-period edge timing.
pub fn default_f_max(carrier_hz: f64) -> f64 {
    carrier_hz / 2.0
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Anything that can be integrated as a one-sided phase-noise density.
pub trait Spectrum: Sync {
    fn carrier_hz(&self) -> f64;
    fn f_min_hz(&self) -> f64;
    fn f_max_hz(&self) -> f64;
    /// Linear L(f) in 1/Hz. Callers keep `f` inside `[f_min_hz, f_max_hz]`.
    fn density(&self, f: f64) -> f64;
    /// Offsets where the density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Sample point of a measured or digitized L(f) curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnAnchor {
    pub offset_hz: f64,
    pub level_dbc: f64,
}

impl PnAnchor {
    pub fn new(offset_hz: f64, level_dbc: f64) -> Self {
        Self { offset_hz, level_dbc }
    }
}

/// One `coefficient / f^exponent` contribution to L(f).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTerm {
    #[serde(rename = "alpha")]
    pub exponent: u8,
    #[serde(rename = "coeff")]
    pub coefficient: f64,
}

impl PowerLawTerm {
    pub fn new(exponent: u8, coefficient: f64) -> Self {
        Self {
            exponent,
            coefficient,
        }
    }

    /// Term with level `level_dbc` at offset `at_hz`, i.e. `Ls·fs^α / f^α`.
    pub fn anchored(exponent: u8, level_dbc: f64, at_hz: f64) -> Self {
        Self::new(exponent, db_to_lin(level_dbc) * at_hz.powi(exponent as i32))
    }

    pub fn value(&self, f: f64) -> f64 {
        self.coefficient * f.powi(-(self.exponent as i32))
    }
}

/// First- or second-order low-pass magnitude-squared shaping stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowpassStage {
    pub bw_hz: f64,
    pub order: u8,
}

impl LowpassStage {
    pub fn gain(&self, f: f64) -> f64 {
        1.0 / (1.0 + (f / self.bw_hz).powi(2 * self.order as i32))
    }
}

/// Least-squares fit of `c3/f³ + c2/f² + c0` to a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteFit {
    pub flicker_coeff: f64,
    pub white_coeff: f64,
    pub floor_coeff: f64,
    /// RMS of the linearized log residual (model/L − 1).
    pub rms_residual: f64,
}

impl AsymptoteFit {
    /// Offset where the 1/f³ and 1/f² asymptotes cross.
    pub fn intersection_hz(&self) -> Option<f64> {
        if self.flicker_coeff > 0.0 && self.white_coeff > 0.0 {
            Some(self.flicker_coeff / self.white_coeff)
        } else {
            None
        }
    }
}

/// Piecewise power-law one-sided phase-noise spectrum anchored to a carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PnProfile {
    carrier_hz: f64,
    f_min_hz: f64,
    f_max_hz: f64,
    floor_dbc: Option<f64>,
    anchors: Vec<PnAnchor>,
    terms: Option<Vec<PowerLawTerm>>,
    lowpass: Vec<LowpassStage>,
}

impl PnProfile {
    pub fn from_anchors(
        carrier_hz: f64,
        anchors: Vec<PnAnchor>,
        f_min_hz: f64,
        f_max_hz: f64,
    ) -> Result<Self> {
        let p = Self {
            carrier_hz,
            f_min_hz,
            f_max_hz,
            floor_dbc: None,
            anchors,
            terms: None,
            lowpass: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    /// `L(f) = Σ coefficient_α / f^α`, sampled into anchors for inspection and
    /// evaluated exactly.
    pub fn from_power_law(
        carrier_hz: f64,
        terms: Vec<PowerLawTerm>,
        f_min_hz: f64,
        f_max_hz: f64,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::arg("power-law profile needs at least one term"));
        }
        for t in &terms {
            if t.exponent > 3 {
                return Err(Error::arg(format!(
                    "power-law exponent {} not in 0..=3",
                    t.exponent
                )));
            }
            if !(t.coefficient >= 0.0 && t.coefficient.is_finite()) {
                return Err(Error::arg(format!(
                    "power-law coefficient {} must be finite and non-negative",
                    t.coefficient
                )));
            }
        }
        if !terms.iter().any(|t| t.coefficient > 0.0) {
            return Err(Error::arg("power-law profile needs a positive coefficient"));
        }
        check_bounds(carrier_hz, f_min_hz, f_max_hz)?;
        let anchors = sample_grid(f_min_hz, f_max_hz, POWER_LAW_ANCHORS_PER_DECADE)
            .into_iter()
            .filter(|&f| f > f_min_hz)
            .map(|f| {
                let l: f64 = terms.iter().map(|t| t.value(f)).sum();
                PnAnchor::new(f, lin_to_db(l))
            })
            .collect();
        let p = Self {
            carrier_hz,
            f_min_hz,
            f_max_hz,
            floor_dbc: None,
            anchors,
            terms: Some(terms),
            lowpass: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_floor_dbc(mut self, floor_dbc: Option<f64>) -> Result<Self> {
        if let Some(db) = floor_dbc {
            if !db.is_finite() {
                return Err(Error::arg("floor level must be finite"));
            }
        }
        self.floor_dbc = floor_dbc;
        Ok(self)
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn f_min_hz(&self) -> f64 {
        self.f_min_hz
    }

    pub fn f_max_hz(&self) -> f64 {
        self.f_max_hz
    }

    pub fn floor_dbc(&self) -> Option<f64> {
        self.floor_dbc
    }

    pub fn anchors(&self) -> &[PnAnchor] {
        &self.anchors
    }

    pub fn terms(&self) -> Option<&[PowerLawTerm]> {
        self.terms.as_deref()
    }

    pub fn lowpass_stages(&self) -> &[LowpassStage] {
        &self.lowpass
    }

    /// Same profile over a different spectral window.
    pub fn with_bounds(&self, f_min_hz: f64, f_max_hz: f64) -> Result<Self> {
        check_bounds(self.carrier_hz, f_min_hz, f_max_hz)?;
        let mut p = self.clone();
        p.f_min_hz = f_min_hz;
        p.f_max_hz = f_max_hz;
        if let Some(terms) = p.terms.take() {
            let mut fresh = Self::from_power_law(p.carrier_hz, terms, f_min_hz, f_max_hz)?;
            fresh.floor_dbc = p.floor_dbc;
            fresh.lowpass = p.lowpass;
            return Ok(fresh);
        }
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        check_bounds(self.carrier_hz, self.f_min_hz, self.f_max_hz)?;
        let a = &self.anchors;
        if a.is_empty() {
            return Err(Error::arg("profile needs at least one anchor"));
        }
        for x in a {
            if !(x.offset_hz > 0.0 && x.offset_hz.is_finite()) {
                return Err(Error::arg(format!("anchor offset {} must be > 0", x.offset_hz)));
            }
            if !x.level_dbc.is_finite() {
                return Err(Error::arg(format!(
                    "anchor level at {} Hz is not finite",
                    x.offset_hz
                )));
            }
        }
        if !(self.f_min_hz < a[0].offset_hz && a[a.len() - 1].offset_hz <= self.f_max_hz) {
            return Err(Error::arg(format!(
                "anchors [{}, {}] must satisfy f_min {} < first <= last <= f_max {}",
                a[0].offset_hz,
                a[a.len() - 1].offset_hz,
                self.f_min_hz,
                self.f_max_hz
            )));
        }
        for w in a.windows(2) {
            if w[1].offset_hz <= w[0].offset_hz {
                return Err(Error::arg("anchor offsets must be strictly increasing"));
            }
            let exponent = segment_slope(&w[0], &w[1]) / 10.0;
            let rounded = exponent.round();
            if !(-4.0..=0.0).contains(&rounded) {
                return Err(Error::arg(format!(
                    "slope f^{:.2} between {} Hz and {} Hz outside f^-4..f^0",
                    exponent, w[0].offset_hz, w[1].offset_hz
                )));
            }
        }
        Ok(())
    }

    fn base_density(&self, f: f64) -> f64 {
        if let Some(terms) = &self.terms {
            return terms.iter().map(|t| t.value(f)).sum();
        }
        let a = &self.anchors;
        if a.len() == 1 {
            return db_to_lin(a[0].level_dbc);
        }
        let i = a.partition_point(|x| x.offset_hz <= f).clamp(1, a.len() - 1);
        let (lo, hi) = (&a[i - 1], &a[i]);
        let slope = segment_slope(lo, hi);
        db_to_lin(lo.level_dbc + slope * (f / lo.offset_hz).log10())
    }

    fn density_unchecked(&self, f: f64) -> f64 {
        let shaped = self
            .lowpass
            .iter()
            .fold(self.base_density(f), |acc, s| acc * s.gain(f));
        match self.floor_dbc {
            Some(db) => shaped.max(db_to_lin(db)),
            None => shaped,
        }
    }

    /// Linear L(f) in 1/Hz.
    pub fn eval(&self, f: f64) -> Result<f64> {
        if !(f >= self.f_min_hz && f <= self.f_max_hz) {
            return Err(Error::range(
                "offset frequency",
                f,
                self.f_min_hz,
                self.f_max_hz,
            ));
        }
        Ok(self.density_unchecked(f))
    }

    pub fn eval_dbc(&self, f: f64) -> Result<f64> {
        self.eval(f).map(lin_to_db)
    }

    fn shifted(&self, db: f64, lin: f64) -> Self {
        let mut p = self.clone();
        for a in &mut p.anchors {
            a.level_dbc += db;
        }
        if let Some(terms) = &mut p.terms {
            for t in terms {
                t.coefficient *= lin;
            }
        }
        if let Some(floor) = &mut p.floor_dbc {
            *floor += db;
        }
        p
    }

    /// Frequency multiplication by `ratio`: carrier scaled, every level raised
    /// by 20·log10(ratio), offsets unchanged.
    pub fn upconvert(&self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::arg(format!("upconversion ratio {ratio} must be > 0")));
        }
        let mut p = self.shifted(20.0 * ratio.log10(), ratio * ratio);
        p.carrier_hz *= ratio;
        Ok(p)
    }

    /// Raise (or lower) every level by `db` without touching the carrier.
    pub fn with_level_offset(&self, db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::arg("level offset must be finite"));
        }
        Ok(self.shifted(db, db_to_lin(db)))
    }

    /// Multiply L(f) by `1/(1+(f/bw)^(2·order))`.
    pub fn lowpass(&self, bw_hz: f64, order: u8) -> Result<Self> {
        if !(bw_hz > self.f_min_hz && bw_hz < self.f_max_hz) {
            return Err(Error::range(
                "lowpass bandwidth",
                bw_hz,
                self.f_min_hz,
                self.f_max_hz,
            ));
        }
        if order != 1 && order != 2 {
            return Err(Error::arg(format!("lowpass order {order} must be 1 or 2")));
        }
        let mut p = self.clone();
        p.lowpass.push(LowpassStage { bw_hz, order });
        Ok(p)
    }

    /// Power sum of two profiles on the same carrier.
    ///
    /// Term-based profiles without shaping combine exactly. Anything else is
    /// resampled onto the union of both anchor grids.
    pub fn power_sum(&self, other: &PnProfile) -> Result<Self> {
        if (self.carrier_hz - other.carrier_hz).abs() > 1e-12 * self.carrier_hz {
            return Err(Error::arg("power sum needs profiles on the same carrier"));
        }
        let f_min = self.f_min_hz.max(other.f_min_hz);
        let f_max = self.f_max_hz.min(other.f_max_hz);
        let floor = match (self.floor_dbc, other.floor_dbc) {
            (Some(a), Some(b)) => Some(lin_to_db(db_to_lin(a) + db_to_lin(b))),
            (a, b) => a.or(b),
        };
        if let (Some(ta), Some(tb), true, true) = (
            &self.terms,
            &other.terms,
            self.lowpass.is_empty(),
            other.lowpass.is_empty(),
        ) {
            let terms = ta.iter().chain(tb.iter()).copied().collect();
            return Self::from_power_law(self.carrier_hz, terms, f_min, f_max)?.with_floor_dbc(floor);
        }
        let mut offsets: Vec<f64> = self
            .anchors
            .iter()
            .chain(other.anchors.iter())
            .map(|a| a.offset_hz)
            .filter(|&f| f > f_min && f <= f_max)
            .collect();
        offsets.sort_by(f64::total_cmp);
        offsets.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
        let anchors = offsets
            .into_iter()
            .map(|f| {
                PnAnchor::new(
                    f,
                    lin_to_db(self.density_unchecked(f) + other.density_unchecked(f)),
                )
            })
            .collect();
        Self::from_anchors(self.carrier_hz, anchors, f_min, f_max)
    }

    /// Fit `c3/f³ + c2/f² + c0` with non-negative coefficients.
    ///
    /// The residual is `model/L − 1` on log-spaced samples, the linearized log
    /// error, so the fit tracks the lower envelope and ignores positive humps.
    pub fn fit_asymptotes(&self) -> Option<AsymptoteFit> {
        let samples: Vec<(f64, f64)> = sample_grid(self.f_min_hz, self.f_max_hz, FIT_SAMPLES_PER_DECADE)
            .into_iter()
            .map(|f| (f, self.density_unchecked(f)))
            .filter(|(_, l)| *l > 0.0 && l.is_finite())
            .collect();
        if samples.len() < 3 {
            return None;
        }
        let basis = |j: usize, f: f64| match j {
            0 => f.powi(-3),
            1 => f.powi(-2),
            _ => 1.0,
        };
        let mut best: Option<([f64; 3], f64)> = None;
        for mask in 1u8..8 {
            let cols: Vec<usize> = (0..3).filter(|j| mask & (1 << j) != 0).collect();
            let mut a = DMatrix::<f64>::zeros(samples.len(), cols.len());
            for (i, &(f, l)) in samples.iter().enumerate() {
                for (c, &j) in cols.iter().enumerate() {
                    a[(i, c)] = basis(j, f) / l;
                }
            }
            let norms: Vec<f64> = (0..cols.len()).map(|c| a.column(c).norm()).collect();
            if norms.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
                continue;
            }
            for (c, &n) in norms.iter().enumerate() {
                a.column_mut(c).scale_mut(1.0 / n);
            }
            let b = DVector::<f64>::from_element(samples.len(), 1.0);
            let Ok(y) = a.clone().svd(true, true).solve(&b, 1e-14) else {
                continue;
            };
            let mut coeffs = [0.0; 3];
            for (c, &j) in cols.iter().enumerate() {
                coeffs[j] = y[c] / norms[c];
            }
            if coeffs.iter().any(|&c| c < 0.0) {
                continue;
            }
            let resid = (&a * &y - &b).norm_squared();
            if best.as_ref().map_or(true, |(_, r)| resid < *r) {
                best = Some((coeffs, resid));
            }
        }
        let (mut c, resid) = best?;
        // Coefficients whose contribution never reaches 1e-9 of L are noise.
        for (j, cj) in c.iter_mut().enumerate() {
            let peak = samples
                .iter()
                .map(|&(f, l)| *cj * basis(j, f) / l)
                .fold(0.0, f64::max);
            if peak < 1e-9 {
                *cj = 0.0;
            }
        }
        Some(AsymptoteFit {
            flicker_coeff: c[0],
            white_coeff: c[1],
            floor_coeff: c[2],
            rms_residual: (resid / samples.len() as f64).sqrt(),
        })
    }

    /// Offset where the fitted 1/f³ and 1/f² asymptotes intersect, if that
    /// lies inside the profile's spectral window.
    pub fn flicker_corner(&self) -> Option<f64> {
        let fc = self.fit_asymptotes()?.intersection_hz()?;
        (fc >= self.f_min_hz && fc <= self.f_max_hz).then_some(fc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProfileFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProfileFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("profile JSON: {e}")))?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

impl Spectrum for PnProfile {
    fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    fn f_min_hz(&self) -> f64 {
        self.f_min_hz
    }

    fn f_max_hz(&self) -> f64 {
        self.f_max_hz
    }

    fn density(&self, f: f64) -> f64 {
        self.density_unchecked(f)
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.terms.is_some() {
            Vec::new()
        } else {
            self.anchors.iter().map(|a| a.offset_hz).collect()
        }
    }
}

/// Exact power sum of several spectra sharing a carrier.
pub struct SpectrumSum<'a> {
    parts: Vec<&'a dyn Spectrum>,
}

impl<'a> SpectrumSum<'a> {
    pub fn new(parts: Vec<&'a dyn Spectrum>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::arg("spectrum sum needs at least one part"))?;
        let f0 = first.carrier_hz();
        if parts
            .iter()
            .any(|p| (p.carrier_hz() - f0).abs() > 1e-12 * f0)
        {
            return Err(Error::arg("spectrum sum needs parts on the same carrier"));
        }
        Ok(Self { parts })
    }
}

impl Spectrum for SpectrumSum<'_> {
    fn carrier_hz(&self) -> f64 {
        self.parts[0].carrier_hz()
    }

    fn f_min_hz(&self) -> f64 {
        self.parts.iter().map(|p| p.f_min_hz()).fold(0.0, f64::max)
    }

    fn f_max_hz(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.f_max_hz())
            .fold(f64::INFINITY, f64::min)
    }

    fn density(&self, f: f64) -> f64 {
        self.parts.iter().map(|p| p.density(f)).sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.parts.iter().flat_map(|p| p.breakpoints()).collect()
    }
}

fn check_bounds(carrier_hz: f64, f_min_hz: f64, f_max_hz: f64) -> Result<()> {
    if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
        return Err(Error::arg(format!("carrier {carrier_hz} Hz must be > 0")));
    }
    if !(f_min_hz > 0.0 && f_min_hz < f_max_hz && f_max_hz.is_finite()) {
        return Err(Error::arg(format!(
            "spectral window must satisfy 0 < f_min ({f_min_hz}) < f_max ({f_max_hz})"
        )));
    }
    Ok(())
}

/// dB per decade between two anchors.
fn segment_slope(lo: &PnAnchor, hi: &PnAnchor) -> f64 {
    (hi.level_dbc - lo.level_dbc) / (hi.offset_hz / lo.offset_hz).log10()
}

/// Log-spaced points on the decade grid inside `[lo, hi]`, always including
/// both ends.
pub(crate) fn sample_grid(lo: f64, hi: f64, per_decade: f64) -> Vec<f64> {
    let k0 = (lo.log10() * per_decade).floor() as i64 + 1;
    let k1 = (hi.log10() * per_decade).ceil() as i64 - 1;
    let mut out = vec![lo];
    for k in k0..=k1 {
        let f = 10f64.powf(k as f64 / per_decade);
        if f > lo * (1.0 + 1e-9) && f < hi * (1.0 - 1e-9) {
            out.push(f);
        }
    }
    out.push(hi);
    out
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    carrier_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_min_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f_max_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor_dbc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchors: Option<Vec<PnAnchor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_law: Option<Vec<PowerLawTerm>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lowpass: Vec<LowpassStage>,
}

impl From<&PnProfile> for ProfileFile {
    fn from(p: &PnProfile) -> Self {
        Self {
            carrier_hz: p.carrier_hz,
            f_min_hz: Some(p.f_min_hz),
            f_max_hz: Some(p.f_max_hz),
            floor_dbc: p.floor_dbc,
            anchors: p.terms.is_none().then(|| p.anchors.clone()),
            power_law: p.terms.clone(),
            lowpass: p.lowpass.clone(),
        }
    }
}

impl TryFrom<ProfileFile> for PnProfile {
    type Error = Error;

    fn try_from(file: ProfileFile) -> Result<Self> {
        let base = match (file.anchors, file.power_law) {
            (Some(anchors), None) => {
                let f_min = file
                    .f_min_hz
                    .ok_or_else(|| Error::Parse("anchor profile needs f_min_hz".into()))?;
                let f_max = file
                    .f_max_hz
                    .ok_or_else(|| Error::Parse("anchor profile needs f_max_hz".into()))?;
                PnProfile::from_anchors(file.carrier_hz, anchors, f_min, f_max)?
            }
            (None, Some(terms)) => {
                let f_min = file.f_min_hz.unwrap_or_else(|| default_f_min(file.carrier_hz));
                let f_max = file.f_max_hz.unwrap_or_else(|| default_f_max(file.carrier_hz));
                PnProfile::from_power_law(file.carrier_hz, terms, f_min, f_max)?
            }
            _ => {
                return Err(Error::Parse(
                    "profile needs exactly one of `anchors` or `power_law`".into(),
                ))
            }
        };
        let mut p = base.with_floor_dbc(file.floor_dbc)?;
        for stage in file.lowpass {
            p = p.lowpass(stage.bw_hz, stage.order)?;
        }
        Ok(p)
    }
}
