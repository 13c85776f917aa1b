//! Discrete-time model of a divider-less ADPLL with a windowed DCW average
//! (the APU), used to study calibrate-and-release frequency accuracy.
//!
//! Per reference edge k, with `f₀ = fcw·f_ref`:
//!
//! ```text
//! f_dco[k] = f_free + kdco·DCW[k]
//! e[k+1]   = e[k] + (f_dco[k] − f₀)/f_ref + f_dco[k]·Δx_ref[k] − f₀·Δx_dco[k]
//! ε[k]     = e[k+1] − e[k]
//! DCW[k+1] = DCW[k] − α·ε[k]·f_ref/kdco
//! ```
//!
//! `e` is the counted DCO phase minus `k·fcw`, in DCO cycles, and `Δx` are
//! the per-cycle timing increments of the reference and DCO noise. The
//! correction acts on the per-cycle phase increment, which settles as
//! `(1 − α)^k` and is deadbeat at α = 1.

use std::collections::VecDeque;
use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::noise_synth::{ModelSpectrum, NoiseModel, NoiseSource};
use crate::pn_profile::PnProfile;
use crate::spectral_jitter::{critical_periods, npaj_rms, IntegrationSpec};

const LOCK_TOLERANCE_CYCLES: f64 = 0.5;
const LOCK_RUN: usize = 32;
const DIVERGENCE_LIMIT: f64 = 1e12;

const STREAM_REF: u64 = 0;
const STREAM_DCO: u64 = 1;
const STREAM_DATA: u64 = 2;

/// Gaussian FSK applied to the reference frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfskConfig {
    /// Peak deviation as a fraction of the carrier.
    pub deviation_frac: f64,
    pub bit_rate_hz: f64,
    pub bt: f64,
}

impl GfskConfig {
    /// 1 Mbps, BT = 0.5, ±500 kHz at 2.4 GHz.
    pub fn ble() -> Self {
        Self {
            deviation_frac: 500e3 / 2.4e9,
            bit_rate_hz: 1e6,
            bt: 0.5,
        }
    }

    /// Gaussian filter width in bit periods.
    pub fn sigma_bits(&self) -> f64 {
        LN_2.sqrt() / (2.0 * PI * self.bt)
    }

    /// Frequency pulse of one bit at time `tau` (bit periods from its centre).
    pub fn pulse(&self, tau: f64) -> f64 {
        let s = std::f64::consts::SQRT_2 * self.sigma_bits();
        0.5 * (erf((tau + 0.5) / s) - erf((tau - 0.5) / s))
    }

    /// Phase-noise-equivalent density of the modulation at offset `f`, for a
    /// carrier deviating by `deviation_hz`, with DC-balanced (b, −b) bit pairs.
    pub fn modulation_density(&self, deviation_hz: f64, f: f64) -> f64 {
        let t = 1.0 / self.bit_rate_hz;
        let x = f * t;
        let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
        let sigma_t = self.sigma_bits() * t;
        deviation_hz * deviation_hz * 2.0 * t * sinc * sinc * (PI * x).sin().powi(2)
            * (-(2.0 * PI * sigma_t * f).powi(2)).exp()
            / (f * f)
    }

    fn validate(&self) -> Result<()> {
        if !(self.deviation_frac >= 0.0 && self.bit_rate_hz > 0.0 && self.bt > 0.0) {
            return Err(Error::arg("GFSK needs deviation >= 0, bit rate > 0 and BT > 0"));
        }
        Ok(())
    }
}

/// Random ±1 data in (b, −b) pairs, generated on demand.
struct GfskSource {
    cfg: GfskConfig,
    rng: ChaCha8Rng,
    bits: Vec<f64>,
    span: i64,
}

impl GfskSource {
    fn new(cfg: GfskConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_DATA);
        let span = (4.0 * cfg.sigma_bits()).ceil() as i64 + 1;
        Self {
            cfg,
            rng,
            bits: Vec::new(),
            span,
        }
    }

    fn bit(&mut self, i: i64) -> f64 {
        if i < 0 {
            return 0.0;
        }
        let i = i as usize;
        while self.bits.len() <= i {
            let b = if self.rng.random::<bool>() { 1.0 } else { -1.0 };
            self.bits.push(b);
            self.bits.push(-b);
        }
        self.bits[i]
    }

    /// Fractional frequency deviation at time `t`.
    fn deviation(&mut self, t: f64) -> f64 {
        let pos = t * self.cfg.bit_rate_hz;
        let centre = pos.floor() as i64;
        let mut y = 0.0;
        for i in centre - self.span..=centre + self.span {
            let b = self.bit(i);
            if b != 0.0 {
                y += b * self.cfg.pulse(pos - (i as f64 + 0.5));
            }
        }
        self.cfg.deviation_frac * y
    }
}

/// Loop parameters and noise sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdpllConfig {
    pub f_ref_hz: f64,
    pub fcw: f64,
    pub kdco_hz: f64,
    pub loop_gain: f64,
    pub dco_free_run_hz: f64,
    pub apu_window: usize,
    pub ref_noise: Option<NoiseModel>,
    pub dco_noise: Option<NoiseModel>,
    pub seed: u64,
    /// DCW limits; the DCW is clamped and the run flagged when hit.
    pub dcw_range: Option<(f64, f64)>,
    /// Round DCW to whole LSBs before it drives the DCO.
    pub quantize_dcw: bool,
    /// Phase-detector resolution in DCO cycles.
    pub tdc_resolution: Option<f64>,
    pub gfsk: Option<GfskConfig>,
    /// Give up if lock is not seen within this many cycles.
    pub max_lock_cycles: usize,
}

impl AdpllConfig {
    /// Noiseless loop with the DCO starting 100 LSBs below target.
    pub fn new(f_ref_hz: f64, fcw: f64, kdco_hz: f64) -> Self {
        Self {
            f_ref_hz,
            fcw,
            kdco_hz,
            loop_gain: 0.25,
            dco_free_run_hz: fcw * f_ref_hz - 100.0 * kdco_hz,
            apu_window: 1,
            ref_noise: None,
            dco_noise: None,
            seed: 0,
            dcw_range: None,
            quantize_dcw: false,
            tdc_resolution: None,
            gfsk: None,
            max_lock_cycles: 100_000,
        }
    }

    pub fn target_hz(&self) -> f64 {
        self.fcw * self.f_ref_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_ref_hz > 0.0 && self.f_ref_hz.is_finite()) {
            return Err(Error::arg("reference frequency must be > 0"));
        }
        if !(self.fcw > 1.0 && self.fcw.is_finite()) {
            return Err(Error::arg(format!("fcw {} must be > 1", self.fcw)));
        }
        if !(self.kdco_hz > 0.0 && self.kdco_hz.is_finite()) {
            return Err(Error::arg("kdco must be > 0"));
        }
        if !(self.loop_gain > 0.0 && self.loop_gain <= 1.0) {
            return Err(Error::arg(format!(
                "loop gain {} outside the stable range (0, 1]",
                self.loop_gain
            )));
        }
        if !(self.dco_free_run_hz > 0.0 && self.dco_free_run_hz.is_finite()) {
            return Err(Error::arg("DCO free-running frequency must be > 0"));
        }
        if self.apu_window == 0 {
            return Err(Error::arg("APU window must be >= 1"));
        }
        if let Some((lo, hi)) = self.dcw_range {
            let need = (self.target_hz() - self.dco_free_run_hz) / self.kdco_hz;
            if lo.is_nan() || hi.is_nan() || lo >= hi || need < lo || need > hi {
                return Err(Error::arg(format!(
                    "target needs DCW {need:.3}, outside tuning range [{lo}, {hi}]"
                )));
            }
        }
        if let Some(r) = self.tdc_resolution {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::arg("TDC resolution must be > 0"));
            }
        }
        if let Some(g) = &self.gfsk {
            g.validate()?;
        }
        Ok(())
    }
}

/// Per-cycle traces of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub dcw_trace: Vec<f64>,
    pub dcw_av_trace: Vec<f64>,
    pub phase_err_trace: Vec<f64>,
    pub dco_freq_trace: Vec<f64>,
    /// DCO error if DCW were frozen at the last cycle.
    pub release_err_hz: f64,
    /// Same, frozen at the APU output.
    pub release_err_av_hz: f64,
    pub locked_at: Option<usize>,
    pub saturated: bool,
}

impl CalibrationRun {
    /// CSV with header `cycle,dcw,dcw_av,phase_err,dco_freq_hz`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,dcw,dcw_av,phase_err,dco_freq_hz\n");
        for k in 0..self.dcw_trace.len() {
            out.push_str(&format!(
                "{},{:.11e},{:.11e},{:.11e},{:.11e}\n",
                k, self.dcw_trace[k], self.dcw_av_trace[k], self.phase_err_trace[k], self.dco_freq_trace[k]
            ));
        }
        out
    }
}

/// Trailing moving average of the DCW.
#[derive(Debug, Clone)]
pub struct Apu {
    window: usize,
    buf: VecDeque<f64>,
}

impl Apu {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            buf: VecDeque::with_capacity(window.max(1)),
        }
    }

    /// Push one DCW value and return the mean of the last `window` values
    /// (of all values while fewer have been seen).
    pub fn push(&mut self, dcw: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(dcw);
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }
}

struct Loop<'a> {
    cfg: &'a AdpllConfig,
    ref_src: Option<NoiseSource>,
    dco_src: Option<NoiseSource>,
    gfsk: Option<GfskSource>,
    apu: Apu,
    k: usize,
    dcw: f64,
    e: f64,
    e_meas: f64,
    x_ref: f64,
    x_dco: f64,
    x_gfsk: f64,
    lock_count: usize,
    locked_at: Option<usize>,
    saturated: bool,
}

struct Cycle {
    dcw: f64,
    dcw_av: f64,
    phase_err: f64,
    dco_freq: f64,
}

impl<'a> Loop<'a> {
    fn new(cfg: &'a AdpllConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let f0 = cfg.target_hz();
        let ref_src = match &cfg.ref_noise {
            Some(m) => Some(NoiseSource::new(m, cfg.f_ref_hz, cfg.f_ref_hz, seed, STREAM_REF)?),
            None => None,
        };
        let dco_src = match &cfg.dco_noise {
            Some(m) => Some(NoiseSource::new(m, f0, cfg.f_ref_hz, seed, STREAM_DCO)?),
            None => None,
        };
        let mut lp = Self {
            cfg,
            ref_src,
            dco_src,
            gfsk: cfg.gfsk.map(|g| GfskSource::new(g, seed)),
            apu: Apu::new(cfg.apu_window),
            k: 0,
            dcw: 0.0,
            e: 0.0,
            e_meas: 0.0,
            x_ref: 0.0,
            x_dco: 0.0,
            x_gfsk: 0.0,
            lock_count: 0,
            locked_at: None,
            saturated: false,
        };
        lp.x_ref = lp.ref_src.as_mut().map_or(0.0, |s| s.next_sample());
        lp.x_dco = lp.dco_src.as_mut().map_or(0.0, |s| s.next_sample());
        Ok(lp)
    }

    fn step(&mut self) -> Result<Cycle> {
        let cfg = self.cfg;
        let f0 = cfg.target_hz();
        let t_ref = 1.0 / cfg.f_ref_hz;
        let applied = if cfg.quantize_dcw { self.dcw.round() } else { self.dcw };
        let f_dco = cfg.dco_free_run_hz + cfg.kdco_hz * applied;

        let x_ref = self.ref_src.as_mut().map_or(0.0, |s| s.next_sample());
        let x_dco = self.dco_src.as_mut().map_or(0.0, |s| s.next_sample());
        let dx_gfsk = match self.gfsk.as_mut() {
            // A reference running fast by y shortens its period by y·T.
            Some(g) => -g.deviation((self.k as f64 + 0.5) * t_ref) * t_ref,
            None => 0.0,
        };
        let dx_ref = x_ref - self.x_ref + dx_gfsk;
        let dx_dco = x_dco - self.x_dco;
        self.x_ref = x_ref;
        self.x_dco = x_dco;
        self.x_gfsk += dx_gfsk;

        let e_next = self.e + (f_dco - f0) / cfg.f_ref_hz + f_dco * dx_ref - f0 * dx_dco;
        let e_meas_next = match cfg.tdc_resolution {
            Some(r) => (e_next / r).round() * r,
            None => e_next,
        };
        let eps = e_meas_next - self.e_meas;
        if !eps.is_finite() || eps.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Unstable(format!(
                "phase error increment {eps:e} at cycle {}",
                self.k
            )));
        }

        let cycle = Cycle {
            dcw: self.dcw,
            dcw_av: self.apu.push(self.dcw),
            phase_err: self.e,
            dco_freq: f_dco,
        };

        if eps.abs() < LOCK_TOLERANCE_CYCLES {
            self.lock_count += 1;
            if self.lock_count >= LOCK_RUN && self.locked_at.is_none() {
                self.locked_at = Some(self.k);
            }
        } else {
            self.lock_count = 0;
        }

        let mut dcw = self.dcw - cfg.loop_gain * eps * cfg.f_ref_hz / cfg.kdco_hz;
        if let Some((lo, hi)) = cfg.dcw_range {
            if dcw < lo || dcw > hi {
                self.saturated = true;
                dcw = dcw.clamp(lo, hi);
            }
        }
        self.dcw = dcw;
        self.e = e_next;
        self.e_meas = e_meas_next;
        self.k += 1;
        Ok(cycle)
    }

    fn release_err(&self, dcw: f64) -> f64 {
        let cfg = self.cfg;
        let dcw = if cfg.quantize_dcw { dcw.round() } else { dcw };
        cfg.dco_free_run_hz + cfg.kdco_hz * dcw - cfg.target_hz()
    }
}

/// Run the loop for `n_cycles` reference cycles.
pub fn run(config: &AdpllConfig, n_cycles: usize) -> Result<CalibrationRun> {
    run_seeded(config, n_cycles, config.seed)
}

fn run_seeded(config: &AdpllConfig, n_cycles: usize, seed: u64) -> Result<CalibrationRun> {
    if n_cycles <= config.apu_window {
        return Err(Error::arg(format!(
            "run of {n_cycles} cycles must exceed the APU window {}",
            config.apu_window
        )));
    }
    let mut lp = Loop::new(config, seed)?;
    let mut out = CalibrationRun {
        dcw_trace: Vec::with_capacity(n_cycles),
        dcw_av_trace: Vec::with_capacity(n_cycles),
        phase_err_trace: Vec::with_capacity(n_cycles),
        dco_freq_trace: Vec::with_capacity(n_cycles),
        release_err_hz: 0.0,
        release_err_av_hz: 0.0,
        locked_at: None,
        saturated: false,
    };
    for _ in 0..n_cycles {
        let c = lp.step()?;
        out.dcw_trace.push(c.dcw);
        out.dcw_av_trace.push(c.dcw_av);
        out.phase_err_trace.push(c.phase_err);
        out.dco_freq_trace.push(c.dco_freq);
    }
    out.release_err_hz = lp.release_err(*out.dcw_trace.last().unwrap());
    out.release_err_av_hz = lp.release_err(*out.dcw_av_trace.last().unwrap());
    out.locked_at = lp.locked_at;
    out.saturated = lp.saturated;
    Ok(out)
}

/// Release errors of one seed, frozen `apu_window` cycles after lock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSample {
    pub seed: u64,
    pub instantaneous_hz: f64,
    pub averaged_hz: f64,
    pub locked_at: usize,
}

fn release_one(config: &AdpllConfig, seed: u64) -> Result<ReleaseSample> {
    let mut lp = Loop::new(config, seed)?;
    let mut release_at = None;
    loop {
        let c = lp.step()?;
        if release_at.is_none() {
            if let Some(l) = lp.locked_at {
                release_at = Some(l + config.apu_window);
            } else if lp.k > config.max_lock_cycles {
                return Err(Error::Unstable(format!(
                    "no lock within {} cycles",
                    config.max_lock_cycles
                )));
            }
        }
        if release_at == Some(lp.k - 1) {
            return Ok(ReleaseSample {
                seed,
                instantaneous_hz: lp.release_err(c.dcw),
                averaged_hz: lp.release_err(c.dcw_av),
                locked_at: lp.locked_at.unwrap(),
            });
        }
    }
}

/// One release sample per seed `config.seed + i`, run in parallel.
pub fn release_samples(config: &AdpllConfig, ensemble_size: usize) -> Result<Vec<ReleaseSample>> {
    config.validate()?;
    let seeds: Vec<u64> = (0..ensemble_size as u64).map(|i| config.seed.wrapping_add(i)).collect();
    let results: Vec<Result<ReleaseSample>> =
        seeds.par_iter().map(|&s| release_one(config, s)).collect();
    let mut out = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    let mut first_err = None;
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(s) => out.push(s),
            Err(e) => {
                failed.push(*seed);
                first_err.get_or_insert(e.to_string());
            }
        }
    }
    if !failed.is_empty() {
        let shown = &failed[..failed.len().min(10)];
        let more = if failed.len() > shown.len() { ", ..." } else { "" };
        return Err(Error::Unstable(format!(
            "{} runs failed (seeds {shown:?}{more}): {}",
            failed.len(),
            first_err.unwrap_or_default()
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReleaseMode {
    Instantaneous,
    Averaged,
}

/// Open-loop frequency error statistics over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSummary {
    pub mode: ReleaseMode,
    pub window: usize,
    pub mean_hz: f64,
    pub std_hz: f64,
    pub p3sigma_hz: f64,
    pub n: usize,
    pub seeds: Vec<u64>,
}

impl ReleaseSummary {
    pub fn from_samples(samples: &[ReleaseSample], mode: ReleaseMode, window: usize) -> Self {
        let v: Vec<f64> = samples
            .iter()
            .map(|s| match mode {
                ReleaseMode::Instantaneous => s.instantaneous_hz,
                ReleaseMode::Averaged => s.averaged_hz,
            })
            .collect();
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let std = var.sqrt();
        Self {
            mode,
            window,
            mean_hz: mean,
            std_hz: std,
            p3sigma_hz: mean.abs() + 3.0 * std,
            n,
            seeds: samples.iter().map(|s| s.seed).collect(),
        }
    }
}

fn check_ensemble(ensemble_size: usize) -> Result<()> {
    if ensemble_size < 100 {
        return Err(Error::arg(format!("ensemble size {ensemble_size} must be >= 100")));
    }
    Ok(())
}

pub fn release(config: &AdpllConfig, mode: ReleaseMode, ensemble_size: usize) -> Result<ReleaseSummary> {
    check_ensemble(ensemble_size)?;
    let s = release_samples(config, ensemble_size)?;
    Ok(ReleaseSummary::from_samples(&s, mode, config.apu_window))
}

/// Both modes from the same runs: `(instantaneous, averaged)`.
pub fn release_both(config: &AdpllConfig, ensemble_size: usize) -> Result<(ReleaseSummary, ReleaseSummary)> {
    check_ensemble(ensemble_size)?;
    let s = release_samples(config, ensemble_size)?;
    Ok((
        ReleaseSummary::from_samples(&s, ReleaseMode::Instantaneous, config.apu_window),
        ReleaseSummary::from_samples(&s, ReleaseMode::Averaged, config.apu_window),
    ))
}

/// Reference profile as seen at the DCO carrier, band-limited to f_ref/2.
pub fn reference_profile_at_carrier(config: &AdpllConfig) -> Result<Option<PnProfile>> {
    let Some(m) = &config.ref_noise else {
        return Ok(None);
    };
    let terms: Vec<_> = m.terms.iter().copied().filter(|t| t.coefficient > 0.0).collect();
    if terms.is_empty() {
        return Ok(None);
    }
    let p = PnProfile::from_power_law(config.f_ref_hz, terms, m.f_min_hz, config.f_ref_hz / 2.0)?;
    Ok(Some(p.upconvert(config.fcw)?))
}

/// Release-error std from reference noise alone: `f₀²·σ_NPAJ(N)` on the
/// upconverted reference noise (as synthesized, see [`ModelSpectrum`]), with `N = fcw` (times `√(α/(2−α))`) for
/// the instantaneous DCW and `N = W·fcw` for the APU output. The averaged
/// form ignores loop dynamics and holds for `W ≫ 1/α`.
pub fn predicted_release_std(config: &AdpllConfig, mode: ReleaseMode, window: usize) -> Result<f64> {
    config.validate()?;
    let Some(m) = &config.ref_noise else {
        return Ok(0.0);
    };
    if m.terms.iter().all(|t| t.coefficient == 0.0) {
        return Ok(0.0);
    }
    let f_ref = config.f_ref_hz;
    let p = ModelSpectrum::new(m, f_ref, f_ref, config.fcw, 100.0 * f_ref)?;
    let f0 = config.target_hz();
    let spec = IntegrationSpec::for_spectrum(&p);
    let a = config.loop_gain;
    Ok(match mode {
        ReleaseMode::Instantaneous => {
            f0 * f0 * npaj_rms(&p, config.fcw, &spec)? * (a / (2.0 - a)).sqrt()
        }
        ReleaseMode::Averaged => f0 * f0 * npaj_rms(&p, window as f64 * config.fcw, &spec)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window: usize,
    pub std_hz: f64,
    pub mean_hz: f64,
    pub predicted_std_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSweep {
    pub rows: Vec<WindowRow>,
    /// Critical averaging length of the upconverted reference, DCO periods.
    pub critical_periods: Option<u64>,
    /// The same in reference cycles.
    pub critical_ref_cycles: Option<f64>,
}

/// Averaged-mode release statistics per APU window.
pub fn apu_window_sweep(config: &AdpllConfig, windows: &[usize], ensemble_size: usize) -> Result<WindowSweep> {
    if windows.is_empty() || windows.windows(2).any(|w| w[1] <= w[0]) || windows[0] == 0 {
        return Err(Error::arg("windows must be >= 1 and strictly increasing"));
    }
    check_ensemble(ensemble_size)?;
    let mut rows = Vec::with_capacity(windows.len());
    for &w in windows {
        let cfg = AdpllConfig {
            apu_window: w,
            ..config.clone()
        };
        let s = release(&cfg, ReleaseMode::Averaged, ensemble_size)?;
        rows.push(WindowRow {
            window: w,
            std_hz: s.std_hz,
            mean_hz: s.mean_hz,
            predicted_std_hz: predicted_release_std(&cfg, ReleaseMode::Averaged, w)?,
        });
    }
    let n_c = match reference_profile_at_carrier(config)? {
        Some(p) => match p.flicker_corner() {
            Some(fc) if fc < p.carrier_hz() => Some(critical_periods(p.carrier_hz(), fc)?),
            _ => None,
        },
        None => None,
    };
    Ok(WindowSweep {
        rows,
        critical_periods: n_c,
        critical_ref_cycles: n_c.map(|n| n as f64 / config.fcw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pn_profile::PowerLawTerm;

    fn base() -> AdpllConfig {
        AdpllConfig::new(40e6, 60.0, 10e3)
    }

    #[test]
    fn noiseless_lock_and_release() {
        let cfg = base();
        let r = run(&cfg, 200).unwrap();
        assert!(r.release_err_hz.abs() < cfg.kdco_hz / 2.0);
        let settle = r
            .dco_freq_trace
            .iter()
            .position(|f| (f - cfg.target_hz()).abs() < cfg.kdco_hz / 2.0)
            .unwrap();
        assert!((settle as f64) < 5.0 / cfg.loop_gain, "settled after {settle}");
        assert!(r.locked_at.is_some());
        assert!(!r.saturated);
    }

    #[test]
    fn deadbeat_at_unit_gain() {
        let cfg = AdpllConfig {
            loop_gain: 1.0,
            ..base()
        };
        let r = run(&cfg, 50).unwrap();
        assert!((r.dco_freq_trace[1] - cfg.target_hz()).abs() < 1e-6);
    }

    #[test]
    fn noiseless_runs_ignore_seed() {
        let a = run(&base(), 300).unwrap();
        let b = run(&AdpllConfig { seed: 99, ..base() }, 300).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn apu_trace_is_trailing_mean() {
        let cfg = AdpllConfig {
            apu_window: 16,
            ref_noise: Some(NoiseModel::new(vec![PowerLawTerm::new(2, 1e-6)], 1e3)),
            ..base()
        };
        let r = run(&cfg, 400).unwrap();
        for k in 15..400 {
            let want = r.dcw_trace[k - 15..=k].iter().sum::<f64>() / 16.0;
            assert_eq!(r.dcw_av_trace[k], want);
        }
    }

    #[test]
    fn apu_attenuates_like_sinc() {
        let w = 32;
        let f_ref = 1.0;
        for f in [0.3 / w as f64, 0.7 / w as f64, 1.5 / w as f64] {
            let mut apu = Apu::new(w);
            let n = 20_000;
            let out: Vec<f64> = (0..n)
                .map(|k| apu.push((2.0 * PI * f * k as f64 / f_ref).sin()))
                .collect();
            let peak = out[n / 2..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let x = PI * f * w as f64 / f_ref;
            let sinc = (x.sin() / x).abs();
            assert!((peak - sinc).abs() <= 0.1 * sinc, "f {f}: {peak} vs {sinc}");
        }
    }

    #[test]
    fn saturation_flagged() {
        let cfg = AdpllConfig {
            loop_gain: 1.0,
            dcw_range: Some((-10.0, 101.0)),
            dco_free_run_hz: 60.0 * 40e6 - 100.0 * 10e3,
            gfsk: Some(GfskConfig::ble()),
            ..base()
        };
        let r = run(&cfg, 400).unwrap();
        assert!(r.saturated);
        assert!(r.dcw_trace.iter().all(|d| (-10.0..=101.0).contains(d)));
    }

    #[test]
    fn invalid_configs() {
        assert!(run(&AdpllConfig { loop_gain: 1.5, ..base() }, 100).is_err());
        assert!(run(&AdpllConfig { loop_gain: 0.0, ..base() }, 100).is_err());
        assert!(run(&AdpllConfig { dcw_range: Some((0.0, 50.0)), ..base() }, 100).is_err());
        assert!(run(&AdpllConfig { fcw: 0.5, ..base() }, 100).is_err());
        assert!(run(&AdpllConfig { apu_window: 100, ..base() }, 100).is_err());
    }

    #[test]
    fn quantized_dcw_is_integer() {
        let cfg = AdpllConfig {
            quantize_dcw: true,
            dco_free_run_hz: 60.0 * 40e6 - 100.37 * 10e3,
            ..base()
        };
        let r = run(&cfg, 300).unwrap();
        let f = *r.dco_freq_trace.last().unwrap();
        let steps = (f - cfg.dco_free_run_hz) / cfg.kdco_hz;
        assert!((steps - steps.round()).abs() < 1e-6);
        assert!(r.release_err_hz.abs() <= cfg.kdco_hz / 2.0 + 1e-6);
    }

    #[test]
    fn gfsk_pulse_area_is_one_bit() {
        let g = GfskConfig::ble();
        let area: f64 = (-4000..4000).map(|i| g.pulse(i as f64 * 1e-3) * 1e-3).sum();
        assert!((area - 1.0).abs() < 1e-6);
        assert!(g.modulation_density(500e3, 1e3) > 0.0);
    }

    #[test]
    fn gfsk_dcw_av_settles() {
        let cfg = AdpllConfig {
            f_ref_hz: 40e6,
            fcw: 60.0,
            loop_gain: 0.5,
            apu_window: 400,
            gfsk: Some(GfskConfig::ble()),
            ..base()
        };
        let r = run(&cfg, 4000).unwrap();
        let tail = &r.dcw_trace[2000..];
        let tail_av = &r.dcw_av_trace[2000..];
        let spread = |v: &[f64]| {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(tail) > 20.0, "dcw spread {}", spread(tail));
        assert!(spread(tail_av) < 0.2 * spread(tail), "dcw_av spread {}", spread(tail_av));
    }

    #[test]
    fn zero_noise_release_has_zero_spread() {
        let cfg = AdpllConfig {
            apu_window: 8,
            ..base()
        };
        let (i, a) = release_both(&cfg, 100).unwrap();
        assert_eq!(i.std_hz, 0.0);
        assert_eq!(a.std_hz, 0.0);
        assert!(release(&cfg, ReleaseMode::Averaged, 10).is_err());
    }

    #[test]
    fn window_of_one_matches_instantaneous() {
        let cfg = AdpllConfig {
            ref_noise: Some(NoiseModel::new(vec![PowerLawTerm::new(2, 1e-4)], 1e3)),
            ..base()
        };
        for s in release_samples(&cfg, 20).unwrap() {
            assert_eq!(s.instantaneous_hz, s.averaged_hz);
        }
    }
}
