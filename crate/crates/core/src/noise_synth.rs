//! Time-domain phase-error paths for power-law phase noise, and the
//! estimators that turn a path back into NPAJ, ADEV and a spectrum.
//!
//! A path holds the timing deviation of each edge, one sample per nominal
//! period. Noise above f₀/2 aliases into the band.
//!
//! Per-exponent generators (x is phase time in seconds, `f_s` the sample rate):
//!
//! * α = 0: i.i.d. samples of variance `c₀·f_s/(4π²f_c²)`
//! * α = 1: a bank of first-order low-pass sections, poles 2 per decade
//!   from `f_min`, whose sum has a 1/f spectrum
//! * α = 2: random walk with step variance `c₂/(f_c²·f_s)`
//! * α = 3: the same section bank driving the per-sample increments, then
//!   summed into phase

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pn_profile::{lin_to_db, PnAnchor, PnProfile, PowerLawTerm, Spectrum};
use crate::spectral_jitter::{AdevCurve, JitterCurve, JitterKind};

const PI: f64 = std::f64::consts::PI;
const PATH_MAGIC: &[u8; 4] = b"CSPH";
const PATH_VERSION: u32 = 1;
const PSD_BINS_PER_DECADE: f64 = 10.0;

/// Power-law noise terms plus the lowest synthesized frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub terms: Vec<PowerLawTerm>,
    pub f_min_hz: f64,
}

impl NoiseModel {
    pub fn new(terms: Vec<PowerLawTerm>, f_min_hz: f64) -> Self {
        Self { terms, f_min_hz }
    }

    pub fn has_flicker(&self) -> bool {
        self.terms
            .iter()
            .any(|t| matches!(t.exponent, 1 | 3) && t.coefficient > 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.exponent > 3 {
                return Err(Error::arg(format!(
                    "synthesis supports exponents 0..=3, got {}",
                    t.exponent
                )));
            }
            if !(t.coefficient >= 0.0 && t.coefficient.is_finite()) {
                return Err(Error::arg(format!(
                    "term coefficient {} must be finite and >= 0",
                    t.coefficient
                )));
            }
        }
        if !(self.f_min_hz > 0.0 && self.f_min_hz.is_finite()) {
            return Err(Error::arg(format!("f_min {} Hz must be > 0", self.f_min_hz)));
        }
        Ok(())
    }
}

/// The spectrum a [`NoiseSource`] actually produces. Random-walk terms
/// (α ≥ 2) keep their full-band period jitter, while α ≤ 1 terms stop at
/// half the sample rate. Integration runs up to `f_max_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpectrum {
    carrier_hz: f64,
    terms: Vec<PowerLawTerm>,
    f_min_hz: f64,
    cutoff_hz: f64,
    f_max_hz: f64,
}

impl ModelSpectrum {
    /// `model` sampled at `sample_rate_hz` for a clock at `carrier_hz`, seen
    /// at `carrier_hz·ratio` (coefficients scale by `ratio²`).
    pub fn new(model: &NoiseModel, carrier_hz: f64, sample_rate_hz: f64, ratio: f64, f_max_hz: f64) -> Result<Self> {
        model.validate()?;
        let cutoff_hz = sample_rate_hz / 2.0;
        if !(ratio > 0.0 && model.f_min_hz < cutoff_hz && cutoff_hz <= f_max_hz) {
            return Err(Error::arg("model spectrum needs f_min < fs/2 <= f_max and ratio > 0"));
        }
        Ok(Self {
            carrier_hz: carrier_hz * ratio,
            terms: model
                .terms
                .iter()
                .map(|t| PowerLawTerm::new(t.exponent, t.coefficient * ratio * ratio))
                .collect(),
            f_min_hz: model.f_min_hz,
            cutoff_hz,
            f_max_hz,
        })
    }
}

impl Spectrum for ModelSpectrum {
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
        self.terms
            .iter()
            .filter(|t| t.exponent >= 2 || f <= self.cutoff_hz)
            .map(|t| t.value(f))
            .sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.cutoff_hz]
    }
}

/// Parameters of one synthesized path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub terms: Vec<PowerLawTerm>,
    pub f_min_hz: f64,
    pub duration_periods: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn model(&self) -> NoiseModel {
        NoiseModel::new(self.terms.clone(), self.f_min_hz)
    }

    pub fn validate(&self, carrier_hz: f64) -> Result<()> {
        if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
            return Err(Error::arg(format!("carrier {carrier_hz} Hz must be > 0")));
        }
        let model = self.model();
        model.validate()?;
        if self.duration_periods < 2 {
            return Err(Error::arg("path needs at least 2 samples"));
        }
        if self.f_min_hz >= carrier_hz / 2.0 {
            return Err(Error::arg(format!(
                "f_min {} Hz must be below half the carrier",
                self.f_min_hz
            )));
        }
        if model.has_flicker() {
            let need = 2.0 * carrier_hz / self.f_min_hz;
            if (self.duration_periods as f64) < need {
                return Err(Error::arg(format!(
                    "duration {} periods is too short for f_min = {} Hz; need >= {}",
                    self.duration_periods,
                    self.f_min_hz,
                    need.ceil()
                )));
            }
        }
        Ok(())
    }
}

/// Per-edge timing deviation of a clock, one sample per nominal period.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePath {
    pub carrier_hz: f64,
    pub phase_err_s: Vec<f64>,
    pub seed: u64,
}

impl PhasePath {
    pub fn n_samples(&self) -> usize {
        self.phase_err_s.len()
    }

    pub fn period_s(&self) -> f64 {
        1.0 / self.carrier_hz
    }
}

#[derive(Debug, Clone)]
struct Section {
    a: f64,
    b: f64,
    state: f64,
}

#[derive(Debug, Clone)]
enum Generator {
    White { sigma: f64 },
    Flicker { sections: Vec<Section> },
    RandomWalk { sigma: f64, x: f64 },
    FlickerWalk { sections: Vec<Section>, x: f64 },
}

/// Streaming phase-time noise (seconds) at a fixed sample rate.
///
/// Each sample consumes normal draws in a fixed order, so a given
/// `(model, rates, seed, stream)` always yields the same sequence.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    gens: Vec<Generator>,
}

impl NoiseSource {
    /// `carrier_hz` sets the phase-to-time scale, `sample_rate_hz` the step.
    /// Independent sources from one seed use different `stream` values.
    pub fn new(
        model: &NoiseModel,
        carrier_hz: f64,
        sample_rate_hz: f64,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        model.validate()?;
        if !(carrier_hz > 0.0 && sample_rate_hz > 0.0) {
            return Err(Error::arg("carrier and sample rate must be > 0"));
        }
        if model.f_min_hz >= sample_rate_hz / 2.0 {
            return Err(Error::arg(format!(
                "f_min {} Hz must be below half the sample rate {} Hz",
                model.f_min_hz, sample_rate_hz
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let fc2 = carrier_hz * carrier_hz;
        let fs = sample_rate_hz;
        let mut gens = Vec::with_capacity(model.terms.len());
        for t in &model.terms {
            let c = t.coefficient;
            let g = match t.exponent {
                0 => Generator::White {
                    sigma: (c * fs / (4.0 * PI * PI * fc2)).sqrt(),
                },
                1 => Generator::Flicker {
                    sections: section_bank(c / (2.0 * PI * PI * fc2), model.f_min_hz, fs, &mut rng),
                },
                2 => Generator::RandomWalk {
                    sigma: (c / (fc2 * fs)).sqrt(),
                    x: 0.0,
                },
                3 => Generator::FlickerWalk {
                    sections: section_bank(2.0 * c / (fs * fs * fc2), model.f_min_hz, fs, &mut rng),
                    x: 0.0,
                },
                e => return Err(Error::arg(format!("unsupported exponent {e}"))),
            };
            gens.push(g);
        }
        Ok(Self { rng, gens })
    }

    pub fn next_sample(&mut self) -> f64 {
        let rng = &mut self.rng;
        let mut out = 0.0;
        for g in &mut self.gens {
            out += match g {
                Generator::White { sigma } => *sigma * rng.sample::<f64, _>(StandardNormal),
                Generator::Flicker { sections } => step_sections(sections, rng),
                Generator::RandomWalk { sigma, x } => {
                    let v = *x;
                    *x += *sigma * rng.sample::<f64, _>(StandardNormal);
                    v
                }
                Generator::FlickerWalk { sections, x } => {
                    let v = *x;
                    *x += step_sections(sections, rng);
                    v
                }
            };
        }
        out
    }
}

/// Sections with poles at `f_min·10^(j/2)` up to `fs/2`, each carrying
/// stationary variance `h·ln√10`, so the sum approximates `h/f`.
fn section_bank(h: f64, f_min: f64, fs: f64, rng: &mut ChaCha8Rng) -> Vec<Section> {
    let ratio = 10f64.sqrt();
    let var = h * ratio.ln();
    let mut out = Vec::new();
    let mut p = f_min;
    loop {
        let a = (-2.0 * PI * p / fs).exp();
        let b = (var * (1.0 - a * a)).sqrt();
        let state = var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        out.push(Section { a, b, state });
        if p >= fs / 2.0 {
            break;
        }
        p *= ratio;
    }
    out
}

fn step_sections(sections: &mut [Section], rng: &mut ChaCha8Rng) -> f64 {
    let mut sum = 0.0;
    for s in sections {
        sum += s.state;
        s.state = s.a * s.state + s.b * rng.sample::<f64, _>(StandardNormal);
    }
    sum
}

/// Generate one phase path at one sample per carrier period.
pub fn synthesize(spec: &SynthSpec, carrier_hz: f64) -> Result<PhasePath> {
    spec.validate(carrier_hz)?;
    let mut src = NoiseSource::new(&spec.model(), carrier_hz, carrier_hz, spec.seed, 0)?;
    let phase_err_s: Vec<f64> = (0..spec.duration_periods).map(|_| src.next_sample()).collect();
    if phase_err_s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("synthesized path has non-finite samples".into()));
    }
    Ok(PhasePath {
        carrier_hz,
        phase_err_s,
        seed: spec.seed,
    })
}

/// One path per seed, generated in parallel.
pub fn synthesize_many(spec: &SynthSpec, carrier_hz: f64, seeds: &[u64]) -> Result<Vec<PhasePath>> {
    seeds
        .par_iter()
        .map(|&seed| synthesize(&SynthSpec { seed, ..spec.clone() }, carrier_hz))
        .collect()
}

fn check_n_list(n_list: &[usize], limit: usize, what: &str) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::arg("need at least one N"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::arg("N values must be >= 1 and strictly increasing"));
    }
    let max = *n_list.last().unwrap();
    if max > limit {
        return Err(Error::arg(format!(
            "path too short for {what}: N = {max} exceeds {limit}"
        )));
    }
    Ok(())
}

/// Overlapping Allan deviation.
pub fn estimate_adev(path: &PhasePath, n_list: &[usize]) -> Result<AdevCurve> {
    estimate_adev_with(path, n_list, true)
}

/// Allan deviation; `overlapping = false` steps k by N (textbook estimator).
pub fn estimate_adev_with(path: &PhasePath, n_list: &[usize], overlapping: bool) -> Result<AdevCurve> {
    let x = &path.phase_err_s;
    check_n_list(n_list, x.len() / 4, "ADEV")?;
    let t0 = path.period_s();
    let sigma: Vec<f64> = n_list
        .par_iter()
        .map(|&n| {
            let step = if overlapping { 1 } else { n };
            let (mut sum, mut count) = (0.0, 0usize);
            let mut k = 0;
            while k + 2 * n < x.len() {
                let d = x[k] - 2.0 * x[k + n] + x[k + 2 * n];
                sum += d * d;
                count += 1;
                k += step;
            }
            let nt = n as f64 * t0;
            (sum / count as f64 / (2.0 * nt * nt)).sqrt()
        })
        .collect();
    Ok(AdevCurve::new(
        path.carrier_hz,
        n_list.iter().map(|&n| n as f64).collect(),
        sigma,
    ))
}

/// N-period jitter series `x(k+N) − x(k)`.
pub fn npj_series(path: &PhasePath, n: usize) -> Result<Vec<f64>> {
    let x = &path.phase_err_s;
    if n == 0 || n >= x.len() {
        return Err(Error::arg(format!("N = {n} needs 1 <= N < {}", x.len())));
    }
    Ok(x.windows(n + 1).map(|w| w[n] - w[0]).collect())
}

/// Overlapping ADEV from an N-period jitter series, as the normalized first
/// difference of that series at lag N.
pub fn adev_from_npj_series(series: &[f64], n: usize, period_s: f64) -> Result<f64> {
    if n == 0 || series.len() <= n {
        return Err(Error::arg("series too short for lag N"));
    }
    let m = series.len() - n;
    let sum: f64 = (0..m).map(|k| (series[k + n] - series[k]).powi(2)).sum();
    let nt = n as f64 * period_s;
    Ok((sum / m as f64 / (2.0 * nt * nt)).sqrt())
}

/// N-period-average jitter: rms of `(x(k+N) − x(k))/N`.
pub fn estimate_npaj(path: &PhasePath, n_list: &[usize]) -> Result<JitterCurve> {
    let x = &path.phase_err_s;
    check_n_list(n_list, x.len() / 2, "NPAJ")?;
    let sigma_s: Vec<f64> = n_list
        .par_iter()
        .map(|&n| {
            let m = x.len() - n;
            let sum: f64 = (0..m).map(|k| (x[k + n] - x[k]).powi(2)).sum();
            (sum / m as f64).sqrt() / n as f64
        })
        .collect();
    Ok(JitterCurve {
        carrier_hz: path.carrier_hz,
        n_values: n_list.iter().map(|&n| n as f64).collect(),
        sigma_s,
        kind: JitterKind::Npaj,
    })
}

/// Log-binned L(f) estimate. Bins with no power read `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub carrier_hz: f64,
    pub freqs_hz: Vec<f64>,
    pub level_dbc: Vec<f64>,
    /// Frequency resolution of the underlying periodogram.
    pub resolution_hz: f64,
}

impl PsdEstimate {
    /// Anchored profile over the finite bins. Estimation noise can make a
    /// flat spectrum rise between bins, so levels are first replaced by their
    /// least-squares non-increasing fit.
    pub fn to_profile(&self) -> Result<PnProfile> {
        let (freqs, levels): (Vec<f64>, Vec<f64>) = self
            .freqs_hz
            .iter()
            .zip(&self.level_dbc)
            .filter(|(_, l)| l.is_finite())
            .map(|(&f, &l)| (f, l))
            .unzip();
        if freqs.is_empty() {
            return Err(Error::Numeric("spectrum estimate has no finite bins".into()));
        }
        let anchors: Vec<PnAnchor> = freqs
            .iter()
            .zip(non_increasing_fit(&levels))
            .map(|(&f, l)| PnAnchor::new(f, l))
            .collect();
        let f_min = anchors[0].offset_hz / 2.0;
        let f_max = anchors[anchors.len() - 1].offset_hz;
        PnProfile::from_anchors(self.carrier_hz, anchors, f_min, f_max)
    }
}

/// Pool-adjacent-violators fit of a non-increasing sequence.
fn non_increasing_fit(y: &[f64]) -> Vec<f64> {
    // Blocks of (mean, count).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m2 <= m1 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat(m).take(n))
        .collect()
}

/// Welch estimate: segments of n/32 samples, 50% overlap, Hann taper,
/// averaged into log-spaced bins and converted to dBc/Hz.
pub fn estimate_psd(path: &PhasePath) -> Result<PsdEstimate> {
    let x = &path.phase_err_s;
    if x.len() < 1 << 14 {
        return Err(Error::arg(format!(
            "spectrum estimate needs >= 16384 samples, got {}",
            x.len()
        )));
    }
    let fs = path.carrier_hz;
    let m = x.len() / 32;
    let hop = m / 2;
    let window: Vec<f64> = (0..m)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / m as f64).cos())
        .collect();
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let half = m / 2;
    let mut acc = vec![0.0; half + 1];
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    let mut start = 0;
    while start + m <= x.len() {
        let seg = &x[start..start + m];
        let mean = seg.iter().sum::<f64>() / m as f64;
        for (b, (&v, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    // One-sided S_x, then L = 2π²f₀²·S_x.
    let df = fs / m as f64;
    let to_l = 2.0 * PI * PI * path.carrier_hz * path.carrier_hz;
    let psd: Vec<f64> = acc
        .iter()
        .map(|a| 2.0 * a / (segments as f64 * fs * wpow) * to_l)
        .collect();

    let ratio = 10f64.powf(1.0 / PSD_BINS_PER_DECADE);
    let (mut freqs_hz, mut level_dbc) = (Vec::new(), Vec::new());
    let mut k = 1;
    let mut edge = df;
    while k < half {
        edge *= ratio;
        let (mut sum, mut logf, mut count) = (0.0, 0.0, 0usize);
        while k < half && (k as f64) * df < edge {
            sum += psd[k];
            logf += (k as f64 * df).ln();
            count += 1;
            k += 1;
        }
        if count > 0 {
            freqs_hz.push((logf / count as f64).exp());
            let mean = sum / count as f64;
            level_dbc.push(if mean > 0.0 { lin_to_db(mean) } else { f64::NEG_INFINITY });
        }
    }
    Ok(PsdEstimate {
        carrier_hz: path.carrier_hz,
        freqs_hz,
        level_dbc,
        resolution_hz: df,
    })
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    carrier_hz: f64,
    n_samples: usize,
    seed: u64,
    spec: SynthSpec,
}

/// Write `path` as a CSPH binary plus a JSON sidecar (same stem, `.json`).
pub fn write_path(file: impl AsRef<Path>, path: &PhasePath, spec: &SynthSpec) -> Result<()> {
    let file = file.as_ref();
    let mut bytes = Vec::with_capacity(16 + 8 * path.n_samples());
    bytes.extend_from_slice(PATH_MAGIC);
    bytes.extend_from_slice(&PATH_VERSION.to_le_bytes());
    bytes.extend_from_slice(&path.carrier_hz.to_le_bytes());
    for v in &path.phase_err_s {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(file)?.write_all(&bytes)?;
    let sidecar = Sidecar {
        format: "CSPH".into(),
        version: PATH_VERSION,
        carrier_hz: path.carrier_hz,
        n_samples: path.n_samples(),
        seed: path.seed,
        spec: spec.clone(),
    };
    std::fs::write(file.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Read a CSPH binary; the seed comes from the sidecar when present.
pub fn read_path(file: impl AsRef<Path>) -> Result<PhasePath> {
    let file = file.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(file)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..4] != PATH_MAGIC {
        return Err(Error::Parse(format!("{} is not a CSPH path file", file.display())));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != PATH_VERSION {
        return Err(Error::Parse(format!("unsupported CSPH version {version}")));
    }
    if (bytes.len() - 16) % 8 != 0 {
        return Err(Error::Parse("CSPH payload is not a whole number of f64".into()));
    }
    let carrier_hz = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let phase_err_s = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let seed = match std::fs::read_to_string(file.with_extension("json")) {
        Ok(text) => {
            serde_json::from_str::<Sidecar>(&text)
                .map_err(|e| Error::Parse(format!("path sidecar: {e}")))?
                .seed
        }
        Err(_) => 0,
    };
    Ok(PhasePath {
        carrier_hz,
        phase_err_s,
        seed,
    })
}
