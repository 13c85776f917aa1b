//! Jitter and Allan deviation from a phase-noise spectrum.
//!
//! Every metric is a weighted integral of L(f):
//!
//! * N-period jitter: `σ² = 2/(π²f₀²) ∫ L(f)·sin²(πfN/f₀) df`
//! * N-period-average jitter: `σ_NPJ / N`
//! * Allan deviation: `σ_y² = 4/(π²N²) ∫ L(f)·sin⁴(πfN/f₀) df`
//! * N-period cycle-to-cycle jitter: `σ² = 1/(2π²f₀²) ∫ L(f)·(2 − 2cos(2πfN/f₀))² df`
//!
//! The integrands oscillate about N·f_max/f₀ times across the band. Below
//! `f* = k·f₀/N` (k = `oscillation_threshold`, rounded up to whole periods)
//! the quadrature resolves every half period; above `f*` the kernel is replaced
//! by its mean plus a two-term integration-by-parts correction for each
//! harmonic, whose next term is reported as `tail_bound`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pn_profile::{sample_grid, Spectrum};
use crate::quadrature::{integrate_panels, Panel};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577215664901532;

const PI: f64 = std::f64::consts::PI;
const LN_2: f64 = std::f64::consts::LN_2;
const QUAD_REL_TOL: f64 = 1e-11;

/// Integration window and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSpec {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points_per_decade: usize,
    pub oscillation_threshold: f64,
}

impl IntegrationSpec {
    pub const DEFAULT_POINTS_PER_DECADE: usize = 32;
    pub const DEFAULT_OSCILLATION_THRESHOLD: f64 = 64.0;

    pub fn new(f_min_hz: f64, f_max_hz: f64) -> Self {
        Self {
            f_min_hz,
            f_max_hz,
            points_per_decade: Self::DEFAULT_POINTS_PER_DECADE,
            oscillation_threshold: Self::DEFAULT_OSCILLATION_THRESHOLD,
        }
    }

    /// The full spectral window of `s`.
    pub fn for_spectrum<S: Spectrum + ?Sized>(s: &S) -> Self {
        Self::new(s.f_min_hz(), s.f_max_hz())
    }

    /// Keep resolution settings, take the window from `s`.
    pub fn with_window_of<S: Spectrum + ?Sized>(&self, s: &S) -> Self {
        Self {
            f_min_hz: s.f_min_hz(),
            f_max_hz: s.f_max_hz(),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_min_hz > 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz.is_finite()) {
            return Err(Error::arg(format!(
                "integration window needs 0 < f_min ({}) < f_max ({})",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if self.points_per_decade < 16 {
            return Err(Error::arg(format!(
                "points_per_decade {} must be >= 16",
                self.points_per_decade
            )));
        }
        if !(self.oscillation_threshold >= 1.0 && self.oscillation_threshold.is_finite()) {
            return Err(Error::arg("oscillation_threshold must be >= 1"));
        }
        Ok(())
    }
}

/// Periodic weight applied to L(f), as a function of `x = πfN/f₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `sin²x` (N-period jitter)
    Sin2,
    /// `sin⁴x` (Allan variance)
    Sin4,
    /// `(2 − 2cos 2x)²`, the second-difference transfer (cycle-to-cycle)
    SecondDifference,
}

impl Kernel {
    fn value(self, x: f64) -> f64 {
        match self {
            Kernel::Sin2 => x.sin().powi(2),
            Kernel::Sin4 => x.sin().powi(4),
            Kernel::SecondDifference => (2.0 - 2.0 * (2.0 * x).cos()).powi(2),
        }
    }

    fn mean(self) -> f64 {
        match self {
            Kernel::Sin2 => 0.5,
            Kernel::Sin4 => 0.375,
            Kernel::SecondDifference => 6.0,
        }
    }

    /// `(m, c)` pairs such that kernel = mean + Σ c·cos(2m·x).
    fn harmonics(self) -> &'static [(f64, f64)] {
        match self {
            Kernel::Sin2 => &[(1.0, -0.5)],
            Kernel::Sin4 => &[(1.0, -0.5), (2.0, 0.125)],
            Kernel::SecondDifference => &[(1.0, -8.0), (2.0, 2.0)],
        }
    }
}

/// Result of [`integrate_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelIntegral {
    pub value: f64,
    /// Magnitude of the first neglected term of the averaged-tail expansion.
    pub tail_bound: f64,
}

/// `∫ L(f)·kernel(πfN/f₀) df` over the window in `spec`.
pub fn integrate_kernel<S: Spectrum + ?Sized>(
    s: &S,
    kernel: Kernel,
    n: f64,
    spec: &IntegrationSpec,
) -> Result<KernelIntegral> {
    spec.validate()?;
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::arg(format!("averaging length N = {n} must be >= 1")));
    }
    let (lo, hi) = (spec.f_min_hz, spec.f_max_hz);
    if lo < s.f_min_hz() * (1.0 - 1e-12) || hi > s.f_max_hz() * (1.0 + 1e-12) {
        return Err(Error::range("integration bound", if lo < s.f_min_hz() { lo } else { hi }, s.f_min_hz(), s.f_max_hz()));
    }
    let f0 = s.carrier_hz();
    let b = PI * n / f0;
    let period = f0 / n;
    let f_star = spec.oscillation_threshold.ceil() * period;
    let split = f_star.min(hi);

    let mut breaks: Vec<f64> = s
        .breakpoints()
        .into_iter()
        .filter(|&f| f > lo && f < hi)
        .collect();
    breaks.sort_by(f64::total_cmp);

    let ratio = 10f64.powf(1.0 / spec.points_per_decade as f64);
    let half = 0.5 * period;
    let mut panels = Vec::new();
    let mut f = lo;
    while f < split {
        let next_break = breaks
            .iter()
            .copied()
            .find(|&x| x > f * (1.0 + 1e-12))
            .unwrap_or(f64::INFINITY);
        let log = f * (ratio - 1.0) <= half;
        let step = if log {
            f * ratio
        } else {
            ((f / half).floor() + 1.0) * half
        };
        let next = step.min(next_break).min(split);
        // Guard against a zero-width panel from rounding at the grid.
        let next = if next <= f { (f + half).min(split) } else { next };
        panels.push(Panel { a: f, b: next, log });
        f = next;
    }
    let oscillating = |x: f64| s.density(x) * kernel.value(b * x);
    let mut value = integrate_panels(&oscillating, &panels, QUAD_REL_TOL)
        .map_err(|(a, z)| non_finite(kernel, n, a, z))?;

    let mut tail_bound = 0.0;
    if f_star < hi {
        let mut grid = sample_grid(f_star, hi, spec.points_per_decade as f64);
        grid.extend(breaks.iter().copied().filter(|&x| x > f_star && x < hi));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let tail: Vec<Panel> = grid
            .windows(2)
            .map(|w| Panel { a: w[0], b: w[1], log: true })
            .collect();
        let smooth = |x: f64| s.density(x);
        let mean_part = integrate_panels(&smooth, &tail, QUAD_REL_TOL)
            .map_err(|(a, z)| non_finite(kernel, n, a, z))?;
        value += kernel.mean() * mean_part;

        // ∫ L cos(ωf) df ≈ [L sin(ωf)/ω + L' cos(ωf)/ω²] between f* and f_max.
        let ends = [(f_star, -1.0, false), (hi, 1.0, true)];
        for &(m, c) in kernel.harmonics() {
            let omega = 2.0 * m * b;
            for &(x, sign, upper) in &ends {
                let l = s.density(x);
                let slope = log_slope(s, x, upper);
                let dl = slope * l / x;
                let term = l * (omega * x).sin() / omega + dl * (omega * x).cos() / (omega * omega);
                value += c * sign * term;
                tail_bound += (c * slope * (slope - 1.0) * l / (x * x)).abs() / omega.powi(3);
            }
        }
    }
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "{kernel:?} integral at N = {n} is not finite over [{lo}, {hi}] Hz"
        )));
    }
    Ok(KernelIntegral {
        value: value.max(0.0),
        tail_bound,
    })
}

fn non_finite(kernel: Kernel, n: f64, a: f64, b: f64) -> Error {
    Error::Numeric(format!(
        "{kernel:?} integrand at N = {n} is not finite on [{a}, {b}] Hz; \
         steep spectra need a positive lower bound"
    ))
}

/// d ln L / d ln f, one-sided at the window edges.
fn log_slope<S: Spectrum + ?Sized>(s: &S, f: f64, upper_edge: bool) -> f64 {
    let d = 1e-4;
    let (x1, x2) = if upper_edge {
        (f * (1.0 - d), f)
    } else {
        (f, f * (1.0 + d))
    };
    let (l1, l2) = (s.density(x1), s.density(x2));
    if l1 > 0.0 && l2 > 0.0 {
        (l2 / l1).ln() / (x2 / x1).ln()
    } else {
        0.0
    }
}

/// RMS N-period jitter in seconds.
pub fn npj_rms<S: Spectrum + ?Sized>(s: &S, n: f64, spec: &IntegrationSpec) -> Result<f64> {
    let f0 = s.carrier_hz();
    let i = integrate_kernel(s, Kernel::Sin2, n, spec)?;
    Ok((2.0 / (PI * PI * f0 * f0) * i.value).sqrt())
}

/// RMS N-period-average jitter in seconds.
pub fn npaj_rms<S: Spectrum + ?Sized>(s: &S, n: f64, spec: &IntegrationSpec) -> Result<f64> {
    Ok(npj_rms(s, n, spec)? / n)
}

/// NPAJ by its own normalization, `2/(π²f₀²N²) ∫ L sin²`; agrees with
/// [`npaj_rms`] to rounding.
pub fn npaj_rms_direct<S: Spectrum + ?Sized>(
    s: &S,
    n: f64,
    spec: &IntegrationSpec,
) -> Result<f64> {
    let f0 = s.carrier_hz();
    let i = integrate_kernel(s, Kernel::Sin2, n, spec)?;
    Ok((2.0 * i.value / (PI * PI * f0 * f0 * n * n)).sqrt())
}

/// Allan deviation at τ = N/f₀.
pub fn adev<S: Spectrum + ?Sized>(s: &S, n: f64, spec: &IntegrationSpec) -> Result<f64> {
    let i = integrate_kernel(s, Kernel::Sin4, n, spec)?;
    Ok((4.0 / (PI * PI * n * n) * i.value).sqrt())
}

/// RMS N-period cycle-to-cycle jitter in seconds.
pub fn cc_rms<S: Spectrum + ?Sized>(s: &S, n: f64, spec: &IntegrationSpec) -> Result<f64> {
    let f0 = s.carrier_hz();
    let i = integrate_kernel(s, Kernel::SecondDifference, n, spec)?;
    Ok((i.value / (2.0 * PI * PI * f0 * f0)).sqrt())
}

/// Allan deviation as `σ_cc(N) / (√2·N·T₀)`.
pub fn adev_from_cc<S: Spectrum + ?Sized>(
    s: &S,
    n: f64,
    spec: &IntegrationSpec,
) -> Result<f64> {
    let t0 = 1.0 / s.carrier_hz();
    Ok(cc_rms(s, n, spec)? / (std::f64::consts::SQRT_2 * n * t0))
}

/// Noise shape and parameters for the closed-form limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseShape {
    /// Flat L₀ up to the system bandwidth.
    Flat { level: f64, f_bw_hz: f64 },
    /// `Ls·fs²/f²`
    White { ls: f64, fs_hz: f64 },
    /// `Ls·fs³/f³` cut off at `f_min_hz`
    Flicker { ls: f64, fs_hz: f64, f_min_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedMetric {
    Npaj,
    Adev,
}

/// Closed-form NPAJ (seconds) or ADEV for a single noise shape.
pub fn closed_form(shape: NoiseShape, metric: ClosedMetric, f0: f64, n: f64) -> Result<f64> {
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::arg(format!("carrier {f0} Hz must be > 0")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::arg(format!("averaging length N = {n} must be >= 1")));
    }
    let var = match (shape, metric) {
        (NoiseShape::Flat { level, f_bw_hz }, m) => {
            check_nonneg("flat level", level)?;
            check_positive("system bandwidth", f_bw_hz)?;
            let w = 2.0 * PI * n / f0;
            match m {
                ClosedMetric::Npaj => {
                    level / (PI * PI * f0 * f0 * n * n) * (f_bw_hz - (w * f_bw_hz).sin() / w)
                }
                ClosedMetric::Adev => {
                    let osc = (w * f_bw_hz).sin() - (2.0 * w * f_bw_hz).sin() / 8.0;
                    4.0 * level / (PI * PI * n * n) * (0.375 * f_bw_hz - osc / (2.0 * w))
                }
            }
        }
        (NoiseShape::White { ls, fs_hz }, m) => {
            check_nonneg("white level", ls)?;
            check_positive("sample offset", fs_hz)?;
            let c = ls * fs_hz * fs_hz;
            match m {
                ClosedMetric::Npaj => c / (n * f0.powi(3)),
                ClosedMetric::Adev => c / (n * f0),
            }
        }
        (NoiseShape::Flicker { ls, fs_hz, f_min_hz }, m) => {
            check_nonneg("flicker level", ls)?;
            check_positive("sample offset", fs_hz)?;
            let c = ls * fs_hz.powi(3);
            match m {
                ClosedMetric::Npaj => {
                    check_positive("f_min", f_min_hz)?;
                    let bracket = flicker_bracket(n, f_min_hz, f0);
                    if bracket <= 0.0 {
                        return Err(Error::Domain(format!(
                            "averaging length exceeds f_min validity: N = {n}, f_min = {f_min_hz} Hz \
                             gives log bracket {bracket:.4}"
                        )));
                    }
                    c / f0.powi(4) * bracket
                }
                ClosedMetric::Adev => 4.0 * LN_2 * c / (f0 * f0),
            }
        }
    };
    Ok(var.max(0.0).sqrt())
}

/// `3 − 2γ − 2·ln(2πN·f_min/f₀)`
pub fn flicker_bracket(n: f64, f_min: f64, f0: f64) -> f64 {
    3.0 - 2.0 * EULER_GAMMA - 2.0 * (2.0 * PI * n * f_min / f0).ln()
}

/// Variance ratio of flicker-PN NPAJ to white-PN NPAJ when both asymptotes
/// meet at the corner `f_c`: `(f_c/f₀)·N·[3 − 2γ − 2ln(2πf_min·N/f₀)]`,
/// clamped at zero.
pub fn flicker_white_ratio(f_c: f64, f0: f64, f_min: f64, n: f64) -> Result<f64> {
    if !(0.0 < f_min && f_min < f_c && f_c < f0 && f0.is_finite()) {
        return Err(Error::arg(format!(
            "need 0 < f_min ({f_min}) < f_c ({f_c}) < f0 ({f0})"
        )));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::arg(format!("averaging length N = {n} must be >= 1")));
    }
    Ok((f_c / f0 * n * flicker_bracket(n, f_min, f0)).max(0.0))
}

/// Smallest N ≥ 1 where [`flicker_white_ratio`] reaches 1, searched up to the
/// ratio's peak. `None` if the ratio never reaches 1.
pub fn flicker_white_crossover(f_c: f64, f0: f64, f_min: f64) -> Result<Option<f64>> {
    let ratio = |n: f64| flicker_white_ratio(f_c, f0, f_min, n);
    if ratio(1.0)? >= 1.0 {
        return Ok(Some(1.0));
    }
    // d/dN [N·B(N)] = B(N) − 2 vanishes here.
    let n_peak = f0 / (2.0 * PI * f_min) * ((1.0 - 2.0 * EULER_GAMMA) / 2.0).exp();
    if n_peak <= 1.0 || ratio(n_peak)? < 1.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, n_peak.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid.exp())? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(Some((0.5 * (lo + hi)).exp()))
}

/// Averaging length beyond which flicker noise stops averaging down:
/// `ln2·f₀/(4·f_c)`, rounded up.
pub fn critical_periods(f0: f64, f_c: f64) -> Result<u64> {
    if !(0.0 < f_c && f_c < f0 && f0.is_finite()) {
        return Err(Error::arg(format!("need 0 < f_c ({f_c}) < f0 ({f0})")));
    }
    let x = LN_2 * f0 / (4.0 * f_c);
    // Absorb rounding so exact integers are not bumped up.
    Ok((x * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JitterKind {
    Npj,
    Npaj,
    Cc,
}

/// RMS jitter (seconds) against averaging length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterCurve {
    pub carrier_hz: f64,
    pub n_values: Vec<f64>,
    pub sigma_s: Vec<f64>,
    pub kind: JitterKind,
}

/// Allan deviation against averaging length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdevCurve {
    pub carrier_hz: f64,
    pub n_values: Vec<f64>,
    pub sigma_y: Vec<f64>,
    pub tau_s: Vec<f64>,
}

impl AdevCurve {
    pub fn new(carrier_hz: f64, n_values: Vec<f64>, sigma_y: Vec<f64>) -> Self {
        let tau_s = n_values.iter().map(|n| n / carrier_hz).collect();
        Self {
            carrier_hz,
            n_values,
            sigma_y,
            tau_s,
        }
    }

    /// Minimum deviation and the N where it occurs.
    pub fn minimum(&self) -> Option<(f64, f64)> {
        self.n_values
            .iter()
            .zip(&self.sigma_y)
            .map(|(&n, &s)| (n, s))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Npj,
    Npaj,
    Cc,
    Adev,
    AdevFromCc,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npj" => Ok(Metric::Npj),
            "npaj" => Ok(Metric::Npaj),
            "cc" => Ok(Metric::Cc),
            "adev" => Ok(Metric::Adev),
            "adev_from_cc" | "adev-cc" => Ok(Metric::AdevFromCc),
            other => Err(Error::arg(format!("unknown metric `{other}`"))),
        }
    }
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Npj => "npj",
            Metric::Npaj => "npaj",
            Metric::Cc => "cc",
            Metric::Adev => "adev",
            Metric::AdevFromCc => "adev_from_cc",
        }
    }

    pub fn eval<S: Spectrum + ?Sized>(self, s: &S, n: f64, spec: &IntegrationSpec) -> Result<f64> {
        match self {
            Metric::Npj => npj_rms(s, n, spec),
            Metric::Npaj => npaj_rms(s, n, spec),
            Metric::Cc => cc_rms(s, n, spec),
            Metric::Adev => adev(s, n, spec),
            Metric::AdevFromCc => adev_from_cc(s, n, spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Jitter(JitterCurve),
    Adev(AdevCurve),
}

impl Curve {
    pub fn n_values(&self) -> &[f64] {
        match self {
            Curve::Jitter(c) => &c.n_values,
            Curve::Adev(c) => &c.n_values,
        }
    }

    pub fn sigma(&self) -> &[f64] {
        match self {
            Curve::Jitter(c) => &c.sigma_s,
            Curve::Adev(c) => &c.sigma_y,
        }
    }

    pub fn carrier_hz(&self) -> f64 {
        match self {
            Curve::Jitter(c) => c.carrier_hz,
            Curve::Adev(c) => c.carrier_hz,
        }
    }

    /// CSV with header `n,tau_s,sigma`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let f0 = self.carrier_hz();
        let mut out = String::from("n,tau_s,sigma\n");
        for (&n, &s) in self.n_values().iter().zip(self.sigma()) {
            out.push_str(&format!("{:.11e},{:.11e},{:.11e}\n", n, n / f0, s));
        }
        out
    }
}

/// Rows of a curve CSV as written by [`Curve::to_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub n: Vec<f64>,
    pub tau_s: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn parse_curve_csv(text: &str) -> Result<CurveTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty curve CSV".into()))?;
    if header.trim() != "n,tau_s,sigma" {
        return Err(Error::Parse(format!("unexpected curve CSV header `{header}`")));
    }
    let mut t = CurveTable {
        n: Vec::new(),
        tau_s: Vec::new(),
        sigma: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("curve CSV row {}: {e}", i + 2)))?;
        if cols.len() != 3 {
            return Err(Error::Parse(format!("curve CSV row {} needs 3 columns", i + 2)));
        }
        t.n.push(cols[0]);
        t.tau_s.push(cols[1]);
        t.sigma.push(cols[2]);
    }
    if t.n.is_empty() {
        return Err(Error::Parse("curve CSV has no rows".into()));
    }
    Ok(t)
}

/// Evaluate `metric` at every N. Points are computed in parallel; output
/// order follows `n_list`.
pub fn sweep<S: Spectrum + ?Sized>(
    s: &S,
    n_list: &[f64],
    metric: Metric,
    spec: &IntegrationSpec,
) -> Result<Curve> {
    if n_list.is_empty() {
        return Err(Error::arg("sweep needs at least one N"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("sweep N values must be strictly increasing"));
    }
    let sigma = n_list
        .par_iter()
        .map(|&n| metric.eval(s, n, spec))
        .collect::<Result<Vec<f64>>>()?;
    let f0 = s.carrier_hz();
    let n_values = n_list.to_vec();
    Ok(match metric {
        Metric::Adev | Metric::AdevFromCc => Curve::Adev(AdevCurve::new(f0, n_values, sigma)),
        Metric::Npj | Metric::Npaj | Metric::Cc => Curve::Jitter(JitterCurve {
            carrier_hz: f0,
            n_values,
            sigma_s: sigma,
            kind: match metric {
                Metric::Npj => JitterKind::Npj,
                Metric::Npaj => JitterKind::Npaj,
                _ => JitterKind::Cc,
            },
        }),
    })
}

/// Whole-number averaging lengths, log-spaced from `n_min` to `n_max`.
pub fn log_spaced_periods(n_min: f64, n_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(n_min >= 1.0 && n_max >= n_min && n_max.is_finite()) || per_decade == 0 {
        return Err(Error::arg(format!(
            "invalid N range [{n_min}, {n_max}] with {per_decade} points/decade"
        )));
    }
    let steps = ((n_max / n_min).log10() * per_decade as f64).ceil() as usize;
    let mut out: Vec<f64> = (0..=steps)
        .map(|k| (n_min * 10f64.powf(k as f64 / per_decade as f64)).min(n_max).round())
        .collect();
    out.dedup();
    Ok(out)
}

fn check_nonneg(what: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} {x} must be >= 0")))
    }
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} {x} must be > 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pn_profile::{PnProfile, PowerLawTerm};
    use approx::assert_relative_eq;

    struct Zero;
    impl Spectrum for Zero {
        fn carrier_hz(&self) -> f64 {
            1e9
        }
        fn f_min_hz(&self) -> f64 {
            1.0
        }
        fn f_max_hz(&self) -> f64 {
            1e8
        }
        fn density(&self, _f: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn zero_noise_gives_zero() {
        let spec = IntegrationSpec::for_spectrum(&Zero);
        assert_eq!(npj_rms(&Zero, 1.0, &spec).unwrap(), 0.0);
        assert_eq!(adev(&Zero, 17.0, &spec).unwrap(), 0.0);
        assert_eq!(adev_from_cc(&Zero, 3.0, &spec).unwrap(), 0.0);
    }

    #[test]
    fn n_below_one_rejected() {
        let spec = IntegrationSpec::for_spectrum(&Zero);
        assert!(matches!(npj_rms(&Zero, 0.5, &spec), Err(Error::Argument(_))));
    }

    #[test]
    fn spec_validation() {
        let mut spec = IntegrationSpec::new(1.0, 1e6);
        spec.points_per_decade = 8;
        assert!(spec.validate().is_err());
        assert!(IntegrationSpec::new(1e6, 1.0).validate().is_err());
        assert!(IntegrationSpec::new(0.0, 1.0).validate().is_err());
    }

    #[test]
    fn window_outside_profile_rejected() {
        let p = PnProfile::from_power_law(1e9, vec![PowerLawTerm::new(2, 1.0)], 1.0, 1e8).unwrap();
        let spec = IntegrationSpec::new(0.1, 1e8);
        assert!(matches!(adev(&p, 1.0, &spec), Err(Error::Range { .. })));
    }

    #[test]
    fn npaj_n1_equals_npj() {
        let p = PnProfile::from_power_law(1e9, vec![PowerLawTerm::new(2, 100.0)], 1.0, 1e11).unwrap();
        let spec = IntegrationSpec::for_spectrum(&p);
        assert_eq!(npaj_rms(&p, 1.0, &spec).unwrap(), npj_rms(&p, 1.0, &spec).unwrap());
    }

    #[test]
    fn closed_form_arithmetic() {
        let fl = closed_form(
            NoiseShape::Flicker { ls: 1e-10, fs_hz: 1e3, f_min_hz: 1e-3 },
            ClosedMetric::Adev,
            1e6,
            42.0,
        )
        .unwrap();
        assert_relative_eq!(fl, 5.266e-7, max_relative = 1e-3);
        let wh = closed_form(NoiseShape::White { ls: 1e-10, fs_hz: 1e6 }, ClosedMetric::Adev, 1e9, 1e4)
            .unwrap();
        assert_relative_eq!(wh, 3.16228e-6, max_relative = 1e-5);
        let flat = closed_form(NoiseShape::Flat { level: 0.0, f_bw_hz: 1e8 }, ClosedMetric::Npaj, 1e9, 5.0)
            .unwrap();
        assert_eq!(flat, 0.0);
    }

    #[test]
    fn flicker_bracket_domain_error() {
        let r = closed_form(
            NoiseShape::Flicker { ls: 1e-10, fs_hz: 1e3, f_min_hz: 1e3 },
            ClosedMetric::Npaj,
            1e6,
            1e4,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn critical_periods_values() {
        assert_eq!(critical_periods(2.4e9, 5e5).unwrap(), 832);
        assert_eq!(critical_periods(2.4e9, 5e4).unwrap(), 8318);
        assert_eq!(critical_periods(1e9, 1e9 * LN_2 / 4.0).unwrap(), 1);
        assert!(critical_periods(1e6, 2e6).is_err());
        assert!(critical_periods(1e6, 0.0).is_err());
    }

    #[test]
    fn ratio_orders_and_clamp() {
        assert!(flicker_white_ratio(1e3, 1e9, 1e-3, 1.0).unwrap() < 1e-4);
        assert!(flicker_white_ratio(1e3, 1e9, 2e3, 1.0).is_err());
        assert!(flicker_white_ratio(1e3, 1e9, 1e-3, 0.5).is_err());
        // Far beyond the f_min validity the bracket goes negative.
        assert_eq!(flicker_white_ratio(1e5, 1e9, 1e4, 1e6).unwrap(), 0.0);
    }

    #[test]
    fn crossover_solves_ratio() {
        let n = flicker_white_crossover(1e5, 1e9, 1e-3).unwrap().unwrap();
        assert_relative_eq!(flicker_white_ratio(1e5, 1e9, 1e-3, n).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sweep_checks_order() {
        assert!(sweep(&Zero, &[], Metric::Adev, &IntegrationSpec::for_spectrum(&Zero)).is_err());
        assert!(sweep(&Zero, &[2.0, 1.0], Metric::Adev, &IntegrationSpec::for_spectrum(&Zero)).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let c = Curve::Adev(AdevCurve::new(1e9, vec![1.0, 10.0], vec![1e-6, 3.3e-7]));
        let csv = c.to_csv();
        assert!(csv.starts_with("n,tau_s,sigma\n1.00000000000e0,1.00000000000e-9,"));
        let t = parse_curve_csv(&csv).unwrap();
        assert_eq!(t.sigma, vec![1e-6, 3.3e-7]);
        assert!(parse_curve_csv("").is_err());
        assert!(parse_curve_csv("n,tau_s,sigma\n").is_err());
        assert!(parse_curve_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn log_spacing() {
        let n = log_spaced_periods(1.0, 1000.0, 3).unwrap();
        assert_eq!(n, vec![1.0, 2.0, 5.0, 10.0, 22.0, 46.0, 100.0, 215.0, 464.0, 1000.0]);
    }
}
