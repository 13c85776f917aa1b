//! Panel-wise Gauss–Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 16;

/// 15-point Kronrod estimate and |K15 − G7| on `[a, b]`.
pub(crate) fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Panel on a linear or logarithmic integration variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub a: f64,
    pub b: f64,
    pub log: bool,
}

impl Panel {
    fn eval<F: Fn(f64) -> f64>(&self, f: &F) -> (f64, f64) {
        if self.log {
            gk15(&|u: f64| {
                let x = u.exp();
                f(x) * x
            }, self.a.ln(), self.b.ln())
        } else {
            gk15(f, self.a, self.b)
        }
    }

    fn split(&self) -> (Panel, Panel) {
        let m = if self.log {
            (self.a * self.b).sqrt()
        } else {
            0.5 * (self.a + self.b)
        };
        (
            Panel { b: m, ..*self },
            Panel { a: m, ..*self },
        )
    }
}

fn refine<F: Fn(f64) -> f64>(f: &F, p: Panel, est: (f64, f64), tol: f64, depth: u32) -> f64 {
    if est.1 <= tol || depth >= MAX_DEPTH {
        return est.0;
    }
    let (l, r) = p.split();
    let el = l.eval(f);
    let er = r.eval(f);
    refine(f, l, el, tol * std::f64::consts::FRAC_1_SQRT_2, depth + 1)
        + refine(f, r, er, tol * std::f64::consts::FRAC_1_SQRT_2, depth + 1)
}

/// Integrate `f` over the panels. Panels whose Kronrod/Gauss disagreement
/// exceeds `rel_tol` of the first-pass total are bisected.
///
/// Returns `Err((a, b))` for the first panel producing a non-finite value.
pub(crate) fn integrate_panels<F: Fn(f64) -> f64>(
    f: &F,
    panels: &[Panel],
    rel_tol: f64,
) -> Result<f64, (f64, f64)> {
    let first: Vec<(f64, f64)> = panels.iter().map(|p| p.eval(f)).collect();
    if let Some((p, _)) = panels
        .iter()
        .zip(&first)
        .find(|(_, e)| !(e.0.is_finite() && e.1.is_finite()))
    {
        return Err((p.a, p.b));
    }
    let scale: f64 = first.iter().map(|e| e.0.abs()).sum();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = rel_tol * scale;
    let total = panels
        .iter()
        .zip(first)
        .map(|(p, e)| refine(f, *p, e, tol, 0))
        .sum::<f64>();
    if total.is_finite() {
        Ok(total)
    } else {
        Err((panels[0].a, panels[panels.len() - 1].b))
    }
}
