//! The Bargmann transform
//! `Bf(z) = 2^{1/4} ∫ f(t) e^{2πtz - πt² - (π/2)z²} dt`, truncated Fock norms,
//! and the pointwise growth bound.
//!
//! Entire functions are carried as complex logarithms: `re` is `log|F|`, `im`
//! an argument. Only ratios are ever exponentiated.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{log_inner_product, GaussianFn};
use crate::numerics::{
    fit_line, integrate_annulus_log, integrate_real_line_with_breaks, AngularSymmetry,
    DecayEnvelope, QuadratureSpec,
};

const LN_2_QUARTER: f64 = 0.25 * LN_2;

/// `log(Σ e^{l_k})` for complex logs, shifted by the largest real part.
pub fn log_sum_exp_complex(logs: &[Complex64]) -> Complex64 {
    let m = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    let s: Complex64 = logs
        .iter()
        .filter(|l| l.re > f64::NEG_INFINITY)
        .map(|l| Complex64::new(l.re - m, l.im).exp())
        .sum();
    if s.re == 0.0 && s.im == 0.0 {
        return Complex64::new(f64::NEG_INFINITY, 0.0);
    }
    Complex64::new(m + s.norm().ln(), s.arg())
}

/// Order and type, `|F(z)| ≤ C e^{τ|z|^ρ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Growth {
    pub order: f64,
    pub type_: f64,
}

/// What an [`EntireFnHandle`] evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    /// Closed-form transform of a Gaussian.
    GaussianTransform(GaussianFn),
    Constant(f64),
    /// `e^{c z²}`.
    ExpQuadratic(f64),
    /// Transform of a real function by quadrature.
    Quadrature(String),
    /// Anything else, e.g. a canonical product.
    Named(String),
}

type LogFn = dyn Fn(Complex64) -> Result<Complex64> + Send + Sync;

/// An entire function evaluated through its complex logarithm.
#[derive(Clone)]
pub struct EntireFnHandle {
    descriptor: Descriptor,
    growth: Option<Growth>,
    symmetry: AngularSymmetry,
    log_eval: Arc<LogFn>,
}

impl fmt::Debug for EntireFnHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntireFnHandle")
            .field("descriptor", &self.descriptor)
            .field("growth", &self.growth)
            .field("symmetry", &self.symmetry)
            .finish_non_exhaustive()
    }
}

impl EntireFnHandle {
    /// Wraps a log-evaluator. `symmetry` must describe `|F|`.
    pub fn from_log_fn<F>(
        descriptor: Descriptor,
        growth: Option<Growth>,
        symmetry: AngularSymmetry,
        f: F,
    ) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        EntireFnHandle {
            descriptor,
            growth,
            symmetry,
            log_eval: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("constant must be positive"));
        }
        let l = c.ln();
        Ok(Self::from_log_fn(
            Descriptor::Constant(c),
            Some(Growth {
                order: 0.0,
                type_: 0.0,
            }),
            AngularSymmetry::Dihedral4,
            move |_| Ok(Complex64::new(l, 0.0)),
        ))
    }

    /// `e^{c z²}`, order 2 and type `|c|`.
    pub fn exp_quadratic(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("coefficient must be finite"));
        }
        Ok(Self::from_log_fn(
            Descriptor::ExpQuadratic(c),
            Some(Growth {
                order: 2.0,
                type_: c.abs(),
            }),
            AngularSymmetry::None,
            move |z| Ok(c * z * z),
        ))
    }

    /// Closed-form `B[A e^{-aπ(t-μ)²}]`.
    pub fn gaussian_transform(g: GaussianFn) -> Self {
        let symmetry = if g.center == 0.0 && g.width == 1.0 {
            AngularSymmetry::Dihedral4
        } else {
            AngularSymmetry::None
        };
        let growth = Growth {
            order: 2.0,
            type_: PI * (0.5 - 1.0 / (g.width + 1.0)).abs(),
        };
        Self::from_log_fn(
            Descriptor::GaussianTransform(g),
            Some(growth),
            symmetry,
            move |z| Ok(log_bargmann_gaussian(&g, z)),
        )
    }

    /// Quadrature-backed `Bf`.
    pub fn quadrature(f: RealFn, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        f.sup_bound()?;
        let name = format!("{f:?}");
        Ok(Self::from_log_fn(
            Descriptor::Quadrature(name),
            Some(Growth {
                order: 2.0,
                type_: PI / 2.0,
            }),
            AngularSymmetry::None,
            move |z| bargmann_numeric_log(&f, z, &spec),
        ))
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    pub fn symmetry(&self) -> AngularSymmetry {
        self.symmetry
    }

    /// `log F(z)`; `re = -∞` at a zero.
    pub fn eval_log(&self, z: Complex64) -> Result<Complex64> {
        (self.log_eval)(z)
    }

    pub fn log_abs(&self, z: Complex64) -> Result<f64> {
        self.eval_log(z).map(|l| l.re)
    }

    /// `F(z)`; overflows to infinity where `|F|` exceeds the `f64` range.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let l = self.eval_log(z)?;
        if l.re == f64::NEG_INFINITY {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(l.exp())
    }
}

/// `log B[A e^{-aπ(t-μ)²}](z)
///   = log(2^{1/4}A) - ½log(a+1) + π(aμ+z)²/(a+1) - aπμ² - (π/2)z²`.
pub fn log_bargmann_gaussian(g: &GaussianFn, z: Complex64) -> Complex64 {
    let a = g.width;
    let mu = g.center;
    let w = a * mu + z;
    let constant = LN_2_QUARTER + g.amplitude.ln() - 0.5 * (a + 1.0).ln() - a * PI * mu * mu;
    constant + PI * w * w / (a + 1.0) - 0.5 * PI * z * z
}

/// `B[φ(·-μ)](z) = 2^{-1/4} e^{-πμ²/2} e^{πμz}`.
pub fn bargmann_gaussian_translate(mu: f64) -> EntireFnHandle {
    let c = -LN_2_QUARTER - PI * mu * mu / 2.0;
    let g = GaussianFn::translate(mu);
    let symmetry = if mu == 0.0 {
        AngularSymmetry::Dihedral4
    } else {
        AngularSymmetry::None
    };
    EntireFnHandle::from_log_fn(
        Descriptor::GaussianTransform(g),
        Some(Growth {
            order: 1.0,
            type_: PI * mu.abs(),
        }),
        symmetry,
        move |z| Ok(c + PI * mu * z),
    )
}

/// Real functions the transform is applied to.
#[derive(Debug, Clone, PartialEq)]
pub enum RealFn {
    Gaussian(GaussianFn),
    /// Indicator of `[a, b]`.
    Indicator {
        a: f64,
        b: f64,
    },
    /// Piecewise-linear interpolant of `values` at `t0 + k·dt`, zero outside.
    Sampled {
        t0: f64,
        dt: f64,
        values: Vec<f64>,
    },
    Combination(Vec<(f64, RealFn)>),
}

impl RealFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RealFn::Gaussian(g) => g.evaluate(t),
            RealFn::Indicator { a, b } => {
                if *a <= t && t <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            RealFn::Sampled { t0, dt, values } => {
                let s = (t - t0) / dt;
                if s < 0.0 || values.is_empty() {
                    return 0.0;
                }
                let k = s.floor() as usize;
                if k + 1 >= values.len() {
                    return if k + 1 == values.len() && s == k as f64 {
                        values[k]
                    } else {
                        0.0
                    };
                }
                let frac = s - k as f64;
                values[k] * (1.0 - frac) + values[k + 1] * frac
            }
            RealFn::Combination(terms) => terms.iter().map(|(c, f)| c * f.eval(t)).sum(),
        }
    }

    /// `sup |f|`.
    pub fn sup_bound(&self) -> Result<f64> {
        match self {
            RealFn::Gaussian(g) => Ok(g.amplitude),
            RealFn::Indicator { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::invalid(format!(
                        "indicator needs a < b, got [{a}, {b}]"
                    )));
                }
                Ok(1.0)
            }
            RealFn::Sampled { t0, dt, values } => {
                if !(t0.is_finite() && *dt > 0.0 && dt.is_finite()) || values.len() < 2 {
                    return Err(Error::invalid(
                        "sampled function needs dt > 0 and at least two values",
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("sampled values must be finite"));
                }
                Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            }
            RealFn::Combination(terms) => {
                let mut s = 0.0;
                for (c, f) in terms {
                    if !c.is_finite() {
                        return Err(Error::invalid("combination coefficients must be finite"));
                    }
                    s += c.abs() * f.sup_bound()?;
                }
                Ok(s)
            }
        }
    }

    /// Jump and kink locations the quadrature should respect.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RealFn::Gaussian(_) => vec![],
            RealFn::Indicator { a, b } => vec![*a, *b],
            RealFn::Sampled { t0, dt, values } => vec![*t0, t0 + dt * (values.len() - 1) as f64],
            RealFn::Combination(terms) => terms.iter().flat_map(|(_, f)| f.breakpoints()).collect(),
        }
    }

    /// All terms Gaussian, so closed forms apply.
    fn gaussian_terms(&self) -> Option<Vec<(f64, GaussianFn)>> {
        match self {
            RealFn::Gaussian(g) => Some(vec![(1.0, *g)]),
            RealFn::Combination(terms) => {
                let mut out = Vec::new();
                for (c, f) in terms {
                    for (d, g) in f.gaussian_terms()? {
                        out.push((c * d, g));
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// `‖f‖_p` for `p ∈ {1, 2, ∞}` where a closed form exists.
    pub fn norm_p(&self, p: f64) -> Result<f64> {
        if !(p == 1.0 || p == 2.0 || p == f64::INFINITY) {
            return Err(Error::invalid(format!("p must be 1, 2 or ∞, got {p}")));
        }
        match self {
            RealFn::Gaussian(g) => g.norm_p(p),
            RealFn::Indicator { a, b } => {
                self.sup_bound()?;
                Ok(if p == f64::INFINITY {
                    1.0
                } else {
                    (b - a).powf(1.0 / p)
                })
            }
            _ => {
                if p == 2.0 {
                    if let Some(terms) = self.gaussian_terms() {
                        let mut s = 0.0;
                        for (c, g) in &terms {
                            for (d, h) in &terms {
                                s += c * d * log_inner_product(g, h).exp();
                            }
                        }
                        return Ok(s.max(0.0).sqrt());
                    }
                }
                Err(Error::invalid(format!(
                    "no closed-form L^{p} norm for {self:?}"
                )))
            }
        }
    }
}

/// `log Bf(z)` by quadrature of the stable form
/// `Bf(z) = 2^{1/4} e^{(π/2)|z|²} ∫ f(t) e^{-π(t-x)²} e^{iπy(2t-x)} dt`.
pub fn bargmann_numeric_log(f: &RealFn, z: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
    let sup = f.sup_bound()?;
    let (x, y) = (z.re, z.im);
    let weight = |t: f64| {
        let d = t - x;
        f.eval(t) * (-PI * d * d).exp()
    };
    let env = DecayEnvelope::new(sup, PI, x, 0.0)?;
    let breaks = f.breakpoints();
    let re = integrate_real_line_with_breaks(
        |t| weight(t) * (PI * y * (2.0 * t - x)).cos(),
        &env,
        &breaks,
        spec,
    )?;
    let im = if y == 0.0 {
        0.0
    } else {
        integrate_real_line_with_breaks(
            |t| weight(t) * (PI * y * (2.0 * t - x)).sin(),
            &env,
            &breaks,
            spec,
        )?
    };
    let integral = Complex64::new(re, im);
    if re == 0.0 && im == 0.0 {
        return Ok(Complex64::new(f64::NEG_INFINITY, 0.0));
    }
    Ok(Complex64::new(
        LN_2_QUARTER + 0.5 * PI * z.norm_sqr() + integral.norm().ln(),
        integral.arg(),
    ))
}

/// `Bf(z)` by quadrature.
pub fn bargmann_numeric(f: &RealFn, z: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
    let l = bargmann_numeric_log(f, z, spec)?;
    Ok(if l.re == f64::NEG_INFINITY {
        Complex64::new(0.0, 0.0)
    } else {
        l.exp()
    })
}

/// `log Bf(z)`, closed form when every term is Gaussian, quadrature otherwise.
pub fn bargmann_log(f: &RealFn, z: Complex64, spec: &QuadratureSpec) -> Result<Complex64> {
    match f.gaussian_terms() {
        Some(terms) => {
            let mut logs = Vec::with_capacity(terms.len());
            for (c, g) in terms {
                if c == 0.0 {
                    continue;
                }
                let l = log_bargmann_gaussian(&g, z);
                let phase = if c < 0.0 { PI } else { 0.0 };
                logs.push(Complex64::new(l.re + c.abs().ln(), l.im + phase));
            }
            Ok(log_sum_exp_complex(&logs))
        }
        None => bargmann_numeric_log(f, z, spec),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub grid: Vec<f64>,
    /// `log Bf(x)` from the closed form.
    pub lhs_closed: Vec<f64>,
    /// `log Bf(x)` by quadrature.
    pub lhs_quadrature: Vec<f64>,
    /// `log(2^{1/4} e^{(π/2)x²} ⟨f, φ_x⟩)`.
    pub rhs: Vec<f64>,
    pub max_relative_deviation: f64,
}

/// Checks `Bf(x) = 2^{1/4} e^{(π/2)x²} ⟨f, φ_x⟩` on a real grid for a Gaussian `f`.
pub fn real_line_identity_check(f: &GaussianFn, grid: &[f64]) -> Result<IdentityReport> {
    if grid.is_empty() {
        return Err(Error::invalid("identity check needs a nonempty grid"));
    }
    let spec = QuadratureSpec::relative(1e-13);
    let real = RealFn::Gaussian(*f);
    let mut rep = IdentityReport {
        grid: grid.to_vec(),
        lhs_closed: vec![],
        lhs_quadrature: vec![],
        rhs: vec![],
        max_relative_deviation: 0.0,
    };
    for &x in grid {
        let z = Complex64::new(x, 0.0);
        let closed = log_bargmann_gaussian(f, z).re;
        let quad = bargmann_numeric_log(&real, z, &spec)?.re;
        let rhs = LN_2_QUARTER + 0.5 * PI * x * x + log_inner_product(f, &GaussianFn::translate(x));
        let dev = (closed - rhs)
            .exp_m1()
            .abs()
            .max((quad - rhs).exp_m1().abs());
        rep.max_relative_deviation = rep.max_relative_deviation.max(dev);
        rep.lhs_closed.push(closed);
        rep.lhs_quadrature.push(quad);
        rep.rhs.push(rhs);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendClass {
    Converging,
    Diverging,
    Inconclusive,
}

/// Truncated Fock norms `‖F‖²_{F,R} = ∫_{|z|<R} |F|² e^{-π|z|²} dm` on a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockNormTrend {
    pub radii: Vec<f64>,
    pub log_norms: Vec<f64>,
    /// `exp(log_norms)`; infinite where the norm exceeds the `f64` range.
    pub norms: Vec<f64>,
    /// Logs of `‖F‖²_{R_{i+1}} - ‖F‖²_{R_i}`, integrated directly over annuli.
    pub log_increments: Vec<f64>,
    /// Consecutive increment ratios.
    pub ratios: Vec<f64>,
    pub classification: TrendClass,
    /// Slope of `log increment` against `R_{i+1}²`.
    pub growth_exponent: Option<f64>,
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Classifies an increment sequence: every ratio ≤ ½ → converging; every ratio
/// ≥ 2, or no increment dropping below half the first → diverging.
pub fn classify_increments(log_increments: &[f64]) -> (Vec<f64>, TrendClass) {
    let ratios: Vec<f64> = log_increments
        .windows(2)
        .map(|w| {
            if w[1] == f64::NEG_INFINITY {
                0.0
            } else {
                (w[1] - w[0]).exp()
            }
        })
        .collect();
    if ratios.is_empty() {
        return (ratios, TrendClass::Inconclusive);
    }
    let half = 0.5f64.ln();
    let class = if ratios.iter().all(|r| *r <= 0.5) {
        TrendClass::Converging
    } else if ratios.iter().all(|r| *r >= 2.0)
        || log_increments[1..]
            .iter()
            .all(|l| *l - log_increments[0] >= half)
    {
        TrendClass::Diverging
    } else {
        TrendClass::Inconclusive
    };
    (ratios, class)
}

pub fn fock_norm_trend(
    f: &EntireFnHandle,
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<FockNormTrend> {
    if radii.len() < 3 {
        return Err(Error::invalid("radius schedule needs at least 3 radii"));
    }
    if radii[0] <= 0.0
        || radii.windows(2).any(|w| !(w[1] > w[0]))
        || !radii.iter().all(|r| r.is_finite())
    {
        return Err(Error::invalid(
            "radius schedule must be positive and strictly increasing",
        ));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |z: Complex64| match f.log_abs(z) {
        Ok(l) => 2.0 * l - PI * z.norm_sqr(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let mut log_pieces = Vec::with_capacity(radii.len());
    let mut inner = 0.0;
    for &r in radii {
        log_pieces.push(integrate_annulus_log(
            integrand,
            inner,
            r,
            f.symmetry(),
            spec,
        )?);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        inner = r;
    }
    if log_pieces.iter().any(|l| l.is_nan()) {
        return Err(Error::Numeric("Fock norm integral is not a number".into()));
    }
    let mut log_norms = Vec::with_capacity(radii.len());
    let mut acc = f64::NEG_INFINITY;
    for l in &log_pieces {
        acc = log_add(acc, *l);
        log_norms.push(acc);
    }
    let log_increments = log_pieces[1..].to_vec();
    let (ratios, classification) = classify_increments(&log_increments);
    let finite: Vec<(f64, f64)> = radii[1..]
        .iter()
        .zip(&log_increments)
        .filter(|(_, l)| l.is_finite())
        .map(|(r, l)| (r * r, *l))
        .collect();
    let growth_exponent = if finite.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = finite.into_iter().unzip();
        fit_line(&xs, &ys).map(|fit| fit.slope)
    } else {
        None
    };
    Ok(FockNormTrend {
        radii: radii.to_vec(),
        norms: log_norms.iter().map(|l| l.exp()).collect(),
        log_norms,
        log_increments,
        ratios,
        classification,
        growth_exponent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthBoundReport {
    pub p: f64,
    pub q: f64,
    pub norm_f: f64,
    pub norm_phi_q: f64,
    /// `2^{1/4}‖f‖_p‖φ‖_q`.
    pub bound_constant: f64,
    /// `‖f‖_p‖φ‖_q`, the bound without the transform's prefactor.
    pub printed_constant: f64,
    /// `max |Bf(z)| e^{-(π/2)|z|²} / bound_constant`.
    pub max_ratio: f64,
    pub max_ratio_printed: f64,
    pub argmax: (f64, f64),
    pub holds: bool,
    pub printed_holds: bool,
}

/// `‖φ‖_q` with `q` conjugate to `p`.
fn phi_dual_norm(p: f64) -> Result<(f64, f64)> {
    if p == 1.0 {
        Ok((f64::INFINITY, 1.0))
    } else if p == 2.0 {
        Ok((2.0, 2f64.powf(-0.25)))
    } else if p == f64::INFINITY {
        Ok((1.0, 1.0))
    } else {
        Err(Error::invalid(format!("p must be 1, 2 or ∞, got {p}")))
    }
}

/// Checks `|Bf(z)| ≤ 2^{1/4}‖f‖_p‖φ‖_q e^{(π/2)|z|²}` on a grid.
pub fn growth_bound_check(
    f: &RealFn,
    p: f64,
    grid: &[Complex64],
    spec: &QuadratureSpec,
) -> Result<GrowthBoundReport> {
    if grid.is_empty() {
        return Err(Error::invalid("growth check needs a nonempty grid"));
    }
    let (q, norm_phi_q) = phi_dual_norm(p)?;
    let norm_f = f.norm_p(p)?;
    let printed = norm_f * norm_phi_q;
    let bound = 2f64.powf(0.25) * printed;
    let mut best = f64::NEG_INFINITY;
    let mut argmax = (grid[0].re, grid[0].im);
    for &z in grid {
        let l = bargmann_log(f, z, spec)?.re - 0.5 * PI * z.norm_sqr();
        if l > best {
            best = l;
            argmax = (z.re, z.im);
        }
    }
    let max_ratio = (best - bound.ln()).exp();
    let max_ratio_printed = (best - printed.ln()).exp();
    Ok(GrowthBoundReport {
        p,
        q,
        norm_f,
        norm_phi_q,
        bound_constant: bound,
        printed_constant: printed,
        max_ratio,
        max_ratio_printed,
        argmax,
        holds: max_ratio <= 1.0 + 1e-12,
        printed_holds: max_ratio_printed <= 1.0 + 1e-12,
    })
}
