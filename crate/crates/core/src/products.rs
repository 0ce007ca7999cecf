//! Weierstrass canonical products: the quartic product `Π(1 - z⁴/λ⁴)` over a
//! real set and the genus-2 product over a complex zero set, evaluated as
//! log-magnitudes, with indicator estimation and the Fock-membership probe.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bargmann::{
    fock_norm_trend, Descriptor, EntireFnHandle, FockNormTrend, Growth, TrendClass,
};
use crate::error::{Error, Result};
use crate::lambda_sets::{
    generate_sqrt_set, union_with_rotation, ComplexZeroSet, DiscreteSet, Generator, SignPattern,
};
use crate::numerics::{fit_line, fmt_sig17, AngularSymmetry, NeumaierSum, QuadratureSpec};

/// Default zero-exclusion distance for indicator sampling.
pub const DEFAULT_EXCLUSION: f64 = 0.1;
/// Default number of radii sampled per indicator window.
pub const DEFAULT_INDICATOR_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Quartic,
    Genus2,
}

/// How the zeros beyond the truncation are accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailPolicy {
    /// Report a bound on the omitted factors only.
    BoundOnly,
    /// Add the leading term of the omitted factors; bound the remainder.
    FirstOrder,
}

#[derive(Debug, Clone)]
enum Zeros {
    Quartic {
        set: DiscreteSet,
        lambda2: Vec<f64>,
        lambda4: Vec<f64>,
        /// `Σ_{tail} λ^{-4}`, `Σ_{tail} λ^{-8}`.
        t4: f64,
        t8: f64,
    },
    Genus2 {
        gamma: ComplexZeroSet,
        inv: Vec<Complex64>,
        /// `Σ_{tail} γ^{-3}`, `Σ_{tail} γ^{-4}`.
        t3: Complex64,
        t4: Complex64,
        /// `Σ_{tail} |γ|^{-3}`, `Σ_{tail} |γ|^{-5}`.
        s3: f64,
        s5: f64,
    },
}

/// A truncated canonical product with its tail accounting.
#[derive(Debug, Clone)]
pub struct CanonicalProduct {
    zeros: Zeros,
    tail: TailPolicy,
    /// Largest modulus the truncation certifies, `|λ_N|/2`; `None` for finite sets.
    valid_radius: Option<f64>,
}

/// `log|Π(z)|` with the bound on what the truncation leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductValue {
    pub log_abs: f64,
    /// Tail contribution already included in `log_abs`.
    pub tail_correction: f64,
    /// `|log|Π_∞(z)| - log_abs| ≤ tail_bound`.
    pub tail_bound: f64,
}

fn has_infinite_tail(set: &DiscreteSet) -> bool {
    matches!(
        set.generator(),
        Generator::SqrtGrid { .. } | Generator::Arithmetic { .. }
    )
}

impl CanonicalProduct {
    /// `Π_{λ∈Λ}(1 - z⁴/λ⁴)`.
    pub fn quartic(set: DiscreteSet, tail: TailPolicy) -> Result<Self> {
        let infinite = has_infinite_tail(&set);
        let (t4, t8) = if infinite {
            let m4 = set
                .tail_moment(4)
                .ok_or_else(|| Error::Numeric("tail moment 4 unavailable".into()))?;
            let m8 = set
                .tail_moment(8)
                .ok_or_else(|| Error::Numeric("tail moment 8 unavailable".into()))?;
            (m4.absolute, m8.absolute)
        } else {
            (0.0, 0.0)
        };
        let lambda2: Vec<f64> = set.points().iter().map(|x| x * x).collect();
        let lambda4 = lambda2.iter().map(|x| x * x).collect();
        let valid_radius = if infinite {
            set.max_modulus().map(|m| m / 2.0)
        } else {
            None
        };
        Ok(CanonicalProduct {
            zeros: Zeros::Quartic {
                set,
                lambda2,
                lambda4,
                t4,
                t8,
            },
            tail,
            valid_radius,
        })
    }

    /// `Π_{γ∈Γ} E₂(z/γ)`, `E₂(w) = (1-w) e^{w + w²/2}`.
    pub fn genus2(gamma: ComplexZeroSet, tail: TailPolicy) -> Result<Self> {
        let infinite = gamma.real_source().map(has_infinite_tail).unwrap_or(false);
        let (t3, t4, s3, s5) = if infinite {
            let need = |k| {
                gamma
                    .tail_moment(k)
                    .ok_or_else(|| Error::Numeric(format!("tail moment {k} unavailable")))
            };
            let (t3, s3) = need(3)?;
            let (t4, _) = need(4)?;
            let (_, s5) = need(5)?;
            (t3, t4, s3, s5)
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0, 0.0)
        };
        let inv = gamma.points().iter().map(|g| g.inv()).collect();
        let valid_radius = if infinite {
            gamma.max_modulus().map(|m| m / 2.0)
        } else {
            None
        };
        Ok(CanonicalProduct {
            zeros: Zeros::Genus2 {
                gamma,
                inv,
                t3,
                t4,
                s3,
                s5,
            },
            tail,
            valid_radius,
        })
    }

    pub fn construction(&self) -> Construction {
        match self.zeros {
            Zeros::Quartic { .. } => Construction::Quartic,
            Zeros::Genus2 { .. } => Construction::Genus2,
        }
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail
    }

    /// Number of factors evaluated.
    pub fn len(&self) -> usize {
        match &self.zeros {
            Zeros::Quartic { lambda4, .. } => lambda4.len(),
            Zeros::Genus2 { inv, .. } => inv.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest `|z|` the truncation supports; `None` when the zero set is finite.
    pub fn valid_radius(&self) -> Option<f64> {
        self.valid_radius
    }

    /// The real set behind the product, if any.
    pub fn real_set(&self) -> Option<&DiscreteSet> {
        match &self.zeros {
            Zeros::Quartic { set, .. } => Some(set),
            Zeros::Genus2 { gamma, .. } => gamma.real_source(),
        }
    }

    /// Density `Δ` in the predicted indicator `πΔ|sin 2θ|`, when the zero set
    /// has that four-ray structure.
    pub fn indicator_density(&self) -> Option<f64> {
        match &self.zeros {
            Zeros::Quartic { set, .. } => {
                let (p, n) = set.generator().nominal_density();
                Some(p + n)
            }
            Zeros::Genus2 { gamma, .. } => {
                if gamma.is_dihedral_symmetric() {
                    gamma
                        .real_source()
                        .map(|s| s.generator().nominal_density().0)
                } else {
                    None
                }
            }
        }
    }

    /// `|Π|` is invariant under `z ↦ iz` and `z ↦ z̄`.
    pub fn is_dihedral_symmetric(&self) -> bool {
        match &self.zeros {
            Zeros::Quartic { .. } => true,
            Zeros::Genus2 { gamma, .. } => gamma.is_dihedral_symmetric(),
        }
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        match self.valid_radius {
            Some(v) if r > v => Err(Error::Truncation(format!(
                "|z| = {r} needs |λ_N| ≥ {}, but the truncation reaches {}{}",
                2.0 * r,
                2.0 * v,
                self.required_n_hint(r)
            ))),
            _ => Ok(()),
        }
    }

    fn required_n_hint(&self, r: f64) -> String {
        match self.real_set().map(|s| s.generator()) {
            Some(Generator::SqrtGrid { delta_per_side, .. }) => {
                format!(" (use N ≥ {})", (4.0 * delta_per_side * r * r).ceil())
            }
            Some(Generator::Arithmetic { step, .. }) => {
                format!(" (use N ≥ {})", (2.0 * r / step).ceil())
            }
            _ => String::new(),
        }
    }

    /// Log-magnitude of the finite product, no tail and no range check.
    pub fn finite_log_abs(&self, z: Complex64) -> f64 {
        match &self.zeros {
            Zeros::Quartic {
                lambda2, lambda4, ..
            } => {
                let z2 = z * z;
                let z4 = z2 * z2;
                let mut acc = NeumaierSum::default();
                for (l2, l4) in lambda2.iter().zip(lambda4) {
                    if z2.im == 0.0 && (z2.re == *l2 || z2.re == -*l2) && z4.re == *l4 {
                        return f64::NEG_INFINITY;
                    }
                    let ur = z4.re / l4;
                    let ui = z4.im / l4;
                    let t = 0.5 * (ur * ur + ui * ui - 2.0 * ur).ln_1p();
                    if t == f64::NEG_INFINITY {
                        return t;
                    }
                    acc.add(t);
                }
                acc.total()
            }
            Zeros::Genus2 { gamma, inv, .. } => {
                let mut acc = NeumaierSum::default();
                for (g, ig) in gamma.points().iter().zip(inv) {
                    if z == *g {
                        return f64::NEG_INFINITY;
                    }
                    let w = z * ig;
                    let (wr, wi) = (w.re, w.im);
                    let log_one_minus = 0.5 * (wr * wr + wi * wi - 2.0 * wr).ln_1p();
                    if log_one_minus == f64::NEG_INFINITY {
                        return log_one_minus;
                    }
                    acc.add(log_one_minus + wr + 0.5 * (wr * wr - wi * wi));
                }
                acc.total()
            }
        }
    }

    fn tail_terms(&self, z: Complex64) -> (f64, f64) {
        let r = z.norm();
        match (&self.zeros, self.tail) {
            (Zeros::Quartic { t4, .. }, TailPolicy::BoundOnly) => (0.0, 2.0 * r.powi(4) * t4),
            (Zeros::Quartic { t4, t8, .. }, TailPolicy::FirstOrder) => {
                let z2 = z * z;
                (-(z2 * z2).re * t4, r.powi(8) * t8)
            }
            (Zeros::Genus2 { s3, .. }, TailPolicy::BoundOnly) => (0.0, 2.0 / 3.0 * r.powi(3) * s3),
            (Zeros::Genus2 { t3, t4, s5, .. }, TailPolicy::FirstOrder) => {
                let z3 = z * z * z;
                let corr = -(z3 * t3).re / 3.0 - (z3 * z * t4).re / 4.0;
                (corr, 0.4 * r.powi(5) * s5)
            }
        }
    }

    /// `log|Π(z)|` with tail accounting; rejects `|z|` beyond `|λ_N|/2`.
    pub fn eval(&self, z: Complex64) -> Result<ProductValue> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid("evaluation point must be finite"));
        }
        self.check_radius(z.norm())?;
        let finite = self.finite_log_abs(z);
        if finite == f64::NEG_INFINITY {
            return Ok(ProductValue {
                log_abs: finite,
                tail_correction: 0.0,
                tail_bound: 0.0,
            });
        }
        let (correction, bound) = self.tail_terms(z);
        Ok(ProductValue {
            log_abs: finite + correction,
            tail_correction: correction,
            tail_bound: bound,
        })
    }

    /// The product as an entire-function handle. Only `|Π|` is carried: the
    /// returned logarithm has zero imaginary part.
    pub fn to_handle(&self) -> EntireFnHandle {
        let this = Arc::new(self.clone());
        let symmetry = if self.is_dihedral_symmetric() {
            AngularSymmetry::Dihedral4
        } else {
            AngularSymmetry::None
        };
        let growth = self.indicator_density().map(|d| Growth {
            order: 2.0,
            type_: PI * d,
        });
        let name = format!(
            "{:?} product over {} zeros",
            self.construction(),
            self.len()
        );
        EntireFnHandle::from_log_fn(Descriptor::Named(name), growth, symmetry, move |z| {
            Ok(Complex64::new(this.eval(z)?.log_abs, 0.0))
        })
    }
}

/// `log|Π(z)|` for a quartic product.
pub fn quartic_product_eval(product: &CanonicalProduct, z: Complex64) -> Result<ProductValue> {
    if product.construction() != Construction::Quartic {
        return Err(Error::invalid("expected a quartic product"));
    }
    product.eval(z)
}

/// `log|Π_Γ(z)|` for a genus-2 product.
pub fn genus2_product_eval(product: &CanonicalProduct, z: Complex64) -> Result<ProductValue> {
    if product.construction() != Construction::Genus2 {
        return Err(Error::invalid("expected a genus-2 product"));
    }
    product.eval(z)
}

/// `πΔ|sin 2θ|`.
pub fn indicator_target(delta: f64, theta: f64) -> Result<f64> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "density must be nonnegative, got {delta}"
        )));
    }
    Ok(PI * delta * (2.0 * theta).sin().abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorEstimate {
    pub theta: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Fitted slope of `log|F(re^{iθ})|` against `r²`.
    pub h_hat: f64,
    pub h_target: Option<f64>,
    /// Standard error of the slope.
    pub residual: f64,
    /// RMS of the fit residuals.
    pub rms: f64,
    pub intercept: f64,
    pub used: usize,
    /// Sample radii within `δ` of a zero.
    pub excluded: Vec<f64>,
}

impl IndicatorEstimate {
    pub fn excluded_count(&self) -> usize {
        self.excluded.len()
    }
}

fn near_zero(product: &CanonicalProduct, z: Complex64, delta: f64) -> bool {
    let r = z.norm();
    match &product.zeros {
        Zeros::Quartic { set, .. } => {
            let pts = set.points();
            let start = pts.partition_point(|x| x.abs() <= r - delta);
            pts[start..]
                .iter()
                .take_while(|x| x.abs() < r + delta)
                .any(|x| {
                    let m = x.abs();
                    [
                        Complex64::new(m, 0.0),
                        Complex64::new(0.0, m),
                        Complex64::new(-m, 0.0),
                        Complex64::new(0.0, -m),
                    ]
                    .iter()
                    .any(|g| (z - g).norm() < delta)
                })
        }
        Zeros::Genus2 { gamma, .. } => {
            let pts = gamma.points();
            let start = pts.partition_point(|g| g.norm() <= r - delta);
            pts[start..]
                .iter()
                .take_while(|g| g.norm() < r + delta)
                .any(|g| (z - g).norm() < delta)
        }
    }
}

/// Fits `log|F(re^{iθ})| = ĥ r² + c` over radii uniform in `r²` on the window,
/// skipping points within planar distance `delta` of a zero.
pub fn indicator_estimate(
    product: &CanonicalProduct,
    theta: f64,
    window: (f64, f64),
    delta: f64,
    samples: usize,
) -> Result<IndicatorEstimate> {
    let (r_min, r_max) = window;
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(Error::invalid(format!("θ = {theta} is outside [0, 2π)")));
    }
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::invalid(format!(
            "window [{r_min}, {r_max}] must satisfy 0 < r_min < r_max"
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid("exclusion distance must be nonnegative"));
    }
    if samples < 5 {
        return Err(Error::invalid("need at least 5 sample radii"));
    }
    product.check_radius(r_max)?;
    let dir = Complex64::from_polar(1.0, theta);
    let radii: Vec<f64> = (0..samples)
        .map(|i| {
            let s = i as f64 / (samples - 1) as f64;
            (r_min * r_min + s * (r_max * r_max - r_min * r_min)).sqrt()
        })
        .collect();
    let evaluated: Vec<Result<Option<f64>>> = radii
        .par_iter()
        .map(|&r| {
            let z = dir * r;
            if near_zero(product, z, delta) {
                return Ok(None);
            }
            let v = product.eval(z)?.log_abs;
            Ok(if v.is_finite() { Some(v) } else { None })
        })
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (r, v) in radii.iter().zip(evaluated) {
        match v? {
            Some(y) => {
                xs.push(r * r);
                ys.push(y);
            }
            None => excluded.push(*r),
        }
    }
    if xs.len() < 5 {
        return Err(Error::invalid(format!(
            "only {} radii remain after excluding points within {delta} of a zero",
            xs.len()
        )));
    }
    let fit =
        fit_line(&xs, &ys).ok_or_else(|| Error::Numeric("degenerate indicator fit".into()))?;
    let h_target = match product.indicator_density() {
        Some(d) => Some(indicator_target(d, theta)?),
        None => None,
    };
    Ok(IndicatorEstimate {
        theta,
        r_min,
        r_max,
        h_hat: fit.slope,
        h_target,
        residual: fit.slope_std_error,
        rms: fit.rms,
        intercept: fit.intercept,
        used: xs.len(),
        excluded,
    })
}

/// Writes indicator estimates as CSV after a caller-supplied header line.
pub fn write_indicator_csv<W: Write>(
    mut w: W,
    header: &str,
    rows: &[IndicatorEstimate],
) -> io::Result<()> {
    writeln!(w, "{header}")?;
    writeln!(
        w,
        "theta,r_min,r_max,h_hat,h_target,residual,excluded_count"
    )?;
    for e in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_sig17(e.theta),
            fmt_sig17(e.r_min),
            fmt_sig17(e.r_max),
            fmt_sig17(e.h_hat),
            e.h_target.map_or("nan".to_string(), fmt_sig17),
            fmt_sig17(e.residual),
            e.excluded_count()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub sum: f64,
    /// `sum + residual_a + residual_b`; the check passes when nonnegative.
    pub margin: f64,
    pub passes: bool,
}

/// `ĥ(θ) + ĥ(θ+π/2) ≥ -(residuals)`.
pub fn trig_convexity_check(
    a: &IndicatorEstimate,
    b: &IndicatorEstimate,
) -> Result<ConvexityReport> {
    let gap = (b.theta - a.theta).rem_euclid(2.0 * PI);
    if (gap - PI / 2.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "estimates must be a quarter turn apart, got θ = {} and {}",
            a.theta, b.theta
        )));
    }
    let sum = a.h_hat + b.h_hat;
    let margin = sum + a.residual + b.residual;
    Ok(ConvexityReport {
        sum,
        margin,
        passes: margin >= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    /// The trend matches the dichotomy at this density.
    Agrees,
    Disagrees,
    /// Critical density, or no density known: nothing is predicted.
    NoPrediction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub delta: Option<f64>,
    pub trend: FockNormTrend,
    pub expected: Option<TrendClass>,
    pub verdict: ProbeVerdict,
}

/// Prediction of the dichotomy: `Δ < ½` in Fock space, `Δ > ½` not.
pub fn expected_trend(delta: f64) -> Option<TrendClass> {
    if (delta - 0.5).abs() <= 1e-12 {
        None
    } else if delta < 0.5 {
        Some(TrendClass::Converging)
    } else {
        Some(TrendClass::Diverging)
    }
}

/// Genus-2 product over `Γ = Λ ∪ iΛ` for a symmetric sqrt grid with density
/// `delta` per side, truncated just deep enough for `|z| ≤ r_max`.
pub fn probe_product(delta: f64, r_max: f64) -> Result<CanonicalProduct> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::invalid("probe radius must be positive"));
    }
    let mut n = ((4.0 * delta * r_max * r_max).ceil() as usize).max(1);
    loop {
        let set = generate_sqrt_set(delta, SignPattern::Symmetric, n)?;
        if set.max_modulus().unwrap_or(0.0) >= 2.0 * r_max {
            return CanonicalProduct::genus2(union_with_rotation(&set)?, TailPolicy::FirstOrder);
        }
        n += 1;
    }
}

/// Truncated Fock norms of the product on the schedule, with the verdict
/// against the density dichotomy.
pub fn fock_membership_probe(
    product: &CanonicalProduct,
    radii: &[f64],
    spec: &QuadratureSpec,
) -> Result<ProbeReport> {
    if product.construction() != Construction::Genus2 {
        return Err(Error::invalid(
            "the membership probe takes a genus-2 product",
        ));
    }
    if let Some(&r) = radii.last() {
        product.check_radius(r)?;
    }
    let trend = fock_norm_trend(&product.to_handle(), radii, spec)?;
    let delta = product.indicator_density();
    let expected = delta.and_then(expected_trend);
    let verdict = match expected {
        None => ProbeVerdict::NoPrediction,
        Some(e) if e == trend.classification => ProbeVerdict::Agrees,
        Some(_) => ProbeVerdict::Disagrees,
    };
    Ok(ProbeReport {
        delta,
        trend,
        expected,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnihilationReport {
    /// `log|Π|` at each sample; `-∞` at a zero.
    pub at_sample: Vec<f64>,
    pub max_log_abs: f64,
    /// `log|Π|` at each sample shifted by `10⁻³`.
    pub shifted: Vec<f64>,
    pub shifted_finite: bool,
}

/// Evaluates the finite product at points that should be zeros, and just off them.
pub fn annihilation_check(product: &CanonicalProduct, sample: &[Complex64]) -> AnnihilationReport {
    let at_sample: Vec<f64> = sample.iter().map(|z| product.finite_log_abs(*z)).collect();
    let shifted: Vec<f64> = sample
        .iter()
        .map(|z| product.finite_log_abs(*z + Complex64::new(1e-3, 0.0)))
        .collect();
    AnnihilationReport {
        max_log_abs: at_sample.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        shifted_finite: shifted.iter().all(|v| v.is_finite()),
        at_sample,
        shifted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn explicit_quartic(points: Vec<f64>) -> CanonicalProduct {
        CanonicalProduct::quartic(
            DiscreteSet::from_points(points).unwrap(),
            TailPolicy::BoundOnly,
        )
        .unwrap()
    }

    #[test]
    fn quartic_small_cases() {
        let p = explicit_quartic(vec![1.0]);
        assert!((p.eval(c(2.0, 0.0)).unwrap().log_abs - 15f64.ln()).abs() < 1e-15);
        assert_eq!(p.eval(c(1.0, 0.0)).unwrap().log_abs, f64::NEG_INFINITY);
        assert_eq!(p.eval(c(0.0, 1.0)).unwrap().log_abs, f64::NEG_INFINITY);
        assert_eq!(p.eval(c(0.0, -1.0)).unwrap().log_abs, f64::NEG_INFINITY);
    }

    #[test]
    fn genus2_small_cases() {
        let gamma = ComplexZeroSet::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let p = CanonicalProduct::genus2(gamma, TailPolicy::BoundOnly).unwrap();
        assert_eq!(p.eval(c(0.0, 0.0)).unwrap().log_abs, 0.0);
        assert_eq!(p.eval(c(1.0, 0.0)).unwrap().log_abs, f64::NEG_INFINITY);
    }

    #[test]
    fn genus2_over_rotation_equals_quartic() {
        let lambda = DiscreteSet::from_points(vec![1.0, -1.0, 2.0, -2.0]).unwrap();
        let g =
            CanonicalProduct::genus2(union_with_rotation(&lambda).unwrap(), TailPolicy::BoundOnly)
                .unwrap();
        let z = c(0.3, 0.2);
        // Direct factor-by-factor product of E₂(z/γ) in complex arithmetic.
        let mut direct = c(1.0, 0.0);
        for gamma in [
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(2.0, 0.0),
            c(-2.0, 0.0),
            c(0.0, 1.0),
            c(0.0, -1.0),
            c(0.0, 2.0),
            c(0.0, -2.0),
        ] {
            let w = z / gamma;
            direct *= (c(1.0, 0.0) - w) * (w + w * w / 2.0).exp();
        }
        let quartic = explicit_quartic(vec![1.0, 2.0]).eval(z).unwrap().log_abs;
        let genus = g.eval(z).unwrap().log_abs;
        assert!((genus - direct.norm().ln()).abs() < 1e-12);
        assert!((genus - quartic).abs() < 1e-10);
    }

    #[test]
    fn rejects_points_beyond_truncation() {
        let s = generate_sqrt_set(1.0, SignPattern::Positive, 100).unwrap();
        let p = CanonicalProduct::quartic(s, TailPolicy::BoundOnly).unwrap();
        assert!(p.eval(c(5.0, 0.0)).is_ok());
        let err = p.eval(c(5.1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Truncation(ref m) if m.contains("N ≥ 105")));
    }

    #[test]
    fn quartic_symmetries_are_exact() {
        let p = CanonicalProduct::quartic(
            generate_sqrt_set(0.7, SignPattern::Positive, 400).unwrap(),
            TailPolicy::FirstOrder,
        )
        .unwrap();
        for z in [c(1.3, 0.4), c(-2.2, 3.1), c(0.05, -4.0)] {
            let v = p.eval(z).unwrap().log_abs;
            for w in [z * Complex64::i(), -z, z.conj()] {
                assert_eq!(p.eval(w).unwrap().log_abs, v);
            }
        }
    }

    #[test]
    fn quartic_matches_sine_closed_form() {
        // Over λ_n = √(n/Δ) the infinite product is sin(πΔz²)/(πΔz²).
        let delta = 0.5;
        let p = CanonicalProduct::quartic(
            generate_sqrt_set(delta, SignPattern::Positive, 20_000).unwrap(),
            TailPolicy::FirstOrder,
        )
        .unwrap();
        for z in [c(1.0, 0.5), c(3.0, 3.0), c(0.2, 5.0)] {
            let w = PI * delta * z * z;
            let exact = (w.sin() / w).norm().ln();
            let v = p.eval(z).unwrap();
            assert!((v.log_abs - exact).abs() <= v.tail_bound + 1e-10, "z={z}");
        }
    }

    #[test]
    fn doubling_truncation_stays_within_tail_bound() {
        for policy in [TailPolicy::BoundOnly, TailPolicy::FirstOrder] {
            let a = CanonicalProduct::quartic(
                generate_sqrt_set(1.0, SignPattern::Symmetric, 1000).unwrap(),
                policy,
            )
            .unwrap();
            let b = CanonicalProduct::quartic(
                generate_sqrt_set(1.0, SignPattern::Symmetric, 2000).unwrap(),
                policy,
            )
            .unwrap();
            for z in [c(2.0, 1.0), c(-5.0, 7.0), c(10.0, 0.3)] {
                let va = a.eval(z).unwrap();
                let vb = b.eval(z).unwrap();
                assert!((va.log_abs - vb.log_abs).abs() <= va.tail_bound + 1e-10);
            }
        }
    }

    #[test]
    fn targets() {
        assert!((indicator_target(0.5, PI / 4.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(indicator_target(3.0, 0.0).unwrap(), 0.0);
        assert!(
            (indicator_target(0.25, PI / 8.0).unwrap() - 0.555_360_367_269_796_5).abs() < 1e-12
        );
        assert!(indicator_target(-1.0, 0.0).is_err());
    }

    #[test]
    fn constant_product_is_convex_with_zero_margin() {
        let p = explicit_quartic(vec![]);
        let a = indicator_estimate(&p, 0.0, (1.0, 5.0), 0.1, 32).unwrap();
        let b = indicator_estimate(&p, PI / 2.0, (1.0, 5.0), 0.1, 32).unwrap();
        let r = trig_convexity_check(&a, &b).unwrap();
        assert_eq!(r.sum, 0.0);
        assert!(r.passes);
        assert!(trig_convexity_check(&a, &a).is_err());
    }

    #[test]
    fn exclusion_can_starve_the_fit() {
        let p = CanonicalProduct::quartic(
            generate_sqrt_set(0.5, SignPattern::Positive, 20_000).unwrap(),
            TailPolicy::FirstOrder,
        )
        .unwrap();
        assert!(indicator_estimate(&p, 0.0, (20.0, 40.0), 0.1, 256).is_err());
        let e = indicator_estimate(&p, 0.0, (20.0, 40.0), 0.005, 256).unwrap();
        assert!(e.h_hat.abs() < 0.05 * PI / 2.0);
    }

    #[test]
    fn annihilation() {
        let s = generate_sqrt_set(1.0, SignPattern::Positive, 100).unwrap();
        let p = CanonicalProduct::quartic(s.clone(), TailPolicy::BoundOnly).unwrap();
        let sample: Vec<Complex64> = s.points()[..3].iter().map(|x| c(*x, 0.0)).collect();
        let r = annihilation_check(&p, &sample);
        assert_eq!(r.max_log_abs, f64::NEG_INFINITY);
        assert!(annihilation_check(&p, &[c(1.001, 0.0)]).shifted_finite);
        assert!(annihilation_check(&p, &[c(1.001, 0.0)])
            .max_log_abs
            .is_finite());
        let g = CanonicalProduct::genus2(union_with_rotation(&s).unwrap(), TailPolicy::BoundOnly)
            .unwrap();
        let l = s.points()[7];
        let r2 = annihilation_check(&g, &[c(l, 0.0), c(0.0, l)]);
        assert_eq!(r2.max_log_abs, f64::NEG_INFINITY);
        assert!(r2.shifted_finite);
    }

    #[test]
    fn expected_trends() {
        assert_eq!(expected_trend(0.25), Some(TrendClass::Converging));
        assert_eq!(expected_trend(0.75), Some(TrendClass::Diverging));
        assert_eq!(expected_trend(0.5), None);
    }

    #[test]
    fn probe_truncation_covers_schedule() {
        let p = probe_product(0.75, 12.0).unwrap();
        assert!(p.valid_radius().unwrap() >= 12.0);
        assert_eq!(p.indicator_density(), Some(0.75));
        assert!(p.is_dihedral_symmetric());
    }
}
