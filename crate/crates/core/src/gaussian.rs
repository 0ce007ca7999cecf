//! Closed-form algebra of Gaussians `A·e^{-aπ(t-μ)²}` and the Fourier
//! envelope fitter.
//!
//! Fourier convention: `ĝ(ξ) = ∫ g(t) e^{-2πitξ} dt`, under which `e^{-πt²}`
//! is its own transform.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{integrate_real_line, DecayEnvelope, QuadratureSpec};

/// `amplitude · e^{-width·π(t - center)²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFn {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

impl GaussianFn {
    pub fn new(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!(
                "width must be positive, got {width}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::invalid("center must be finite"));
        }
        Ok(GaussianFn {
            amplitude,
            width,
            center,
        })
    }

    /// `φ(t) = e^{-πt²}`.
    pub fn phi() -> Self {
        GaussianFn {
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
        }
    }

    /// `φ(t - λ)`.
    pub fn translate(lambda: f64) -> Self {
        GaussianFn {
            center: lambda,
            ..Self::phi()
        }
    }

    /// `φ_a(t) = 2^{1/4} e^{-aπt²}`.
    pub fn phi_a(a: f64) -> Result<Self> {
        Self::new(2f64.powf(0.25), a, 0.0)
    }

    pub fn shifted(self, by: f64) -> Self {
        GaussianFn {
            center: self.center + by,
            ..self
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let d = t - self.center;
        self.amplitude * (-self.width * PI * d * d).exp()
    }

    /// Certificate `|g(t)| ≤ A e^{-aπ(t-μ)²}` for all `t`.
    pub fn envelope(&self) -> DecayEnvelope {
        DecayEnvelope::new(self.amplitude, self.width * PI, self.center, 0.0)
            .expect("validated parameters")
    }

    /// `‖g‖_p`; `p = ∞` gives the amplitude.
    pub fn norm_p(&self, p: f64) -> Result<f64> {
        if p == f64::INFINITY {
            return Ok(self.amplitude);
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::invalid(format!("p must lie in [1, ∞], got {p}")));
        }
        Ok(self.amplitude * (p * self.width).powf(-1.0 / (2.0 * p)))
    }
}

/// Natural log of `∫ g₁ g₂`.
pub fn log_inner_product(g1: &GaussianFn, g2: &GaussianFn) -> f64 {
    let (a, b) = (g1.width, g2.width);
    let d = g1.center - g2.center;
    let s = a + b;
    g1.amplitude.ln() + g2.amplitude.ln() - 0.5 * s.ln() - PI * (a * b / s) * d * d
}

/// `∫ g₁(t) g₂(t) dt` in closed form.
pub fn inner_product(g1: &GaussianFn, g2: &GaussianFn) -> f64 {
    if g1.width == 1.0 && g2.width == 1.0 {
        let d = g1.center - g2.center;
        return g1.amplitude * g2.amplitude * FRAC_1_SQRT_2 * (-PI * d * d / 2.0).exp();
    }
    log_inner_product(g1, g2).exp()
}

/// `⟨φ(·-λ), φ(·-μ)⟩ = 2^{-1/2} e^{-π(λ-μ)²/2}`.
pub fn translate_inner_product(lambda: f64, mu: f64) -> f64 {
    let d = lambda - mu;
    FRAC_1_SQRT_2 * (-PI * d * d / 2.0).exp()
}

/// `g₁ ∗ g₂`: width `ab/(a+b)`, center `μ₁+μ₂`, amplitude `A₁A₂/√(a+b)`.
pub fn convolve(g1: &GaussianFn, g2: &GaussianFn) -> GaussianFn {
    let s = g1.width + g2.width;
    GaussianFn {
        amplitude: g1.amplitude * g2.amplitude / s.sqrt(),
        width: g1.width * g2.width / s,
        center: g1.center + g2.center,
    }
}

/// `(g₁ ∗ g₂)(t)` by quadrature of the defining integral.
pub fn convolve_numeric(
    g1: &GaussianFn,
    g2: &GaussianFn,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    // Integrand in s: g₁(s) g₂(t - s), a Gaussian in s of rate π(a+b).
    let s = g1.width + g2.width;
    let center = (g1.width * g1.center + g2.width * (t - g2.center)) / s;
    let env = DecayEnvelope::new(g1.amplitude * g2.amplitude, PI * s, center, 0.0)?;
    integrate_real_line(|u| g1.evaluate(u) * g2.evaluate(t - u), &env, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionIdentityReport {
    pub a: f64,
    pub b: f64,
    /// `(a-1)^{1/2}/a`, the constant as printed.
    pub paper_constant: f64,
    /// `√2 (a-1)^{1/2}/a`, from the general closed form.
    pub closed_form_constant: f64,
    /// `(φ_a ∗ φ_b)(t)/φ(t)` by quadrature, averaged over the grid.
    pub oracle_constant: f64,
    /// `|paper - oracle| / oracle`.
    pub relative_deviation: f64,
    /// Largest `|ratio(t)/ratio(0) - 1|` over the grid; small means `φ_a ∗ φ_b ∝ φ`.
    pub shape_deviation: f64,
    pub grid: Vec<f64>,
}

/// Checks `φ_a ∗ φ_b = c·φ` for `1/a + 1/b = 1` and measures `c`.
pub fn convolution_identity_check(a: f64) -> Result<ConvolutionIdentityReport> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(Error::invalid(format!("a must exceed 1, got {a}")));
    }
    let b = a / (a - 1.0);
    let ga = GaussianFn::phi_a(a)?;
    let gb = GaussianFn::phi_a(b)?;
    let spec = QuadratureSpec::relative(1e-13);
    let grid = vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5];
    let mut ratios = Vec::with_capacity(grid.len());
    for &t in &grid {
        let v = convolve_numeric(&ga, &gb, t, &spec)?;
        ratios.push(v / GaussianFn::phi().evaluate(t));
    }
    let oracle_constant = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let shape_deviation = ratios
        .iter()
        .map(|r| (r / ratios[0] - 1.0).abs())
        .fold(0.0, f64::max);
    let paper_constant = (a - 1.0).sqrt() / a;
    Ok(ConvolutionIdentityReport {
        a,
        b,
        paper_constant,
        closed_form_constant: 2f64.sqrt() * paper_constant,
        oracle_constant,
        relative_deviation: (paper_constant - oracle_constant).abs() / oracle_constant,
        shape_deviation,
        grid,
    })
}

/// `A e^{-aπt²} ↦ (A/√a) e^{-πξ²/a}`; centered inputs only.
pub fn fourier_transform(g: &GaussianFn) -> Result<GaussianFn> {
    if g.center != 0.0 {
        return Err(Error::invalid(
            "fourier_transform takes centered Gaussians (only |ĝ| is used downstream)",
        ));
    }
    Ok(GaussianFn {
        amplitude: g.amplitude / g.width.sqrt(),
        width: 1.0 / g.width,
        center: 0.0,
    })
}

/// Two-sided envelope `A/(1+ξ^{2n}) e^{-aπξ²} ≤ |φ̂(ξ)| ≤ B(1+ξ^{2m}) e^{-bπξ²}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub lower_constant: f64,
    pub lower_rate: f64,
    pub lower_degree: u32,
    pub upper_constant: f64,
    pub upper_rate: f64,
    pub upper_degree: u32,
    /// `max (|φ̂| - lower)/|φ̂|` over the samples.
    pub lower_slack: f64,
    /// `max (upper - |φ̂|)/|φ̂|` over the samples.
    pub upper_slack: f64,
    /// Density below which `Λ⁺` translates fail to span: `a/2`.
    pub lower_threshold: f64,
    /// Density above which they span: `b/2`.
    pub upper_threshold: f64,
}

impl EnvelopeFit {
    fn log_lower(&self, xi: f64) -> f64 {
        self.lower_constant.ln() - ln_poly(xi, self.lower_degree) - self.lower_rate * PI * xi * xi
    }

    fn log_upper(&self, xi: f64) -> f64 {
        self.upper_constant.ln() + ln_poly(xi, self.upper_degree) - self.upper_rate * PI * xi * xi
    }

    /// Both bounds at `ξ`.
    pub fn bounds(&self, xi: f64) -> (f64, f64) {
        (self.log_lower(xi).exp(), self.log_upper(xi).exp())
    }

    /// True when `lower ≤ s ≤ upper` at every sample.
    pub fn holds_on(&self, samples: &[(f64, f64)]) -> bool {
        samples.iter().all(|&(xi, s)| {
            let ls = s.ln();
            self.log_lower(xi) <= ls && ls <= self.log_upper(xi)
        })
    }
}

/// `ln(1 + ξ^{2k})`.
fn ln_poly(xi: f64, k: u32) -> f64 {
    if k == 0 {
        std::f64::consts::LN_2
    } else {
        (xi * xi).powi(k as i32).ln_1p()
    }
}

/// Fits the envelope to samples `(ξ, |φ̂(ξ)|)`.
///
/// The common rate comes from regressing `-log|φ̂|` on `πξ²`, `log(1+ξ²)` and a
/// constant over the largest 20% of the grid; the polynomial column keeps
/// Hermite-type factors from biasing the rate. The constants are then the
/// tightest ones valid at every sample.
pub fn envelope_fit(samples: &[(f64, f64)], n: u32, m: u32) -> Result<EnvelopeFit> {
    if samples.len() < 10 {
        return Err(Error::invalid("envelope fit needs at least 10 samples"));
    }
    if let Some((xi, s)) = samples
        .iter()
        .find(|(xi, s)| !(xi.is_finite() && *s > 0.0 && s.is_finite()))
    {
        return Err(Error::invalid(format!(
            "|φ̂({xi})| = {s} is not strictly positive: a zero of φ̂ in range admits no lower envelope"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let xi_max = sorted.last().map(|p| p.0.abs()).unwrap_or(0.0);
    if xi_max < 3.0 {
        return Err(Error::invalid(format!(
            "grid must reach |ξ| ≥ 3, reaches {xi_max}"
        )));
    }
    let tail = &sorted[sorted.len() - (sorted.len() / 5).max(3)..];
    let rows = tail.len();
    let design = DMatrix::from_fn(rows, 3, |i, j| {
        let xi = tail[i].0;
        match j {
            0 => PI * xi * xi,
            1 => (xi * xi).ln_1p(),
            _ => 1.0,
        }
    });
    let rhs = DVector::from_iterator(rows, tail.iter().map(|p| -p.1.ln()));
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numeric(format!("envelope regression failed: {e}")))?;
    let rate = coef[0];
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Numeric(format!(
            "fitted decay rate {rate} is not positive"
        )));
    }
    let log_a = sorted
        .iter()
        .map(|&(xi, s)| s.ln() + ln_poly(xi, n) + rate * PI * xi * xi)
        .fold(f64::INFINITY, f64::min);
    let log_b = sorted
        .iter()
        .map(|&(xi, s)| s.ln() - ln_poly(xi, m) + rate * PI * xi * xi)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut fit = EnvelopeFit {
        lower_constant: log_a.exp() * (1.0 - 1e-12),
        lower_rate: rate,
        lower_degree: n,
        upper_constant: log_b.exp() * (1.0 + 1e-12),
        upper_rate: rate,
        upper_degree: m,
        lower_slack: 0.0,
        upper_slack: 0.0,
        lower_threshold: rate / 2.0,
        upper_threshold: rate / 2.0,
    };
    if !(fit.lower_constant > 0.0 && fit.upper_constant.is_finite()) || !fit.holds_on(&sorted) {
        return Err(Error::Numeric(
            "envelope constants do not bound every sample".into(),
        ));
    }
    for &(xi, s) in &sorted {
        let (lo, hi) = fit.bounds(xi);
        fit.lower_slack = fit.lower_slack.max((s - lo) / s);
        fit.upper_slack = fit.upper_slack.max((hi - s) / s);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle_inner(g1: &GaussianFn, g2: &GaussianFn) -> f64 {
        let env = DecayEnvelope::new(
            g1.amplitude * g2.amplitude,
            PI * g1.width.min(g2.width),
            g1.center,
            (g1.center - g2.center).abs(),
        )
        .unwrap();
        integrate_real_line(
            |t| g1.evaluate(t) * g2.evaluate(t),
            &env,
            &QuadratureSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn evaluate_reference_values() {
        assert_eq!(GaussianFn::phi().evaluate(0.0), 1.0);
        assert!((GaussianFn::phi().evaluate(1.0) - 0.043_213_918_263_772_25).abs() < 1e-16);
        assert!(
            (GaussianFn::phi_a(2.0).unwrap().evaluate(0.0) - 1.189_207_115_002_721).abs() < 1e-15
        );
    }

    #[test]
    fn inner_products_match_quadrature() {
        let phi = GaussianFn::phi();
        let one = GaussianFn::translate(1.0);
        // Frozen from the quadrature oracle.
        assert!((inner_product(&phi, &phi) - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert!((inner_product(&phi, &one) - 0.146_993_058_107_810_4).abs() < 1e-12);
        assert!((oracle_inner(&phi, &phi) - inner_product(&phi, &phi)).abs() < 1e-12);
        assert!((oracle_inner(&phi, &one) - inner_product(&phi, &one)).abs() < 1e-12);
        let g = GaussianFn::new(0.3, 2.5, -0.7).unwrap();
        let h = GaussianFn::new(1.7, 0.6, 0.4).unwrap();
        assert!((oracle_inner(&g, &h) - inner_product(&g, &h)).abs() < 1e-12);
        assert!(inner_product(&g, &g) > 0.0);
    }

    #[test]
    fn convolution_of_phi_with_itself() {
        let c = convolve(&GaussianFn::phi(), &GaussianFn::phi());
        assert!((c.amplitude - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(c.width, 0.5);
        assert_eq!(c.center, 0.0);
        let spec = QuadratureSpec::default();
        for t in [0.0, 0.5, 1.0] {
            let q = convolve_numeric(&GaussianFn::phi(), &GaussianFn::phi(), t, &spec).unwrap();
            assert!((q - c.evaluate(t)).abs() < 1e-12);
        }
        let shifted = convolve(&GaussianFn::translate(1.0), &GaussianFn::translate(2.0));
        assert_eq!(shifted.center, 3.0);
    }

    #[test]
    fn convolution_identity_constant() {
        let r = convolution_identity_check(2.0).unwrap();
        assert!(r.shape_deviation < 1e-10);
        assert_eq!(r.paper_constant, 0.5);
        // The quadrature constant at a = 2 is √2/2, not 1/2.
        assert!((r.oracle_constant - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((r.relative_deviation - (1.0 - FRAC_1_SQRT_2)).abs() < 1e-12);
        let r3 = convolution_identity_check(3.0).unwrap();
        assert!(r3.shape_deviation < 1e-10);
        assert_eq!(r3.b, 1.5);
        assert!((r3.oracle_constant - r3.closed_form_constant).abs() < 1e-12);
        assert!(convolution_identity_check(1.0).is_err());
    }

    #[test]
    fn fourier_of_gaussians() {
        let phi = GaussianFn::phi();
        assert_eq!(fourier_transform(&phi).unwrap(), phi);
        for xi in [0.0, 0.5, 1.0] {
            let env = phi.envelope();
            let re = integrate_real_line(
                |t| phi.evaluate(t) * (2.0 * PI * t * xi).cos(),
                &env,
                &QuadratureSpec::default(),
            )
            .unwrap();
            assert!((re - phi.evaluate(xi)).abs() < 1e-12);
        }
        let f2 = fourier_transform(&GaussianFn::phi_a(2.0).unwrap()).unwrap();
        assert!((f2.amplitude - 2f64.powf(0.25) / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f2.width, 0.5);
        assert!(fourier_transform(&GaussianFn::translate(1.0)).is_err());
    }

    #[test]
    fn norms() {
        let phi = GaussianFn::phi();
        assert_eq!(phi.norm_p(1.0).unwrap(), 1.0);
        assert!((phi.norm_p(2.0).unwrap() - 2f64.powf(-0.25)).abs() < 1e-16);
        assert_eq!(phi.norm_p(f64::INFINITY).unwrap(), 1.0);
        assert!(phi.norm_p(0.5).is_err());
    }

    fn grid(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..=400)
            .map(|i| {
                let xi = i as f64 * 0.01;
                (xi, f(xi))
            })
            .collect()
    }

    #[test]
    fn envelope_of_phi() {
        let fit = envelope_fit(&grid(|xi| (-PI * xi * xi).exp()), 0, 0).unwrap();
        assert!((fit.lower_rate - 1.0).abs() < 0.01);
        assert!((fit.upper_threshold - 0.5).abs() < 0.005);
        assert!(fit.holds_on(&grid(|xi| (-PI * xi * xi).exp())));
    }

    #[test]
    fn envelope_of_phi_2() {
        let g = fourier_transform(&GaussianFn::phi_a(2.0).unwrap()).unwrap();
        let fit = envelope_fit(&grid(|xi| g.evaluate(xi)), 0, 0).unwrap();
        assert!((fit.lower_rate - 0.5).abs() < 0.005);
        assert!((fit.lower_threshold - 0.25).abs() < 0.0025);
    }

    #[test]
    fn hermite_factor_needs_upper_degree() {
        // (1 + 1/(2π) - t²) e^{-πt²} has transform (1 + ξ²) e^{-πξ²}.
        let spec = QuadratureSpec::relative(1e-13);
        let env = DecayEnvelope::new(2.0, 0.9 * PI, 0.0, 3.0).unwrap();
        for xi in [0.0, 0.5, 1.0, 1.5] {
            let v = integrate_real_line(
                |t| (1.0 + 0.5 / PI - t * t) * (-PI * t * t).exp() * (2.0 * PI * xi * t).cos(),
                &env,
                &spec,
            )
            .unwrap();
            assert!(
                (v - (1.0 + xi * xi) * (-PI * xi * xi).exp()).abs() < 1e-13,
                "{xi}: {v}"
            );
        }
        let samples = grid(|xi| (1.0 + xi * xi) * (-PI * xi * xi).exp());
        let fit = envelope_fit(&samples, 0, 1).unwrap();
        assert!((fit.upper_rate - 1.0).abs() < 1e-6);
        assert!((fit.upper_constant - 1.0).abs() < 1e-6);
        assert!(fit.holds_on(&samples));
        assert!((fit.upper_threshold - 0.5).abs() < 1e-6);
    }

    #[test]
    fn envelope_rejects_zero_samples() {
        let mut s = grid(|xi| (-PI * xi * xi).exp());
        s[5].1 = 0.0;
        assert!(envelope_fit(&s, 0, 0).is_err());
        assert!(envelope_fit(&s[..50], 0, 0).is_err());
    }
}
