//! Closed forms against independent quadrature at seeded random parameters.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bargmann::{bargmann_gaussian_translate, bargmann_numeric_log, RealFn};
use crate::error::Result;
use crate::gaussian::{
    convolve, convolve_numeric, fourier_transform, translate_inner_product, GaussianFn,
};
use crate::numerics::{integrate_real_line, DecayEnvelope, QuadratureSpec};

pub const DEFAULT_SEED: u64 = 20_240_917;
pub const DEFAULT_POINTS: usize = 12;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub points: usize,
    pub max_relative_error: f64,
    /// Parameters of the worst point.
    pub worst: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SelftestReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

struct Tally {
    name: &'static str,
    points: usize,
    worst: f64,
    at: Vec<f64>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            points: 0,
            worst: 0.0,
            at: vec![],
        }
    }

    fn record(&mut self, err: f64, at: &[f64]) {
        self.points += 1;
        if !(err <= self.worst) {
            self.worst = err;
            self.at = at.to_vec();
        }
    }

    fn finish(self, tol: f64) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            points: self.points,
            max_relative_error: self.worst,
            worst: self.at,
            tolerance: tol,
            passed: self.worst <= tol,
        }
    }
}

/// Runs the four cross-checks at `points` random parameter draws each.
pub fn run_selftest(seed: u64, points: usize, tol: f64) -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = QuadratureSpec::relative(1e-14);

    let mut gram = Tally::new("gram-entry");
    for _ in 0..points {
        let (l, m) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let (gl, gm) = (GaussianFn::translate(l), GaussianFn::translate(m));
        let env = DecayEnvelope::new(1.0, 2.0 * PI, 0.5 * (l + m), 0.0)?;
        let quad = integrate_real_line(|t| gl.evaluate(t) * gm.evaluate(t), &env, &spec)?;
        gram.record(rel(translate_inner_product(l, m), quad), &[l, m]);
    }

    let mut barg = Tally::new("bargmann-closed-form");
    for _ in 0..points {
        let mu = rng.gen_range(-2.0..2.0);
        let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let closed = bargmann_gaussian_translate(mu).eval_log(z)?;
        let quad = bargmann_numeric_log(&RealFn::Gaussian(GaussianFn::translate(mu)), z, &spec)?;
        // The closed form carries the phase; compare full complex values.
        let d = closed - quad;
        let err = (d.exp() - 1.0).norm();
        barg.record(err, &[mu, z.re, z.im]);
    }

    let mut conv = Tally::new("convolution");
    for _ in 0..points {
        let g1 = GaussianFn::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(-1.0..1.0),
        )?;
        let g2 = GaussianFn::new(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(-1.0..1.0),
        )?;
        let t = rng.gen_range(-1.0..1.0);
        let quad = convolve_numeric(&g1, &g2, t, &spec)?;
        conv.record(
            rel(convolve(&g1, &g2).evaluate(t), quad),
            &[g1.width, g2.width, t],
        );
    }

    let mut fourier = Tally::new("fourier-self-duality");
    for _ in 0..points {
        let a = rng.gen_range(0.5..2.0);
        let xi: f64 = rng.gen_range(-1.0..1.0);
        let g = GaussianFn::new(1.0, a, 0.0)?;
        let env = DecayEnvelope::new(1.0, a * PI, 0.0, 0.0)?;
        // g is even, so the sine part vanishes.
        let quad = integrate_real_line(|t| g.evaluate(t) * (2.0 * PI * xi * t).cos(), &env, &spec)?;
        fourier.record(rel(fourier_transform(&g)?.evaluate(xi), quad), &[a, xi]);
    }

    let checks: Vec<CheckResult> = [gram, barg, conv, fourier]
        .into_iter()
        .map(|t| t.finish(tol))
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(SelftestReport {
        seed,
        tolerance: tol,
        checks,
        passed,
    })
}
