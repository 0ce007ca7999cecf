//! Composite Gauss–Legendre quadrature with global adaptive bisection.
//!
//! Every panel carries three rule applications: the whole panel and its two
//! halves. The halves are the accepted value and the difference to the whole
//! is the error estimate. Splitting a panel reuses its halves as the "whole"
//! estimates of the children, so each refinement costs two rule applications.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::logsum::NeumaierSum;
use crate::error::{Error, Result};

const GL_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 16;

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Fraction of `abs_tol` the truncated Gaussian tails may contribute.
    pub tail_fraction: f64,
    /// Maximum bisection depth of any panel.
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            tail_fraction: 0.1,
            max_depth: 40,
        }
    }
}

impl QuadratureSpec {
    /// Purely relative accuracy, for integrals whose magnitude is not known in advance.
    pub fn relative(rel_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol: 1e-290,
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::invalid(
                "quadrature tolerances must be strictly positive",
            ));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::invalid("tail fraction must lie in (0, 1]"));
        }
        if self.max_depth < 1 {
            return Err(Error::invalid("subdivision limit must be at least 1"));
        }
        Ok(())
    }
}

/// Gaussian tail certificate: `|f(t)| ≤ constant · e^{-rate (t - center)²}`
/// whenever `|t - center| ≥ radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub constant: f64,
    pub rate: f64,
    pub center: f64,
    pub radius: f64,
}

impl DecayEnvelope {
    pub fn new(constant: f64, rate: f64, center: f64, radius: f64) -> Result<Self> {
        if !(constant >= 0.0 && constant.is_finite()) {
            return Err(Error::invalid(
                "envelope constant must be finite and nonnegative",
            ));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::invalid("envelope decay rate must be positive"));
        }
        if !(radius >= 0.0 && center.is_finite()) {
            return Err(Error::invalid("envelope radius must be nonnegative"));
        }
        Ok(DecayEnvelope {
            constant,
            rate,
            center,
            radius,
        })
    }

    /// Bound on the mass of the envelope outside `|t - center| < r`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        if self.constant == 0.0 {
            return 0.0;
        }
        // ∫_r^∞ e^{-c s²} ds ≤ e^{-c r²} / (2 c r), both sides.
        self.constant * (-self.rate * r * r).exp() / (self.rate * r)
    }

    /// Smallest radius (not below `self.radius`) whose tail mass is at most `target`.
    pub fn truncation_radius(&self, target: f64) -> f64 {
        let mut r = self.radius.max(1.0 / self.rate.sqrt());
        if self.tail_mass(r) <= target {
            return r;
        }
        for _ in 0..64 {
            let arg = (self.constant / (self.rate * r * target)).ln();
            let next = (arg.max(0.0) / self.rate).sqrt().max(self.radius);
            if (next - r).abs() <= 1e-12 * r {
                r = next;
                break;
            }
            r = next;
        }
        while self.tail_mass(r) > target {
            r *= 1.0 + 1e-6;
        }
        r
    }
}

fn gl_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// One Gauss–Legendre application: (integral, integral of |f|).
fn gl_apply<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (nodes, weights) = gl_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "integrand not finite at t = {}",
                mid + half * x
            )));
        }
        sum += w * v;
        abs += w * v.abs();
    }
    Ok((sum * half, abs * half.abs()))
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    left: f64,
    right: f64,
    abs: f64,
    err: f64,
}

impl Panel {
    fn build<F>(f: &mut F, a: f64, b: f64, whole: f64, depth: u32) -> Result<Panel>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let m = 0.5 * (a + b);
        let (left, abs_l) = gl_apply(f, a, m)?;
        let (right, abs_r) = gl_apply(f, m, b)?;
        Ok(Panel {
            a,
            b,
            depth,
            left,
            right,
            abs: abs_l + abs_r,
            err: (whole - left - right).abs(),
        })
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Global adaptive integration over the panels delimited by `edges` (sorted).
pub(crate) fn adaptive<F>(mut f: F, edges: &[f64], spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (whole, _) = gl_apply(&mut f, a, b)?;
        heap.push(Panel::build(&mut f, a, b, whole, 0)?);
    }
    if heap.is_empty() {
        return Ok(0.0);
    }
    let tolerance = |total: f64, abs: f64| {
        let roundoff = 64.0 * f64::EPSILON * abs;
        spec.abs_tol.max(spec.rel_tol * total.abs()).max(roundoff)
    };
    let (mut total, mut err, mut abs) = totals(&heap);
    loop {
        if err <= tolerance(total, abs) {
            // Running sums drift; confirm with an ordered recomputation.
            let exact = totals(&heap);
            (total, err, abs) = exact;
            if err <= tolerance(total, abs) {
                return Ok(total);
            }
        }
        let worst = *heap.peek().expect("nonempty heap");
        if worst.depth >= spec.max_depth || heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: err,
                panels: heap.len(),
            });
        }
        heap.pop();
        let m = 0.5 * (worst.a + worst.b);
        let left = Panel::build(&mut f, worst.a, m, worst.left, worst.depth + 1)?;
        let right = Panel::build(&mut f, m, worst.b, worst.right, worst.depth + 1)?;
        total += left.value() + right.value() - worst.value();
        err += left.err + right.err - worst.err;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
    }
}

/// Value, error and absolute mass summed in left-to-right panel order.
fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = NeumaierSum::default();
    let mut err = 0.0;
    let mut abs = 0.0;
    for p in panels {
        value.add(p.value());
        err += p.err;
        abs += p.abs;
    }
    (value.total(), err, abs)
}

fn linspace_edges(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    let pieces = pieces.max(1);
    (0..=pieces)
        .map(|i| {
            if i == pieces {
                b
            } else {
                a + (b - a) * (i as f64 / pieces as f64)
            }
        })
        .collect()
}

/// Integral of `f` over `[a, b]`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_interval_panels(|t| Ok(f(t)), a, b, 4, spec)
}

pub(crate) fn integrate_interval_panels<F>(
    f: F,
    a: f64,
    b: f64,
    pieces: usize,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("interval endpoints must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_interval_panels(f, b, a, pieces, spec).map(|v| -v);
    }
    adaptive(f, &linspace_edges(a, b, pieces), spec)
}

/// Integral of `f` over the real line, truncated where the envelope certifies
/// that the tails contribute less than `tail_fraction · abs_tol`.
pub fn integrate_real_line<F>(f: F, envelope: &DecayEnvelope, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_real_line_with_breaks(f, envelope, &[], spec)
}

/// As [`integrate_real_line`], with panel edges forced at the given
/// breakpoints (jump discontinuities of the integrand).
pub fn integrate_real_line_with_breaks<F>(
    f: F,
    envelope: &DecayEnvelope,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let r = envelope.truncation_radius(spec.abs_tol * spec.tail_fraction);
    let lo = envelope.center - r;
    let hi = envelope.center + r;
    // Panels no wider than about half a decay length.
    let pieces = ((hi - lo) * envelope.rate.sqrt() * 2.0).ceil().max(4.0) as usize;
    let mut edges = linspace_edges(lo, hi, pieces);
    edges.extend(breaks.iter().copied().filter(|t| *t > lo && *t < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    adaptive(|t| Ok(f(t)), &edges, spec)
}

/// Rotational symmetry of a nonnegative integrand on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularSymmetry {
    None,
    /// Invariant under `z ↦ iz` and `z ↦ z̄`; the angular integral is eight
    /// times the integral over `[0, π/4]`.
    Dihedral4,
}

impl AngularSymmetry {
    fn range(self) -> (f64, f64, usize) {
        match self {
            AngularSymmetry::None => (2.0 * PI, 1.0, 16),
            AngularSymmetry::Dihedral4 => (PI / 4.0, 8.0, 4),
        }
    }
}

/// Polar-coordinates integral of `f` over the closed disc `|z| ≤ radius`.
pub fn integrate_disc<F>(f: F, radius: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("disc radius must be positive"));
    }
    spec.validate()?;
    // The radial integrand is r · (angular integral); keep the inner absolute
    // tolerance small enough that it cannot dominate the outer one.
    let inner = QuadratureSpec {
        abs_tol: spec.abs_tol / (radius * radius).max(1.0),
        ..*spec
    };
    integrate_interval_panels(
        |r| {
            if r == 0.0 {
                return Ok(0.0);
            }
            let ang = integrate_interval_panels(
                |t| Ok(f(Complex64::from_polar(r, t))),
                0.0,
                2.0 * PI,
                16,
                &inner,
            )?;
            Ok(r * ang)
        },
        0.0,
        radius,
        4,
        spec,
    )
}

/// Natural log of `∫_{r_in < |z| < r_out} e^{log_f(z)} dm(z)`.
///
/// Both quadrature levels rescale by a sampled maximum before exponentiating,
/// so integrands whose logarithm exceeds the `f64` exponent range are fine as
/// long as the log itself is finite or `-∞`.
pub fn integrate_annulus_log<F>(
    log_f: F,
    r_in: f64,
    r_out: f64,
    symmetry: AngularSymmetry,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    if !(r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
        return Err(Error::invalid("annulus needs 0 ≤ r_in < r_out < ∞"));
    }
    spec.validate()?;
    let (span, mult, pieces) = symmetry.range();
    let inner_spec = QuadratureSpec {
        abs_tol: 1e-290,
        ..*spec
    };
    let log_angular = |r: f64| -> Result<f64> {
        if r == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let shift = sampled_max(
            |i, n| log_f(Complex64::from_polar(r, span * (i as f64 + 0.5) / n as f64)),
            64,
        );
        if shift == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let v = integrate_interval_panels(
            |t| Ok((log_f(Complex64::from_polar(r, t)) - shift).exp()),
            0.0,
            span,
            pieces,
            &inner_spec,
        )?;
        Ok(if v > 0.0 {
            shift + (mult * v).ln()
        } else {
            f64::NEG_INFINITY
        })
    };
    let mut sample_err = None;
    let shift = sampled_max(
        |i, n| {
            let r = r_in + (r_out - r_in) * (i as f64 + 0.5) / n as f64;
            match log_angular(r) {
                Ok(v) => r.ln() + v,
                Err(e) => {
                    sample_err = Some(e);
                    f64::NEG_INFINITY
                }
            }
        },
        16,
    );
    if let Some(e) = sample_err {
        return Err(e);
    }
    if shift == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let v = integrate_interval_panels(
        |r| {
            if r == 0.0 {
                return Ok(0.0);
            }
            Ok((r.ln() + log_angular(r)? - shift).exp())
        },
        r_in,
        r_out,
        4,
        &inner_spec,
    )?;
    Ok(if v > 0.0 {
        shift + v.ln()
    } else {
        f64::NEG_INFINITY
    })
}

fn sampled_max<G>(mut g: G, n: usize) -> f64
where
    G: FnMut(usize, usize) -> f64,
{
    (0..n)
        .map(|i| g(i, n))
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max)
}
