//! Discrete real sets `Λ`, their counting functions and order-2 densities, the
//! series `S(ε) = Σ |λ|^{-2-ε}`, dilations, and the rotated set `Γ = Λ ∪ iΛ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fit_through_origin, fmt_sig17, power_tail_sum, NeumaierSum};

/// Which half-lines a generated set occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignPattern {
    Positive,
    Negative,
    Symmetric,
}

impl SignPattern {
    pub fn has_positive(self) -> bool {
        matches!(self, SignPattern::Positive | SignPattern::Symmetric)
    }

    pub fn has_negative(self) -> bool {
        matches!(self, SignPattern::Negative | SignPattern::Symmetric)
    }

    fn flipped(self) -> Self {
        match self {
            SignPattern::Positive => SignPattern::Negative,
            SignPattern::Negative => SignPattern::Positive,
            SignPattern::Symmetric => SignPattern::Symmetric,
        }
    }

    fn signs(self) -> &'static [f64] {
        match self {
            SignPattern::Positive => &[1.0],
            SignPattern::Negative => &[-1.0],
            SignPattern::Symmetric => &[-1.0, 1.0],
        }
    }
}

impl std::str::FromStr for SignPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(SignPattern::Positive),
            "negative" => Ok(SignPattern::Negative),
            "symmetric" => Ok(SignPattern::Symmetric),
            other => Err(Error::invalid(format!(
                "unknown sign pattern {other:?} (expected positive, negative or symmetric)"
            ))),
        }
    }
}

/// How the points of a [`DiscreteSet`] were produced. The generator is what
/// lets the lab reason about the infinite set behind a finite truncation.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `±√(n/Δ)`, `1 ≤ n ≤ n_max` on each occupied side.
    SqrtGrid {
        delta_per_side: f64,
        pattern: SignPattern,
        n: usize,
    },
    /// `±n·step`, `1 ≤ n ≤ n_max`: an order-1 set with zero order-2 density.
    Arithmetic {
        step: f64,
        pattern: SignPattern,
        n: usize,
    },
    /// The smallest-modulus points of a generated set.
    Truncated { parent: Box<Generator>, keep: usize },
    /// A finite set with nothing behind it.
    Explicit,
}

impl Generator {
    fn scaled(&self, c: f64) -> Generator {
        let flip = |p: SignPattern| if c < 0.0 { p.flipped() } else { p };
        match self {
            Generator::SqrtGrid {
                delta_per_side,
                pattern,
                n,
            } => Generator::SqrtGrid {
                delta_per_side: delta_per_side / (c * c),
                pattern: flip(*pattern),
                n: *n,
            },
            Generator::Arithmetic { step, pattern, n } => Generator::Arithmetic {
                step: step * c.abs(),
                pattern: flip(*pattern),
                n: *n,
            },
            Generator::Truncated { parent, keep } => Generator::Truncated {
                parent: Box::new(parent.scaled(c)),
                keep: *keep,
            },
            Generator::Explicit => Generator::Explicit,
        }
    }

    /// Nominal order-2 density of each half, `(Δ(Λ⁺), Δ(Λ⁻))`.
    pub fn nominal_density(&self) -> (f64, f64) {
        match self {
            Generator::SqrtGrid {
                delta_per_side,
                pattern,
                ..
            } => (
                if pattern.has_positive() {
                    *delta_per_side
                } else {
                    0.0
                },
                if pattern.has_negative() {
                    *delta_per_side
                } else {
                    0.0
                },
            ),
            Generator::Truncated { parent, .. } => parent.nominal_density(),
            Generator::Arithmetic { .. } | Generator::Explicit => (0.0, 0.0),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Generator::SqrtGrid {
                delta_per_side,
                pattern,
                n,
            } => format!(
                "sqrt-grid with density {delta_per_side} per side, {pattern:?}, truncation {n}"
            ),
            Generator::Arithmetic { step, pattern, n } => {
                format!("arithmetic progression with step {step}, {pattern:?}, truncation {n}")
            }
            Generator::Truncated { parent, keep } => {
                format!("first {keep} points of {}", parent.describe())
            }
            Generator::Explicit => "explicit finite set".to_string(),
        }
    }
}

/// Tail sums `Σ λ^{-k}` and `Σ |λ|^{-k}` over the points a truncation omits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMoment {
    pub signed: f64,
    pub absolute: f64,
}

/// A finite truncation of a discrete set of nonzero reals, sorted by modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSet {
    points: Vec<f64>,
    generator: Generator,
}

impl DiscreteSet {
    /// An explicit finite set. Points are sorted by `(|λ|, λ)`; zero,
    /// non-finite and duplicate points are rejected.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        Self::with_generator(points, Generator::Explicit)
    }

    fn with_generator(mut points: Vec<f64>, generator: Generator) -> Result<Self> {
        if let Some(bad) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("point {bad} is not finite")));
        }
        if points.contains(&0.0) {
            return Err(Error::invalid(
                "0 cannot belong to the set (1/λ² and 1/λ⁴ are undefined there)",
            ));
        }
        points.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate point {}", w[0])));
        }
        Ok(DiscreteSet { points, generator })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// `N`: points per side for generated sets, the point count otherwise.
    pub fn truncation(&self) -> usize {
        match &self.generator {
            Generator::SqrtGrid { n, .. } | Generator::Arithmetic { n, .. } => *n,
            _ => self.points.len(),
        }
    }

    pub fn min_modulus(&self) -> Option<f64> {
        self.points.first().map(|x| x.abs())
    }

    /// `|λ_N|`, the largest modulus present.
    pub fn max_modulus(&self) -> Option<f64> {
        self.points.last().map(|x| x.abs())
    }

    /// `Λ⁺ = Λ ∩ (0, ∞)`.
    pub fn positive_part(&self) -> Vec<f64> {
        self.points.iter().copied().filter(|x| *x > 0.0).collect()
    }

    /// `Λ⁻ = Λ ∩ (-∞, 0)`.
    pub fn negative_part(&self) -> Vec<f64> {
        self.points.iter().copied().filter(|x| *x < 0.0).collect()
    }

    /// True when `λ ∈ Λ ⇒ -λ ∈ Λ`.
    pub fn is_symmetric(&self) -> bool {
        let pos = self.positive_part();
        let neg: Vec<f64> = self.negative_part().iter().map(|x| -x).collect();
        pos == neg
    }

    /// The `keep` smallest-modulus points.
    pub fn truncate(&self, keep: usize) -> Result<DiscreteSet> {
        if keep > self.points.len() {
            return Err(Error::Truncation(format!(
                "requested {keep} nodes from a set of {}",
                self.points.len()
            )));
        }
        if keep == self.points.len() {
            return Ok(self.clone());
        }
        let parent = match &self.generator {
            Generator::Truncated { parent, .. } => parent.clone(),
            g => Box::new(g.clone()),
        };
        Ok(DiscreteSet {
            points: self.points[..keep].to_vec(),
            generator: Generator::Truncated { parent, keep },
        })
    }

    /// Tail sums over the omitted points `n > N` of a generated set. `None`
    /// when the tail is unknown (partial truncations) or divergent.
    pub fn tail_moment(&self, k: u32) -> Option<TailMoment> {
        let (side, pattern) = match &self.generator {
            Generator::Explicit => {
                return Some(TailMoment {
                    signed: 0.0,
                    absolute: 0.0,
                })
            }
            Generator::Truncated { .. } => return None,
            Generator::SqrtGrid {
                delta_per_side,
                pattern,
                n,
            } => {
                let s = k as f64 / 2.0;
                let sum = power_tail_sum(s, *n as u64 + 1).ok()?;
                (delta_per_side.powf(s) * sum, *pattern)
            }
            Generator::Arithmetic { step, pattern, n } => {
                let sum = power_tail_sum(k as f64, *n as u64 + 1).ok()?;
                (step.powi(-(k as i32)) * sum, *pattern)
            }
        };
        let odd = k % 2 == 1;
        let mut signed = 0.0;
        let mut absolute = 0.0;
        if pattern.has_positive() {
            signed += side;
            absolute += side;
        }
        if pattern.has_negative() {
            signed += if odd { -side } else { side };
            absolute += side;
        }
        Some(TailMoment { signed, absolute })
    }

    /// JSON object `{generator, delta_per_side, pattern, n, points}` with points
    /// written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let (name, delta, pattern, extra) = match &self.generator {
            Generator::SqrtGrid {
                delta_per_side,
                pattern,
                ..
            } => (
                "sqrt-grid",
                Some(*delta_per_side),
                Some(*pattern),
                String::new(),
            ),
            Generator::Arithmetic { step, pattern, .. } => (
                "arithmetic",
                None,
                Some(*pattern),
                format!(",\"step\":{}", fmt_sig17(*step)),
            ),
            Generator::Truncated { parent, .. } => {
                let (d, p) = match parent.as_ref() {
                    Generator::SqrtGrid {
                        delta_per_side,
                        pattern,
                        ..
                    } => (Some(*delta_per_side), Some(*pattern)),
                    Generator::Arithmetic { pattern, .. } => (None, Some(*pattern)),
                    _ => (None, None),
                };
                ("truncated", d, p, String::new())
            }
            Generator::Explicit => ("explicit", None, None, String::new()),
        };
        let delta = delta.map_or("null".to_string(), fmt_sig17);
        let pattern = pattern.map_or("null".to_string(), |p| {
            serde_json::to_string(&p).expect("pattern serializes")
        });
        let points: Vec<String> = self.points.iter().map(|x| fmt_sig17(*x)).collect();
        format!(
            "{{\"generator\":\"{name}\",\"delta_per_side\":{delta},\"pattern\":{pattern},\"n\":{}{extra},\"points\":[{}]}}",
            self.truncation(),
            points.join(",")
        )
    }

    pub fn from_json(text: &str) -> Result<DiscreteSet> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            generator: String,
            delta_per_side: Option<f64>,
            pattern: Option<SignPattern>,
            n: usize,
            step: Option<f64>,
            points: Vec<f64>,
        }
        let w: Wire =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("set JSON: {e}")))?;
        let missing = |field: &str| {
            Error::invalid(format!("set JSON: {} requires field {field}", w.generator))
        };
        let generator = match w.generator.as_str() {
            "sqrt-grid" => Generator::SqrtGrid {
                delta_per_side: w.delta_per_side.ok_or_else(|| missing("delta_per_side"))?,
                pattern: w.pattern.ok_or_else(|| missing("pattern"))?,
                n: w.n,
            },
            "arithmetic" => Generator::Arithmetic {
                step: w.step.ok_or_else(|| missing("step"))?,
                pattern: w.pattern.ok_or_else(|| missing("pattern"))?,
                n: w.n,
            },
            "truncated" => Generator::Truncated {
                parent: Box::new(match (w.delta_per_side, w.pattern) {
                    (Some(d), Some(p)) => Generator::SqrtGrid {
                        delta_per_side: d,
                        pattern: p,
                        n: w.n,
                    },
                    _ => Generator::Explicit,
                }),
                keep: w.points.len(),
            },
            "explicit" => Generator::Explicit,
            other => return Err(Error::invalid(format!("unknown generator {other:?}"))),
        };
        DiscreteSet::with_generator(w.points, generator)
    }
}

/// `{s·√(n/Δ₀) : 1 ≤ n ≤ N}` on the sides selected by `pattern`.
pub fn generate_sqrt_set(
    delta_per_side: f64,
    pattern: SignPattern,
    n: usize,
) -> Result<DiscreteSet> {
    if !(delta_per_side > 0.0 && delta_per_side.is_finite()) {
        return Err(Error::invalid(format!(
            "density must be positive, got {delta_per_side}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("truncation N must be at least 1"));
    }
    let mut points = Vec::with_capacity(n * pattern.signs().len());
    for k in 1..=n {
        let r = (k as f64 / delta_per_side).sqrt();
        for s in pattern.signs() {
            points.push(s * r);
        }
    }
    DiscreteSet::with_generator(
        points,
        Generator::SqrtGrid {
            delta_per_side,
            pattern,
            n,
        },
    )
}

/// `{s·k·step : 1 ≤ k ≤ N}`, an order-1 comparison set.
pub fn generate_arithmetic_set(step: f64, pattern: SignPattern, n: usize) -> Result<DiscreteSet> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    if n == 0 {
        return Err(Error::invalid("truncation N must be at least 1"));
    }
    let mut points = Vec::with_capacity(n * pattern.signs().len());
    for k in 1..=n {
        for s in pattern.signs() {
            points.push(s * k as f64 * step);
        }
    }
    DiscreteSet::with_generator(points, Generator::Arithmetic { step, pattern, n })
}

/// `n_Λ(r) = |{λ : |λ| < r}|`.
pub fn counting_function(set: &DiscreteSet, r: f64) -> usize {
    set.points.partition_point(|x| x.abs() < r)
}

fn count_side(points: &[f64], r: f64, positive: bool) -> usize {
    points
        .iter()
        .take_while(|x| x.abs() < r)
        .filter(|x| (**x > 0.0) == positive)
        .count()
}

/// Least-squares estimate of `Δ(Λ) = lim n_Λ(r)/r²` over a radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
    pub counts_positive: Vec<usize>,
    pub counts_negative: Vec<usize>,
    pub estimate: f64,
    pub estimate_positive: f64,
    pub estimate_negative: f64,
    /// Standard error of the fitted slope.
    pub slope_std_error: f64,
    /// RMS of `n_Λ(r) - Δ̂ r²`, in points.
    pub rms_residual: f64,
    /// Experimental: max and min of `n_Λ(r)/r²` over the grid, the windowed
    /// stand-ins for upper and lower density.
    pub upper_ratio: f64,
    pub lower_ratio: f64,
}

pub fn density_estimate(set: &DiscreteSet, radii: &[f64]) -> Result<DensityReport> {
    let (lo, hi) = match (set.min_modulus(), set.max_modulus()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::invalid("density of an empty set")),
    };
    if radii.is_empty() {
        return Err(Error::invalid("radius grid is empty"));
    }
    for &r in radii {
        if !r.is_finite() || r < lo {
            return Err(Error::invalid(format!(
                "radius {r} lies below the smallest modulus {lo}"
            )));
        }
        if r > hi {
            return Err(Error::Truncation(format!(
                "radius {r} exceeds the largest modulus {hi}: beyond the truncation the count saturates"
            )));
        }
    }
    let xs: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let counts: Vec<usize> = radii.iter().map(|&r| counting_function(set, r)).collect();
    let counts_positive: Vec<usize> = radii
        .iter()
        .map(|&r| count_side(&set.points, r, true))
        .collect();
    let counts_negative: Vec<usize> = radii
        .iter()
        .map(|&r| count_side(&set.points, r, false))
        .collect();
    let as_f = |c: &[usize]| c.iter().map(|v| *v as f64).collect::<Vec<_>>();
    let fit = fit_through_origin(&xs, &as_f(&counts))
        .ok_or_else(|| Error::invalid("degenerate radius grid"))?;
    let fit_pos = fit_through_origin(&xs, &as_f(&counts_positive)).expect("same grid");
    let fit_neg = fit_through_origin(&xs, &as_f(&counts_negative)).expect("same grid");
    let ratios = counts.iter().zip(&xs).map(|(c, x)| *c as f64 / x);
    let upper_ratio = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
    let lower_ratio = ratios.fold(f64::INFINITY, f64::min);
    Ok(DensityReport {
        radii: radii.to_vec(),
        counts,
        counts_positive,
        counts_negative,
        estimate: fit.slope,
        estimate_positive: fit_pos.slope,
        estimate_negative: fit_neg.slope,
        slope_std_error: fit.slope_std_error,
        rms_residual: fit.rms,
        upper_ratio,
        lower_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesClass {
    Diverging,
    Converging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub epsilon: f64,
    pub partial_sum: f64,
    /// Sum of the omitted terms when the generator makes it finite and known.
    pub tail: Option<f64>,
    pub classification: SeriesClass,
}

/// Partial sum of `S(ε) = Σ |λ|^{-2-ε}` and the divergence class implied by
/// the generator: positive order-2 density means `S(0) = ∞` and `S(ε) < ∞`.
pub fn s_epsilon(set: &DiscreteSet, epsilon: f64) -> Result<SeriesReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!(
            "ε must be nonnegative, got {epsilon}"
        )));
    }
    let p = 2.0 + epsilon;
    let mut acc = NeumaierSum::default();
    for x in set.points.iter().rev() {
        acc.add(x.abs().powf(-p));
    }
    let (pos, neg) = set.generator.nominal_density();
    let classification = if pos + neg > 0.0 && epsilon == 0.0 {
        SeriesClass::Diverging
    } else {
        SeriesClass::Converging
    };
    let tail = match &set.generator {
        Generator::Explicit => Some(0.0),
        Generator::Truncated { .. } => None,
        Generator::SqrtGrid {
            delta_per_side,
            pattern,
            n,
        } => {
            let s = 1.0 + epsilon / 2.0;
            if epsilon == 0.0 {
                None
            } else {
                let per_side = delta_per_side.powf(s) * power_tail_sum(s, *n as u64 + 1)?;
                Some(per_side * pattern.signs().len() as f64)
            }
        }
        Generator::Arithmetic { step, pattern, n } => {
            let per_side = step.powf(-p) * power_tail_sum(p, *n as u64 + 1)?;
            Some(per_side * pattern.signs().len() as f64)
        }
    };
    Ok(SeriesReport {
        epsilon,
        partial_sum: acc.total(),
        tail,
        classification,
    })
}

/// `cΛ = {cλ}`. Counting forces `Δ(cΛ) = Δ(Λ)/c²`, which the generator
/// metadata records.
pub fn scale(set: &DiscreteSet, c: f64) -> Result<DiscreteSet> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::invalid(format!(
            "scale factor must be finite and nonzero, got {c}"
        )));
    }
    if c == 1.0 {
        return Ok(set.clone());
    }
    let points = set.points.iter().map(|x| c * x).collect();
    DiscreteSet::with_generator(points, set.generator.scaled(c))
}

/// Counts of points on the four coordinate rays and in the four open quadrants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SectorCounts {
    /// Rays `arg z = 0, π/2, π, 3π/2`.
    pub rays: [usize; 4],
    pub quadrants: [usize; 4],
}

#[derive(Debug, Clone, PartialEq)]
enum ZeroSource {
    Finite,
    Rotated(DiscreteSet),
}

/// A finite set of nonzero complex numbers sorted by modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexZeroSet {
    points: Vec<Complex64>,
    args: Vec<f64>,
    sectors: SectorCounts,
    source: ZeroSource,
}

/// Argument in `[0, 2π)`.
pub fn normalized_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        let b = a + 2.0 * PI;
        if b >= 2.0 * PI {
            0.0
        } else {
            b
        }
    } else {
        a
    }
}

impl ComplexZeroSet {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        Self::build(points, ZeroSource::Finite)
    }

    fn build(mut points: Vec<Complex64>, source: ZeroSource) -> Result<Self> {
        if points
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::invalid("zeros must be finite"));
        }
        if points.iter().any(|z| z.re == 0.0 && z.im == 0.0) {
            return Err(Error::invalid("0 cannot be a zero of a canonical product"));
        }
        points.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let args: Vec<f64> = points.iter().map(|z| normalized_arg(*z)).collect();
        let mut sectors = SectorCounts::default();
        for z in &points {
            match (z.re.partial_cmp(&0.0), z.im.partial_cmp(&0.0)) {
                (Some(std::cmp::Ordering::Greater), Some(std::cmp::Ordering::Equal)) => {
                    sectors.rays[0] += 1
                }
                (Some(std::cmp::Ordering::Equal), Some(std::cmp::Ordering::Greater)) => {
                    sectors.rays[1] += 1
                }
                (Some(std::cmp::Ordering::Less), Some(std::cmp::Ordering::Equal)) => {
                    sectors.rays[2] += 1
                }
                (Some(std::cmp::Ordering::Equal), Some(std::cmp::Ordering::Less)) => {
                    sectors.rays[3] += 1
                }
                _ => {
                    let q = match (z.re > 0.0, z.im > 0.0) {
                        (true, true) => 0,
                        (false, true) => 1,
                        (false, false) => 2,
                        (true, false) => 3,
                    };
                    sectors.quadrants[q] += 1;
                }
            }
        }
        Ok(ComplexZeroSet {
            points,
            args,
            sectors,
            source,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sectors(&self) -> SectorCounts {
        self.sectors
    }

    pub fn max_modulus(&self) -> Option<f64> {
        self.points.last().map(|z| z.norm())
    }

    /// The real set this was rotated from, when built by [`union_with_rotation`].
    pub fn real_source(&self) -> Option<&DiscreteSet> {
        match &self.source {
            ZeroSource::Rotated(s) => Some(s),
            ZeroSource::Finite => None,
        }
    }

    /// Invariant under `z ↦ iz` and `z ↦ z̄`.
    pub fn is_dihedral_symmetric(&self) -> bool {
        match &self.source {
            ZeroSource::Rotated(s) => s.is_symmetric(),
            ZeroSource::Finite => false,
        }
    }

    /// `(Σ γ^{-k}, Σ |γ|^{-k})` over the zeros a truncation omits.
    pub fn tail_moment(&self, k: u32) -> Option<(Complex64, f64)> {
        match &self.source {
            ZeroSource::Finite => Some((Complex64::new(0.0, 0.0), 0.0)),
            ZeroSource::Rotated(s) => {
                let m = s.tail_moment(k)?;
                // (iλ)^{-k} = i^{-k} λ^{-k}
                let i_pow = Complex64::i().powi(-(k as i32));
                Some((
                    (Complex64::new(1.0, 0.0) + i_pow) * m.signed,
                    2.0 * m.absolute,
                ))
            }
        }
    }

    /// `|{z ∈ Γ : |z| < r, arg z < θ}|`; a ray `arg z = kπ/2` counts once `θ`
    /// exceeds `kπ/2`.
    pub fn sector_count(&self, theta: f64, r: f64) -> usize {
        let end = self.points.partition_point(|z| z.norm() < r);
        self.args[..end].iter().filter(|a| **a < theta).count()
    }
}

/// `Γ = Λ ∪ iΛ`.
pub fn union_with_rotation(set: &DiscreteSet) -> Result<ComplexZeroSet> {
    if set.is_empty() {
        return Err(Error::invalid("cannot rotate an empty set"));
    }
    let mut points = Vec::with_capacity(2 * set.len());
    for &x in set.points() {
        points.push(Complex64::new(x, 0.0));
        points.push(Complex64::new(0.0, x));
    }
    ComplexZeroSet::build(points, ZeroSource::Rotated(set.clone()))
}

/// Angular density `lim |Γ ∩ {|z| < r, arg z < θ}| / r²`, fitted over a radius grid.
pub fn angular_density(gamma: &ComplexZeroSet, theta: f64, radii: &[f64]) -> Result<f64> {
    if !(0.0..2.0 * PI).contains(&theta) {
        return Err(Error::invalid(format!("θ = {theta} is outside [0, 2π)")));
    }
    let hi = gamma
        .max_modulus()
        .ok_or_else(|| Error::invalid("empty zero set"))?;
    if radii.is_empty() {
        return Err(Error::invalid("radius grid is empty"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || **r > hi) {
        return Err(Error::Truncation(format!(
            "radius {r} lies outside (0, {hi}], the range the truncation supports"
        )));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let ys: Vec<f64> = radii
        .iter()
        .map(|&r| gamma.sector_count(theta, r) as f64)
        .collect();
    Ok(fit_through_origin(&xs, &ys).expect("positive radii").slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSumReport {
    pub radii: Vec<f64>,
    pub sums: Vec<Complex64>,
    pub max_modulus: f64,
}

/// `Σ_{|γ| < r} γ^{-2}` at each grid radius.
///
/// The running sum is taken in modulus order, so the four rotations `±λ, ±iλ`
/// of a modulus enter consecutively and their exact negatives cancel exactly.
pub fn pair_sum_check(gamma: &ComplexZeroSet, radii: &[f64]) -> PairSumReport {
    let inv_sq: Vec<Complex64> = gamma.points.iter().map(|z| (z * z).inv()).collect();
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let mut sums = vec![Complex64::new(0.0, 0.0); radii.len()];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut next = 0;
    for i in order {
        let r = radii[i];
        while next < gamma.points.len() && gamma.points[next].norm() < r {
            acc += inv_sq[next];
            next += 1;
        }
        sums[i] = acc;
    }
    let max_modulus = sums.iter().map(|s| s.norm()).fold(0.0, f64::max);
    PairSumReport {
        radii: radii.to_vec(),
        sums,
        max_modulus,
    }
}
