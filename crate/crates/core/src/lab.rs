//! Finite-section experiments: Gram systems of Gaussian translates, squared
//! distances from a target to their span, residual curves in `N`, and the
//! density sweep.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{inner_product, GaussianFn};
use crate::lambda_sets::{generate_sqrt_set, scale, DiscreteSet, SignPattern};
use crate::numerics::spectral::sorted_eigen;
use crate::numerics::{fmt_sig17, spd_truncated_solve, SpectralSolveReport, DEFAULT_CUTOFF};

/// Clips of a negative `d²` larger than this fail the run.
pub const MAX_CLIP: f64 = 1e-8;

/// A finite linear combination `Σ c_k g_k` of Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Target {
    pub terms: Vec<(f64, GaussianFn)>,
}

impl From<GaussianFn> for Target {
    fn from(g: GaussianFn) -> Self {
        Target {
            terms: vec![(1.0, g)],
        }
    }
}

impl Target {
    /// `φ(· - shift)`, the default target at `shift = 0.5`.
    pub fn translate(shift: f64) -> Self {
        GaussianFn::translate(shift).into()
    }

    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for (c, g) in &self.terms {
            for (d, h) in &self.terms {
                s += c * d * inner_product(g, h);
            }
        }
        s
    }

    /// `⟨f, φ(· - λ)⟩`.
    pub fn inner_with_translate(&self, lambda: f64) -> f64 {
        let phi = GaussianFn::translate(lambda);
        self.terms
            .iter()
            .map(|(c, g)| c * inner_product(g, &phi))
            .sum()
    }

    fn shifted(&self, tau: f64) -> Self {
        Target {
            terms: self
                .terms
                .iter()
                .map(|(c, g)| (*c, g.shifted(tau)))
                .collect(),
        }
    }
}

/// `G_ij = ⟨φ_{λ_i}, φ_{λ_j}⟩`, `b_i = ⟨f, φ_{λ_i}⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSystem {
    pub nodes: Vec<f64>,
    pub matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
    pub target: Target,
    pub target_norm_sq: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Ratio of extreme eigenvalues retained at the default cutoff.
    pub condition_estimate: f64,
    pub retained_rank: usize,
}

pub fn build_gram(nodes: &[f64], target: &Target) -> Result<GramSystem> {
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("nodes must be finite"));
    }
    let mut sorted = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("nodes must be distinct"));
    }
    let n = nodes.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            FRAC_1_SQRT_2
        } else {
            let d = nodes[i] - nodes[j];
            FRAC_1_SQRT_2 * (-std::f64::consts::PI * d * d / 2.0).exp()
        }
    });
    let rhs: Vec<f64> = nodes
        .iter()
        .map(|&l| target.inner_with_translate(l))
        .collect();
    let (min_eigenvalue, max_eigenvalue, condition_estimate, retained_rank) = if n == 0 {
        (0.0, 0.0, f64::INFINITY, 0)
    } else {
        let (values, _) = sorted_eigen(&matrix)?;
        let max = values[0];
        let min = *values.last().expect("nonempty");
        let kept: Vec<f64> = values
            .iter()
            .copied()
            .filter(|v| *v > DEFAULT_CUTOFF * max)
            .collect();
        let cond = kept.last().map_or(f64::INFINITY, |s| max / s);
        (min, max, cond, kept.len())
    };
    Ok(GramSystem {
        nodes: nodes.to_vec(),
        matrix,
        rhs,
        target_norm_sq: target.norm_sq(),
        target: target.clone(),
        min_eigenvalue,
        max_eigenvalue,
        condition_estimate,
        retained_rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `d² = ‖f‖² - bᵀx`, clipped to `[0, ‖f‖²]`.
    pub residual_sq: f64,
    pub raw_residual_sq: f64,
    /// Amount removed by the clip.
    pub clip: f64,
    pub solve: SpectralSolveReport,
    pub degenerate: bool,
}

/// Squared distance from the target to the span of the nodes.
///
/// The truncated spectral solution is an actual element of the span, so `d²`
/// is the exact squared distance to that element and bounds the true distance
/// from above.
pub fn project(system: &GramSystem, cutoff: f64) -> Result<Projection> {
    let solve = spd_truncated_solve(&system.matrix, &system.rhs, cutoff)?;
    let norm = system.target_norm_sq;
    if solve.degenerate {
        return Ok(Projection {
            residual_sq: norm,
            raw_residual_sq: norm,
            clip: 0.0,
            solve,
            degenerate: true,
        });
    }
    let raw = norm - solve.projected_energy;
    let (residual_sq, clip) = if raw < 0.0 {
        (0.0, -raw)
    } else {
        (raw.min(norm), 0.0)
    };
    if clip > MAX_CLIP {
        return Err(Error::Numeric(format!(
            "negative squared residual {raw:e}: the solve lost more than {MAX_CLIP:e}"
        )));
    }
    Ok(Projection {
        residual_sq,
        raw_residual_sq: raw,
        clip,
        solve,
        degenerate: false,
    })
}

/// `N ↦ d²(f, span{φ_λ : λ among the N smallest-modulus points})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCurve {
    pub schedule: Vec<usize>,
    /// Running minimum of the clipped residuals: each entry is the distance to
    /// the best element found in a nested span, so it is non-increasing.
    pub residual_sq: Vec<f64>,
    /// Clipped residuals of each truncation on its own.
    pub raw_residual_sq: Vec<f64>,
    pub retained: Vec<usize>,
    pub clips: Vec<f64>,
    pub cutoff: f64,
    pub target_norm_sq: f64,
    /// Largest increase of the raw residuals along the schedule.
    pub max_raw_increase: f64,
}

impl ResidualCurve {
    pub fn terminal(&self) -> f64 {
        *self.residual_sq.last().expect("schedule is nonempty")
    }
}

pub fn residual_curve(
    set: &DiscreteSet,
    target: &Target,
    schedule: &[usize],
    cutoff: f64,
) -> Result<ResidualCurve> {
    if schedule.is_empty() {
        return Err(Error::invalid("schedule is empty"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("schedule must be strictly increasing"));
    }
    let mut curve = ResidualCurve {
        schedule: schedule.to_vec(),
        residual_sq: vec![],
        raw_residual_sq: vec![],
        retained: vec![],
        clips: vec![],
        cutoff,
        target_norm_sq: target.norm_sq(),
        max_raw_increase: 0.0,
    };
    let mut best = f64::INFINITY;
    for &n in schedule {
        let nodes = set.truncate(n)?;
        let p = project(&build_gram(nodes.points(), target)?, cutoff)?;
        if let Some(prev) = curve.raw_residual_sq.last() {
            curve.max_raw_increase = curve.max_raw_increase.max(p.residual_sq - prev);
        }
        best = best.min(p.residual_sq);
        curve.residual_sq.push(best);
        curve.raw_residual_sq.push(p.residual_sq);
        curve.retained.push(p.solve.retained);
        curve.clips.push(p.clip);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub delta: f64,
    pub n_max: usize,
    pub residual_sq: f64,
    pub retained_rank: usize,
    pub cutoff: f64,
    /// Largest clip over the curve.
    pub clip: f64,
    /// Solver noise in the terminal `d²`: its change when the cutoff is
    /// raised tenfold, floored at the rounding level `64·ε·N·‖f‖²`.
    pub noise: f64,
    pub curve: ResidualCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTable {
    pub pattern: SignPattern,
    pub target: Target,
    pub cutoff: f64,
    pub rows: Vec<PhaseRow>,
    /// Largest `d²(Δ_{j+1}) - d²(Δ_j)` over increasing `Δ`; non-positive when ordered.
    pub max_increase_in_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub deltas: Vec<f64>,
    pub pattern: SignPattern,
    pub n_max: usize,
    pub schedule: Vec<usize>,
    pub target: Target,
    pub cutoff: f64,
}

/// Default schedule: `10, 20, 40, …` below `n_max`, then `n_max`.
pub fn default_schedule(n_max: usize) -> Vec<usize> {
    let mut s: Vec<usize> = [10, 20, 40].into_iter().filter(|n| *n < n_max).collect();
    s.push(n_max);
    s
}

/// The first `n_max` points by modulus of a sqrt grid with the given pattern.
pub fn nodes_for(delta: f64, pattern: SignPattern, n_max: usize) -> Result<DiscreteSet> {
    let per_side = match pattern {
        SignPattern::Symmetric => n_max.div_ceil(2),
        _ => n_max,
    };
    generate_sqrt_set(delta, pattern, per_side.max(1))?.truncate(n_max)
}

pub fn phase_transition_experiment(cfg: &PhaseConfig) -> Result<PhaseTable> {
    if cfg.deltas.is_empty() {
        return Err(Error::invalid("density grid is empty"));
    }
    if cfg.schedule.last() != Some(&cfg.n_max) {
        return Err(Error::invalid("schedule must end at n_max"));
    }
    let rows: Vec<Result<PhaseRow>> = cfg
        .deltas
        .par_iter()
        .map(|&delta| {
            let set = nodes_for(delta, cfg.pattern, cfg.n_max)?;
            let curve = residual_curve(&set, &cfg.target, &cfg.schedule, cfg.cutoff)?;
            let noise = terminal_noise(&set, &cfg.target, cfg.n_max, cfg.cutoff, &curve)?;
            Ok(PhaseRow {
                delta,
                n_max: cfg.n_max,
                residual_sq: curve.terminal(),
                retained_rank: *curve.retained.last().expect("nonempty"),
                cutoff: cfg.cutoff,
                clip: curve.clips.iter().copied().fold(0.0, f64::max),
                noise,
                curve,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut by_delta: Vec<&PhaseRow> = rows.iter().collect();
    by_delta.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let max_increase_in_delta = by_delta
        .windows(2)
        .map(|w| w[1].residual_sq - w[0].residual_sq)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PhaseTable {
        pattern: cfg.pattern,
        target: cfg.target.clone(),
        cutoff: cfg.cutoff,
        rows,
        max_increase_in_delta,
    })
}

fn terminal_noise(
    set: &DiscreteSet,
    target: &Target,
    n_max: usize,
    cutoff: f64,
    curve: &ResidualCurve,
) -> Result<f64> {
    let floor = 64.0 * f64::EPSILON * n_max as f64 * curve.target_norm_sq;
    let coarse = (cutoff * 10.0).min(0.5);
    let system = build_gram(set.truncate(n_max)?.points(), target)?;
    let other = project(&system, coarse)?.residual_sq;
    let own = *curve.raw_residual_sq.last().expect("nonempty");
    Ok((other - own).abs().max(floor))
}

impl PhaseTable {
    pub fn write_csv<W: Write>(&self, mut w: W, header: &str) -> io::Result<()> {
        writeln!(w, "{header}")?;
        writeln!(w, "delta,n_max,residual_sq,retained_rank,cutoff,clip")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_sig17(r.delta),
                r.n_max,
                fmt_sig17(r.residual_sq),
                r.retained_rank,
                fmt_sig17(r.cutoff),
                fmt_sig17(r.clip)
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("phase table serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub a: f64,
    pub original_density: (f64, f64),
    pub scaled_density: (f64, f64),
    pub original: ResidualCurve,
    pub scaled: ResidualCurve,
}

/// Residual curves of `Λ` and of `Λ/√a`, whose density is `a` times larger.
pub fn l1_transfer_experiment(
    set: &DiscreteSet,
    a: f64,
    target: &Target,
    schedule: &[usize],
    cutoff: f64,
) -> Result<TransferReport> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(Error::invalid(format!("a must exceed 1, got {a}")));
    }
    let scaled = scale(set, 1.0 / a.sqrt())?;
    Ok(TransferReport {
        a,
        original_density: set.generator().nominal_density(),
        scaled_density: scaled.generator().nominal_density(),
        original: residual_curve(set, target, schedule, cutoff)?,
        scaled: residual_curve(&scaled, target, schedule, cutoff)?,
    })
}

/// Shifts nodes and target together.
pub fn translated_system(nodes: &[f64], target: &Target, tau: f64) -> Result<GramSystem> {
    let moved: Vec<f64> = nodes.iter().map(|x| x + tau).collect();
    build_gram(&moved, &target.shifted(tau))
}
