use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{required, Angle, ExperimentConfig, Window};
use crate::bargmann::{bargmann_gaussian_translate, fock_norm_trend, real_line_identity_check};
use crate::error::{Error, Result};
use crate::gaussian::{convolution_identity_check, envelope_fit, GaussianFn};
use crate::lab::{
    build_gram, default_schedule, l1_transfer_experiment, nodes_for, phase_transition_experiment,
    project, residual_curve, PhaseConfig, Target,
};
use crate::lambda_sets::{
    density_estimate, generate_sqrt_set, s_epsilon, scale, union_with_rotation, DiscreteSet,
    SignPattern,
};
use crate::numerics::{fmt_sig17, QuadratureSpec, DEFAULT_CUTOFF};
use crate::products::{
    fock_membership_probe, indicator_estimate, probe_product, write_indicator_csv,
    CanonicalProduct, Construction, TailPolicy, DEFAULT_EXCLUSION, DEFAULT_INDICATOR_SAMPLES,
};
use crate::VERSION;

pub(super) fn dispatch(name: &str, cfg: ExperimentConfig) -> Result<()> {
    match name {
        "density" => density(cfg),
        "sums" => sums(cfg),
        "gram" => gram(cfg),
        "project" => project_cmd(cfg),
        "curve" => curve(cfg),
        "phase" => phase(cfg),
        "indicator" => indicator(cfg),
        "probe" => probe(cfg),
        "bargmann-check" => bargmann_check(cfg),
        "conv-check" => conv_check(cfg),
        "envelope" => envelope(cfg),
        _ => Err(Error::invalid(format!("unknown subcommand {name}"))),
    }
}

fn header(name: &str, cfg: &ExperimentConfig) -> String {
    format!("# {VERSION} command={name} config={}", cfg.to_json_line())
}

/// Writes the CSV text to `--out` or stdout, and the JSON document to `--json`.
fn emit(name: &str, cfg: &ExperimentConfig, csv: String, result: Value) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, csv.as_bytes())
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(csv.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::invalid(format!("cannot write to stdout: {e}")))?;
        }
    }
    if let Some(path) = &cfg.json {
        let doc = json!({
            "version": VERSION,
            "command": name,
            "config": cfg,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc).expect("json document serializes");
        std::fs::write(path, format!("{text}\n"))
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn csv_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn f(x: f64) -> String {
    fmt_sig17(x)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_sig17)
}

fn target_of(cfg: &mut ExperimentConfig) -> Target {
    Target::translate(*cfg.target_shift.get_or_insert(0.5))
}

fn check_cutoff(c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!(
            "cutoff must lie in (0, 1), got {c}"
        )));
    }
    Ok(c)
}

/// The sqrt grid named by `delta`, `pattern`, `n`, dilated by `scale` if set.
fn generated_set(
    cfg: &mut ExperimentConfig,
    pattern: SignPattern,
    n: usize,
) -> Result<DiscreteSet> {
    let delta = required(&cfg.delta, "delta")?;
    let pattern = *cfg.pattern.get_or_insert(pattern);
    let n = *cfg.n.get_or_insert(n);
    let set = generate_sqrt_set(delta, pattern, n)?;
    match cfg.scale {
        Some(c) => scale(&set, c),
        None => Ok(set),
    }
}

fn density(mut cfg: ExperimentConfig) -> Result<()> {
    let set = generated_set(&mut cfg, SignPattern::Positive, 10_000)?;
    let hi = set.max_modulus().expect("nonempty");
    let lo = set.min_modulus().expect("nonempty");
    let radii = cfg
        .radii
        .get_or_insert_with(|| (1..=16).map(|k| lo.max(hi * k as f64 / 16.0)).collect())
        .clone();
    let rep = density_estimate(&set, &radii)?;
    let mut csv = header("density", &cfg) + "\n";
    csv.push_str("radius,count,count_positive,count_negative,ratio\n");
    for i in 0..rep.radii.len() {
        let r = rep.radii[i];
        csv_row(
            &mut csv,
            &[
                f(r),
                rep.counts[i].to_string(),
                rep.counts_positive[i].to_string(),
                rep.counts_negative[i].to_string(),
                f(rep.counts[i] as f64 / (r * r)),
            ],
        );
    }
    let (pos, neg) = set.generator().nominal_density();
    eprintln!(
        "density estimate {:.6} (positive {:.6}, negative {:.6}); nominal {:.6}",
        rep.estimate,
        rep.estimate_positive,
        rep.estimate_negative,
        pos + neg
    );
    let result = json!({
        "radii": rep.radii, "counts": rep.counts, "counts_positive": rep.counts_positive,
        "counts_negative": rep.counts_negative, "estimate": rep.estimate,
        "estimate_positive": rep.estimate_positive, "estimate_negative": rep.estimate_negative,
        "slope_std_error": rep.slope_std_error, "rms_residual": rep.rms_residual,
        "upper_ratio": rep.upper_ratio, "lower_ratio": rep.lower_ratio, "nominal": [pos, neg],
    });
    emit("density", &cfg, csv, result)
}

fn sums(mut cfg: ExperimentConfig) -> Result<()> {
    let set = generated_set(&mut cfg, SignPattern::Positive, 10_000)?;
    let eps = cfg
        .epsilons
        .get_or_insert_with(|| vec![0.0, 0.5, 1.0])
        .clone();
    let reports = eps
        .iter()
        .map(|&e| s_epsilon(&set, e))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = header("sums", &cfg) + "\n";
    csv.push_str("epsilon,partial_sum,tail,classification\n");
    for r in &reports {
        let class = serde_json::to_value(r.classification).expect("enum serializes");
        csv_row(
            &mut csv,
            &[
                f(r.epsilon),
                f(r.partial_sum),
                opt(r.tail),
                class.as_str().unwrap_or_default().to_string(),
            ],
        );
    }
    emit("sums", &cfg, csv, json!(reports))
}

fn gram(mut cfg: ExperimentConfig) -> Result<()> {
    let delta = required(&cfg.delta, "delta")?;
    let pattern = *cfg.pattern.get_or_insert(SignPattern::Positive);
    let n = *cfg.n.get_or_insert(10);
    let target = target_of(&mut cfg);
    let set = nodes_for(delta, pattern, n)?;
    let sys = build_gram(set.points(), &target)?;
    let mut csv = header("gram", &cfg) + "\n";
    let mut cols = vec!["i".to_string(), "node".into(), "rhs".into()];
    cols.extend((0..n).map(|j| format!("g_{j}")));
    csv_row(&mut csv, &cols);
    for i in 0..n {
        let mut row = vec![i.to_string(), f(sys.nodes[i]), f(sys.rhs[i])];
        row.extend((0..n).map(|j| f(sys.matrix[(i, j)])));
        csv_row(&mut csv, &row);
    }
    eprintln!(
        "eigenvalues in [{:e}, {:e}], condition estimate {:e}, rank {} at cutoff {:e}",
        sys.min_eigenvalue,
        sys.max_eigenvalue,
        sys.condition_estimate,
        sys.retained_rank,
        DEFAULT_CUTOFF
    );
    let result = json!({
        "nodes": sys.nodes, "rhs": sys.rhs, "target_norm_sq": sys.target_norm_sq,
        "min_eigenvalue": sys.min_eigenvalue, "max_eigenvalue": sys.max_eigenvalue,
        "condition_estimate": sys.condition_estimate, "retained_rank": sys.retained_rank,
    });
    emit("gram", &cfg, csv, result)
}

fn project_cmd(mut cfg: ExperimentConfig) -> Result<()> {
    let delta = required(&cfg.delta, "delta")?;
    let pattern = *cfg.pattern.get_or_insert(SignPattern::Symmetric);
    let n = *cfg.n.get_or_insert(60);
    let cutoff = check_cutoff(*cfg.cutoff.get_or_insert(DEFAULT_CUTOFF))?;
    let target = target_of(&mut cfg);
    let set = nodes_for(delta, pattern, n)?;
    let sys = build_gram(set.points(), &target)?;
    let p = project(&sys, cutoff)?;
    let mut csv = header("project", &cfg) + "\n";
    csv.push_str("n,residual_sq,raw_residual_sq,clip,retained_rank,smallest_retained,condition_estimate,target_norm_sq\n");
    csv_row(
        &mut csv,
        &[
            n.to_string(),
            f(p.residual_sq),
            f(p.raw_residual_sq),
            f(p.clip),
            p.solve.retained.to_string(),
            opt(p.solve.smallest_retained),
            f(p.solve.condition_estimate),
            f(sys.target_norm_sq),
        ],
    );
    let result = json!({
        "nodes": sys.nodes, "residual_sq": p.residual_sq, "raw_residual_sq": p.raw_residual_sq,
        "clip": p.clip, "retained": p.solve.retained, "coefficients": p.solve.solution,
        "eigenvalues": p.solve.eigenvalues, "degenerate": p.degenerate,
    });
    emit("project", &cfg, csv, result)
}

fn curve(mut cfg: ExperimentConfig) -> Result<()> {
    let delta = required(&cfg.delta, "delta")?;
    let pattern = *cfg.pattern.get_or_insert(SignPattern::Symmetric);
    let n_max = *cfg.nmax.get_or_insert(60);
    let schedule = cfg
        .schedule
        .get_or_insert_with(|| default_schedule(n_max))
        .clone();
    let cutoff = check_cutoff(*cfg.cutoff.get_or_insert(DEFAULT_CUTOFF))?;
    let target = target_of(&mut cfg);
    let set = nodes_for(delta, pattern, n_max)?;
    let mut csv = header("curve", &cfg) + "\n";
    let result = match cfg.a.clone() {
        Some(a) => {
            let [a] = a[..] else {
                return Err(Error::invalid("curve takes a single --a"));
            };
            let rep = l1_transfer_experiment(&set, a, &target, &schedule, cutoff)?;
            csv.push_str(
                "n,residual_sq,scaled_residual_sq,raw_residual_sq,scaled_raw_residual_sq\n",
            );
            for (i, n) in schedule.iter().enumerate() {
                csv_row(
                    &mut csv,
                    &[
                        n.to_string(),
                        f(rep.original.residual_sq[i]),
                        f(rep.scaled.residual_sq[i]),
                        f(rep.original.raw_residual_sq[i]),
                        f(rep.scaled.raw_residual_sq[i]),
                    ],
                );
            }
            json!(rep)
        }
        None => {
            let c = residual_curve(&set, &target, &schedule, cutoff)?;
            csv.push_str("n,residual_sq,raw_residual_sq,retained_rank,clip\n");
            for (i, n) in schedule.iter().enumerate() {
                csv_row(
                    &mut csv,
                    &[
                        n.to_string(),
                        f(c.residual_sq[i]),
                        f(c.raw_residual_sq[i]),
                        c.retained[i].to_string(),
                        f(c.clips[i]),
                    ],
                );
            }
            json!(c)
        }
    };
    emit("curve", &cfg, csv, result)
}

fn phase(mut cfg: ExperimentConfig) -> Result<()> {
    let deltas = required(&cfg.deltas, "deltas")?;
    let pattern = *cfg.pattern.get_or_insert(SignPattern::Symmetric);
    let n_max = *cfg.nmax.get_or_insert(60);
    let schedule = cfg
        .schedule
        .get_or_insert_with(|| default_schedule(n_max))
        .clone();
    let cutoff = check_cutoff(*cfg.cutoff.get_or_insert(DEFAULT_CUTOFF))?;
    let target = target_of(&mut cfg);
    let table = phase_transition_experiment(&PhaseConfig {
        deltas,
        pattern,
        n_max,
        schedule,
        target,
        cutoff,
    })?;
    let mut csv = Vec::new();
    table
        .write_csv(&mut csv, &header("phase", &cfg))
        .expect("writing to memory succeeds");
    for r in &table.rows {
        eprintln!(
            "delta {:<6} d² {:.6e}  noise {:.1e}  rank {}",
            r.delta, r.residual_sq, r.noise, r.retained_rank
        );
    }
    emit(
        "phase",
        &cfg,
        String::from_utf8(csv).expect("ascii csv"),
        table.to_json(),
    )
}

fn on_axis(theta: f64) -> bool {
    let k = (theta / FRAC_PI_2).round();
    (theta - k * FRAC_PI_2).abs() < 1e-12
}

fn indicator(mut cfg: ExperimentConfig) -> Result<()> {
    let delta = required(&cfg.delta, "delta")?;
    let thetas: Vec<Angle> = required(&cfg.theta, "theta")?;
    let windows: Vec<Window> = required(&cfg.window, "window")?;
    let construction = *cfg.construction.get_or_insert(Construction::Quartic);
    let tail = *cfg.tail.get_or_insert(TailPolicy::FirstOrder);
    let samples = *cfg.samples.get_or_insert(DEFAULT_INDICATOR_SAMPLES);
    let r_max = windows.iter().map(|w| w.r_max).fold(0.0, f64::max);
    // The truncation must reach twice the largest radius evaluated.
    let needed = (delta * 4.0 * r_max * r_max).ceil() as usize + 1;
    cfg.n.get_or_insert(needed.max(100_000));
    let set = generated_set(&mut cfg, SignPattern::Positive, 100_000)?;
    let product = match construction {
        Construction::Quartic => CanonicalProduct::quartic(set, tail)?,
        Construction::Genus2 => CanonicalProduct::genus2(union_with_rotation(&set)?, tail)?,
    };
    let explicit_exclusion = cfg.exclusion;
    let mut rows = Vec::new();
    for w in &windows {
        for t in &thetas {
            // Default exclusion shrinks on the axes, where the zeros lie on the ray.
            let delta_excl = explicit_exclusion.unwrap_or(if on_axis(t.value) {
                0.005
            } else {
                DEFAULT_EXCLUSION
            });
            rows.push(indicator_estimate(
                &product,
                t.value,
                (w.r_min, w.r_max),
                delta_excl,
                samples,
            )?);
        }
    }
    let mut csv = Vec::new();
    write_indicator_csv(&mut csv, &header("indicator", &cfg), &rows)
        .expect("writing to memory succeeds");
    for r in &rows {
        let rel = r.h_target.map(|t| (r.h_hat - t) / t);
        eprintln!(
            "theta {:.6} window [{}, {}]: h_hat {:.6} target {} rel {}",
            r.theta,
            r.r_min,
            r.r_max,
            r.h_hat,
            opt(r.h_target),
            opt(rel)
        );
    }
    emit(
        "indicator",
        &cfg,
        String::from_utf8(csv).expect("ascii csv"),
        json!(rows),
    )
}

fn probe(mut cfg: ExperimentConfig) -> Result<()> {
    let deltas = match (&cfg.deltas, cfg.delta) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => vec![d],
        (None, None) => {
            return Err(Error::invalid(
                "missing required field `deltas` (flag --deltas)",
            ))
        }
    };
    let radii = cfg
        .radii
        .get_or_insert_with(|| vec![4.0, 8.0, 12.0])
        .clone();
    let rel = *cfg.rel_tol.get_or_insert(1e-6);
    let spec = QuadratureSpec::relative(rel);
    spec.validate()?;
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let reports = deltas
        .par_iter()
        .map(|&d| {
            let product = probe_product(d, r_max)?;
            let rep = fock_membership_probe(&product, &radii, &spec)?;
            Ok((d, product.len(), rep))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let name = |v: Value| v.as_str().unwrap_or("none").to_string();
    let mut csv = header("probe", &cfg) + "\n";
    csv.push_str("delta,factors,r_max,log_norm,classification,expected,verdict,growth_exponent,min_ratio,max_ratio\n");
    for (d, factors, rep) in &reports {
        let t = &rep.trend;
        let min_ratio = t.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = t.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        csv_row(
            &mut csv,
            &[
                f(*d),
                factors.to_string(),
                f(r_max),
                f(*t.log_norms.last().expect("nonempty schedule")),
                name(json!(t.classification)),
                name(json!(rep.expected)),
                name(json!(rep.verdict)),
                opt(t.growth_exponent),
                f(min_ratio),
                f(max_ratio),
            ],
        );
    }
    let result: Vec<Value> = reports
        .iter()
        .map(|(d, n, r)| json!({"delta": d, "factors": n, "report": r}))
        .collect();
    emit("probe", &cfg, csv, json!(result))
}

fn bargmann_check(mut cfg: ExperimentConfig) -> Result<()> {
    let mus = cfg
        .mu
        .get_or_insert_with(|| vec![-1.0, -0.5, 0.0, 0.5, 1.0])
        .clone();
    let radii = cfg.radii.get_or_insert_with(|| vec![2.0, 4.0, 6.0]).clone();
    let rel = *cfg.rel_tol.get_or_insert(1e-12);
    let spec = QuadratureSpec::relative(rel);
    spec.validate()?;
    let grid: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
    let mut csv = header("bargmann-check", &cfg) + "\n";
    csv.push_str("mu,identity_max_rel_dev,radius,fock_norm,norm_deviation\n");
    let mut result = Vec::new();
    for &mu in &mus {
        let id = real_line_identity_check(&GaussianFn::translate(mu), &grid)?;
        let trend = fock_norm_trend(&bargmann_gaussian_translate(mu), &radii, &spec)?;
        let r = *radii.last().expect("nonempty");
        let norm = *trend.norms.last().expect("nonempty");
        csv_row(
            &mut csv,
            &[
                f(mu),
                f(id.max_relative_deviation),
                f(r),
                f(norm),
                f((norm - FRAC_1_SQRT_2).abs()),
            ],
        );
        result.push(json!({"mu": mu, "identity": id, "trend": trend}));
    }
    emit("bargmann-check", &cfg, csv, json!(result))
}

fn conv_check(mut cfg: ExperimentConfig) -> Result<()> {
    let avals = cfg.a.get_or_insert_with(|| vec![1.5, 2.0, 3.0]).clone();
    let reports = avals
        .iter()
        .map(|&a| convolution_identity_check(a))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = header("conv-check", &cfg) + "\n";
    csv.push_str("a,b,paper_constant,closed_form_constant,oracle_constant,relative_deviation,shape_deviation\n");
    for r in &reports {
        csv_row(
            &mut csv,
            &[
                f(r.a),
                f(r.b),
                f(r.paper_constant),
                f(r.closed_form_constant),
                f(r.oracle_constant),
                f(r.relative_deviation),
                f(r.shape_deviation),
            ],
        );
    }
    emit("conv-check", &cfg, csv, json!(reports))
}

/// `(ξ, |ĝ(ξ)|)` for the named source.
fn envelope_samples(source: &str, a: f64, xi_max: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    let modulus: Box<dyn Fn(f64) -> f64> = match source {
        "phi" => Box::new(|xi: f64| (-PI * xi * xi).exp()),
        "phi-a" => {
            if !(a > 0.0) {
                return Err(Error::invalid("phi-a needs a positive --a"));
            }
            Box::new(move |xi: f64| (-PI * xi * xi / a).exp() / a.sqrt())
        }
        // Transform of (1 + 1/(2π) - t²) e^{-πt²}.
        "hermite" => Box::new(|xi: f64| (1.0 + xi * xi) * (-PI * xi * xi).exp()),
        _ => {
            return Err(Error::invalid(format!(
                "unknown envelope source {source:?} (phi, phi-a or hermite)"
            )))
        }
    };
    if count < 2 || !(xi_max > 0.0) {
        return Err(Error::invalid(
            "envelope needs at least 2 samples and a positive xi-max",
        ));
    }
    Ok((0..count)
        .map(|i| {
            let xi = xi_max * i as f64 / (count - 1) as f64;
            (xi, modulus(xi))
        })
        .collect())
}

fn envelope(mut cfg: ExperimentConfig) -> Result<()> {
    let source = cfg.source.get_or_insert_with(|| "phi".to_string()).clone();
    let a = match (&source[..], &cfg.a) {
        ("phi-a", None) => return Err(Error::invalid("missing required field `a` (flag --a)")),
        (_, Some(v)) if v.len() == 1 => v[0],
        (_, Some(_)) => return Err(Error::invalid("envelope takes a single --a")),
        _ => 1.0,
    };
    let n = *cfg.lower_degree.get_or_insert(0);
    let m = *cfg
        .upper_degree
        .get_or_insert(if source == "hermite" { 1 } else { 0 });
    let xi_max = *cfg.xi_max.get_or_insert(6.0);
    let count = *cfg.samples.get_or_insert(241);
    let samples = envelope_samples(&source, a, xi_max, count)?;
    let fit = envelope_fit(&samples, n, m)?;
    let mut csv = header("envelope", &cfg) + "\n";
    csv.push_str(
        "source,lower_constant,lower_rate,lower_degree,upper_constant,upper_rate,upper_degree,\
         lower_slack,upper_slack,lower_threshold,upper_threshold,holds\n",
    );
    let mut row = String::new();
    let _ = write!(row, "{source}");
    csv_row(
        &mut csv,
        &[
            row,
            f(fit.lower_constant),
            f(fit.lower_rate),
            fit.lower_degree.to_string(),
            f(fit.upper_constant),
            f(fit.upper_rate),
            fit.upper_degree.to_string(),
            f(fit.lower_slack),
            f(fit.upper_slack),
            f(fit.lower_threshold),
            f(fit.upper_threshold),
            fit.holds_on(&samples).to_string(),
        ],
    );
    emit("envelope", &cfg, csv, json!(fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes() {
        assert!(on_axis(0.0));
        assert!(on_axis(PI));
        assert!(on_axis(3.0 * FRAC_PI_2));
        assert!(!on_axis(PI / 4.0));
    }

    #[test]
    fn envelope_sources() {
        let s = envelope_samples("hermite", 1.0, 6.0, 11).unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s[0], (0.0, 1.0));
        assert!(envelope_samples("gabor", 1.0, 6.0, 11).is_err());
    }
}
