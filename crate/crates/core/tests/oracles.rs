//! Numerical building blocks against independent reference computations.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use span_lab::lab::{build_gram, Target};
use span_lab::numerics::{integrate_disc, spd_truncated_solve, NeumaierSum, QuadratureSpec};

/// `∫_{|z|<R} e^{-2πy²}` as `∫ 2R² cos²t e^{-2πR² sin²t} dt` over `[-π/2, π/2]`;
/// the integrand is smooth and periodic, so the trapezoid rule converges fast.
fn strip_disc_reference(r: f64) -> f64 {
    let m = 4000;
    let h = PI / m as f64;
    (0..m)
        .map(|k| {
            let t = -FRAC_PI_2 + k as f64 * h;
            2.0 * r * r * t.cos().powi(2) * (-2.0 * PI * r * r * t.sin().powi(2)).exp()
        })
        .sum::<f64>()
        * h
}

#[test]
fn disc_quadrature_matches_trapezoid_reference() {
    let spec = QuadratureSpec::relative(1e-13);
    for r in [0.5, 1.0, 2.5] {
        let q = integrate_disc(|z| (-2.0 * PI * z.im * z.im).exp(), r, &spec).unwrap();
        let reference = strip_disc_reference(r);
        assert!(
            (q - reference).abs() < 1e-12 * reference,
            "R = {r}: {q} vs {reference}"
        );
    }
}

#[test]
fn truncated_solve_agrees_with_lu_on_a_well_conditioned_gram() {
    let nodes = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5];
    let sys = build_gram(&nodes, &Target::translate(0.3)).unwrap();
    let eps = 1e-14;
    let shifted = &sys.matrix + DMatrix::identity(6, 6) * eps;
    let x_ref = shifted
        .lu()
        .solve(&DVector::from_column_slice(&sys.rhs))
        .unwrap();
    let r = spd_truncated_solve(&sys.matrix, &sys.rhs, 1e-12).unwrap();
    assert_eq!(r.retained, 6);
    for i in 0..6 {
        assert!(
            (r.solution[i] - x_ref[i]).abs() < 1e-10 * x_ref.amax(),
            "{i}"
        );
    }
}

/// `x` as an exact integer multiple of `2^-1100`.
fn scaled_exact(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::from(0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    BigInt::from(sign) * (BigInt::from(mant) << ((e + 1100) as usize))
}

#[test]
fn compensated_sum_matches_exact_rational_sum() {
    let terms: Vec<f64> = (0..100_000)
        .map(|k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            s * (1e-6 + 1e-9 * (k as f64).sin())
        })
        .collect();
    let exact: BigInt = terms.iter().map(|&t| scaled_exact(t)).sum();
    let mut acc = NeumaierSum::default();
    for &t in &terms {
        acc.add(t);
    }
    let got = scaled_exact(acc.total());
    let diff = &got - &exact;
    // |got - exact| ≤ 2^-50 |exact|.
    assert!(
        diff.magnitude() << 50 <= *exact.magnitude(),
        "{} vs {}",
        acc.total(),
        got
    );
}
