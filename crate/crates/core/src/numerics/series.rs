//! Tails of `Σ n^{-s}` by Euler–Maclaurin.

use crate::error::{Error, Result};

// B_{2k} / (2k)!
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

const SWITCH: u64 = 16;

/// `Σ_{n ≥ start} n^{-s}` for `s > 1`, `start ≥ 1`.
pub fn power_tail_sum(s: f64, start: u64) -> Result<f64> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::invalid(format!("power tail needs s > 1, got {s}")));
    }
    if start == 0 {
        return Err(Error::invalid("power tail starts at n = 1"));
    }
    let mut head = 0.0;
    let mut a = start;
    // Small terms first keeps the direct part accurate.
    if a < SWITCH {
        for n in (a..SWITCH).rev() {
            head += (n as f64).powf(-s);
        }
        a = SWITCH;
    }
    let af = a as f64;
    let mut tail = af.powf(1.0 - s) / (s - 1.0) + 0.5 * af.powf(-s);
    // rising factorial (s)_{2k-1}
    let mut rising = s;
    let mut power = af.powf(-s - 1.0);
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail += c * rising * power;
        let j = (2 * k + 1) as f64;
        rising *= (s + j) * (s + j + 1.0);
        power /= af * af;
    }
    Ok(tail + head)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn full_sums_match_zeta_values() {
        assert!((power_tail_sum(2.0, 1).unwrap() - PI * PI / 6.0).abs() < 1e-15);
        assert!((power_tail_sum(4.0, 1).unwrap() - PI.powi(4) / 90.0).abs() < 1e-15);
        assert!((power_tail_sum(1.5, 1).unwrap() - 2.612_375_348_685_488).abs() < 1e-14);
    }

    #[test]
    fn tail_matches_direct_summation() {
        let direct: f64 = (1..=2_000_000u64).rev().map(|n| (n as f64).powi(-3)).sum();
        let total = power_tail_sum(3.0, 1).unwrap();
        let tail = power_tail_sum(3.0, 2_000_001).unwrap();
        assert!((total - direct - tail).abs() < 1e-15);
    }

    #[test]
    fn three_halves_tail_after_ten_thousand() {
        let t = power_tail_sum(1.5, 10_001).unwrap();
        assert!((t - 0.019_999_500_012_5).abs() < 1e-13, "{t}");
        assert!(t < 0.02);
    }

    #[test]
    fn rejects_divergent_exponent() {
        assert!(power_tail_sum(1.0, 5).is_err());
    }
}
