//! Compensated accumulation of log-magnitudes.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running log-magnitude of a product. A single `-∞` term (an exact zero
/// factor) pins the result at `-∞`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogAccumulator {
    inner: NeumaierSum,
    zero: bool,
}

impl LogAccumulator {
    pub fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            self.zero = true;
        } else if !self.zero {
            self.inner.add(log_term);
        }
    }

    pub fn has_zero(&self) -> bool {
        self.zero
    }

    pub fn total(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            self.inner.total()
        }
    }
}

/// `log |∏ x_k|` from the terms `log |x_k|`.
pub fn log_product_accumulate<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = LogAccumulator::default();
    for t in terms {
        acc.add(t);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_factors_do_not_overflow() {
        let t = 200.0 * 10f64.ln();
        let v = log_product_accumulate([t, t]);
        assert!((v - 400.0 * 10f64.ln()).abs() < 1e-12);
        assert!((v - 921.034_037_197_618_3).abs() < 1e-9);
    }

    #[test]
    fn zero_factor_annihilates() {
        assert_eq!(
            log_product_accumulate([f64::NEG_INFINITY, 5.0]),
            f64::NEG_INFINITY
        );
        assert_eq!(
            log_product_accumulate([5.0, f64::NEG_INFINITY, 1e300]),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn empty_product_is_one() {
        assert_eq!(log_product_accumulate(std::iter::empty()), 0.0);
    }

    #[test]
    fn compensation_recovers_lost_bits() {
        let mut terms = vec![1.0];
        terms.extend(std::iter::repeat_n(1e-16, 10_000));
        let v = log_product_accumulate(terms.iter().copied());
        assert!((v - (1.0 + 1e-12)).abs() < 1e-15, "{v}");
    }
}
