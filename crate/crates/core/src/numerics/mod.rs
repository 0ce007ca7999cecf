//! Shared numerical substrate: quadrature, spectral solves, log-domain sums.

pub mod logsum;
pub mod quadrature;
pub mod series;
pub mod spectral;

pub use logsum::{log_product_accumulate, LogAccumulator, NeumaierSum};
pub use quadrature::{
    integrate_annulus_log, integrate_disc, integrate_interval, integrate_real_line,
    integrate_real_line_with_breaks, AngularSymmetry, DecayEnvelope, QuadratureSpec,
};
pub use series::power_tail_sum;
pub use spectral::{spd_truncated_solve, SpectralSolveReport, DEFAULT_CUTOFF};

/// Formats a float with 17 significant digits, the output convention for
/// every file the lab writes.
pub fn fmt_sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_std_error: f64,
    /// Root-mean-square residual in the units of `y`.
    pub rms: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    let dof = if n > 2 { nf - 2.0 } else { 1.0 };
    Some(LineFit {
        slope,
        intercept,
        slope_std_error: (ssr / dof / sxx).sqrt(),
        rms: (ssr / nf).sqrt(),
    })
}

/// Least-squares slope through the origin, `y ≈ slope·x`, with its standard
/// error and the RMS residual.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 1 || n != ys.len() {
        return None;
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x).powi(2))
        .sum();
    let dof = if n > 1 { (n - 1) as f64 } else { 1.0 };
    Some(LineFit {
        slope,
        intercept: 0.0,
        slope_std_error: (ssr / dof / sxx).sqrt(),
        rms: (ssr / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig17_round_trips() {
        for x in [1.0, -0.1, 1e-300, std::f64::consts::PI, 123456.789] {
            let s = fmt_sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_sig17(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-14);
        assert!((fit.intercept + 1.0).abs() < 1e-13);
        assert!(fit.rms < 1e-13);
    }
}
