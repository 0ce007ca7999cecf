//! Spectral-cutoff solves of symmetric positive semidefinite systems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default relative eigenvalue cutoff.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

/// Result of [`spd_truncated_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolveReport {
    /// Minimum-norm least-squares solution over the retained eigenspace.
    pub solution: Vec<f64>,
    /// Number of eigenpairs above `cutoff · λ_max`.
    pub retained: usize,
    pub smallest_retained: Option<f64>,
    pub largest: f64,
    /// `λ_max / λ_min` over the retained spectrum; infinite when nothing is retained.
    pub condition_estimate: f64,
    /// `Σ (v·b)² / λ` over retained pairs, i.e. `bᵀx` as a sum of nonnegative terms.
    pub projected_energy: f64,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Set when every eigenvalue fell below the cutoff.
    pub degenerate: bool,
}

/// Largest `|g_ij - g_ji|`.
pub fn max_asymmetry(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(g: &DMatrix<f64>) -> Result<()> {
    if g.nrows() != g.ncols() {
        return Err(Error::invalid(format!(
            "matrix must be square, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let scale = g.amax();
    let asym = max_asymmetry(g);
    if asym > 64.0 * f64::EPSILON * scale {
        return Err(Error::NonSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
pub fn sorted_eigen(g: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(g)?;
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..g.nrows()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(g.nrows(), g.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Solves `G x = b` in the least-squares sense after discarding eigenpairs with
/// eigenvalue below `relative_cutoff · λ_max`.
pub fn spd_truncated_solve(
    g: &DMatrix<f64>,
    b: &[f64],
    relative_cutoff: f64,
) -> Result<SpectralSolveReport> {
    if !(relative_cutoff > 0.0 && relative_cutoff < 1.0) {
        return Err(Error::invalid("relative cutoff must lie in (0, 1)"));
    }
    if g.nrows() != b.len() {
        return Err(Error::invalid(format!(
            "right-hand side has length {} for a {}x{} matrix",
            b.len(),
            g.nrows(),
            g.ncols()
        )));
    }
    let n = b.len();
    if n == 0 {
        return Ok(SpectralSolveReport {
            solution: vec![],
            retained: 0,
            smallest_retained: None,
            largest: 0.0,
            condition_estimate: f64::INFINITY,
            projected_energy: 0.0,
            eigenvalues: vec![],
            degenerate: true,
        });
    }
    let (values, vectors) = sorted_eigen(g)?;
    let largest = values[0];
    let threshold = relative_cutoff * largest;
    let rhs = DVector::from_column_slice(b);
    let mut x = DVector::zeros(n);
    let mut retained = 0;
    let mut smallest = None;
    let mut energy = 0.0;
    if largest > 0.0 {
        for (k, &lambda) in values.iter().enumerate() {
            if lambda <= threshold {
                break;
            }
            let v = vectors.column(k);
            let coef = v.dot(&rhs);
            x.axpy(coef / lambda, &v, 1.0);
            energy += coef * coef / lambda;
            retained += 1;
            smallest = Some(lambda);
        }
    }
    let condition_estimate = match smallest {
        Some(s) => largest / s,
        None => f64::INFINITY,
    };
    Ok(SpectralSolveReport {
        solution: x.iter().copied().collect(),
        retained,
        smallest_retained: smallest,
        largest,
        condition_estimate,
        projected_energy: energy,
        eigenvalues: values,
        degenerate: retained == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let g = DMatrix::identity(2, 2);
        let r = spd_truncated_solve(&g, &[3.0, 4.0], DEFAULT_CUTOFF).unwrap();
        assert_eq!(r.retained, 2);
        assert!((r.solution[0] - 3.0).abs() < 1e-15);
        assert!((r.solution[1] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_gives_minimum_norm_solution() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = spd_truncated_solve(&g, &[1.0, 1.0], 1e-12).unwrap();
        assert_eq!(r.retained, 1);
        assert!((r.solution[0] - 0.5).abs() < 1e-14);
        assert!((r.solution[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonsymmetric() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            spd_truncated_solve(&g, &[1.0, 1.0], 1e-12),
            Err(Error::NonSymmetric { .. })
        ));
    }

    #[test]
    fn all_below_cutoff_flags_degenerate() {
        let g = DMatrix::zeros(3, 3);
        let r = spd_truncated_solve(&g, &[1.0, 2.0, 3.0], 1e-12).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.retained, 0);
        assert!(r.solution.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cutoff_must_be_a_fraction() {
        let g = DMatrix::identity(2, 2);
        assert!(spd_truncated_solve(&g, &[1.0, 1.0], 0.0).is_err());
        assert!(spd_truncated_solve(&g, &[1.0, 1.0], 1.0).is_err());
    }
}
