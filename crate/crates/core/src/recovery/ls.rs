//! Least squares through the normal equations.

use nalgebra::{DMatrix, DVector};

use super::GroupProblem;
use crate::C64;

/// Relative ridge applied when the Gram matrix is numerically singular.
const RIDGE: f64 = 1e-12;
/// Smallest accepted pivot ratio of the Cholesky factor.
const PIVOT_FLOOR: f64 = 1e-14;

/// Least-squares fit of one block.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub coefficients: Vec<C64>,
    pub residual: Vec<C64>,
    pub regularized: bool,
}

/// Solves `min ‖y − A x‖` for the given columns.
pub fn least_squares(columns: &[&[C64]], y: &[C64]) -> LsSolution {
    let n = columns.len();
    if n == 0 {
        return LsSolution {
            coefficients: Vec::new(),
            residual: y.to_vec(),
            regularized: false,
        };
    }
    let mut gram = DMatrix::<C64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let g = crate::geometry::inner(columns[a], columns[b]);
            gram[(a, b)] = g;
            gram[(b, a)] = g.conj();
        }
    }
    let rhs = DVector::from_iterator(n, columns.iter().map(|c| crate::geometry::inner(c, y)));
    let trace: f64 = (0..n).map(|a| gram[(a, a)].re).sum();
    let max_diag = (0..n).map(|a| gram[(a, a)].re).fold(0.0, f64::max);

    let well_posed = |chol: &nalgebra::Cholesky<C64, nalgebra::Dyn>| {
        let l = chol.l_dirty();
        (0..n).all(|a| l[(a, a)].re * l[(a, a)].re > PIVOT_FLOOR * max_diag)
    };
    let (x, regularized) = match gram.clone().cholesky() {
        Some(ch) if well_posed(&ch) => (ch.solve(&rhs), false),
        _ => {
            let mut g = gram;
            let ridge = RIDGE * trace / n as f64;
            for a in 0..n {
                g[(a, a)] += C64::new(ridge, 0.0);
            }
            let x = g
                .clone()
                .cholesky()
                .map(|ch| ch.solve(&rhs))
                .or_else(|| g.lu().solve(&rhs))
                .unwrap_or_else(|| DVector::zeros(n));
            (x, true)
        }
    };
    let mut residual = y.to_vec();
    for (c, &xc) in columns.iter().zip(x.iter()) {
        for (r, &v) in residual.iter_mut().zip(c.iter()) {
            *r -= v * xc;
        }
    }
    LsSolution {
        coefficients: x.iter().copied().collect(),
        residual,
        regularized,
    }
}

/// Per-block least squares on the columns of the grid points in `support`.
///
/// The stacked system is block-diagonal, so the joint fit decouples into one
/// fit per block. Coefficients are ordered group-major: for each support entry
/// its `group_size` columns in replica order.
pub fn group_least_squares(problem: &GroupProblem<'_>, support: &[usize]) -> Vec<LsSolution> {
    problem
        .blocks
        .iter()
        .map(|b| {
            let cols: Vec<&[C64]> = support
                .iter()
                .flat_map(|&m| problem.group_columns(m).map(|c| b.dict.column(c)).collect::<Vec<_>>())
                .collect();
            least_squares(&cols, b.y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_zero_residual() {
        let a1 = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 1.0)];
        let a2 = vec![C64::new(0.5, -1.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0)];
        let x = [C64::new(2.0, -1.0), C64::new(-0.5, 0.25)];
        let y: Vec<C64> = (0..3).map(|t| a1[t] * x[0] + a2[t] * x[1]).collect();
        let s = least_squares(&[&a1, &a2], &y);
        assert!(!s.regularized);
        for (got, want) in s.coefficients.iter().zip(x.iter()) {
            assert!((got - want).norm() < 1e-12);
        }
        assert!(s.residual.iter().all(|r| r.norm() < 1e-12));
    }

    #[test]
    fn duplicate_columns_are_regularized() {
        let a = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
        let y = vec![C64::new(3.0, 0.0), C64::new(6.0, 0.0)];
        let s = least_squares(&[&a, &a], &y);
        assert!(s.regularized);
        assert!(s.residual.iter().all(|r| r.norm() < 1e-6));
    }
}
