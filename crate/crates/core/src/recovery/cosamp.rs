//! Group CoSaMP.

use super::ls::group_least_squares;
use super::omp::group_scores;
use super::{CandidateSet, GroupProblem, Owner};
use crate::C64;

pub const COSAMP_MAX_ITERS: usize = 50;

#[derive(Debug, Clone)]
pub struct CosampOutcome {
    pub candidates: CandidateSet,
    pub iterations: usize,
}

/// Indices of the `n` largest values, ties to the lowest index.
fn top_n(values: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// CoSaMP adapted to group atoms: merge the `2K` best proxy groups into the
/// support, fit, prune to the `K` groups of largest coefficient energy and
/// update the residual. Stops when the support repeats.
pub fn cosamp(problem: &GroupProblem<'_>, k: usize, owner: Owner) -> CosampOutcome {
    assert!(k >= 1, "target count must be positive");
    let k = k.min(problem.grid_len);
    let g = problem.group_size;
    let mut residuals: Vec<Vec<C64>> = problem.blocks.iter().map(|b| b.y.to_vec()).collect();
    let mut support: Vec<usize> = Vec::new();
    let mut iterations = 0;
    while iterations < COSAMP_MAX_ITERS {
        iterations += 1;
        let scores = group_scores(problem, &residuals);
        let mut merged = support.clone();
        for m in top_n(&scores, 2 * k) {
            if !merged.contains(&m) {
                merged.push(m);
            }
        }
        merged.sort_unstable();
        let fits = group_least_squares(problem, &merged);
        let energy: Vec<f64> = (0..merged.len())
            .map(|s| {
                fits.iter()
                    .map(|f| f.coefficients[s * g..(s + 1) * g].iter().map(|c| c.norm_sqr()).sum::<f64>())
                    .sum()
            })
            .collect();
        let keep = top_n(&energy, k);
        let next: Vec<usize> = keep.iter().map(|&s| merged[s]).collect();

        residuals = problem
            .blocks
            .iter()
            .zip(&fits)
            .map(|(b, f)| {
                let mut r = b.y.to_vec();
                for &s in &keep {
                    for (rep, c) in problem.group_columns(merged[s]).enumerate() {
                        let x = f.coefficients[s * g + rep];
                        for (rv, &a) in r.iter_mut().zip(b.dict.column(c)) {
                            *rv -= a * x;
                        }
                    }
                }
                r
            })
            .collect();

        let mut prev = support.clone();
        let mut cur = next.clone();
        prev.sort_unstable();
        cur.sort_unstable();
        support = next;
        if prev == cur {
            break;
        }
    }
    CosampOutcome {
        candidates: CandidateSet {
            indices: support,
            owner,
        },
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_n_ties_lowest_first() {
        assert_eq!(top_n(&[1.0, 3.0, 3.0, 0.5], 2), vec![1, 2]);
        assert_eq!(top_n(&[0.0, 0.0, 0.0], 2), vec![0, 1]);
    }
}
