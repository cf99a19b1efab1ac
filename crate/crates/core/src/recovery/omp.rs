//! Group orthogonal matching pursuit.

use super::ls::group_least_squares;
use super::{Block, CandidateSet, GroupProblem, LsSolution, Owner};
use crate::geometry::inner;
use crate::signal::{GridDictionary, ObservationSet};
use crate::C64;

/// Stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpOptions {
    /// Known target count; the support never grows beyond it.
    pub k: usize,
    /// Optional early stop once the stacked residual norm is at most this.
    pub epsilon: Option<f64>,
}

impl OmpOptions {
    pub fn known_k(k: usize) -> Self {
        Self { k, epsilon: None }
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OmpTrace {
    /// Stacked residual norm, starting with `‖y‖` before the first selection.
    pub residual_norms: Vec<f64>,
    /// `max |a^H Δ| / (‖a‖ ‖y‖)` over selected columns, per iteration.
    pub orthogonality: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OmpOutcome {
    pub support: Vec<usize>,
    pub fits: Vec<LsSolution>,
    pub trace: OmpTrace,
}

/// Group scores `Σ_blocks Σ_r |Δ^H a_{r·M+m}|` for every grid point.
pub fn group_scores(problem: &GroupProblem<'_>, residuals: &[Vec<C64>]) -> Vec<f64> {
    let mut scores = vec![0.0; problem.grid_len];
    for (b, res) in problem.blocks.iter().zip(residuals) {
        for (m, s) in scores.iter_mut().enumerate() {
            for c in problem.group_columns(m) {
                *s += inner(res, b.dict.column(c)).norm();
            }
        }
    }
    scores
}

fn stacked_norm(residuals: &[Vec<C64>]) -> f64 {
    residuals
        .iter()
        .flatten()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn orthogonality(problem: &GroupProblem<'_>, support: &[usize], residuals: &[Vec<C64>], y_norm: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (b, res) in problem.blocks.iter().zip(residuals) {
        for &m in support {
            for c in problem.group_columns(m) {
                let col = b.dict.column(c);
                let cn = inner(col, col).re.sqrt();
                if cn > 0.0 && y_norm > 0.0 {
                    worst = worst.max(inner(col, res).norm() / (cn * y_norm));
                }
            }
        }
    }
    worst
}

/// Greedy group selection over all blocks jointly. Ties in the score resolve
/// to the lowest grid index; already selected indices are excluded.
pub fn group_omp(problem: &GroupProblem<'_>, opts: OmpOptions) -> OmpOutcome {
    assert!(opts.k >= 1, "target count must be positive");
    let k = opts.k.min(problem.grid_len);
    let y_norm = problem.observation_norm();
    let mut residuals: Vec<Vec<C64>> = problem.blocks.iter().map(|b| b.y.to_vec()).collect();
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut fits = Vec::new();
    let mut trace = OmpTrace {
        residual_norms: vec![y_norm],
        orthogonality: Vec::new(),
    };
    while support.len() < k {
        if let Some(eps) = opts.epsilon {
            if stacked_norm(&residuals) <= eps {
                break;
            }
        }
        let scores = group_scores(problem, &residuals);
        let mut best: Option<(usize, f64)> = None;
        for (m, &s) in scores.iter().enumerate() {
            if support.contains(&m) {
                continue;
            }
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((m, s));
            }
        }
        let (m, _) = best.expect("grid exhausted before reaching K");
        support.push(m);
        fits = group_least_squares(problem, &support);
        residuals = fits.iter().map(|f| f.residual.clone()).collect();
        trace.residual_norms.push(stacked_norm(&residuals));
        trace
            .orthogonality
            .push(orthogonality(problem, &support, &residuals, y_norm));
    }
    OmpOutcome { support, fits, trace }
}

/// Centralized OMP over the stacked observations of every gateway.
pub fn centralized_omp(obs: &ObservationSet, dict: &GridDictionary, opts: OmpOptions) -> (CandidateSet, OmpTrace) {
    let blocks = obs
        .y
        .iter()
        .zip(&dict.blocks)
        .map(|(y, d)| Block { y, dict: d })
        .collect();
    let problem = GroupProblem::new(blocks, dict.grid_len, dict.num_satellites);
    let out = group_omp(&problem, opts);
    (
        CandidateSet {
            indices: out.support,
            owner: Owner::Centralized,
        },
        out.trace,
    )
}

/// Non-cooperative OMP at gateway `l` on its own observations.
pub fn local_omp(obs: &ObservationSet, dict: &GridDictionary, l: usize, opts: OmpOptions) -> (CandidateSet, OmpTrace) {
    let problem = GroupProblem::new(
        vec![Block {
            y: &obs.y[l],
            dict: &dict.blocks[l],
        }],
        dict.grid_len,
        dict.num_satellites,
    );
    let out = group_omp(&problem, opts);
    (
        CandidateSet {
            indices: out.support,
            owner: Owner::Gateway(l),
        },
        out.trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::DictionaryBlock;

    fn toy() -> (DictionaryBlock, Vec<C64>) {
        // Three grid points, one replica, four slots.
        let cols = vec![
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
        ];
        let y = vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(3.0, 0.0)];
        (DictionaryBlock::from_columns(4, cols), y)
    }

    #[test]
    fn selects_largest_then_next() {
        let (d, y) = toy();
        let p = GroupProblem::new(vec![Block { y: &y, dict: &d }], 3, 1);
        let out = group_omp(&p, OmpOptions::known_k(2));
        assert_eq!(out.support, vec![2, 1]);
        assert!(out.trace.residual_norms.last().unwrap() < &1e-12);
    }

    #[test]
    fn zero_observation_picks_lowest_indices() {
        let (d, _) = toy();
        let y = vec![C64::new(0.0, 0.0); 4];
        let p = GroupProblem::new(vec![Block { y: &y, dict: &d }], 3, 1);
        assert_eq!(group_omp(&p, OmpOptions::known_k(2)).support, vec![0, 1]);
    }

    #[test]
    fn epsilon_stops_early() {
        let (d, y) = toy();
        let p = GroupProblem::new(vec![Block { y: &y, dict: &d }], 3, 1);
        let opts = OmpOptions {
            k: 3,
            epsilon: Some(1e-9),
        };
        assert_eq!(group_omp(&p, opts).support.len(), 2);
    }
}
