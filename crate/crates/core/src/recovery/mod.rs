//! Group-sparse recovery of target grid indices.

mod cosamp;
mod eigen;
mod ls;
mod music;
mod omp;

pub use cosamp::{cosamp, CosampOutcome, COSAMP_MAX_ITERS};
pub use eigen::{hermitian_jacobi, HermitianEigen, JACOBI_TOL};
pub use ls::{group_least_squares, least_squares, LsSolution};
pub use music::{music, pick_peaks, sample_covariance, MusicInputs, MusicOutcome};
pub use omp::{centralized_omp, group_omp, group_scores, local_omp, OmpOptions, OmpOutcome, OmpTrace};

use crate::signal::DictionaryBlock;
use crate::C64;

/// Which node produced a candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Centralized,
    Gateway(usize),
}

/// Selected grid indices in selection order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub indices: Vec<usize>,
    pub owner: Owner,
}

/// One observation block and its dictionary block.
#[derive(Debug, Clone, Copy)]
pub struct Block<'a> {
    pub y: &'a [C64],
    pub dict: &'a DictionaryBlock,
}

/// A group-sparse system: independent blocks sharing a grid of `grid_len`
/// points, each with `groups` columns per grid point (column `r·M + m`).
#[derive(Debug, Clone)]
pub struct GroupProblem<'a> {
    pub blocks: Vec<Block<'a>>,
    pub grid_len: usize,
    pub group_size: usize,
}

impl<'a> GroupProblem<'a> {
    pub fn new(blocks: Vec<Block<'a>>, grid_len: usize, group_size: usize) -> Self {
        for b in &blocks {
            assert_eq!(b.y.len(), b.dict.rows(), "observation length must match dictionary rows");
            assert_eq!(b.dict.cols(), grid_len * group_size, "dictionary width mismatch");
        }
        Self {
            blocks,
            grid_len,
            group_size,
        }
    }

    /// Column indices of grid point `m` within any block.
    pub fn group_columns(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.group_size).map(move |r| r * self.grid_len + m)
    }

    pub fn observation_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.y.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}
