//! MUSIC pseudo-spectrum over the sensing grid.

use nalgebra::DMatrix;

use super::eigen::{hermitian_jacobi, JACOBI_TOL};
use super::{CandidateSet, Owner};
use crate::geometry::Position3;
use crate::{Result, C64};

const DENOM_FLOOR: f64 = 1e-12;

/// Sample covariance `X X^H / S` of the snapshot columns.
pub fn sample_covariance(x: &DMatrix<C64>) -> DMatrix<C64> {
    let s = x.ncols().max(1) as f64;
    let r = x * x.adjoint();
    let mut r = r.map(|v| v / s);
    let n = r.nrows();
    for p in 0..n {
        r[(p, p)] = C64::new(r[(p, p)].re, 0.0);
        for q in (p + 1)..n {
            let avg = (r[(p, q)] + r[(q, p)].conj()) * 0.5;
            r[(p, q)] = avg;
            r[(q, p)] = avg.conj();
        }
    }
    r
}

/// Everything MUSIC needs for the gateways it combines.
#[derive(Debug, Clone, Copy)]
pub struct MusicInputs<'a> {
    /// Snapshot matrices, one per gateway.
    pub snapshots: &'a [DMatrix<C64>],
    /// Gateway-to-grid steering `[gateway][grid]`, aligned with `snapshots`.
    pub steering: &'a [Vec<&'a [C64]>],
    pub gateways: &'a [Position3],
    pub grid: &'a [Position3],
    /// Lattice spacing of the grid, km.
    pub spacing_km: f64,
}

#[derive(Debug, Clone)]
pub struct MusicOutcome {
    pub spectrum: Vec<f64>,
    pub candidates: CandidateSet,
}

fn view_angle(g: Position3, a: Position3, b: Position3) -> f64 {
    let u = a - g;
    let v = b - g;
    let c = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
    c.acos()
}

/// Picks the `k` largest spectrum values, skipping any point whose view
/// direction lies within one grid spacing of an already picked point from
/// every gateway. Falls back to plain ranking if too few points survive.
pub fn pick_peaks(spectrum: &[f64], k: usize, gateways: &[Position3], grid: &[Position3], spacing_km: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..spectrum.len()).collect();
    order.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]).then(a.cmp(&b)));
    let close = |a: usize, b: usize| {
        gateways.iter().all(|&g| {
            let r = (grid[a] - g).norm().min((grid[b] - g).norm());
            view_angle(g, grid[a], grid[b]) < spacing_km / r
        })
    };
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    for &m in &order {
        if picked.len() == k {
            break;
        }
        if picked.iter().all(|&p| !close(p, m)) {
            picked.push(m);
        }
    }
    for &m in &order {
        if picked.len() == k {
            break;
        }
        if !picked.contains(&m) {
            picked.push(m);
        }
    }
    picked
}

/// Pseudo-spectrum `1 / Σ_l ‖U_l^H v_{l,m}‖²` with noise subspaces from the
/// `N − K` smallest eigenvalues of each gateway's sample covariance.
pub fn music(inputs: MusicInputs<'_>, k: usize, owner: Owner) -> Result<MusicOutcome> {
    let m_len = inputs.grid.len();
    let mut denom = vec![0.0; m_len];
    for (x, steer) in inputs.snapshots.iter().zip(inputs.steering) {
        let r = sample_covariance(x);
        let eig = hermitian_jacobi(&r, JACOBI_TOL)?;
        let n = r.nrows();
        let noise = eig.vectors.columns(k.min(n), n - k.min(n));
        for (m, d) in denom.iter_mut().enumerate() {
            let v = steer[m];
            for c in 0..noise.ncols() {
                let col = noise.column(c);
                let proj: C64 = col.iter().zip(v).map(|(u, &vv)| u.conj() * vv).sum();
                *d += proj.norm_sqr();
            }
        }
    }
    let spectrum: Vec<f64> = denom.iter().map(|&d| 1.0 / d.max(DENOM_FLOOR)).collect();
    let indices = pick_peaks(&spectrum, k, inputs.gateways, inputs.grid, inputs.spacing_km);
    Ok(MusicOutcome {
        spectrum,
        candidates: CandidateSet { indices, owner },
    })
}
