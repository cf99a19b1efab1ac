//! Association of per-gateway candidates and line-bundle fusion.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::geometry::Position3;
use crate::recovery::CandidateSet;
use crate::{Error, Result};

/// Condition number above which fusion falls back to the candidate centroid.
pub const FUSION_MAX_CONDITION: f64 = 1e8;
pub const KMEANS_MAX_ITERS: usize = 50;

/// Squared distance from `c` to the line through `a` and `b`.
pub fn line_point_sqdist(a: Position3, b: Position3, c: Position3) -> f64 {
    let d = b - a;
    let dd = d.norm_sq();
    assert!(dd > 0.0, "line through coincident points");
    let w = c - a;
    let along = w.dot(d);
    (w.norm_sq() - along * along / dd).max(0.0)
}

/// Minimum-cost assignment of rows to columns of a square cost matrix.
///
/// Returns `assign[row] = column`. Shortest augmenting path with dual
/// potentials, `O(K³)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    for row in cost {
        assert_eq!(row.len(), n, "cost matrix must be square");
        assert!(row.iter().all(|c| c.is_finite()), "cost matrix must be finite");
    }
    if n == 0 {
        return Vec::new();
    }
    // One-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[Vec<f64>], assign: &[usize]) -> f64 {
    assign.iter().enumerate().map(|(r, &c)| cost[r][c]).sum()
}

/// Target clusters: `members[k]` lists `(gateway, grid index)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clusters {
    pub members: Vec<Vec<(usize, usize)>>,
}

impl Clusters {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Whether every cluster holds exactly one candidate of each of the
    /// `num_gateways` gateways and the clusters partition the candidates.
    pub fn satisfies_constraints(&self, candidates: &[CandidateSet]) -> bool {
        let l = candidates.len();
        let one_each = self.members.iter().all(|c| {
            c.len() == l && (0..l).all(|g| c.iter().filter(|(gg, _)| *gg == g).count() == 1)
        });
        if !one_each {
            return false;
        }
        (0..l).all(|g| {
            let mut got: Vec<usize> = self
                .members
                .iter()
                .flat_map(|c| c.iter().filter(|(gg, _)| *gg == g).map(|&(_, m)| m))
                .collect();
            let mut want = candidates[g].indices.clone();
            got.sort_unstable();
            want.sort_unstable();
            got == want
        })
    }
}

/// Association cost of a single cluster, summed over ordered gateway pairs
/// `f(q^gat_g, grid[c_g], grid[c_l])` for `g ≠ l`.
pub fn cluster_cost(members: &[(usize, usize)], gateways: &[Position3], grid: &[Position3]) -> f64 {
    let mut s = 0.0;
    for &(g, mg) in members {
        for &(l, ml) in members {
            if g != l {
                s += line_point_sqdist(gateways[g], grid[mg], grid[ml]);
            }
        }
    }
    s
}

/// Association objective over all clusters.
pub fn association_objective(clusters: &Clusters, gateways: &[Position3], grid: &[Position3]) -> f64 {
    clusters
        .members
        .iter()
        .map(|c| cluster_cost(c, gateways, grid))
        .sum()
}

/// Sequential Hungarian association: clusters start from the first
/// gateway's candidates; each further gateway's candidates are matched to the
/// clusters against the lines of that gateway.
pub fn sequential_associate(candidates: &[CandidateSet], gateways: &[Position3], grid: &[Position3]) -> Clusters {
    assert!(!candidates.is_empty(), "at least one gateway required");
    assert_eq!(candidates.len(), gateways.len(), "one candidate set per gateway");
    let k = candidates[0].indices.len();
    assert!(
        candidates.iter().all(|c| c.indices.len() == k),
        "candidate sets must have equal length"
    );
    let mut members: Vec<Vec<(usize, usize)>> = candidates[0].indices.iter().map(|&m| vec![(0, m)]).collect();
    for g in 1..candidates.len() {
        let cost: Vec<Vec<f64>> = candidates[g]
            .indices
            .iter()
            .map(|&mg| {
                members
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|&(_, ml)| line_point_sqdist(gateways[g], grid[mg], grid[ml]))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let assign = hungarian(&cost);
        for (row, &col) in assign.iter().enumerate() {
            members[col].push((g, candidates[g].indices[row]));
        }
    }
    Clusters { members }
}

/// K-means association result.
#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub clusters: Clusters,
    pub centroids: Vec<Position3>,
    pub iterations: usize,
}

fn nearest(p: Position3, centroids: &[Position3]) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = p.distance(q);
        if d < bd {
            bd = d;
            best = c;
        }
    }
    best
}

/// Index of the point farthest from its nearest centroid, ties to the lowest.
fn farthest(points: &[Position3], centroids: &[Position3]) -> usize {
    let mut best = 0;
    let mut bd = -1.0;
    for (i, &p) in points.iter().enumerate() {
        let d = centroids.iter().map(|&c| p.distance(c)).fold(f64::INFINITY, f64::min);
        if d > bd {
            bd = d;
            best = i;
        }
    }
    best
}

/// Euclidean K-means on the pooled candidate positions. The first centroid is
/// a random candidate; further ones use farthest-point seeding. Cluster
/// centroids are the position estimates.
pub fn kmeans_associate<R: Rng + ?Sized>(
    rng: &mut R,
    candidates: &[CandidateSet],
    grid: &[Position3],
    k: usize,
) -> KMeansOutcome {
    let labels: Vec<(usize, usize)> = candidates
        .iter()
        .enumerate()
        .flat_map(|(g, c)| c.indices.iter().map(move |&m| (g, m)))
        .collect();
    let points: Vec<Position3> = labels.iter().map(|&(_, m)| grid[m]).collect();
    assert!(k >= 1 && !points.is_empty(), "need at least one cluster and one candidate");
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    while centroids.len() < k {
        centroids.push(points[farthest(&points, &centroids)]);
    }
    let mut assign = vec![usize::MAX; points.len()];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERS {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        let changed = next != assign;
        assign = next;
        for c in 0..k {
            let mine: Vec<Position3> = points
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == c)
                .map(|(&p, _)| p)
                .collect();
            if mine.is_empty() {
                let others: Vec<Position3> = centroids
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != c)
                    .map(|(_, &q)| q)
                    .collect();
                centroids[c] = points[farthest(&points, &others)];
            } else {
                centroids[c] = mine.iter().fold(Position3::new(0.0, 0.0, 0.0), |a, &b| a + b) * (1.0 / mine.len() as f64);
            }
        }
        if !changed {
            break;
        }
    }
    let mut members = vec![Vec::new(); k];
    for (lab, &a) in labels.iter().zip(&assign) {
        members[a].push(*lab);
    }
    KMeansOutcome {
        clusters: Clusters { members },
        centroids,
        iterations,
    }
}

/// Fused position of one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fused {
    pub position: Position3,
    /// Condition number of `Σ Q`.
    pub condition: f64,
    /// Set when the bundle was too close to parallel and the centroid of the
    /// candidate points was returned instead.
    pub fallback: bool,
}

/// Sum of projectors `Σ (I − q qᵀ)` for unit directions `q`.
pub fn projector_sum(directions: &[Position3]) -> Matrix3<f64> {
    let mut s = Matrix3::zeros();
    for d in directions {
        let q = Vector3::new(d.x, d.y, d.z) / d.norm();
        s += Matrix3::identity() - q * q.transpose();
    }
    s
}

/// Point minimizing the summed squared distance to the lines
/// `origins[l] + s · directions[l]`.
pub fn fuse_lines(origins: &[Position3], directions: &[Position3]) -> Result<(Position3, f64)> {
    let mut s = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (o, d) in origins.iter().zip(directions) {
        let q = Vector3::new(d.x, d.y, d.z) / d.norm();
        let proj = Matrix3::identity() - q * q.transpose();
        s += proj;
        rhs += proj * Vector3::new(o.x, o.y, o.z);
    }
    let eig = s.symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(min > 1e-15 * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::ParallelBundle { condition });
    }
    let x = s
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::ParallelBundle { condition })?;
    Ok((Position3::new(x[0], x[1], x[2]), condition))
}

/// Closed-form fusion of a cluster from the lines joining each gateway to
/// its candidate grid point.
pub fn fuse(cluster: &[(usize, usize)], gateways: &[Position3], grid: &[Position3]) -> Result<Fused> {
    let origins: Vec<Position3> = cluster.iter().map(|&(g, _)| gateways[g]).collect();
    let dirs: Vec<Position3> = cluster.iter().map(|&(g, m)| grid[m] - gateways[g]).collect();
    let centroid = || {
        cluster.iter().fold(Position3::new(0.0, 0.0, 0.0), |a, &(_, m)| a + grid[m]) * (1.0 / cluster.len() as f64)
    };
    let (position, condition) = fuse_lines(&origins, &dirs)?;
    if condition > FUSION_MAX_CONDITION {
        return Ok(Fused {
            position: centroid(),
            condition,
            fallback: true,
        });
    }
    Ok(Fused {
        position,
        condition,
        fallback: false,
    })
}

/// Fusion that never fails: singular bundles also fall back to the centroid.
pub fn fuse_or_centroid(cluster: &[(usize, usize)], gateways: &[Position3], grid: &[Position3]) -> Fused {
    fuse(cluster, gateways, grid).unwrap_or_else(|e| {
        let condition = match e {
            Error::ParallelBundle { condition } => condition,
            _ => f64::INFINITY,
        };
        let c = cluster.iter().fold(Position3::new(0.0, 0.0, 0.0), |a, &(_, m)| a + grid[m]) * (1.0 / cluster.len() as f64);
        Fused {
            position: c,
            condition,
            fallback: true,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perpendicular_unit_offset() {
        let d = line_point_sqdist(Position3::new(0.0, 0.0, 0.0), Position3::new(1.0, 0.0, 0.0), Position3::new(0.0, 1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_on_line_is_zero() {
        let a = Position3::new(1.0, 2.0, 3.0);
        let b = Position3::new(2.0, 4.0, 7.0);
        let c = a + (b - a) * 2.5;
        assert!(line_point_sqdist(a, b, c) < 1e-12);
    }

    #[test]
    fn hungarian_identity_preference() {
        let a = hungarian(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(a, vec![0, 1]);
    }

    #[test]
    fn hungarian_anti_diagonal() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&c);
        assert_eq!(assignment_cost(&c, &a), 5.0);
    }

    #[test]
    fn two_lines_intersect() {
        let p = Position3::new(0.5, 0.5, 18.0);
        let g = [Position3::new(1.0, 1.0, 0.0), Position3::new(-1.0, 1.0, 0.0)];
        let dirs: Vec<Position3> = g.iter().map(|&o| p - o).collect();
        let (x, _) = fuse_lines(&g, &dirs).unwrap();
        assert!(x.distance(p) < 1e-9);
    }

    #[test]
    fn parallel_lines_rejected() {
        let g = [Position3::new(0.0, 0.0, 0.0), Position3::new(1.0, 0.0, 0.0)];
        let d = [Position3::new(0.0, 0.0, 1.0), Position3::new(0.0, 0.0, 2.0)];
        assert!(matches!(fuse_lines(&g, &d), Err(Error::ParallelBundle { .. })));
    }

    #[test]
    fn kmeans_single_cluster_is_centroid() {
        use rand::SeedableRng;
        let grid = vec![Position3::new(0.0, 0.0, 17.0), Position3::new(2.0, 0.0, 17.0), Position3::new(1.0, 3.0, 20.0)];
        let c = vec![
            CandidateSet { indices: vec![0], owner: crate::recovery::Owner::Gateway(0) },
            CandidateSet { indices: vec![1], owner: crate::recovery::Owner::Gateway(1) },
            CandidateSet { indices: vec![2], owner: crate::recovery::Owner::Gateway(2) },
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let out = kmeans_associate(&mut rng, &c, &grid, 1);
        assert!(out.centroids[0].distance(Position3::new(1.0, 1.0, 18.0)) < 1e-12);
    }
}
