//! Oracle-equivalence and invariant suites.
//!
//! Each check pairs a production routine with an independent reference
//! (exhaustive search, iterative minimizer, generic simplex, direct sum) and
//! reports the worst discrepancy found.

use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::association::{
    assignment_cost, fuse_lines, hungarian, line_point_sqdist, projector_sum, sequential_associate,
};
use crate::beamforming::{solve_power_system, SinrTable};
use crate::experiments::{prepare_trial, ScenarioConfig, TargetPlacement, TrialContext};
use crate::geometry::{crosstalk, crosstalk_closed_form, AngleConvention, Direction, Position3, UpaGeometry};
use crate::recovery::{group_least_squares, group_omp, Block, GroupProblem, OmpOptions};

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckReport {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> (bool, String)) -> CheckReport {
    let start = Instant::now();
    let (passed, detail) = f();
    CheckReport {
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Exhaustive minimum assignment cost.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    permutations(cost.len())
        .iter()
        .map(|p| assignment_cost(cost, p))
        .fold(f64::INFINITY, f64::min)
}

/// Hungarian cost equals the exhaustive minimum on random matrices.
pub fn check_hungarian(instances: usize, seed: u64) -> CheckReport {
    timed("hungarian-vs-exhaustive", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mismatches = 0;
        for n in 0..instances {
            let k = 1 + n % 6;
            let cost: Vec<Vec<f64>> = (0..k).map(|_| (0..k).map(|_| rng.random::<f64>() * 10.0).collect()).collect();
            let got = assignment_cost(&cost, &hungarian(&cost));
            if got != brute_force_assignment(&cost) {
                mismatches += 1;
            }
        }
        (mismatches == 0, format!("{instances} matrices, K<=6, {mismatches} mismatches"))
    })
}

/// Summed squared line distance `Σ ‖(x−o) − ((x−o)·d̂) d̂‖²`.
pub fn bundle_objective(x: Position3, origins: &[Position3], dirs: &[Position3]) -> f64 {
    origins
        .iter()
        .zip(dirs)
        .map(|(&o, &d)| line_point_sqdist(o, o + d, x))
        .sum()
}

/// Plain gradient descent on the bundle objective from the centroid of the
/// line points `o + d`.
pub fn numeric_bundle_minimizer(origins: &[Position3], dirs: &[Position3], steps: usize) -> Position3 {
    let n = origins.len() as f64;
    let mut x = origins
        .iter()
        .zip(dirs)
        .fold(Position3::default(), |a, (&o, &d)| a + o + d)
        * (1.0 / n);
    // The Hessian is 2 Σ (I − d̂d̂ᵀ), whose spectrum is bounded by 2L.
    let eta = 1.0 / (2.0 * n);
    for _ in 0..steps {
        let mut g = Position3::default();
        for (&o, &d) in origins.iter().zip(dirs) {
            let u = d * (1.0 / d.norm());
            let w = x - o;
            let perp = w - u * w.dot(u);
            g = g + perp * 2.0;
        }
        x = x - g * eta;
    }
    x
}

fn random_bundle(rng: &mut ChaCha8Rng) -> (Vec<Position3>, Vec<Position3>) {
    let l = rng.random_range(2..=4);
    let center = Position3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(5.0..20.0));
    let mut origins = Vec::new();
    let mut dirs = Vec::new();
    for _ in 0..l {
        let o = Position3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), 0.0);
        let jitter = Position3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        origins.push(o);
        dirs.push(center + jitter - o);
    }
    (origins, dirs)
}

/// Closed-form fusion matches gradient descent on random bundles.
pub fn check_fusion(instances: usize, seed: u64) -> CheckReport {
    timed("fusion-vs-numeric", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..instances {
            let (o, d) = random_bundle(&mut rng);
            match fuse_lines(&o, &d) {
                Ok((x, _)) => {
                    let y = numeric_bundle_minimizer(&o, &d, 10_000);
                    worst = worst.max(x.distance(y));
                }
                Err(_) => failures += 1,
            }
        }
        (
            failures == 0 && worst <= 1e-6,
            format!("{instances} bundles, L<=4, max gap {worst:.3e} km, {failures} singular"),
        )
    })
}

/// Generic simplex on `min Σp` subject to the SINR constraints.
pub fn simplex_power(terms: &SinrTable, tau: f64) -> Option<Vec<f64>> {
    let n = terms.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    // Rows are normalized by the direct-link power to keep coefficients O(1).
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for a in 0..n {
        let d = terms.chi[a][a];
        let expr: Vec<_> = (0..n)
            .map(|b| {
                let c = if a == b { 1.0 } else { -tau * terms.chi[a][b] / d };
                (vars[b], c)
            })
            .collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, tau * terms.nu[a] / d);
    }
    match lp.solve().ok()? {
        SolveOutcome::Solution(sol) => Some(vars.iter().map(|&v| sol[v]).collect()),
        SolveOutcome::Interrupted(_) => None,
    }
}

fn random_sinr_instance(rng: &mut ChaCha8Rng) -> (SinrTable, f64) {
    let n = rng.random_range(1..=10);
    let tau = 10f64.powf(rng.random_range(-1.5..0.5));
    loop {
        let chi: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if a == b {
                            rng.random_range(0.5..2.0)
                        } else {
                            rng.random_range(0.0..0.3) / n as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let nu: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let t = SinrTable { chi, nu };
        if t.dominant(tau) {
            return (t, tau);
        }
    }
}

/// Linear-system power solution matches the simplex optimum and is SINR-tight.
pub fn check_power(instances: usize, seed: u64) -> CheckReport {
    timed("power-vs-simplex", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_total: f64 = 0.0;
        let mut worst_sinr: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..instances {
            let (t, tau) = random_sinr_instance(&mut rng);
            let (Some(p), Some(q)) = (solve_power_system(&t, tau), simplex_power(&t, tau)) else {
                failures += 1;
                continue;
            };
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            worst_total = worst_total.max((sp - sq).abs() / sq.abs());
            for s in t.sinr(&p) {
                worst_sinr = worst_sinr.max((s - tau).abs() / tau);
            }
        }
        (
            failures == 0 && worst_total <= 1e-8 && worst_sinr <= 1e-9,
            format!(
                "{instances} instances, U<=10, max total-power gap {worst_total:.3e}, max SINR gap {worst_sinr:.3e}, {failures} failed"
            ),
        )
    })
}

fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    Direction::new(
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        AngleConvention::Downlook,
    )
}

/// Closed-form crosstalk agrees with the direct inner product; normalized
/// crosstalk of a fixed distinct pair shrinks as the array grows.
pub fn check_crosstalk(pairs: usize, seed: u64) -> CheckReport {
    timed("crosstalk-closed-form", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // (relative gap, crosstalk / n at that pair)
        let mut worst = (0.0, 0.0);
        for side in [4, 8, 16] {
            let g = UpaGeometry::square(side);
            for _ in 0..pairs {
                let (a, b) = (random_direction(&mut rng), random_direction(&mut rng));
                let direct = crosstalk(g, a, b);
                let closed = crosstalk_closed_form(g, a, b);
                let gap = (direct - closed).abs() / direct.abs().max(f64::MIN_POSITIVE);
                if gap > worst.0 {
                    worst = (gap, direct / g.len() as f64);
                }
            }
        }
        let d1 = Direction::new(0.30, 0.20, AngleConvention::Downlook);
        let d2 = Direction::new(0.38, 0.28, AngleConvention::Downlook);
        let norm: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&s| crosstalk(UpaGeometry::square(s), d1, d2) / (s * s) as f64)
            .collect();
        let decreasing = norm.windows(2).all(|w| w[1] < w[0]);
        (
            worst.0 <= 1e-10 && decreasing,
            format!(
                "{pairs} pairs per n in {{16,64,256}}, max relative gap {:.3e} (at crosstalk/n = {:.1e}); normalized crosstalk {:.3e} > {:.3e} > {:.3e}",
                worst.0, worst.1, norm[0], norm[1], norm[2]
            ),
        )
    })
}

/// Desk scenario with noiseless, on-grid targets.
pub fn noiseless_on_grid(k: usize, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        targets: k,
        target_placement: TargetPlacement::OnGrid,
        noiseless: true,
        seed,
        ..ScenarioConfig::desk()
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn truth_indices(ctx: &TrialContext) -> Vec<usize> {
    sorted(
        ctx.targets
            .iter()
            .map(|t| ctx.grid().iter().position(|g| g == t).expect("on-grid target"))
            .collect(),
    )
}

/// Counts of exact support recovery in noiseless on-grid trials.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactRecovery {
    pub trials: usize,
    pub centralized: usize,
    /// Trials in which every gateway's local support was exact.
    pub all_local: usize,
    /// Per-gateway exact counts summed over gateways.
    pub local_hits: usize,
    pub local_total: usize,
}

/// Runs `trials` noiseless on-grid desk trials with K cycling through 1..=3.
pub fn exact_recovery(trials: usize, seed: u64) -> ExactRecovery {
    let mut r = ExactRecovery {
        trials,
        ..Default::default()
    };
    for t in 0..trials {
        let cfg = noiseless_on_grid(1 + t % 3, seed);
        let ctx = prepare_trial(&cfg, t as u64, true).expect("desk trial");
        let truth = truth_indices(&ctx);
        if sorted(ctx.centralized_candidates().indices) == truth {
            r.centralized += 1;
        }
        let mut all = true;
        for c in ctx.all_local_candidates() {
            r.local_total += 1;
            if sorted(c.indices) == truth {
                r.local_hits += 1;
            } else {
                all = false;
            }
        }
        if all {
            r.all_local += 1;
        }
    }
    r
}

/// Every `k`-subset of `0..m` in lexicographic order.
pub fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > m {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < m - k + i) else {
            break;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

/// Support minimizing the stacked least-squares residual, by exhaustion.
pub fn brute_force_support(problem: &GroupProblem<'_>, k: usize) -> Vec<usize> {
    let mut best = (f64::INFINITY, Vec::new());
    for s in combinations(problem.grid_len, k) {
        let r: f64 = group_least_squares(problem, &s)
            .iter()
            .flat_map(|f| f.residual.iter())
            .map(|v| v.norm_sqr())
            .sum();
        if r < best.0 {
            best = (r, s);
        }
    }
    best.1
}

/// Reduced scenario for exhaustive support search: 5 km spacing gives
/// 5 points per layer, `M = 20`.
pub fn small_grid_noiseless(k: usize, seed: u64) -> ScenarioConfig {
    let mut cfg = noiseless_on_grid(k, seed);
    cfg.grid.spacing_km = 5.0;
    cfg
}

/// `(agreements, instances)` of OMP versus exhaustive support search.
pub fn brute_force_agreement(instances: usize, seed: u64) -> (usize, usize) {
    let mut agree = 0;
    for t in 0..instances {
        let k = 1 + t % 2;
        let ctx = prepare_trial(&small_grid_noiseless(k, seed), t as u64, true).expect("small trial");
        let d = ctx.dictionary.as_ref().unwrap();
        let blocks = ctx
            .observations
            .y
            .iter()
            .zip(&d.blocks)
            .map(|(y, b)| Block { y, dict: b })
            .collect();
        let p = GroupProblem::new(blocks, d.grid_len, d.num_satellites);
        let omp = sorted(group_omp(&p, OmpOptions::known_k(k)).support);
        if omp == brute_force_support(&p, k) {
            agree += 1;
        }
    }
    (agree, instances)
}

pub fn check_exact_recovery(trials: usize, seed: u64) -> CheckReport {
    timed("noiseless-exact-recovery", || {
        let r = exact_recovery(trials, seed);
        let (agree, n) = brute_force_agreement(20, seed);
        let need = (trials * 99).div_ceil(100);
        (
            r.centralized >= need && r.all_local >= need && agree == n,
            format!(
                "centralized {}/{}, all-gateway local {}/{} (per-gateway {}/{}), brute-force agreement {}/{}",
                r.centralized, r.trials, r.all_local, r.trials, r.local_hits, r.local_total, agree, n
            ),
        )
    })
}

/// Worst invariant violations over a set of trials.
#[derive(Debug, Clone, Default)]
pub struct InvariantSummary {
    pub modulus_violations: usize,
    pub max_modulus_dev: f64,
    pub residual_increases: usize,
    pub max_orthogonality: f64,
    pub cluster_violations: usize,
    pub min_projector_eigen: f64,
    pub determinism_failures: usize,
    pub trials: usize,
}

impl InvariantSummary {
    pub fn holds(&self) -> bool {
        self.modulus_violations == 0
            && self.residual_increases == 0
            && self.max_orthogonality <= 1e-8
            && self.cluster_violations == 0
            && self.min_projector_eigen >= -1e-12
            && self.determinism_failures == 0
    }
}

/// Runs the invariant suite on `trials` noisy desk trials.
pub fn invariants(trials: usize, seed: u64) -> InvariantSummary {
    use crate::recovery::{centralized_omp, local_omp};
    let mut s = InvariantSummary {
        min_projector_eigen: f64::INFINITY,
        trials,
        ..Default::default()
    };
    for t in 0..trials {
        let cfg = ScenarioConfig {
            targets: 1 + t % 4,
            seed,
            ..ScenarioConfig::desk()
        };
        let ctx = prepare_trial(&cfg, t as u64, true).expect("desk trial");
        for b in ctx.beams.all_beams() {
            let want = 1.0 / (b.len() as f64).sqrt();
            if b.amplitude() != want {
                s.modulus_violations += 1;
            }
            for v in b.values() {
                s.max_modulus_dev = s.max_modulus_dev.max((v.norm() - want).abs());
            }
        }
        let d = ctx.dictionary.as_ref().unwrap();
        let mut traces = vec![centralized_omp(&ctx.observations, d, OmpOptions::known_k(cfg.targets)).1];
        let mut locals = Vec::new();
        for l in 0..ctx.gateways().len() {
            let (c, tr) = local_omp(&ctx.observations, d, l, OmpOptions::known_k(cfg.targets));
            locals.push(c);
            traces.push(tr);
        }
        for tr in &traces {
            s.residual_increases += tr.residual_norms.windows(2).filter(|w| w[1] > w[0]).count();
            for &o in &tr.orthogonality {
                s.max_orthogonality = s.max_orthogonality.max(o);
            }
        }
        let clusters = sequential_associate(&locals, ctx.gateways(), ctx.grid());
        if !clusters.satisfies_constraints(&locals) {
            s.cluster_violations += 1;
        }
        for c in &clusters.members {
            let dirs: Vec<Position3> = c.iter().map(|&(g, m)| ctx.grid()[m] - ctx.gateways()[g]).collect();
            let e = projector_sum(&dirs).symmetric_eigen();
            s.min_projector_eigen = s.min_projector_eigen.min(e.eigenvalues.min());
        }
        if t < 3 {
            let fws = crate::experiments::Framework::ALL;
            let a = crate::experiments::run_trial(&cfg, t as u64, &fws).expect("trial");
            let b = crate::experiments::run_trial(&cfg, t as u64, &fws).expect("trial");
            if a != b {
                s.determinism_failures += 1;
            }
        }
    }
    s
}

pub fn check_invariants(trials: usize, seed: u64) -> CheckReport {
    timed("invariants", || {
        let s = invariants(trials, seed);
        (
            s.holds(),
            format!(
                "{} trials: modulus violations {} (max entry deviation {:.1e}), residual increases {}, max orthogonality {:.2e}, cluster violations {}, min projector eigenvalue {:.2e}, determinism failures {}",
                s.trials,
                s.modulus_violations,
                s.max_modulus_dev,
                s.residual_increases,
                s.max_orthogonality,
                s.cluster_violations,
                s.min_projector_eigen,
                s.determinism_failures
            ),
        )
    })
}

/// The oracle and invariant suites run by `validate`.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    vec![
        check_hungarian(500, seed),
        check_fusion(200, seed),
        check_power(100, seed),
        check_crosstalk(1000, seed),
        check_exact_recovery(100, seed),
        check_invariants(20, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_and_combination_counts() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(20, 2).len(), 190);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn simplex_single_ue() {
        let t = SinrTable {
            chi: vec![vec![2.0]],
            nu: vec![0.5],
        };
        let p = simplex_power(&t, 0.4).unwrap();
        assert!((p[0] - 0.1).abs() < 1e-12);
    }
}
