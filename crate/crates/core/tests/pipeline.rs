use isac_core::association::{
    association_objective, assignment_cost, hungarian, kmeans_associate, line_point_sqdist, sequential_associate, Clusters,
};
use isac_core::beamforming::{build_beams, MAX_BACKOFFS};
use isac_core::experiments::{
    build_grid, grid_bound, place_nodes, prepare_trial, run_trial, sweep, write_csv, Framework, GridSpec,
    ScenarioConfig, SweepAxis, TargetPlacement, TrialContext,
};
use isac_core::geometry::{crosstalk, uplook_direction, Position3, UpaGeometry};
use isac_core::recovery::{
    centralized_omp, group_least_squares, group_scores, local_omp, Block, CandidateSet, GroupProblem, OmpOptions, Owner,
};
use isac_core::rng::{Stream, TrialSeed};
use isac_core::signal::{combined_noise, dump, observe_all, synthesize_tx, SymbolStream, TxSignals};
use isac_core::validation::{noiseless_on_grid, permutations};
use isac_core::C64;
use rand::Rng;

fn small(k: usize) -> ScenarioConfig {
    ScenarioConfig {
        targets: k,
        seed: 11,
        ..ScenarioConfig::desk()
    }
}

fn truth_index(ctx: &TrialContext, k: usize) -> usize {
    ctx.grid().iter().position(|g| *g == ctx.targets[k]).unwrap()
}

fn problem<'a>(ctx: &'a TrialContext, gateways: &[usize]) -> GroupProblem<'a> {
    let d = ctx.dictionary.as_ref().unwrap();
    GroupProblem::new(
        gateways
            .iter()
            .map(|&l| Block {
                y: &ctx.observations.y[l],
                dict: &d.blocks[l],
            })
            .collect(),
        d.grid_len,
        d.num_satellites,
    )
}

#[test]
fn sensing_only_signal_has_sensing_power() {
    let ctx = prepare_trial(&small(1), 0, false).unwrap();
    let symbols = SymbolStream::draw(&ctx.seed, &ctx.network, 5);
    let zeros = vec![0.0; ctx.network.layout.ues[0].len()];
    for t in 0..5 {
        let x = synthesize_tx(&ctx.beams, &zeros, &symbols, 0, t);
        let e: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        assert!((e - ctx.beams.sensing_power(0)).abs() < 1e-12 * e);
    }
}

#[test]
fn symbols_have_unit_modulus() {
    let ctx = prepare_trial(&small(1), 0, false).unwrap();
    let s = SymbolStream::draw(&ctx.seed, &ctx.network, 30);
    for v in s.sensing.iter().flatten().chain(s.comm.iter().flatten().flatten()) {
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn combined_noise_variance_matches_psd() {
    let mut rng = TrialSeed::new(3, 0).stream(Stream::GatewayNoise, &[0]);
    let w: Vec<C64> = (0..64).map(|n| C64::from_polar(0.125, n as f64 * 0.37)).collect();
    let sigma2 = 2.5e-14;
    let n = 10_000;
    let var = (0..n).map(|_| combined_noise(&mut rng, &w, sigma2).norm_sqr()).sum::<f64>() / n as f64;
    assert!((var / sigma2 - 1.0).abs() < 0.05, "ratio {}", var / sigma2);
}

#[test]
fn on_grid_observation_lies_in_truth_span() {
    for t in 0..3 {
        let ctx = prepare_trial(&noiseless_on_grid(1, 5), t, true).unwrap();
        let p = problem(&ctx, &[0, 1, 2, 3]);
        let truth = truth_index(&ctx, 0);
        let r: f64 = group_least_squares(&p, &[truth])
            .iter()
            .flat_map(|f| f.residual.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(r <= 1e-10 * p.observation_norm(), "residual {r}");
        // the fitted group coefficients are the reflection coefficients
        for (l, f) in group_least_squares(&p, &[truth]).iter().enumerate() {
            for (i, c) in f.coefficients.iter().enumerate() {
                let rho = ctx.reflections.rho[i][0][l];
                assert!((c - rho).norm() <= 1e-8 * rho.norm());
            }
        }
    }
}

#[test]
fn dictionary_columns_nonzero_and_rebuild_identical() {
    let a = prepare_trial(&small(2), 4, true).unwrap();
    let b = prepare_trial(&small(2), 4, true).unwrap();
    let (da, db) = (a.dictionary.unwrap(), b.dictionary.unwrap());
    assert_eq!(da, db);
    for blk in &da.blocks {
        for c in 0..blk.cols() {
            assert!(blk.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>() > 0.0);
        }
    }
}

#[test]
fn observation_linear_in_reflection() {
    let ctx = prepare_trial(&noiseless_on_grid(2, 5), 1, false).unwrap();
    let doubled = ctx.reflections.scaled(2.0);
    let y2 = observe_all(&ctx.network, &ctx.target_steering, &doubled, &ctx.beams, &ctx.tx, &ctx.seed, false);
    for (a, b) in ctx.observations.y.iter().flatten().zip(y2.y.iter().flatten()) {
        assert!((a * 2.0 - b).norm() <= 1e-12 * b.norm().max(1e-300));
    }
}

#[test]
fn observation_linear_in_root_sensing_power() {
    let ctx = prepare_trial(&noiseless_on_grid(1, 5), 2, false).unwrap();
    let slots = ctx.tx.slots();
    let symbols = SymbolStream::draw(&ctx.seed, &ctx.network, slots);
    let zero: Vec<_> = ctx
        .powers
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.powers.iter_mut().for_each(|x| *x = 0.0);
            p
        })
        .collect();
    let observe = |scale: f64| {
        let mut net = ctx.network.clone();
        net.layout.sensing_power.iter_mut().for_each(|p| *p *= scale);
        let beams = build_beams(&net);
        let tx = TxSignals::build(&net, &beams, &zero, &symbols);
        observe_all(&net, &ctx.target_steering, &ctx.reflections, &beams, &tx, &ctx.seed, false)
    };
    let (a, b) = (observe(1.0), observe(4.0));
    for (x, y) in a.y.iter().flatten().zip(b.y.iter().flatten()) {
        assert!((x * 2.0 - y).norm() <= 1e-12 * y.norm().max(1e-300));
    }
}

#[test]
fn dump_round_trip_and_rejects_corruption() {
    let ctx = prepare_trial(&small(1), 0, true).unwrap();
    let d = ctx.dictionary.as_ref().unwrap();
    let mut buf = Vec::new();
    dump::write_observations(&mut buf, &ctx.observations, d.grid_len, d.num_satellites).unwrap();
    let (h, vals) = dump::read(&mut buf.as_slice()).unwrap();
    assert_eq!(h.slots as usize, ctx.observations.slots());
    assert_eq!(h.num_gateways, 4);
    assert_eq!(vals, ctx.observations.y.iter().flatten().copied().collect::<Vec<_>>());

    let mut buf = Vec::new();
    dump::write_dictionary(&mut buf, d).unwrap();
    let (_, vals) = dump::read(&mut buf.as_slice()).unwrap();
    assert_eq!(vals, d.blocks.iter().flat_map(|b| b.data().iter().copied()).collect::<Vec<_>>());

    let mut bad = buf.clone();
    bad[0] ^= 1;
    assert!(dump::read(&mut bad.as_slice()).is_err());
    let mut long = buf.clone();
    long.push(0);
    assert!(dump::read(&mut long.as_slice()).is_err());
    assert!(dump::read(&mut &buf[..buf.len() - 1]).is_err());
}

#[test]
fn power_grows_with_sensing_power_on_fixed_channels() {
    for t in 0..4 {
        let lo = prepare_trial(&ScenarioConfig { sensing_power_w: 1.0, ..small(1) }, t, false).unwrap();
        let hi = prepare_trial(&ScenarioConfig { sensing_power_w: 4.0, ..small(1) }, t, false).unwrap();
        for (a, b) in lo.powers.iter().zip(&hi.powers) {
            if a.backoffs == 0 && b.backoffs == 0 {
                for (pa, pb) in a.powers.iter().zip(&b.powers) {
                    assert!(pb >= pa, "slot power decreased {pa} -> {pb}");
                }
            }
        }
    }
}

#[test]
fn infeasible_slots_keep_zero_power() {
    let cfg = ScenarioConfig {
        sinr_threshold: 1e6,
        ..small(1)
    };
    let ctx = prepare_trial(&cfg, 0, false).unwrap();
    assert!(!ctx.feasible);
    assert!(ctx.powers.iter().any(|p| p.backoffs == MAX_BACKOFFS && p.total() == 0.0));
}

#[test]
fn single_gateway_centralized_equals_local() {
    let mut cfg = small(2);
    cfg.gateways.truncate(1);
    for t in 0..3 {
        let ctx = prepare_trial(&cfg, t, true).unwrap();
        let d = ctx.dictionary.as_ref().unwrap();
        let (c, _) = centralized_omp(&ctx.observations, d, OmpOptions::known_k(2));
        let (l, _) = local_omp(&ctx.observations, d, 0, OmpOptions::known_k(2));
        assert_eq!(c.indices, l.indices);
    }
}

#[test]
fn first_pick_is_exhaustive_argmax() {
    for t in 0..5 {
        let ctx = prepare_trial(&noiseless_on_grid(1, 9), t, true).unwrap();
        let d = ctx.dictionary.as_ref().unwrap();
        let (c, _) = centralized_omp(&ctx.observations, d, OmpOptions::known_k(1));
        let mut best = (f64::NEG_INFINITY, 0);
        for m in 0..d.grid_len {
            let mut s = 0.0;
            for l in 0..d.num_gateways() {
                for i in 0..d.num_satellites {
                    let a = d.column(l, i, m);
                    let y = &ctx.observations.y[l];
                    s += a.iter().zip(y).map(|(a, y)| a.conj() * y).sum::<C64>().norm();
                }
            }
            if s > best.0 {
                best = (s, m);
            }
        }
        assert_eq!(c.indices, vec![best.1]);
        let scores = group_scores(&problem(&ctx, &[0, 1, 2, 3]), &ctx.observations.y);
        assert!((scores[best.1] - best.0).abs() <= 1e-12 * best.0);
    }
}

#[test]
fn music_argmax_shares_view_direction() {
    for t in 0..5 {
        let mut cfg = noiseless_on_grid(1, 9);
        cfg.gat_array = UpaGeometry::square(4);
        let ctx = prepare_trial(&cfg, t, false).unwrap();
        let c = ctx.music_candidates(&[0]).unwrap();
        let g = ctx.gateways()[0];
        let x = crosstalk(
            cfg.gat_array,
            uplook_direction(g, ctx.grid()[c.indices[0]]),
            uplook_direction(g, ctx.targets[0]),
        );
        assert!(x >= 0.9 * 16.0, "crosstalk {x}");
    }
}

#[test]
fn line_distance_matches_cross_product_form() {
    let mut rng = TrialSeed::new(1, 1).stream(Stream::KMeansSeed, &[]);
    let mut p = || Position3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    for _ in 0..200 {
        let (a, b, c) = (p(), p(), p());
        let want = (c - a).cross(b - a).norm_sq() / (b - a).norm_sq();
        assert!((line_point_sqdist(a, b, c) - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn hungarian_row_shift_invariant() {
    let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
    let base = hungarian(&cost);
    let mut shifted = cost.clone();
    shifted[1].iter_mut().for_each(|c| *c += 7.5);
    assert_eq!(hungarian(&shifted), base);
    assert_eq!(assignment_cost(&cost, &base), 5.0);
}

fn candidate_sets(sets: &[Vec<usize>]) -> Vec<CandidateSet> {
    sets.iter()
        .enumerate()
        .map(|(g, s)| CandidateSet {
            indices: s.clone(),
            owner: Owner::Gateway(g),
        })
        .collect()
}

#[test]
fn two_gateway_association_is_single_matching() {
    let grid = build_grid(&GridSpec::default());
    let gw = [Position3::new(1.0, 1.0, 0.0), Position3::new(1.0, -1.0, 0.0)];
    let c = candidate_sets(&[vec![3, 40, 77], vec![41, 76, 2]]);
    let got = sequential_associate(&c, &gw, &grid);
    let cost: Vec<Vec<f64>> = c[1]
        .indices
        .iter()
        .map(|&m| c[0].indices.iter().map(|&n| line_point_sqdist(gw[1], grid[m], grid[n])).collect())
        .collect();
    let assign = hungarian(&cost);
    for (k, &kk) in assign.iter().enumerate() {
        let cluster = got.members.iter().find(|cl| cl.contains(&(0, c[0].indices[kk]))).unwrap();
        assert!(cluster.contains(&(1, c[1].indices[k])));
    }
}

/// Exhaustive optimum of the association objective over `(K!)^(L−1)`
/// assignments.
fn brute_force_objective(c: &[CandidateSet], gw: &[Position3], grid: &[Position3]) -> f64 {
    let k = c[0].indices.len();
    let perms = permutations(k);
    let l = c.len();
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; l - 1];
    loop {
        let members = (0..k)
            .map(|kk| {
                let mut m = vec![(0, c[0].indices[kk])];
                for g in 1..l {
                    m.push((g, c[g].indices[perms[choice[g - 1]][kk]]));
                }
                m
            })
            .collect();
        best = best.min(association_objective(&Clusters { members }, gw, grid));
        let mut i = 0;
        while i < l - 1 {
            choice[i] += 1;
            if choice[i] < perms.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == l - 1 {
            break;
        }
    }
    best
}

#[test]
fn sequential_association_optimal_when_well_separated() {
    let grid = build_grid(&GridSpec::default());
    let gw = ScenarioConfig::full().gateways;
    let mut rng = TrialSeed::new(5, 0).stream(Stream::KMeansSeed, &[]);
    let mut checked = 0;
    while checked < 40 {
        let k = rng.random_range(1..=3);
        let l = rng.random_range(2..=4);
        let truth: Vec<usize> = rand::seq::index::sample(&mut rng, grid.len(), k).into_vec();
        let separated = truth
            .iter()
            .all(|&a| truth.iter().all(|&b| a == b || grid[a].distance(grid[b]) >= 3.0));
        if !separated {
            continue;
        }
        checked += 1;
        let sets: Vec<Vec<usize>> = (0..l)
            .map(|_| {
                let mut s = truth.clone();
                for i in (1..s.len()).rev() {
                    s.swap(i, rng.random_range(0..=i));
                }
                s
            })
            .collect();
        let c = candidate_sets(&sets);
        let got = sequential_associate(&c, &gw[..l], &grid);
        let opt = brute_force_objective(&c, &gw[..l], &grid);
        assert!((association_objective(&got, &gw[..l], &grid) - opt).abs() <= 1e-9 * opt.max(1.0));
    }
}

#[test]
fn kmeans_recovers_coincident_candidates() {
    let grid = build_grid(&GridSpec::default());
    let c = candidate_sets(&[vec![5, 100, 200], vec![200, 5, 100], vec![100, 200, 5]]);
    let mut rng = TrialSeed::new(2, 0).stream(Stream::KMeansSeed, &[]);
    let out = kmeans_associate(&mut rng, &c, &grid, 3);
    let mut got: Vec<[f64; 3]> = out.centroids.iter().map(|p| p.to_array()).collect();
    let mut want: Vec<[f64; 3]> = [5, 100, 200].iter().map(|&m| grid[m].to_array()).collect();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(got, want);
}

#[test]
fn placement_respects_constraints_and_seed() {
    let cfg = ScenarioConfig::desk();
    let grid = build_grid(&cfg.grid);
    for t in 0..20 {
        let seed = TrialSeed::new(8, t);
        let p = place_nodes(&seed, &cfg, &grid).unwrap();
        for ues in &p.ues {
            for (a, ua) in ues.iter().enumerate() {
                for ub in &ues[a + 1..] {
                    assert!(ua.distance(*ub) >= 10.0);
                }
            }
        }
        for q in &p.targets {
            assert!((17.0..=20.0).contains(&q.z));
            assert!(q.horizontal_norm() <= 5.0);
        }
        let again = place_nodes(&seed, &cfg, &grid).unwrap();
        assert_eq!(p.targets, again.targets);
        assert_eq!(p.ues, again.ues);
    }
}

#[test]
fn on_grid_targets_are_distinct_grid_points() {
    let cfg = ScenarioConfig {
        targets: 5,
        target_placement: TargetPlacement::OnGrid,
        ..ScenarioConfig::desk()
    };
    let grid = build_grid(&cfg.grid);
    let p = place_nodes(&TrialSeed::new(1, 0), &cfg, &grid).unwrap();
    assert_eq!(grid_bound(&p.targets, &grid), 0.0);
    for (a, ta) in p.targets.iter().enumerate() {
        assert!(p.targets[a + 1..].iter().all(|tb| tb != ta));
    }
}

#[test]
fn trial_is_bit_reproducible_and_trials_differ() {
    let cfg = small(2);
    let a = run_trial(&cfg, 3, &Framework::ALL).unwrap();
    let b = run_trial(&cfg, 3, &Framework::ALL).unwrap();
    assert_eq!(a, b);
    let c = run_trial(&cfg, 4, &Framework::ALL).unwrap();
    assert_ne!(a.targets, c.targets);
}

#[test]
fn framework_gating() {
    let r = run_trial(&small(2), 0, &[Framework::ProposedCen]).unwrap();
    assert_eq!(r.frameworks.len(), 1);
    assert_eq!(r.frameworks[0].framework, Framework::ProposedCen);
    assert_eq!(r.frameworks[0].fusion_fallbacks, 0);
}

#[test]
fn single_gateway_distributed_is_local_pick() {
    let mut cfg = small(1);
    cfg.gateways.truncate(1);
    let r = run_trial(&cfg, 0, &[Framework::ProposedDis, Framework::OmpNc]).unwrap();
    assert_eq!(r.frameworks[0].estimates, r.frameworks[1].estimates);
}

#[test]
fn sweep_csv_is_byte_identical() {
    let cfg = ScenarioConfig { seed: 7, ..ScenarioConfig::desk() };
    let fws = [Framework::ProposedCen, Framework::ProposedDis, Framework::OmpNc];
    let run = || {
        let rows = sweep(&cfg, SweepAxis::Gateways, &[1.0, 2.0], 3, &fws).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &rows).unwrap();
        out
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("axis,value,framework,mean_distance_error_km,stderr_km,mean_comm_power_w,feasibility_rate,trials,seed\n"));
    assert!(text.contains("\ngateways,2,proposed-dis,"));
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}

#[test]
fn sweep_rejects_bad_axis_values() {
    let cfg = ScenarioConfig::desk();
    assert!(sweep(&cfg, SweepAxis::Gateways, &[5.0], 1, &[Framework::OmpNc]).is_err());
    assert!(sweep(&cfg, SweepAxis::Targets, &[1.5], 1, &[Framework::OmpNc]).is_err());
    assert!(sweep(&cfg, SweepAxis::Power, &[-1.0], 1, &[Framework::OmpNc]).is_err());
    assert!(sweep(&cfg, SweepAxis::Slots, &[], 1, &[Framework::OmpNc]).is_err());
}
