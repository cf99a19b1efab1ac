use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_grid, grid_bound, place_nodes, ScenarioConfig};
use crate::association::{fuse_or_centroid, hungarian, kmeans_associate, sequential_associate, Clusters, Fused};
use crate::beamforming::{allocate_power, build_beams, draw_slot_channels, sinr_terms, BeamPlan, SlotPower};
use crate::geometry::Position3;
use crate::network::{Network, NetworkLayout, PointSteering};
use crate::recovery::{
    centralized_omp, cosamp, local_omp, music, Block, CandidateSet, GroupProblem, MusicInputs, MusicOutcome, OmpOptions, Owner,
};
use crate::rng::{Stream, TrialSeed};
use crate::signal::{build_dictionary, music_snapshots, observe_all, GridDictionary, ObservationSet, Reflections, SymbolStream, TxSignals};
use crate::{Error, Result, C64};

/// Sensing frameworks compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Framework {
    ProposedCen,
    ProposedDis,
    OmpNc,
    CosampCen,
    CosampDis,
    MusicCen,
    MusicNc,
    OmpDisKmeans,
}

impl Framework {
    pub const ALL: [Framework; 8] = [
        Framework::ProposedCen,
        Framework::ProposedDis,
        Framework::OmpNc,
        Framework::CosampCen,
        Framework::CosampDis,
        Framework::MusicCen,
        Framework::MusicNc,
        Framework::OmpDisKmeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Framework::ProposedCen => "proposed-cen",
            Framework::ProposedDis => "proposed-dis",
            Framework::OmpNc => "omp-nc",
            Framework::CosampCen => "cosamp-cen",
            Framework::CosampDis => "cosamp-dis",
            Framework::MusicCen => "music-cen",
            Framework::MusicNc => "music-nc",
            Framework::OmpDisKmeans => "omp-dis-kmeans",
        }
    }

    fn uses_dictionary(self) -> bool {
        !matches!(self, Framework::MusicCen | Framework::MusicNc)
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Framework::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown framework `{s}`")))
    }
}

/// Outcome of one framework in one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameworkResult {
    pub framework: Framework,
    pub estimates: Vec<Position3>,
    /// Mean distance to the matched true targets, km; `None` on failure.
    pub distance_error_km: Option<f64>,
    pub failure: Option<String>,
    /// Clusters whose fusion fell back to the candidate centroid.
    pub fusion_fallbacks: usize,
}

/// Everything measured in one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub targets: Vec<Position3>,
    pub grid_bound_km: f64,
    /// `(1/(T·I)) Σ_t Σ_i Σ_u p^c_{i,u}(t)`, watts.
    pub mean_comm_power_w: f64,
    pub feasible: bool,
    /// Lowest SINR threshold enforced over the slots after backoff.
    pub min_threshold: f64,
    pub frameworks: Vec<FrameworkResult>,
}

impl TrialResult {
    pub fn get(&self, fw: Framework) -> Option<&FrameworkResult> {
        self.frameworks.iter().find(|r| r.framework == fw)
    }
}

/// Mean distance between estimates and truth after optimal matching.
pub fn matched_distance_error(estimates: &[Position3], truth: &[Position3]) -> f64 {
    assert_eq!(estimates.len(), truth.len(), "estimate count must equal target count");
    if truth.is_empty() {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| estimates.iter().map(|e| t.distance(*e)).collect())
        .collect();
    let assign = hungarian(&cost);
    assign.iter().enumerate().map(|(r, &c)| cost[r][c]).sum::<f64>() / truth.len() as f64
}

/// Fully synthesized trial, shared by every framework.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub seed: TrialSeed,
    pub k: usize,
    pub spacing_km: f64,
    pub music_snapshots: usize,
    pub noiseless: bool,
    pub network: Network,
    pub beams: BeamPlan,
    pub powers: Vec<SlotPower>,
    pub feasible: bool,
    pub targets: Vec<Position3>,
    pub target_steering: Vec<PointSteering>,
    pub reflections: Reflections,
    pub tx: TxSignals,
    pub observations: ObservationSet,
    pub dictionary: Option<GridDictionary>,
}

/// Places nodes, allocates power, synthesizes signals and observations.
pub fn prepare_trial(cfg: &ScenarioConfig, trial: u64, with_dictionary: bool) -> Result<TrialContext> {
    let seed = TrialSeed::new(cfg.seed, trial);
    let grid = build_grid(&cfg.grid);
    let placement = place_nodes(&seed, cfg, &grid)?;
    let slots = cfg.slot_count();
    let layout = NetworkLayout {
        satellites: cfg.satellites.clone(),
        gateways: cfg.gateways.clone(),
        ues: placement.ues,
        grid,
        sat_array: cfg.sat_array,
        gat_array: cfg.gat_array,
        link: cfg.link,
        noise_power: cfg.noise_power_w(),
        sensing_power: vec![cfg.sensing_power_w; cfg.satellites.len()],
        slots,
    };
    let network = Network::new(layout);
    let beams = build_beams(&network);
    let allocations: Vec<Result<SlotPower>> = (0..slots)
        .into_par_iter()
        .map(|t| {
            let ch = draw_slot_channels(&seed, &network, t);
            allocate_power(&sinr_terms(&network, &ch, &beams, t), cfg.sinr_threshold)
        })
        .collect();
    let feasible = allocations.iter().all(|a| a.is_ok());
    let num_ues = network.layout.num_ues();
    let powers: Vec<SlotPower> = allocations
        .into_iter()
        .map(|a| {
            a.unwrap_or(SlotPower {
                powers: vec![0.0; num_ues],
                threshold: 0.0,
                backoffs: crate::beamforming::MAX_BACKOFFS,
            })
        })
        .collect();
    let symbols = SymbolStream::draw(&seed, &network, slots);
    let tx = TxSignals::build(&network, &beams, &powers, &symbols);
    let target_steering: Vec<PointSteering> = placement.targets.iter().map(|&p| network.point(p)).collect();
    let reflections = Reflections::draw(
        &seed,
        network.layout.num_satellites(),
        placement.targets.len(),
        network.layout.num_gateways(),
        cfg.rcs_m2,
    );
    let observations = observe_all(&network, &target_steering, &reflections, &beams, &tx, &seed, !cfg.noiseless);
    let dictionary = with_dictionary.then(|| build_dictionary(&network, &beams, &tx));
    Ok(TrialContext {
        seed,
        k: cfg.targets,
        spacing_km: cfg.grid.spacing_km,
        music_snapshots: cfg.music_slot_factor * network.layout.num_grid(),
        noiseless: cfg.noiseless,
        network,
        beams,
        powers,
        feasible,
        targets: placement.targets,
        target_steering,
        reflections,
        tx,
        observations,
        dictionary,
    })
}

impl TrialContext {
    pub fn grid(&self) -> &[Position3] {
        &self.network.layout.grid
    }

    pub fn gateways(&self) -> &[Position3] {
        &self.network.layout.gateways
    }

    fn dict(&self) -> &GridDictionary {
        self.dictionary.as_ref().expect("trial prepared without dictionary")
    }

    /// `(1/(T·I)) Σ p`.
    pub fn mean_comm_power(&self) -> f64 {
        let total: f64 = self.powers.iter().map(SlotPower::total).sum();
        total / (self.powers.len() * self.network.layout.num_satellites()) as f64
    }

    fn positions(&self, c: &CandidateSet) -> Vec<Position3> {
        c.indices.iter().map(|&m| self.grid()[m]).collect()
    }

    pub fn centralized_candidates(&self) -> CandidateSet {
        centralized_omp(&self.observations, self.dict(), OmpOptions::known_k(self.k)).0
    }

    pub fn local_candidates(&self, l: usize) -> CandidateSet {
        local_omp(&self.observations, self.dict(), l, OmpOptions::known_k(self.k)).0
    }

    pub fn all_local_candidates(&self) -> Vec<CandidateSet> {
        (0..self.network.layout.num_gateways()).map(|l| self.local_candidates(l)).collect()
    }

    fn problem(&self, gateways: &[usize]) -> GroupProblem<'_> {
        let d = self.dict();
        let blocks = gateways
            .iter()
            .map(|&l| Block {
                y: &self.observations.y[l],
                dict: &d.blocks[l],
            })
            .collect();
        GroupProblem::new(blocks, d.grid_len, d.num_satellites)
    }

    pub fn cosamp_centralized(&self) -> CandidateSet {
        let all: Vec<usize> = (0..self.network.layout.num_gateways()).collect();
        cosamp(&self.problem(&all), self.k, Owner::Centralized).candidates
    }

    pub fn cosamp_local(&self, l: usize) -> CandidateSet {
        cosamp(&self.problem(&[l]), self.k, Owner::Gateway(l)).candidates
    }

    /// Association and fusion at the CU from per-gateway candidate sets.
    pub fn associate_and_fuse(&self, candidates: &[CandidateSet]) -> (Clusters, Vec<Fused>) {
        let clusters = sequential_associate(candidates, self.gateways(), self.grid());
        let fused = clusters
            .members
            .iter()
            .map(|c| fuse_or_centroid(c, self.gateways(), self.grid()))
            .collect();
        (clusters, fused)
    }

    pub fn kmeans_estimates(&self, candidates: &[CandidateSet]) -> Vec<Position3> {
        let mut rng = self.seed.stream(Stream::KMeansSeed, &[]);
        kmeans_associate(&mut rng, candidates, self.grid(), self.k).centroids
    }

    /// MUSIC over the given gateways with satellite 0 transmitting alone.
    pub fn music_candidates(&self, gateways: &[usize]) -> Result<CandidateSet> {
        Ok(self.music_outcome(gateways)?.candidates)
    }

    pub fn music_outcome(&self, gateways: &[usize]) -> Result<MusicOutcome> {
        let lay = &self.network.layout;
        let snaps_all = music_snapshots(
            &self.network,
            &self.target_steering,
            &self.reflections,
            &self.beams,
            &self.seed,
            0,
            lay.num_satellites() as f64,
            self.music_snapshots,
            !self.noiseless,
        );
        let snaps: Vec<_> = gateways.iter().map(|&l| snaps_all[l].clone()).collect();
        let steering: Vec<Vec<&[C64]>> = gateways
            .iter()
            .map(|&l| self.network.grid_steering.iter().map(|g| g.gat[l].as_slice()).collect())
            .collect();
        let gw: Vec<Position3> = gateways.iter().map(|&l| lay.gateways[l]).collect();
        let owner = if gateways.len() == 1 {
            Owner::Gateway(gateways[0])
        } else {
            Owner::Centralized
        };
        music(
            MusicInputs {
                snapshots: &snaps,
                steering: &steering,
                gateways: &gw,
                grid: self.grid(),
                spacing_km: self.spacing_km,
            },
            self.k,
            owner,
        )
    }

    /// Runs one framework end to end.
    pub fn run_framework(&self, fw: Framework, locals: &mut Option<Vec<CandidateSet>>) -> FrameworkResult {
        let mut fallbacks = 0;
        let mut local = |ctx: &Self| -> Vec<CandidateSet> { locals.get_or_insert_with(|| ctx.all_local_candidates()).clone() };
        let estimates: Result<Vec<Position3>> = match fw {
            Framework::ProposedCen => Ok(self.positions(&self.centralized_candidates())),
            Framework::ProposedDis => {
                let (_, fused) = self.associate_and_fuse(&local(self));
                fallbacks = fused.iter().filter(|f| f.fallback).count();
                Ok(fused.iter().map(|f| f.position).collect())
            }
            Framework::OmpNc => Ok(self.positions(&local(self)[0])),
            Framework::CosampCen => Ok(self.positions(&self.cosamp_centralized())),
            Framework::CosampDis => {
                let c: Vec<CandidateSet> = (0..self.network.layout.num_gateways()).map(|l| self.cosamp_local(l)).collect();
                let (_, fused) = self.associate_and_fuse(&c);
                fallbacks = fused.iter().filter(|f| f.fallback).count();
                Ok(fused.iter().map(|f| f.position).collect())
            }
            Framework::MusicCen => {
                let all: Vec<usize> = (0..self.network.layout.num_gateways()).collect();
                self.music_candidates(&all).map(|c| self.positions(&c))
            }
            Framework::MusicNc => self.music_candidates(&[0]).map(|c| self.positions(&c)),
            Framework::OmpDisKmeans => Ok(self.kmeans_estimates(&local(self))),
        };
        match estimates {
            Ok(est) => FrameworkResult {
                framework: fw,
                distance_error_km: Some(matched_distance_error(&est, &self.targets)),
                estimates: est,
                failure: None,
                fusion_fallbacks: fallbacks,
            },
            Err(e) => FrameworkResult {
                framework: fw,
                estimates: Vec::new(),
                distance_error_km: None,
                failure: Some(e.to_string()),
                fusion_fallbacks: 0,
            },
        }
    }
}

/// Runs one seeded trial for the requested frameworks.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64, frameworks: &[Framework]) -> Result<TrialResult> {
    let with_dict = frameworks.iter().any(|f| f.uses_dictionary());
    let ctx = prepare_trial(cfg, trial, with_dict)?;
    let mut locals = None;
    let results = frameworks.iter().map(|&fw| ctx.run_framework(fw, &mut locals)).collect();
    Ok(TrialResult {
        trial,
        grid_bound_km: grid_bound(&ctx.targets, ctx.grid()),
        mean_comm_power_w: ctx.mean_comm_power(),
        feasible: ctx.feasible,
        min_threshold: ctx.powers.iter().map(|p| p.threshold).fold(f64::INFINITY, f64::min),
        targets: ctx.targets.clone(),
        frameworks: results,
    })
}
