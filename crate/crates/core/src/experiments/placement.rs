use rand::seq::index::sample;
use rand::Rng;

use super::{ScenarioConfig, TargetPlacement};
use crate::geometry::Position3;
use crate::rng::{Stream, TrialSeed};
use crate::{Error, Result};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Uniform point on a disc of `radius` around `(cx, cy)`.
pub fn uniform_disc<R: Rng + ?Sized>(rng: &mut R, cx: f64, cy: f64, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random::<f64>() * std::f64::consts::TAU;
    (cx + r * a.cos(), cy + r * a.sin())
}

/// Drawn UE and target positions of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// `[satellite][ue]`, on the ground.
    pub ues: Vec<Vec<Position3>>,
    pub targets: Vec<Position3>,
}

/// UEs uniform on the ground disc below each satellite with a minimum
/// pairwise separation, by rejection sampling.
pub fn place_ues(seed: &TrialSeed, cfg: &ScenarioConfig) -> Result<Vec<Vec<Position3>>> {
    let mut placed: Vec<Position3> = Vec::new();
    let mut out = Vec::with_capacity(cfg.satellites.len());
    for (i, sat) in cfg.satellites.iter().enumerate() {
        let mut rng = seed.stream(Stream::UePlacement, &[i as u64]);
        let mut mine = Vec::with_capacity(cfg.ues_per_satellite);
        let mut attempts = 0;
        while mine.len() < cfg.ues_per_satellite {
            if attempts == MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::Placement(format!(
                    "could not place {} UEs {} km apart under satellite {} within {} attempts",
                    cfg.ues_per_satellite, cfg.ue_min_separation_km, i, MAX_PLACEMENT_ATTEMPTS
                )));
            }
            attempts += 1;
            let (x, y) = uniform_disc(&mut rng, sat.x, sat.y, cfg.ue_disc_diameter_km / 2.0);
            let p = Position3::new(x, y, 0.0);
            if placed.iter().all(|q| q.distance(p) >= cfg.ue_min_separation_km) {
                placed.push(p);
                mine.push(p);
            }
        }
        out.push(mine);
    }
    Ok(out)
}

/// Targets uniform on the sensing disc with uniform altitude, or on distinct
/// grid points.
pub fn place_targets(seed: &TrialSeed, cfg: &ScenarioConfig, grid: &[Position3]) -> Vec<Position3> {
    match cfg.target_placement {
        TargetPlacement::Uniform => {
            let mut rng = seed.stream(Stream::TargetPlacement, &[]);
            let [lo, hi] = cfg.target_altitude_km;
            (0..cfg.targets)
                .map(|_| {
                    let (x, y) = uniform_disc(&mut rng, cfg.grid.center_km[0], cfg.grid.center_km[1], cfg.target_disc_diameter_km / 2.0);
                    Position3::new(x, y, lo + (hi - lo) * rng.random::<f64>())
                })
                .collect()
        }
        TargetPlacement::OnGrid => {
            let mut rng = seed.stream(Stream::OnGridTargets, &[]);
            sample(&mut rng, grid.len(), cfg.targets)
                .into_iter()
                .map(|m| grid[m])
                .collect()
        }
    }
}

pub fn place_nodes(seed: &TrialSeed, cfg: &ScenarioConfig, grid: &[Position3]) -> Result<Placement> {
    Ok(Placement {
        ues: place_ues(seed, cfg)?,
        targets: place_targets(seed, cfg, grid),
    })
}
