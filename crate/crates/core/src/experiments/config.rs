use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, LinkBudget};
use crate::geometry::{Position3, UpaGeometry};
use crate::{Error, Result};

/// Sensing-region lattice: points of a square lattice inside a disc,
/// replicated at each altitude level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center_km: [f64; 2],
    pub diameter_km: f64,
    pub spacing_km: f64,
    pub altitudes_km: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            center_km: [0.0, 0.0],
            diameter_km: 10.0,
            spacing_km: 1.0,
            altitudes_km: vec![17.0, 18.0, 19.0, 20.0],
        }
    }
}

/// How target positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetPlacement {
    /// Uniform on the sensing disc, uniform altitude.
    Uniform,
    /// Distinct grid points chosen uniformly.
    OnGrid,
}

/// Every physical constant and experiment setting of a scenario. Gains,
/// Rician factor, RCS, threshold and noise density are stored linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub satellites: Vec<Position3>,
    pub gateways: Vec<Position3>,
    pub ues_per_satellite: usize,
    pub ue_disc_diameter_km: f64,
    pub ue_min_separation_km: f64,
    pub targets: usize,
    pub target_disc_diameter_km: f64,
    pub target_altitude_km: [f64; 2],
    pub target_placement: TargetPlacement,
    pub sat_array: UpaGeometry,
    pub gat_array: UpaGeometry,
    pub link: LinkBudget,
    /// Radar cross section `γ`, m².
    pub rcs_m2: f64,
    /// Communication SINR threshold `τ_c`, linear.
    pub sinr_threshold: f64,
    /// Sensing power `P^r_i` of every satellite, watts.
    pub sensing_power_w: f64,
    /// Noise power spectral density `N₀`, W/Hz.
    pub noise_psd_w_per_hz: f64,
    pub bandwidth_hz: f64,
    pub grid: GridSpec,
    /// Sensing slots `T`; `None` means `T = M`.
    pub slots: Option<usize>,
    /// MUSIC snapshot count as a multiple of `M`.
    pub music_slot_factor: usize,
    /// Disables receiver noise at the gateways.
    pub noiseless: bool,
    pub trials: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Full-scale parameter set.
    pub fn full() -> Self {
        Self {
            satellites: vec![Position3::new(50.0, 50.0, 600.0), Position3::new(-50.0, -50.0, 600.0)],
            gateways: vec![
                Position3::new(1.0, 1.0, 0.0),
                Position3::new(1.0, -1.0, 0.0),
                Position3::new(-1.0, 1.0, 0.0),
                Position3::new(-1.0, -1.0, 0.0),
            ],
            ues_per_satellite: 5,
            ue_disc_diameter_km: 50.0,
            ue_min_separation_km: 10.0,
            targets: 3,
            target_disc_diameter_km: 10.0,
            target_altitude_km: [17.0, 20.0],
            target_placement: TargetPlacement::Uniform,
            sat_array: UpaGeometry::square(26),
            gat_array: UpaGeometry::square(32),
            link: LinkBudget::from_db(0.15, 30.0, -5.5, 30.0, 30.0),
            rcs_m2: db_to_linear(10.0),
            sinr_threshold: db_to_linear(-10.0),
            sensing_power_w: 1.0,
            noise_psd_w_per_hz: db_to_linear(-174.0) * 1e-3,
            bandwidth_hz: 5e6,
            grid: GridSpec::default(),
            slots: None,
            music_slot_factor: 10,
            noiseless: false,
            trials: 1000,
            seed: 0,
        }
    }

    /// Reduced profile for desk and CI runs: 8×8 arrays, 2 km grid spacing,
    /// 100 trials.
    pub fn desk() -> Self {
        Self {
            sat_array: UpaGeometry::square(8),
            gat_array: UpaGeometry::square(8),
            grid: GridSpec {
                spacing_km: 2.0,
                ..GridSpec::default()
            },
            sensing_power_w: DESK_SENSING_POWER_W,
            trials: 100,
            ..Self::full()
        }
    }

    /// Profile by name: `desk` or `full`.
    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(Error::Config(format!("unknown profile `{other}` (expected desk or full)"))),
        }
    }

    /// `σ² = ζ² = N₀ B`, watts.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_psd_w_per_hz * self.bandwidth_hz
    }

    pub fn grid_len(&self) -> usize {
        super::build_grid(&self.grid).len()
    }

    /// Sensing slot count `T`.
    pub fn slot_count(&self) -> usize {
        self.slots.unwrap_or_else(|| self.grid_len())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.satellites.is_empty() {
            return bad("at least one satellite is required");
        }
        if self.gateways.is_empty() {
            return bad("at least one gateway is required");
        }
        if self.targets == 0 {
            return bad("target count must be positive");
        }
        if !self.link.is_valid() {
            return bad("link budget values must be positive and finite");
        }
        let positive = [
            ("rcs", self.rcs_m2),
            ("sinr threshold", self.sinr_threshold),
            ("sensing power", self.sensing_power_w),
            ("noise density", self.noise_psd_w_per_hz),
            ("bandwidth", self.bandwidth_hz),
            ("grid spacing", self.grid.spacing_km),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.grid.diameter_km >= 0.0) || self.grid.altitudes_km.is_empty() {
            return bad("grid needs a nonnegative diameter and at least one altitude");
        }
        let [lo, hi] = self.target_altitude_km;
        if !(lo <= hi && lo > 0.0) {
            return bad("target altitude range must satisfy 0 < min <= max");
        }
        for s in &self.satellites {
            if !(s.is_finite() && s.z > hi && s.z > 0.0) {
                return bad("satellites must lie above the target altitude range");
            }
        }
        for g in &self.gateways {
            if !(g.is_finite() && g.z < lo && g.z < self.grid.altitudes_km.iter().cloned().fold(f64::INFINITY, f64::min)) {
                return bad("gateways must lie below the targets and grid");
            }
        }
        if self.grid.altitudes_km.iter().any(|&a| self.satellites.iter().any(|s| s.z <= a)) {
            return bad("grid altitudes must lie below every satellite");
        }
        let m = self.grid_len();
        if self.target_placement == TargetPlacement::OnGrid && self.targets > m {
            return bad("more on-grid targets than grid points");
        }
        if self.targets > m {
            return bad("target count exceeds the grid size");
        }
        if matches!(self.slots, Some(0)) {
            return bad("slot count must be positive");
        }
        if self.music_slot_factor == 0 {
            return bad("MUSIC slot factor must be positive");
        }
        Ok(())
    }
}

/// Default sensing power of the desk profile, watts.
pub const DESK_SENSING_POWER_W: f64 = 5.0;
