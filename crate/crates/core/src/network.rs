//! Resolved node layout of one trial plus cached steering data.

use crate::channel::{bistatic_gain, comm_los, LinkBudget};
use crate::geometry::{
    downlook_direction, steering_vector, uplook_direction, Position3, UpaGeometry,
};
use crate::C64;

/// Steering vectors and bistatic gains of one sensing point (grid point or
/// target) as seen from every satellite and gateway.
#[derive(Debug, Clone)]
pub struct PointSteering {
    pub position: Position3,
    /// `v^{sat-point}_i`, indexed by satellite.
    pub sat: Vec<Vec<C64>>,
    /// `v^{gat-point}_l`, indexed by gateway.
    pub gat: Vec<Vec<C64>>,
    /// Bistatic gain, `[satellite][gateway]`.
    pub gain: Vec<Vec<C64>>,
}

impl PointSteering {
    pub fn new(net: &NetworkLayout, position: Position3) -> Self {
        let sat = net
            .satellites
            .iter()
            .map(|&s| steering_vector(net.sat_array, downlook_direction(s, position)))
            .collect();
        let gat = net
            .gateways
            .iter()
            .map(|&g| steering_vector(net.gat_array, uplook_direction(g, position)))
            .collect();
        let gain = net
            .satellites
            .iter()
            .map(|&s| {
                net.gateways
                    .iter()
                    .map(|&g| bistatic_gain(&net.link, s, position, g))
                    .collect()
            })
            .collect();
        Self {
            position,
            sat,
            gat,
            gain,
        }
    }
}

/// Static physical layout: node positions, arrays and link constants.
#[derive(Debug, Clone)]
pub struct NetworkLayout {
    pub satellites: Vec<Position3>,
    pub gateways: Vec<Position3>,
    /// UE positions, `[serving satellite][ue]`.
    pub ues: Vec<Vec<Position3>>,
    pub grid: Vec<Position3>,
    pub sat_array: UpaGeometry,
    pub gat_array: UpaGeometry,
    pub link: LinkBudget,
    /// `σ² = ζ² = N₀ B`, watts.
    pub noise_power: f64,
    /// Maximum sensing power per satellite, watts.
    pub sensing_power: Vec<f64>,
    /// Number of sensing slots `T`.
    pub slots: usize,
}

impl NetworkLayout {
    pub fn num_satellites(&self) -> usize {
        self.satellites.len()
    }

    pub fn num_gateways(&self) -> usize {
        self.gateways.len()
    }

    pub fn num_grid(&self) -> usize {
        self.grid.len()
    }

    /// Total UE count `U = Σ U_i`.
    pub fn num_ues(&self) -> usize {
        self.ues.iter().map(Vec::len).sum()
    }

    /// `(serving satellite, ue)` pairs in flat order.
    pub fn ue_pairs(&self) -> Vec<(usize, usize)> {
        self.ues
            .iter()
            .enumerate()
            .flat_map(|(i, us)| (0..us.len()).map(move |u| (i, u)))
            .collect()
    }

    /// Probed grid index `ψ(t) = t mod M` (zero-based).
    pub fn probe_index(&self, t: usize) -> usize {
        t % self.grid.len()
    }
}

/// Layout plus per-trial caches shared by beamforming and signal synthesis.
#[derive(Debug, Clone)]
pub struct Network {
    pub layout: NetworkLayout,
    pub grid_steering: Vec<PointSteering>,
    /// Line-of-sight channel parts, `[transmitting sat j][serving sat i][ue u]`.
    pub comm_los: Vec<Vec<Vec<Vec<C64>>>>,
}

impl Network {
    pub fn new(layout: NetworkLayout) -> Self {
        let grid_steering = layout
            .grid
            .iter()
            .map(|&p| PointSteering::new(&layout, p))
            .collect();
        let comm_los = layout
            .satellites
            .iter()
            .map(|&sat| {
                layout
                    .ues
                    .iter()
                    .map(|us| {
                        us.iter()
                            .map(|&ue| comm_los(&layout.link, layout.sat_array, sat, ue))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            layout,
            grid_steering,
            comm_los,
        }
    }

    pub fn point(&self, position: Position3) -> PointSteering {
        PointSteering::new(&self.layout, position)
    }
}
