//! Constant-modulus beams and per-slot communication power allocation.

use nalgebra::{DMatrix, DVector};

use crate::channel::draw_comm_channel;
use crate::geometry::{downlook_direction, inner, steering_phases, uplook_direction};
use crate::network::Network;
use crate::rng::{Stream, TrialSeed};
use crate::{Error, Result, C64};

/// Threshold backoff factor applied when the dominance test fails.
pub const BACKOFF_FACTOR: f64 = 0.5;
/// Maximum number of threshold backoffs per slot.
pub const MAX_BACKOFFS: usize = 20;
/// Negative powers above this are clamped to zero.
pub const NONNEG_TOL: f64 = 1e-12;

/// Beamformer whose entries all share one modulus.
///
/// Stored as a common amplitude plus per-entry phases, so the constant-modulus
/// constraint holds by construction; `values` caches the complex entries.
#[derive(Debug, Clone)]
pub struct PhaseBeam {
    amplitude: f64,
    phases: Vec<f64>,
    values: Vec<C64>,
}

impl PhaseBeam {
    pub fn new(amplitude: f64, phases: Vec<f64>) -> Self {
        let values = phases.iter().map(|&p| C64::from_polar(amplitude, p)).collect();
        Self {
            amplitude,
            phases,
            values,
        }
    }

    /// Normalized steering beam `v / √n`.
    pub fn steering(steering_phases: Vec<f64>) -> Self {
        let n = steering_phases.len() as f64;
        Self::new(1.0 / n.sqrt(), steering_phases)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Sensing, receive and communication beams of a trial.
#[derive(Debug, Clone)]
pub struct BeamPlan {
    /// `f^r` toward each grid point, `[satellite][grid]`.
    sensing: Vec<Vec<PhaseBeam>>,
    /// `w` toward each grid point, `[gateway][grid]`.
    receive: Vec<Vec<PhaseBeam>>,
    /// `f^c`, `[satellite][ue]`; slot-invariant.
    comm: Vec<Vec<PhaseBeam>>,
    /// Probed grid index per slot.
    probe: Vec<usize>,
    /// Sensing power `P^r_i`, watts.
    sensing_power: Vec<f64>,
}

impl BeamPlan {
    pub fn sensing_beam(&self, i: usize, t: usize) -> &PhaseBeam {
        &self.sensing[i][self.probe[t]]
    }

    pub fn receive_beam(&self, l: usize, t: usize) -> &PhaseBeam {
        &self.receive[l][self.probe[t]]
    }

    pub fn comm_beam(&self, i: usize, u: usize) -> &PhaseBeam {
        &self.comm[i][u]
    }

    /// Sensing beam of satellite `i` toward grid point `m`.
    pub fn sensing_toward(&self, i: usize, m: usize) -> &PhaseBeam {
        &self.sensing[i][m]
    }

    /// Receive beam of gateway `l` toward grid point `m`.
    pub fn receive_toward(&self, l: usize, m: usize) -> &PhaseBeam {
        &self.receive[l][m]
    }

    /// Grid index probed in slot `t` (zero-based `ψ(t)`).
    pub fn probe(&self, t: usize) -> usize {
        self.probe[t]
    }

    pub fn slots(&self) -> usize {
        self.probe.len()
    }

    pub fn sensing_power(&self, i: usize) -> f64 {
        self.sensing_power[i]
    }

    pub fn sensing_powers(&self) -> &[f64] {
        &self.sensing_power
    }

    /// Every beam of the plan, for invariant checks.
    pub fn all_beams(&self) -> impl Iterator<Item = &PhaseBeam> {
        self.sensing
            .iter()
            .chain(self.receive.iter())
            .chain(self.comm.iter())
            .flatten()
    }
}

/// Builds steering beams toward every grid point and every served UE.
pub fn build_beams(net: &Network) -> BeamPlan {
    let lay = &net.layout;
    let sensing = lay
        .satellites
        .iter()
        .map(|&s| {
            lay.grid
                .iter()
                .map(|&g| PhaseBeam::steering(steering_phases(lay.sat_array, downlook_direction(s, g))))
                .collect()
        })
        .collect();
    let receive = lay
        .gateways
        .iter()
        .map(|&gw| {
            lay.grid
                .iter()
                .map(|&g| PhaseBeam::steering(steering_phases(lay.gat_array, uplook_direction(gw, g))))
                .collect()
        })
        .collect();
    let comm = lay
        .satellites
        .iter()
        .zip(&lay.ues)
        .map(|(&s, us)| {
            us.iter()
                .map(|&ue| PhaseBeam::steering(steering_phases(lay.sat_array, downlook_direction(s, ue))))
                .collect()
        })
        .collect();
    let probe = (0..lay.slots).map(|t| lay.probe_index(t)).collect();
    BeamPlan {
        sensing,
        receive,
        comm,
        probe,
        sensing_power: lay.sensing_power.clone(),
    }
}

/// Communication channels of one slot, `[transmitting sat j][serving sat i][ue u]`.
#[derive(Debug, Clone)]
pub struct SlotChannels {
    pub h: Vec<Vec<Vec<Vec<C64>>>>,
}

/// Draws the slot-`t` Rician channels. Each `(j, i, u, t)` vector comes from
/// its own keyed stream.
pub fn draw_slot_channels(seed: &TrialSeed, net: &Network, t: usize) -> SlotChannels {
    let lay = &net.layout;
    let h = lay
        .satellites
        .iter()
        .enumerate()
        .map(|(j, &sat)| {
            lay.ues
                .iter()
                .enumerate()
                .map(|(i, us)| {
                    us.iter()
                        .enumerate()
                        .map(|(u, &ue)| {
                            let mut rng = seed.stream(
                                Stream::CommFading,
                                &[j as u64, i as u64, u as u64, t as u64],
                            );
                            draw_comm_channel(&mut rng, &lay.link, sat.distance(ue), &net.comm_los[j][i][u])
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    SlotChannels { h }
}

/// Beamformed channel powers and sensing interference of one slot, over the
/// flat UE order of [`crate::network::NetworkLayout::ue_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTable {
    /// `χ[a][b]`: power of beam `b` at UE `a`.
    pub chi: Vec<Vec<f64>>,
    /// `ν[a]`: sensing interference plus noise at UE `a`.
    pub nu: Vec<f64>,
}

impl SinrTable {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// SINR of every UE under powers `p`.
    pub fn sinr(&self, p: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|a| {
                let interf: f64 = (0..self.len())
                    .filter(|&b| b != a)
                    .map(|b| p[b] * self.chi[a][b])
                    .sum();
                p[a] * self.chi[a][a] / (interf + self.nu[a])
            })
            .collect()
    }

    /// Strict diagonal dominance of the SINR-constraint matrix at threshold `tau`.
    pub fn dominant(&self, tau: f64) -> bool {
        (0..self.len()).all(|a| {
            let off: f64 = (0..self.len()).filter(|&b| b != a).map(|b| self.chi[a][b]).sum();
            self.chi[a][a] > tau * off
        })
    }
}

/// Computes `χ` and `ν` for slot `t`.
pub fn sinr_terms(net: &Network, channels: &SlotChannels, beams: &BeamPlan, t: usize) -> SinrTable {
    let pairs = net.layout.ue_pairs();
    let noise = net.layout.noise_power;
    let chi = pairs
        .iter()
        .map(|&(i, u)| {
            pairs
                .iter()
                .map(|&(j, v)| inner(&channels.h[j][i][u], beams.comm_beam(j, v).values()).norm_sqr())
                .collect()
        })
        .collect();
    let nu = pairs
        .iter()
        .map(|&(i, u)| {
            let sensing: f64 = (0..net.layout.num_satellites())
                .map(|j| {
                    beams.sensing_power(j)
                        * inner(&channels.h[j][i][u], beams.sensing_beam(j, t).values()).norm_sqr()
                })
                .sum();
            sensing + noise
        })
        .collect();
    SinrTable { chi, nu }
}

/// Power allocation of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotPower {
    /// Communication powers in flat UE order, watts.
    pub powers: Vec<f64>,
    /// Threshold actually enforced after any backoff (linear).
    pub threshold: f64,
    pub backoffs: usize,
}

impl SlotPower {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Solves the SINR-tight linear system at a fixed threshold, without backoff.
///
/// Returns `None` when the system is not strictly diagonally dominant, the
/// solve fails, or the solution is negative beyond tolerance.
pub fn solve_power_system(terms: &SinrTable, tau: f64) -> Option<Vec<f64>> {
    let n = terms.len();
    if !terms.dominant(tau) {
        return None;
    }
    let a = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            terms.chi[r][r]
        } else {
            -tau * terms.chi[r][c]
        }
    });
    let b = DVector::from_iterator(n, terms.nu.iter().map(|&v| tau * v));
    let p = a.lu().solve(&b)?;
    let mut out = Vec::with_capacity(n);
    for &v in p.iter() {
        if !v.is_finite() || v < -NONNEG_TOL {
            return None;
        }
        out.push(v.max(0.0));
    }
    Some(out)
}

/// Minimum-power allocation meeting `SINR ≥ tau` for every UE, halving the
/// threshold when the dominance test fails.
pub fn allocate_power(terms: &SinrTable, tau: f64) -> Result<SlotPower> {
    let finite = terms.nu.iter().all(|v| v.is_finite())
        && terms.chi.iter().flatten().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NonFinite("SINR terms"));
    }
    let mut threshold = tau;
    for backoffs in 0..=MAX_BACKOFFS {
        if let Some(powers) = solve_power_system(terms, threshold) {
            return Ok(SlotPower {
                powers,
                threshold,
                backoffs,
            });
        }
        if backoffs < MAX_BACKOFFS {
            threshold *= BACKOFF_FACTOR;
        }
    }
    Err(Error::PowerInfeasible {
        retries: MAX_BACKOFFS,
        last_threshold: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(chi: Vec<Vec<f64>>, nu: Vec<f64>) -> SinrTable {
        SinrTable { chi, nu }
    }

    #[test]
    fn single_ue_closed_form() {
        let t = table(vec![vec![2.5e-9]], vec![3.0e-14]);
        let p = allocate_power(&t, 0.1).unwrap();
        assert_eq!(p.backoffs, 0);
        let expect = 0.1 * 3.0e-14 / 2.5e-9;
        assert!((p.powers[0] - expect).abs() <= 1e-15 * expect.abs().max(1e-30) + 1e-30);
    }

    #[test]
    fn solution_is_sinr_tight() {
        let t = table(
            vec![
                vec![1.0, 0.2, 0.1],
                vec![0.3, 2.0, 0.4],
                vec![0.05, 0.1, 0.8],
            ],
            vec![0.01, 0.02, 0.03],
        );
        let p = allocate_power(&t, 0.5).unwrap();
        for s in t.sinr(&p.powers) {
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn backoff_halves_threshold() {
        let t = table(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![0.1, 0.1]);
        let p = allocate_power(&t, 1.5).unwrap();
        assert_eq!(p.backoffs, 1);
        assert_eq!(p.threshold, 0.75);
    }

    #[test]
    fn infeasible_without_diagonal() {
        let t = table(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.1, 0.1]);
        assert!(matches!(
            allocate_power(&t, 1.0),
            Err(Error::PowerInfeasible { retries: MAX_BACKOFFS, .. })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let t = table(vec![vec![f64::NAN]], vec![1.0]);
        assert!(matches!(allocate_power(&t, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn phase_beam_modulus() {
        let b = PhaseBeam::steering(vec![0.0, 1.0, -2.0, 3.0]);
        assert_eq!(b.amplitude(), 0.5);
        for v in b.values() {
            assert!((v.norm() - 0.5).abs() < 1e-15);
        }
    }
}
