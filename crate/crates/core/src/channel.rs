//! Channel models: Rician satellite-to-UE links, deterministic bistatic gains
//! and Swerling-I reflection coefficients.
//!
//! Positions arrive in kilometers and are converted to meters only inside the
//! path-loss formulas.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{downlook_direction, steering_vector, Position3, UpaGeometry};
use crate::C64;

/// Meters per kilometer.
pub const M_PER_KM: f64 = 1e3;

/// `10^(x/10)` for power quantities (dB, dBi, dBsm).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Noise power `N₀ B` in watts from a PSD in dBm/Hz and a bandwidth in Hz.
pub fn noise_power_w(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    db_to_linear(psd_dbm_per_hz) * 1e-3 * bandwidth_hz
}

/// Link-budget constants, all linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub wavelength_m: f64,
    pub sat_tx_gain: f64,
    pub ue_rx_gain: f64,
    pub gat_rx_gain: f64,
    pub rician_kappa: f64,
}

impl LinkBudget {
    /// Builds from dB-valued gains and Rician factor.
    pub fn from_db(
        wavelength_m: f64,
        sat_tx_gain_dbi: f64,
        ue_rx_gain_dbi: f64,
        gat_rx_gain_dbi: f64,
        rician_kappa_db: f64,
    ) -> Self {
        Self {
            wavelength_m,
            sat_tx_gain: db_to_linear(sat_tx_gain_dbi),
            ue_rx_gain: db_to_linear(ue_rx_gain_dbi),
            gat_rx_gain: db_to_linear(gat_rx_gain_dbi),
            rician_kappa: db_to_linear(rician_kappa_db),
        }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.wavelength_m,
            self.sat_tx_gain,
            self.ue_rx_gain,
            self.gat_rx_gain,
            self.rician_kappa,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    }

    /// Free-space amplitude `λ √(A_tx A_rx) / (4π d)` of the satellite-to-UE
    /// path for a distance in kilometers.
    pub fn comm_amplitude(&self, distance_km: f64) -> f64 {
        let d = distance_km * M_PER_KM;
        self.wavelength_m * (self.sat_tx_gain * self.ue_rx_gain).sqrt() / (4.0 * PI * d)
    }

    /// Bistatic amplitude `√(λ² A_gat A_sat / (64 π³ d_gat² d_sat²))`.
    pub fn bistatic_amplitude(&self, d_gat_km: f64, d_sat_km: f64) -> f64 {
        let dg = d_gat_km * M_PER_KM;
        let ds = d_sat_km * M_PER_KM;
        let num = self.wavelength_m.powi(2) * self.gat_rx_gain * self.sat_tx_gain;
        (num / (64.0 * PI.powi(3))).sqrt() / (dg * ds)
    }

    /// Carrier phase `-2π d / λ` reduced to `(-2π, 0]` for a path length in
    /// kilometers. The reduction happens in cycles so the result keeps full
    /// precision for long paths.
    pub fn propagation_phase(&self, path_km: f64) -> f64 {
        let cycles = path_km * M_PER_KM / self.wavelength_m;
        -2.0 * PI * (cycles - cycles.floor())
    }
}

/// Line-of-sight part `e^{-j2πd/λ} v^{sat-ue}` of a satellite-to-UE channel.
pub fn comm_los(
    link: &LinkBudget,
    sat_geom: UpaGeometry,
    sat: Position3,
    ue: Position3,
) -> Vec<C64> {
    let d = sat.distance(ue);
    let phase = C64::from_polar(1.0, link.propagation_phase(d));
    steering_vector(sat_geom, downlook_direction(sat, ue))
        .into_iter()
        .map(|v| v * phase)
        .collect()
}

/// Standard circularly-symmetric complex Gaussian sample, `CN(0, 1)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One slot of the Rician satellite-to-UE channel
/// `amp · (√(κ/(1+κ)) h_LoS + √(1/(1+κ)) h_NLoS)`, given its LoS part.
///
/// The NLoS component is a fresh `CN(0, I)` draw from `rng`.
pub fn draw_comm_channel<R: Rng + ?Sized>(
    rng: &mut R,
    link: &LinkBudget,
    distance_km: f64,
    los: &[C64],
) -> Vec<C64> {
    let amp = link.comm_amplitude(distance_km);
    let k = link.rician_kappa;
    let w_los = amp * (k / (1.0 + k)).sqrt();
    let w_nlos = amp * (1.0 / (1.0 + k)).sqrt();
    los.iter()
        .map(|&l| l * w_los + standard_complex_normal(rng) * w_nlos)
        .collect()
}

/// Unconditioned Swerling-I coefficient `ρ ~ CN(0, γ)`.
pub fn draw_reflection_unconditioned<R: Rng + ?Sized>(rng: &mut R, rcs_m2: f64) -> C64 {
    standard_complex_normal(rng) * rcs_m2.sqrt()
}

/// Swerling-I coefficient redrawn until `|ρ| ≥ min_magnitude`.
pub fn draw_reflection<R: Rng + ?Sized>(rng: &mut R, rcs_m2: f64, min_magnitude: f64) -> C64 {
    assert!(rcs_m2 > 0.0, "radar cross section must be positive");
    loop {
        let rho = draw_reflection_unconditioned(rng, rcs_m2);
        if rho.norm() >= min_magnitude {
            return rho;
        }
    }
}

/// Deterministic bistatic gain of the path satellite → `point` → gateway,
/// without reflection coefficient and beams.
///
/// Panics if `point` coincides with either endpoint.
pub fn bistatic_gain(link: &LinkBudget, sat: Position3, point: Position3, gateway: Position3) -> C64 {
    let d_sat = sat.distance(point);
    let d_gat = gateway.distance(point);
    assert!(d_sat > 0.0 && d_gat > 0.0, "bistatic path with zero-length leg");
    let amp = link.bistatic_amplitude(d_gat, d_sat);
    C64::from_polar(amp, link.propagation_phase(d_gat + d_sat))
}
