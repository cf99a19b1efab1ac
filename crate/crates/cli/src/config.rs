//! TOML scenario files.
//!
//! ```toml
//! [network]
//! gateways_km = [[1, 1, 0], [1, -1, 0]]
//!
//! [link]
//! rician_kappa_db = 30
//!
//! [grid]
//! spacing_km = 2
//!
//! [experiment]
//! seed = 7
//! ```
//!
//! Keys left out keep the value of the base profile. dB-valued keys carry a
//! `_db`, `_dbi`, `_dbsm` or `_dbm_per_hz` suffix and are stored linear.

use std::fmt;
use std::path::Path;

use isac_core::channel::db_to_linear;
use isac_core::experiments::TargetPlacement;
use isac_core::{Position3, ScenarioConfig, UpaGeometry};
use serde::Deserialize;
use toml::Spanned;

/// Config error with the 1-based line it refers to, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A parsed config file.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    /// Whether `[experiment] seed` was set.
    pub seed_given: bool,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    arrays: RawArrays,
    #[serde(default)]
    link: RawLink,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    sensing: RawSensing,
    #[serde(default)]
    experiment: RawExperiment,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    satellites_km: Option<Spanned<Vec<[f64; 3]>>>,
    gateways_km: Option<Spanned<Vec<[f64; 3]>>>,
    ues_per_satellite: Option<Spanned<u64>>,
    ue_disc_diameter_km: Option<Spanned<f64>>,
    ue_min_separation_km: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawArrays {
    sat_nx: Option<Spanned<u64>>,
    sat_ny: Option<Spanned<u64>>,
    gat_nx: Option<Spanned<u64>>,
    gat_ny: Option<Spanned<u64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawLink {
    wavelength_m: Option<Spanned<f64>>,
    sat_tx_gain_dbi: Option<Spanned<f64>>,
    ue_rx_gain_dbi: Option<Spanned<f64>>,
    gat_rx_gain_dbi: Option<Spanned<f64>>,
    rician_kappa_db: Option<Spanned<f64>>,
    sinr_threshold_db: Option<Spanned<f64>>,
    noise_psd_dbm_per_hz: Option<Spanned<f64>>,
    bandwidth_hz: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    center_km: Option<Spanned<[f64; 2]>>,
    diameter_km: Option<Spanned<f64>>,
    spacing_km: Option<Spanned<f64>>,
    altitudes_km: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSensing {
    targets: Option<Spanned<u64>>,
    target_disc_diameter_km: Option<Spanned<f64>>,
    target_altitude_km: Option<Spanned<[f64; 2]>>,
    target_placement: Option<Spanned<String>>,
    rcs_dbsm: Option<Spanned<f64>>,
    sensing_power_w: Option<Spanned<f64>>,
    slots: Option<Spanned<u64>>,
    music_slot_factor: Option<Spanned<u64>>,
    noiseless: Option<Spanned<bool>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    trials: Option<Spanned<u64>>,
    seed: Option<Spanned<u64>>,
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: std::ops::Range<usize>, key: &str, what: &str) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(self.line(span.start)),
            message: format!("`{key}` {what}"),
        })
    }

    fn finite(&self, v: &Spanned<f64>, key: &str) -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if x.is_finite() {
            Ok(x)
        } else {
            self.err(v.span(), key, "must be finite")
        }
    }

    fn positive(&self, v: &Spanned<f64>, key: &str) -> Result<f64, ConfigError> {
        let x = self.finite(v, key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            self.err(v.span(), key, "must be positive")
        }
    }

    fn nonnegative(&self, v: &Spanned<f64>, key: &str) -> Result<f64, ConfigError> {
        let x = self.finite(v, key)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            self.err(v.span(), key, "must be nonnegative")
        }
    }

    fn count(&self, v: &Spanned<u64>, key: &str) -> Result<usize, ConfigError> {
        match usize::try_from(*v.get_ref()) {
            Ok(n) if n >= 1 => Ok(n),
            _ => self.err(v.span(), key, "must be a positive integer"),
        }
    }

    fn points(&self, v: &Spanned<Vec<[f64; 3]>>, key: &str) -> Result<Vec<Position3>, ConfigError> {
        let pts = v.get_ref();
        if pts.is_empty() {
            return self.err(v.span(), key, "needs at least one position");
        }
        if pts.iter().flatten().any(|c| !c.is_finite()) {
            return self.err(v.span(), key, "must hold finite coordinates");
        }
        Ok(pts.iter().map(|p| Position3::new(p[0], p[1], p[2])).collect())
    }
}

/// Reads `path` over the full-scale defaults.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_config_str(&text, ScenarioConfig::full())?.config)
}

/// Parses config text over `base`.
pub fn parse_config_str(text: &str, base: ScenarioConfig) -> Result<LoadedConfig, ConfigError> {
    let c = Checker { text };
    let raw: RawFile = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| c.line(s.start)),
        message: e.message().trim().to_string(),
    })?;
    let mut cfg = base;

    let n = &raw.network;
    if let Some(v) = &n.satellites_km {
        cfg.satellites = c.points(v, "network.satellites_km")?;
    }
    if let Some(v) = &n.gateways_km {
        cfg.gateways = c.points(v, "network.gateways_km")?;
    }
    if let Some(v) = &n.ues_per_satellite {
        cfg.ues_per_satellite = c.count(v, "network.ues_per_satellite")?;
    }
    if let Some(v) = &n.ue_disc_diameter_km {
        cfg.ue_disc_diameter_km = c.nonnegative(v, "network.ue_disc_diameter_km")?;
    }
    if let Some(v) = &n.ue_min_separation_km {
        cfg.ue_min_separation_km = c.nonnegative(v, "network.ue_min_separation_km")?;
    }

    let a = &raw.arrays;
    let axis = |v: &Option<Spanned<u64>>, key: &str, cur: usize| v.as_ref().map_or(Ok(cur), |v| c.count(v, key));
    cfg.sat_array = UpaGeometry::new(
        axis(&a.sat_nx, "arrays.sat_nx", cfg.sat_array.nx())?,
        axis(&a.sat_ny, "arrays.sat_ny", cfg.sat_array.ny())?,
    );
    cfg.gat_array = UpaGeometry::new(
        axis(&a.gat_nx, "arrays.gat_nx", cfg.gat_array.nx())?,
        axis(&a.gat_ny, "arrays.gat_ny", cfg.gat_array.ny())?,
    );

    let l = &raw.link;
    if let Some(v) = &l.wavelength_m {
        cfg.link.wavelength_m = c.positive(v, "link.wavelength_m")?;
    }
    if let Some(v) = &l.sat_tx_gain_dbi {
        cfg.link.sat_tx_gain = db_to_linear(c.finite(v, "link.sat_tx_gain_dbi")?);
    }
    if let Some(v) = &l.ue_rx_gain_dbi {
        cfg.link.ue_rx_gain = db_to_linear(c.finite(v, "link.ue_rx_gain_dbi")?);
    }
    if let Some(v) = &l.gat_rx_gain_dbi {
        cfg.link.gat_rx_gain = db_to_linear(c.finite(v, "link.gat_rx_gain_dbi")?);
    }
    if let Some(v) = &l.rician_kappa_db {
        cfg.link.rician_kappa = db_to_linear(c.finite(v, "link.rician_kappa_db")?);
    }
    if let Some(v) = &l.sinr_threshold_db {
        cfg.sinr_threshold = db_to_linear(c.finite(v, "link.sinr_threshold_db")?);
    }
    if let Some(v) = &l.noise_psd_dbm_per_hz {
        cfg.noise_psd_w_per_hz = db_to_linear(c.finite(v, "link.noise_psd_dbm_per_hz")?) * 1e-3;
    }
    if let Some(v) = &l.bandwidth_hz {
        cfg.bandwidth_hz = c.positive(v, "link.bandwidth_hz")?;
    }

    let g = &raw.grid;
    if let Some(v) = &g.center_km {
        let [x, y] = *v.get_ref();
        if !(x.is_finite() && y.is_finite()) {
            return c.err(v.span(), "grid.center_km", "must be finite");
        }
        cfg.grid.center_km = [x, y];
    }
    if let Some(v) = &g.diameter_km {
        cfg.grid.diameter_km = c.nonnegative(v, "grid.diameter_km")?;
    }
    if let Some(v) = &g.spacing_km {
        cfg.grid.spacing_km = c.positive(v, "grid.spacing_km")?;
    }
    if let Some(v) = &g.altitudes_km {
        let alts = v.get_ref();
        if alts.is_empty() || alts.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return c.err(v.span(), "grid.altitudes_km", "needs at least one positive altitude");
        }
        cfg.grid.altitudes_km = alts.clone();
    }

    let s = &raw.sensing;
    if let Some(v) = &s.targets {
        cfg.targets = c.count(v, "sensing.targets")?;
    }
    if let Some(v) = &s.target_disc_diameter_km {
        cfg.target_disc_diameter_km = c.nonnegative(v, "sensing.target_disc_diameter_km")?;
    }
    if let Some(v) = &s.target_altitude_km {
        let [lo, hi] = *v.get_ref();
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return c.err(v.span(), "sensing.target_altitude_km", "must satisfy 0 < min <= max");
        }
        cfg.target_altitude_km = [lo, hi];
    }
    if let Some(v) = &s.target_placement {
        cfg.target_placement = match v.get_ref().as_str() {
            "uniform" => TargetPlacement::Uniform,
            "on-grid" => TargetPlacement::OnGrid,
            _ => return c.err(v.span(), "sensing.target_placement", "must be \"uniform\" or \"on-grid\""),
        };
    }
    if let Some(v) = &s.rcs_dbsm {
        cfg.rcs_m2 = db_to_linear(c.finite(v, "sensing.rcs_dbsm")?);
    }
    if let Some(v) = &s.sensing_power_w {
        cfg.sensing_power_w = c.positive(v, "sensing.sensing_power_w")?;
    }
    if let Some(v) = &s.slots {
        cfg.slots = Some(c.count(v, "sensing.slots")?);
    }
    if let Some(v) = &s.music_slot_factor {
        cfg.music_slot_factor = c.count(v, "sensing.music_slot_factor")?;
    }
    if let Some(v) = &s.noiseless {
        cfg.noiseless = *v.get_ref();
    }

    let e = &raw.experiment;
    if let Some(v) = &e.trials {
        cfg.trials = c.count(v, "experiment.trials")?;
    }
    if let Some(v) = &e.seed {
        cfg.seed = *v.get_ref();
    }

    cfg.validate().map_err(|err| ConfigError {
        line: None,
        message: err.to_string(),
    })?;
    Ok(LoadedConfig {
        config: cfg,
        seed_given: e.seed.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        parse_config_str(text, ScenarioConfig::full()).map(|l| l.config)
    }

    #[test]
    fn empty_file_is_full_profile() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, ScenarioConfig::full());
        assert_eq!(cfg.link.wavelength_m, 0.15);
        assert!((cfg.link.rician_kappa - 1000.0).abs() < 1e-9);
        assert!((cfg.sinr_threshold - 0.1).abs() < 1e-15);
    }

    #[test]
    fn db_keys_convert_to_linear() {
        let cfg = parse("[link]\nrician_kappa_db = 30\nnoise_psd_dbm_per_hz = -174\n").unwrap();
        assert!((cfg.link.rician_kappa - 1000.0).abs() < 1e-9);
        assert!((cfg.noise_psd_w_per_hz / 3.981071705534972e-21 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_spacing_reports_line() {
        let err = parse("[grid]\n\nspacing_km = 0\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("spacing_km"));
        let err = parse("grid.spacing_km = 0").unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse("[sensing]\ntargets = 2\ntarget = 3\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("target"));
        let err = parse("[radar]\nx = 1\n").unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn malformed_file_reports_line() {
        let err = parse("[grid]\nspacing_km = \n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse("[sensing]\ntargets = -1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn keys_override_base() {
        let text = "[network]\ngateways_km = [[1, 1, 0]]\n[arrays]\ngat_nx = 4\ngat_ny = 4\n[sensing]\ntarget_placement = \"on-grid\"\nslots = 12\n[experiment]\nseed = 9\n";
        let loaded = parse_config_str(text, ScenarioConfig::desk()).unwrap();
        let cfg = loaded.config;
        assert!(loaded.seed_given);
        assert_eq!(cfg.gateways, vec![Position3::new(1.0, 1.0, 0.0)]);
        assert_eq!(cfg.gat_array, UpaGeometry::square(4));
        assert_eq!(cfg.target_placement, TargetPlacement::OnGrid);
        assert_eq!(cfg.slots, Some(12));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sat_array, UpaGeometry::square(8));
    }

    #[test]
    fn cross_field_violation_is_rejected() {
        let err = parse("[network]\ngateways_km = [[0, 0, 30]]\n").unwrap_err();
        assert_eq!(err.line, None);
    }
}
