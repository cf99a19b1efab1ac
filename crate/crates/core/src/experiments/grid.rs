use super::GridSpec;
use crate::geometry::Position3;

/// Lattice points of `spec`, altitude-major, then x, then y ascending.
pub fn build_grid(spec: &GridSpec) -> Vec<Position3> {
    assert!(spec.spacing_km > 0.0, "grid spacing must be positive");
    let r = spec.diameter_km / 2.0;
    let steps = (r / spec.spacing_km).floor() as i64;
    let tol = 1e-9 * spec.spacing_km.max(1.0);
    let mut layer = Vec::new();
    for ix in -steps..=steps {
        for iy in -steps..=steps {
            let dx = ix as f64 * spec.spacing_km;
            let dy = iy as f64 * spec.spacing_km;
            if dx * dx + dy * dy <= r * r + tol {
                layer.push((spec.center_km[0] + dx, spec.center_km[1] + dy));
            }
        }
    }
    spec.altitudes_km
        .iter()
        .flat_map(|&z| layer.iter().map(move |&(x, y)| Position3::new(x, y, z)))
        .collect()
}

/// Mean distance from each target to its nearest grid point.
pub fn grid_bound(targets: &[Position3], grid: &[Position3]) -> f64 {
    assert!(!grid.is_empty(), "empty grid");
    if targets.is_empty() {
        return 0.0;
    }
    targets
        .iter()
        .map(|t| grid.iter().map(|g| t.distance(*g)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / targets.len() as f64
}
