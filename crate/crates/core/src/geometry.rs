//! Positions, angle conventions, UPA steering vectors and steering crosstalk.
//!
//! All positions are kilometers. Angles follow two conventions:
//!
//! - *downlook* (satellite towards a ground or airborne point): azimuth measured
//!   from the negative y-axis, elevation measured from the negative z-axis;
//! - *uplook* (gateway towards an airborne point): same azimuth form, elevation
//!   measured from the positive z-axis.
//!
//! Both use two-argument arctangents, so `Δy = 0` is not singular. Only the
//! pair `(cos φ cos θ, sin φ cos θ)` enters a steering vector.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::C64;

/// Point in 3D space, kilometers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Horizontal (x-y plane) length.
    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Position3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Position3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// Half-wavelength uniform planar array with `nx × ny` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpaGeometry {
    nx: usize,
    ny: usize,
}

impl UpaGeometry {
    /// Panics if either axis is empty.
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx >= 1 && ny >= 1, "UPA needs at least one element per axis");
        Self { nx, ny }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Total element count `nx · ny`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat element index of `(ix, iy)`; x is the slow axis (`v_x ⊗ v_y`).
    pub fn flat_index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }
}

/// Which angle convention produced a [`Direction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleConvention {
    Downlook,
    Uplook,
}

/// Azimuth/elevation pair, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
    pub convention: AngleConvention,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64, convention: AngleConvention) -> Self {
        Self {
            azimuth,
            elevation,
            convention,
        }
    }

    /// `(cos φ cos θ, sin φ cos θ)`, the spatial frequencies along x and y.
    pub fn spatial_frequencies(&self) -> (f64, f64) {
        let c = self.elevation.cos();
        (self.azimuth.cos() * c, self.azimuth.sin() * c)
    }
}

/// Direction from a higher point `from` towards a lower point `to`.
///
/// Panics unless `from.z > to.z`.
pub fn downlook_direction(from: Position3, to: Position3) -> Direction {
    assert!(from.z > to.z, "downlook requires from.z > to.z");
    let d = from - to;
    let azimuth = (-d.x).atan2(d.y);
    let elevation = d.horizontal_norm().atan2(d.z);
    Direction::new(azimuth, elevation, AngleConvention::Downlook)
}

/// Direction from a gateway towards a higher point.
///
/// Panics unless `target.z > gateway.z`.
pub fn uplook_direction(gateway: Position3, target: Position3) -> Direction {
    assert!(target.z > gateway.z, "uplook requires target.z > gateway.z");
    let d = gateway - target;
    let azimuth = (-d.x).atan2(d.y);
    // atan(-h / Δz) with Δz < 0
    let elevation = d.horizontal_norm().atan2(-d.z);
    Direction::new(azimuth, elevation, AngleConvention::Uplook)
}

/// Per-element phases of the steering vector, radians, in flat order.
pub fn steering_phases(geom: UpaGeometry, dir: Direction) -> Vec<f64> {
    let (fx, fy) = dir.spatial_frequencies();
    let mut phases = Vec::with_capacity(geom.len());
    for ix in 0..geom.nx {
        for iy in 0..geom.ny {
            phases.push(-PI * (ix as f64 * fx + iy as f64 * fy));
        }
    }
    phases
}

/// Steering vector `v_x ⊗ v_y`; every entry has unit modulus.
pub fn steering_vector(geom: UpaGeometry, dir: Direction) -> Vec<C64> {
    steering_phases(geom, dir)
        .into_iter()
        .map(|p| C64::from_polar(1.0, p))
        .collect()
}

/// `a^H b` for equal-length complex slices.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `Σ_i conj(e^{−jπ i f1}) e^{−jπ i f2}` summed term by term, each term
/// formed from the phase difference `π i (f1 − f2)`.
fn axis_inner(n: usize, f1: f64, f2: f64) -> C64 {
    let d = f1 - f2;
    (0..n).map(|i| C64::from_polar(1.0, PI * i as f64 * d)).sum()
}

/// Crosstalk `|v(d1)^H v(d2)|² / n` by direct summation over the array
/// elements, factored per axis as `(v_x^H v_x')(v_y^H v_y')`.
pub fn crosstalk(geom: UpaGeometry, dir1: Direction, dir2: Direction) -> f64 {
    let (x1, y1) = dir1.spatial_frequencies();
    let (x2, y2) = dir2.spatial_frequencies();
    let g = axis_inner(geom.nx, x1, x2) * axis_inner(geom.ny, y1, y2);
    g.norm_sqr() / geom.len() as f64
}

/// `sin(π n δ / 2) / sin(π δ / 2)` with the removable singularity at
/// `δ ∈ 2ℤ` resolved to its limit magnitude `n`.
fn dirichlet_magnitude(n: usize, delta: f64) -> f64 {
    let half = PI * delta / 2.0;
    let den = half.sin();
    // the numerator vanishes together with the denominator here
    if den.abs() < 1e-12 {
        return n as f64;
    }
    ((n as f64 * half).sin() / den).abs()
}

/// Crosstalk coefficient from the Dirichlet-kernel closed form.
pub fn crosstalk_closed_form(geom: UpaGeometry, dir1: Direction, dir2: Direction) -> f64 {
    let (x1, y1) = dir1.spatial_frequencies();
    let (x2, y2) = dir2.spatial_frequencies();
    let fx = dirichlet_magnitude(geom.nx, x1 - x2);
    let fy = dirichlet_magnitude(geom.ny, y1 - y2);
    (fx * fy).powi(2) / geom.len() as f64
}
