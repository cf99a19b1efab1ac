//! Transmitted ISAC signals, gateway echoes and the grid dictionary.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::beamforming::{BeamPlan, SlotPower};
use crate::channel::{draw_reflection, standard_complex_normal};
use crate::geometry::inner;
use crate::network::{Network, PointSteering};
use crate::rng::{Stream, TrialSeed};
use crate::{Error, Result, C64};

/// Swerling-I rejection threshold on `|ρ|`.
pub const MIN_REFLECTION_MAGNITUDE: f64 = 3.0;

fn unit_symbol<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random::<f64>() * TAU)
}

/// Unit-modulus symbols with uniform phase.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    /// `s^r_i(t)`, `[satellite][slot]`.
    pub sensing: Vec<Vec<C64>>,
    /// `s^c_{i,u}(t)`, `[satellite][ue][slot]`.
    pub comm: Vec<Vec<Vec<C64>>>,
}

impl SymbolStream {
    pub fn draw(seed: &TrialSeed, net: &Network, slots: usize) -> Self {
        let lay = &net.layout;
        let sensing = (0..lay.num_satellites())
            .map(|i| {
                let mut rng = seed.stream(Stream::SensingSymbol, &[i as u64]);
                (0..slots).map(|_| unit_symbol(&mut rng)).collect()
            })
            .collect();
        let comm = lay
            .ues
            .iter()
            .enumerate()
            .map(|(i, us)| {
                (0..us.len())
                    .map(|u| {
                        let mut rng = seed.stream(Stream::CommSymbol, &[i as u64, u as u64]);
                        (0..slots).map(|_| unit_symbol(&mut rng)).collect()
                    })
                    .collect()
            })
            .collect();
        Self { sensing, comm }
    }
}

/// `x_i(t) = √P^r_i f^r_i(t) s^r_i(t) + Σ_u √p^c_{i,u}(t) f^c_{i,u} s^c_{i,u}(t)`.
///
/// `comm_powers` holds `p^c_{i,u}(t)` for the UEs of satellite `i`.
pub fn synthesize_tx(
    beams: &BeamPlan,
    comm_powers: &[f64],
    symbols: &SymbolStream,
    i: usize,
    t: usize,
) -> Vec<C64> {
    let fr = beams.sensing_beam(i, t).values();
    let sr = symbols.sensing[i][t] * beams.sensing_power(i).sqrt();
    let mut x: Vec<C64> = fr.iter().map(|&f| f * sr).collect();
    for (u, &p) in comm_powers.iter().enumerate() {
        let sc = symbols.comm[i][u][t] * p.sqrt();
        for (xn, &f) in x.iter_mut().zip(beams.comm_beam(i, u).values()) {
            *xn += f * sc;
        }
    }
    x
}

/// Transmitted signals of every satellite and slot, `[satellite][slot]`.
#[derive(Debug, Clone)]
pub struct TxSignals {
    pub x: Vec<Vec<Vec<C64>>>,
}

impl TxSignals {
    /// Builds all `x_i(t)` from per-slot allocations in flat UE order.
    pub fn build(net: &Network, beams: &BeamPlan, powers: &[SlotPower], symbols: &SymbolStream) -> Self {
        let lay = &net.layout;
        let mut offsets = Vec::with_capacity(lay.num_satellites());
        let mut acc = 0;
        for us in &lay.ues {
            offsets.push(acc);
            acc += us.len();
        }
        let x = (0..lay.num_satellites())
            .map(|i| {
                let range = offsets[i]..offsets[i] + lay.ues[i].len();
                (0..beams.slots())
                    .map(|t| synthesize_tx(beams, &powers[t].powers[range.clone()], symbols, i, t))
                    .collect()
            })
            .collect();
        Self { x }
    }

    pub fn slots(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

/// Noise-free response of gateway `l` in slot `t` to a unit reflector at
/// `point`, illuminated by satellite `i`:
/// `g_{i,l} (w_l(t)^H v^gat_l) ((v^sat_i)^H x_i(t))`.
pub fn point_response(point: &PointSteering, beams: &BeamPlan, tx: &TxSignals, i: usize, l: usize, t: usize) -> C64 {
    let combine = inner(beams.receive_beam(l, t).values(), &point.gat[l]);
    let illum = inner(&point.sat[i], &tx.x[i][t]);
    point.gain[i][l] * combine * illum
}

/// Reflection coefficients `ρ_{i,k,l}`, constant over the sensing epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflections {
    /// `[satellite][target][gateway]`.
    pub rho: Vec<Vec<Vec<C64>>>,
}

impl Reflections {
    pub fn draw(seed: &TrialSeed, num_sat: usize, num_targets: usize, num_gat: usize, rcs_m2: f64) -> Self {
        let rho = (0..num_sat)
            .map(|i| {
                (0..num_targets)
                    .map(|k| {
                        (0..num_gat)
                            .map(|l| {
                                let mut rng = seed.stream(Stream::Reflection, &[i as u64, k as u64, l as u64]);
                                draw_reflection(&mut rng, rcs_m2, MIN_REFLECTION_MAGNITUDE)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { rho }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rho: self
                .rho
                .iter()
                .map(|a| a.iter().map(|b| b.iter().map(|&r| r * factor).collect()).collect())
                .collect(),
        }
    }
}

/// Per-gateway observation sequences `y_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    /// `[gateway][slot]`.
    pub y: Vec<Vec<C64>>,
    /// Noise variance after combining, per gateway.
    pub noise_variance: Vec<f64>,
}

impl ObservationSet {
    pub fn num_gateways(&self) -> usize {
        self.y.len()
    }

    pub fn slots(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }
}

/// Echo sample of gateway `l` in slot `t`, noise excluded.
pub fn echo_signal(
    targets: &[PointSteering],
    rho: &Reflections,
    beams: &BeamPlan,
    tx: &TxSignals,
    l: usize,
    t: usize,
) -> C64 {
    let mut y = C64::new(0.0, 0.0);
    for (k, tgt) in targets.iter().enumerate() {
        for i in 0..rho.rho.len() {
            y += rho.rho[i][k][l] * point_response(tgt, beams, tx, i, l, t);
        }
    }
    y
}

/// Combined receiver noise `w^H n` with `n ~ CN(0, ζ² I)`.
pub fn combined_noise<R: Rng + ?Sized>(rng: &mut R, w: &[C64], noise_power: f64) -> C64 {
    let scale = noise_power.sqrt();
    w.iter()
        .map(|wn| wn.conj() * standard_complex_normal(rng) * scale)
        .sum()
}

/// One gateway observation `y_l(t)`; noise is drawn from the `(l, t)` stream
/// when `noisy` is set.
#[allow(clippy::too_many_arguments)]
pub fn gateway_observe(
    net: &Network,
    targets: &[PointSteering],
    rho: &Reflections,
    beams: &BeamPlan,
    tx: &TxSignals,
    seed: &TrialSeed,
    l: usize,
    t: usize,
    noisy: bool,
) -> C64 {
    let mut y = echo_signal(targets, rho, beams, tx, l, t);
    if noisy {
        let mut rng = seed.stream(Stream::GatewayNoise, &[l as u64, t as u64]);
        y += combined_noise(&mut rng, beams.receive_beam(l, t).values(), net.layout.noise_power);
    }
    y
}

/// Observations of all gateways over all slots.
pub fn observe_all(
    net: &Network,
    targets: &[PointSteering],
    rho: &Reflections,
    beams: &BeamPlan,
    tx: &TxSignals,
    seed: &TrialSeed,
    noisy: bool,
) -> ObservationSet {
    let lay = &net.layout;
    let y = (0..lay.num_gateways())
        .map(|l| {
            (0..tx.slots())
                .map(|t| gateway_observe(net, targets, rho, beams, tx, seed, l, t, noisy))
                .collect()
        })
        .collect();
    let noise_variance = if noisy {
        vec![lay.noise_power; lay.num_gateways()]
    } else {
        vec![0.0; lay.num_gateways()]
    };
    ObservationSet { y, noise_variance }
}

/// Per-gateway dictionary block `A^grid_l` of shape `T × (M·I)`, column-major.
///
/// Column `i·M + m` holds the response to grid point `m` illuminated by
/// satellite `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryBlock {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DictionaryBlock {
    pub fn from_columns(rows: usize, columns: Vec<Vec<C64>>) -> Self {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend(c);
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> &[C64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_column_slice(self.rows, self.cols, &self.data)
    }
}

/// Block-diagonal grid dictionary, stored as its per-gateway blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDictionary {
    pub blocks: Vec<DictionaryBlock>,
    /// Grid size `M`.
    pub grid_len: usize,
    /// Satellite count `I`.
    pub num_satellites: usize,
}

impl GridDictionary {
    pub fn num_gateways(&self) -> usize {
        self.blocks.len()
    }

    pub fn slots(&self) -> usize {
        self.blocks.first().map_or(0, DictionaryBlock::rows)
    }

    /// Column of grid point `m` for satellite `i` inside gateway block `l`.
    pub fn column(&self, l: usize, i: usize, m: usize) -> &[C64] {
        self.blocks[l].column(i * self.grid_len + m)
    }

    /// Dictionary restricted to a subset of gateways, in the given order.
    pub fn select_gateways(&self, gateways: &[usize]) -> Self {
        Self {
            blocks: gateways.iter().map(|&l| self.blocks[l].clone()).collect(),
            grid_len: self.grid_len,
            num_satellites: self.num_satellites,
        }
    }
}

/// Fills every dictionary entry from the same transmitted signals as the
/// observations.
pub fn build_dictionary(net: &Network, beams: &BeamPlan, tx: &TxSignals) -> GridDictionary {
    let lay = &net.layout;
    let big_m = lay.num_grid();
    let num_sat = lay.num_satellites();
    let slots = tx.slots();
    let blocks = (0..lay.num_gateways())
        .into_par_iter()
        .map(|l| {
            let mut columns = vec![Vec::new(); num_sat * big_m];
            for (m, gs) in net.grid_steering.iter().enumerate() {
                for i in 0..num_sat {
                    columns[i * big_m + m] = (0..slots).map(|t| point_response(gs, beams, tx, i, l, t)).collect();
                }
            }
            DictionaryBlock::from_columns(slots, columns)
        })
        .collect();
    GridDictionary {
        blocks,
        grid_len: big_m,
        num_satellites: num_sat,
    }
}

/// Un-combined antenna snapshots for the MUSIC baseline, one `N^gat × S`
/// matrix per gateway.
///
/// Only satellite `sat` transmits, with its sensing beam swept over the grid
/// at power `boost · P^r`; the beam probes grid point `t mod M` in snapshot `t`.
#[allow(clippy::too_many_arguments)]
pub fn music_snapshots(
    net: &Network,
    targets: &[PointSteering],
    rho: &Reflections,
    beams: &BeamPlan,
    seed: &TrialSeed,
    sat: usize,
    boost: f64,
    snapshots: usize,
    noisy: bool,
) -> Vec<DMatrix<C64>> {
    let lay = &net.layout;
    let n_gat = lay.gat_array.len();
    let big_m = lay.num_grid();
    let amp = (boost * beams.sensing_power(sat)).sqrt();
    let mut sym_rng = seed.stream(Stream::MusicSnapshot, &[sat as u64]);
    // Per-snapshot illumination of each target, shared by all gateways.
    let illum: Vec<Vec<C64>> = (0..snapshots)
        .map(|t| {
            let s = unit_symbol(&mut sym_rng) * amp;
            let f = beams.sensing_toward(sat, t % big_m).values();
            targets.iter().map(|tgt| inner(&tgt.sat[sat], f) * s).collect()
        })
        .collect();
    (0..lay.num_gateways())
        .map(|l| {
            let mut noise_rng = seed.stream(Stream::MusicSnapshot, &[sat as u64, 1 + l as u64]);
            let scale = lay.noise_power.sqrt();
            let mut r = DMatrix::<C64>::zeros(n_gat, snapshots);
            for t in 0..snapshots {
                for (k, tgt) in targets.iter().enumerate() {
                    let c = rho.rho[sat][k][l] * tgt.gain[sat][l] * illum[t][k];
                    for (n, &v) in tgt.gat[l].iter().enumerate() {
                        r[(n, t)] += c * v;
                    }
                }
                if noisy {
                    for n in 0..n_gat {
                        r[(n, t)] += standard_complex_normal(&mut noise_rng) * scale;
                    }
                }
            }
            r
        })
        .collect()
}

/// Binary dump format: 32-byte header followed by little-endian interleaved
/// real/imaginary `f64` values.
pub mod dump {
    use super::*;

    pub const MAGIC: [u8; 8] = *b"ISACDUMP";
    pub const VERSION: u32 = 1;

    /// Payload kind tag stored in the header.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    #[repr(u32)]
    pub enum Kind {
        /// `L` sequences of `T` samples.
        Observations = 1,
        /// `L` blocks of `I·M` columns of `T` samples, column-major.
        Dictionary = 2,
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct Header {
        pub slots: u32,
        pub grid_len: u32,
        pub num_satellites: u32,
        pub num_gateways: u32,
        pub kind: Kind,
    }

    impl Header {
        fn payload_len(&self) -> usize {
            let (t, m, i, l) = (
                self.slots as usize,
                self.grid_len as usize,
                self.num_satellites as usize,
                self.num_gateways as usize,
            );
            match self.kind {
                Kind::Observations => l * t,
                Kind::Dictionary => l * i * m * t,
            }
        }
    }

    fn u32_of(n: usize, what: &str) -> Result<u32> {
        u32::try_from(n).map_err(|_| Error::Dump(format!("{what} exceeds u32")))
    }

    fn write_header<W: Write>(w: &mut W, h: &Header) -> Result<()> {
        w.write_all(&MAGIC)?;
        for v in [h.slots, h.grid_len, h.num_satellites, h.num_gateways, VERSION, h.kind as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn write_values<'a, W: Write>(w: &mut W, values: impl Iterator<Item = &'a C64>) -> Result<()> {
        for v in values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn write_observations<W: Write>(w: &mut W, obs: &ObservationSet, grid_len: usize, num_satellites: usize) -> Result<()> {
        let h = Header {
            slots: u32_of(obs.slots(), "T")?,
            grid_len: u32_of(grid_len, "M")?,
            num_satellites: u32_of(num_satellites, "I")?,
            num_gateways: u32_of(obs.num_gateways(), "L")?,
            kind: Kind::Observations,
        };
        write_header(w, &h)?;
        write_values(w, obs.y.iter().flatten())
    }

    pub fn write_dictionary<W: Write>(w: &mut W, dict: &GridDictionary) -> Result<()> {
        let h = Header {
            slots: u32_of(dict.slots(), "T")?,
            grid_len: u32_of(dict.grid_len, "M")?,
            num_satellites: u32_of(dict.num_satellites, "I")?,
            num_gateways: u32_of(dict.num_gateways(), "L")?,
            kind: Kind::Dictionary,
        };
        write_header(w, &h)?;
        write_values(w, dict.blocks.iter().flat_map(|b| b.data().iter()))
    }

    /// Reads a dump back as its header and flat payload.
    pub fn read<R: Read>(r: &mut R) -> Result<(Header, Vec<C64>)> {
        let mut head = [0u8; 32];
        r.read_exact(&mut head)?;
        if head[..8] != MAGIC {
            return Err(Error::Dump("bad magic".into()));
        }
        let word = |n: usize| u32::from_le_bytes(head[8 + 4 * n..12 + 4 * n].try_into().unwrap());
        if word(4) != VERSION {
            return Err(Error::Dump(format!("unsupported version {}", word(4))));
        }
        let kind = match word(5) {
            1 => Kind::Observations,
            2 => Kind::Dictionary,
            k => return Err(Error::Dump(format!("unknown kind {k}"))),
        };
        let h = Header {
            slots: word(0),
            grid_len: word(1),
            num_satellites: word(2),
            num_gateways: word(3),
            kind,
        };
        let n = h.payload_len();
        let mut buf = vec![0u8; n * 16];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Dump("trailing bytes".into()));
        }
        Ok((h, values))
    }
}
