//! Polarization sector: the block-diagonal part of a two-mode state, one block
//! per total photon number `N = 2S`.
//!
//! Within a manifold the basis is `|S, m> = |n_H = S + m, n_V = S - m>`,
//! ordered `m = S, S-1, ..., -S`, so row `i` of a block is `n_H = N - i`,
//! `n_V = i`. Coherences between different manifolds are dropped.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fock::{self, ModeState, TwoModeState};
use crate::linalg;
use crate::CMatrix;

/// A non-negative half-integer spin stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spin(u32);

impl Spin {
    pub const ZERO: Spin = Spin(0);
    pub const HALF: Spin = Spin(1);
    pub const ONE: Spin = Spin(2);

    pub const fn from_twice(twice: u32) -> Self {
        Spin(twice)
    }

    /// Parses a real spin value; fails unless `2S` is a non-negative integer.
    pub fn from_f64(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::MalformedSpin(format!("{s} is not a non-negative half-integer")));
        }
        Ok(Spin(twice.round() as u32))
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Number of photons `N = 2S`.
    pub const fn photons(self) -> u32 {
        self.0
    }

    /// Manifold dimension `2S + 1`.
    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// `m` of basis row `i`.
    pub fn m(self, i: usize) -> f64 {
        self.value() - i as f64
    }

    /// Radius `sqrt(S(S+1))` of the manifold's Poincare sphere.
    pub fn radius(self) -> f64 {
        let s = self.value();
        (s * (s + 1.0)).sqrt()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = f64::deserialize(deserializer)?;
        Spin::from_f64(s).map_err(serde::de::Error::custom)
    }
}

/// One manifold of the polarization sector.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldBlock {
    spin: Spin,
    weight: f64,
    block: CMatrix,
    complete: bool,
    negligible: bool,
}

impl ManifoldBlock {
    /// A standalone unit-weight block; `block` is normalized to unit trace.
    pub fn new(spin: Spin, block: CMatrix) -> Result<Self> {
        if block.nrows() != spin.dim() || block.ncols() != spin.dim() {
            return Err(Error::Dimension(format!(
                "spin {spin} needs a {0}x{0} block, got {1}x{2}",
                spin.dim(),
                block.nrows(),
                block.ncols()
            )));
        }
        let tr = linalg::trace(&block).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("block trace {tr} is not positive")));
        }
        let block = block.map(|z| z / tr);
        let herm = linalg::hermiticity_defect(&block);
        if herm > fock::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("hermiticity defect {herm:.3e}")));
        }
        Ok(ManifoldBlock {
            spin,
            weight: 1.0,
            block,
            complete: true,
            negligible: false,
        })
    }

    /// Pure block `|psi><psi|`, amplitudes in `m`-descending order.
    pub fn pure(spin: Spin, amplitudes: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(spin, &v * v.adjoint())
    }

    /// `(2S+1)^-1` times the identity.
    pub fn maximally_mixed(spin: Spin) -> Self {
        let d = spin.dim();
        ManifoldBlock {
            spin,
            weight: 1.0,
            block: CMatrix::identity(d, d).map(|z| z / d as f64),
            complete: true,
            negligible: false,
        }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    /// Probability `P_S` of the manifold.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Unit-trace block (zero for a manifold with no population).
    pub fn matrix(&self) -> &CMatrix {
        &self.block
    }

    /// False when some basis state lies beyond a mode cutoff.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// True when `P_S` fell below the sector threshold.
    pub fn is_negligible(&self) -> bool {
        self.negligible
    }

    /// Same block carrying another weight; used when re-weighting sectors.
    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// Same weight and flags with a transformed block, e.g. after a rotation.
    pub fn map_matrix(&self, f: impl FnOnce(&CMatrix) -> CMatrix) -> Self {
        ManifoldBlock {
            block: f(&self.block),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_defect(&self.block);
        if herm > fock::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("hermiticity defect {herm:.3e}")));
        }
        if !self.negligible {
            let tr = linalg::trace(&self.block).re;
            if (tr - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidState(format!("block trace {tr}")));
            }
            let lo = linalg::min_hermitian_eigenvalue(&self.block);
            if lo < -fock::PSD_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {lo:.3e}")));
            }
        }
        if !(0.0..=1.0 + 1e-12).contains(&self.weight) && self.weight.abs() > 1e-15 {
            return Err(Error::InvalidState(format!("weight {}", self.weight)));
        }
        Ok(())
    }
}

/// Parsing options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorOptions {
    /// Manifolds with `P_S` below this are flagged negligible.
    pub negligible_below: f64,
}

impl Default for SectorOptions {
    fn default() -> Self {
        SectorOptions {
            negligible_below: 1e-12,
        }
    }
}

/// Direct sum of manifold blocks for `S = 0, 1/2, 1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationSector {
    blocks: Vec<ManifoldBlock>,
    cutoff_h: usize,
    cutoff_v: usize,
}

impl PolarizationSector {
    /// Builds a sector from standalone blocks, e.g. for tests; spins must be
    /// strictly increasing by 1/2 starting from 0.
    pub fn from_blocks(blocks: Vec<ManifoldBlock>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.spin.twice() as usize != i {
                return Err(Error::Dimension(format!(
                    "block {i} has spin {}, expected {}",
                    b.spin,
                    Spin(i as u32)
                )));
            }
        }
        let n = blocks.len().saturating_sub(1);
        Ok(PolarizationSector {
            blocks,
            cutoff_h: n,
            cutoff_v: n,
        })
    }

    pub fn blocks(&self) -> &[ManifoldBlock] {
        &self.blocks
    }

    pub fn block(&self, spin: Spin) -> Option<&ManifoldBlock> {
        self.blocks.get(spin.twice() as usize)
    }

    /// Blocks that carry population and are not flagged negligible.
    pub fn significant(&self) -> impl Iterator<Item = &ManifoldBlock> {
        self.blocks.iter().filter(|b| !b.negligible)
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.cutoff_h, self.cutoff_v)
    }

    /// Captured probability `sum_S P_S`.
    pub fn total_weight(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight).sum()
    }

    /// `<N> = sum_S 2S P_S`.
    pub fn mean_photon_number(&self) -> f64 {
        self.blocks.iter().map(|b| b.spin.photons() as f64 * b.weight).sum()
    }

    /// Largest manifold whose every basis state lies within both cutoffs.
    pub fn max_complete_spin(&self) -> Spin {
        Spin(self.cutoff_h.min(self.cutoff_v) as u32)
    }

    /// Largest manifold that is not flagged negligible.
    pub fn max_significant_spin(&self) -> Spin {
        self.significant().map(|b| b.spin).max().unwrap_or(Spin::ZERO)
    }

    /// Copy in which every block has been transformed, weights unchanged.
    pub fn map_blocks(&self, mut f: impl FnMut(&ManifoldBlock) -> CMatrix) -> Self {
        PolarizationSector {
            blocks: self.blocks.iter().map(|b| b.map_matrix(|_| f(b))).collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.total_weight();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!("sector weight {total} exceeds 1")));
        }
        self.blocks.iter().try_for_each(ManifoldBlock::validate)
    }
}

fn finish_block(spin: Spin, raw: CMatrix, complete: bool, options: &SectorOptions) -> ManifoldBlock {
    let weight = linalg::trace(&raw).re;
    let negligible = weight < options.negligible_below;
    let block = if weight > 0.0 {
        let mut b = raw.map(|z| z / weight);
        // exact hermiticity after the division
        let adj = b.adjoint();
        b = (b + adj).map(|z| z * 0.5);
        b
    } else {
        CMatrix::zeros(spin.dim(), spin.dim())
    };
    ManifoldBlock {
        spin,
        weight,
        block,
        complete,
        negligible,
    }
}

fn parse_with(
    cutoff_h: usize,
    cutoff_v: usize,
    options: &SectorOptions,
    element: impl Fn((usize, usize), (usize, usize)) -> Complex64,
) -> PolarizationSector {
    let blocks = (0..=cutoff_h + cutoff_v)
        .map(|n| {
            let spin = Spin(n as u32);
            let d = spin.dim();
            let inside = |i: usize| n - i <= cutoff_h && i <= cutoff_v;
            let mut raw = CMatrix::zeros(d, d);
            for i in (0..d).filter(|&i| inside(i)) {
                for j in (0..d).filter(|&j| inside(j)) {
                    raw[(i, j)] = element((n - i, i), (n - j, j));
                }
            }
            let complete = n <= cutoff_h.min(cutoff_v);
            finish_block(spin, raw, complete, options)
        })
        .collect();
    PolarizationSector {
        blocks,
        cutoff_h,
        cutoff_v,
    }
}

/// Extracts every manifold block of a two-mode state.
pub fn parse_manifolds(state: &TwoModeState) -> PolarizationSector {
    parse_manifolds_with(state, &SectorOptions::default())
}

pub fn parse_manifolds_with(state: &TwoModeState, options: &SectorOptions) -> PolarizationSector {
    let (ch, cv) = state.cutoffs();
    parse_with(ch, cv, options, |r, c| state.element(r, c))
}

/// Same as parsing `tensor_product(h, v)` without materializing the two-mode
/// matrix, which keeps large cutoffs affordable.
pub fn parse_product(h: &ModeState, v: &ModeState, options: &SectorOptions) -> PolarizationSector {
    let (mh, mv) = (h.matrix(), v.matrix());
    parse_with(h.cutoff(), v.cutoff(), options, |r, c| mh[(r.0, c.0)] * mv[(r.1, c.1)])
}

/// `(N, P_N)` pairs; trailing manifolds with no population are dropped.
pub fn photon_number_distribution(sector: &PolarizationSector) -> Vec<(u32, f64)> {
    let mut out: Vec<(u32, f64)> = sector.blocks.iter().map(|b| (b.spin.photons(), b.weight)).collect();
    while out.len() > 1 && out.last().is_some_and(|&(_, p)| p <= 0.0) {
        out.pop();
    }
    out
}

/// Re-embeds `P_S rho^(S)` into the two-mode product basis; the result is
/// the manifold-diagonal part of the parsed state.
pub fn embed_sector(sector: &PolarizationSector) -> TwoModeState {
    let (ch, cv) = sector.cutoffs();
    let dim = (ch + 1) * (cv + 1);
    let idx = |nh: usize, nv: usize| nh * (cv + 1) + nv;
    let mut rho = CMatrix::zeros(dim, dim);
    for b in &sector.blocks {
        let n = b.spin.photons() as usize;
        let inside = |i: usize| n - i <= ch && i <= cv;
        for i in (0..b.spin.dim()).filter(|&i| inside(i)) {
            for j in (0..b.spin.dim()).filter(|&j| inside(j)) {
                rho[(idx(n - i, i), idx(n - j, j))] = b.block[(i, j)] * b.weight;
            }
        }
    }
    TwoModeState::from_matrix(ch, cv, rho).expect("embedding preserves hermiticity and trace")
}

pub(crate) fn complex_pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// JSON dump: one entry per manifold with `S`, `N`, `P_S`, flags, and the
/// block as nested `[re, im]` rows in `m`-descending order.
pub fn sector_to_json(sector: &PolarizationSector) -> Value {
    let manifolds: Vec<Value> = sector
        .blocks
        .iter()
        .map(|b| {
            let rows: Vec<Value> = (0..b.spin.dim())
                .map(|i| Value::Array((0..b.spin.dim()).map(|j| complex_pair(b.block[(i, j)])).collect()))
                .collect();
            json!({
                "S": b.spin.value(),
                "N": b.spin.photons(),
                "P_S": b.weight,
                "complete": b.complete,
                "negligible": b.negligible,
                "block": rows,
            })
        })
        .collect();
    json!({
        "cutoff_h": sector.cutoff_h,
        "cutoff_v": sector.cutoff_v,
        "total_weight": sector.total_weight(),
        "manifolds": manifolds,
    })
}
