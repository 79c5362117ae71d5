//! SU(2) coherent states, Gauss-Legendre grids on the unit sphere and Husimi
//! Q functions of manifold blocks and of whole polarization sectors.
//!
//! Coherent states are `|S, n> = exp(-i phi Sz) exp(-i theta Sy) |S, S>`.

pub mod colormap;
pub mod render;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::multipole::{multipoles_of_matrix, HarmonicSeries};
use crate::polar::{ManifoldBlock, PolarizationSector, Spin};
use crate::CMatrix;

pub use render::{render_foliation, render_heatmap, Axis, Foliation, Projection, Raster};

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Precomputed `sqrt(C(2S, S+m))` factors for one spin.
#[derive(Clone, Debug)]
struct CoherentAmplitudes {
    spin: Spin,
    half_ln_binomial: Vec<f64>,
}

impl CoherentAmplitudes {
    fn new(spin: Spin) -> Self {
        let n = spin.photons() as usize;
        let lf = ln_factorials(n);
        // row i carries S + m = n - i
        let half_ln_binomial = (0..=n).map(|i| 0.5 * (lf[n] - lf[i] - lf[n - i])).collect();
        CoherentAmplitudes { spin, half_ln_binomial }
    }

    fn fill(&self, theta: f64, phi: f64, out: &mut [Complex64]) {
        let n = self.spin.photons() as usize;
        let ln_c = (0.5 * theta).cos().abs().ln();
        let ln_s = (0.5 * theta).sin().abs().ln();
        let pow = |k: usize, l: f64| if k == 0 { 0.0 } else { k as f64 * l };
        for (i, slot) in out.iter_mut().enumerate().take(n + 1) {
            let mag = (self.half_ln_binomial[i] + pow(n - i, ln_c) + pow(i, ln_s)).exp();
            // sign of cos(theta/2) only matters outside [0, pi]
            let m = self.spin.m(i);
            *slot = Complex64::from_polar(mag, -m * phi);
        }
    }

    fn expectation(&self, rho: &CMatrix, theta: f64, phi: f64, scratch: &mut Vec<Complex64>) -> f64 {
        let d = self.spin.dim();
        scratch.resize(d, Complex64::new(0.0, 0.0));
        self.fill(theta, phi, scratch);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += rho[(i, j)] * scratch[j];
            }
            acc += scratch[i].conj() * row;
        }
        acc.re
    }
}

/// Amplitudes `<S, m | S, n(theta, phi)>` ordered `m = S, S-1, ..., -S`.
pub fn su2_overlap_amplitudes(spin: Spin, theta: f64, phi: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); spin.dim()];
    CoherentAmplitudes::new(spin).fill(theta, phi, &mut out);
    out
}

pub fn unit_vector(theta: f64, phi: f64) -> Vec3 {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Colatitude and azimuth (in `[0, 2pi)`) of a non-zero vector.
pub fn angles_of(v: &Vec3) -> (f64, f64) {
    let r = crate::linalg::norm3(v);
    let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
    (theta, phi)
}

/// `(P_n(x), P_{n-1}(x))` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes descending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let derivative = |x: f64| {
        let (pn, pm) = legendre_pair(n, x);
        (pn, n as f64 * (x * pn - pm) / (x * x - 1.0))
    };
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, dp) = derivative(x);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = derivative(x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product quadrature on the sphere: Gauss-Legendre in `cos(theta)` times a
/// uniform azimuthal grid. Band-limited functions of degree `<= degree` are
/// integrated exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    degree: u32,
    theta: Vec<f64>,
    theta_weights: Vec<f64>,
    phi: Vec<f64>,
    phi_weight: f64,
}

impl SphereGrid {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn phis(&self) -> &[f64] {
        &self.phi
    }

    /// Node `(theta, phi)`; nodes are theta-major.
    pub fn node(&self, index: usize) -> (f64, f64) {
        let np = self.phi.len();
        (self.theta[index / np], self.phi[index % np])
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.theta_weights[index / self.phi.len()] * self.phi_weight
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(i, v)| v * self.weight(i)).sum()
    }

    pub fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        values.iter().enumerate().map(|(i, v)| v * self.weight(i)).sum()
    }

    /// Applies `f` to every node in parallel, preserving node order.
    pub fn map_nodes<T: Send>(&self, f: impl Fn(f64, f64) -> T + Sync) -> Vec<T> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (t, p) = self.node(i);
                f(t, p)
            })
            .collect()
    }
}

pub fn build_quadrature_grid(degree: u32) -> SphereGrid {
    let n_theta = (degree as usize + 1).div_ceil(2) + 1;
    let n_phi = degree as usize + 1;
    let (x, w) = gauss_legendre(n_theta);
    SphereGrid {
        degree,
        theta: x.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect(),
        theta_weights: w,
        phi: (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect(),
        phi_weight: 2.0 * PI / n_phi as f64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QKind {
    Manifold(Spin),
    /// Sum over manifolds up to `s_max`; `captured` is their total weight.
    Total {
        s_max: Spin,
        captured: f64,
        excluded: f64,
    },
}

#[derive(Clone, Debug)]
struct QTerm {
    coefficient: f64,
    amplitudes: CoherentAmplitudes,
    block: CMatrix,
}

/// Husimi function sampled on a grid, evaluable anywhere on the sphere.
///
/// Grid values use the coherent-state overlaps directly; off-grid evaluation
/// goes through the equivalent spherical-harmonic series, which is much
/// cheaper for large spins.
#[derive(Clone, Debug)]
pub struct QFunction {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
    kind: QKind,
    terms: Vec<QTerm>,
    series: HarmonicSeries,
}

impl QFunction {
    fn from_terms(grid: Arc<SphereGrid>, kind: QKind, terms: Vec<QTerm>) -> Self {
        let degree = terms.iter().map(|t| 2 * t.amplitudes.spin.twice()).max().unwrap_or(0);
        let mut series = HarmonicSeries::zero(degree);
        for t in &terms {
            series.add_husimi(t.coefficient, &multipoles_of_matrix(t.amplitudes.spin, &t.block));
        }
        let mut q = QFunction {
            grid,
            values: Vec::new(),
            kind,
            terms,
            series,
        };
        q.values = q.grid.map_nodes(|t, p| q.evaluate_direct(t, p));
        q
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> &QKind {
        &self.kind
    }

    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        self.series.evaluate(theta, phi)
    }

    /// `sum_S c_S <S, n| rho_S |S, n>` without the series.
    pub fn evaluate_direct(&self, theta: f64, phi: f64) -> f64 {
        let mut scratch = Vec::new();
        self.terms
            .iter()
            .map(|t| t.coefficient * t.amplitudes.expectation(&t.block, theta, phi, &mut scratch))
            .sum()
    }

    pub fn evaluate_at(&self, direction: &Vec3) -> f64 {
        let (t, p) = angles_of(direction);
        self.evaluate(t, p)
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid node with the largest value, as `(theta, phi)`.
    pub fn argmax(&self) -> (f64, f64) {
        let i = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.grid.node(i)
    }
}

fn ensure_resolves(spin: Spin, grid: &SphereGrid) -> Result<()> {
    let required = 2 * spin.twice();
    if grid.degree() < required {
        return Err(Error::GridTooCoarse {
            spin,
            required,
            available: grid.degree(),
        });
    }
    Ok(())
}

/// `Q(n) = <S, n| rho |S, n>` for a unit-trace block.
pub fn husimi_manifold(block: &ManifoldBlock, grid: &Arc<SphereGrid>) -> Result<QFunction> {
    ensure_resolves(block.spin(), grid)?;
    let term = QTerm {
        coefficient: 1.0,
        amplitudes: CoherentAmplitudes::new(block.spin()),
        block: block.matrix().clone(),
    };
    Ok(QFunction::from_terms(
        Arc::clone(grid),
        QKind::Manifold(block.spin()),
        vec![term],
    ))
}

/// `Q(n) = sum_S P_S (2S+1)/(4pi) Q_S(n)` over every non-negligible manifold.
pub fn husimi_total(sector: &PolarizationSector, grid: &Arc<SphereGrid>) -> Result<QFunction> {
    let s_max = sector.max_significant_spin();
    ensure_resolves(s_max, grid)?;
    husimi_total_up_to(sector, grid, s_max)
}

/// As [`husimi_total`] but restricted to manifolds with `S <= s_max`; the
/// weight left out is recorded in the kind.
pub fn husimi_total_up_to(sector: &PolarizationSector, grid: &Arc<SphereGrid>, s_max: Spin) -> Result<QFunction> {
    ensure_resolves(s_max, grid)?;
    let mut terms = Vec::new();
    let mut captured = 0.0;
    let mut excluded = 0.0;
    for b in sector.blocks() {
        if b.spin() > s_max {
            excluded += b.weight();
            continue;
        }
        if b.weight() == 0.0 {
            continue;
        }
        captured += b.weight();
        terms.push(QTerm {
            coefficient: b.weight() * b.spin().dim() as f64 / (4.0 * PI),
            amplitudes: CoherentAmplitudes::new(b.spin()),
            block: b.matrix().clone(),
        });
    }
    Ok(QFunction::from_terms(
        Arc::clone(grid),
        QKind::Total {
            s_max,
            captured,
            excluded,
        },
        terms,
    ))
}
