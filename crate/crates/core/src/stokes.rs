//! Stokes operators per manifold, covariance matrices and the polarization
//! squeezing degree `xi2 = 4 gamma_min / N`.
//!
//! `gamma_min` is the smallest variance `n^t Gamma n` over admissible unit
//! directions. When the mean Stokes vector is non-negligible
//! (`|<S>| / S > direction_tolerance`) the search is restricted to the plane
//! perpendicular to it; otherwise every direction is admissible.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, cross3, dot3, norm3, quad_form3, sym2_eigen, sym3_eigen, Mat3, Vec3};
use crate::polar::{ManifoldBlock, PolarizationSector, Spin};
use crate::CMatrix;

/// `Sx`, `Sy`, `Sz` on the `|S, m>` basis, `m` descending.
#[derive(Clone, Debug)]
pub struct StokesMatrices {
    pub spin: Spin,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl StokesMatrices {
    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }

    /// `n . S` for a real 3-vector `n`.
    pub fn along(&self, n: &Vec3) -> CMatrix {
        self.x.map(|z| z * n[0]) + self.y.map(|z| z * n[1]) + self.z.map(|z| z * n[2])
    }
}

/// `<S, m+1| S+ |S, m>` for the basis row `i` holding `m`.
fn raising_element(spin: Spin, i: usize) -> f64 {
    let s = spin.value();
    let m = spin.m(i);
    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn stokes_matrices(spin: Spin) -> StokesMatrices {
    let d = spin.dim();
    let mut plus = CMatrix::zeros(d, d);
    for i in 1..d {
        plus[(i - 1, i)] = Complex64::new(raising_element(spin, i), 0.0);
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus).map(|z| z * 0.5);
    let y = (&plus - &minus).map(|z| z * Complex64::new(0.0, -0.5));
    let mut z = CMatrix::zeros(d, d);
    for i in 0..d {
        z[(i, i)] = Complex64::new(spin.m(i), 0.0);
    }
    StokesMatrices { spin, x, y, z }
}

/// `exp(-i angle n.S)` for a unit axis `n`.
pub fn rotation_matrix(spin: Spin, axis: &Vec3, angle: f64) -> CMatrix {
    let generator = stokes_matrices(spin)
        .along(axis)
        .map(|z| z * Complex64::new(0.0, -angle));
    linalg::expm_anti_hermitian(&generator)
}

/// `exp(-i a Sz) exp(-i b Sy) exp(-i c Sz)`.
pub fn euler_rotation(spin: Spin, a: f64, b: f64, c: f64) -> CMatrix {
    let z = [0.0, 0.0, 1.0];
    let y = [0.0, 1.0, 0.0];
    rotation_matrix(spin, &z, a) * rotation_matrix(spin, &y, b) * rotation_matrix(spin, &z, c)
}

/// `rho op` using only the tridiagonal band of `op`.
fn times_tridiagonal(rho: &CMatrix, op: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for j in 0..d {
        let lo = j.saturating_sub(1);
        let hi = (j + 1).min(d - 1);
        for t in lo..=hi {
            let o = op[(t, j)];
            if o == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                out[(i, j)] += rho[(i, t)] * o;
            }
        }
    }
    out
}

/// `Tr(A op)` for tridiagonal `op`.
fn trace_with_tridiagonal(a: &CMatrix, op: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in i.saturating_sub(1)..=(i + 1).min(d - 1) {
            acc += a[(i, j)] * op[(j, i)];
        }
    }
    acc
}

/// First moments `<S_k>` and symmetrized second moments `<{S_k, S_l}>/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StokesMoments {
    pub first: Vec3,
    pub second: Mat3,
}

impl StokesMoments {
    pub fn of_matrix(spin: Spin, rho: &CMatrix) -> Self {
        let ops = stokes_matrices(spin);
        let comps = ops.components();
        let products: Vec<CMatrix> = comps.iter().map(|op| times_tridiagonal(rho, op)).collect();
        let mut first = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for k in 0..3 {
            first[k] = linalg::trace(&products[k]).re;
            for l in 0..3 {
                // Tr(rho S_k S_l)
                second[k][l] = trace_with_tridiagonal(&products[k], comps[l]).re;
            }
        }
        for k in 0..3 {
            for l in (k + 1)..3 {
                let sym = 0.5 * (second[k][l] + second[l][k]);
                second[k][l] = sym;
                second[l][k] = sym;
            }
        }
        StokesMoments { first, second }
    }

    pub fn covariance(&self) -> Mat3 {
        let mut g = self.second;
        for (k, row) in g.iter_mut().enumerate() {
            for (l, v) in row.iter_mut().enumerate() {
                *v -= self.first[k] * self.first[l];
            }
        }
        g
    }
}

/// Which directions the variance was minimized over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizationMode {
    PerpendicularRestricted,
    FullSpace,
}

impl MinimizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MinimizationMode::PerpendicularRestricted => "perpendicular",
            MinimizationMode::FullSpace => "full",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryOptions {
    /// Threshold on `|<S>| / S` above which the perpendicular plane is used.
    pub direction_tolerance: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            direction_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StokesSummary {
    pub mean: Vec3,
    pub gamma: Mat3,
    pub gamma_min: f64,
    pub direction: Vec3,
    /// Photon number used as normalization: `N` for a manifold, `<N>` for a sector.
    pub photons: f64,
    /// `None` when there is no polarization degree of freedom (`N = 0`).
    pub xi2: Option<f64>,
    pub mode: MinimizationMode,
}

impl StokesSummary {
    pub fn xi2_db(&self) -> Option<f64> {
        self.xi2.map(|x| 10.0 * x.log10())
    }
}

const TIE_TOL: f64 = 1e-12;

fn canonical_sign(mut v: Vec3) -> Vec3 {
    if let Some(first) = v.iter().copied().find(|c| c.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    v
}

/// Among near-degenerate minimal eigenpairs pick the eigenvector whose absolute
/// components are lexicographically largest.
fn pick_direction(candidates: &[(f64, Vec3)]) -> (f64, Vec3) {
    let lowest = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let scale = candidates.iter().map(|c| c.0.abs()).fold(1.0, f64::max);
    let lex_key = |v: &Vec3| v.map(|c| (c.abs() * 1e9).round());
    let best = candidates
        .iter()
        .filter(|c| c.0 - lowest <= TIE_TOL * scale)
        .max_by(|a, b| {
            let (ka, kb) = (lex_key(&a.1), lex_key(&b.1));
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one eigenpair");
    (lowest, canonical_sign(best.1))
}

/// Minimal variance over unit vectors perpendicular to `mean`.
pub fn perpendicular_minimum(gamma: &Mat3, mean: &Vec3) -> (f64, Vec3) {
    let u = {
        let n = norm3(mean);
        mean.map(|c| c / n)
    };
    // coordinate axis least aligned with u
    let k = (0..3).min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap_or(0);
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let e1 = {
        let c = cross3(&u, &axis);
        let n = norm3(&c);
        c.map(|x| x / n)
    };
    let e2 = cross3(&u, &e1);
    let g = |a: &Vec3, b: &Vec3| {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += a[i] * gamma[i][j] * b[j];
            }
        }
        acc
    };
    let (vals, vecs) = sym2_eigen(g(&e1, &e1), g(&e1, &e2), g(&e2, &e2));
    let lift = |v: [f64; 2]| [0, 1, 2].map(|i| v[0] * e1[i] + v[1] * e2[i]);
    pick_direction(&[(vals[0], lift(vecs[0])), (vals[1], lift(vecs[1]))])
}

/// Minimal variance over all unit vectors.
pub fn full_space_minimum(gamma: &Mat3) -> (f64, Vec3) {
    let (vals, vecs) = sym3_eigen(gamma);
    pick_direction(&[(vals[0], vecs[0]), (vals[1], vecs[1]), (vals[2], vecs[2])])
}

fn summarize(moments: &StokesMoments, spin_scale: f64, photons: f64, options: &SummaryOptions) -> StokesSummary {
    let gamma = moments.covariance();
    let mean = moments.first;
    if photons <= 0.0 {
        return StokesSummary {
            mean,
            gamma,
            gamma_min: 0.0,
            direction: [0.0, 0.0, 1.0],
            photons,
            xi2: None,
            mode: MinimizationMode::FullSpace,
        };
    }
    let (gamma_min, direction, mode) = if norm3(&mean) / spin_scale > options.direction_tolerance {
        let (g, d) = perpendicular_minimum(&gamma, &mean);
        (g, d, MinimizationMode::PerpendicularRestricted)
    } else {
        let (g, d) = full_space_minimum(&gamma);
        (g, d, MinimizationMode::FullSpace)
    };
    StokesSummary {
        mean,
        gamma,
        gamma_min,
        direction,
        photons,
        xi2: Some(4.0 * gamma_min / photons),
        mode,
    }
}

pub fn manifold_stokes_summary(block: &ManifoldBlock) -> StokesSummary {
    manifold_stokes_summary_with(block, &SummaryOptions::default())
}

pub fn manifold_stokes_summary_with(block: &ManifoldBlock, options: &SummaryOptions) -> StokesSummary {
    let spin = block.spin();
    let moments = StokesMoments::of_matrix(spin, block.matrix());
    summarize(&moments, spin.value(), spin.photons() as f64, options)
}

/// Moments accumulated as `P_S`-weighted block traces.
pub fn sector_moments(sector: &PolarizationSector) -> StokesMoments {
    let mut acc = StokesMoments::default();
    for b in sector
        .blocks()
        .iter()
        .filter(|b| b.weight() != 0.0 && b.spin() != Spin::ZERO)
    {
        let m = StokesMoments::of_matrix(b.spin(), b.matrix());
        let w = b.weight();
        for k in 0..3 {
            acc.first[k] += w * m.first[k];
            for l in 0..3 {
                acc.second[k][l] += w * m.second[k][l];
            }
        }
    }
    acc
}

pub fn total_stokes_summary(sector: &PolarizationSector) -> Result<StokesSummary> {
    total_stokes_summary_with(sector, &SummaryOptions::default())
}

pub fn total_stokes_summary_with(sector: &PolarizationSector, options: &SummaryOptions) -> Result<StokesSummary> {
    let captured = sector.total_weight();
    if !(captured > 0.5) {
        return Err(Error::UnderCaptured { captured });
    }
    let moments = sector_moments(sector);
    let photons = sector.mean_photon_number();
    Ok(summarize(&moments, 0.5 * photons, photons, options))
}

/// Approximate two-mode closed form `|a|^2 e^{-r} / (|a|^2 + sinh^2(r)/2)`.
///
/// It vanishes at `alpha = 0` and tends to `e^{-r}` for large amplitudes.
pub fn xi2_two_mode_approximation(alpha: f64, r: f64) -> f64 {
    let a2 = alpha * alpha;
    if a2 == 0.0 {
        return 0.0;
    }
    a2 * (-r).exp() / (a2 + 0.5 * r.sinh().powi(2))
}

/// Exact `xi2` of two pure squeezed vacua (parameter `r`, squeezed quadrature
/// orthogonal to the displacement) with the first mode displaced by real
/// `alpha`: `alpha^2 e^{-2r} / (alpha^2 + 2 sinh^2 r)`.
///
/// The minimal perpendicular variance is `Var(Sy) = alpha^2 e^{-2r} / 4`
/// (`Var(Sx) = (alpha^2 e^{2r} + sinh^2 2r) / 4` is larger) and
/// `<N> = alpha^2 + 2 sinh^2 r`, so the large-amplitude limit is `e^{-2r}`.
pub fn xi2_gaussian_closed_form(alpha: f64, r: f64) -> f64 {
    let a2 = alpha * alpha;
    a2 * (-2.0 * r).exp() / (a2 + 2.0 * r.sinh().powi(2))
}

/// Variance along a unit direction, `n^t Gamma n`.
pub fn variance_along(summary: &StokesSummary, n: &Vec3) -> f64 {
    quad_form3(&summary.gamma, n)
}

/// Cosine between the minimizing direction and the mean, for checks.
pub fn direction_mean_cosine(summary: &StokesSummary) -> f64 {
    let m = norm3(&summary.mean);
    if m == 0.0 {
        0.0
    } else {
        dot3(&summary.direction, &summary.mean) / m
    }
}
