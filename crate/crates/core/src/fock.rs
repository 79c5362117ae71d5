//! Single-mode and two-mode states in a truncated photon-number basis.
//!
//! Operators are built on a padded space of cutoff `ceil(1.5 c) + 10`, where
//! the exponential of the truncated generator is accurate for the low Fock
//! columns, and only then cropped to the requested cutoff `c`. States are
//! synthesized on the padded space as well, so the reported trace deficit is
//! the probability that genuinely lies above the cutoff.

use std::f64::consts::LN_10;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{self, expm_anti_hermitian};
use crate::CMatrix;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Hermiticity tolerance of a stored density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;

/// Padded Fock cutoff used when building operators for cutoff `cutoff`.
pub fn padded_cutoff(cutoff: usize) -> usize {
    (3 * cutoff).div_ceil(2) + 10
}

/// Annihilation operator on `dim` Fock levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn crop(m: &CMatrix, cutoff: usize) -> CMatrix {
    m.view((0, 0), (cutoff + 1, cutoff + 1)).into_owned()
}

/// A truncated unitary together with its accuracy diagnostics.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub matrix: CMatrix,
    /// Unitarity defect of the padded operator before cropping.
    pub padded_unitarity_defect: f64,
    /// Largest norm lost by any kept column when cropping, `1 - |col|^2`.
    pub max_column_leakage: f64,
}

impl TruncatedOperator {
    fn from_padded(padded: CMatrix, cutoff: usize) -> Self {
        let padded_unitarity_defect = linalg::unitarity_defect(&padded);
        let matrix = crop(&padded, cutoff);
        let max_column_leakage = (0..=cutoff)
            .map(|j| 1.0 - matrix.column(j).norm_squared())
            .fold(0.0, f64::max);
        if max_column_leakage > 1e-8 {
            log::debug!("cutoff {cutoff}: cropped operator leaks {max_column_leakage:.3e} of column norm");
        }
        TruncatedOperator {
            matrix,
            padded_unitarity_defect,
            max_column_leakage,
        }
    }
}

fn padded_displacement(alpha: Complex64, dim: usize) -> CMatrix {
    let a = annihilation(dim);
    let generator = a.adjoint().map(|z| z * alpha) - a.map(|z| z * alpha.conj());
    expm_anti_hermitian(&generator)
}

fn padded_squeeze(r: Complex64, dim: usize) -> CMatrix {
    let a = annihilation(dim);
    let a2 = &a * &a;
    let ad2 = a2.adjoint();
    let generator = (a2.map(|z| z * r.conj()) - ad2.map(|z| z * r)).map(|z| z * 0.5);
    expm_anti_hermitian(&generator)
}

/// Matrix of `D(alpha) = exp(alpha a^dagger - conj(alpha) a)` on Fock levels `0..=cutoff`.
pub fn displacement_matrix(alpha: Complex64, cutoff: usize) -> Result<TruncatedOperator> {
    ensure_finite("alpha.re", alpha.re)?;
    ensure_finite("alpha.im", alpha.im)?;
    let padded = padded_displacement(alpha, padded_cutoff(cutoff) + 1);
    Ok(TruncatedOperator::from_padded(padded, cutoff))
}

/// Matrix of `S(r) = exp[(conj(r) a^2 - r a^dagger^2) / 2]` on Fock levels `0..=cutoff`.
pub fn squeeze_matrix(r: Complex64, cutoff: usize) -> Result<TruncatedOperator> {
    ensure_finite("r.re", r.re)?;
    ensure_finite("r.im", r.im)?;
    let padded = padded_squeeze(r, padded_cutoff(cutoff) + 1);
    Ok(TruncatedOperator::from_padded(padded, cutoff))
}

/// Single-mode density matrix in the photon-number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeState {
    cutoff: usize,
    rho: CMatrix,
}

impl ModeState {
    /// Wraps a matrix after checking shape, hermiticity and trace.
    pub fn from_matrix(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "mode matrix must be square and non-empty, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        check_density(&rho)?;
        Ok(ModeState {
            cutoff: rho.nrows() - 1,
            rho,
        })
    }

    /// `|psi><psi|` for a (possibly sub-normalized) amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::from_matrix(&v * v.adjoint())
    }

    /// Fock state `|n>` truncated at `cutoff`.
    pub fn fock(n: usize, cutoff: usize) -> Self {
        let mut rho = CMatrix::zeros(cutoff + 1, cutoff + 1);
        if n <= cutoff {
            rho[(n, n)] = ONE;
        }
        ModeState { cutoff, rho }
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::fock(0, cutoff)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.rho).re
    }

    /// Probability lost above the cutoff, `1 - Tr rho`.
    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.rho, &self.rho).re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// `<psi|rho|psi>` for a pure reference state.
    pub fn fidelity_with_pure(&self, psi: &[Complex64]) -> f64 {
        let n = psi.len().min(self.cutoff + 1);
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += psi[i].conj() * self.rho[(i, j)] * psi[j];
            }
        }
        acc.re
    }

    /// Variances of `x = (a + a^dagger)/sqrt2` and `p = (a - a^dagger)/(i sqrt2)`;
    /// the vacuum has 1/2 for both.
    pub fn quadrature_variances(&self) -> (f64, f64) {
        let a = annihilation(self.cutoff + 1);
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = (&a + &ad).map(|z| z * s);
        let p = (&a - &ad).map(|z| z * Complex64::new(0.0, -s));
        let var = |q: &CMatrix| {
            let m = linalg::trace_of_product(&self.rho, q).re;
            let m2 = linalg::trace_of_product(&self.rho, &(q * q)).re;
            m2 - m * m
        };
        (var(&x), var(&p))
    }

    /// Full invariant check including positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        check_density(&self.rho)?;
        check_psd(&self.rho)
    }
}

fn check_density(rho: &CMatrix) -> Result<()> {
    let herm = linalg::hermiticity_defect(rho);
    if !(herm < HERMITIAN_TOL) {
        return Err(Error::InvalidState(format!("hermiticity defect {herm:.3e}")));
    }
    let tr = linalg::trace(rho).re;
    if !(tr <= 1.0 + 1e-12 && tr >= 0.0) {
        return Err(Error::InvalidState(format!("trace {tr} outside [0, 1]")));
    }
    Ok(())
}

fn check_psd(rho: &CMatrix) -> Result<()> {
    let lo = linalg::min_hermitian_eigenvalue(rho);
    if lo < -PSD_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {lo:.3e}")));
    }
    Ok(())
}

fn hermitize(m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj).map(|z| z * 0.5)
}

/// Diagonal thermal state `n^k / (1+n)^(k+1)`, not renormalized after cropping.
pub fn thermal_state(nbar: f64, cutoff: usize) -> Result<ModeState> {
    ensure_finite("nbar", nbar)?;
    if nbar < 0.0 {
        return Err(Error::OutOfRange {
            name: "nbar",
            value: nbar,
            expected: ">= 0",
        });
    }
    let mut rho = CMatrix::zeros(cutoff + 1, cutoff + 1);
    let ratio = nbar / (1.0 + nbar);
    let mut p = 1.0 / (1.0 + nbar);
    for n in 0..=cutoff {
        rho[(n, n)] = Complex64::new(p, 0.0);
        p *= ratio;
    }
    Ok(ModeState { cutoff, rho })
}

/// Inverts the squeezed-thermal variance relations
/// `(2n+1) e^{-2r} = 10^{-sq/10}` and `(2n+1) e^{2r} = 10^{anti/10}`.
pub fn fit_noise_parameters(squeezing_db: f64, antisqueezing_db: f64) -> Result<(f64, f64)> {
    ensure_finite("squeezing_db", squeezing_db)?;
    ensure_finite("antisqueezing_db", antisqueezing_db)?;
    if squeezing_db < 0.0 {
        return Err(Error::OutOfRange {
            name: "squeezing_db",
            value: squeezing_db,
            expected: ">= 0",
        });
    }
    if antisqueezing_db < squeezing_db {
        return Err(Error::NegativeOccupation {
            sq_db: squeezing_db,
            anti_db: antisqueezing_db,
        });
    }
    let r = (squeezing_db + antisqueezing_db) * LN_10 / 40.0;
    let nbar = 0.5 * (10f64.powf((antisqueezing_db - squeezing_db) / 20.0) - 1.0);
    Ok((r, nbar))
}

/// How a reported anti-squeezing figure is turned into the total
/// anti-squeezed variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcessReading {
    /// The figure is the total anti-squeezed variance above shot noise.
    Absolute,
    /// The figure is excess noise on top of the pure-state anti-squeezing,
    /// which equals the squeezing figure; total = squeezing + figure.
    AbovePure,
}

/// Orientation of the squeezed quadrature relative to a real displacement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeAxis {
    /// `x` is squeezed: squeeze parameter `+r`.
    Amplitude,
    /// `p` is squeezed: squeeze parameter `-r`.
    #[default]
    Phase,
}

/// Squeezed-thermal noise model plus detection efficiency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub efficiency: f64,
    pub squeeze: f64,
    pub thermal_nbar: f64,
    pub axis: SqueezeAxis,
}

impl NoiseModel {
    /// From the squeezed and total anti-squeezed variances in dB.
    pub fn from_db(squeezing_db: f64, antisqueezing_db: f64, efficiency: f64) -> Result<Self> {
        check_efficiency(efficiency)?;
        let (squeeze, thermal_nbar) = fit_noise_parameters(squeezing_db, antisqueezing_db)?;
        Ok(NoiseModel {
            squeezing_db,
            antisqueezing_db,
            efficiency,
            squeeze,
            thermal_nbar,
            axis: SqueezeAxis::default(),
        })
    }

    pub fn from_reported(
        squeezing_db: f64,
        antisqueezing_figure_db: f64,
        efficiency: f64,
        reading: ExcessReading,
    ) -> Result<Self> {
        let anti = match reading {
            ExcessReading::Absolute => antisqueezing_figure_db,
            ExcessReading::AbovePure => squeezing_db + antisqueezing_figure_db,
        };
        Self::from_db(squeezing_db, anti, efficiency)
    }

    /// From the squeeze parameter and thermal occupation directly.
    pub fn from_parameters(squeeze: f64, thermal_nbar: f64, efficiency: f64) -> Result<Self> {
        ensure_finite("squeeze", squeeze)?;
        ensure_finite("thermal_nbar", thermal_nbar)?;
        check_efficiency(efficiency)?;
        if squeeze < 0.0 || thermal_nbar < 0.0 {
            return Err(Error::OutOfRange {
                name: "squeeze/thermal_nbar",
                value: squeeze.min(thermal_nbar),
                expected: ">= 0",
            });
        }
        let base = (2.0 * thermal_nbar + 1.0).log10() * 10.0;
        let sq_shift = 20.0 * squeeze / LN_10;
        Ok(NoiseModel {
            squeezing_db: sq_shift - base,
            antisqueezing_db: sq_shift + base,
            efficiency,
            squeeze,
            thermal_nbar,
            axis: SqueezeAxis::default(),
        })
    }

    /// Pure squeezed vacuum with parameter `r`, lossless.
    pub fn pure(squeeze: f64) -> Result<Self> {
        Self::from_parameters(squeeze, 0.0, 1.0)
    }

    pub fn with_axis(mut self, axis: SqueezeAxis) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Result<Self> {
        check_efficiency(efficiency)?;
        self.efficiency = efficiency;
        Ok(self)
    }

    /// Complex squeeze parameter handed to `S(r)`.
    pub fn squeeze_parameter(&self) -> Complex64 {
        match self.axis {
            SqueezeAxis::Amplitude => Complex64::new(self.squeeze, 0.0),
            SqueezeAxis::Phase => Complex64::new(-self.squeeze, 0.0),
        }
    }
}

fn check_efficiency(eta: f64) -> Result<()> {
    ensure_finite("efficiency", eta)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange {
            name: "efficiency",
            value: eta,
            expected: "in [0, 1]",
        });
    }
    Ok(())
}

/// `D(alpha) S(r) rho_th S(r)^dagger D(alpha)^dagger`, followed by loss with the
/// model efficiency, cropped to `cutoff`.
pub fn synthesize_mode(model: &NoiseModel, alpha: Complex64, cutoff: usize) -> Result<ModeState> {
    ensure_finite("alpha.re", alpha.re)?;
    ensure_finite("alpha.im", alpha.im)?;
    let dim = padded_cutoff(cutoff) + 1;
    let thermal = thermal_state(model.thermal_nbar, dim - 1)?;
    let d = padded_displacement(alpha, dim);
    let s = padded_squeeze(model.squeeze_parameter(), dim);
    let u = &d * &s;
    let mut rho = hermitize(&u * thermal.rho * u.adjoint());
    if model.efficiency < 1.0 {
        rho = apply_loss(&rho, model.efficiency);
    }
    let rho = crop(&rho, cutoff);
    let state = ModeState { cutoff, rho };
    if state.trace_deficit() > 1e-6 {
        log::warn!(
            "mode state at cutoff {cutoff} loses {:.3e} of its trace",
            state.trace_deficit()
        );
    }
    Ok(state)
}

/// `ln C(n, k)`.
fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `sqrt(C(n,k) eta^(n-k) (1-eta)^k)`, the `<n-k|E_k|n>` Kraus element.
fn loss_amplitude(n: usize, k: usize, eta: f64, ln_fact: &[f64]) -> f64 {
    let keep = n - k;
    let mut ln = ln_fact[n] - ln_fact[k] - ln_fact[keep];
    if keep > 0 {
        if eta == 0.0 {
            return 0.0;
        }
        ln += keep as f64 * eta.ln();
    }
    if k > 0 {
        if eta == 1.0 {
            return 0.0;
        }
        ln += k as f64 * (1.0 - eta).ln();
    }
    (0.5 * ln).exp()
}

fn apply_loss(rho: &CMatrix, eta: f64) -> CMatrix {
    let dim = rho.nrows();
    let mut ln_fact = vec![0.0; dim + 1];
    for n in 1..=dim {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    let amp: Vec<Vec<f64>> = (0..dim)
        .map(|n| (0..=n).map(|k| loss_amplitude(n, k, eta, &ln_fact)).collect())
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        for m in 0..dim {
            let z = rho[(n, m)];
            if z == ZERO {
                continue;
            }
            for k in 0..=n.min(m) {
                out[(n - k, m - k)] += z * (amp[n][k] * amp[m][k]);
            }
        }
    }
    out
}

/// Pure-loss channel of transmissivity `eta` in Kraus form.
pub fn loss_channel(state: &ModeState, eta: f64) -> Result<ModeState> {
    check_efficiency(eta)?;
    Ok(ModeState {
        cutoff: state.cutoff,
        rho: apply_loss(&state.rho, eta),
    })
}

/// Kraus operators `E_k`, `k = 0..=cutoff`, of the pure-loss channel.
pub fn loss_kraus_operators(eta: f64, cutoff: usize) -> Result<Vec<CMatrix>> {
    check_efficiency(eta)?;
    Ok((0..=cutoff)
        .map(|k| {
            let mut e = CMatrix::zeros(cutoff + 1, cutoff + 1);
            for n in k..=cutoff {
                let c = ln_binomial(n, k);
                let mut ln = c;
                let keep = n - k;
                let zero = (keep > 0 && eta == 0.0) || (k > 0 && eta == 1.0);
                if !zero {
                    if keep > 0 {
                        ln += keep as f64 * eta.ln();
                    }
                    if k > 0 {
                        ln += k as f64 * (1.0 - eta).ln();
                    }
                    e[(n - k, n)] = Complex64::new((0.5 * ln).exp(), 0.0);
                }
            }
            e
        })
        .collect())
}

/// Two-mode density matrix over `(n_H, n_V)`, `n_H`-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    cutoff_h: usize,
    cutoff_v: usize,
    rho: CMatrix,
}

impl TwoModeState {
    pub fn from_matrix(cutoff_h: usize, cutoff_v: usize, rho: CMatrix) -> Result<Self> {
        let dim = (cutoff_h + 1) * (cutoff_v + 1);
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::Dimension(format!(
                "two-mode matrix must be {dim}x{dim}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        check_density(&rho)?;
        Ok(TwoModeState {
            cutoff_h,
            cutoff_v,
            rho,
        })
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.cutoff_h, self.cutoff_v)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    /// Row/column index of `|n_H, n_V>`.
    pub fn index(&self, n_h: usize, n_v: usize) -> usize {
        n_h * (self.cutoff_v + 1) + n_v
    }

    pub fn element(&self, row: (usize, usize), col: (usize, usize)) -> Complex64 {
        self.rho[(self.index(row.0, row.1), self.index(col.0, col.1))]
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.rho).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.rho, &self.rho).re
    }

    pub fn validate(&self) -> Result<()> {
        check_density(&self.rho)?;
        check_psd(&self.rho)
    }
}

/// `rho_H (x) rho_V` with `n_H`-major indexing.
pub fn tensor_product(h: &ModeState, v: &ModeState) -> TwoModeState {
    TwoModeState {
        cutoff_h: h.cutoff,
        cutoff_v: v.cutoff,
        rho: h.rho.kronecker(&v.rho),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// alpha^n e^{-|alpha|^2/2} / sqrt(n!)
    fn coherent_series(alpha: Complex64, cutoff: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(cutoff + 1);
        let mut amp = c((-alpha.norm_sqr() / 2.0).exp());
        for n in 0..=cutoff {
            if n > 0 {
                amp = amp * alpha / (n as f64).sqrt();
            }
            out.push(amp);
        }
        out
    }

    /// c_{2n} = (-tanh r)^n sqrt((2n)!) / (2^n n!) / sqrt(cosh r), real r.
    fn squeezed_vacuum_series(r: f64, cutoff: usize) -> Vec<f64> {
        let mut out = vec![0.0; cutoff + 1];
        let mut amp = 1.0 / r.cosh().sqrt();
        let mut n = 0;
        while 2 * n <= cutoff {
            out[2 * n] = amp;
            let k = (n + 1) as f64;
            // ratio c_{2n+2}/c_{2n} = -tanh r * sqrt((2k-1)(2k)) / (2k)
            amp *= -r.tanh() * ((2.0 * k - 1.0) * (2.0 * k)).sqrt() / (2.0 * k);
            n += 1;
        }
        out
    }

    #[test]
    fn zero_displacement_is_identity() {
        let d = displacement_matrix(c(0.0), 12).unwrap();
        for i in 0..13 {
            for j in 0..13 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((d.matrix[(i, j)] - c(target)).norm() < 1e-14);
            }
        }
        let s = squeeze_matrix(c(0.0), 12).unwrap();
        assert!((s.matrix.clone() - CMatrix::identity(13, 13)).norm() < 1e-14);
    }

    #[test]
    fn displacement_vacuum_element() {
        let d = displacement_matrix(c(1.13), 20).unwrap();
        let expected = (-1.13f64 * 1.13 / 2.0).exp();
        assert!(close(d.matrix[(0, 0)].re, expected, 1e-12));
        assert!(close(expected, 0.5281, 1e-4));
    }

    #[test]
    fn displacement_column_matches_coherent_series() {
        for alpha in [c(1.13), Complex64::new(0.7, -1.2)] {
            let d = displacement_matrix(alpha, 40).unwrap();
            let series = coherent_series(alpha, 40);
            let err = (0..=40)
                .map(|n| (d.matrix[(n, 0)] - series[n]).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "max error {err}");
            assert!(d.padded_unitarity_defect < 1e-12);
        }
    }

    #[test]
    fn squeeze_column_matches_series_and_parity() {
        let s = squeeze_matrix(c(0.41), 40).unwrap();
        let series = squeezed_vacuum_series(0.41, 40);
        assert!(close(s.matrix[(0, 0)].re, 1.0 / 0.41f64.cosh().sqrt(), 1e-12));
        assert!(close(s.matrix[(0, 0)].re, 0.9599, 1e-4));
        for n in 0..=40 {
            assert!((s.matrix[(n, 0)] - c(series[n])).norm() < 1e-8, "n = {n}");
            if n % 2 == 1 {
                assert!(s.matrix[(n, 0)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn thermal_state_geometric() {
        let v = thermal_state(0.0, 5).unwrap();
        assert_eq!(v, ModeState::vacuum(5));
        let (_, nbar) = fit_noise_parameters(3.6, 4.4).unwrap();
        let t = thermal_state(nbar, 30).unwrap();
        assert!(close(t.matrix()[(0, 0)].re, 1.0 / (1.0 + nbar), 1e-15));
        assert!(close(t.matrix()[(0, 0)].re, 0.9540, 1e-4));
        assert!(close(t.mean_photon_number(), nbar, 1e-12));
        assert!(thermal_state(-0.1, 3).is_err());
    }

    #[test]
    fn noise_fit_examples() {
        let (r, nbar) = fit_noise_parameters(3.6, 3.6).unwrap();
        assert!(close(r, 0.4144653167389282, 1e-12));
        assert_eq!(nbar, 0.0);
        // pure-state relation 10^{-0.36} = e^{-2r}
        assert!(close((-2.0 * r).exp(), 10f64.powf(-0.36), 1e-14));
        assert_eq!(fit_noise_parameters(0.0, 0.0).unwrap(), (0.0, 0.0));
        let (r, nbar) = fit_noise_parameters(3.6, 4.4).unwrap();
        assert!(close(r, 0.4605, 1e-4));
        assert!(close(nbar, 0.0482, 1e-4));
        let lhs_sq = (2.0 * nbar + 1.0) * (-2.0 * r).exp();
        let lhs_anti = (2.0 * nbar + 1.0) * (2.0 * r).exp();
        assert!(close(lhs_sq, 10f64.powf(-0.36), 1e-12));
        assert!(close(lhs_anti, 10f64.powf(0.44), 1e-12));
        assert!(matches!(
            fit_noise_parameters(4.4, 3.6),
            Err(Error::NegativeOccupation { .. })
        ));
    }

    #[test]
    fn model_round_trips_parameters() {
        let m = NoiseModel::from_parameters(0.37, 0.2, 1.0).unwrap();
        let back = NoiseModel::from_db(m.squeezing_db, m.antisqueezing_db, 1.0).unwrap();
        assert!(close(back.squeeze, 0.37, 1e-12));
        assert!(close(back.thermal_nbar, 0.2, 1e-12));
        let above = NoiseModel::from_reported(3.6, 4.4, 0.85, ExcessReading::AbovePure).unwrap();
        assert!(close(above.antisqueezing_db, 8.0, 1e-12));
    }

    #[test]
    fn squeezed_vacuum_synthesis() {
        let model = NoiseModel::pure(0.41).unwrap().with_axis(SqueezeAxis::Amplitude);
        let state = synthesize_mode(&model, c(0.0), 40).unwrap();
        let series = squeezed_vacuum_series(0.41, 40);
        for (n, p) in state.populations().iter().enumerate() {
            assert!(close(*p, series[n] * series[n], 1e-8));
            if n % 2 == 1 {
                assert!(p.abs() < 1e-12);
            }
        }
        state.validate().unwrap();
    }

    #[test]
    fn trivial_synthesis_is_vacuum_or_thermal() {
        let model = NoiseModel::from_parameters(0.0, 0.0, 1.0).unwrap();
        let state = synthesize_mode(&model, c(0.0), 6).unwrap();
        assert!((state.matrix() - ModeState::vacuum(6).matrix()).norm() < 1e-14);
        let model = NoiseModel::from_parameters(0.0, 0.3, 1.0).unwrap();
        let state = synthesize_mode(&model, c(0.0), 6).unwrap();
        let th = thermal_state(0.3, 6).unwrap();
        assert!((state.matrix() - th.matrix()).norm() < 1e-13);
    }

    #[test]
    fn quadrature_variances_follow_db() {
        for axis in [SqueezeAxis::Amplitude, SqueezeAxis::Phase] {
            let model = NoiseModel::from_db(3.6, 4.4, 1.0).unwrap().with_axis(axis);
            let state = synthesize_mode(&model, c(1.13), 40).unwrap();
            let (vx, vp) = state.quadrature_variances();
            let lo = 10f64.powf(-0.36) / 2.0;
            let hi = 10f64.powf(0.44) / 2.0;
            let (sq, anti) = match axis {
                SqueezeAxis::Amplitude => (vx, vp),
                SqueezeAxis::Phase => (vp, vx),
            };
            assert!(close(sq, lo, 1e-6), "{axis:?}: {sq} vs {lo}");
            assert!(close(anti, hi, 1e-6), "{axis:?}: {anti} vs {hi}");
        }
    }

    #[test]
    fn loss_trivial_limits() {
        let model = NoiseModel::from_db(3.6, 4.4, 1.0).unwrap();
        let state = synthesize_mode(&model, c(0.8), 20).unwrap();
        let same = loss_channel(&state, 1.0).unwrap();
        assert!((same.matrix() - state.matrix()).norm() < 1e-15);
        let gone = loss_channel(&state, 0.0).unwrap();
        assert!(close(gone.matrix()[(0, 0)].re, state.trace(), 1e-12));
        assert!(close(gone.trace(), gone.matrix()[(0, 0)].re, 1e-15));
        assert!(loss_channel(&state, 1.2).is_err());
    }

    #[test]
    fn loss_maps_coherent_to_coherent() {
        let cutoff = 30;
        let psi = coherent_series(c(1.13), cutoff);
        let state = ModeState::pure(&psi).unwrap();
        // brute-force Kraus sum
        let kraus = loss_kraus_operators(0.85, cutoff).unwrap();
        let mut brute = CMatrix::zeros(cutoff + 1, cutoff + 1);
        for e in &kraus {
            brute += e * state.matrix() * e.adjoint();
        }
        let fast = loss_channel(&state, 0.85).unwrap();
        assert!((fast.matrix() - &brute).norm() < 1e-13);
        let target = coherent_series(c(0.85f64.sqrt() * 1.13), cutoff);
        assert!(fast.fidelity_with_pure(&target) > 1.0 - 1e-8);
    }

    #[test]
    fn loss_composition_and_trace() {
        let model = NoiseModel::from_db(3.6, 4.4, 1.0).unwrap();
        let state = synthesize_mode(&model, c(1.5), 24).unwrap();
        let once = loss_channel(&state, 0.9 * 0.7).unwrap();
        let twice = loss_channel(&loss_channel(&state, 0.9).unwrap(), 0.7).unwrap();
        assert!((once.matrix() - twice.matrix()).norm() < 1e-10);
        assert!(close(once.trace(), state.trace(), 1e-12));
        once.validate().unwrap();
    }

    #[test]
    fn kraus_completeness() {
        let kraus = loss_kraus_operators(0.37, 12).unwrap();
        let mut sum = CMatrix::zeros(13, 13);
        for e in &kraus {
            sum += e.adjoint() * e;
        }
        assert!((sum - CMatrix::identity(13, 13)).norm() < 1e-13);
    }

    #[test]
    fn tensor_product_structure() {
        let vv = tensor_product(&ModeState::vacuum(3), &ModeState::vacuum(4));
        assert_eq!(vv.matrix().nrows(), 20);
        assert_eq!(vv.element((0, 0), (0, 0)), ONE);
        assert!(close(vv.trace(), 1.0, 0.0));

        let h = thermal_state(0.4, 3).unwrap();
        let model = NoiseModel::from_db(2.0, 5.0, 0.8).unwrap();
        let v = synthesize_mode(&model, c(0.3), 4).unwrap();
        let hv = tensor_product(&h, &v);
        assert!(close(hv.trace(), h.trace() * v.trace(), 1e-12));
        assert!(close(hv.purity(), h.purity() * v.purity(), 1e-12));
        assert_eq!(hv.element((2, 1), (1, 3)), h.matrix()[(2, 1)] * v.matrix()[(1, 3)]);
        hv.validate().unwrap();
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.5);
        m[(0, 1)] = c(0.1);
        assert!(ModeState::from_matrix(m).is_err());
        assert!(displacement_matrix(Complex64::new(f64::NAN, 0.0), 3).is_err());
    }
}
