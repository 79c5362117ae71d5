//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stokes_manifolds::{Complex64, ManifoldBlock, Spin};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn ln_fact(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Stokes operators of the `N`-photon subspace built from two-mode ladder
/// operators. Basis order `|N,0>, |N-1,1>, ..., |0,N>`.
pub fn two_mode_stokes(n: usize) -> [CMat; 3] {
    let d = n + 1;
    let mut hv = CMat::zeros(d, d);
    // a_H^dag a_V |n_H, n_V> = sqrt((n_H+1) n_V) |n_H+1, n_V-1>
    for col in 0..d {
        let (nh, nv) = (n - col, col);
        if nv > 0 {
            hv[(col - 1, col)] = c((((nh + 1) * nv) as f64).sqrt());
        }
    }
    let vh = hv.adjoint();
    let x = (&hv + &vh).map(|z| z * 0.5);
    let y = (&hv - &vh).map(|z| z * Complex64::new(0.0, -0.5));
    let z = CMat::from_fn(d, d, |i, j| {
        if i == j {
            c(0.5 * (n as f64 - 2.0 * i as f64))
        } else {
            c(0.0)
        }
    });
    [x, y, z]
}

pub fn expect(rho: &CMat, op: &CMat) -> f64 {
    (rho * op).trace().re
}

/// Mean vector and symmetrized covariance of the Stokes vector, by dense products.
pub fn brute_moments(rho: &CMat, n: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let s = two_mode_stokes(n);
    let tr = rho.trace().re;
    let mean = [0, 1, 2].map(|i| expect(rho, &s[i]) / tr);
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let anti = &s[i] * &s[j] + &s[j] * &s[i];
            cov[i][j] = 0.5 * expect(rho, &anti) / tr - mean[i] * mean[j];
        }
    }
    (mean, cov)
}

/// Smallest Stokes variance over directions perpendicular to the mean,
/// normalized by shot noise `N/4`; full-space minimum if the mean vanishes.
pub fn brute_xi2(rho: &CMat, n: usize) -> f64 {
    let (mean, cov) = brute_moments(rho, n);
    let g = nalgebra::Matrix3::from_fn(|i, j| cov[i][j]);
    let m = nalgebra::Vector3::from(mean);
    let min = if m.norm() > 1e-6 * n as f64 / 2.0 {
        let e3 = m.normalize();
        let helper = if e3.x.abs() < 0.9 {
            nalgebra::Vector3::x()
        } else {
            nalgebra::Vector3::y()
        };
        let e1 = helper.cross(&e3).normalize();
        let e2 = e3.cross(&e1);
        let p = nalgebra::Matrix3x2::from_columns(&[e1, e2]);
        let g2 = p.transpose() * g * p;
        g2.symmetric_eigenvalues().min()
    } else {
        g.symmetric_eigenvalues().min()
    };
    4.0 * min / n as f64
}

/// Positive matrix `A A^dag` with uniform entries, normalized to unit trace.
pub fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho.map(|z| z / tr)
}

pub fn random_block(rng: &mut ChaCha8Rng, spin: Spin) -> ManifoldBlock {
    ManifoldBlock::new(spin, random_density(rng, spin.dim())).unwrap()
}

/// Random unit axis and angle.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> ([f64; 3], f64) {
    loop {
        let v = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0f64));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n < 1.0 {
            return (v.map(|x| x / n), rng.gen_range(0.0..std::f64::consts::TAU));
        }
    }
}

/// `<m|D(alpha)|n>` from the generalized Laguerre form.
pub fn displacement_element(alpha: Complex64, m: usize, n: usize) -> Complex64 {
    let x = alpha.norm_sqr();
    let (lo, hi) = (m.min(n), m.max(n));
    let k = hi - lo;
    // L_lo^(k)(x) = sum_j (-1)^j C(lo + k, lo - j) x^j / j!
    let mut lag = 0.0;
    for j in 0..=lo {
        let coef = (ln_fact(lo + k) - ln_fact(lo - j) - ln_fact(k + j) - ln_fact(j)).exp();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        lag += sign * coef * x.powi(j as i32);
    }
    let pref = (0.5 * (ln_fact(lo) - ln_fact(hi))).exp() * (-x / 2.0).exp();
    let power = if m >= n {
        alpha.powu(k as u32)
    } else {
        (-alpha.conj()).powu(k as u32)
    };
    power * pref * lag
}

/// `<m|S(r)|n>` for `S(r) = exp[(conj(r) a^2 - r a^dag^2)/2]`, from the
/// normal-ordered factorization.
pub fn squeeze_element(r: Complex64, m: usize, n: usize) -> Complex64 {
    if (m + n) % 2 == 1 {
        return c(0.0);
    }
    let (rho, theta) = r.to_polar();
    let t = Complex64::from_polar(rho.tanh(), theta);
    let ch = rho.cosh();
    let mut acc = c(0.0);
    for j in 0..=m.min(n) {
        if (m - j) % 2 == 1 {
            continue;
        }
        let (p, l) = ((m - j) / 2, (n - j) / 2);
        let left = (-t / 2.0).powu(p as u32) * (0.5 * (ln_fact(m) - ln_fact(j)) - ln_fact(p)).exp();
        let right = (t.conj() / 2.0).powu(l as u32) * (0.5 * (ln_fact(n) - ln_fact(j)) - ln_fact(l)).exp();
        acc += left * right * ch.powf(-(j as f64 + 0.5));
    }
    acc
}
