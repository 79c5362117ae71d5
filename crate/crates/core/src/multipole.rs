//! State multipoles `rho_Kq` of manifold blocks and the `W_K` spectrum.
//!
//! Two routes are provided and agree to rounding:
//!
//! * algebraic: `rho_Kq = sqrt((2K+1)/(2S+1)) sum_m C^{S,m+q}_{S,m;K,q} <S,m+q|rho|S,m>`
//! * integral: `rho_Kq = sqrt((2S+1)/(4 pi)) / C^{SS}_{SS;K0} * int conj(Y_Kq) Q dn`

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::polar::{complex_pair, ManifoldBlock, PolarizationSector, Spin};
use crate::sphere::{husimi_manifold, SphereGrid};

const LN_FACTORIAL_TABLE: usize = 1024;

fn ln_factorial(n: i64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| crate::sphere::ln_factorials(LN_FACTORIAL_TABLE));
    let n = n as usize;
    if n <= LN_FACTORIAL_TABLE {
        table[n]
    } else {
        table[LN_FACTORIAL_TABLE] + ((LN_FACTORIAL_TABLE + 1)..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Clebsch-Gordan coefficient with all arguments given as twice their value.
pub fn clebsch_gordan_twice(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if j1 < 0 || j2 < 0 || j < 0 {
        return 0.0;
    }
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j + m) % 2 != 0 {
        return 0.0;
    }
    if j > j1 + j2 || j < (j1 - j2).abs() || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    // integer combinations
    let a = (j1 + j2 - j) / 2;
    let b = (j1 - m1) / 2;
    let c = (j2 + m2) / 2;
    let d = (j - j2 + m1) / 2;
    let e = (j - j1 - m2) / 2;
    let ln_pre = 0.5
        * (((j + 1) as f64).ln() + ln_factorial((j + j1 - j2) / 2) + ln_factorial((j - j1 + j2) / 2) + ln_factorial(a)
            - ln_factorial((j1 + j2 + j) / 2 + 1)
            + ln_factorial((j + m) / 2)
            + ln_factorial((j - m) / 2)
            + ln_factorial((j1 - m1) / 2)
            + ln_factorial((j1 + m1) / 2)
            + ln_factorial((j2 - m2) / 2)
            + ln_factorial((j2 + m2) / 2));
    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);
    if k_min > k_max {
        return 0.0;
    }
    // successive terms by their exact ratio; only the first goes through logs
    let ln_den = ln_factorial(k_min)
        + ln_factorial(a - k_min)
        + ln_factorial(b - k_min)
        + ln_factorial(c - k_min)
        + ln_factorial(d + k_min)
        + ln_factorial(e + k_min);
    let sign = if k_min % 2 == 0 { 1.0 } else { -1.0 };
    let mut term = 1.0f64;
    let series = compensated_sum((k_min..=k_max).map(|k| {
        let t = term;
        let num = ((a - k) * (b - k) * (c - k)) as f64;
        let den = ((k + 1) * (d + k + 1) * (e + k + 1)) as f64;
        term *= -num / den;
        t
    }));
    sign * (ln_pre - ln_den).exp() * series
}

fn twice_of(name: &str, value: f64) -> Result<i64> {
    let t = 2.0 * value;
    if !t.is_finite() || (t - t.round()).abs() > 1e-9 {
        return Err(Error::MalformedSpin(format!(
            "{name} = {value} is not a multiple of 1/2"
        )));
    }
    Ok(t.round() as i64)
}

/// `<j1 m1; j2 m2 | J M>` in the Condon-Shortley convention.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    let [tj1, tm1, tj2, tm2, tj, tm] = [
        twice_of("j1", j1)?,
        twice_of("m1", m1)?,
        twice_of("j2", j2)?,
        twice_of("m2", m2)?,
        twice_of("J", j)?,
        twice_of("M", m)?,
    ];
    for (name, t) in [("j1", tj1), ("j2", tj2), ("J", tj)] {
        if t < 0 {
            return Err(Error::MalformedSpin(format!("{name} = {} is negative", t as f64 / 2.0)));
        }
    }
    Ok(clebsch_gordan_twice(tj1, tm1, tj2, tm2, tj, tm))
}

/// Orthonormal `Y_Kq(theta, phi)` with the Condon-Shortley phase.
pub fn spherical_harmonic(k: u32, q: i32, theta: f64, phi: f64) -> Complex64 {
    let m = q.unsigned_abs();
    if m > k {
        return Complex64::new(0.0, 0.0);
    }
    let (x, s) = (theta.cos(), theta.sin());
    // normalized P_m^m
    let mut pmm = (0.25 / PI).sqrt();
    for i in 1..=m {
        let i = i as f64;
        pmm *= -((2.0 * i + 1.0) / (2.0 * i)).sqrt() * s;
    }
    let p = if k == m {
        pmm
    } else {
        let mf = m as f64;
        let mut prev = pmm;
        let mut cur = (2.0 * mf + 3.0).sqrt() * x * pmm;
        let a = |l: f64| ((4.0 * l * l - 1.0) / (l * l - mf * mf)).sqrt();
        for l in (m + 2)..=k {
            let l = l as f64;
            let next = a(l) * (x * cur - prev / a(l - 1.0));
            prev = cur;
            cur = next;
        }
        cur
    };
    let y = Complex64::from_polar(p, m as f64 * phi);
    if q >= 0 {
        y
    } else if m % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}

/// Multipoles of one unit-trace manifold block.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipoleSpectrum {
    spin: Spin,
    /// `coefficients[K][q + K]` for `K = 0..=2S`.
    coefficients: Vec<Vec<Complex64>>,
}

impl MultipoleSpectrum {
    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn max_order(&self) -> u32 {
        self.spin.twice()
    }

    pub fn coefficient(&self, k: u32, q: i32) -> Complex64 {
        match self.coefficients.get(k as usize) {
            Some(row) if q.unsigned_abs() <= k => row[(q + k as i32) as usize],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `W_K = sum_q |rho_Kq|^2`, zero beyond `K = 2S`.
    pub fn weight(&self, k: u32) -> f64 {
        self.coefficients
            .get(k as usize)
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
            .unwrap_or(0.0)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..=self.max_order()).map(|k| self.weight(k)).collect()
    }

    /// Largest `|rho_Kq - other_Kq|`.
    pub fn max_difference(&self, other: &MultipoleSpectrum) -> f64 {
        let top = self.max_order().max(other.max_order());
        let mut worst = 0.0f64;
        for k in 0..=top {
            for q in -(k as i32)..=(k as i32) {
                worst = worst.max((self.coefficient(k, q) - other.coefficient(k, q)).norm());
            }
        }
        worst
    }

    /// Largest violation of `rho_{K,-q} = (-1)^q conj(rho_Kq)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=self.max_order() {
            for q in 0..=(k as i32) {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let d = self.coefficient(k, -q) - self.coefficient(k, q).conj() * sign;
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

pub fn multipoles_algebraic(block: &ManifoldBlock) -> MultipoleSpectrum {
    multipoles_of_matrix(block.spin(), block.matrix())
}

pub(crate) fn multipoles_of_matrix(spin: Spin, rho: &crate::CMatrix) -> MultipoleSpectrum {
    let ts = spin.twice() as i64;
    let row = |twice_m: i64| ((ts - twice_m) / 2) as usize;
    let coefficients = (0..=spin.twice())
        .map(|k| {
            let norm = ((2 * k + 1) as f64 / spin.dim() as f64).sqrt();
            (-(k as i64)..=(k as i64))
                .map(|q| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for tm in (-ts..=ts).step_by(2) {
                        let tmq = tm + 2 * q;
                        if tmq.abs() > ts {
                            continue;
                        }
                        let cg = clebsch_gordan_twice(ts, tm, 2 * k as i64, 2 * q, ts, tmq);
                        acc += rho[(row(tmq), row(tm))] * cg;
                    }
                    acc * norm
                })
                .collect()
        })
        .collect();
    MultipoleSpectrum { spin, coefficients }
}

pub fn multipoles_integral(block: &ManifoldBlock, grid: &Arc<SphereGrid>) -> Result<MultipoleSpectrum> {
    let spin = block.spin();
    let q_fn = husimi_manifold(block, grid)?;
    let ts = spin.twice() as i64;
    let prefactor = (spin.dim() as f64 / (4.0 * PI)).sqrt();
    let values = q_fn.values();
    let coefficients = (0..=spin.twice())
        .map(|k| {
            let stretched = clebsch_gordan_twice(ts, ts, 2 * k as i64, 0, ts, ts);
            (-(k as i32)..=(k as i32))
                .map(|q| {
                    let integral: Complex64 = (0..grid.len())
                        .map(|i| {
                            let (t, p) = grid.node(i);
                            spherical_harmonic(k, q, t, p).conj() * values[i] * grid.weight(i)
                        })
                        .sum();
                    integral * (prefactor / stretched)
                })
                .collect()
        })
        .collect();
    Ok(MultipoleSpectrum { spin, coefficients })
}

/// Real band-limited function `sum_{K <= L} sum_q c_Kq Y_Kq` with
/// `c_{K,-q} = (-1)^q conj(c_Kq)`, evaluated by Legendre recurrence.
#[derive(Clone, Debug)]
pub struct HarmonicSeries {
    degree: u32,
    /// `coeffs[m][l - m]` for `m >= 0`.
    coeffs: Vec<Vec<Complex64>>,
    /// recurrence factors `a_lm`, same layout
    recur: Vec<Vec<f64>>,
    /// `P_m^m = seed[m] * sin^m`, normalized with the Condon-Shortley phase
    seed: Vec<f64>,
}

impl HarmonicSeries {
    pub fn zero(degree: u32) -> Self {
        let l_max = degree as usize;
        let mut seed = vec![(0.25 / PI).sqrt(); l_max + 1];
        for m in 1..=l_max {
            seed[m] = -seed[m - 1] * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        let recur = (0..=l_max)
            .map(|m| {
                let mf = m as f64;
                (m..=l_max)
                    .map(|l| {
                        let lf = l as f64;
                        if l == m {
                            0.0
                        } else {
                            ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt()
                        }
                    })
                    .collect()
            })
            .collect();
        HarmonicSeries {
            degree,
            coeffs: (0..=l_max)
                .map(|m| vec![Complex64::new(0.0, 0.0); l_max + 1 - m])
                .collect(),
            recur,
            seed,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Adds `weight * Q_S`, the Husimi function of the block behind `spectrum`.
    pub fn add_husimi(&mut self, weight: f64, spectrum: &MultipoleSpectrum) {
        let spin = spectrum.spin();
        let ts = spin.twice() as i64;
        let scale = weight * (4.0 * PI / spin.dim() as f64).sqrt();
        for k in 0..=spectrum.max_order().min(self.degree) {
            let stretched = clebsch_gordan_twice(ts, ts, 2 * k as i64, 0, ts, ts);
            for m in 0..=k {
                self.coeffs[m as usize][(k - m) as usize] += spectrum.coefficient(k, m as i32) * (scale * stretched);
            }
        }
    }

    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        let l_max = self.degree as usize;
        let (x, s) = (theta.cos(), theta.sin());
        let step = Complex64::from_polar(1.0, phi);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut sin_pow = 1.0;
        let mut total = 0.0;
        for m in 0..=l_max {
            if m > 0 {
                sin_pow *= s;
                phase *= step;
            }
            let c = &self.coeffs[m];
            let a = &self.recur[m];
            let mut prev = self.seed[m] * sin_pow;
            let mut acc = c[0] * prev;
            if m < l_max {
                let mut cur = ((2 * m + 3) as f64).sqrt() * x * prev;
                acc += c[1] * cur;
                for j in 2..=(l_max - m) {
                    let next = a[j] * (x * cur - prev / a[j - 1]);
                    prev = cur;
                    cur = next;
                    acc += c[j] * cur;
                }
            }
            let term = (acc * phase).re;
            total += if m == 0 { term } else { 2.0 * term };
        }
        total
    }
}

/// Per-manifold spectra plus the `P_S`-weighted sum `W_K = sum_S P_S W_K^(S)`.
#[derive(Clone, Debug)]
pub struct SectorMultipoles {
    pub manifolds: Vec<(Spin, f64, MultipoleSpectrum)>,
    pub totals: Vec<f64>,
}

impl SectorMultipoles {
    pub fn total(&self, k: u32) -> f64 {
        self.totals.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Coefficients keyed `"S,K,q"` with `[re, im]` values.
    pub fn to_json(&self) -> Value {
        let mut map = BTreeMap::new();
        for (spin, _, spec) in &self.manifolds {
            for k in 0..=spec.max_order() {
                for q in -(k as i32)..=(k as i32) {
                    map.insert(
                        format!("{},{},{}", spin.value(), k, q),
                        complex_pair(spec.coefficient(k, q)),
                    );
                }
            }
        }
        Value::Object(map.into_iter().collect())
    }
}

/// Multipoles of every non-negligible manifold, via the algebraic route.
pub fn multipole_weights(sector: &PolarizationSector) -> SectorMultipoles {
    multipole_weights_up_to(sector, Spin::from_twice(u32::MAX))
}

pub fn multipole_weights_up_to(sector: &PolarizationSector, s_max: Spin) -> SectorMultipoles {
    let manifolds: Vec<(Spin, f64, MultipoleSpectrum)> = sector
        .blocks()
        .iter()
        .filter(|b| !b.is_negligible() && b.spin() <= s_max)
        .map(|b| (b.spin(), b.weight(), multipoles_algebraic(b)))
        .collect();
    let top = manifolds.iter().map(|m| m.0.twice()).max().unwrap_or(0);
    let totals = (0..=top)
        .map(|k| compensated_sum(manifolds.iter().map(|(_, w, s)| w * s.weight(k))))
        .collect();
    SectorMultipoles { manifolds, totals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::build_quadrature_grid;
    use crate::CMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn simple_coefficients() {
        for twice in 0..10 {
            let s = twice as f64 / 2.0;
            assert!((clebsch_gordan(s, s, 0.0, 0.0, s, s).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((clebsch_gordan(0.5, 0.5, 0.5, 0.5, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0.0, 0.0).unwrap() - h).abs() < 1e-14);
        assert!((clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0.0, 0.0).unwrap() + h).abs() < 1e-14);
        assert_eq!(clebsch_gordan(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(clebsch_gordan(-1.0, 0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(clebsch_gordan(0.3, 0.0, 1.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn low_order_harmonics() {
        let (t, p) = (0.7, 1.3);
        assert!((spherical_harmonic(0, 0, t, p) - c((0.25 / PI).sqrt())).norm() < 1e-15);
        assert!((spherical_harmonic(1, 0, t, p) - c((0.75 / PI).sqrt() * t.cos())).norm() < 1e-15);
        let y11 = Complex64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * t.sin(), p);
        assert!((spherical_harmonic(1, 1, t, p) - y11).norm() < 1e-15);
        let y2m2 = Complex64::from_polar(0.25 * (7.5 / PI).sqrt() * t.sin().powi(2), -2.0 * p);
        assert!((spherical_harmonic(2, -2, t, p) - y2m2).norm() < 1e-15);
    }

    #[test]
    fn harmonics_orthonormal_on_grid() {
        let grid = build_quadrature_grid(24);
        for k1 in 0..=12u32 {
            for q1 in -(k1 as i32)..=(k1 as i32) {
                for k2 in 0..=12u32 {
                    for q2 in -(k2 as i32)..=(k2 as i32) {
                        let vals: Vec<Complex64> = (0..grid.len())
                            .map(|i| {
                                let (t, p) = grid.node(i);
                                spherical_harmonic(k1, q1, t, p) * spherical_harmonic(k2, q2, t, p).conj()
                            })
                            .collect();
                        let v = grid.integrate_complex(&vals);
                        let target = if (k1, q1) == (k2, q2) { 1.0 } else { 0.0 };
                        assert!((v - c(target)).norm() < 1e-12, "{k1} {q1} {k2} {q2}: {v}");
                    }
                }
            }
        }
    }

    fn random_block(spin: Spin, seed: u64) -> ManifoldBlock {
        // deterministic pseudo-random entries without an RNG dependency
        let d = spin.dim();
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMatrix::from_fn(d, d, |_, _| Complex64::new(next(), next()));
        ManifoldBlock::new(spin, &a * a.adjoint()).unwrap()
    }

    #[test]
    fn integral_and_algebraic_routes_agree() {
        for twice in 1..=8 {
            let spin = Spin::from_twice(twice);
            let grid = Arc::new(build_quadrature_grid(2 * twice));
            for seed in 0..5 {
                let b = random_block(spin, seed);
                let alg = multipoles_algebraic(&b);
                let int = multipoles_integral(&b, &grid).unwrap();
                assert!(
                    alg.max_difference(&int) < 1e-10,
                    "2S={twice}: {}",
                    alg.max_difference(&int)
                );
                assert!(alg.hermiticity_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn monopole_is_spin_constant() {
        for twice in 0..=6 {
            let spin = Spin::from_twice(twice);
            let a = multipoles_algebraic(&random_block(spin, 3));
            let b = multipoles_algebraic(&ManifoldBlock::maximally_mixed(spin));
            let expected = 1.0 / (spin.dim() as f64).sqrt();
            assert!((a.coefficient(0, 0) - c(expected)).norm() < 1e-13);
            assert!((b.coefficient(0, 0) - c(expected)).norm() < 1e-13);
            for k in 1..=twice {
                assert!(b.weight(k) < 1e-28);
            }
        }
    }

    #[test]
    fn spin_up_qubit_is_axial() {
        let b = ManifoldBlock::pure(Spin::HALF, &[c(1.0), c(0.0)]).unwrap();
        let s = multipoles_algebraic(&b);
        assert_eq!(s.coefficient(1, 1), c(0.0));
        assert_eq!(s.coefficient(1, -1), c(0.0));
        assert!((s.weight(1) - s.coefficient(1, 0).norm_sqr()).abs() < 1e-15);
        assert!(s.weight(1) > 0.0);
        assert_eq!(s.weight(2), 0.0);
    }

    #[test]
    fn json_keys() {
        let b = ManifoldBlock::maximally_mixed(Spin::HALF);
        let sector = PolarizationSector::from_blocks(vec![
            ManifoldBlock::maximally_mixed(Spin::ZERO).with_weight(0.5),
            b.with_weight(0.5),
        ])
        .unwrap();
        let m = multipole_weights(&sector);
        let j = m.to_json();
        assert!(j.get("0.5,1,-1").is_some());
        assert!(j.get("0,0,0").is_some());
        assert_eq!(m.totals.len(), 2);
    }
}
