//! Quick built-in invariant suite behind the `check` subcommand.

use std::sync::Arc;

use num_complex::Complex64;

use crate::fock::{loss_channel, synthesize_mode, ModeState, NoiseModel};
use crate::linalg;
use crate::multipole::{multipoles_algebraic, multipoles_integral, spherical_harmonic};
use crate::polar::{parse_product, ManifoldBlock, SectorOptions, Spin};
use crate::sphere::{build_quadrature_grid, husimi_manifold, husimi_total_up_to};
use crate::stokes::{manifold_stokes_summary, stokes_matrices};
use crate::CMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst.is_finite() && worst < tol,
        detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn failed(name: &'static str, err: impl std::fmt::Display) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: false,
        detail: err.to_string(),
    }
}

fn su2_algebra() -> CheckOutcome {
    let i = Complex64::new(0.0, 1.0);
    let mut worst = 0.0f64;
    for twice in 0..=24 {
        let spin = Spin::from_twice(twice);
        let s = stokes_matrices(spin);
        let comm = &s.x * &s.y - &s.y * &s.x - s.z.map(|z| z * i);
        let sv = spin.value();
        let cas = &s.x * &s.x + &s.y * &s.y + &s.z * &s.z
            - CMatrix::identity(spin.dim(), spin.dim()).map(|z| z * (sv * (sv + 1.0)));
        worst = worst.max(comm.norm()).max(cas.norm());
    }
    outcome("su(2) commutators and Casimir", worst, 1e-12)
}

fn block_fn(spin: Spin, k: u64) -> ManifoldBlock {
    let d = spin.dim();
    let a = CMatrix::from_fn(d, d, |i, j| {
        let t = (k as f64 + 1.0) * (i as f64 * 1.7 + j as f64 * 0.9 + 0.3);
        Complex64::new(t.sin(), (1.3 * t).cos())
    });
    ManifoldBlock::new(spin, &a * a.adjoint()).expect("Gram matrices are valid blocks")
}

fn pure_state_checks() -> Vec<CheckOutcome> {
    let run = || -> crate::Result<Vec<CheckOutcome>> {
        let model = NoiseModel::pure(0.41)?;
        let zero = Complex64::new(0.0, 0.0);
        let h = synthesize_mode(&model, zero, 32)?;
        let v = synthesize_mode(&model, zero, 32)?;
        let sector = parse_product(&h, &v, &SectorOptions::default());
        let odd = sector
            .blocks()
            .iter()
            .filter(|b| b.spin().photons() % 2 == 1)
            .map(|b| b.weight())
            .fold(0.0, f64::max);
        let two = sector.block(Spin::ONE).map(manifold_stokes_summary);
        let xi2 = two.and_then(|s| s.xi2).unwrap_or(f64::NAN);
        Ok(vec![
            outcome("odd manifolds vanish for squeezed vacua", odd, 1e-10),
            outcome("two-photon manifold perfectly squeezed", xi2.abs(), 1e-8),
        ])
    };
    run().unwrap_or_else(|e| vec![failed("pure squeezed vacua", e)])
}

fn one_photon_shot_noise() -> CheckOutcome {
    let run = || -> crate::Result<f64> {
        let model = NoiseModel::from_db(3.6, 8.0, 0.85)?;
        let h = synthesize_mode(&model, Complex64::new(1.13, 0.0), 16)?;
        let v = synthesize_mode(&model, Complex64::new(0.0, 0.0), 16)?;
        let sector = parse_product(&h, &v, &SectorOptions::default());
        let s = sector.block(Spin::HALF).map(manifold_stokes_summary);
        Ok((s.and_then(|s| s.xi2).unwrap_or(f64::NAN) - 1.0).abs())
    };
    match run() {
        Ok(d) => outcome("one-photon manifold at shot noise", d, 1e-6),
        Err(e) => failed("one-photon manifold at shot noise", e),
    }
}

fn loss_trace() -> CheckOutcome {
    let mut worst = 0.0f64;
    for n in 0..12 {
        match loss_channel(&ModeState::fock(n, 12), 0.7) {
            Ok(s) => worst = worst.max((s.trace() - 1.0).abs()),
            Err(e) => return failed("loss channel trace preservation", e),
        }
    }
    outcome("loss channel trace preservation", worst, 1e-12)
}

fn multipole_routes() -> CheckOutcome {
    let mut worst = 0.0f64;
    for twice in 1..=8 {
        let spin = Spin::from_twice(twice);
        let grid = Arc::new(build_quadrature_grid(2 * twice));
        for k in 0..3 {
            let b = block_fn(spin, k);
            match multipoles_integral(&b, &grid) {
                Ok(int) => worst = worst.max(int.max_difference(&multipoles_algebraic(&b))),
                Err(e) => return failed("multipole dual-route agreement", e),
            }
        }
    }
    outcome("multipole dual-route agreement", worst, 1e-8)
}

fn grid_orthonormality() -> CheckOutcome {
    let grid = build_quadrature_grid(16);
    let mut worst = 0.0f64;
    for k1 in 0..=8u32 {
        for q1 in -(k1 as i32)..=(k1 as i32) {
            for k2 in 0..=8u32 {
                for q2 in -(k2 as i32)..=(k2 as i32) {
                    let vals: Vec<Complex64> = (0..grid.len())
                        .map(|i| {
                            let (t, p) = grid.node(i);
                            spherical_harmonic(k1, q1, t, p) * spherical_harmonic(k2, q2, t, p).conj()
                        })
                        .collect();
                    let target = if (k1, q1) == (k2, q2) { 1.0 } else { 0.0 };
                    worst = worst.max((grid.integrate_complex(&vals) - target).norm());
                }
            }
        }
    }
    outcome("spherical-harmonic orthonormality on grid", worst, 1e-12)
}

fn husimi_normalization() -> CheckOutcome {
    let run = || -> crate::Result<f64> {
        let model = NoiseModel::from_db(3.6, 8.0, 1.0)?;
        let h = synthesize_mode(&model, Complex64::new(1.13, 0.0), 12)?;
        let v = synthesize_mode(&model, Complex64::new(0.0, 0.0), 12)?;
        let sector = parse_product(&h, &v, &SectorOptions::default());
        let s_max = Spin::from_twice(12);
        let grid = Arc::new(build_quadrature_grid(2 * s_max.twice()));
        let q = husimi_total_up_to(&sector, &grid, s_max)?;
        let captured: f64 = sector
            .blocks()
            .iter()
            .filter(|b| b.spin() <= s_max)
            .map(|b| b.weight())
            .sum();
        let mut worst = (q.integral() - captured).abs();
        for b in sector.significant().filter(|b| b.spin() <= s_max) {
            let qm = husimi_manifold(b, &grid)?;
            let target = 4.0 * std::f64::consts::PI / b.spin().dim() as f64;
            worst = worst.max((qm.integral() - target).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(d) => outcome("Husimi normalization", d, 1e-8),
        Err(e) => failed("Husimi normalization", e),
    }
}

fn exponential_unitarity() -> CheckOutcome {
    let spin = Spin::from_twice(9);
    let g = stokes_matrices(spin)
        .along(&[0.3, -0.5, 0.8])
        .map(|z| z * Complex64::new(0.0, -2.1));
    outcome(
        "matrix exponential unitarity",
        linalg::unitarity_defect(&linalg::expm_anti_hermitian(&g)),
        1e-12,
    )
}

/// Runs every check; all must pass for a healthy build.
pub fn run_checks() -> Vec<CheckOutcome> {
    let mut out = vec![su2_algebra(), exponential_unitarity(), loss_trace()];
    out.extend(pure_state_checks());
    out.push(one_photon_shot_noise());
    out.push(multipole_routes());
    out.push(grid_orthonormality());
    out.push(husimi_normalization());
    out
}
