//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{LN_10, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stokes_manifolds::fock::{
    displacement_matrix, loss_channel, squeeze_matrix, synthesize_mode, ExcessReading, ModeState, NoiseModel,
    SqueezeAxis,
};
use stokes_manifolds::multipole::{multipole_weights, multipoles_algebraic, multipoles_integral, spherical_harmonic};
use stokes_manifolds::pipeline::{compute_sweep, run_sweep, EmitFlags, RunConfig, RunReport};
use stokes_manifolds::polar::{parse_product, SectorOptions};
use stokes_manifolds::sphere::{build_quadrature_grid, husimi_manifold};
use stokes_manifolds::stokes::{
    manifold_stokes_summary, rotation_matrix, total_stokes_summary, xi2_gaussian_closed_form,
    xi2_two_mode_approximation,
};
use stokes_manifolds::{Complex64, PolarizationSector, Spin};

use common::{brute_xi2, c, displacement_element, random_block, random_rotation, squeeze_element};

type Outcome = Result<String, String>;

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn pure_sector(r: f64, alpha: f64, cutoff_h: usize, cutoff_v: usize) -> Result<PolarizationSector, String> {
    let model = NoiseModel::pure(r).map_err(e)?;
    let h = synthesize_mode(&model, c(alpha), cutoff_h).map_err(e)?;
    let v = synthesize_mode(&model, c(0.0), cutoff_v).map_err(e)?;
    Ok(parse_product(&h, &v, &SectorOptions::default()))
}

/// Default sweep with the Q function kept and no files written.
fn default_report() -> &'static RunReport {
    static REPORT: OnceLock<RunReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let mut cfg = RunConfig::default();
        cfg.emit = EmitFlags {
            q_csv: true,
            ..EmitFlags::none()
        };
        compute_sweep(&cfg).expect("default sweep")
    })
}

fn parity_law() -> Outcome {
    let start = Instant::now();
    let sector = pure_sector(0.41, 0.0, 32, 32)?;
    let worst_odd = sector
        .blocks()
        .iter()
        .filter(|b| b.spin().photons() % 2 == 1)
        .map(|b| b.weight())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    require(
        worst_odd < 1e-10 && secs < 5.0,
        format!("max odd P_N = {worst_odd:.2e}, {secs:.2} s"),
    )
}

fn one_photon_shot_noise() -> Outcome {
    let noise = [
        (3.6, 4.4, ExcessReading::AbovePure),
        (3.6, 4.4, ExcessReading::Absolute),
        (3.6, 0.0, ExcessReading::AbovePure),
        (6.0, 2.0, ExcessReading::AbovePure),
    ];
    let mut worst = 0.0f64;
    let mut states = 0;
    for (sq, anti, reading) in noise {
        for apply_loss in [false, true] {
            for axis in [SqueezeAxis::Phase, SqueezeAxis::Amplitude] {
                for phase in [0.0, 0.7] {
                    let cfg = RunConfig {
                        squeezing_db: sq,
                        antisqueezing_db: anti,
                        excess_reference: reading,
                        apply_loss,
                        squeeze_axis: axis,
                        alpha_phase: phase,
                        cutoff: 20,
                        emit: EmitFlags::none(),
                        ..RunConfig::default()
                    };
                    let report = compute_sweep(&cfg).map_err(e)?;
                    for a in &report.alphas {
                        if let Some(m) = a.manifolds.iter().find(|m| m.spin == Spin::HALF && !m.negligible) {
                            let xi2 = m.summary.xi2.ok_or("S=1/2 without xi2")?;
                            worst = worst.max((xi2 - 1.0).abs());
                            states += 1;
                        }
                    }
                }
            }
        }
    }
    require(
        worst < 1e-6,
        format!("max |xi2 - 1| = {worst:.2e} over {states} states"),
    )
}

fn ideal_two_photon() -> Outcome {
    let sector = pure_sector(0.41, 0.0, 32, 32)?;
    let block = sector.block(Spin::ONE).ok_or("no S=1 block")?;
    let lib = manifold_stokes_summary(block).xi2.ok_or("no xi2")?;
    let brute = brute_xi2(block.matrix(), 2);
    require(
        lib < 1e-8 && brute.abs() < 1e-8 && (lib - brute).abs() < 1e-10,
        format!("xi2 = {lib:.2e}, brute-force 3x3 = {brute:.2e}"),
    )
}

fn experimental_regime() -> Outcome {
    let report = default_report();
    let s1 = |r: &RunReport| {
        r.alpha(0.0)
            .and_then(|a| a.manifolds.iter().find(|m| m.spin == Spin::ONE))
            .and_then(|m| m.summary.xi2_db())
    };
    let db = s1(report).ok_or("no S=1 at alpha=0")?;
    let lossy = RunConfig {
        alphas: vec![0.0],
        apply_loss: true,
        emit: EmitFlags::none(),
        ..RunConfig::default()
    };
    let with_loss = s1(&compute_sweep(&lossy).map_err(e)?).ok_or("no S=1")?;
    require(
        (db + 6.0).abs() <= 1.5,
        format!("S=1 at alpha=0: {db:.3} dB (eta applied: {with_loss:.3} dB)"),
    )
}

fn total_trend() -> Outcome {
    let report = default_report();
    let xs: Vec<f64> = report.alphas.iter().map(|a| a.total.xi2.unwrap_or(f64::NAN)).collect();
    let monotone = xs.windows(2).all(|w| w[1] >= w[0]);

    let r = 3.6 * LN_10 / 20.0;
    let limit = (-2.0 * r).exp();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for alpha in [5.0, 6.0, 7.0] {
        let sector = pure_sector(r, alpha, 150, 30)?;
        let xi2 = total_stokes_summary(&sector).map_err(e)?.xi2.ok_or("no xi2")?;
        let closed = xi2_gaussian_closed_form(alpha, r);
        worst = worst.max((xi2 / closed - 1.0).abs());
        parts.push(format!(
            "a={alpha}: {xi2:.5} vs {closed:.5} (printed form {:.5})",
            xi2_two_mode_approximation(alpha, r)
        ));
    }
    let last = pure_sector(r, 7.0, 150, 30)?;
    let at7 = total_stokes_summary(&last).map_err(e)?.xi2.ok_or("no xi2")?;
    let towards = (at7 / limit - 1.0).abs();
    require(
        monotone && worst < 0.01 && towards < 0.01,
        format!(
            "ladder {:?}; {}; limit e^-2r = {limit:.5} (e^-r = {:.5}), rel. dev. at a=7 {towards:.2e}",
            xs.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            parts.join(", "),
            (-r).exp()
        ),
    )
}

fn dual_route() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for twice in 1..=8 {
        let spin = Spin::from_twice(twice);
        let grid = Arc::new(build_quadrature_grid(2 * twice));
        for _ in 0..100 {
            let block = random_block(&mut rng, spin);
            let integral = multipoles_integral(&block, &grid).map_err(e)?;
            worst = worst.max(integral.max_difference(&multipoles_algebraic(&block)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    require(
        worst < 1e-8 && secs < 10.0,
        format!("max difference {worst:.2e}, {secs:.2} s"),
    )
}

fn husimi_normalization() -> Outcome {
    let report = default_report();
    let s_max = report.config.resolved_s_report_max();
    let mut total_dev = 0.0f64;
    let mut manifold_dev = 0.0f64;
    for a in &report.alphas {
        let q = a.q_total.as_ref().ok_or("missing Q")?;
        let captured: f64 = a
            .sector
            .blocks()
            .iter()
            .filter(|b| b.spin() <= s_max)
            .map(|b| b.weight())
            .sum();
        total_dev = total_dev.max((q.integral() - captured).abs());
        for b in a.sector.significant().filter(|b| b.spin() <= s_max) {
            let qm = husimi_manifold(b, &report.grid).map_err(e)?;
            manifold_dev = manifold_dev.max((qm.integral() - 4.0 * PI / b.spin().dim() as f64).abs());
        }
    }
    require(
        total_dev < 1e-8 && manifold_dev < 1e-8,
        format!("total {total_dev:.2e}, per manifold {manifold_dev:.2e}"),
    )
}

fn multipole_trends() -> Outcome {
    let report = default_report();
    let w1: Vec<f64> = report.alphas.iter().map(|a| a.multipoles.total(1)).collect();
    let w2: Vec<f64> = report.alphas.iter().map(|a| a.multipoles.total(2)).collect();
    let ratio = w1[0] / w2[0];
    let up = w1.windows(2).all(|w| w[1] > w[0]);
    let down = w2.windows(2).all(|w| w[1] < w[0]);
    require(
        ratio < 0.1 && up && down,
        format!("W1/W2 at 0 = {ratio:.2e}; W1 {w1:.4?}; W2 {w2:.4?}"),
    )
}

fn grid_exactness() -> Outcome {
    let grid = &default_report().grid;
    let kmax = 12u32;
    let modes: Vec<(u32, i32)> = (0..=kmax)
        .flat_map(|k| (-(k as i32)..=k as i32).map(move |q| (k, q)))
        .collect();
    let table: Vec<Vec<Complex64>> = modes
        .iter()
        .map(|&(k, q)| {
            (0..grid.len())
                .map(|i| {
                    let (t, p) = grid.node(i);
                    spherical_harmonic(k, q, t, p)
                })
                .collect()
        })
        .collect();
    let w = grid.weights();
    let mut ortho = 0.0f64;
    for (i, yi) in table.iter().enumerate() {
        for (j, yj) in table.iter().enumerate() {
            let s: Complex64 = (0..w.len()).map(|n| yi[n] * yj[n].conj() * w[n]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((s - target).norm());
        }
    }

    let report = default_report();
    let sector = &report.alpha(1.13).ok_or("alpha 1.13 missing")?.sector;
    let before = multipole_weights(sector);
    let total_before = total_stokes_summary(sector).map_err(e)?.xi2.ok_or("no xi2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rot = 0.0f64;
    for _ in 0..4 {
        let (axis, angle) = random_rotation(&mut rng);
        let mut cache = BTreeMap::new();
        let rotated = sector.map_blocks(|b| {
            let u = cache
                .entry(b.spin())
                .or_insert_with(|| rotation_matrix(b.spin(), &axis, angle));
            &*u * b.matrix() * u.adjoint()
        });
        let after = multipole_weights(&rotated);
        for (x, y) in before.totals.iter().zip(&after.totals) {
            rot = rot.max((x - y).abs());
        }
        for ((_, _, sx), (_, _, sy)) in before.manifolds.iter().zip(&after.manifolds) {
            for (x, y) in sx.weights().iter().zip(sy.weights()) {
                rot = rot.max((x - y).abs());
            }
        }
        for (b0, b1) in sector.significant().zip(rotated.significant()) {
            if let (Some(x), Some(y)) = (manifold_stokes_summary(b0).xi2, manifold_stokes_summary(b1).xi2) {
                rot = rot.max((x - y).abs());
            }
        }
        let total_after = total_stokes_summary(&rotated).map_err(e)?.xi2.ok_or("no xi2")?;
        rot = rot.max((total_after - total_before).abs());
    }
    require(
        ortho < 1e-12 && rot < 1e-8,
        format!(
            "orthonormality (K<=12, L={}) {ortho:.2e}; rotation {rot:.2e}",
            grid.degree()
        ),
    )
}

fn operator_oracles() -> Outcome {
    let cutoff = 40;
    let mut col = 0.0f64;
    for alpha in [c(1.13), Complex64::new(0.7, -1.2), c(2.31)] {
        let d = displacement_matrix(alpha, cutoff).map_err(e)?;
        for n in 0..=3 {
            for m in 0..=cutoff {
                col = col.max((d.matrix[(m, n)] - displacement_element(alpha, m, n)).norm());
            }
        }
    }
    for r in [c(0.41), c(-0.667749676968), Complex64::from_polar(0.3, 0.9)] {
        let s = squeeze_matrix(r, cutoff).map_err(e)?;
        for n in 0..=3 {
            for m in 0..=cutoff {
                col = col.max((s.matrix[(m, n)] - squeeze_element(r, m, n)).norm());
            }
        }
    }

    let model = NoiseModel::from_db(3.6, 8.0, 1.0).map_err(e)?;
    let states = [
        synthesize_mode(&model, c(1.13), cutoff).map_err(e)?,
        synthesize_mode(&model, Complex64::new(0.4, 1.9), cutoff).map_err(e)?,
        ModeState::fock(cutoff, cutoff),
    ];
    let mut trace = 0.0f64;
    let mut compose = 0.0f64;
    for s in &states {
        for eta in [0.85, 0.5, 0.1] {
            trace = trace.max((loss_channel(s, eta).map_err(e)?.trace() - s.trace()).abs());
        }
        let once = loss_channel(s, 0.9 * 0.6).map_err(e)?;
        let twice = loss_channel(&loss_channel(s, 0.9).map_err(e)?, 0.6).map_err(e)?;
        compose = compose.max((once.matrix() - twice.matrix()).camax());
    }
    require(
        col < 1e-8 && trace < 1e-12 && compose < 1e-10,
        format!("columns {col:.2e}; loss trace {trace:.2e}; composition {compose:.2e}"),
    )
}

fn read_outputs(dir: &std::path::Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(e)? {
        let path = entry.map_err(e)?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, std::fs::read(&path).map_err(e)?);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let mut times = Vec::new();
    let mut outputs = Vec::new();
    let dir = tempfile::tempdir().map_err(e)?;
    for _ in 0..2 {
        let cfg = RunConfig {
            out: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let start = Instant::now();
        run_sweep(&cfg).map_err(e)?;
        times.push(start.elapsed().as_secs_f64());
        let files = read_outputs(dir.path())?;
        for name in files.keys() {
            std::fs::remove_file(dir.path().join(name)).map_err(e)?;
        }
        outputs.push(files);
    }
    let same = outputs[0] == outputs[1];
    let slowest = times.iter().cloned().fold(0.0, f64::max);
    require(
        same && !outputs[0].is_empty() && slowest < 60.0,
        format!(
            "{} files {}, sweeps {:.2} s / {:.2} s",
            outputs[0].len(),
            if same { "identical" } else { "differ" },
            times[0],
            times[1]
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("parity law", parity_law),
        ("one-photon shot noise", one_photon_shot_noise),
        ("ideal two-photon squeezing", ideal_two_photon),
        ("experimental regime", experimental_regime),
        ("total-state trend", total_trend),
        ("dual-route multipoles", dual_route),
        ("Husimi normalization", husimi_normalization),
        ("multipole trends", multipole_trends),
        ("grid exactness and rotation invariance", grid_exactness),
        ("operator oracles", operator_oracles),
        ("determinism and budget", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {:>2} {name}: {detail} [{secs:.2} s]", i + 1);
        failures += outcome.is_err() as usize;
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
