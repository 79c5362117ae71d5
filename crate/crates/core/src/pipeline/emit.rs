//! Output files: figure tables (CSV), sector and multipole dumps (JSON), Q
//! samples (CSV), rasters (PPM) and a hashed manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{AlphaReport, RunReport};
use crate::error::{Error, Result};
use crate::polar::sector_to_json;
use crate::sphere::Raster;
use crate::stokes::StokesSummary;

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_fraction(&format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{}", trim_fraction(mantissa), exp)
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FileManifest {
    pub files: Vec<FileEntry>,
    /// `None` when nothing was emitted.
    pub manifest_path: Option<PathBuf>,
}

struct Emitter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Emitter {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        let to_err = |e: csv::Error| Error::io(self.dir.join(name), std::io::Error::other(e));
        w.write_record(header).map_err(to_err)?;
        for r in rows {
            w.write_record(r).map_err(to_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io(self.dir.join(name), std::io::Error::other(e.to_string())))?;
        self.write(name, &bytes)
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values serialize");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn write_ppm(&mut self, name: &str, raster: &Raster) -> Result<()> {
        self.write(name, &raster.to_ppm())
    }
}

fn f(x: f64) -> String {
    format_float(x)
}

fn summary_fields(s: &StokesSummary) -> Vec<String> {
    let (xi2, db) = match (s.xi2, s.xi2_db()) {
        (Some(x), Some(d)) => (f(x), f(d)),
        _ => (String::new(), String::new()),
    };
    vec![
        f(s.mean[0]),
        f(s.mean[1]),
        f(s.mean[2]),
        f(s.gamma_min),
        xi2,
        db,
        if s.xi2.is_some() { s.mode.as_str() } else { "undefined" }.to_string(),
    ]
}

fn alpha_label(a: &AlphaReport) -> String {
    f(a.alpha)
}

fn squeezing_rows(report: &RunReport) -> Vec<Vec<String>> {
    let s_max = report.config.resolved_s_report_max();
    let mut rows = Vec::new();
    for a in &report.alphas {
        for m in a.manifolds.iter().filter(|m| m.spin <= s_max) {
            let mut row = vec![
                alpha_label(a),
                f(m.spin.value()),
                m.spin.photons().to_string(),
                f(m.weight),
            ];
            if m.negligible {
                row.extend(std::iter::repeat_n(String::new(), 7));
            } else {
                row.extend(summary_fields(&m.summary));
            }
            row.push(m.complete.to_string());
            row.push(m.negligible.to_string());
            rows.push(row);
        }
    }
    rows
}

fn total_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .alphas
        .iter()
        .map(|a| {
            let mut row = vec![alpha_label(a), f(a.mean_photons)];
            row.extend(summary_fields(&a.total));
            row.push(f(a.xi2_approximation));
            row.push(f(a.xi2_gaussian));
            row.push(f(a.truncation.captured_weight));
            row
        })
        .collect()
}

fn photon_rows(report: &RunReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for a in &report.alphas {
        for &(n, p) in &a.photon_distribution {
            rows.push(vec![alpha_label(a), n.to_string(), f(n as f64 / 2.0), f(p)]);
        }
    }
    rows
}

fn multipole_rows(report: &RunReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for a in &report.alphas {
        for (k, w) in a.multipoles.totals.iter().enumerate() {
            rows.push(vec![alpha_label(a), "total".into(), k.to_string(), f(*w)]);
        }
        for (spin, _, spec) in &a.multipoles.manifolds {
            for (k, w) in spec.weights().iter().enumerate() {
                rows.push(vec![alpha_label(a), f(spin.value()), k.to_string(), f(*w)]);
            }
        }
    }
    rows
}

fn manifest_json(report: &RunReport, files: &[FileEntry]) -> serde_json::Value {
    let cfg = &report.config;
    let (ch, cv) = cfg.cutoffs();
    let truncation: Vec<_> = report
        .alphas
        .iter()
        .map(|a| {
            json!({
                "alpha": a.alpha,
                "trace_deficit_h": a.truncation.trace_deficit_h,
                "trace_deficit_v": a.truncation.trace_deficit_v,
                "captured_weight": a.truncation.captured_weight,
                "max_complete_spin": a.truncation.max_complete_spin,
                "husimi_excluded_weight": a.q_total.as_ref().map(|q| match q.kind() {
                    crate::sphere::QKind::Total { excluded, .. } => *excluded,
                    _ => 0.0,
                }),
            })
        })
        .collect();
    json!({
        "generator": format!("stokes-manifolds {}", env!("CARGO_PKG_VERSION")),
        "config": cfg,
        "resolved": {
            "cutoff_h": ch,
            "cutoff_v": cv,
            "grid_l": cfg.resolved_grid_l(),
            "s_report_max": cfg.resolved_s_report_max(),
        },
        "noise_model": report.model,
        "loss_applied": cfg.apply_loss,
        "alpha_ladder": {
            "values": report.alphas.iter().map(|a| a.alpha).collect::<Vec<_>>(),
            "default_ladder": cfg.uses_default_alphas(),
            "note": if cfg.uses_default_alphas() {
                "0.57 is an interpolated amplitude, not a documented measurement point"
            } else {
                "user-supplied amplitudes"
            },
        },
        "conventions": {
            "xi2": "4 gamma_min / N; total state normalized by <N> = sum 2S P_S",
            "minimization": "perpendicular to the mean Stokes vector when |<S>|/S > 1e-6, otherwise all directions",
            "multipole_weighting": "W_K = sum_S P_S W_K^(S) over unit-trace manifold blocks",
            "husimi_total": "sum_S P_S (2S+1)/(4 pi) Q_S over manifolds with S <= s_report_max",
            "coherent_states": "exp(-i phi Sz) exp(-i theta Sy) |S,S>",
        },
        "truncation": truncation,
        "warnings": report.warnings,
        "files": files,
    })
}

/// Writes every output enabled in the report's config into `outdir`; the
/// manifest is written last and lists the SHA-256 of every other file.
pub fn emit_figure_tables(report: &RunReport, outdir: &Path) -> Result<FileManifest> {
    let flags = &report.config.emit;
    if !flags.any() {
        return Ok(FileManifest::default());
    }
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut em = Emitter {
        dir: outdir.to_path_buf(),
        files: Vec::new(),
    };
    if flags.squeezing_csv {
        em.write_csv(
            "fig3a.csv",
            &[
                "alpha",
                "S",
                "N",
                "P_S",
                "mean_x",
                "mean_y",
                "mean_z",
                "gamma_min",
                "xi2",
                "xi2_dB",
                "mode",
                "complete",
                "negligible",
            ],
            &squeezing_rows(report),
        )?;
        em.write_csv(
            "fig3c.csv",
            &[
                "alpha",
                "mean_N",
                "mean_x",
                "mean_y",
                "mean_z",
                "gamma_min",
                "xi2",
                "xi2_dB",
                "mode",
                "xi2_two_mode_approximation",
                "xi2_gaussian_pure",
                "captured_weight",
            ],
            &total_rows(report),
        )?;
    }
    if flags.photon_csv {
        em.write_csv("fig3b.csv", &["alpha", "N", "S", "P_N"], &photon_rows(report))?;
    }
    if flags.multipole_csv {
        em.write_csv("fig3d.csv", &["alpha", "S", "K", "W_K"], &multipole_rows(report))?;
        for a in &report.alphas {
            em.write_json(
                &format!("multipoles_alpha_{}.json", alpha_label(a)),
                &a.multipoles.to_json(),
            )?;
        }
    }
    if flags.sector_json {
        for a in &report.alphas {
            em.write_json(
                &format!("sector_alpha_{}.json", alpha_label(a)),
                &sector_to_json(&a.sector),
            )?;
        }
    }
    if flags.q_csv {
        for a in &report.alphas {
            let Some(q) = &a.q_total else { continue };
            let grid = q.grid();
            let rows: Vec<Vec<String>> = (0..grid.len())
                .map(|i| {
                    let (t, p) = grid.node(i);
                    vec![f(t), f(p), f(grid.weight(i)), f(q.values()[i])]
                })
                .collect();
            em.write_csv(
                &format!("q_total_alpha_{}.csv", alpha_label(a)),
                &["theta", "phi", "weight", "value"],
                &rows,
            )?;
        }
    }
    if flags.heatmaps {
        for a in &report.alphas {
            let Some(r) = &a.renderings else { continue };
            let label = alpha_label(a);
            em.write_ppm(&format!("q_total_alpha_{label}_equirect.ppm"), &r.equirectangular)?;
            for (axis, img) in &r.views {
                em.write_ppm(&format!("q_total_alpha_{label}_view_{}.ppm", axis.name()), img)?;
            }
            for (axis, img) in &r.foliations {
                em.write_ppm(&format!("foliation_alpha_{label}_{}.ppm", axis.name()), img)?;
            }
        }
        let with_views: Vec<_> = report.alphas.iter().filter_map(|a| a.renderings.as_ref()).collect();
        if let Some(first) = with_views.first() {
            for k in 0..first.views.len() {
                let panels: Vec<Raster> = with_views.iter().map(|r| r.views[k].1.clone()).collect();
                let name = format!("triptych_view_{}.ppm", first.views[k].0.name());
                em.write_ppm(&name, &Raster::hconcat(&panels, 4))?;
            }
        }
    }
    let manifest = manifest_json(report, &em.files);
    let path = outdir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(FileManifest {
        files: em.files,
        manifest_path: Some(path),
    })
}
