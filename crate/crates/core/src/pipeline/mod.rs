//! Configuration, sweep orchestration and file emission.

mod check;
mod emit;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{synthesize_mode, ExcessReading, NoiseModel, SqueezeAxis};
use crate::multipole::{multipole_weights_up_to, SectorMultipoles};
use crate::polar::{parse_product, photon_number_distribution, PolarizationSector, SectorOptions, Spin};
use crate::sphere::{
    build_quadrature_grid, husimi_total_up_to, render_heatmap, Axis, Foliation, Projection, QFunction, Raster,
    SphereGrid,
};
use crate::stokes::{
    manifold_stokes_summary, total_stokes_summary, xi2_gaussian_closed_form, xi2_two_mode_approximation, StokesSummary,
};

pub use check::{run_checks, CheckOutcome};
pub use emit::{emit_figure_tables, format_float, FileEntry, FileManifest};

/// The default amplitude ladder. Only 0, 1.13 and 2.31 correspond to
/// documented measurement points; 0.57 is interpolated.
pub const DEFAULT_ALPHAS: [f64; 4] = [0.0, 0.57, 1.13, 2.31];

/// Which outputs a run writes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub squeezing_csv: bool,
    pub photon_csv: bool,
    pub multipole_csv: bool,
    pub sector_json: bool,
    pub q_csv: bool,
    pub heatmaps: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags {
            squeezing_csv: true,
            photon_csv: true,
            multipole_csv: true,
            sector_json: false,
            q_csv: true,
            heatmaps: true,
        }
    }
}

impl EmitFlags {
    pub const NAMES: [&'static str; 6] = [
        "squeezing_csv",
        "photon_csv",
        "multipole_csv",
        "sector_json",
        "q_csv",
        "heatmaps",
    ];

    pub fn none() -> Self {
        EmitFlags {
            squeezing_csv: false,
            photon_csv: false,
            multipole_csv: false,
            sector_json: false,
            q_csv: false,
            heatmaps: false,
        }
    }

    /// Parses a comma-separated list of flag names; `none` and `all` are
    /// accepted as shorthands.
    pub fn parse_list(list: &str) -> Result<Self> {
        let mut flags = EmitFlags::none();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "none" => {}
                "all" => {
                    flags = EmitFlags {
                        sector_json: true,
                        ..EmitFlags::default()
                    }
                }
                "squeezing_csv" => flags.squeezing_csv = true,
                "photon_csv" => flags.photon_csv = true,
                "multipole_csv" => flags.multipole_csv = true,
                "sector_json" => flags.sector_json = true,
                "q_csv" => flags.q_csv = true,
                "heatmaps" => flags.heatmaps = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown emit flag `{other}` (expected one of {}, none, all)",
                        Self::NAMES.join(", ")
                    )))
                }
            }
        }
        Ok(flags)
    }

    pub fn any(&self) -> bool {
        self.squeezing_csv || self.photon_csv || self.multipole_csv || self.sector_json || self.q_csv || self.heatmaps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alphas: Vec<f64>,
    /// Phase of the displacement in radians; zero keeps it real.
    pub alpha_phase: f64,
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub excess_reference: ExcessReading,
    pub efficiency: f64,
    pub apply_loss: bool,
    pub squeeze_axis: SqueezeAxis,
    pub cutoff: usize,
    /// Separate cutoff for the undisplaced mode; defaults to `cutoff`.
    pub cutoff_v: Option<usize>,
    pub grid_l: Option<u32>,
    pub s_report_max: Option<Spin>,
    pub out: PathBuf,
    pub emit: EmitFlags,
    pub negligible_below: f64,
    pub raster_width: usize,
    pub raster_height: usize,
    pub view_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alphas: DEFAULT_ALPHAS.to_vec(),
            alpha_phase: 0.0,
            squeezing_db: 3.6,
            antisqueezing_db: 4.4,
            excess_reference: ExcessReading::AbovePure,
            efficiency: 0.85,
            apply_loss: false,
            squeeze_axis: SqueezeAxis::Phase,
            cutoff: 48,
            cutoff_v: None,
            grid_l: None,
            s_report_max: None,
            out: PathBuf::from("out"),
            emit: EmitFlags::default(),
            negligible_below: SectorOptions::default().negligible_below,
            raster_width: 128,
            raster_height: 64,
            view_size: 128,
        }
    }
}

/// Command-line overrides; `Some` wins over the file.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub alphas: Option<Vec<f64>>,
    pub squeezing_db: Option<f64>,
    pub antisqueezing_db: Option<f64>,
    pub excess_reference: Option<ExcessReading>,
    pub efficiency: Option<f64>,
    pub apply_loss: Option<bool>,
    pub squeeze_axis: Option<SqueezeAxis>,
    pub cutoff: Option<usize>,
    pub grid_l: Option<u32>,
    pub out: Option<PathBuf>,
    pub emit: Option<EmitFlags>,
    pub dump_sector: bool,
}

impl RunConfig {
    pub fn cutoffs(&self) -> (usize, usize) {
        (self.cutoff, self.cutoff_v.unwrap_or(self.cutoff))
    }

    /// Largest manifold reported; defaults to the largest complete one.
    pub fn resolved_s_report_max(&self) -> Spin {
        let (h, v) = self.cutoffs();
        self.s_report_max.unwrap_or(Spin::from_twice(h.min(v) as u32))
    }

    pub fn resolved_grid_l(&self) -> u32 {
        self.grid_l.unwrap_or(2 * self.resolved_s_report_max().twice())
    }

    /// The noise model handed to state synthesis; efficiency is 1 unless
    /// `apply_loss` is set.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        let model = NoiseModel::from_reported(
            self.squeezing_db,
            self.antisqueezing_db,
            self.efficiency,
            self.excess_reference,
        )?
        .with_axis(self.squeeze_axis);
        if self.apply_loss {
            Ok(model)
        } else {
            model.with_efficiency(1.0)
        }
    }

    /// Checks the configuration and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for (name, v) in [
            ("squeezing_db", self.squeezing_db),
            ("antisqueezing_db", self.antisqueezing_db),
            ("alpha_phase", self.alpha_phase),
            ("negligible_below", self.negligible_below),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("`{name}` must be finite, got {v}")));
            }
        }
        if self.alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Config(format!(
                "`alphas` must be finite and non-negative, got {:?}",
                self.alphas
            )));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!(
                "`efficiency` must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if self.negligible_below < 0.0 {
            return Err(Error::Config("`negligible_below` must be non-negative".into()));
        }
        let (ch, cv) = self.cutoffs();
        if ch == 0 || cv == 0 {
            return Err(Error::Config("cutoffs must be positive".into()));
        }
        let s_max = self.resolved_s_report_max();
        if s_max.photons() as usize > ch.min(cv) {
            return Err(Error::Config(format!(
                "cutoff {} is insufficient for S_report_max = {s_max}: manifold N = {} would be truncated",
                ch.min(cv),
                s_max.photons()
            )));
        }
        let l = self.resolved_grid_l();
        if l < 2 * s_max.twice() {
            return Err(Error::Config(format!(
                "grid_l = {l} cannot resolve S_report_max = {s_max} (need >= {})",
                2 * s_max.twice()
            )));
        }
        if self.raster_width == 0 || self.raster_height == 0 || self.view_size == 0 {
            return Err(Error::Config("raster sizes must be positive".into()));
        }
        self.noise_model()?;
        let top = self.alphas.iter().copied().fold(0.0, f64::max);
        let recommended = 4.0 * top * top + 10.0;
        if (ch as f64) < recommended {
            warnings.push(format!(
                "cutoff {ch} is below the recommended 4*alpha^2 + 10 = {recommended:.1} for alpha = {top}"
            ));
        }
        Ok(warnings)
    }

    pub fn uses_default_alphas(&self) -> bool {
        self.alphas == DEFAULT_ALPHAS
    }
}

fn read_config_file(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Loads an optional JSON config, applies overrides and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => read_config_file(p)?,
        None => RunConfig::default(),
    };
    let o = overrides.clone();
    if let Some(v) = o.alphas {
        cfg.alphas = v;
    }
    if let Some(v) = o.squeezing_db {
        cfg.squeezing_db = v;
    }
    if let Some(v) = o.antisqueezing_db {
        cfg.antisqueezing_db = v;
    }
    if let Some(v) = o.excess_reference {
        cfg.excess_reference = v;
    }
    if let Some(v) = o.efficiency {
        cfg.efficiency = v;
    }
    if let Some(v) = o.apply_loss {
        cfg.apply_loss = v;
    }
    if let Some(v) = o.squeeze_axis {
        cfg.squeeze_axis = v;
    }
    if let Some(v) = o.cutoff {
        cfg.cutoff = v;
    }
    if let Some(v) = o.grid_l {
        cfg.grid_l = Some(v);
    }
    if let Some(v) = o.out {
        cfg.out = v;
    }
    if let Some(v) = o.emit {
        cfg.emit = v;
    }
    if o.dump_sector {
        cfg.emit.sector_json = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One row of the per-manifold report.
#[derive(Clone, Debug)]
pub struct ManifoldReport {
    pub spin: Spin,
    pub weight: f64,
    pub complete: bool,
    pub negligible: bool,
    pub summary: StokesSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct Truncation {
    pub trace_deficit_h: f64,
    pub trace_deficit_v: f64,
    pub captured_weight: f64,
    pub max_complete_spin: Spin,
}

/// Rendered images for one amplitude.
#[derive(Clone, Debug)]
pub struct Renderings {
    pub equirectangular: Raster,
    pub views: Vec<(Axis, Raster)>,
    pub foliations: Vec<(Axis, Raster)>,
}

#[derive(Clone, Debug)]
pub struct AlphaReport {
    pub alpha: f64,
    pub sector: PolarizationSector,
    pub manifolds: Vec<ManifoldReport>,
    pub total: StokesSummary,
    pub mean_photons: f64,
    pub photon_distribution: Vec<(u32, f64)>,
    pub multipoles: SectorMultipoles,
    /// `|a|^2 e^{-r} / (|a|^2 + sinh^2(r)/2)`.
    pub xi2_approximation: f64,
    /// Exact value for pure squeezed inputs.
    pub xi2_gaussian: f64,
    pub truncation: Truncation,
    pub q_total: Option<QFunction>,
    pub renderings: Option<Renderings>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: RunConfig,
    pub model: NoiseModel,
    pub grid: Arc<SphereGrid>,
    pub alphas: Vec<AlphaReport>,
    pub warnings: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn alpha(&self, alpha: f64) -> Option<&AlphaReport> {
        self.alphas.iter().find(|a| a.alpha == alpha)
    }
}

fn dedup_alphas(alphas: &[f64], warnings: &mut Vec<String>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(alphas.len());
    for &a in alphas {
        if out.contains(&a) {
            let w = format!("duplicate alpha {a} dropped");
            warn!("{w}");
            warnings.push(w);
        } else {
            out.push(a);
        }
    }
    out
}

fn analyze_alpha(cfg: &RunConfig, model: &NoiseModel, grid: &Arc<SphereGrid>, alpha: f64) -> Result<AlphaReport> {
    let (ch, cv) = cfg.cutoffs();
    let h = synthesize_mode(model, Complex64::from_polar(alpha, cfg.alpha_phase), ch)?;
    let v = synthesize_mode(model, Complex64::new(0.0, 0.0), cv)?;
    let options = SectorOptions {
        negligible_below: cfg.negligible_below,
    };
    let sector = parse_product(&h, &v, &options);
    let manifolds = sector
        .blocks()
        .par_iter()
        .map(|b| ManifoldReport {
            spin: b.spin(),
            weight: b.weight(),
            complete: b.is_complete(),
            negligible: b.is_negligible(),
            summary: manifold_stokes_summary(b),
        })
        .collect();
    let total = total_stokes_summary(&sector)?;
    let s_max = cfg.resolved_s_report_max();
    let needs_q = cfg.emit.q_csv || cfg.emit.heatmaps;
    let q_total = if needs_q {
        Some(husimi_total_up_to(&sector, grid, s_max)?)
    } else {
        None
    };
    let renderings = match (&q_total, cfg.emit.heatmaps) {
        (Some(q), true) => {
            let axes = [Axis::X, Axis::Y, Axis::Z];
            Some(Renderings {
                equirectangular: render_heatmap(q, Projection::Equirectangular, cfg.raster_width, cfg.raster_height),
                views: axes
                    .iter()
                    .map(|&a| {
                        (
                            a,
                            render_heatmap(q, Projection::AxisView(a), cfg.view_size, cfg.view_size),
                        )
                    })
                    .collect(),
                foliations: {
                    let foliation = Foliation::new(&sector, s_max);
                    axes.iter().map(|&a| (a, foliation.render(a, cfg.view_size))).collect()
                },
            })
        }
        _ => None,
    };
    Ok(AlphaReport {
        alpha,
        manifolds,
        total,
        mean_photons: sector.mean_photon_number(),
        photon_distribution: photon_number_distribution(&sector),
        multipoles: multipole_weights_up_to(&sector, s_max),
        xi2_approximation: xi2_two_mode_approximation(alpha, model.squeeze),
        xi2_gaussian: xi2_gaussian_closed_form(alpha, model.squeeze),
        truncation: Truncation {
            trace_deficit_h: h.trace_deficit(),
            trace_deficit_v: v.trace_deficit(),
            captured_weight: sector.total_weight(),
            max_complete_spin: sector.max_complete_spin(),
        },
        q_total,
        renderings,
        sector,
    })
}

/// Computes every amplitude of the sweep; amplitudes run in parallel.
pub fn compute_sweep(config: &RunConfig) -> Result<RunReport> {
    let mut warnings = config.validate()?;
    for w in &warnings {
        warn!("{w}");
    }
    let start = Instant::now();
    let model = config.noise_model()?;
    let alphas = dedup_alphas(&config.alphas, &mut warnings);
    let grid = Arc::new(build_quadrature_grid(config.resolved_grid_l()));
    let reports = alphas
        .par_iter()
        .map(|&a| analyze_alpha(config, &model, &grid, a))
        .collect::<Result<Vec<_>>>()?;
    let mut timings = BTreeMap::new();
    timings.insert("compute_s".to_string(), start.elapsed().as_secs_f64());
    Ok(RunReport {
        config: config.clone(),
        model,
        grid,
        alphas: reports,
        warnings,
        timings,
    })
}

/// Computes the sweep and writes every requested output.
pub fn run_sweep(config: &RunConfig) -> Result<(RunReport, FileManifest)> {
    let mut report = compute_sweep(config)?;
    let start = Instant::now();
    let manifest = emit_figure_tables(&report, &config.out)?;
    report
        .timings
        .insert("emit_s".to_string(), start.elapsed().as_secs_f64());
    Ok((report, manifest))
}
