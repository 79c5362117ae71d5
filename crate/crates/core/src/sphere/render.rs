//! Raster renderings of Q functions: equirectangular maps, orthographic views
//! along a coordinate axis, and ring composites of several manifolds.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::colormap::viridis;
use super::{angles_of, QFunction};
use crate::linalg::Vec3;
use crate::multipole::{multipoles_algebraic, HarmonicSeries};
use crate::polar::{PolarizationSector, Spin};

const BACKGROUND: [u8; 3] = [255, 255, 255];

/// 8-bit RGB image, row-major, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, colour: [u8; 3]) -> Self {
        Raster {
            width,
            height,
            pixels: vec![colour; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, colour: [u8; 3]) {
        self.pixels[y * self.width + x] = colour;
    }

    /// Binary portable pixmap (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn write_ppm(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_ppm())?;
        f.flush()
    }

    /// Side-by-side composite separated by `gap` background columns.
    pub fn hconcat(panels: &[Raster], gap: usize) -> Raster {
        let height = panels.iter().map(|p| p.height).max().unwrap_or(0);
        let width = panels.iter().map(|p| p.width).sum::<usize>() + gap * panels.len().saturating_sub(1);
        let mut out = Raster::filled(width, height, BACKGROUND);
        let mut x0 = 0;
        for p in panels {
            for y in 0..p.height {
                for x in 0..p.width {
                    out.set(x0 + x, y, p.pixel(x, y));
                }
            }
            x0 += p.width + gap;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// Screen right, screen up and the direction towards the viewer.
    fn frame(self) -> (Vec3, Vec3, Vec3) {
        match self {
            Axis::Z => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
            Axis::X => ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
            Axis::Y => ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Rows sweep theta from 0 (top) to pi, columns sweep phi from 0 to 2pi.
    Equirectangular,
    /// Orthographic view of the hemisphere facing the given axis.
    AxisView(Axis),
}

/// Colours a field of optional samples; `None` is background. Samples are
/// normalized to the image's own range.
fn colourize(width: usize, height: usize, samples: &[Option<f64>]) -> Raster {
    let (lo, hi) = samples
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let flat = !(span > 1e-14 * hi.abs().max(1e-300));
    let pixels = samples
        .iter()
        .map(|s| match s {
            None => BACKGROUND,
            Some(_) if flat => viridis(0.5),
            Some(v) => viridis((v - lo) / span),
        })
        .collect();
    Raster { width, height, pixels }
}

/// Point on the unit sphere under screen coordinates `(u, v)` in `[-1, 1]^2`.
fn visible_point(axis: Axis, u: f64, v: f64) -> Option<Vec3> {
    let rr = u * u + v * v;
    if rr > 1.0 {
        return None;
    }
    let (e1, e2, e3) = axis.frame();
    let w = (1.0 - rr).sqrt();
    Some([0, 1, 2].map(|k| u * e1[k] + v * e2[k] + w * e3[k]))
}

fn screen_coords(x: usize, y: usize, width: usize, height: usize) -> (f64, f64) {
    let scale = 0.5 * width.min(height) as f64;
    let u = (x as f64 + 0.5 - 0.5 * width as f64) / scale;
    let v = (0.5 * height as f64 - (y as f64 + 0.5)) / scale;
    (u, v)
}

pub fn render_heatmap(q: &QFunction, projection: Projection, width: usize, height: usize) -> Raster {
    let samples: Vec<Option<f64>> = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % width, i / width);
            match projection {
                Projection::Equirectangular => {
                    let theta = PI * (y as f64 + 0.5) / height as f64;
                    let phi = 2.0 * PI * (x as f64 + 0.5) / width as f64;
                    Some(q.evaluate(theta, phi))
                }
                Projection::AxisView(axis) => {
                    let (u, v) = screen_coords(x, y, width, height);
                    visible_point(axis, u, v).map(|p| q.evaluate_at(&p))
                }
            }
        })
        .collect();
    colourize(width, height, &samples)
}

/// Nested manifold spheres of radius `sqrt(S(S+1))`, one Husimi function each.
#[derive(Clone, Debug)]
pub struct Foliation {
    rings: Vec<(f64, HarmonicSeries)>,
}

impl Foliation {
    /// Every non-negligible manifold with `0 < S <= s_max`.
    pub fn new(sector: &PolarizationSector, s_max: Spin) -> Self {
        let rings = sector
            .significant()
            .filter(|b| b.spin() != Spin::ZERO && b.spin() <= s_max)
            .map(|b| {
                let mut series = HarmonicSeries::zero(2 * b.spin().twice());
                series.add_husimi(1.0, &multipoles_algebraic(b));
                (b.spin().radius(), series)
            })
            .collect();
        Foliation { rings }
    }

    pub fn len(&self) -> usize {
        self.rings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    /// Manifold `S` fills the ring between the previous radius and its own,
    /// showing its sphere orthographically along `axis`. Each ring is
    /// normalized on its own.
    pub fn render(&self, axis: Axis, size: usize) -> Raster {
        let rings = &self.rings;
        let outer = rings.last().map(|r| r.0).unwrap_or(1.0);
        let samples: Vec<Option<(usize, f64)>> = (0..size * size)
            .into_par_iter()
            .map(|i| {
                let (u, v) = screen_coords(i % size, i / size, size, size);
                let d = (u * u + v * v).sqrt() * outer;
                let k = rings.iter().position(|(r, _)| d <= *r)?;
                let r = rings[k].0;
                let p = visible_point(axis, u * outer / r, v * outer / r)?;
                let (t, ph) = angles_of(&p);
                Some((k, rings[k].1.evaluate(t, ph)))
            })
            .collect();
        let mut image = Raster::filled(size, size, BACKGROUND);
        for k in 0..rings.len() {
            let ring: Vec<Option<f64>> = samples
                .iter()
                .map(|s| s.and_then(|(j, v)| (j == k).then_some(v)))
                .collect();
            let coloured = colourize(size, size, &ring);
            for (i, s) in ring.iter().enumerate() {
                if s.is_some() {
                    image.pixels[i] = coloured.pixels[i];
                }
            }
        }
        image
    }
}

pub fn render_foliation(sector: &PolarizationSector, axis: Axis, s_max: Spin, size: usize) -> Raster {
    Foliation::new(sector, s_max).render(axis, size)
}
