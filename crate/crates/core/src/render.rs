//! Raster views of the potential and of the extremal dilatation field.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::conjugacy::{beltrami_at, ExtremalModel};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::green_value;

pub const MAX_PIXELS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let finite = [x0, x1, y0, y1].iter().all(|v| v.is_finite());
        if !finite || x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidArgument(format!(
                "window must satisfy x0 < x1 and y0 < y1, got {x0},{x1},{y0},{y1}"
            )));
        }
        Ok(Window { x0, x1, y0, y1 })
    }

    /// Pixel height for a given pixel width, preserving the aspect ratio.
    pub fn rows_for(&self, px: usize) -> usize {
        let rows = (px as f64 * (self.y1 - self.y0) / (self.x1 - self.x0)).round() as usize;
        rows.clamp(1, MAX_PIXELS)
    }

    /// Centre of pixel `(col, row)`; row 0 is the top edge.
    pub fn point(&self, col: usize, row: usize, cols: usize, rows: usize) -> Complex64 {
        let x = self.x0 + (col as f64 + 0.5) * (self.x1 - self.x0) / cols as f64;
        let y = self.y1 - (row as f64 + 0.5) * (self.y1 - self.y0) / rows as f64;
        Complex64::new(x, y)
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("window: {e}")))?;
        match parts[..] {
            [x0, x1, y0, y1] => Window::new(x0, x1, y0, y1),
            _ => Err(Error::InvalidArgument(format!(
                "window needs four numbers x0,x1,y0,y1, got {}",
                parts.len()
            ))),
        }
    }
}

/// Grayscale raster, one byte per pixel, rows from top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.pixels.len());
        for &v in &self.pixels {
            out.extend_from_slice(&[v, v, v]);
        }
        out
    }
}

fn raster(window: &Window, px: usize, shade: impl Fn(Complex64) -> u8 + Sync) -> Result<Image> {
    if px == 0 || px > MAX_PIXELS {
        return Err(Error::InvalidArgument(format!(
            "px must lie in 1..={MAX_PIXELS}"
        )));
    }
    let rows = window.rows_for(px);
    let pixels = (0..rows)
        .into_par_iter()
        .flat_map_iter(|row| {
            let shade = &shade;
            (0..px).map(move |col| shade(window.point(col, row, px, rows)))
        })
        .collect();
    Ok(Image {
        width: px,
        height: rows,
        pixels,
    })
}

/// Filled Julia set in black; the basin brightens with `G`, with a fine
/// banding at each doubling of the potential.
pub fn render_green(p: &Polynomial, window: &Window, px: usize) -> Result<Image> {
    raster(window, px, |z| {
        let g = green_value(p, z);
        if !g.escaped || g.value <= 0.0 {
            return 0;
        }
        let base = g.value / (1.0 + g.value);
        let band = g.value.log2().rem_euclid(1.0);
        (40.0 + 180.0 * base + 35.0 * band)
            .round()
            .clamp(0.0, 255.0) as u8
    })
}

/// `|μ_ψ|` scaled to 0..=255; the filled Julia set and the critical
/// level curves are left black.
pub fn render_dilatation(
    p: &Polynomial,
    model: &ExtremalModel,
    window: &Window,
    px: usize,
) -> Result<Image> {
    raster(window, px, |z| match beltrami_at(p, model, z) {
        Ok(mu) => (255.0 * mu.norm()).round().clamp(0.0, 255.0) as u8,
        Err(_) => 0,
    })
}
