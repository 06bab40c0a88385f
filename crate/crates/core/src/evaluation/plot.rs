//! Minimal raster plots. Text labels are left to the CSV sidecars.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::image_core::Plane;

const SIZE: u32 = 480;
const MARGIN: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LineStyle {
    Dotted,
    Dashed,
}

fn save(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Scatter of `(x, y)` points with horizontal reference lines at the given
/// ordinates; coordinates are drawn as given (already in log space).
pub(crate) fn scatter(points: &[(f64, f64)], lines: &[(f64, LineStyle)], path: &Path) -> Result<()> {
    let mut img = RgbImage::from_pixel(SIZE, SIZE, Rgb([255, 255, 255]));
    let (x0, x1) = span(points.iter().map(|p| p.0));
    let (y0, y1) = span(points.iter().map(|p| p.1).chain(lines.iter().map(|l| l.0)));
    let inner = (SIZE - 2 * MARGIN) as f64;
    let to_px = |x: f64, y: f64| {
        let px = MARGIN as f64 + (x - x0) / (x1 - x0) * inner;
        let py = (SIZE - MARGIN) as f64 - (y - y0) / (y1 - y0) * inner;
        (px.round() as i64, py.round() as i64)
    };
    let axis = Rgb([0, 0, 0]);
    for t in MARGIN..=SIZE - MARGIN {
        img.put_pixel(t, SIZE - MARGIN, axis);
        img.put_pixel(MARGIN, t, axis);
    }
    for &(y, style) in lines {
        let (_, py) = to_px(x0, y);
        if !(0..SIZE as i64).contains(&py) {
            continue;
        }
        for t in MARGIN..=SIZE - MARGIN {
            let on = match style {
                LineStyle::Dotted => t % 6 < 2,
                LineStyle::Dashed => t % 16 < 10,
            };
            if on {
                img.put_pixel(t, py as u32, axis);
            }
        }
    }
    let dot = Rgb([200, 40, 40]);
    for &(x, y) in points {
        let (px, py) = to_px(x, y);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (u, v) = (px + dx, py + dy);
                if (0..SIZE as i64).contains(&u) && (0..SIZE as i64).contains(&v) {
                    img.put_pixel(u as u32, v as u32, dot);
                }
            }
        }
    }
    save(&img, path)
}

/// Grey-scale heat map, linearly scaled between the plane's extremes and
/// magnified by an integer factor.
pub(crate) fn heatmap(plane: &Plane, path: &Path) -> Result<()> {
    let scale = (256 / plane.height().max(plane.width()).max(1)).max(1) as u32;
    let (lo, hi) = (plane.min(), plane.max());
    let range = if hi > lo { hi - lo } else { 1.0 };
    let img = RgbImage::from_fn(plane.width() as u32 * scale, plane.height() as u32 * scale, |x, y| {
        let v = plane.get((y / scale) as usize, (x / scale) as usize);
        let g = (((v - lo) / range) * 255.0).round().clamp(0.0, 255.0) as u8;
        Rgb([g, g, g])
    });
    save(&img, path)
}
