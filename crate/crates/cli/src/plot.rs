//! SVG scatter of samples over log-density contours.

use std::fmt::Write as _;

use riemlap_core::{Error, Matrix, Result, Target, Vector};

/// Grid resolution per axis for contour extraction.
pub const GRID: usize = 200;
/// Number of contour levels.
pub const LEVELS: usize = 8;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Bounds {
    /// Sample range padded by 10% on each side.
    pub fn around(samples: &Matrix) -> Self {
        let axis = |j: usize| {
            let col = samples.column(j);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (-3.0, 3.0) };
            let pad = ((hi - lo) * 0.1).max(1e-3);
            (lo - pad, hi + pad)
        };
        Bounds { x: axis(0), y: axis(1) }
    }

    fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = SIZE - 2.0 * MARGIN;
        let px = MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * w;
        let py = SIZE - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * w;
        (px, py)
    }
}

/// Log-density values on a `GRID × GRID` lattice, row-major in y.
pub fn density_grid(target: &dyn Target, bounds: &Bounds) -> Vec<f64> {
    let mut out = Vec::with_capacity(GRID * GRID);
    for iy in 0..GRID {
        let y = lerp(bounds.y, iy);
        for ix in 0..GRID {
            let x = lerp(bounds.x, ix);
            out.push(target.log_density(&Vector::from_vec(vec![x, y])));
        }
    }
    out
}

fn lerp(r: (f64, f64), i: usize) -> f64 {
    r.0 + (r.1 - r.0) * i as f64 / (GRID - 1) as f64
}

/// Contour levels at evenly spaced quantiles of the finite grid values, increasing.
pub fn contour_levels(grid: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = grid.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = (1..=LEVELS)
        .map(|k| {
            // upper quantiles carry the visible structure of a peaked density
            let q = 1.0 - 0.5f64.powi(k as i32);
            v[((v.len() - 1) as f64 * q).round() as usize]
        })
        .collect();
    levels.dedup();
    levels
}

/// Marching-squares segments of one level set, in data coordinates.
pub fn contour_segments(grid: &[f64], bounds: &Bounds, level: f64) -> Vec<[(f64, f64); 2]> {
    let at = |ix: usize, iy: usize| grid[iy * GRID + ix];
    let mut segs = Vec::new();
    for iy in 0..GRID - 1 {
        for ix in 0..GRID - 1 {
            let corners = [(ix, iy), (ix + 1, iy), (ix + 1, iy + 1), (ix, iy + 1)];
            let vals = corners.map(|(i, j)| at(i, j));
            if vals.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                let (va, vb) = (vals[a], vals[b]);
                if (va >= level) != (vb >= level) {
                    let t = (level - va) / (vb - va);
                    let (xa, ya) = (lerp(bounds.x, corners[a].0), lerp(bounds.y, corners[a].1));
                    let (xb, yb) = (lerp(bounds.x, corners[b].0), lerp(bounds.y, corners[b].1));
                    pts.push((xa + t * (xb - xa), ya + t * (yb - ya)));
                }
            }
            match pts.len() {
                2 => segs.push([pts[0], pts[1]]),
                4 => {
                    segs.push([pts[0], pts[1]]);
                    segs.push([pts[2], pts[3]]);
                }
                _ => {}
            }
        }
    }
    segs
}

/// Renders a 2D scatter plot of `samples` over contours of `target`.
pub fn render_svg(target: &dyn Target, samples: &Matrix) -> Result<String> {
    if target.dim() != 2 || samples.ncols() != 2 {
        return Err(Error::Unsupported(format!(
            "plotting needs a 2-dimensional target and samples, got target dim {} and {} sample columns",
            target.dim(),
            samples.ncols()
        )));
    }
    let bounds = Bounds::around(samples);
    let grid = density_grid(target, &bounds);
    let levels = contour_levels(&grid);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<g class="contours" fill="none" stroke-width="1">"#);
    for (k, level) in levels.iter().enumerate() {
        let shade = 200 - (k * 160 / LEVELS.max(1)) as u32;
        let mut d = String::new();
        for [a, b] in contour_segments(&grid, &bounds, *level) {
            let (ax, ay) = bounds.to_px(a.0, a.1);
            let (bx, by) = bounds.to_px(b.0, b.1);
            let _ = write!(d, "M{ax:.2} {ay:.2}L{bx:.2} {by:.2}");
        }
        let _ = writeln!(
            svg,
            r#"<path class="contour" data-level="{level}" stroke="rgb({shade},{shade},255)" d="{d}"/>"#
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="samples" fill="rgb(200,40,40)" fill-opacity="0.5">"#);
    for row in samples.row_iter() {
        let (x, y) = bounds.to_px(row[0], row[1]);
        if x.is_finite() && y.is_finite() {
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5"/>"#);
        }
    }
    let _ = writeln!(svg, "</g>\n</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use riemlap_core::targets::GaussianTarget;

    #[test]
    fn levels_are_increasing() {
        let t = GaussianTarget::isotropic(2);
        let b = Bounds { x: (-3.0, 3.0), y: (-3.0, 3.0) };
        let levels = contour_levels(&density_grid(&t, &b));
        assert!(levels.len() > 1);
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn circle_contour_has_expected_radius() {
        let t = GaussianTarget::isotropic(2);
        let b = Bounds { x: (-3.0, 3.0), y: (-3.0, 3.0) };
        let grid = density_grid(&t, &b);
        // log N(r) = -ln(2π) - r²/2 at r = 1
        let level = -(2.0 * std::f64::consts::PI).ln() - 0.5;
        let segs = contour_segments(&grid, &b, level);
        assert!(!segs.is_empty());
        for s in segs {
            for (x, y) in s {
                assert!(((x * x + y * y).sqrt() - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn rejects_three_dimensions() {
        let t = GaussianTarget::isotropic(3);
        assert!(render_svg(&t, &Matrix::zeros(4, 3)).is_err());
    }
}
