use rayon::prelude::*;

use crate::error::{ensure_finite, QgeoError, Result};

/// Axis-aligned integration domain [x0, x1] × [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Number of intervals along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 256, ny: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernEstimate {
    /// Estimate on the doubled grid.
    pub value: f64,
    /// Estimate on the requested grid.
    pub coarse: f64,
    pub delta: f64,
    /// False when the refinement delta exceeds 1e-3.
    pub converged: bool,
}

fn trapezoid_2d<F>(f: &F, d: Rect, nx: usize, ny: usize) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let hx = (d.x1 - d.x0) / nx as f64;
    let hy = (d.y1 - d.y0) / ny as f64;
    let rows: Vec<f64> = (0..=nx)
        .into_par_iter()
        .map(|i| {
            let x = d.x0 + hx * i as f64;
            let mut s = 0.0;
            for j in 0..=ny {
                let w = if j == 0 || j == ny { 0.5 } else { 1.0 };
                s += w * f(x, d.y0 + hy * j as f64);
            }
            s
        })
        .collect();
    // Fixed summation order keeps the result independent of scheduling.
    let mut total = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let w = if i == 0 || i == nx { 0.5 } else { 1.0 };
        total += w * r;
    }
    total * hx * hy
}

/// (1/2π) ∬ Ω by composite trapezoid with one grid doubling.
pub fn chern_number<F>(omega: F, domain: Rect, grid: GridSpec) -> Result<ChernEstimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    ensure_finite(&[domain.x0, domain.x1, domain.y0, domain.y1], "domain")?;
    if grid.nx < 32 || grid.ny < 32 {
        return Err(QgeoError::Domain("Chern grid must be at least 32×32".into()));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let coarse = trapezoid_2d(&omega, domain, grid.nx, grid.ny) / tau;
    let value = trapezoid_2d(&omega, domain, 2 * grid.nx, 2 * grid.ny) / tau;
    if !value.is_finite() || !coarse.is_finite() {
        return Err(QgeoError::Domain("Berry curvature is not integrable on the grid".into()));
    }
    let delta = (value - coarse).abs();
    Ok(ChernEstimate { value, coarse, delta, converged: delta <= 1e-3 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingEstimate {
    /// (1 − sgn(v − w))/2.
    pub closed_form: f64,
    pub quadrature: f64,
}

/// Winding number of ν = 2(v + w cos k, w sin k, 0) over the Brillouin zone.
pub fn winding_number(v: f64, w: f64, nodes: usize) -> Result<WindingEstimate> {
    ensure_finite(&[v, w], "hopping amplitudes")?;
    if v == 0.0 && w == 0.0 {
        return Err(QgeoError::Domain("v and w both vanish".into()));
    }
    if (v - w).abs() <= 1e-12 * v.abs().max(w.abs()) {
        return Err(QgeoError::TransitionPoint(format!("winding undefined at v = w = {v}")));
    }
    if nodes < 2 {
        return Err(QgeoError::Domain("winding quadrature needs at least 2 nodes".into()));
    }
    // ∂_k arctan(w sin k/(v + w cos k)) on a periodic trapezoid grid.
    let h = 2.0 * std::f64::consts::PI / nodes as f64;
    let mut s = 0.0;
    for j in 0..nodes {
        let k = -std::f64::consts::PI + h * j as f64;
        let c = k.cos();
        s += (v * w * c + w * w) / (v * v + w * w + 2.0 * v * w * c);
    }
    Ok(WindingEstimate {
        closed_form: 0.5 * (1.0 - (v - w).signum()),
        quadrature: s / nodes as f64,
    })
}

/// Time average (1/T) ∫_{t−T/2}^{t+T/2} f by composite Simpson with at least
/// 200 nodes per period 2π/ω.
pub fn coarse_grain<F>(series: F, center: f64, window: f64, angular_frequency: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    ensure_finite(&[center, window, angular_frequency], "coarse-graining input")?;
    if window <= 0.0 {
        return Err(QgeoError::Domain(format!("window must be positive, got {window}")));
    }
    let periods = window * angular_frequency.abs() / (2.0 * std::f64::consts::PI);
    let mut n = ((200.0 * periods).ceil() as usize).max(200);
    if n % 2 == 1 {
        n += 1;
    }
    let a = center - 0.5 * window;
    let h = window / n as f64;
    let mut s = series(a) + series(a + window);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * series(a + h * i as f64);
    }
    let avg = s * h / 3.0 / window;
    ensure_finite(&[avg], "time series")?;
    Ok(avg)
}
