use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{graph_circle, GeometryReport};
use crate::grid::{dist, integrate_where, Curve};

pub const MIN_CANDIDATES: usize = 8;

#[derive(Clone, Debug)]
pub struct SliceResult {
    pub rho: f64,
    pub curve: Curve,
    /// `int_Gamma |A|^2 dH^1` on the selected graph circle.
    pub line_energy: f64,
    /// `(r2 - r1)^{-1} int_{annulus} |A|^2 dH^2`, the coarea average.
    pub budget: f64,
    /// Mean line energy over the usable candidates.
    pub candidate_mean: f64,
    pub candidates: Vec<SliceCandidate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCandidate {
    pub rho: f64,
    /// `None` when the circle leaves the data.
    pub line_energy: Option<f64>,
}

/// Selects the graph circle of least `|A|^2` line energy among `count`
/// uniformly spaced radii in `[r1, r2]`; ties go to the smaller radius.
pub fn coarea_slice(
    rep: &GeometryReport,
    center: [f64; 2],
    window: (f64, f64),
    count: usize,
    samples: usize,
) -> Result<SliceResult> {
    let (r1, r2) = window;
    if !(r2 > r1 && r1 > 0.0) {
        return Err(Error::InvalidInput(format!("window [{r1}, {r2}] must satisfy 0 < r1 < r2")));
    }
    if count < MIN_CANDIDATES {
        return Err(Error::UnderResolved { got: count, need: MIN_CANDIDATES });
    }
    let mut candidates = Vec::with_capacity(count);
    let mut best: Option<(f64, f64, Curve)> = None;
    let mut sum = 0.0;
    let mut usable = 0usize;
    for k in 0..count {
        let rho = r1 + (r2 - r1) * k as f64 / (count - 1) as f64;
        let energy = match graph_circle(rep, center, rho, samples) {
            Some(c) => {
                let e = c.line_energy()?;
                if best.as_ref().is_none_or(|b| e < b.1) {
                    best = Some((rho, e, c.curve()));
                }
                sum += e;
                usable += 1;
                Some(e)
            }
            None => None,
        };
        candidates.push(SliceCandidate { rho, line_energy: energy });
    }
    let (rho, line_energy, curve) =
        best.ok_or_else(|| Error::Domain("every candidate circle leaves the domain".into()))?;

    let grid = rep.u.grid();
    let mut density = rep.norm_a2.clone();
    for (idx, d) in density.values_mut().iter_mut().enumerate() {
        if d.is_nan() {
            continue;
        }
        let x = grid.point(idx);
        let r = dist(x, center).max(f64::MIN_POSITIVE);
        let t = [-(x[1] - center[1]) / r, (x[0] - center[0]) / r];
        let p = rep.gradient.at(idx);
        let dt = p[0] * t[0] + p[1] * t[1];
        *d *= (1.0 + dt * dt).sqrt();
    }
    let q = integrate_where(&density, None, |n| {
        let r = dist(grid.point(n), center);
        r >= r1 && r <= r2
    })?;
    Ok(SliceResult {
        rho,
        curve,
        line_energy,
        budget: q.value / (r2 - r1),
        candidate_mean: sum / usable as f64,
        candidates,
    })
}
