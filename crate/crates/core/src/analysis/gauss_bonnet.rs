//! Geodesic curvature of graph circles and the Gauss-Bonnet balance.
//!
//! For `Gamma(theta) = (c + rho e_r, u(c + rho e_r))`:
//! `Gamma' = (rho t, rho Du.t)`, `Gamma'' = (-rho e_r, rho^2 D^2u(t,t) - rho Du.e_r)`
//! and `kappa_g = Gamma'' . (N x Gamma') / |Gamma'|^3` with `N = (-Du, 1)/W`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometryReport, Surface};
use crate::grid::{dist, integrate_where};

pub const MIN_CIRCLE_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCircle {
    pub center: [f64; 2],
    pub rho: f64,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicCurvature {
    pub theta: Vec<f64>,
    pub kappa: Vec<f64>,
    /// `|Gamma'(theta)|`.
    pub speed: Vec<f64>,
    pub total: f64,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn geodesic_curvature<S: Surface + ?Sized>(
    surface: &S,
    circle: BoundaryCircle,
    samples: usize,
) -> Result<GeodesicCurvature> {
    if samples < MIN_CIRCLE_SAMPLES {
        return Err(Error::UnderResolved { got: samples, need: MIN_CIRCLE_SAMPLES });
    }
    let rho = circle.rho;
    let sign = match circle.orientation {
        Orientation::CounterClockwise => 1.0,
        Orientation::Clockwise => -1.0,
    };
    let dtheta = TAU / samples as f64;
    let mut out = GeodesicCurvature { theta: Vec::new(), kappa: Vec::new(), speed: Vec::new(), total: 0.0 };
    for k in 0..samples {
        let th = k as f64 * dtheta;
        let er = [th.cos(), th.sin()];
        let t = [-er[1], er[0]];
        let x = [circle.center[0] + rho * er[0], circle.center[1] + rho * er[1]];
        let missing = || Error::Domain(format!("circle point {x:?} leaves the surface data"));
        let p = surface.slope(x).ok_or_else(missing)?;
        let hs = surface.second_derivatives(x).ok_or_else(missing)?;
        let pt = p[0] * t[0] + p[1] * t[1];
        let pr = p[0] * er[0] + p[1] * er[1];
        let htt = hs[0][0] * t[0] * t[0] + 2.0 * hs[0][1] * t[0] * t[1] + hs[1][1] * t[1] * t[1];
        let g1 = [sign * rho * t[0], sign * rho * t[1], sign * rho * pt];
        let g2 = [-rho * er[0], -rho * er[1], rho * rho * htt - rho * pr];
        let w = (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
        let n = [-p[0] / w, -p[1] / w, 1.0 / w];
        let speed = dot3(g1, g1).sqrt();
        let kappa = dot3(g2, cross(n, g1)) / speed.powi(3);
        out.total += kappa * speed * dtheta;
        out.theta.push(th);
        out.kappa.push(kappa);
        out.speed.push(speed);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Number of components.
    pub m1: u32,
    pub genus: u32,
    /// Number of boundary curves.
    pub m0: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetAudit {
    /// `int K dH^2`.
    pub interior: f64,
    /// `sum_i int_{Gamma_i} kappa_g dH^1`.
    pub boundary: f64,
    /// `2 pi (2 M1 - 2 g - M0)`.
    pub euler: f64,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `int K + sum int kappa_g = 2 pi chi` with each circle oriented so that
/// the region lies to its left.
pub fn gauss_bonnet_audit(
    rep: &GeometryReport,
    circles: &[BoundaryCircle],
    topology: Topology,
    samples: usize,
) -> Result<GaussBonnetAudit> {
    if topology.m1 < 1 {
        return Err(Error::InvalidInput("at least one component is required".into()));
    }
    if topology.m0 as usize != circles.len() {
        return Err(Error::InvalidInput(format!(
            "topology declares {} boundary curves but {} circles were given",
            topology.m0,
            circles.len()
        )));
    }
    // region bounded by the circles: inside every counter-clockwise one and
    // outside every clockwise one
    let grid = rep.u.grid();
    let inside = |n: usize| {
        let x = grid.point(n);
        circles.iter().all(|c| {
            let r = dist(x, c.center);
            match c.orientation {
                Orientation::CounterClockwise => r <= c.rho,
                Orientation::Clockwise => r >= c.rho,
            }
        })
    };
    let interior = integrate_where(&rep.gauss_curvature, Some(&rep.w), inside)?.value;
    let mut boundary = 0.0;
    for &c in circles {
        boundary += geodesic_curvature(rep, c, samples)?.total;
    }
    let euler = 2.0 * PI * (2.0 * topology.m1 as f64 - 2.0 * topology.genus as f64 - topology.m0 as f64);
    let defect = interior + boundary - euler;
    let tolerance = (10.0 * rep.u.grid().h).max(1e-3);
    Ok(GaussBonnetAudit { interior, boundary, euler, defect, tolerance, pass: defect.abs() <= tolerance })
}
