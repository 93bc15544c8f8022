//! Extrinsic geometry of the graph `x -> (x, u(x))`.
//!
//! Curvatures are taken from the symmetric matrix
//! `M = g^{-1/2} (D^2 u / W) g^{-1/2}`, whose eigenvalues are the principal
//! curvatures. With `H = tr M` and `d^2 = (M11 - M22)^2 + 4 M12^2` the norms
//! `|A|^2 = (H^2 + d^2)/2` and `K = (H^2 - d^2)/4` make `H^2 <= 2|A|^2` and
//! `K <= |A|^2/2` hold exactly in floating point.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    dist, gradient, hessian, integrate, integrate_where, Curve, DomainMask, Gradient, Hessian, Quadrature, ScalarField,
};
use crate::solver::flux;

/// Unit vector in `span(e1, e2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction([f64; 3]);

impl Direction {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !((n - 1.0).abs() <= 1e-12 && v[2].abs() <= 1e-12) {
            return Err(Error::InvalidInput(format!(
                "direction {v:?} must be a unit vector with zero height component"
            )));
        }
        Ok(Self(v))
    }

    pub fn e1() -> Self {
        Self([1.0, 0.0, 0.0])
    }

    pub fn vector(&self) -> [f64; 3] {
        self.0
    }

    pub fn planar(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }
}

impl Default for Direction {
    fn default() -> Self {
        Self::e1()
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// Pointwise geometry of a graph from its first and second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointGeometry {
    pub w: f64,
    /// `D^2 u / W`.
    pub a: [[f64; 2]; 2],
    pub mean_curvature: f64,
    pub gauss_curvature: f64,
    pub norm_a2: f64,
    pub normal: [f64; 3],
}

pub fn point_geometry(p: [f64; 2], hess: [[f64; 2]; 2]) -> PointGeometry {
    let q = p[0] * p[0] + p[1] * p[1];
    let w = (1.0 + q).sqrt();
    let a = [[hess[0][0] / w, hess[0][1] / w], [hess[1][0] / w, hess[1][1] / w]];
    // g^{-1/2} = I - p p^T / (W (W + 1))
    let c = 1.0 / (w * (w + 1.0));
    let s = [[1.0 - c * p[0] * p[0], -c * p[0] * p[1]], [-c * p[0] * p[1], 1.0 - c * p[1] * p[1]]];
    let mut sa = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            sa[i][j] = s[i][0] * a[0][j] + s[i][1] * a[1][j];
        }
    }
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = sa[i][0] * s[0][j] + sa[i][1] * s[1][j];
        }
    }
    let m12 = 0.5 * (m[0][1] + m[1][0]);
    let h = m[0][0] + m[1][1];
    let d2 = (m[0][0] - m[1][1]).powi(2) + 4.0 * m12 * m12;
    PointGeometry {
        w,
        a,
        mean_curvature: h,
        gauss_curvature: 0.25 * (h * h - d2),
        norm_a2: 0.5 * (h * h + d2),
        normal: [-p[0] / w, -p[1] / w, 1.0 / w],
    }
}

/// A graph that can be queried at arbitrary planar points.
pub trait Surface {
    fn height(&self, x: [f64; 2]) -> Option<f64>;
    fn slope(&self, x: [f64; 2]) -> Option<[f64; 2]>;
    fn second_derivatives(&self, x: [f64; 2]) -> Option<[[f64; 2]; 2]>;

    fn norm_a2(&self, x: [f64; 2]) -> Option<f64> {
        Some(point_geometry(self.slope(x)?, self.second_derivatives(x)?).norm_a2)
    }
}

/// Geometric fields of a sampled graph.
#[derive(Clone, Debug)]
pub struct GeometryReport {
    pub u: ScalarField,
    pub gradient: Gradient,
    pub hessian: Hessian,
    pub w: ScalarField,
    pub a11: ScalarField,
    pub a12: ScalarField,
    pub a22: ScalarField,
    /// Trace of the shape operator.
    pub mean_curvature: ScalarField,
    /// Conservative `div(Du/W)`; equals the trace form on boundary nodes.
    pub mean_curvature_div: ScalarField,
    pub gauss_curvature: ScalarField,
    pub norm_a2: ScalarField,
    pub normal: [ScalarField; 3],
    pub direction: Direction,
}

pub fn shape_report(u: &ScalarField, direction: Direction) -> Result<GeometryReport> {
    let grad = gradient(u)?;
    let hess = hessian(u)?;
    let mask = u.mask().clone();
    let grid = *u.grid();
    let n = grid.len();
    let mut cols = vec![vec![f64::NAN; n]; 11];
    for idx in 0..n {
        if !mask.is_active(idx) {
            continue;
        }
        let pg = point_geometry(grad.at(idx), hess.at(idx));
        let h_div = if mask.is_interior(idx) {
            let (i, j) = grid.ij(idx);
            flux::gather(u.values(), &grid, i, j).map(|b| flux::divergence(&b, grid.h)).unwrap_or(pg.mean_curvature)
        } else {
            pg.mean_curvature
        };
        let row = [
            pg.w,
            pg.a[0][0],
            pg.a[0][1],
            pg.a[1][1],
            pg.mean_curvature,
            h_div,
            pg.gauss_curvature,
            pg.norm_a2,
            pg.normal[0],
            pg.normal[1],
            pg.normal[2],
        ];
        for (c, v) in cols.iter_mut().zip(row) {
            c[idx] = v;
        }
    }
    let mut it = cols.into_iter().map(|c| ScalarField::from_values(mask.clone(), c));
    let mut next = || it.next().expect("eleven columns");
    Ok(GeometryReport {
        u: u.clone(),
        gradient: grad,
        hessian: hess,
        w: next()?,
        a11: next()?,
        a12: next()?,
        a22: next()?,
        mean_curvature: next()?,
        mean_curvature_div: next()?,
        gauss_curvature: next()?,
        norm_a2: next()?,
        normal: [next()?, next()?, next()?],
        direction,
    })
}

impl GeometryReport {
    pub fn mask(&self) -> &Arc<DomainMask> {
        self.u.mask()
    }

    /// `n . V`.
    pub fn normal_dot_v(&self) -> ScalarField {
        let v = self.direction.vector();
        let mut out = self.normal[0].clone();
        for (idx, o) in out.values_mut().iter_mut().enumerate() {
            if !o.is_nan() {
                *o = (0..3).map(|k| self.normal[k].get(idx) * v[k]).sum();
            }
        }
        out
    }

    /// `H - n . V`, which vanishes on translators.
    pub fn translator_defect(&self) -> ScalarField {
        self.mean_curvature.zip_map(&self.normal_dot_v(), |h, nv| h - nv).expect("fields share a mask")
    }

    /// Gauss curvature from the graph formula `det D^2 u / W^4`.
    pub fn gauss_curvature_det(&self) -> ScalarField {
        let mut out = self.w.clone();
        for (idx, o) in out.values_mut().iter_mut().enumerate() {
            if !o.is_nan() {
                let m = self.hessian.at(idx);
                *o = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / o.powi(4);
            }
        }
        out
    }

    /// Multi-column CSV of every active node.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x1", "x2", "u", "w", "a11", "a12", "a22", "h", "h_div", "k", "norm_a2", "n1", "n2", "n3"])?;
        let grid = self.u.grid();
        for idx in 0..grid.len() {
            if !self.mask().is_active(idx) {
                continue;
            }
            let x = grid.point(idx);
            let vals = [
                x[0],
                x[1],
                self.u.get(idx),
                self.w.get(idx),
                self.a11.get(idx),
                self.a12.get(idx),
                self.a22.get(idx),
                self.mean_curvature.get(idx),
                self.mean_curvature_div.get(idx),
                self.gauss_curvature.get(idx),
                self.norm_a2.get(idx),
                self.normal[0].get(idx),
                self.normal[1].get(idx),
                self.normal[2].get(idx),
            ];
            wtr.write_record(vals.iter().map(|v| format!("{v:e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl Surface for GeometryReport {
    fn height(&self, x: [f64; 2]) -> Option<f64> {
        self.u.sample(x)
    }

    fn slope(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        Some([self.gradient.d1.sample(x)?, self.gradient.d2.sample(x)?])
    }

    fn second_derivatives(&self, x: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        let a = self.hessian.d11.sample(x)?;
        let b = self.hessian.d12.sample(x)?;
        let c = self.hessian.d22.sample(x)?;
        Some([[a, b], [b, c]])
    }

    fn norm_a2(&self, x: [f64; 2]) -> Option<f64> {
        self.norm_a2.sample(x)
    }
}

/// `int |A|^2 dH^2 = int |A|^2 W dx`.
pub fn total_curvature(rep: &GeometryReport) -> Result<Quadrature> {
    integrate(&rep.norm_a2, Some(&rep.w))
}

fn check_radius(r: f64, h: f64, what: &str) -> Result<()> {
    if r.is_finite() && r > 2.0 * h {
        Ok(())
    } else {
        Err(Error::Resolution(format!("{what} {r} must exceed 2h = {}", 2.0 * h)))
    }
}

fn in_ball(u: &ScalarField, idx: usize, center: [f64; 3], r: f64) -> bool {
    let x = u.grid().point(idx);
    let z = u.get(idx) - center[2];
    let d = dist(x, [center[0], center[1]]);
    d * d + z * z <= r * r
}

/// `H^2(graph ∩ B_R(center)) / R^2`; cells count when all corners lie in
/// the ball.
pub fn area_ratio(u: &ScalarField, center: [f64; 3], r: f64) -> Result<Quadrature> {
    check_radius(r, u.grid().h, "radius")?;
    let grad = gradient(u)?;
    let w = grad.d1.zip_map(&grad.d2, |a, b| (1.0 + a * a + b * b).sqrt())?;
    let q = integrate_where(&w, None, |n| in_ball(u, n, center, r))?;
    Ok(Quadrature { value: q.value / (r * r), empty: q.empty })
}

/// `int_{B_rho(center)} |A|^2 dH^2`.
pub fn local_energy(rep: &GeometryReport, center: [f64; 3], rho: f64) -> Result<f64> {
    check_radius(rho, rep.u.grid().h, "radius")?;
    Ok(integrate_where(&rep.norm_a2, Some(&rep.w), |n| in_ball(&rep.u, n, center, rho))?.value)
}

/// Both sides of the mean value estimate on the translating family
/// `Sigma + tV`, `t in [-rho^2, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EckerAudit {
    /// `sup |A|^2` over `t in [-rho^2/4, 0]` and `B_{rho/2}`.
    pub lhs: f64,
    /// `rho^{-4} int int_{B_rho} |A|^2 dH^2 dt`.
    pub rhs: f64,
    /// `lhs / rhs`, or `None` when `rhs == 0`.
    pub fitted_constant: Option<f64>,
}

/// `Sigma + tV` meets `B(x0)` where `Sigma` meets `B(x0 - tV)`, so time
/// slices are realized by moving the center.
pub fn ecker_audit(rep: &GeometryReport, center: [f64; 3], rho: f64, time_steps: usize) -> Result<EckerAudit> {
    check_radius(rho, rep.u.grid().h, "radius")?;
    if time_steps < 2 {
        return Err(Error::InvalidInput("ecker audit needs at least 2 time steps".into()));
    }
    let v = rep.direction.vector();
    let shifted = |t: f64| [center[0] - t * v[0], center[1] - t * v[1], center[2] - t * v[2]];
    let dt = rho * rho / time_steps as f64;
    let mut integral = 0.0;
    let mut lhs: f64 = 0.0;
    for k in 0..=time_steps {
        let t = -rho * rho + k as f64 * dt;
        let c = shifted(t);
        let e = integrate_where(&rep.norm_a2, Some(&rep.w), |n| in_ball(&rep.u, n, c, rho))?.value;
        let wt = if k == 0 || k == time_steps { 0.5 } else { 1.0 };
        integral += wt * e * dt;
        if t >= -0.25 * rho * rho - 1e-12 {
            let s = rep
                .norm_a2
                .values()
                .iter()
                .enumerate()
                .filter(|&(n, a)| !a.is_nan() && in_ball(&rep.u, n, c, 0.5 * rho))
                .map(|(_, &a)| a)
                .fold(0.0, f64::max);
            lhs = lhs.max(s);
        }
    }
    let rhs = integral / rho.powi(4);
    Ok(EckerAudit { lhs, rhs, fitted_constant: (rhs > 0.0).then(|| lhs / rhs) })
}

/// One shell of [`decay_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub rho: f64,
    pub nodes: usize,
    pub sup_a: f64,
    pub sup_a_sqrt_rho: f64,
    /// Restricted to the shell part with `x . V > 0`; `NaN` if that is empty.
    pub sup_a_rho_forward: f64,
    pub sup_nv_sqrt_rho: f64,
    pub empty: bool,
}

/// Node suprema over shells `rho <= |x - center| <= rho + shell_cells * h`.
pub fn decay_probe(rep: &GeometryReport, center: [f64; 2], radii: &[f64], shell_cells: usize) -> Vec<DecayRow> {
    let grid = rep.u.grid();
    let width = shell_cells.max(1) as f64 * grid.h;
    let nv = rep.normal_dot_v();
    let vp = rep.direction.planar();
    radii
        .iter()
        .map(|&rho| {
            let mut row = DecayRow {
                rho,
                nodes: 0,
                sup_a: 0.0,
                sup_a_sqrt_rho: 0.0,
                sup_a_rho_forward: f64::NAN,
                sup_nv_sqrt_rho: 0.0,
                empty: true,
            };
            for idx in 0..grid.len() {
                if !rep.mask().is_active(idx) {
                    continue;
                }
                let x = grid.point(idx);
                let r = dist(x, center);
                if r < rho || r > rho + width {
                    continue;
                }
                let a = rep.norm_a2.get(idx).sqrt();
                row.nodes += 1;
                row.empty = false;
                row.sup_a = row.sup_a.max(a);
                row.sup_a_sqrt_rho = row.sup_a_sqrt_rho.max(a * r.sqrt());
                row.sup_nv_sqrt_rho = row.sup_nv_sqrt_rho.max(nv.get(idx).abs() * r.sqrt());
                if (x[0] - center[0]) * vp[0] + (x[1] - center[1]) * vp[1] > 0.0 {
                    row.sup_a_rho_forward =
                        if row.sup_a_rho_forward.is_nan() { a * r } else { row.sup_a_rho_forward.max(a * r) };
                }
            }
            row
        })
        .collect()
}

/// Samples of the graph over the circle `center + rho e^{i theta}`.
#[derive(Clone, Debug)]
pub struct GraphCircle {
    pub center: [f64; 2],
    pub rho: f64,
    pub theta: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub norm_a2: Vec<f64>,
}

impl GraphCircle {
    pub fn curve(&self) -> Curve {
        Curve::closed(self.points.clone())
    }

    /// `int_Gamma |A|^2 dH^1`.
    pub fn line_energy(&self) -> Result<f64> {
        crate::grid::line_integral(&self.norm_a2, &self.curve())
    }
}

/// Samples `n` uniform angles; `None` if any sample leaves the data.
pub fn graph_circle<S: Surface + ?Sized>(surface: &S, center: [f64; 2], rho: f64, n: usize) -> Option<GraphCircle> {
    let mut theta = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut norm_a2 = Vec::with_capacity(n);
    for k in 0..n {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        let x = [center[0] + rho * t.cos(), center[1] + rho * t.sin()];
        points.push([x[0], x[1], surface.height(x)?]);
        norm_a2.push(surface.norm_a2(x)?);
        theta.push(t);
    }
    Some(GraphCircle { center, rho, theta, points, norm_a2 })
}
