//! Linear operators derived from the translator equation.
//!
//! * `Newton`: `div(a Dv) + b . Dv` with `a = DA(Du)`, `b = DB(Du)` for
//!   `A(p) = p/W`, `B(p) = -p1/W`.
//! * `GradientL`: `a_jk D_jk v + b_j D_j v`, the equation satisfied by each
//!   partial derivative of a solution.
//! * `QuasilinearQ`: the quasilinear operator `(1+|p|^2) (Δ + D1) - D^2(p, p)`
//!   with `p = Du` frozen, so that `Qu = W^3 (div(Du/W) + D1 u / W)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, hessian, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Newton,
    GradientL,
    QuasilinearQ,
}

/// Coefficients of `flavor` at a point with gradient `p` and Hessian `hess`.
pub fn coefficients_at(flavor: Flavor, p: [f64; 2], hess: [[f64; 2]; 2]) -> ([[f64; 2]; 2], [f64; 2]) {
    let q = p[0] * p[0] + p[1] * p[1];
    let w2 = 1.0 + q;
    match flavor {
        Flavor::Newton => {
            let w = w2.sqrt();
            let w3 = w2 * w;
            let a = [[1.0 / w - p[0] * p[0] / w3, -p[0] * p[1] / w3], [-p[0] * p[1] / w3, 1.0 / w - p[1] * p[1] / w3]];
            let b = [-1.0 / w + p[0] * p[0] / w3, p[0] * p[1] / w3];
            (a, b)
        }
        Flavor::GradientL => {
            let a = [[w2 - p[0] * p[0], -p[0] * p[1]], [-p[0] * p[1], w2 - p[1] * p[1]]];
            let lap = hess[0][0] + hess[1][1];
            let quad = hess[0][0] * p[0] * p[0] + 2.0 * hess[0][1] * p[0] * p[1] + hess[1][1] * p[1] * p[1];
            let m = p[0] + lap - 3.0 * quad / w2;
            let b = [
                w2 - 2.0 * (p[0] * hess[0][0] + p[1] * hess[1][0]) - m * p[0],
                -2.0 * (p[0] * hess[0][1] + p[1] * hess[1][1]) - m * p[1],
            ];
            (a, b)
        }
        Flavor::QuasilinearQ => {
            let a = [[w2 - p[0] * p[0], -p[0] * p[1]], [-p[0] * p[1], w2 - p[1] * p[1]]];
            (a, [w2, 0.0])
        }
    }
}

/// Smallest and largest eigenvalue of a symmetric 2x2 matrix.
pub fn eigen_range(a: [[f64; 2]; 2]) -> (f64, f64) {
    let m = 0.5 * (a[0][1] + a[1][0]);
    let tr = a[0][0] + a[1][1];
    let disc = ((a[0][0] - a[1][1]).powi(2) + 4.0 * m * m).sqrt();
    (0.5 * (tr - disc), 0.5 * (tr + disc))
}

/// `(1+|p|^2)^{3/2} <nu, DA(p) nu>` for unit `nu`; at least 1.
pub fn newton_ellipticity(p: [f64; 2], nu: [f64; 2]) -> f64 {
    let (a, _) = coefficients_at(Flavor::Newton, p, [[0.0; 2]; 2]);
    let w2: f64 = 1.0 + p[0] * p[0] + p[1] * p[1];
    let form = nu[0] * (a[0][0] * nu[0] + a[0][1] * nu[1]) + nu[1] * (a[1][0] * nu[0] + a[1][1] * nu[1]);
    w2.powf(1.5) * form
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipticity {
    /// `min W^3 lambda_min(a)` for `Newton`, `min lambda_min(a)` otherwise.
    pub lower: f64,
    /// `max lambda_max(a) / (1 + 2|Du|^2)` for `GradientL`.
    pub upper_ratio: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct LinearizedCoefficients {
    pub flavor: Flavor,
    pub a11: ScalarField,
    pub a12: ScalarField,
    pub a22: ScalarField,
    pub b1: ScalarField,
    pub b2: ScalarField,
    /// `|Du|^2` of the background.
    pub grad_sq: ScalarField,
}

pub fn linearize(u: &ScalarField, flavor: Flavor) -> Result<LinearizedCoefficients> {
    let g = gradient(u)?;
    let hs = hessian(u)?;
    let n = u.grid().len();
    let mut cols = vec![vec![f64::NAN; n]; 6];
    for idx in 0..n {
        if !u.mask().is_active(idx) {
            continue;
        }
        let p = g.at(idx);
        let (a, b) = coefficients_at(flavor, p, hs.at(idx));
        for (c, v) in cols.iter_mut().zip([a[0][0], a[0][1], a[1][1], b[0], b[1], p[0] * p[0] + p[1] * p[1]]) {
            c[idx] = v;
        }
    }
    let mask = u.mask().clone();
    let mut it = cols.into_iter().map(|c| ScalarField::from_values(mask.clone(), c));
    let mut next = || it.next().expect("six columns");
    Ok(LinearizedCoefficients {
        flavor,
        a11: next()?,
        a12: next()?,
        a22: next()?,
        b1: next()?,
        b2: next()?,
        grad_sq: next()?,
    })
}

impl LinearizedCoefficients {
    pub fn a_at(&self, idx: usize) -> [[f64; 2]; 2] {
        let m = self.a12.get(idx);
        [[self.a11.get(idx), m], [m, self.a22.get(idx)]]
    }

    pub fn b_at(&self, idx: usize) -> [f64; 2] {
        [self.b1.get(idx), self.b2.get(idx)]
    }

    /// Checks the ellipticity bounds of the flavor at every active node.
    pub fn ellipticity(&self) -> Ellipticity {
        let mut lower = f64::INFINITY;
        let mut upper_ratio: f64 = 0.0;
        for idx in 0..self.a11.grid().len() {
            if !self.a11.mask().is_active(idx) {
                continue;
            }
            let (lo, hi) = eigen_range(self.a_at(idx));
            let q = self.grad_sq.get(idx);
            match self.flavor {
                Flavor::Newton => lower = lower.min((1.0 + q).powf(1.5) * lo),
                _ => {
                    lower = lower.min(lo);
                    upper_ratio = upper_ratio.max(hi / (1.0 + 2.0 * q));
                }
            }
        }
        let tol = 1e-12;
        let holds = lower >= 1.0 - tol && upper_ratio <= 1.0 + tol;
        Ellipticity { lower, upper_ratio, holds }
    }

    /// The operator applied to `phi`: divergence form for `Newton`,
    /// `a : D^2 phi + b . D phi` otherwise.
    pub fn apply(&self, phi: &ScalarField) -> Result<ScalarField> {
        self.a11.check_same_mask(phi)?;
        let g = gradient(phi)?;
        let mut out = phi.clone();
        match self.flavor {
            Flavor::Newton => {
                let f1 = self
                    .a11
                    .zip_map(&g.d1, |a, d| a * d)?
                    .zip_map(&self.a12.zip_map(&g.d2, |a, d| a * d)?, |x, y| x + y)?;
                let f2 = self
                    .a12
                    .zip_map(&g.d1, |a, d| a * d)?
                    .zip_map(&self.a22.zip_map(&g.d2, |a, d| a * d)?, |x, y| x + y)?;
                let div1 = gradient(&f1)?.d1;
                let div2 = gradient(&f2)?.d2;
                for (idx, o) in out.values_mut().iter_mut().enumerate() {
                    if !o.is_nan() {
                        let b = self.b_at(idx);
                        *o = div1.get(idx) + div2.get(idx) + b[0] * g.d1.get(idx) + b[1] * g.d2.get(idx);
                    }
                }
            }
            _ => {
                let hs = hessian(phi)?;
                for (idx, o) in out.values_mut().iter_mut().enumerate() {
                    if !o.is_nan() {
                        let a = self.a_at(idx);
                        let h = hs.at(idx);
                        let b = self.b_at(idx);
                        *o = a[0][0] * h[0][0]
                            + 2.0 * a[0][1] * h[0][1]
                            + a[1][1] * h[1][1]
                            + b[0] * g.d1.get(idx)
                            + b[1] * g.d2.get(idx);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `(1 + |D phi|^2)(Δ phi + D1 phi) - D^2 phi(D phi, D phi)`.
pub fn quasilinear_self(phi: &ScalarField) -> Result<ScalarField> {
    let g = gradient(phi)?;
    let hs = hessian(phi)?;
    let mut out = phi.clone();
    for (idx, o) in out.values_mut().iter_mut().enumerate() {
        if o.is_nan() {
            continue;
        }
        let p = g.at(idx);
        let h = hs.at(idx);
        let (a, b) = coefficients_at(Flavor::QuasilinearQ, p, h);
        *o = a[0][0] * h[0][0] + 2.0 * a[0][1] * h[0][1] + a[1][1] * h[1][1] + b[0] * p[0] + b[1] * p[1];
    }
    Ok(out)
}

/// Discrete subsolution identity at the deep-interior nodes of a solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsolutionReport {
    pub nodes: usize,
    /// Minimum of the operator value.
    pub min_value: f64,
    /// Max deviation from `2 a(Dw, Dw)` with the operator's own `a`.
    pub closed_form_error: f64,
    /// Max deviation from the same expression with `+2 <Du, Dw>^2` in
    /// place of `-2 <Du, Dw>^2`.
    pub plus_sign_form_error: f64,
}

fn subsolution(u: &ScalarField, flavor: Flavor, w: &ScalarField, margin: f64) -> Result<SubsolutionReport> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::InvalidInput(format!("margin must be finite and nonnegative, got {margin}")));
    }
    if u.mask().count(crate::grid::NodeClass::Interior) == 0 {
        return Err(Error::InsufficientData("no interior nodes".into()));
    }
    let coef = linearize(u, flavor)?;
    let du = gradient(u)?;
    let dw = gradient(w)?;
    let w2 = w.map(|x| x * x);
    let op = coef.apply(&w2)?;
    let mut rep =
        SubsolutionReport { nodes: 0, min_value: f64::INFINITY, closed_form_error: 0.0, plus_sign_form_error: 0.0 };
    let depth = ((margin / u.grid().h).ceil() as usize).max(1);
    for idx in u.mask().interior_at_depth(depth) {
        let p = du.at(idx);
        let d = dw.at(idx);
        let q = p[0] * p[0] + p[1] * p[1];
        let dd = d[0] * d[0] + d[1] * d[1];
        let pd = p[0] * d[0] + p[1] * d[1];
        let v = op.get(idx);
        rep.nodes += 1;
        rep.min_value = rep.min_value.min(v);
        rep.closed_form_error = rep.closed_form_error.max((v - (2.0 * (1.0 + q) * dd - 2.0 * pd * pd)).abs());
        rep.plus_sign_form_error = rep.plus_sign_form_error.max((v - (2.0 * (1.0 + q) * dd + 2.0 * pd * pd)).abs());
    }
    if rep.nodes == 0 {
        return Err(Error::InsufficientData("no deep-interior nodes".into()));
    }
    Ok(rep)
}

/// `Q(u^2)` with `Q` frozen at `u`; equals `2(1+|Du|^2)|Du|^2 - 2|Du|^4`
/// on solutions.
pub fn q_subsolution(u: &ScalarField) -> Result<SubsolutionReport> {
    subsolution(u, Flavor::QuasilinearQ, u, 0.0)
}

/// `q_subsolution` restricted to nodes at least `margin` (in each axis)
/// inside the domain.
pub fn q_subsolution_with_margin(u: &ScalarField, margin: f64) -> Result<SubsolutionReport> {
    subsolution(u, Flavor::QuasilinearQ, u, margin)
}

/// `L(v^2)` for `v = D1 u`; equals `2(1+|Du|^2)|Dv|^2 - 2<Du, Dv>^2` on
/// solutions.
pub fn l_subsolution(u: &ScalarField) -> Result<SubsolutionReport> {
    l_subsolution_with_margin(u, 0.0)
}

/// `l_subsolution` restricted to nodes at least `margin` inside the domain.
pub fn l_subsolution_with_margin(u: &ScalarField, margin: f64) -> Result<SubsolutionReport> {
    let v = gradient(u)?.d1;
    subsolution(u, Flavor::GradientL, &v, margin)
}
