//! Clamped-plate replacement `Δ^2 w = 0` in a disk with `w = u`, `Dw = Du`
//! on its boundary.
//!
//! Unknowns are the `Interior` nodes of the disk mask. Every other node
//! within two grid steps of an unknown carries the source height; this
//! two-node collar fixes both the trace and the normal derivative of `w` to
//! second order. The 13-point operator is the square of the five-point
//! Laplacian, so the reduced matrix is symmetric positive definite and is
//! factored by banded Cholesky.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{graph_circle, Surface};
use crate::grid::{hessian, integrate_where, DomainMask, GridSpec, NodeClass, ScalarField, Shape};

/// Symmetric positive definite band matrix stored by lower diagonals.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    /// `data[i * (bw + 1) + (i - j)]` holds entry `(i, j)`, `j <= i`.
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    /// Adds `v` at `(i, j)`; only the lower triangle is stored.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if j <= i {
            debug_assert!(i - j <= self.bw);
            self.data[i * (self.bw + 1) + (i - j)] += v;
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.bw + 1) + (i - j)]
    }

    /// `A x` using both stored triangles.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..i {
                let a = self.at(i, j);
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.at(i, i) * x[i];
        }
        y
    }

    /// In-place Cholesky factorization `A = L L^T`.
    pub fn factor(mut self) -> Result<Self> {
        let (n, bw) = (self.n, self.bw);
        let stride = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[i * stride + (i - j)];
                for k in k0..j {
                    s -= self.data[i * stride + (i - k)] * self.data[j * stride + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!(
                            "Cholesky pivot {s:e} at row {i} of {n}: matrix not positive definite"
                        )));
                    }
                    self.data[i * stride] = s.sqrt();
                } else {
                    self.data[i * stride + (i - j)] = s / self.data[j * stride];
                }
            }
        }
        Ok(self)
    }

    /// Solves with a factored matrix.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }
}

/// Iterative refinement passes after the direct solve.
const REFINEMENT_STEPS: usize = 2;

const STENCIL: [(isize, isize, f64); 13] = [
    (0, 0, 20.0),
    (1, 0, -8.0),
    (-1, 0, -8.0),
    (0, 1, -8.0),
    (0, -1, -8.0),
    (1, 1, 2.0),
    (1, -1, 2.0),
    (-1, 1, 2.0),
    (-1, -1, 2.0),
    (2, 0, 1.0),
    (-2, 0, 1.0),
    (0, 2, 1.0),
    (0, -2, 1.0),
];

/// Clamped-plate solution on a disk.
#[derive(Clone, Debug)]
pub struct ClampedPlate {
    /// `w` on a slightly larger disk; equals the source outside the
    /// unknowns, so interior Hessians are central up to the disk edge.
    pub w: ScalarField,
    pub disk: Arc<DomainMask>,
    pub center: [f64; 2],
    pub rho: f64,
}

pub fn biharmonic_solve<S: Surface + ?Sized>(source: &S, center: [f64; 2], rho: f64, h: f64) -> Result<ClampedPlate> {
    if !(rho > 4.0 * h) {
        return Err(Error::Resolution(format!("disk radius {rho} must exceed 4h = {}", 4.0 * h)));
    }
    let pad = rho + 4.0 * h;
    let grid = GridSpec::covering((center[0] - pad, center[0] + pad), (center[1] - pad, center[1] + pad), h)?;
    let disk = Arc::new(DomainMask::new(grid, Shape::disk(center, rho)));
    let outer = Arc::new(DomainMask::new(grid, Shape::disk(center, rho + 2.5 * h)));

    let mut values = vec![f64::NAN; grid.len()];
    for (idx, v) in values.iter_mut().enumerate() {
        if outer.is_active(idx) {
            let x = grid.point(idx);
            *v = source.height(x).ok_or_else(|| Error::Domain(format!("source height unavailable at {x:?}")))?;
        }
    }
    let mut id = vec![usize::MAX; grid.len()];
    let unknowns: Vec<usize> = (0..grid.len()).filter(|&n| disk.class(n) == NodeClass::Interior).collect();
    for (k, &n) in unknowns.iter().enumerate() {
        id[n] = k;
    }
    let mut bw = 0;
    for (k, &n) in unknowns.iter().enumerate() {
        let (i, j) = grid.ij(n);
        for &(di, dj, _) in &STENCIL {
            let m = grid.offset(i, j, di, dj).expect("padded grid holds the stencil");
            if id[m] != usize::MAX {
                bw = bw.max(k.abs_diff(id[m]));
            }
        }
    }
    let mut a = BandedSpd::zeros(unknowns.len(), bw);
    let mut rhs = vec![0.0; unknowns.len()];
    for (k, &n) in unknowns.iter().enumerate() {
        let (i, j) = grid.ij(n);
        for &(di, dj, c) in &STENCIL {
            let m = grid.offset(i, j, di, dj).expect("padded grid holds the stencil");
            if id[m] != usize::MAX {
                a.add(k, id[m], c);
            } else {
                let v = values[m];
                if v.is_nan() {
                    return Err(Error::StencilUnavailable { i, j, reason: "collar node outside padded disk" });
                }
                rhs[k] -= c * v;
            }
        }
    }
    let l = a.clone().factor()?;
    let mut x = rhs.clone();
    l.solve(&mut x);
    for _ in 0..REFINEMENT_STEPS {
        let ax = a.mul(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, y)| b - y).collect();
        l.solve(&mut r);
        x.iter_mut().zip(&r).for_each(|(v, d)| *v += d);
    }
    let rhs = x;
    for (k, &n) in unknowns.iter().enumerate() {
        values[n] = rhs[k];
    }
    Ok(ClampedPlate { w: ScalarField::from_values(outer, values)?, disk, center, rho })
}

impl ClampedPlate {
    /// `int_{D_rho} |D^2 w|^2 dx` over cells inside the disk mask.
    pub fn hessian_energy(&self) -> Result<f64> {
        let hs = hessian(&self.w)?;
        let mut density = self.w.clone();
        for (idx, d) in density.values_mut().iter_mut().enumerate() {
            if !d.is_nan() {
                let m = hs.at(idx);
                *d = m[0][0] * m[0][0] + 2.0 * m[0][1] * m[0][1] + m[1][1] * m[1][1];
            }
        }
        Ok(integrate_where(&density, None, |n| self.disk.is_active(n))?.value)
    }

    /// Max of `|w - f|` over the active disk nodes.
    pub fn deviation_from(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        let g = self.w.grid();
        (0..g.len())
            .filter(|&n| self.disk.is_active(n))
            .map(|n| (self.w.get(n) - f(g.point(n))).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    /// `int |D^2 w|^2`.
    pub lhs: f64,
    /// `rho int_Gamma |A|^2 dH^1`.
    pub rhs: f64,
    pub fitted_c: Option<f64>,
    /// Set when `rhs` vanishes but `lhs` does not.
    pub flagged: bool,
}

pub fn biharmonic_energy_check<S: Surface + ?Sized>(
    plate: &ClampedPlate,
    source: &S,
    samples: usize,
) -> Result<EnergyCheck> {
    let lhs = plate.hessian_energy()?;
    let circle = graph_circle(source, plate.center, plate.rho, samples)
        .ok_or_else(|| Error::Domain("graph circle leaves the source data".into()))?;
    let rhs = plate.rho * circle.line_energy()?;
    // round-off level of the discrete Hessian energy
    let h2 = plate.w.grid().h.powi(2);
    let noise = (1e-12 * plate.w.sup_norm().max(1.0) / h2).powi(2) * std::f64::consts::PI * plate.rho.powi(2);
    let tiny = 1e-24;
    let fitted_c = (rhs > tiny).then(|| lhs / rhs);
    Ok(EnergyCheck { lhs, rhs, fitted_c, flagged: rhs <= tiny && lhs > noise })
}
