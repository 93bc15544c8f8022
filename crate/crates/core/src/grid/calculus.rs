//! Second-order finite differences on masked grids.
//!
//! Interior nodes use central differences; boundary nodes fall back to
//! second-order one-sided formulas along each axis. Mixed derivatives at
//! interior nodes use the four diagonal neighbors, so `D12 == D21` holds by
//! construction.

use super::{DomainMask, GridSpec, NodeClass, ScalarField};
use crate::error::{Error, Result};

/// `(D1 f, D2 f)`.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub d1: ScalarField,
    pub d2: ScalarField,
}

impl Gradient {
    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 2] {
        [self.d1.get(idx), self.d2.get(idx)]
    }
}

/// Symmetric second-derivative field.
#[derive(Clone, Debug)]
pub struct Hessian {
    pub d11: ScalarField,
    pub d12: ScalarField,
    pub d22: ScalarField,
}

impl Hessian {
    #[inline]
    pub fn at(&self, idx: usize) -> [[f64; 2]; 2] {
        let a = self.d11.get(idx);
        let b = self.d12.get(idx);
        let c = self.d22.get(idx);
        [[a, b], [b, c]]
    }
}

#[inline]
fn usable(mask: &DomainMask, grid: &GridSpec, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
    grid.offset(i, j, di, dj).filter(|&n| mask.is_active(n))
}

/// First derivative along axis `(di, dj)` at node `(i, j)`.
fn axis_derivative(f: &ScalarField, i: usize, j: usize, di: isize, dj: isize) -> Result<f64> {
    let mask = f.mask();
    let grid = f.grid();
    let h = grid.h;
    let v = f.values();
    let c = v[grid.index(i, j)];
    let fwd = usable(mask, grid, i, j, di, dj);
    let bwd = usable(mask, grid, i, j, -di, -dj);
    if let (Some(p), Some(m)) = (fwd, bwd) {
        return Ok((v[p] - v[m]) / (2.0 * h));
    }
    if let (Some(p1), Some(p2)) = (fwd, usable(mask, grid, i, j, 2 * di, 2 * dj)) {
        return Ok((-3.0 * c + 4.0 * v[p1] - v[p2]) / (2.0 * h));
    }
    if let (Some(m1), Some(m2)) = (bwd, usable(mask, grid, i, j, -2 * di, -2 * dj)) {
        return Ok((3.0 * c - 4.0 * v[m1] + v[m2]) / (2.0 * h));
    }
    Err(Error::StencilUnavailable { i, j, reason: "no two-node one-sided stencil" })
}

/// Second-order gradient at every active node.
pub fn gradient(f: &ScalarField) -> Result<Gradient> {
    let grid = *f.grid();
    let mask = f.mask().clone();
    let mut d1 = vec![f64::NAN; grid.len()];
    let mut d2 = vec![f64::NAN; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.index(i, j);
            if !mask.is_active(idx) {
                continue;
            }
            d1[idx] = axis_derivative(f, i, j, 1, 0)?;
            d2[idx] = axis_derivative(f, i, j, 0, 1)?;
        }
    }
    Ok(Gradient { d1: ScalarField::from_values(mask.clone(), d1)?, d2: ScalarField::from_values(mask, d2)? })
}

/// First-derivative weights (times `h`) as `(offset, weight)`.
const FIRST: [&[(isize, f64)]; 3] =
    [&[(-1, -0.5), (1, 0.5)], &[(0, -1.5), (1, 2.0), (2, -0.5)], &[(0, 1.5), (-1, -2.0), (-2, 0.5)]];

/// Second-derivative weights (times `h^2`); the last two are first order.
const SECOND: [&[(isize, f64)]; 5] = [
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)],
    &[(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)],
    &[(0, 1.0), (1, -2.0), (2, 1.0)],
    &[(0, 1.0), (-1, -2.0), (-2, 1.0)],
];

/// Pure second derivative along `(di, dj)` with the first fully active stencil.
fn boundary_second(f: &ScalarField, i: usize, j: usize, di: isize, dj: isize) -> Result<f64> {
    let (mask, grid, v) = (f.mask(), f.grid(), f.values());
    'stencils: for st in SECOND {
        let mut acc = 0.0;
        for &(o, w) in st {
            match usable(mask, grid, i, j, o * di, o * dj) {
                Some(n) => acc += w * v[n],
                None => continue 'stencils,
            }
        }
        return Ok(acc / (grid.h * grid.h));
    }
    Err(Error::StencilUnavailable { i, j, reason: "no one-sided second-derivative stencil" })
}

/// Mixed derivative as a tensor product of first-derivative stencils, so the
/// truncation error stays second order next to the boundary.
fn boundary_mixed(f: &ScalarField, i: usize, j: usize) -> Result<f64> {
    let (mask, grid, v) = (f.mask(), f.grid(), f.values());
    for sx in FIRST {
        'pairs: for sy in FIRST {
            let mut acc = 0.0;
            for &(a, wa) in sx {
                for &(b, wb) in sy {
                    match usable(mask, grid, i, j, a, b) {
                        Some(n) => acc += wa * wb * v[n],
                        None => continue 'pairs,
                    }
                }
            }
            return Ok(acc / (grid.h * grid.h));
        }
    }
    Err(Error::StencilUnavailable { i, j, reason: "no mixed-derivative stencil" })
}

/// Second derivatives. Central 3x3 stencils at interior nodes; boundary
/// nodes use central or second-order one-sided stencils on the field itself.
pub fn hessian(f: &ScalarField) -> Result<Hessian> {
    let grid = *f.grid();
    let mask = f.mask().clone();
    let h2 = grid.h * grid.h;
    let v = f.values();
    let mut d11 = vec![f64::NAN; grid.len()];
    let mut d12 = vec![f64::NAN; grid.len()];
    let mut d22 = vec![f64::NAN; grid.len()];

    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.index(i, j);
            match mask.class(idx) {
                NodeClass::Outside => {}
                NodeClass::Interior => {
                    let at = |di: isize, dj: isize| v[grid.offset(i, j, di, dj).unwrap()];
                    let c = v[idx];
                    d11[idx] = (at(1, 0) - 2.0 * c + at(-1, 0)) / h2;
                    d22[idx] = (at(0, 1) - 2.0 * c + at(0, -1)) / h2;
                    d12[idx] = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h2);
                }
                NodeClass::Boundary => {
                    d11[idx] = boundary_second(f, i, j, 1, 0)?;
                    d22[idx] = boundary_second(f, i, j, 0, 1)?;
                    d12[idx] = boundary_mixed(f, i, j)?;
                }
            }
        }
    }
    Ok(Hessian {
        d11: ScalarField::from_values(mask.clone(), d11)?,
        d12: ScalarField::from_values(mask.clone(), d12)?,
        d22: ScalarField::from_values(mask, d22)?,
    })
}
