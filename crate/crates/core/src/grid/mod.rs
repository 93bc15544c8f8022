//! Uniform Cartesian grids over the graph plane, node classification masks,
//! finite-difference calculus and quadrature.
//!
//! Coordinates are fixed once and for all: the translation direction is
//! `e1`, the graph plane is `span(e1, e2)` and heights are measured along
//! `e3`. Node `(i, j)` sits at `origin + h * (i, j)` and fields are stored
//! row-major with `x1` varying fastest.

mod calculus;
mod interp;
mod io;
mod quadrature;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use calculus::{gradient, hessian, Gradient, Hessian};
pub use io::{parse_grid_file, read_grid_file, write_grid_file, GRID_MAGIC};
pub use quadrature::{integrate, integrate_where, line_integral, Curve, Quadrature};

/// Geometry of a uniform isotropic grid. `nx` and `ny` count nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes per axis, got {nx} x {ny}")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { origin, h, nx, ny })
    }

    /// Grid whose nodes span `[x0, x1] x [y0, y1]` with spacing `h`. The
    /// extents must be (close to) integer multiples of `h`.
    pub fn covering(x: (f64, f64), y: (f64, f64), h: f64) -> Result<Self> {
        let count = |a: f64, b: f64| -> Result<usize> {
            let cells = (b - a) / h;
            let rounded = cells.round();
            if !(cells > 0.0) || (cells - rounded).abs() > 1e-6 * rounded.max(1.0) {
                return Err(Error::InvalidGrid(format!("extent [{a}, {b}] is not a multiple of h = {h}")));
            }
            Ok(rounded as usize + 1)
        };
        Self::new([x.0, y.0], h, count(x.0, x.1)?, count(y.0, y.1)?)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        self.coords(i, j)
    }

    pub fn x_max(&self) -> f64 {
        self.origin[0] + self.h * (self.nx - 1) as f64
    }

    pub fn y_max(&self) -> f64 {
        self.origin[1] + self.h * (self.ny - 1) as f64
    }

    /// Same extents, half the spacing.
    pub fn refined(&self) -> Self {
        Self { origin: self.origin, h: self.h / 2.0, nx: 2 * self.nx - 1, ny: 2 * self.ny - 1 }
    }

    /// Neighbor index offset by `(di, dj)`, if it lies on the grid.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let ii = i as isize + di;
        let jj = j as isize + dj;
        if ii < 0 || jj < 0 || ii >= self.nx as isize || jj >= self.ny as isize {
            None
        } else {
            Some(self.index(ii as usize, jj as usize))
        }
    }

    /// Cell containing `x` and the local coordinates in `[0, 1]^2`.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, usize, f64, f64)> {
        let s = (x[0] - self.origin[0]) / self.h;
        let t = (x[1] - self.origin[1]) / self.h;
        let eps = 1e-9;
        if !(s >= -eps && t >= -eps && s <= (self.nx - 1) as f64 + eps && t <= (self.ny - 1) as f64 + eps) {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(self.nx - 2);
        let j = (t.floor().max(0.0) as usize).min(self.ny - 2);
        Some((i, j, (s - i as f64).clamp(0.0, 1.0), (t - j as f64).clamp(0.0, 1.0)))
    }
}

/// Classification of a grid node with respect to a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Interior,
    Boundary,
    Outside,
}

/// Planar region a mask is cut from. Everything is intersected with the
/// grid rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Rectangle,
    /// `r_in <= |x - center| <= r_out`; `r_in = 0` gives a disk.
    Annulus {
        center: [f64; 2],
        r_in: f64,
        r_out: f64,
    },
    /// `x1 >= x1_min`.
    HalfPlane {
        x1_min: f64,
    },
    /// `|x - center| >= r0`.
    BallComplement {
        center: [f64; 2],
        r0: f64,
    },
}

impl Shape {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Shape::Annulus { center, r_in: 0.0, r_out: radius }
    }

    pub fn contains(&self, x: [f64; 2], slack: f64) -> bool {
        match *self {
            Shape::Rectangle => true,
            Shape::Annulus { center, r_in, r_out } => {
                let r = dist(x, center);
                r >= r_in - slack && r <= r_out + slack
            }
            Shape::HalfPlane { x1_min } => x[0] >= x1_min - slack,
            Shape::BallComplement { center, r0 } => dist(x, center) >= r0 - slack,
        }
    }

    /// Text form used by the grid file header.
    pub fn descriptor(&self) -> String {
        match *self {
            Shape::Rectangle => "rectangle".into(),
            Shape::Annulus { center, r_in, r_out } => {
                format!("annulus({r_in},{r_out},{},{})", center[0], center[1])
            }
            Shape::HalfPlane { x1_min } => format!("half-plane({x1_min})"),
            Shape::BallComplement { center, r0 } => {
                format!("ball-complement({r0},{},{})", center[0], center[1])
            }
        }
    }

    pub fn parse_descriptor(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text == "rectangle" {
            return Ok(Shape::Rectangle);
        }
        let open = text.find('(').ok_or_else(|| format!("unknown shape '{text}'"))?;
        if !text.ends_with(')') {
            return Err(format!("unterminated shape arguments in '{text}'"));
        }
        let name = &text[..open];
        let args: Vec<f64> = text[open + 1..text.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|e| format!("bad number '{a}': {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("shape '{name}' takes {n} arguments, got {}", args.len()))
            }
        };
        match name {
            "annulus" => {
                want(4)?;
                Ok(Shape::Annulus { center: [args[2], args[3]], r_in: args[0], r_out: args[1] })
            }
            "half-plane" => {
                want(1)?;
                Ok(Shape::HalfPlane { x1_min: args[0] })
            }
            "ball-complement" => {
                want(3)?;
                Ok(Shape::BallComplement { center: [args[1], args[2]], r0: args[0] })
            }
            other => Err(format!("unknown shape '{other}'")),
        }
    }
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Per-node classification of a grid against a [`Shape`].
///
/// A node is `Interior` when it and all eight neighbors are inside the shape,
/// `Boundary` when it is inside and touches an interior node, and `Outside`
/// otherwise. Interior nodes therefore always carry full 3x3 stencils.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMask {
    grid: GridSpec,
    shape: Shape,
    classes: Vec<NodeClass>,
}

impl DomainMask {
    pub fn new(grid: GridSpec, shape: Shape) -> Self {
        let slack = 1e-9 * grid.h;
        let inside: Vec<bool> = (0..grid.len()).map(|idx| shape.contains(grid.point(idx), slack)).collect();
        let all_neighbors_inside = |i: usize, j: usize| {
            (-1..=1).all(|dj| (-1..=1).all(|di| grid.offset(i, j, di, dj).is_some_and(|n| inside[n])))
        };
        let mut classes = vec![NodeClass::Outside; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if all_neighbors_inside(i, j) {
                    classes[grid.index(i, j)] = NodeClass::Interior;
                }
            }
        }
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let idx = grid.index(i, j);
                if !inside[idx] || classes[idx] == NodeClass::Interior {
                    continue;
                }
                let touches = (-1..=1).any(|dj| {
                    (-1..=1).any(|di| grid.offset(i, j, di, dj).is_some_and(|n| classes[n] == NodeClass::Interior))
                });
                if touches {
                    classes[idx] = NodeClass::Boundary;
                }
            }
        }
        Self { grid, shape, classes }
    }

    pub fn rectangle(grid: GridSpec) -> Self {
        Self::new(grid, Shape::Rectangle)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        self.classes[idx]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        self.classes[idx] != NodeClass::Outside
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        self.classes[idx] == NodeClass::Interior
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes.len()).filter(move |&n| self.classes[n] == NodeClass::Interior)
    }

    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes.len()).filter(move |&n| self.classes[n] == NodeClass::Boundary)
    }

    /// Interior nodes whose eight neighbors are interior as well; the
    /// support of composed stencils (derivatives of derivatives).
    pub fn deep_interior_indices(&self) -> Vec<usize> {
        self.interior_at_depth(1)
    }

    /// Interior nodes whose `(2k+1) x (2k+1)` box is entirely interior.
    pub fn interior_at_depth(&self, k: usize) -> Vec<usize> {
        let g = &self.grid;
        let k = k as isize;
        self.interior_indices()
            .filter(|&n| {
                let (i, j) = g.ij(n);
                (-k..=k).all(|dj| {
                    (-k..=k).all(|di| g.offset(i, j, di, dj).is_some_and(|m| self.classes[m] == NodeClass::Interior))
                })
            })
            .collect()
    }
}

/// Grid-sampled real function; `NaN` marks `Outside` nodes.
#[derive(Clone, Debug)]
pub struct ScalarField {
    mask: Arc<DomainMask>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(mask: Arc<DomainMask>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mask.grid.len() {
            return Err(Error::Mismatch(format!("{} values for a grid of {} nodes", values.len(), mask.grid.len())));
        }
        for (idx, v) in values.iter_mut().enumerate() {
            if mask.is_active(idx) {
                if !v.is_finite() {
                    let (i, j) = mask.grid.ij(idx);
                    return Err(Error::InvalidInput(format!("non-finite value at active node ({i}, {j})")));
                }
            } else {
                *v = f64::NAN;
            }
        }
        Ok(Self { mask, values })
    }

    /// Samples `f` at every active node.
    pub fn from_fn(mask: Arc<DomainMask>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let grid = mask.grid;
        let values =
            (0..grid.len()).map(|idx| if mask.is_active(idx) { f(grid.point(idx)) } else { f64::NAN }).collect();
        Self { mask, values }
    }

    /// Like [`ScalarField::from_fn`] but fails on the first non-finite sample.
    pub fn try_from_fn(mask: Arc<DomainMask>, f: impl Fn([f64; 2]) -> Result<f64>) -> Result<Self> {
        let grid = mask.grid;
        let mut values = vec![f64::NAN; grid.len()];
        for (idx, v) in values.iter_mut().enumerate() {
            if mask.is_active(idx) {
                *v = f(grid.point(idx))?;
            }
        }
        Self::from_values(mask, values)
    }

    pub fn constant(mask: Arc<DomainMask>, c: f64) -> Self {
        Self::from_fn(mask, |_| c)
    }

    pub fn mask(&self) -> &Arc<DomainMask> {
        &self.mask
    }

    pub fn grid(&self) -> &GridSpec {
        &self.mask.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.mask.grid.index(i, j)]
    }

    /// New field on the same mask with `f` applied nodewise to active nodes.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(n, &v)| if self.mask.is_active(n) { f(v) } else { f64::NAN })
            .collect();
        Self { mask: self.mask.clone(), values }
    }

    /// Nodewise combination of two fields on the same mask.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_mask(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(n, (&a, &b))| if self.mask.is_active(n) { f(a, b) } else { f64::NAN })
            .collect();
        Ok(Self { mask: self.mask.clone(), values })
    }

    pub fn check_same_mask(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.mask, &other.mask) || *self.mask == *other.mask {
            Ok(())
        } else {
            Err(Error::Mismatch("fields live on different masks".into()))
        }
    }

    /// Max of `|f|` over nodes selected by `keep`.
    pub fn sup_norm_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        (0..self.values.len())
            .filter(|&n| self.mask.is_active(n) && keep(n))
            .map(|n| self.values[n].abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_where(|_| true)
    }

    pub fn interior_sup_norm(&self) -> f64 {
        self.sup_norm_where(|n| self.mask.is_interior(n))
    }

    /// Bilinear interpolation; `None` outside the grid or if a corner of
    /// the enclosing cell is `Outside`.
    pub fn sample(&self, x: [f64; 2]) -> Option<f64> {
        interp::bilinear(self, x)
    }
}
