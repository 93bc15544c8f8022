use super::ScalarField;
use crate::error::{Error, Result};

/// Result of an area quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Set when no cell of the region was fully inside the mask.
    pub empty: bool,
}

/// `int f * weight dx` over the active region of `f`'s mask.
///
/// Cells whose four corners are active contribute `h^2` times the corner
/// average, which is the composite trapezoid rule on rectangles and a
/// staircase approximation on curved masks.
pub fn integrate(f: &ScalarField, weight: Option<&ScalarField>) -> Result<Quadrature> {
    integrate_where(f, weight, |_| true)
}

/// As [`integrate`], restricted to cells whose corners all satisfy `keep`.
pub fn integrate_where(
    f: &ScalarField,
    weight: Option<&ScalarField>,
    keep: impl Fn(usize) -> bool,
) -> Result<Quadrature> {
    if let Some(w) = weight {
        f.check_same_mask(w)?;
    }
    let grid = f.grid();
    let mask = f.mask();
    let h2 = grid.h * grid.h;
    let val = |n: usize| f.get(n) * weight.map_or(1.0, |w| w.get(n));
    let mut sum = 0.0;
    let mut cells = 0usize;
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let corners = [grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
            if corners.iter().all(|&n| mask.is_active(n) && keep(n)) {
                sum += 0.25 * corners.iter().map(|&n| val(n)).sum::<f64>();
                cells += 1;
            }
        }
    }
    Ok(Quadrature { value: sum * h2, empty: cells == 0 })
}

/// Discretized curve in space.
#[derive(Clone, Debug)]
pub struct Curve {
    points: Vec<[f64; 3]>,
    closed: bool,
}

impl Curve {
    pub const MIN_SAMPLES: usize = 16;

    /// Closed curve through `points`; the last point connects back to the
    /// first. A repeated endpoint is dropped.
    pub fn closed(mut points: Vec<[f64; 3]>) -> Self {
        if points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        Self { points, closed: true }
    }

    pub fn open(points: Vec<[f64; 3]>) -> Self {
        Self { points, closed: false }
    }

    /// Closed planar curve `t -> (x(t), y(t), 0)` sampled at `n` uniform
    /// parameter values on `[0, 1)`.
    pub fn planar_from_fn(n: usize, f: impl Fn(f64) -> [f64; 2]) -> Self {
        let points = (0..n)
            .map(|k| {
                let p = f(k as f64 / n as f64);
                [p[0], p[1], 0.0]
            })
            .collect();
        Self { points, closed: true }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> Result<f64> {
        line_integral(&vec![1.0; self.points.len()], self)
    }
}

/// Arc-length weighted trapezoid sum of `values` (one per curve sample)
/// around a closed curve.
pub fn line_integral(values: &[f64], curve: &Curve) -> Result<f64> {
    if !curve.closed {
        return Err(Error::OpenCurve);
    }
    let n = curve.points.len();
    if n < Curve::MIN_SAMPLES {
        return Err(Error::UnderResolved { got: n, need: Curve::MIN_SAMPLES });
    }
    if values.len() != n {
        return Err(Error::Mismatch(format!("{} values for {n} curve samples", values.len())));
    }
    let mut sum = 0.0;
    for k in 0..n {
        let a = curve.points[k];
        let b = curve.points[(k + 1) % n];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
        sum += 0.5 * (values[k] + values[(k + 1) % n]) * len;
    }
    Ok(sum)
}
