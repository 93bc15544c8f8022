//! Closed-form translators over the plane `span(e1, e2)` moving along `e1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::grid::{DomainMask, ScalarField};

/// Exact solutions of `div(Du/W) = -D1 u / W`.
///
/// `ExpEnd { c, d }` is `u = d - asin(c e^{-x1})` on `{x1 > ln c}`; it is the
/// one-dimensional family with `u'/W = c e^{-x1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExactSolution {
    Plane { c: f64 },
    TiltedPlane { a: f64, b: f64 },
    ExpEnd { c: f64, d: f64 },
}

impl ExactSolution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ExactSolution::Plane { c } if c.is_finite() => Ok(()),
            ExactSolution::TiltedPlane { a, b } if a.is_finite() && b.is_finite() => Ok(()),
            ExactSolution::ExpEnd { c, d } if c > 0.0 && c.is_finite() && d.is_finite() => Ok(()),
            other => Err(Error::InvalidInput(format!("invalid exact solution {other:?}"))),
        }
    }

    /// Left edge `ln c` of the exponential end's half-plane.
    pub fn x1_lower_bound(&self) -> Option<f64> {
        match *self {
            ExactSolution::ExpEnd { c, .. } => Some(c.ln()),
            _ => None,
        }
    }

    fn exp_arg(c: f64, x1: f64) -> Option<f64> {
        let y = c * (-x1).exp();
        (y < 1.0).then_some(y)
    }

    pub fn value(&self, x: [f64; 2]) -> Option<f64> {
        match *self {
            ExactSolution::Plane { c } => Some(c),
            ExactSolution::TiltedPlane { a, b } => Some(a * x[1] + b),
            ExactSolution::ExpEnd { c, d } => Self::exp_arg(c, x[0]).map(|y| d - y.asin()),
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        match *self {
            ExactSolution::Plane { .. } => Some([0.0, 0.0]),
            ExactSolution::TiltedPlane { a, .. } => Some([0.0, a]),
            ExactSolution::ExpEnd { c, .. } => Self::exp_arg(c, x[0]).map(|y| [y / (1.0 - y * y).sqrt(), 0.0]),
        }
    }

    pub fn hessian(&self, x: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        match *self {
            ExactSolution::Plane { .. } | ExactSolution::TiltedPlane { .. } => Some([[0.0; 2]; 2]),
            ExactSolution::ExpEnd { c, .. } => Self::exp_arg(c, x[0]).map(|y| {
                let s = 1.0 - y * y;
                [[-y / (s * s.sqrt()), 0.0], [0.0, 0.0]]
            }),
        }
    }

    /// Closed-form mean curvature `div(Du/W)`.
    pub fn mean_curvature(&self, x: [f64; 2]) -> Option<f64> {
        match *self {
            ExactSolution::Plane { .. } | ExactSolution::TiltedPlane { .. } => Some(0.0),
            ExactSolution::ExpEnd { c, .. } => Self::exp_arg(c, x[0]).map(|y| -y),
        }
    }

    /// Samples the solution on every active node of `mask`.
    pub fn sample(&self, mask: Arc<DomainMask>) -> Result<ScalarField> {
        self.validate()?;
        let lower = self.x1_lower_bound();
        ScalarField::try_from_fn(mask, |x| {
            if let Some(l) = lower {
                if x[0] <= l {
                    return Err(Error::Domain(format!(
                        "node at x1 = {} is outside the end's half-plane x1 > {l}",
                        x[0]
                    )));
                }
            }
            self.value(x).ok_or_else(|| Error::Domain(format!("exact solution undefined at {x:?}")))
        })
    }
}

impl Surface for ExactSolution {
    fn height(&self, x: [f64; 2]) -> Option<f64> {
        self.value(x)
    }

    fn slope(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        self.gradient(x)
    }

    fn second_derivatives(&self, x: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        self.hessian(x)
    }
}

/// Samples `sol` on `mask`; alias kept for symmetry with barrier evaluation.
pub fn eval_exact(sol: &ExactSolution, mask: Arc<DomainMask>) -> Result<ScalarField> {
    sol.sample(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn series_asin(y: f64) -> f64 {
        // asin y = sum (2k)! / (4^k (k!)^2 (2k+1)) y^{2k+1}
        let mut sum = 0.0;
        let mut coef = 1.0;
        let mut pow = y;
        for k in 0..60 {
            sum += coef * pow / (2 * k + 1) as f64;
            coef *= (2 * k + 1) as f64 / (2 * k + 2) as f64;
            pow *= y * y;
        }
        sum
    }

    #[test]
    fn exp_end_value_matches_series_oracle() {
        let sol = ExactSolution::ExpEnd { c: 0.5, d: 0.0 };
        let v = sol.value([2.0, 0.3]).unwrap();
        let oracle = -series_asin(0.5 * (-2.0f64).exp());
        assert!((v - oracle).abs() < 1e-15);
        assert!((v + 0.067_719_3).abs() < 1e-7, "{v}");
    }

    #[test]
    fn plane_samples_constant() {
        let g = GridSpec::covering((0.0, 1.0), (0.0, 1.0), 0.25).unwrap();
        let f = ExactSolution::Plane { c: 3.0 }.sample(Arc::new(DomainMask::rectangle(g))).unwrap();
        assert!(f.values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn exp_end_rejects_grids_left_of_its_domain() {
        let g = GridSpec::covering((-1.0, 1.0), (0.0, 1.0), 0.25).unwrap();
        let r = ExactSolution::ExpEnd { c: 0.5, d: 0.0 }.sample(Arc::new(DomainMask::rectangle(g)));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn exp_end_flux_identity() {
        // u'/W = c e^{-x1} and H = -c e^{-x1}
        let c = 0.5;
        let sol = ExactSolution::ExpEnd { c, d: 1.0 };
        for x1 in [0.0, 0.5, 2.0, 7.0] {
            let p = sol.gradient([x1, 0.0]).unwrap()[0];
            let w = (1.0 + p * p).sqrt();
            assert!((p / w - c * (-x1).exp()).abs() < 1e-15);
            let q = sol.hessian([x1, 0.0]).unwrap()[0][0];
            let h = q / (w * w * w);
            assert!((h - sol.mean_curvature([x1, 0.0]).unwrap()).abs() < 1e-14);
        }
    }
}
