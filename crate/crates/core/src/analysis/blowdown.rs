use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Surface;

/// Fixed annulus `1/m <= |x| <= m`, optionally cut to the sector
/// `|arg x - axis| <= half_angle` (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowdownWindow {
    pub m: f64,
    pub axis: f64,
    pub half_angle: Option<f64>,
    pub radial_samples: usize,
    pub angular_samples: usize,
}

impl BlowdownWindow {
    pub fn annulus(m: f64) -> Self {
        Self { m, axis: 0.0, half_angle: None, radial_samples: 64, angular_samples: 256 }
    }

    fn points(&self) -> Vec<[f64; 2]> {
        let (lo, hi) = (1.0 / self.m, self.m);
        let (t0, span, closed) = match self.half_angle {
            Some(a) => (self.axis - a, 2.0 * a, true),
            None => (0.0, std::f64::consts::TAU, false),
        };
        let nt = self.angular_samples.max(2);
        let nr = self.radial_samples.max(2);
        let mut pts = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            // geometric spacing resolves both ends of the annulus
            let r = lo * (hi / lo).powf(i as f64 / (nr - 1) as f64);
            for k in 0..nt {
                let frac = if closed { k as f64 / (nt - 1) as f64 } else { k as f64 / nt as f64 };
                let t = t0 + span * frac;
                pts.push([r * t.cos(), r * t.sin()]);
            }
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowdownSequence {
    pub scales: Vec<f64>,
    /// `sup |lambda u(x / lambda)|` on the window.
    pub sup_u: Vec<f64>,
    /// `sup |Du(x / lambda)|` on the window.
    pub sup_du: Vec<f64>,
    /// Set when a requested scale needed data the surface does not have;
    /// the sequence stops before that scale.
    pub truncated: bool,
}

impl BlowdownSequence {
    /// Both sup-norm sequences are non-increasing.
    pub fn monotone(&self) -> bool {
        let ok = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
        ok(&self.sup_u) && ok(&self.sup_du)
    }

    pub fn strictly_decreasing(&self) -> bool {
        let ok = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        ok(&self.sup_u) && ok(&self.sup_du)
    }
}

/// Rescalings `u_lambda(x) = lambda u(x / lambda)` sampled on `window`.
pub fn blowdown<S: Surface + ?Sized>(surface: &S, scales: &[f64], window: BlowdownWindow) -> Result<BlowdownSequence> {
    if !(window.m > 1.0) {
        return Err(Error::InvalidInput(format!("annulus parameter m = {} must exceed 1", window.m)));
    }
    if scales.is_empty() || scales.iter().any(|&l| !(l > 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("scales must be positive and strictly decreasing".into()));
    }
    let pts = window.points();
    let mut seq = BlowdownSequence { scales: Vec::new(), sup_u: Vec::new(), sup_du: Vec::new(), truncated: false };
    'scales: for &lambda in scales {
        let mut su: f64 = 0.0;
        let mut sd: f64 = 0.0;
        for x in &pts {
            let y = [x[0] / lambda, x[1] / lambda];
            let (Some(u), Some(p)) = (surface.height(y), surface.slope(y)) else {
                seq.truncated = true;
                break 'scales;
            };
            su = su.max((lambda * u).abs());
            sd = sd.max(p[0].hypot(p[1]));
        }
        seq.scales.push(lambda);
        seq.sup_u.push(su);
        seq.sup_du.push(sd);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::ExactSolution;

    #[test]
    fn plane_blows_down_to_zero() {
        let s = blowdown(&ExactSolution::Plane { c: 0.0 }, &[1.0, 0.5, 0.25], BlowdownWindow::annulus(2.0)).unwrap();
        assert_eq!(s.sup_u, vec![0.0; 3]);
        assert_eq!(s.sup_du, vec![0.0; 3]);
        assert!(!s.truncated && s.monotone());
    }

    #[test]
    fn constant_scales_linearly() {
        let s = blowdown(&ExactSolution::Plane { c: 2.0 }, &[1.0, 0.5], BlowdownWindow::annulus(2.0)).unwrap();
        assert_eq!(s.sup_u, vec![2.0, 1.0]);
    }

    #[test]
    fn truncates_where_data_ends() {
        // EXP_END exists only for x1 > ln c
        let end = ExactSolution::ExpEnd { c: 1.0, d: 0.0 };
        let w = BlowdownWindow {
            m: 2.0,
            axis: std::f64::consts::PI,
            half_angle: Some(0.5),
            radial_samples: 8,
            angular_samples: 16,
        };
        let s = blowdown(&end, &[1.0, 0.5, 0.25], w).unwrap();
        assert!(s.truncated && s.scales.is_empty());
    }

    #[test]
    fn rejects_bad_scales() {
        let p = ExactSolution::Plane { c: 0.0 };
        assert!(blowdown(&p, &[0.5, 1.0], BlowdownWindow::annulus(2.0)).is_err());
        assert!(blowdown(&p, &[1.0], BlowdownWindow::annulus(1.0)).is_err());
    }
}
