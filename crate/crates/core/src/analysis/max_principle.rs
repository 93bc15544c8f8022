//! Discrete maximum-principle audits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, NodeClass, ScalarField};
use crate::solver::SolveReport;

/// Tolerance factor: audits allow `TOL_FACTOR * h^2`.
pub const TOL_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub interior_min: f64,
    pub interior_max: f64,
    pub boundary_min: f64,
    pub boundary_max: f64,
}

impl Extremes {
    /// Largest amount by which an interior extreme exceeds the boundary range.
    pub fn excess(&self) -> f64 {
        (self.interior_max - self.boundary_max).max(self.boundary_min - self.interior_min).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakGradientAudit {
    pub d1: Extremes,
    pub d2: Extremes,
    pub excess: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn extremes(f: &ScalarField) -> Result<Extremes> {
    let mask = f.mask();
    let mut e = Extremes {
        interior_min: f64::INFINITY,
        interior_max: f64::NEG_INFINITY,
        boundary_min: f64::INFINITY,
        boundary_max: f64::NEG_INFINITY,
    };
    for (idx, &v) in f.values().iter().enumerate() {
        match mask.class(idx) {
            NodeClass::Interior => {
                e.interior_min = e.interior_min.min(v);
                e.interior_max = e.interior_max.max(v);
            }
            NodeClass::Boundary => {
                e.boundary_min = e.boundary_min.min(v);
                e.boundary_max = e.boundary_max.max(v);
            }
            NodeClass::Outside => {}
        }
    }
    if !e.interior_min.is_finite() || !e.boundary_min.is_finite() {
        return Err(Error::InsufficientData("audit needs interior and boundary nodes".into()));
    }
    Ok(e)
}

/// Each gradient component attains its extremes on the boundary.
pub fn weak_gradient_audit(report: &SolveReport) -> Result<WeakGradientAudit> {
    if !report.converged {
        return Err(Error::InvalidInput("weak gradient audit requires a converged solution".into()));
    }
    let u = &report.solution;
    let g = gradient(u)?;
    let d1 = extremes(&g.d1)?;
    let d2 = extremes(&g.d2)?;
    let h = u.grid().h;
    let tolerance = TOL_FACTOR * h * h;
    let excess = d1.excess().max(d2.excess());
    Ok(WeakGradientAudit { d1, d2, excess, tolerance, pass: excess <= tolerance })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonAudit {
    /// `min (u2 - u1)` over boundary nodes; must be `>= 0`.
    pub boundary_gap: f64,
    /// `min (u2 - u1)` over all active nodes.
    pub min_gap: f64,
    pub min_gap_at: [f64; 2],
    /// Interior nodes with `|u2 - u1| <= tolerance` while the solutions differ
    /// elsewhere by more than the tolerance.
    pub near_touching: Vec<[f64; 2]>,
    pub identical: bool,
    pub tolerance: f64,
    pub pass: bool,
}

/// `u1 <= u2 + tol` everywhere, given `u1 <= u2` on the boundary.
pub fn comparison_audit(u1: &ScalarField, u2: &ScalarField) -> Result<ComparisonAudit> {
    u1.check_same_mask(u2)?;
    let mask = u1.mask();
    let h = u1.grid().h;
    let tolerance = TOL_FACTOR * h * h;
    let mut boundary_gap = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut min_gap_at = [f64::NAN; 2];
    let mut max_abs: f64 = 0.0;
    for idx in 0..u1.values().len() {
        if !mask.is_active(idx) {
            continue;
        }
        let gap = u2.get(idx) - u1.get(idx);
        max_abs = max_abs.max(gap.abs());
        if mask.class(idx) == NodeClass::Boundary {
            boundary_gap = boundary_gap.min(gap);
        }
        if gap < min_gap {
            min_gap = gap;
            min_gap_at = u1.grid().point(idx);
        }
    }
    if boundary_gap < 0.0 {
        return Err(Error::InvalidInput(format!(
            "boundary data are not ordered: min (u2 - u1) = {boundary_gap:e} on the boundary"
        )));
    }
    let identical = max_abs <= tolerance;
    let near_touching = if identical {
        Vec::new()
    } else {
        mask.interior_indices()
            .filter(|&i| (u2.get(i) - u1.get(i)).abs() <= tolerance)
            .map(|i| u1.grid().point(i))
            .collect()
    };
    Ok(ComparisonAudit {
        boundary_gap,
        min_gap,
        min_gap_at,
        near_touching,
        identical,
        tolerance,
        pass: min_gap >= -tolerance,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{DomainMask, GridSpec};
    use crate::solver::{newton_solve, NewtonSettings, TranslatorProblem};

    fn mask() -> Arc<DomainMask> {
        Arc::new(DomainMask::rectangle(GridSpec::covering((0.0, 2.0), (-1.0, 1.0), 0.1).unwrap()))
    }

    #[test]
    fn weak_gradient_on_zero_solution() {
        let p = TranslatorProblem::new(ScalarField::constant(mask(), 0.0));
        let r = newton_solve(&p, NewtonSettings::default()).unwrap();
        let a = weak_gradient_audit(&r).unwrap();
        assert!(a.pass && a.excess == 0.0);
    }

    #[test]
    fn unconverged_report_is_rejected() {
        let p = TranslatorProblem::new(ScalarField::from_fn(mask(), |x| x[1] * x[1]));
        let s = NewtonSettings { max_iter: 0, ..NewtonSettings::default() };
        let r = newton_solve(&p, s).unwrap();
        assert!(!r.converged);
        assert!(matches!(weak_gradient_audit(&r), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn comparison_detects_violation_and_disorder() {
        let m = mask();
        let lo = ScalarField::constant(m.clone(), 0.0);
        let hi = ScalarField::constant(m.clone(), 1.0);
        let a = comparison_audit(&lo, &hi).unwrap();
        assert!(a.pass && a.near_touching.is_empty() && (a.min_gap - 1.0).abs() < 1e-15);
        assert!(comparison_audit(&hi, &lo).is_err());
        // ordered on the boundary, crossing inside
        let bump = ScalarField::from_fn(m.clone(), |x| {
            if m.grid().locate(x).is_some() && (x[0] - 1.0).abs() < 0.3 && x[1].abs() < 0.3 {
                2.0
            } else {
                0.0
            }
        });
        let a = comparison_audit(&bump, &hi).unwrap();
        assert!(!a.pass && a.min_gap < -0.5);
    }
}
