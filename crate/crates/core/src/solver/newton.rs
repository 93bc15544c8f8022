//! Damped Newton iteration for the Dirichlet problem
//! `div(Du/W) + D1 u / W = 0` with data on `Boundary` nodes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::flux;
use super::sparse::{self, CsrMatrix, GmresSettings};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::grid::{DomainMask, NodeClass, ScalarField};

#[derive(Clone, Debug)]
pub struct TranslatorProblem {
    pub mask: Arc<DomainMask>,
    /// Only the `Boundary` values are read.
    pub boundary: ScalarField,
    pub direction: Direction,
}

impl TranslatorProblem {
    pub fn new(boundary: ScalarField) -> Self {
        Self { mask: boundary.mask().clone(), boundary, direction: Direction::e1() }
    }

    fn validate(&self) -> Result<()> {
        if self.direction != Direction::e1() {
            return Err(Error::InvalidInput("the solver translates along e1 only".into()));
        }
        if !Arc::ptr_eq(&self.mask, self.boundary.mask()) && *self.mask != **self.boundary.mask() {
            return Err(Error::Mismatch("boundary data lives on a different mask".into()));
        }
        if self.mask.count(NodeClass::Interior) == 0 {
            return Err(Error::InvalidGrid("mask has no interior nodes".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Step halving on residual increase.
    pub damping: bool,
    pub linear_tol: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, damping: true, linear_tol: 1e-10 }
    }
}

/// Smallest accepted damping factor.
pub const DAMPING_FLOOR: f64 = 1.0 / 256.0;

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: ScalarField,
    /// Sup-norm residual of the initial iterate and of every accepted step.
    pub residual_history: Vec<f64>,
    /// Accepted Newton updates.
    pub iterations: usize,
    pub converged: bool,
    pub step_sizes: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub settings: NewtonSettings,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history starts with the initial residual")
    }
}

/// Discrete translator residual; zero on `Boundary` nodes.
pub fn residual(u: &ScalarField) -> Result<ScalarField> {
    let grid = *u.grid();
    let mut out = vec![f64::NAN; grid.len()];
    for idx in 0..grid.len() {
        match u.mask().class(idx) {
            NodeClass::Outside => {}
            NodeClass::Boundary => out[idx] = 0.0,
            NodeClass::Interior => {
                let (i, j) = grid.ij(idx);
                let b = flux::gather(u.values(), &grid, i, j).ok_or(Error::StencilUnavailable {
                    i,
                    j,
                    reason: "interior node without a full 3x3 block",
                })?;
                out[idx] = flux::residual(&b, grid.h);
            }
        }
    }
    ScalarField::from_values(u.mask().clone(), out)
}

fn sup_residual(values: &[f64], mask: &DomainMask) -> f64 {
    let grid = mask.grid();
    mask.interior_indices()
        .map(|idx| {
            let (i, j) = grid.ij(idx);
            let b = flux::gather(values, grid, i, j).expect("interior nodes carry full blocks");
            flux::residual(&b, grid.h).abs()
        })
        .fold(0.0, f64::max)
}

/// Unknown numbering of the interior nodes.
fn numbering(mask: &DomainMask) -> (Vec<usize>, Vec<usize>) {
    let mut id = vec![usize::MAX; mask.grid().len()];
    let nodes: Vec<usize> = mask.interior_indices().collect();
    for (k, &n) in nodes.iter().enumerate() {
        id[n] = k;
    }
    (nodes, id)
}

/// Five-point harmonic extension of the `Boundary` values of `data`.
pub fn harmonic_extension(data: &ScalarField) -> Result<ScalarField> {
    let mask = data.mask().clone();
    let grid = *mask.grid();
    let (nodes, id) = numbering(&mask);
    let mut rows = Vec::with_capacity(nodes.len());
    let mut rhs = vec![0.0; nodes.len()];
    for (k, &n) in nodes.iter().enumerate() {
        let (i, j) = grid.ij(n);
        let mut row = vec![(k, 4.0)];
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let m = grid.offset(i, j, di, dj).expect("interior neighbors exist");
            if id[m] != usize::MAX {
                row.push((id[m], -1.0));
            } else {
                rhs[k] += data.get(m);
            }
        }
        rows.push(row);
    }
    let a = CsrMatrix::from_rows(rows);
    let (x, _) = sparse::solve(&a, &rhs, GmresSettings { rel_tol: 1e-12, ..GmresSettings::default() })?;
    let mut values = data.values().to_vec();
    for (k, &n) in nodes.iter().enumerate() {
        values[n] = x[k];
    }
    ScalarField::from_values(mask, values)
}

/// Solves from the harmonic extension of the boundary data.
pub fn newton_solve(problem: &TranslatorProblem, settings: NewtonSettings) -> Result<SolveReport> {
    problem.validate()?;
    let start = harmonic_extension(&problem.boundary)?;
    newton_from(problem, start, settings)
}

/// Solves from `start`, whose `Boundary` values are replaced by the data.
pub fn newton_from(problem: &TranslatorProblem, start: ScalarField, settings: NewtonSettings) -> Result<SolveReport> {
    problem.validate()?;
    start.check_same_mask(&problem.boundary)?;
    let mask = problem.mask.clone();
    let grid = *mask.grid();
    let (nodes, id) = numbering(&mask);
    let mut u = start.values().to_vec();
    for n in mask.boundary_indices() {
        u[n] = problem.boundary.get(n);
    }
    let mut res = sup_residual(&u, &mask);
    let mut report = SolveReport {
        solution: start,
        residual_history: vec![res],
        iterations: 0,
        converged: res <= settings.tol,
        step_sizes: Vec::new(),
        linear_iterations: Vec::new(),
        settings,
    };
    let linear = GmresSettings { rel_tol: settings.linear_tol, ..GmresSettings::default() };
    while !report.converged && report.iterations < settings.max_iter {
        let mut rows = Vec::with_capacity(nodes.len());
        let mut rhs = vec![0.0; nodes.len()];
        for (k, &n) in nodes.iter().enumerate() {
            let (i, j) = grid.ij(n);
            let b = flux::gather(&u, &grid, i, j).expect("interior nodes carry full blocks");
            let (r, jac) = flux::residual_jacobian(&b, grid.h);
            rhs[k] = -r;
            let mut row = Vec::with_capacity(9);
            for (a, col) in jac.iter().enumerate() {
                for (c, &v) in col.iter().enumerate() {
                    let m = grid.offset(i, j, a as isize - 1, c as isize - 1).expect("in grid");
                    if id[m] != usize::MAX && v != 0.0 {
                        row.push((id[m], v));
                    }
                }
            }
            rows.push(row);
        }
        let jm = CsrMatrix::from_rows(rows);
        let (delta, outcome) = sparse::solve(&jm, &rhs, linear)?;
        report.linear_iterations.push(outcome.iterations);

        let mut lambda = 1.0;
        let mut trial = u.clone();
        let accepted = loop {
            for (k, &n) in nodes.iter().enumerate() {
                trial[n] = u[n] + lambda * delta[k];
            }
            let r = sup_residual(&trial, &mask);
            if r < res {
                break Some(r);
            }
            if !settings.damping || lambda <= DAMPING_FLOOR {
                break None;
            }
            lambda *= 0.5;
        };
        match accepted {
            Some(r) => {
                std::mem::swap(&mut u, &mut trial);
                res = r;
                report.iterations += 1;
                report.residual_history.push(r);
                report.step_sizes.push(lambda);
                report.converged = r <= settings.tol;
            }
            None => break,
        }
    }
    report.solution = ScalarField::from_values(mask, u)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::ExactSolution;
    use crate::grid::{GridSpec, Shape};

    fn rect(x: (f64, f64), y: (f64, f64), h: f64) -> Arc<DomainMask> {
        Arc::new(DomainMask::rectangle(GridSpec::covering(x, y, h).unwrap()))
    }

    #[test]
    fn planes_have_zero_residual() {
        let m = rect((0.0, 1.0), (0.0, 1.0), 0.1);
        assert_eq!(residual(&ScalarField::constant(m.clone(), 2.0)).unwrap().sup_norm(), 0.0);
        let t = ScalarField::from_fn(m, |x| 0.7 * x[1] - 0.2);
        assert!(residual(&t).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let m = rect((0.0, 1.0), (0.0, 1.0), 0.1);
        let rep =
            newton_solve(&TranslatorProblem::new(ScalarField::constant(m, 0.0)), NewtonSettings::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 1);
        assert_eq!(rep.solution.sup_norm(), 0.0);
    }

    #[test]
    fn recovers_exact_end() {
        let h = 0.1;
        let m = rect((1.0, 4.0), (-1.0, 1.0), h);
        let sol = ExactSolution::ExpEnd { c: 0.5, d: 0.0 };
        let exact = sol.sample(m).unwrap();
        let rep = newton_solve(&TranslatorProblem::new(exact.clone()), NewtonSettings::default()).unwrap();
        assert!(rep.converged && rep.iterations <= 10, "{:?}", rep.residual_history);
        assert!(rep.final_residual() <= 1e-10);
        let err = rep.solution.zip_map(&exact, |a, b| a - b).unwrap().sup_norm();
        assert!(err < h * h, "{err}");
        for w in rep.residual_history.windows(2) {
            assert!(w[1] < w[0]);
        }
        let again =
            newton_from(&TranslatorProblem::new(exact), rep.solution.clone(), NewtonSettings::default()).unwrap();
        assert!(again.converged && again.iterations <= 1);
    }

    #[test]
    fn annulus_bump_converges() {
        let g = GridSpec::covering((-2.2, 2.2), (-2.2, 2.2), 0.1).unwrap();
        let m = Arc::new(DomainMask::new(g, Shape::Annulus { center: [0.0, 0.0], r_in: 0.8, r_out: 2.0 }));
        let data = ScalarField::from_fn(m, |x| {
            if x[0].hypot(x[1]) > 1.5 {
                0.2 * (-(x[1] - 1.0).powi(2) * 4.0).exp() * x[0].max(0.0)
            } else {
                0.0
            }
        });
        let rep = newton_solve(&TranslatorProblem::new(data), NewtonSettings::default()).unwrap();
        assert!(rep.converged);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let m = rect((0.0, 2.0), (0.0, 2.0), 0.1);
        let data = ScalarField::from_fn(m, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let rep =
            newton_solve(&TranslatorProblem::new(data), NewtonSettings { max_iter: 1, ..Default::default() }).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 1);
    }
}
