use std::sync::Arc;

use proptest::prelude::*;
use translab::barriers::ExactSolution;
use translab::grid::{DomainMask, GridSpec, ScalarField, Shape};
use translab::solver::{
    coefficients_at, linearize, newton_ellipticity, newton_from, newton_solve, q_subsolution_with_margin, residual,
    Flavor, NewtonSettings, TranslatorProblem,
};

fn rect(x: (f64, f64), y: (f64, f64), h: f64) -> Arc<DomainMask> {
    Arc::new(DomainMask::rectangle(GridSpec::covering(x, y, h).unwrap()))
}

fn sup_error(u: &ScalarField, sol: &ExactSolution) -> f64 {
    let g = u.grid();
    (0..g.len())
        .filter(|&n| u.mask().is_active(n))
        .map(|n| (u.get(n) - sol.value(g.point(n)).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn exact_end_recovered_at_second_order() {
    let end = ExactSolution::ExpEnd { c: 0.5, d: 0.0 };
    let err: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let data = end.sample(rect((1.0, 5.0), (-2.0, 2.0), h)).unwrap();
            let r = newton_solve(&TranslatorProblem::new(data), NewtonSettings::default()).unwrap();
            assert!(r.converged && r.final_residual() <= 1e-10);
            sup_error(&r.solution, &end)
        })
        .collect();
    for w in err.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 2.0).abs() <= 0.2, "{err:?}");
    }
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let m = Arc::new(DomainMask::new(
        GridSpec::covering((0.0, 6.0), (-3.0, 3.0), 0.1).unwrap(),
        Shape::Annulus { center: [3.0, 0.0], r_in: 0.8, r_out: 2.8 },
    ));
    let data = ScalarField::from_fn(m, |x| 0.3 * (x[1] - x[0]).sin());
    let problem = TranslatorProblem::new(data);
    let first = newton_solve(&problem, NewtonSettings::default()).unwrap();
    assert!(first.converged);
    assert!(residual(&first.solution).unwrap().sup_norm() <= 1e-10);
    let again = newton_from(&problem, first.solution.clone(), NewtonSettings::default()).unwrap();
    assert!(again.converged && again.iterations <= 1, "{} iterations", again.iterations);
}

#[test]
fn residual_history_decreases_strictly() {
    let data = ScalarField::from_fn(rect((0.0, 4.0), (-2.0, 2.0), 0.1), |x| (x[0] * x[1]).sin());
    let r = newton_solve(&TranslatorProblem::new(data), NewtonSettings::default()).unwrap();
    assert!(r.converged);
    assert!(r.residual_history.windows(2).all(|w| w[1] < w[0]), "{:?}", r.residual_history);
    assert_eq!(r.iterations + 1, r.residual_history.len());
}

#[test]
fn solutions_with_ordered_data_stay_ordered() {
    let m = rect((0.0, 4.0), (-2.0, 2.0), 0.1);
    let lo = ScalarField::from_fn(m.clone(), |x| 0.2 * x[0] * x[1]);
    let hi = lo.map(|v| v + 0.3);
    let s = NewtonSettings::default();
    let u1 = newton_solve(&TranslatorProblem::new(lo), s).unwrap().solution;
    let u2 = newton_solve(&TranslatorProblem::new(hi), s).unwrap().solution;
    // the equation is invariant under vertical translation
    let gap = u2.zip_map(&u1, |a, b| a - b).unwrap();
    for idx in 0..gap.grid().len() {
        if gap.mask().is_active(idx) {
            assert!((gap.get(idx) - 0.3).abs() < 1e-8);
        }
    }
}

#[test]
fn gradient_l_ellipticity_on_a_solution() {
    let data = ScalarField::from_fn(rect((0.0, 3.0), (-1.5, 1.5), 0.1), |x| x[0] * x[1] - 0.5 * x[1] * x[1]);
    let r = newton_solve(&TranslatorProblem::new(data), NewtonSettings::default()).unwrap();
    let e = linearize(&r.solution, Flavor::GradientL).unwrap().ellipticity();
    assert!(e.holds && e.lower >= 1.0 - 1e-12 && e.upper_ratio <= 1.0 + 1e-12, "{e:?}");
    let q = q_subsolution_with_margin(&r.solution, 0.5).unwrap();
    assert!(q.min_value >= -0.1 && q.closed_form_error <= 0.1, "{q:?}");
}

fn eig_min_max(a: [[f64; 2]; 2]) -> (f64, f64) {
    let m = 0.5 * (a[0][0] + a[1][1]);
    let d = (0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[1][0]).sqrt();
    (m - d, m + d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn newton_coefficients_are_uniformly_elliptic(r in -3.0f64..3.0, t in 0.0f64..std::f64::consts::TAU, s in 0.0f64..std::f64::consts::TAU) {
        let mag = 10f64.powf(r);
        let p = [mag * t.cos(), mag * t.sin()];
        prop_assert!(newton_ellipticity(p, [s.cos(), s.sin()]) >= 1.0 - 1e-12);
    }

    #[test]
    fn gradient_l_eigenvalues_are_bracketed(p in prop::array::uniform2(-30.0f64..30.0)) {
        let (a, _) = coefficients_at(Flavor::GradientL, p, [[0.0; 2]; 2]);
        let q = p[0] * p[0] + p[1] * p[1];
        let (lo, hi) = eig_min_max(a);
        prop_assert!(lo >= 1.0 - 1e-12 * (1.0 + q));
        prop_assert!(hi <= (1.0 + 2.0 * q) * (1.0 + 1e-12));
    }

    #[test]
    fn quasilinear_coefficients_have_w2_over_1_spectrum(p in prop::array::uniform2(-30.0f64..30.0)) {
        // (1+|p|^2) I - p p^T has eigenvalues 1 and 1 + |p|^2
        let (a, b) = coefficients_at(Flavor::QuasilinearQ, p, [[0.0; 2]; 2]);
        let q = p[0] * p[0] + p[1] * p[1];
        let (lo, hi) = eig_min_max(a);
        prop_assert!((lo - 1.0).abs() <= 1e-10 * (1.0 + q));
        prop_assert!((hi - (1.0 + q)).abs() <= 1e-10 * (1.0 + q));
        prop_assert!((b[0] - (1.0 + q)).abs() <= 1e-12 * (1.0 + q) && b[1] == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_smooth_data_converges(a in -0.5f64..0.5, b in -0.5f64..0.5, c in -1.0f64..1.0) {
        let data = ScalarField::from_fn(rect((0.0, 3.0), (-1.5, 1.5), 0.15), |x| a * x[0] * x[1] + b * x[1] * x[1] + c);
        let r = newton_solve(&TranslatorProblem::new(data), NewtonSettings::default()).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.iterations <= 10);
    }
}
