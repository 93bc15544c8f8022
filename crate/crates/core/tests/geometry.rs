use std::sync::Arc;

use proptest::prelude::*;
use translab::barriers::ExactSolution;
use translab::geometry::{area_ratio, point_geometry, shape_report, total_curvature, Direction};
use translab::grid::{DomainMask, GridSpec, ScalarField};

fn rect(x: (f64, f64), y: (f64, f64), h: f64) -> Arc<DomainMask> {
    Arc::new(DomainMask::rectangle(GridSpec::covering(x, y, h).unwrap()))
}

fn exact_strategy() -> impl Strategy<Value = ExactSolution> {
    prop_oneof![
        (-5.0f64..5.0).prop_map(|c| ExactSolution::Plane { c }),
        (-3.0f64..3.0, -5.0f64..5.0).prop_map(|(a, b)| ExactSolution::TiltedPlane { a, b }),
        (0.05f64..2.0, -1.0f64..1.0).prop_map(|(c, d)| ExactSolution::ExpEnd { c, d }),
    ]
}

#[test]
fn translator_defect_converges_at_second_order() {
    let end = ExactSolution::ExpEnd { c: 0.8, d: 0.0 };
    let defect = |h: f64| {
        let u = end.sample(rect((1.0, 5.0), (-1.0, 1.0), h)).unwrap();
        shape_report(&u, Direction::e1()).unwrap().translator_defect().sup_norm()
    };
    let e: Vec<f64> = [0.05, 0.025, 0.0125].iter().map(|&h| defect(h)).collect();
    for w in e.windows(2) {
        let p = (w[0] / w[1]).log2();
        assert!((p - 2.0).abs() <= 0.2, "{e:?}");
    }
}

#[test]
fn mean_curvature_of_exact_end_matches_closed_form() {
    let end = ExactSolution::ExpEnd { c: 0.5, d: 0.3 };
    let h = 0.05;
    let u = end.sample(rect((1.0, 4.0), (-1.0, 1.0), h)).unwrap();
    let rep = shape_report(&u, Direction::e1()).unwrap();
    let grid = *u.grid();
    for idx in u.mask().interior_indices() {
        let want = end.mean_curvature(grid.point(idx)).unwrap();
        assert!((rep.mean_curvature.get(idx) - want).abs() < 10.0 * h * h);
        assert!((rep.mean_curvature_div.get(idx) - want).abs() < 10.0 * h * h);
    }
}

#[test]
fn plane_area_ratio_tends_to_pi() {
    let u = ScalarField::constant(rect((-4.0, 4.0), (-4.0, 4.0), 0.02), 1.0);
    let q = area_ratio(&u, [0.0, 0.0, 1.0], 3.0).unwrap();
    let pi = std::f64::consts::PI;
    // corner masking drops a boundary layer of width at most sqrt(2) h
    assert!(q.value <= pi && q.value >= pi * (1.0 - 2.0 * 2f64.sqrt() * 0.02 / 3.0), "{}", q.value);
}

#[test]
fn tilted_plane_area_ratio_is_pi() {
    // graph of a x2 meets a ball centred on it in a flat disk of radius r
    let u = ScalarField::from_fn(rect((-4.0, 4.0), (-4.0, 4.0), 0.02), |x| 0.5 * x[1]);
    let q = area_ratio(&u, [0.0, 0.0, 0.0], 2.5).unwrap();
    assert!((q.value - std::f64::consts::PI).abs() < 0.05, "{}", q.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pointwise_inequalities_hold(p in prop::array::uniform2(-50.0f64..50.0), h in prop::array::uniform3(-50.0f64..50.0)) {
        let g = point_geometry(p, [[h[0], h[1]], [h[1], h[2]]]);
        prop_assert!(g.w >= 1.0);
        let n2: f64 = g.normal.iter().map(|c| c * c).sum();
        prop_assert!((n2 - 1.0).abs() < 1e-12);
        prop_assert!(g.mean_curvature * g.mean_curvature <= 2.0 * g.norm_a2);
        prop_assert!(g.gauss_curvature <= g.norm_a2 / 2.0);
        prop_assert!(g.norm_a2 >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_solutions_satisfy_the_translator_identity(sol in exact_strategy()) {
        let h = 0.05;
        let x0 = sol.x1_lower_bound().map_or(0.0, |l| l.max(0.0) + 1.0);
        let u = sol.sample(rect((x0, x0 + 3.0), (-1.0, 1.0), h)).unwrap();
        let rep = shape_report(&u, Direction::e1()).unwrap();
        prop_assert!(rep.translator_defect().sup_norm() <= 10.0 * h * h);
        for idx in 0..u.grid().len() {
            prop_assert!(rep.w.get(idx) >= 1.0);
            let hm = rep.mean_curvature.get(idx);
            prop_assert!(hm * hm <= 2.0 * rep.norm_a2.get(idx));
        }
    }

    #[test]
    fn total_curvature_ignores_vertical_translation(c in -100.0f64..100.0, a in -1.0f64..1.0) {
        let m = rect((0.0, 2.0), (-1.0, 1.0), 0.1);
        let u = ScalarField::from_fn(m, |x| a * (x[0] * x[1]).sin() + 0.2 * x[0] * x[0]);
        let shifted = u.map(|v| v + c);
        let t0 = total_curvature(&shape_report(&u, Direction::e1()).unwrap()).unwrap().value;
        let t1 = total_curvature(&shape_report(&shifted, Direction::e1()).unwrap()).unwrap().value;
        prop_assert!((t0 - t1).abs() <= 1e-9 * (1.0 + t0.abs()), "{} vs {}", t0, t1);
    }

    #[test]
    fn planes_have_zero_total_curvature(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let u = ScalarField::from_fn(rect((0.0, 2.0), (-1.0, 1.0), 0.1), |x| a * x[0] + b * x[1] + c);
        let t = total_curvature(&shape_report(&u, Direction::e1()).unwrap()).unwrap().value;
        prop_assert!(t.abs() < 1e-20);
    }
}
