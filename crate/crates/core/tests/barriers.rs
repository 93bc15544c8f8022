use std::sync::Arc;

use proptest::prelude::*;
use translab::barriers::bessel::{k0, k0_prime, k0_scaled, k0_second, k1};
use translab::barriers::{
    comparison_check, composite_recipe, eval_barrier, scan_r0, supersolution_check, BarrierSpec, ExactSolution,
    Operator, ScanOperator,
};
use translab::grid::{gradient, DomainMask, GridSpec, ScalarField, Shape};

/// `I0(x)`, `I1(x)` by their power series.
fn bessel_i01(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut s0, mut s1) = (t0, t1);
    for k in 1..200 {
        let k = k as f64;
        t0 *= y / (k * k);
        t1 *= y / (k * (k + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 < 1e-18 * s0 {
            break;
        }
    }
    (s0, s1)
}

#[test]
fn wronskian_with_series_i0_i1() {
    // I0 K1 + I1 K0 = 1/x
    for k in 0..40 {
        let x = 0.01 * 1.18f64.powi(k);
        let (i0, i1) = bessel_i01(x);
        let w = i0 * k1(x).unwrap() + i1 * k0(x).unwrap();
        assert!((w * x - 1.0).abs() < 1e-12, "x = {x}: {:e}", w * x - 1.0);
    }
}

#[test]
fn exp_barrier_over_flat_background() {
    let h = 0.1;
    let m = Arc::new(DomainMask::rectangle(GridSpec::covering((-5.0, 5.0), (-5.0, 5.0), h).unwrap()));
    let zero = ScalarField::constant(m.clone(), 0.0);
    let spec = BarrierSpec::Exp { rate: 0.5 };
    let rep = supersolution_check(&spec, Operator::LinearL(&zero), m.clone(), |_| true).unwrap();
    assert!(rep.pass && rep.violations.is_empty());
    let phi = eval_barrier(&spec, m.clone()).unwrap();
    for idx in m.interior_indices() {
        assert!((rep.operator.get(idx) + phi.get(idx) / 4.0).abs() <= 10.0 * h * h * phi.get(idx).max(1.0));
    }
}

#[test]
fn bessel_barriers_are_supersolutions_beyond_a_finite_radius() {
    for alpha in [5.0, 8.0, 16.0] {
        for op in [ScanOperator::FlatQ, ScanOperator::SelfQ] {
            let s = scan_r0(alpha, op, 4.0, 80.0, 0.5).unwrap();
            assert!(s.r0 <= 60.0 && s.max_sign_value < 0.0, "alpha {alpha} {op:?}: {s:?}");
        }
    }
}

#[test]
fn composite_recipe_dominates_the_exact_end() {
    let n = 20.0;
    let m = Arc::new(DomainMask::new(
        GridSpec::covering((-n, n), (-n, n), 0.25).unwrap(),
        Shape::BallComplement { center: [0.0, 0.0], r0: 4.0 },
    ));
    let u = ExactSolution::ExpEnd { c: 0.5 * (-(n + 1.0)).exp(), d: 0.0 }.sample(m).unwrap();
    let spec = composite_recipe(&u, 8.0, 4.0, n, 1e-10).unwrap();
    let rep = comparison_check(&u, &spec).unwrap();
    assert!(rep.boundary_ok && rep.interior_ok, "{rep:?}");
}

#[test]
fn invalid_barriers_are_rejected() {
    assert!(BarrierSpec::Bessel { alpha: 4.0 }.validate().is_err());
    assert!(BarrierSpec::Exp { rate: 0.0 }.validate().is_err());
    assert!(ExactSolution::ExpEnd { c: -1.0, d: 0.0 }.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn k0_is_positive_and_decreasing(e in -3.0f64..2.8, step in 1e-6f64..0.5) {
        let x = 10f64.powf(e);
        let y = x * (1.0 + step);
        prop_assert!(k0(x).unwrap() > 0.0);
        prop_assert!(k0_prime(x).unwrap() < 0.0);
        prop_assert!(k0_scaled(y).unwrap() * (x - y).exp() < k0_scaled(x).unwrap());
    }

    #[test]
    fn k0_satisfies_the_modified_bessel_equation(e in -2.0f64..2.5) {
        let x = 10f64.powf(e);
        let (y, yp, ypp) = (k0(x).unwrap(), k0_prime(x).unwrap(), k0_second(x).unwrap());
        let res = x * x * ypp + x * yp - x * x * y;
        prop_assert!(res.abs() <= 1e-10 * (x * x * ypp.abs() + x * yp.abs() + x * x * y.abs()));
    }

    #[test]
    fn exp_end_flux_is_exponential(c in 0.05f64..2.0, d in -1.0f64..1.0) {
        // u' / W = c e^{-x1}, checked on the sampled field
        let sol = ExactSolution::ExpEnd { c, d };
        let x0 = c.ln().max(0.0) + 1.0;
        let h = 0.02;
        let m = Arc::new(DomainMask::rectangle(GridSpec::covering((x0, x0 + 2.0), (-0.2, 0.2), h).unwrap()));
        let u = sol.sample(m.clone()).unwrap();
        let g = gradient(&u).unwrap();
        for idx in m.interior_indices() {
            let x = m.grid().point(idx);
            let p = g.d1.get(idx);
            let exact_p = sol.gradient(x).unwrap()[0];
            prop_assert!((exact_p / (1.0 + exact_p * exact_p).sqrt() - c * (-x[0]).exp()).abs() < 1e-14);
            prop_assert!((p / (1.0 + p * p).sqrt() - c * (-x[0]).exp()).abs() < 10.0 * h * h);
        }
    }
}
