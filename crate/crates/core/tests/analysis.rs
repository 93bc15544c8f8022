use std::sync::Arc;

use proptest::prelude::*;
use translab::analysis::{
    blowdown, coarea_slice, comparison_audit, decay_fit_samples, gauss_bonnet_audit, weak_gradient_audit,
    BlowdownWindow, BoundaryCircle, DecayMode, Orientation, Topology,
};
use translab::barriers::ExactSolution;
use translab::geometry::{shape_report, Direction, GeometryReport};
use translab::grid::{DomainMask, GridSpec, ScalarField};
use translab::solver::{newton_solve, NewtonSettings, TranslatorProblem};

fn report(f: impl Fn([f64; 2]) -> f64, x: (f64, f64), y: (f64, f64), h: f64) -> GeometryReport {
    let m = Arc::new(DomainMask::rectangle(GridSpec::covering(x, y, h).unwrap()));
    shape_report(&ScalarField::from_fn(m, f), Direction::e1()).unwrap()
}

fn bump(amp: f64, c: [f64; 2], w: f64) -> impl Fn([f64; 2]) -> f64 {
    move |x| amp * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (w * w)).exp()
}

#[test]
fn gauss_bonnet_defect_vanishes_at_least_linearly() {
    let disk = BoundaryCircle { center: [5.0, 0.0], rho: 2.0, orientation: Orientation::CounterClockwise };
    let topo = Topology { m1: 1, genus: 0, m0: 1 };
    let defects: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let rep = report(bump(0.6, [5.2, 0.3], 1.1), (2.0, 8.0), (-3.0, 3.0), h);
            let a = gauss_bonnet_audit(&rep, &[disk], topo, 1024).unwrap();
            assert!(a.pass, "{a:?}");
            a.defect.abs()
        })
        .collect();
    for w in defects.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.0, "{defects:?}");
    }
}

#[test]
fn weak_gradient_and_comparison_on_solved_pairs() {
    let m = Arc::new(DomainMask::rectangle(GridSpec::covering((0.0, 4.0), (-2.0, 2.0), 0.1).unwrap()));
    let lo = ScalarField::from_fn(m.clone(), |x| 0.3 * (x[0] + x[1]).sin());
    let hi = ScalarField::from_fn(m, |x| 0.3 * (x[0] + x[1]).sin() + 0.1 + 0.05 * x[1] * x[1]);
    let s = NewtonSettings::default();
    let r1 = newton_solve(&TranslatorProblem::new(lo), s).unwrap();
    let r2 = newton_solve(&TranslatorProblem::new(hi), s).unwrap();
    for r in [&r1, &r2] {
        let a = weak_gradient_audit(r).unwrap();
        assert!(a.pass, "{a:?}");
    }
    let c = comparison_audit(&r1.solution, &r2.solution).unwrap();
    assert!(c.pass && c.min_gap >= 0.0, "{c:?}");
    assert!(comparison_audit(&r2.solution, &r1.solution).is_err());
}

#[test]
fn blowdown_of_exact_ends_is_monotone() {
    for c in [1e-3, 1e-2] {
        let end = ExactSolution::ExpEnd { c, d: 0.0 };
        let window = BlowdownWindow { half_angle: Some(std::f64::consts::FRAC_PI_3), ..BlowdownWindow::annulus(4.0) };
        let seq = blowdown(&end, &[1.0, 0.5, 0.25, 0.125], window).unwrap();
        assert!(!seq.truncated && seq.monotone(), "c = {c}: {seq:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decay_fit_recovers_planted_rates(mu in 0.05f64..3.0, a in -5.0f64..5.0, s0 in 0.0f64..5.0) {
        let samples: Vec<(f64, f64)> = (0..40).map(|k| {
            let s = s0 + 0.25 * k as f64;
            (s, a.exp() * (-mu * s).exp())
        }).collect();
        let fit = decay_fit_samples(&samples, DecayMode::Ray { origin: [0.0, 0.0], direction: [1.0, 0.0] }, 8.0).unwrap();
        prop_assert!((fit.rate - mu).abs() <= 1e-6 * mu, "{} vs {}", fit.rate, mu);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn slice_never_exceeds_the_window_average(
        amp in 0.05f64..0.8,
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
        w in 0.4f64..1.5,
    ) {
        let rep = report(bump(amp, [cx, cy], w), (-4.0, 4.0), (-4.0, 4.0), 0.1);
        let s = coarea_slice(&rep, [0.0, 0.0], (1.0, 2.5), 12, 256).unwrap();
        prop_assert!(s.line_energy <= s.candidate_mean * (1.0 + 1e-12));
        prop_assert!(s.rho >= 1.0 && s.rho <= 2.5);
    }
}
