//! Barrier functions and the checks that certify them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bessel;
use crate::error::{Error, Result};
use crate::grid::{dist, DomainMask, GridSpec, ScalarField, Shape};
use crate::solver::{linearize, quasilinear_self, Flavor};

/// `Exp`: `e^{-rate x1}`. `Bessel`: `r^{2/alpha} e^{-x1/2} K0(r/2)`.
/// `Composite`: `c1 Bessel(alpha) + c2 e^{-(x1 + n)/2} + eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BarrierSpec {
    Exp { rate: f64 },
    Bessel { alpha: f64 },
    Composite { c1: f64, c2: f64, eps: f64, n: f64, alpha: f64 },
}

impl Default for BarrierSpec {
    fn default() -> Self {
        BarrierSpec::Exp { rate: 0.5 }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 4.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha must exceed 4, got {alpha}")))
    }
}

/// `r^s e^{-(x1 + r)/2} (e^{r/2} K0(r/2))`, which stays finite where the
/// factors separately would underflow.
fn bessel_profile(alpha: f64, x: [f64; 2]) -> Result<f64> {
    let r = x[0].hypot(x[1]);
    if r <= 0.0 {
        return Err(Error::Domain("the Bessel barrier is singular at the origin".into()));
    }
    let s = 2.0 / alpha;
    Ok(r.powf(s) * (-(x[0] + r) / 2.0).exp() * bessel::k0_scaled(r / 2.0)?)
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BarrierSpec::Exp { rate } => positive("rate", rate),
            BarrierSpec::Bessel { alpha } => check_alpha(alpha),
            BarrierSpec::Composite { c1, c2, eps, n, alpha } => {
                positive("c1", c1)?;
                positive("c2", c2)?;
                positive("eps", eps)?;
                positive("n", n)?;
                check_alpha(alpha)
            }
        }
    }

    pub fn value(&self, x: [f64; 2]) -> Result<f64> {
        match *self {
            BarrierSpec::Exp { rate } => Ok((-rate * x[0]).exp()),
            BarrierSpec::Bessel { alpha } => bessel_profile(alpha, x),
            BarrierSpec::Composite { c1, c2, eps, n, alpha } => {
                Ok(c1 * bessel_profile(alpha, x)? + c2 * (-(x[0] + n) / 2.0).exp() + eps)
            }
        }
    }

    /// The `C1 phi + eps` part of a composite barrier.
    pub fn limiting_value(&self, x: [f64; 2]) -> Result<f64> {
        match *self {
            BarrierSpec::Composite { c1, eps, alpha, .. } => Ok(c1 * bessel_profile(alpha, x)? + eps),
            _ => self.value(x),
        }
    }
}

pub fn eval_barrier(spec: &BarrierSpec, mask: Arc<DomainMask>) -> Result<ScalarField> {
    spec.validate()?;
    ScalarField::try_from_fn(mask, |x| spec.value(x))
}

/// Operator under which a barrier should be a strict supersolution.
#[derive(Clone, Copy, Debug)]
pub enum Operator<'a> {
    /// Gradient operator `L` with coefficients from the background.
    LinearL(&'a ScalarField),
    /// Quasilinear operator with `p` frozen at the background gradient.
    QuasilinearQ(&'a ScalarField),
    /// Quasilinear operator evaluated on the barrier itself.
    SelfQ,
}

#[derive(Clone, Debug)]
pub struct SupersolutionReport {
    pub operator: ScalarField,
    pub max_sign_value: f64,
    /// Checked nodes where the operator is `>= 0`.
    pub violations: Vec<usize>,
    pub checked: usize,
    pub pass: bool,
}

/// Applies `op` to the sampled barrier and inspects the `Interior` nodes
/// selected by `region`.
pub fn supersolution_check(
    spec: &BarrierSpec,
    op: Operator<'_>,
    mask: Arc<DomainMask>,
    region: impl Fn([f64; 2]) -> bool,
) -> Result<SupersolutionReport> {
    let phi = eval_barrier(spec, mask.clone())?;
    let values = match op {
        Operator::LinearL(u) => linearize(u, Flavor::GradientL)?.apply(&phi)?,
        Operator::QuasilinearQ(u) => linearize(u, Flavor::QuasilinearQ)?.apply(&phi)?,
        Operator::SelfQ => quasilinear_self(&phi)?,
    };
    let grid = mask.grid();
    let mut max_sign_value = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut checked = 0;
    for idx in mask.interior_indices() {
        if !region(grid.point(idx)) {
            continue;
        }
        let v = values.get(idx);
        checked += 1;
        max_sign_value = max_sign_value.max(v);
        if v >= 0.0 {
            violations.push(idx);
        }
    }
    if checked == 0 {
        return Err(Error::InsufficientData("supersolution region selects no interior nodes".into()));
    }
    Ok(SupersolutionReport { operator: values, pass: violations.is_empty(), max_sign_value, violations, checked })
}

/// Which quasilinear operator an `R0` scan uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanOperator {
    /// `Q` frozen at `u = 0`, i.e. `Δ + D1`.
    FlatQ,
    SelfQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct R0Scan {
    pub alpha: f64,
    pub operator: ScanOperator,
    pub h: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Smallest radius from which every checked node up to `r_max` is negative.
    pub r0: f64,
    /// Max operator value over `[r0, r_max]`.
    pub max_sign_value: f64,
    /// Max of the operator value divided by the barrier over `[r0, r_max]`.
    pub max_relative_value: f64,
    pub nodes: usize,
}

/// Scans the Bessel barrier on `r_min <= r <= r_max` with grid spacing `h`.
pub fn scan_r0(alpha: f64, operator: ScanOperator, r_min: f64, r_max: f64, h: f64) -> Result<R0Scan> {
    check_alpha(alpha)?;
    if !(r_min > 2.0 * h && r_max > r_min + 4.0 * h) {
        return Err(Error::Resolution(format!("scan window [{r_min}, {r_max}] too small for h = {h}")));
    }
    let pad = r_max + 3.0 * h;
    let grid = GridSpec::covering((-pad, pad), (-pad, pad), h)?;
    let mask = Arc::new(DomainMask::new(
        grid,
        Shape::Annulus { center: [0.0, 0.0], r_in: r_min - 2.0 * h, r_out: r_max + 2.0 * h },
    ));
    let spec = BarrierSpec::Bessel { alpha };
    let flat;
    let op = match operator {
        ScanOperator::FlatQ => {
            flat = ScalarField::constant(mask.clone(), 0.0);
            Operator::QuasilinearQ(&flat)
        }
        ScanOperator::SelfQ => Operator::SelfQ,
    };
    let rep = supersolution_check(&spec, op, mask.clone(), |x| {
        let r = dist(x, [0.0, 0.0]);
        r >= r_min && r <= r_max
    })?;
    let phi = eval_barrier(&spec, mask.clone())?;
    let mut samples: Vec<(f64, f64, f64)> = mask
        .interior_indices()
        .filter_map(|idx| {
            let r = dist(grid.point(idx), [0.0, 0.0]);
            (r >= r_min && r <= r_max).then(|| (r, rep.operator.get(idx), phi.get(idx)))
        })
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut r0 = r_max;
    let mut max_sign_value = f64::NEG_INFINITY;
    let mut max_relative_value = f64::NEG_INFINITY;
    let mut nodes = 0;
    for &(r, v, p) in &samples {
        if v >= 0.0 {
            break;
        }
        r0 = r;
        nodes += 1;
        max_sign_value = max_sign_value.max(v);
        max_relative_value = max_relative_value.max(v / p);
    }
    Ok(R0Scan { alpha, operator, h, r_min, r_max, r0, max_sign_value, max_relative_value, nodes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub boundary_ok: bool,
    pub interior_ok: bool,
    /// `min (phi - u^2)` over the whole region.
    pub margin: f64,
    pub boundary_margin: f64,
    /// Boundary nodes where `phi <= u^2`.
    pub offending: Vec<[f64; 2]>,
    /// `min (c1 phi + eps - u^2)`, the form that survives `N -> infinity`.
    pub limiting_margin: f64,
    pub limiting_ok: bool,
}

/// Compares `phi_{eps,N}` against `u^2` on `u`'s mask.
pub fn comparison_check(u: &ScalarField, spec: &BarrierSpec) -> Result<ComparisonReport> {
    if !matches!(spec, BarrierSpec::Composite { .. }) {
        return Err(Error::InvalidInput("comparison needs a composite barrier".into()));
    }
    spec.validate()?;
    let mask = u.mask();
    let grid = mask.grid();
    let mut rep = ComparisonReport {
        boundary_ok: true,
        interior_ok: true,
        margin: f64::INFINITY,
        boundary_margin: f64::INFINITY,
        offending: Vec::new(),
        limiting_margin: f64::INFINITY,
        limiting_ok: true,
    };
    for idx in 0..grid.len() {
        if !mask.is_active(idx) {
            continue;
        }
        let x = grid.point(idx);
        let u2 = u.get(idx) * u.get(idx);
        let m = spec.value(x)? - u2;
        rep.margin = rep.margin.min(m);
        rep.limiting_margin = rep.limiting_margin.min(spec.limiting_value(x)? - u2);
        if !mask.is_interior(idx) {
            rep.boundary_margin = rep.boundary_margin.min(m);
            if m <= 0.0 {
                rep.offending.push(x);
            }
        }
    }
    rep.boundary_ok = rep.offending.is_empty();
    rep.interior_ok = rep.margin > 0.0;
    rep.limiting_ok = rep.limiting_margin > 0.0;
    Ok(rep)
}

/// Constants for the composite barrier: `c1 min_{|x| = r0} phi = sup u^2`
/// and `c2 = 2 sup u^2`.
pub fn composite_recipe(u: &ScalarField, alpha: f64, r0: f64, n: f64, eps: f64) -> Result<BarrierSpec> {
    check_alpha(alpha)?;
    positive("r0", r0)?;
    let sup_u2 = u.sup_norm().powi(2).max(f64::MIN_POSITIVE);
    let samples = 1440;
    let mut min_phi = f64::INFINITY;
    for k in 0..samples {
        let t = std::f64::consts::TAU * k as f64 / samples as f64;
        min_phi = min_phi.min(bessel_profile(alpha, [r0 * t.cos(), r0 * t.sin()])?);
    }
    let spec = BarrierSpec::Composite { c1: sup_u2 / min_phi, c2: 2.0 * sup_u2, eps, n, alpha };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x: (f64, f64), y: (f64, f64), h: f64) -> Arc<DomainMask> {
        Arc::new(DomainMask::rectangle(GridSpec::covering(x, y, h).unwrap()))
    }

    #[test]
    fn pointwise_values() {
        assert_eq!(BarrierSpec::Exp { rate: 0.5 }.value([0.0, 3.0]).unwrap(), 1.0);
        let v = BarrierSpec::Bessel { alpha: 8.0 }.value([0.0, 2.0]).unwrap();
        let expect = 2f64.powf(0.25) * bessel::k0(1.0).unwrap();
        assert!((v - expect).abs() < 1e-15 * expect);
        assert!(matches!(BarrierSpec::Bessel { alpha: 8.0 }.value([0.0, 0.0]), Err(Error::Domain(_))));
        assert!(BarrierSpec::Bessel { alpha: 4.0 }.validate().is_err());
    }

    #[test]
    fn bessel_asymptotic_ratio_is_flat() {
        let spec = BarrierSpec::Bessel { alpha: 8.0 };
        let ratio = |r: f64| spec.value([0.0, r]).unwrap() / (r.powf(-0.25) * (-r / 2.0).exp());
        let base = ratio(40.0);
        for r in [60.0, 100.0, 200.0] {
            assert!((ratio(r) / base - 1.0).abs() < 0.02);
        }
        assert!((base - std::f64::consts::PI.sqrt()).abs() < 0.02 * base);
    }

    #[test]
    fn exponential_barrier_under_flat_l() {
        let h = 0.05;
        let m = rect((0.0, 3.0), (-1.0, 1.0), h);
        let u = ScalarField::constant(m.clone(), 0.0);
        let spec = BarrierSpec::Exp { rate: 0.5 };
        let rep = supersolution_check(&spec, Operator::LinearL(&u), m.clone(), |_| true).unwrap();
        assert!(rep.pass && rep.max_sign_value < 0.0);
        for idx in m.interior_indices() {
            let phi = spec.value(m.grid().point(idx)).unwrap();
            assert!((rep.operator.get(idx) + phi / 4.0).abs() < 10.0 * h * h);
        }
    }

    #[test]
    fn noisy_background_breaks_the_exponential_barrier() {
        let m = rect((0.0, 3.0), (-1.0, 1.0), 0.05);
        let u = ScalarField::from_fn(m.clone(), |x| 3.0 * (7.0 * x[0]).sin() * (5.0 * x[1]).cos());
        let rep = supersolution_check(&BarrierSpec::Exp { rate: 0.5 }, Operator::LinearL(&u), m, |_| true).unwrap();
        assert!(!rep.pass && !rep.violations.is_empty());
    }

    #[test]
    fn small_scan_finds_negative_tail() {
        let s = scan_r0(8.0, ScanOperator::FlatQ, 1.0, 20.0, 0.25).unwrap();
        assert!(s.r0 < 20.0 && s.max_sign_value < 0.0 && s.nodes > 100);
    }

    #[test]
    fn zero_field_comparison_margin_is_eps() {
        let m = Arc::new(DomainMask::new(
            GridSpec::covering((-20.0, 20.0), (-20.0, 20.0), 0.5).unwrap(),
            Shape::BallComplement { center: [0.0, 0.0], r0: 5.0 },
        ));
        let u = ScalarField::constant(m, 0.0);
        let spec = composite_recipe(&u, 8.0, 5.0, 20.0, 1e-6).unwrap();
        let rep = comparison_check(&u, &spec).unwrap();
        assert!(rep.boundary_ok && rep.interior_ok);
        assert!((rep.margin - 1e-6).abs() < 1e-9);
    }
}
