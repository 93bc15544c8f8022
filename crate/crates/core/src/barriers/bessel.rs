//! Modified Bessel functions of the second kind, orders 0 and 1.
//!
//! Power series about the origin for `x <= 2`; Steed's continued fraction
//! (the Temme CF2 form) for `x > 2`, which evaluates the scaled functions
//! `e^x K0(x)` and `e^x K1(x)` to full double precision without the
//! truncation floor of the large-argument asymptotic series.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover between the series and the continued fraction.
pub const SERIES_LIMIT: f64 = 2.0;

/// Above this argument `K0` and `K1` are reported as underflowed zeros.
pub const UNDERFLOW_LIMIT: f64 = 705.0;

const MAX_TERMS: usize = 10_000;

/// A value that may have underflowed to zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselValue {
    pub value: f64,
    pub underflow: bool,
}

fn check_arg(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Bessel K requires a positive finite argument, got {x}")))
    }
}

/// `(K0(x), K1(x))` from the series about zero.
pub(crate) fn series_k0_k1(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    // term_k = q^k / (k!)^2, harmonic H_k
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut s0 = 0.0;
    // term1_k = q^k / (k! (k+1)!)
    let mut term1 = 1.0;
    let mut i1_sum = 1.0;
    // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
    let mut s1 = -2.0 * EULER_GAMMA + 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        term1 *= q / (kf * (kf + 1.0));
        i0 += term;
        s0 += term * harmonic;
        i1_sum += term1;
        s1 += term1 * (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0));
        if term < 1e-18 * i0 && term1 < 1e-18 * i1_sum {
            break;
        }
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let i1 = 0.5 * x * i1_sum;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// `(e^x K0(x), e^x K1(x))` by Steed's continued fraction; accurate for
/// `x >= 2`.
pub(crate) fn continued_fraction_scaled(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

fn scaled_pair(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        let (k0, k1) = series_k0_k1(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        continued_fraction_scaled(x)
    }
}

/// `e^x K0(x)`.
pub fn k0_scaled(x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(scaled_pair(x).0)
}

/// `e^x K1(x)`.
pub fn k1_scaled(x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(scaled_pair(x).1)
}

/// `K0(x)` together with an underflow flag.
pub fn k0_checked(x: f64) -> Result<BesselValue> {
    check_arg(x)?;
    if x > UNDERFLOW_LIMIT {
        return Ok(BesselValue { value: 0.0, underflow: true });
    }
    if x <= SERIES_LIMIT {
        return Ok(BesselValue { value: series_k0_k1(x).0, underflow: false });
    }
    Ok(BesselValue { value: continued_fraction_scaled(x).0 * (-x).exp(), underflow: false })
}

/// `K0(x)`, flushing to zero beyond [`UNDERFLOW_LIMIT`].
pub fn k0(x: f64) -> Result<f64> {
    k0_checked(x).map(|v| v.value)
}

/// `K1(x)`, flushing to zero beyond [`UNDERFLOW_LIMIT`].
pub fn k1(x: f64) -> Result<f64> {
    check_arg(x)?;
    if x > UNDERFLOW_LIMIT {
        return Ok(0.0);
    }
    if x <= SERIES_LIMIT {
        return Ok(series_k0_k1(x).1);
    }
    Ok(continued_fraction_scaled(x).1 * (-x).exp())
}

/// `K0'(x) = -K1(x)`.
pub fn k0_prime(x: f64) -> Result<f64> {
    k1(x).map(|v| -v)
}

/// `K0''(x) = K0(x) + K1(x) / x`, read off the Bessel equation.
pub fn k0_second(x: f64) -> Result<f64> {
    Ok(k0(x)? + k1(x)? / x)
}
