//! Log-space least-squares decay fits.
//!
//! Ray mode fits `log|u| = a - mu s`. Radial mode fits along the ray at a
//! fixed angle both a power law `log|u| = a - beta log s` and the Bessel
//! profile `log|u| = a + q log s + kappa l(s)` where
//! `l(s) = -s cos(theta)/4 + ln K0(s/2) / 2` is the logarithm of
//! `e^{-x1/4} sqrt(K0(r/2))` on that ray.

use serde::{Deserialize, Serialize};

use crate::barriers::bessel;
use crate::error::{Error, Result};
use crate::geometry::Surface;

pub const MIN_SAMPLES: usize = 20;
pub const FLOOR: f64 = 1e-14;
/// Half opening of the excluded sector around `-V`.
pub const EXCLUDED_HALF_ANGLE_DEG: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecayMode {
    /// `s` is the distance from `origin` along the unit `direction`.
    Ray { origin: [f64; 2], direction: [f64; 2] },
    /// `s = r` along the ray from the origin at `angle` (radians from `V`).
    Radial { angle: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: [f64; 3],
    pub stderr: [f64; 3],
    /// RMS of the log residuals.
    pub rms_log_residual: f64,
    /// RMS of `(fit - |u|) / |u|`.
    pub rms_relative_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselCompliance {
    /// Exponent bound `1/alpha` on `q` when `kappa` is close to 1.
    pub q_bound: f64,
    /// `kappa > 1` or (`kappa ~ 1` and `q <= 1/alpha`).
    pub compliant: bool,
    /// `max |u| / (C s^{1/alpha} e^{l(s)})` with `C` fitted at the first sample.
    pub max_bound_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mode: DecayMode,
    pub samples: Vec<(f64, f64)>,
    /// Ray: `mu`. Radial: `beta`.
    pub rate: f64,
    /// 95% confidence half-width of `rate`.
    pub rate_width: f64,
    pub primary: LinearFit,
    /// Radial mode only.
    pub bessel: Option<LinearFit>,
    pub compliance: Option<BesselCompliance>,
    /// Radial mode: `"bessel"` or `"power"`, by relative residual.
    pub better_model: Option<String>,
}

/// Least squares by modified Gram-Schmidt; columns of `x` are regressors.
fn lstsq(x: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let p = x.len();
    let mut q: Vec<Vec<f64>> = x.to_vec();
    let mut r = vec![vec![0.0; p]; p];
    for j in 0..p {
        for i in 0..j {
            let d: f64 = (0..n).map(|k| q[i][k] * q[j][k]).sum();
            r[i][j] = d;
            for k in 0..n {
                q[j][k] -= d * q[i][k];
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = x[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 1e-12 * scale) {
            return Err(Error::Singular("decay regressors are collinear".into()));
        }
        r[j][j] = norm;
        q[j].iter_mut().for_each(|v| *v /= norm);
    }
    let qty: Vec<f64> = (0..p).map(|j| (0..n).map(|k| q[j][k] * y[k]).sum()).collect();
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for j in i + 1..p {
            s -= r[i][j] * beta[j];
        }
        beta[i] = s / r[i][i];
    }
    let resid: Vec<f64> = (0..n).map(|k| y[k] - (0..p).map(|j| x[j][k] * beta[j]).sum::<f64>()).collect();
    let dof = (n as f64 - p as f64).max(1.0);
    let sigma2 = resid.iter().map(|e| e * e).sum::<f64>() / dof;
    // diag((R^T R)^{-1}) = row norms of R^{-1}
    let mut rinv = vec![vec![0.0; p]; p];
    for c in 0..p {
        for i in (0..p).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for j in i + 1..p {
                s -= r[i][j] * rinv[j][c];
            }
            rinv[i][c] = s / r[i][i];
        }
    }
    let se = (0..p).map(|i| (sigma2 * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt()).collect();
    Ok((beta, se, resid))
}

fn fit(x: &[Vec<f64>], logs: &[f64]) -> Result<LinearFit> {
    let (b, se, resid) = lstsq(x, logs)?;
    let n = logs.len() as f64;
    let rms_log = (resid.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    // fit / data - 1 = e^{-resid} - 1
    let rms_rel = (resid.iter().map(|e| ((-e).exp() - 1.0).powi(2)).sum::<f64>() / n).sqrt();
    let mut coefficients = [0.0; 3];
    let mut stderr = [0.0; 3];
    coefficients[..b.len()].copy_from_slice(&b);
    stderr[..se.len()].copy_from_slice(&se);
    Ok(LinearFit { coefficients, stderr, rms_log_residual: rms_log, rms_relative_residual: rms_rel })
}

/// `l(s)` on the ray at `angle`.
pub fn bessel_log_profile(s: f64, angle: f64) -> Result<f64> {
    Ok(-s * angle.cos() / 4.0 + 0.5 * (bessel::k0_scaled(s / 2.0)?.ln() - s / 2.0))
}

fn usable(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let kept: Vec<(f64, f64)> = samples.iter().copied().filter(|&(s, u)| u.abs() > FLOOR && s > 0.0).collect();
    if kept.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} usable samples after the |u| > {FLOOR:e} filter, need {MIN_SAMPLES}",
            kept.len()
        )));
    }
    Ok(kept)
}

/// Fits pre-sampled `(s, u(s))` pairs. `alpha` sets the radial bound
/// exponent `1/alpha`.
pub fn decay_fit_samples(samples: &[(f64, f64)], mode: DecayMode, alpha: f64) -> Result<DecayFit> {
    let kept = usable(samples)?;
    let s: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = kept.iter().map(|p| p.1.abs().ln()).collect();
    let ones = vec![1.0; s.len()];
    match mode {
        DecayMode::Ray { .. } => {
            let primary = fit(&[ones, s.clone()], &logs)?;
            Ok(DecayFit {
                mode,
                samples: kept,
                rate: -primary.coefficients[1],
                rate_width: 1.96 * primary.stderr[1],
                primary,
                bessel: None,
                compliance: None,
                better_model: None,
            })
        }
        DecayMode::Radial { angle } => {
            check_angle(angle)?;
            let logs_s: Vec<f64> = s.iter().map(|v| v.ln()).collect();
            let primary = fit(&[ones.clone(), logs_s.clone()], &logs)?;
            let prof = s.iter().map(|&v| bessel_log_profile(v, angle)).collect::<Result<Vec<f64>>>()?;
            let bess = fit(&[ones, logs_s.clone(), prof.clone()], &logs)?;
            let (q, kappa) = (bess.coefficients[1], bess.coefficients[2]);
            let q_bound = 1.0 / alpha;
            let kappa_tol = 2.0 * 1.96 * bess.stderr[2] + 1e-3;
            let compliant = kappa > 1.0 + kappa_tol || ((kappa - 1.0).abs() <= kappa_tol && q <= q_bound);
            // bound model through the first sample
            let bound: Vec<f64> = (0..s.len()).map(|k| q_bound * logs_s[k] + prof[k]).collect();
            let c = logs[0] - bound[0];
            let max_bound_ratio = (0..s.len()).map(|k| (logs[k] - c - bound[k]).exp()).fold(0.0, f64::max);
            let better = if bess.rms_relative_residual <= primary.rms_relative_residual { "bessel" } else { "power" };
            Ok(DecayFit {
                mode,
                samples: kept,
                rate: -primary.coefficients[1],
                rate_width: 1.96 * primary.stderr[1],
                primary,
                bessel: Some(bess),
                compliance: Some(BesselCompliance { q_bound, compliant, max_bound_ratio }),
                better_model: Some(better.to_string()),
            })
        }
    }
}

fn check_angle(angle: f64) -> Result<()> {
    let wrapped = (angle - std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    let from_minus_v = wrapped.min(std::f64::consts::TAU - wrapped).to_degrees();
    if from_minus_v < EXCLUDED_HALF_ANGLE_DEG {
        return Err(Error::InvalidInput(format!(
            "radial fits exclude the {EXCLUDED_HALF_ANGLE_DEG} degree half-sector around -V (angle {:.1} deg)",
            angle.to_degrees()
        )));
    }
    Ok(())
}

/// Samples `surface` at `count` uniform `s` in `[s0, s1]` and fits.
pub fn decay_fit<S: Surface + ?Sized>(
    surface: &S,
    mode: DecayMode,
    range: (f64, f64),
    count: usize,
    alpha: f64,
) -> Result<DecayFit> {
    if count < 2 || !(range.1 > range.0) {
        return Err(Error::InvalidInput("decay fit needs an increasing range and count >= 2".into()));
    }
    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let s = range.0 + (range.1 - range.0) * k as f64 / (count - 1) as f64;
        let x = match mode {
            DecayMode::Ray { origin, direction } => [origin[0] + s * direction[0], origin[1] + s * direction[1]],
            DecayMode::Radial { angle } => [s * angle.cos(), s * angle.sin()],
        };
        let u = surface.height(x).ok_or_else(|| Error::Domain(format!("decay sample at {x:?} leaves the data")))?;
        samples.push((s, u));
    }
    decay_fit_samples(&samples, mode, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAY: DecayMode = DecayMode::Ray { origin: [0.0, 0.0], direction: [1.0, 0.0] };

    #[test]
    fn recovers_planted_exponential() {
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let s = 0.5 * k as f64;
                (s, 3.0 * (-0.5 * s).exp())
            })
            .collect();
        let f = decay_fit_samples(&samples, RAY, 8.0).unwrap();
        assert!((f.rate - 0.5).abs() < 1e-12);
        assert!((f.primary.coefficients[0] - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_after_floor() {
        let samples: Vec<(f64, f64)> = (0..30).map(|k| (k as f64 + 1.0, if k < 15 { 1.0 } else { 1e-20 })).collect();
        assert!(matches!(decay_fit_samples(&samples, RAY, 8.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn radial_fit_recovers_bessel_profile() {
        let angle = 0.5f64;
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let s = 5.0 + k as f64;
                (s, 0.2 * (2.0 * bessel_log_profile(s, angle).unwrap()).exp())
            })
            .collect();
        let f = decay_fit_samples(&samples, DecayMode::Radial { angle }, 8.0).unwrap();
        let b = f.bessel.unwrap();
        assert!((b.coefficients[2] - 2.0).abs() < 1e-8 && b.coefficients[1].abs() < 1e-7);
        assert!(f.compliance.unwrap().compliant);
        assert_eq!(f.better_model.as_deref(), Some("bessel"));
    }

    #[test]
    fn excluded_sector_is_rejected() {
        let samples: Vec<(f64, f64)> = (1..=30).map(|k| (k as f64, (-(k as f64)).exp())).collect();
        let r = decay_fit_samples(&samples, DecayMode::Radial { angle: std::f64::consts::PI - 0.1 }, 8.0);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
