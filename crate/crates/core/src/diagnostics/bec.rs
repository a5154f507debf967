//! Explicit condensation-threshold constants, the onset predictor and the
//! entropy floor.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::IsotropicMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecConstants {
    pub alpha: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub c_star: f64,
    pub eps_admissible_max: f64,
    /// `t_eps` for `tau = 0` at `eps_admissible_max`.
    pub t_eps: f64,
    /// `A* eps^alpha / 5` at `eps_admissible_max`.
    pub predicted_floor: f64,
    pub n: f64,
    pub e: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `alpha = (1 - 4 eta) / 10`; requires `0 <= eta < 1/4`.
pub fn bec_alpha(eta: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&eta) {
        return Err(Error::domain(format!("condensation constants need 0 <= eta < 1/4, got {eta}")));
    }
    Ok((1.0 - 4.0 * eta) / 10.0)
}

/// `A*`, `B*`, `C*` and the admissible `eps` bound.
pub fn bec_constants(n: f64, e: f64, b0: f64, eta: f64) -> Result<BecConstants> {
    check_positive("n", n)?;
    check_positive("e", e)?;
    if !(b0 > 0.0 && b0 <= 0.5) {
        return Err(Error::domain(format!("b0 must lie in (0, 1/2], got {b0}")));
    }
    let alpha = bec_alpha(eta)?;
    let two_thirds: f64 = 2.0 / 3.0;
    let a_star = (4.0 * b0.powf(-4.0 / 7.0) / (1.0 - two_thirds.powf(alpha / 4.0))).powf(7.0 / 3.0);
    let b_star = (1.0 - two_thirds.powf(alpha)) * alpha * 1.5f64.ln() / 8.0;
    let c_star = b0 / 174.0 * a_star.powf(1.5);
    let eps = (b_star / (n * e).sqrt())
        .powf(1.0 / alpha)
        .min(two_thirds)
        .min((c_star / (n.powf(0.75) * e.powf(0.25))).powf(2.0 / (1.0 - 3.0 * alpha - eta)))
        .min((n / a_star).powf(1.0 / alpha));
    Ok(BecConstants {
        alpha,
        a_star,
        b_star,
        c_star,
        eps_admissible_max: eps,
        t_eps: t_eps(0.0, alpha, eps, n, e),
        predicted_floor: a_star * eps.powf(alpha) / 5.0,
        n,
        e,
    })
}

/// `t_eps = tau + 2 (1 - (2/3)^alpha)^{-1} eps^alpha + 1/(3 sqrt(NE))`.
pub fn t_eps(tau: f64, alpha: f64, eps: f64, n: f64, e: f64) -> f64 {
    tau + 2.0 * eps.powf(alpha) / (1.0 - (2.0f64 / 3.0).powf(alpha)) + 1.0 / (3.0 * (n * e).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BecPrediction {
    pub condition_met: bool,
    /// Whether `eps` is within the admissible bound.
    pub admissible: bool,
    pub n02: f64,
    pub threshold: f64,
    pub t_eps: f64,
    pub floor: f64,
}

/// Evaluates `N_{0,2}(F_tau, 3 eps / 2) >= A* eps^alpha`.
pub fn bec_predict(f_tau: &IsotropicMeasure, tau: f64, consts: &BecConstants, eps: f64) -> Result<BecPrediction> {
    check_positive("eps", eps)?;
    let n02 = f_tau.n0p(1.5 * eps, 2.0);
    let threshold = consts.a_star * eps.powf(consts.alpha);
    Ok(BecPrediction {
        condition_met: n02 >= threshold,
        admissible: eps <= consts.eps_admissible_max,
        n02,
        threshold,
        t_eps: t_eps(tau, consts.alpha, eps, consts.n, consts.e),
        floor: threshold / 5.0,
    })
}

/// Three-branch entropy floor `S_*(t0)` with `a = sqrt(E/N)/2`; `c_moment`
/// is the fourth-moment production constant, supplied by the caller.
pub fn entropy_floor(n: f64, e: f64, b0: f64, eta: f64, t0: f64, c_moment: f64) -> Result<f64> {
    check_positive("n", n)?;
    check_positive("e", e)?;
    check_positive("b0", b0)?;
    check_positive("t0", t0)?;
    check_positive("c_moment", c_moment)?;
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::domain(format!("eta must lie in [0, 1), got {eta}")));
    }
    let a = 0.5 * (e / n).sqrt();
    let q = 1.0 + 2.0 / t0;
    let first = 7.0 * PI * a.powi(3) / 24.0;
    let second = 4.0 * PI * PI * e * e / (5.0 * c_moment * q * q);
    let ae = a.powf(eta);
    let kernel = (2.0 * b0 * ae / (1.0 + ae)).powi(2).min((4.0 * PI).powi(2) * a * a);
    let third = kernel * 7.0 * PI.powi(4) * 2f64.sqrt() * a.powi(3) * e.powi(5) * t0
        / (96.0 * c_moment.powi(3) * q.powi(6));
    Ok(first.min(second).min(third))
}
