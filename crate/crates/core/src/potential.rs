//! The attractive potential `U(rho)` whose three-dimensional Fourier
//! transform is `V(r) = 1/(1 + r^eta)`, and the kernel factor it induces.
//!
//! `U(rho) = I(rho) / (2 pi^2 rho^3)` with the sine integral
//! `I(rho) = int_0^inf g(r) sin(rho r) dr` and `g = -V_1''`, `V_1 = r V`.
//! `g(r) = eta r^{eta-1} [(1+eta) + (1-eta) r^eta] / (1 + r^eta)^3 >= 0`
//! behaves like `r^{eta-1}` at 0 and `r^{-1-eta}` at infinity, so
//! `U ~ rho^{eta-3}` as `rho -> 0` and `U ~ rho^{-3-eta}` as `rho -> inf`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive, wynn_epsilon, Rule};

/// Parameters of the potential family and its numerical evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSpec {
    /// Exponent of `V(r) = 1/(1 + r^eta)`, strictly inside `(0, 1)`.
    pub eta: f64,
    /// Relative tolerance of the oscillatory sine integral.
    pub tol: f64,
    /// Half-periods of `sin(rho r)` summed before giving up.
    pub max_periods: usize,
    /// Evaluation range for scans.
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_rho: usize,
}

impl PotentialSpec {
    pub fn new(eta: f64) -> Result<Self> {
        let s = PotentialSpec { eta, tol: 1e-10, max_periods: 100_000, rho_min: 1e-2, rho_max: 1e2, n_rho: 200 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::domain(format!("potential eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::domain(format!("potential tolerance must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_periods < 8 {
            return Err(Error::domain(format!("max_periods must be at least 8, got {}", self.max_periods)));
        }
        if !(self.rho_min > 0.0 && self.rho_max > self.rho_min && self.rho_max.is_finite()) {
            return Err(Error::domain(format!(
                "rho range must satisfy 0 < rho_min < rho_max < inf, got [{}, {}]",
                self.rho_min, self.rho_max
            )));
        }
        if self.n_rho < 2 {
            return Err(Error::domain(format!("n_rho must be at least 2, got {}", self.n_rho)));
        }
        Ok(())
    }
}

/// `V(r) = 1/(1 + r^eta)`.
pub fn v(eta: f64, r: f64) -> f64 {
    1.0 / (1.0 + r.powf(eta))
}

/// `V_1(r) = r V(r)`.
pub fn v1(eta: f64, r: f64) -> f64 {
    r * v(eta, r)
}

/// `V_1'(r) = (1 + (1-eta) r^eta) / (1 + r^eta)^2`.
pub fn v1_d1(eta: f64, r: f64) -> f64 {
    let q = r.powf(eta);
    (1.0 + (1.0 - eta) * q) / ((1.0 + q) * (1.0 + q))
}

/// `V_1''(r) = -eta r^{eta-1} [(1+eta) + (1-eta) r^eta] / (1 + r^eta)^3`, `r > 0`.
pub fn v1_d2(eta: f64, r: f64) -> f64 {
    let q = r.powf(eta);
    -eta * r.powf(eta - 1.0) * ((1.0 + eta) + (1.0 - eta) * q) / (1.0 + q).powi(3)
}

/// `g = -V_1'' >= 0`.
fn g(eta: f64, r: f64) -> f64 {
    -v1_d2(eta, r)
}

/// `int_a^b g(r) sin(rho r) dr` by adaptive Gauss-Kronrod, split at `r = 1`.
fn segment(eta: f64, rho: f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    let f = |r: f64| g(eta, r) * (rho * r).sin();
    let mut pts = vec![a];
    // decade breakpoints keep the panels matched to the power-law scale
    let mut d = 1.0;
    while d < b {
        if d > a {
            pts.push(d);
        }
        d *= 10.0;
    }
    pts.push(b);
    let share = abs_tol / (pts.len() - 1) as f64;
    let mut acc = 0.0;
    for w in pts.windows(2) {
        acc += adaptive(f, w[0], w[1], share, 0.0, 2000)?.value;
    }
    Ok(acc)
}

/// `int_0^c g(r) sin(rho r) dr` for `c <= 1` under `r = w^{1/eta}`, which
/// removes the `r^{eta-1}` singularity at the origin.
fn origin_segment(eta: f64, rho: f64, c: f64, abs_tol: f64) -> Result<f64> {
    let p = 1.0 / eta;
    // g(r) r^{1-eta} is bounded, and dr = p w^{p-1} dw = p r^{1-eta} dw
    let f = |w: f64| {
        let r = w.powf(p);
        let q = r.powf(eta);
        let regular = eta * ((1.0 + eta) + (1.0 - eta) * q) / (1.0 + q).powi(3);
        p * regular * (rho * r).sin()
    };
    Ok(adaptive(f, 0.0, c.powf(eta), abs_tol, 0.0, 2000)?.value)
}

/// Sine integral `I(rho) = int_0^inf g(r) sin(rho r) dr` by summation over
/// the half-periods of `sin(rho r)` and Wynn acceleration of the
/// alternating tail.
pub fn sine_integral(spec: &PotentialSpec, rho: f64) -> Result<f64> {
    spec.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("rho must be positive and finite, got {rho}")));
    }
    let eta = spec.eta;
    let h = PI / rho;
    // first half-period fixes the scale for the absolute tolerances
    let c = h.min(1.0);
    let probe = origin_segment(eta, rho, c, 1e-6)?.abs();
    let seg_tol = 1e-3 * spec.tol * probe.max(f64::MIN_POSITIVE);
    let mut first = origin_segment(eta, rho, c, seg_tol)?;
    if h > 1.0 {
        first += segment(eta, rho, 1.0, h, seg_tol)?;
    }
    let mut sum = first;
    // terms before the power-law regime r > 1 are summed directly
    let k_direct = (1.0 / h).ceil() as usize + 1;
    let mut k = 1usize;
    while k < k_direct {
        if k >= spec.max_periods {
            return Err(no_convergence(rho, k, &[sum]));
        }
        sum += segment(eta, rho, k as f64 * h, (k + 1) as f64 * h, seg_tol)?;
        k += 1;
    }
    let mut partial = vec![sum];
    let mut block = 32usize;
    let mut prev: Option<f64> = None;
    loop {
        while partial.len() <= block {
            if k >= spec.max_periods {
                let tail: Vec<f64> = partial.iter().rev().take(6).rev().copied().collect();
                return Err(no_convergence(rho, k, &tail));
            }
            sum += segment(eta, rho, k as f64 * h, (k + 1) as f64 * h, seg_tol)?;
            partial.push(sum);
            k += 1;
        }
        // Wynn works best on a moderate window of the latest partial sums
        let window = &partial[partial.len().saturating_sub(40)..];
        let est = wynn_epsilon(window).value;
        if let Some(p) = prev {
            if (est - p).abs() <= spec.tol * est.abs() {
                return Ok(est);
            }
        }
        prev = Some(est);
        block *= 2;
    }
}

fn no_convergence(rho: f64, k: usize, partial: &[f64]) -> Error {
    Error::numeric(format!(
        "sine integral at rho = {rho} did not converge after {k} half-periods; last partial sums {partial:?}"
    ))
}

/// `U(rho)` from the half-period summation.
pub fn u_of_rho(spec: &PotentialSpec, rho: f64) -> Result<f64> {
    Ok(sine_integral(spec, rho)? / (2.0 * PI * PI * rho.powi(3)))
}

/// `I(rho)` after rotating the contour to `r = i s`, where
/// `I = Re int_0^inf g(is) e^{-rho s} ds`.
///
/// `1 + r^eta` has no zero with `arg r` in `[0, pi/2]`, so the rotation is
/// exact. With `s = v^{1/eta} / rho` the integrand is a rational function
/// of `v` times `exp(-v^{1/eta})`, with no oscillation and no singularity.
/// Independent of [`sine_integral`] and usable at any `rho`.
pub fn sine_integral_laplace(eta: f64, rho: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!("potential eta must lie in (0, 1), got {eta}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("rho must be positive and finite, got {rho}")));
    }
    let p = 1.0 / eta;
    let phase = Complex64::from_polar(1.0, 0.5 * PI * eta);
    let pre = Complex64::from_polar(eta, 0.5 * PI * (eta - 1.0));
    let scale = rho.powf(-eta);
    // g(is) s^{1-eta} with u = (is)^eta = v rho^{-eta} e^{i pi eta / 2}
    let f = |v: f64| {
        let u = phase * (v * scale);
        let one = Complex64::new(1.0, 0.0);
        let val = pre * ((1.0 + eta) + (1.0 - eta) * u) / ((one + u) * (one + u) * (one + u));
        val.re * (-v.powf(p)).exp()
    };
    // e^{-t} below 1e-22 past t = 50
    let v_max = 50f64.powf(eta);
    let v_knee = rho.powf(eta);
    let mut acc = 0.0;
    let pts: Vec<f64> = if v_knee < v_max { vec![0.0, v_knee, v_max] } else { vec![0.0, v_max] };
    for w in pts.windows(2) {
        acc += adaptive(f, w[0], w[1], 1e-15, 1e-13, 4000)?.value;
    }
    Ok(p * scale * acc)
}

/// `U(rho)` from the rotated contour.
pub fn u_of_rho_laplace(eta: f64, rho: f64) -> Result<f64> {
    Ok(sine_integral_laplace(eta, rho)? / (2.0 * PI * PI * rho.powi(3)))
}

/// `(rho, U(rho))` on the spec's log grid, with the most negative value.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityScan {
    pub samples: Vec<(f64, f64)>,
    pub min_u: f64,
    pub argmin_rho: f64,
}

pub fn positivity_scan(spec: &PotentialSpec) -> Result<PositivityScan> {
    spec.validate()?;
    let (a, b) = (spec.rho_min.ln(), spec.rho_max.ln());
    let mut samples = Vec::with_capacity(spec.n_rho);
    let (mut min_u, mut argmin_rho) = (f64::INFINITY, spec.rho_min);
    for k in 0..spec.n_rho {
        let rho = (a + (b - a) * k as f64 / (spec.n_rho - 1) as f64).exp();
        let u = u_of_rho(spec, rho)?;
        if u < min_u {
            min_u = u;
            argmin_rho = rho;
        }
        samples.push((rho, u));
    }
    Ok(PositivityScan { samples, min_u, argmin_rho })
}

/// Radial Fourier transform `4 pi int_0^inf U(rho) rho^2 sinc(r rho) drho`.
///
/// With `4 pi rho^2 U = 2 I / (pi rho)` the transform is
/// `(2/pi) int I(rho) sinc(r rho) d(ln rho)`. That form is integrated on
/// `budget` Gauss-Legendre panels in `ln rho` up to the first zero of
/// `sin(r rho)`, with the power-law tails `I ~ rho^{+-eta}` added in closed
/// form. Beyond the first zero the half-periods are summed and accelerated.
/// `r = 0` gives the total integral `int 4 pi rho^2 U`. `I` comes from the
/// rotated contour, since the log-scale integral needs `rho^eta` from `1e-5`
/// to `1e6` where half-period summation is unaffordable. Below that range
/// the rotated integrand cancels to relative order `rho^{2 eta}`.
pub fn fourier_transform(eta: f64, r: f64, budget: usize) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("r must be finite and nonnegative, got {r}")));
    }
    if budget == 0 {
        return Err(Error::domain("round-trip budget must be positive"));
    }
    let rule = Rule::gauss_legendre(16)?;
    let lo = (1e-5f64).ln() / eta;
    let hi = if r > 0.0 { (PI / r).ln() } else { (1e6f64).ln() / eta };
    if hi <= lo {
        return Err(Error::domain(format!("r = {r} is too large for the log-scale quadrature")));
    }
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let mut err = None;
    let mut body = 0.0;
    let width = (hi - lo) / budget as f64;
    for p in 0..budget {
        let a = lo + p as f64 * width;
        body += rule.integrate(a, a + width, |s| {
            let rho = s.exp();
            match sine_integral_laplace(eta, rho) {
                Ok(i) => i * sinc(r * rho),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    // int_{-inf}^{lo} I ds with I ~ rho^eta
    body += sine_integral_laplace(eta, lo.exp())? / eta;
    if r == 0.0 {
        body += sine_integral_laplace(eta, hi.exp())? / eta;
        return Ok(2.0 / PI * body);
    }
    // half-periods [k pi / r, (k+1) pi / r] of (2/pi) I(rho) sin(r rho) / (r rho^2)
    let h = PI / r;
    let mut sum = body;
    let mut partial = Vec::with_capacity(64);
    for k in 1..=64 {
        let a = k as f64 * h;
        sum += rule.integrate(a, a + h, |rho| match sine_integral_laplace(eta, rho) {
            Ok(i) => i * (r * rho).sin() / (r * rho * rho),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        partial.push(sum);
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(2.0 / PI * wynn_epsilon(&partial[24..]).value)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    /// `(r, transform, V(r), relative error)` per sample.
    pub samples: Vec<(f64, f64, f64, f64)>,
    pub max_rel_err: f64,
}

/// Compares the transform of `U` with `V` on `r_samples`.
pub fn roundtrip_check(spec: &PotentialSpec, r_samples: &[f64], budget: usize) -> Result<RoundtripReport> {
    spec.validate()?;
    let mut samples = Vec::with_capacity(r_samples.len());
    let mut max_rel_err: f64 = 0.0;
    for &r in r_samples {
        let got = fourier_transform(spec.eta, r, budget)?;
        let want = v(spec.eta, r);
        let rel = (got - want).abs() / want;
        max_rel_err = max_rel_err.max(rel);
        samples.push((r, got, want, rel));
    }
    Ok(RoundtripReport { samples, max_rel_err })
}

/// `(1/2)(1 - V(r)) = (1/2) r^eta / (1 + r^eta)`: the kernel factor of the
/// eta-model with `b0 = 1/2`.
pub fn phi_hat_from_potential(eta: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let q = r.powf(eta);
    0.5 * q / (1.0 + q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::PhiModel;

    const ETAS: [f64; 3] = [0.25, 0.5, 0.75];

    #[test]
    fn spec_validation() {
        assert!(PotentialSpec::new(0.0).is_err());
        assert!(PotentialSpec::new(1.0).is_err());
        assert!(PotentialSpec::new(f64::NAN).is_err());
        let mut s = PotentialSpec::new(0.5).unwrap();
        s.rho_min = 0.0;
        assert!(s.validate().is_err());
        assert!(u_of_rho(&PotentialSpec::new(0.5).unwrap(), 0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &eta in &ETAS {
            for k in 0..=40 {
                let r = 10f64.powf(-2.0 + 4.0 * k as f64 / 40.0);
                let h = 1e-3 * r;
                let d1 = (v1(eta, r + h) - v1(eta, r - h)) / (2.0 * h);
                assert!((d1 - v1_d1(eta, r)).abs() < 1e-6 * v1_d1(eta, r).abs(), "eta {eta} r {r}");
                let d2 = (v1_d1(eta, r + h) - v1_d1(eta, r - h)) / (2.0 * h);
                assert!((d2 - v1_d2(eta, r)).abs() < 1e-6 * v1_d2(eta, r).abs(), "eta {eta} r {r}");
                let h2 = 1e-2 * r;
                let dd = (v1(eta, r + h2) - 2.0 * v1(eta, r) + v1(eta, r - h2)) / (h2 * h2);
                assert!((dd - v1_d2(eta, r)).abs() < 1e-3 * v1_d2(eta, r).abs(), "eta {eta} r {r}");
            }
        }
    }

    #[test]
    fn summation_agrees_with_rotated_contour() {
        for &eta in &ETAS {
            let spec = PotentialSpec::new(eta).unwrap();
            for &rho in &[0.01, 0.1, 0.7, 1.0, 3.0, 10.0, 100.0] {
                let a = sine_integral(&spec, rho).unwrap();
                let b = sine_integral_laplace(eta, rho).unwrap();
                assert!((a - b).abs() < 1e-8 * b.abs(), "eta {eta} rho {rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn power_law_limits() {
        // I(rho) -> eta (1+eta) Gamma(eta) sin(pi eta / 2) rho^{-eta} as rho -> inf
        use statrs::function::gamma::gamma;
        for &eta in &ETAS {
            let c = eta * (1.0 + eta) * gamma(eta) * (0.5 * PI * eta).sin();
            let rho: f64 = 1e12;
            let i = sine_integral_laplace(eta, rho).unwrap();
            assert!((i * rho.powf(eta) / c - 1.0).abs() < 1e-2, "eta {eta}");
        }
    }

    #[test]
    fn positivity_on_log_grid() {
        for &eta in &ETAS {
            let scan = positivity_scan(&PotentialSpec::new(eta).unwrap()).unwrap();
            assert_eq!(scan.samples.len(), 200);
            assert!(scan.min_u >= -1e-6, "eta {eta}: min U {} at {}", scan.min_u, scan.argmin_rho);
        }
    }

    #[test]
    fn decay_is_bounded() {
        for &eta in &ETAS {
            let spec = PotentialSpec::new(eta).unwrap();
            let scaled: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|&rho| u_of_rho(&spec, rho).unwrap() * rho.powf(3.0 - eta))
                .collect();
            // U rho^{3-eta} = I rho^{-eta} / (2 pi^2) falls like rho^{-2 eta}
            for w in scaled.windows(2) {
                assert!(w[1] > 0.0 && w[1] < w[0], "eta {eta}: {scaled:?}");
            }
        }
    }

    #[test]
    fn roundtrip_reproduces_v() {
        for &eta in &ETAS {
            let spec = PotentialSpec::new(eta).unwrap();
            let rep = roundtrip_check(&spec, &[0.0, 0.1, 0.5, 1.0, 2.0, 5.0], 64).unwrap();
            assert!(rep.max_rel_err < 1e-3, "eta {eta}: {:?}", rep.samples);
        }
        let half = fourier_transform(0.5, 1.0, 64).unwrap();
        assert!((half - 0.5).abs() < 1e-3, "{half}");
        let total = fourier_transform(0.5, 0.0, 64).unwrap();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn roundtrip_error_falls_with_budget() {
        let errs: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|&b| (fourier_transform(0.25, 0.0, b).unwrap() - 1.0).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0] || w[1] < 1e-9, "{errs:?}");
        }
    }

    #[test]
    fn phi_hat_bridge() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        assert_eq!(phi_hat_from_potential(0.5, 0.0), 0.0);
        assert!((phi_hat_from_potential(0.5, 1e12) - 0.5).abs() < 1e-5);
        for _ in 0..200 {
            let eta = rng.gen_range(0.01..0.99);
            let r = rng.gen_range(0.0..50.0);
            let m = PhiModel::eta_model(0.5, eta).unwrap();
            assert!((phi_hat_from_potential(eta, r) - m.phi_hat(r)).abs() < 1e-15);
            assert!((phi_hat_from_potential(eta, r) - 0.5 * (1.0 - v(eta, r))).abs() < 1e-15);
        }
    }
}
