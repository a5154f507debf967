//! Collision weight `W(x, y, z)` in energy variables and the operators
//! `K[phi] = W * Delta phi` and `J[phi](y, z) = 1/2 int_0^{y+z} K sqrt(x) dx`.
//!
//! `x_* = (y + z - x)_+` throughout.

mod atomic;
mod mc;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Rule;
use crate::testfn::TestFunction;

pub use atomic::{j_sum, jj_lower_bound, AtomWeights, k_split_sum, k_sum, kk2_lower_bound, kk_lower_bound};
pub use mc::{mc_reduce_check, reduction_inner, McReport};

/// Radicands in `[-RADICAND_TOL, 0)` are roundoff and clamp to zero.
pub const RADICAND_TOL: f64 = 1e-12;

/// Angular part of the collision kernel, `Phi(r, rho) = (phi_hat(r) + phi_hat(rho))^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiModel {
    HardSphere,
    /// `phi_hat(r) = r^eta / (2 (1 + r^eta))`; `b0` only enters inequality checks.
    EtaModel { b0: f64, eta: f64 },
    /// `phi_hat` sampled at increasing `r` starting at 0, interpolated
    /// linearly and held constant past the last sample.
    Tabulated { r: Vec<f64>, phi_hat: Vec<f64> },
}

impl PhiModel {
    pub fn eta_model(b0: f64, eta: f64) -> Result<Self> {
        let m = PhiModel::EtaModel { b0, eta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhiModel::HardSphere => Ok(()),
            PhiModel::EtaModel { b0, eta } => {
                if !(*b0 > 0.0 && *b0 <= 0.5) {
                    return Err(Error::domain(format!("b0 must lie in (0, 1/2], got {b0}")));
                }
                if !(*eta >= 0.0 && *eta < 1.0) {
                    return Err(Error::domain(format!("eta must lie in [0, 1), got {eta}")));
                }
                Ok(())
            }
            PhiModel::Tabulated { r, phi_hat } => {
                if r.len() != phi_hat.len() || r.len() < 2 {
                    return Err(Error::domain("tabulated phi_hat needs >= 2 matching samples"));
                }
                if r[0] != 0.0 {
                    return Err(Error::domain("tabulated phi_hat must start at r = 0"));
                }
                for w in r.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::domain("tabulated r must be strictly increasing"));
                    }
                }
                for (i, &v) in phi_hat.iter().enumerate() {
                    if !(0.0..=0.5).contains(&v) {
                        return Err(Error::domain(format!("phi_hat[{i}] = {v} outside [0, 1/2]")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `phi_hat` is nondecreasing, which the exchange inequality needs.
    pub fn is_monotone(&self) -> bool {
        match self {
            PhiModel::Tabulated { phi_hat, .. } => phi_hat.windows(2).all(|w| w[1] >= w[0]),
            _ => true,
        }
    }

    #[inline]
    pub fn phi_hat(&self, r: f64) -> f64 {
        match self {
            PhiModel::HardSphere => 0.5,
            PhiModel::EtaModel { eta, .. } => {
                if r == 0.0 {
                    if *eta == 0.0 {
                        0.25
                    } else {
                        0.0
                    }
                } else {
                    let q = r.powf(*eta);
                    0.5 * q / (1.0 + q)
                }
            }
            PhiModel::Tabulated { r: rs, phi_hat } => {
                let n = rs.len();
                if r >= rs[n - 1] {
                    return phi_hat[n - 1];
                }
                let i = rs.partition_point(|&t| t <= r) - 1;
                let t = (r - rs[i]) / (rs[i + 1] - rs[i]);
                phi_hat[i] + t * (phi_hat[i + 1] - phi_hat[i])
            }
        }
    }

    /// Short name used in tables and manifests.
    pub fn name(&self) -> &'static str {
        match self {
            PhiModel::HardSphere => "hard_sphere",
            PhiModel::EtaModel { .. } => "eta_model",
            PhiModel::Tabulated { .. } => "tabulated",
        }
    }
}

/// `Phi(r, rho)`, checked.
pub fn phi(model: &PhiModel, r: f64, rho: f64) -> Result<f64> {
    for (name, v) in [("r", r), ("rho", rho)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::domain(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    let s = model.phi_hat(r) + model.phi_hat(rho);
    Ok(s * s)
}

/// Node counts for the `(s, theta)` tensor rule and the inner `x` integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub n_s: usize,
    pub n_theta: usize,
    pub n_x: usize,
    /// Endpoint grading exponent of the `(s, theta)` rules; 1 is plain Gauss-Legendre.
    pub grading: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { n_s: 64, n_theta: 64, n_x: 256, grading: 3 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_s < 2 || self.n_theta < 2 || self.n_x < 2 {
            return Err(Error::domain("quadrature node counts must be >= 2"));
        }
        if self.grading < 1 || self.grading > 8 {
            return Err(Error::domain("grading exponent must lie in 1..=8"));
        }
        Ok(())
    }
}

/// Prepared rules for a [`QuadratureSpec`].
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub spec: QuadratureSpec,
    s_rule: Rule,
    /// `cos(theta_k)` and weights for `int_0^{2 pi} d theta` folded onto `[0, pi]`.
    theta_cos: Vec<f64>,
    theta_w: Vec<f64>,
    x_rule: Arc<Rule>,
}

impl Quadrature {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let g = spec.grading as i32;
        let s_rule = Rule::graded(spec.n_s, g)?;
        let t_rule = Rule::graded(spec.n_theta, g)?;
        let theta_cos = t_rule.nodes.iter().map(|&t| (PI * t).cos()).collect();
        let theta_w = t_rule.weights.iter().map(|&w| 2.0 * PI * w).collect();
        let per_panel = (spec.n_x / 8).clamp(4, 64);
        Ok(Quadrature {
            spec,
            s_rule,
            theta_cos,
            theta_w,
            x_rule: Arc::new(Rule::gauss_legendre(per_panel)?),
        })
    }

    pub fn x_rule(&self) -> &Rule {
        &self.x_rule
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::new(QuadratureSpec::default()).expect("default spec is valid")
    }
}

#[inline]
fn clamp_radicand(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -RADICAND_TOL {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!("negative radicand {v} outside the s-bracket")))
    }
}

/// `Y_*(x, y, z, s, theta)`.
pub fn y_star(x: f64, y: f64, z: f64, s: f64, theta: f64) -> Result<f64> {
    for v in [x, y, z, s, theta] {
        if !v.is_finite() {
            return Err(Error::domain("y_star arguments must be finite"));
        }
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = y_star_legs(x, y, z, s)?;
    Ok(modulus(a, b, theta.cos()))
}

/// `(sqrt((z - c)_+), sqrt((x - c)_+))` with `c = (x - y + s^2)^2 / (4 s^2)`.
#[inline]
fn y_star_legs(x: f64, y: f64, z: f64, s: f64) -> Result<(f64, f64)> {
    let q = x - y + s * s;
    let c = q * q / (4.0 * s * s);
    Ok((clamp_radicand(z - c)?.sqrt(), clamp_radicand(x - c)?.sqrt()))
}

/// `|a + e^{i theta} b|` given `cos theta`.
#[inline]
fn modulus(a: f64, b: f64, cos_t: f64) -> f64 {
    (a * a + b * b + 2.0 * a * b * cos_t).max(0.0).sqrt()
}

fn check_energies(x: f64, y: f64, z: f64) -> Result<()> {
    for (name, v) in [("x", x), ("y", y), ("z", z)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::domain(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    Ok(())
}

/// Value of `W` on the boundary where exactly one argument vanishes; `None`
/// when `x_* x y z > 0` so that the interior formula applies.
fn boundary(model: &PhiModel, x: f64, y: f64, z: f64) -> Option<f64> {
    let xs = (y + z - x).max(0.0);
    if xs > 0.0 && x > 0.0 && y > 0.0 && z > 0.0 {
        return None;
    }
    let s2 = std::f64::consts::SQRT_2;
    let phi = |r: f64, rho: f64| {
        let s = model.phi_hat(r) + model.phi_hat(rho);
        s * s
    };
    let v = if x == 0.0 && y > 0.0 && z > 0.0 {
        phi(s2 * y.sqrt(), s2 * z.sqrt()) / (y * z).sqrt()
    } else if y == 0.0 && z > x && x > 0.0 {
        phi(s2 * x.sqrt(), s2 * (z - x).sqrt()) / (x * z).sqrt()
    } else if z == 0.0 && y > x && x > 0.0 {
        phi(s2 * (y - x).sqrt(), s2 * x.sqrt()) / (x * y).sqrt()
    } else {
        0.0
    };
    Some(v)
}

/// `s`-bracket `[lo, hi]` of the interior formula.
#[inline]
pub(crate) fn s_bracket(x: f64, y: f64, z: f64) -> (f64, f64) {
    let xs = (y + z - x).max(0.0);
    let (rx, ry, rz, rs) = (x.sqrt(), y.sqrt(), z.sqrt(), xs.sqrt());
    let lo = (rx - ry).abs().max((rs - rz).abs());
    let hi = (rx + ry).min(rs + rz);
    (lo, hi)
}

/// `int_lo^hi ds int_0^{2 pi} Phi(sqrt2 s, sqrt2 Y_*) d theta` for `x_* x y z > 0`.
pub(crate) fn interior_integral(model: &PhiModel, x: f64, y: f64, z: f64, quad: &Quadrature) -> Result<f64> {
    let (lo, hi) = s_bracket(x, y, z);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let h = hi - lo;
    let s2 = std::f64::consts::SQRT_2;
    if let PhiModel::HardSphere = model {
        return Ok(2.0 * PI * h);
    }
    let mut acc = 0.0;
    for (&t, &ws) in quad.s_rule.nodes.iter().zip(&quad.s_rule.weights) {
        let s = lo + h * t;
        let (a, b) = y_star_legs(x, y, z, s)?;
        let ps = model.phi_hat(s2 * s);
        let mut inner = 0.0;
        for (&c, &wt) in quad.theta_cos.iter().zip(&quad.theta_w) {
            let v = ps + model.phi_hat(s2 * modulus(a, b, c));
            inner += wt * v * v;
        }
        acc += ws * inner;
    }
    Ok(acc * h)
}

/// Collision weight `W(x, y, z)`.
///
/// The hard-sphere interior value still goes through the bracket and the
/// `2 pi` angular factor; only the constant integrand is skipped.
pub fn w(model: &PhiModel, x: f64, y: f64, z: f64, quad: &Quadrature) -> Result<f64> {
    check_energies(x, y, z)?;
    if let Some(v) = boundary(model, x, y, z) {
        return Ok(v);
    }
    let inner = interior_integral(model, x, y, z, quad)?;
    Ok(inner / (4.0 * PI * (x * y * z).sqrt()))
}

/// Hard-sphere `W = min(sqrt x, sqrt x_*, sqrt y, sqrt z) / sqrt(xyz)` with
/// the boundary branches.
pub fn w_hard_sphere_closed(x: f64, y: f64, z: f64) -> f64 {
    if let Some(v) = boundary(&PhiModel::HardSphere, x, y, z) {
        return v;
    }
    let xs = y + z - x;
    let m = x.min(xs).min(y).min(z).sqrt();
    m / (x * y * z).sqrt()
}

/// `phi(x) + phi(x_*) - phi(y) - phi(z)`.
pub fn delta_phi(phi: &dyn TestFunction, x: f64, y: f64, z: f64) -> f64 {
    if (x == y || x == z) && x <= y + z {
        return 0.0;
    }
    let xs = (y + z - x).max(0.0);
    phi.eval(x) + phi.eval(xs) - phi.eval(y) - phi.eval(z)
}

/// `K[phi](x, y, z) = W Delta phi`.
pub fn k_op(model: &PhiModel, phi: &dyn TestFunction, x: f64, y: f64, z: f64, quad: &Quadrature) -> Result<f64> {
    check_energies(x, y, z)?;
    // W is the expensive factor; skip it where the exchange leaves phi unchanged
    let d = delta_phi(phi, x, y, z);
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(w(model, x, y, z, quad)? * d)
}

/// Sorted breakpoints of the `x`-integral in `J[phi](y, z)`.
pub(crate) fn j_breakpoints(y: f64, z: f64, kinks: &[f64]) -> Vec<f64> {
    let s = y + z;
    let mut pts = vec![0.0, s, y, z, 0.5 * s];
    for &k in kinks {
        pts.push(k);
        pts.push(s - k);
    }
    pts.retain(|&p| p >= 0.0 && p <= s && p.is_finite());
    pts.sort_by(f64::total_cmp);
    let tol = 1e-14 * s.max(1.0);
    pts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    pts
}

/// Calls `f(x, weight)` for a composite rule on `[0, y + z]` split at the
/// breakpoints. The first and last panels use the square-root substitution
/// toward `x = 0` and `x = y + z`.
pub(crate) fn for_each_x_node(pts: &[f64], rule: &Rule, mut f: impl FnMut(f64, f64) -> Result<()>) -> Result<()> {
    let np = pts.len() - 1;
    for p in 0..np {
        let (a, b) = (pts[p], pts[p + 1]);
        let h = b - a;
        if !(h > 0.0) {
            continue;
        }
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            if p == 0 {
                f(a + h * t * t, wt * 2.0 * t * h)?;
            } else if p + 1 == np {
                f(b - h * t * t, wt * 2.0 * t * h)?;
            } else {
                f(a + h * t, wt * h)?;
            }
        }
    }
    Ok(())
}

/// `J[phi](y, z) = 1/2 int_0^{y+z} K[phi](x, y, z) sqrt(x) dx`.
pub fn j_op(model: &PhiModel, phi: &dyn TestFunction, y: f64, z: f64, quad: &Quadrature) -> Result<f64> {
    check_energies(0.0, y, z)?;
    let s = y + z;
    if s == 0.0 {
        return Ok(0.0);
    }
    let pts = j_breakpoints(y, z, &phi.kinks());
    let per_panel = (quad.spec.n_x / (pts.len() - 1).max(1)).max(4);
    let rule = if per_panel == quad.x_rule.len() {
        quad.x_rule.as_ref().clone()
    } else {
        Rule::gauss_legendre(per_panel)?
    };
    let mut acc = 0.0;
    for_each_x_node(&pts, &rule, |x, wt| {
        acc += wt * k_op(model, phi, x, y, z, quad)? * x.sqrt();
        Ok(())
    })?;
    Ok(0.5 * acc)
}

/// Convex-positivity split `(K1, K2)`.
pub fn k_split(
    model: &PhiModel,
    phi: &dyn TestFunction,
    x: f64,
    y: f64,
    z: f64,
    quad: &Quadrature,
) -> Result<(f64, f64)> {
    check_energies(x, y, z)?;
    k_split_with(phi, x, y, z, || w(model, x, y, z, quad))
}

/// [`k_split`] with `W(x, y, z)` supplied lazily by the caller.
pub(crate) fn k_split_with(
    phi: &dyn TestFunction,
    x: f64,
    y: f64,
    z: f64,
    wv: impl FnOnce() -> Result<f64>,
) -> Result<(f64, f64)> {
    if !(y <= z) {
        return Ok((0.0, 0.0));
    }
    let chi = if y < z { 2.0 } else { 1.0 };
    if x < y {
        let dsym = phi.eval(z + y - x) + phi.eval(z + x - y) - 2.0 * phi.eval(z);
        Ok((chi * wv()? * dsym, 0.0))
    } else if y > 0.0 && z < x && x < y + z {
        Ok((0.0, chi * wv()? * delta_phi(phi, x, y, z)))
    } else {
        Ok((0.0, 0.0))
    }
}
