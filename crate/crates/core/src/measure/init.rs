//! Initial-data constructors: the condensing two-bump datum and Mehler
//! smoothing.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::{project_dx, Grid, IsotropicMeasure, Projection};
use crate::diagnostics::bec_constants;
use crate::equilibrium::temp_ratio;
use crate::error::{Error, Result};
use crate::quad::Rule;

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn bump_integral(t: f64) -> f64 {
    static RULE: OnceLock<Rule> = OnceLock::new();
    let rule = RULE.get_or_init(|| Rule::gauss_legendre(40).expect("static order"));
    let t = t.clamp(-1.0, 1.0);
    if t <= -1.0 {
        return 0.0;
    }
    // four panels keep the flat shoulders of the bump well resolved
    let h = (t + 1.0) / 4.0;
    (0..4).map(|k| rule.integrate(-1.0 + k as f64 * h, -1.0 + (k + 1) as f64 * h, bump)).sum()
}

/// Distribution function of the normalized mollifier `c1 exp(-1/(1-x^2))` on `(-1, 1)`.
pub fn mollifier_cdf(t: f64) -> f64 {
    static TOTAL: OnceLock<f64> = OnceLock::new();
    let total = *TOTAL.get_or_init(|| bump_integral(1.0));
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        bump_integral(t) / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBumpCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

/// Output of [`make_two_bump_condensing`].
#[derive(Debug, Clone)]
pub struct TwoBump {
    pub measure: IsotropicMeasure,
    pub eps_used: f64,
    /// The admissible `eps` of the threshold construction; `None` when `eta >= 1/4`.
    pub eps_admissible: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub lambda: f64,
    /// `temp_ratio >= 1`: the datum will not condense.
    pub high_temperature: bool,
    pub checks: Vec<TwoBumpCheck>,
}

impl TwoBump {
    pub fn all_checked_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Failed)
    }
}

/// Two mollified plateaus `a 1[eps/4, 3eps/4] + b 1[delta/4, 3delta/4]` with
/// mass `n` and energy `e`, hat-projected onto `grid`.
///
/// `eps_override` replaces the admissible `eps`, which is usually far below
/// any representable scale.
pub fn make_two_bump_condensing(
    n: f64,
    e: f64,
    b0: f64,
    eta: f64,
    grid: &Arc<Grid>,
    eps_override: Option<f64>,
) -> Result<TwoBump> {
    if !(n > 0.0 && e > 0.0 && n.is_finite() && e.is_finite()) {
        return Err(Error::domain(format!("two-bump datum needs n, e > 0, got ({n}, {e})")));
    }
    let consts = if eta < 0.25 { Some(bec_constants(n, e, b0, eta)?) } else { None };
    let eps_admissible = consts.map(|c| {
        c.eps_admissible_max
            .min(e / (2.0 * n))
            .min((n / (27.0 * c.a_star)).powf(1.0 / c.alpha))
    });
    let eps = match (eps_override, eps_admissible) {
        (Some(v), _) => v,
        (None, Some(v)) => v,
        (None, None) => return Err(Error::config("eta >= 1/4 has no admissible eps; supply an override")),
    };
    if !(eps > 0.0 && eps <= e / (2.0 * n)) {
        return Err(Error::config(format!("eps = {eps} must lie in (0, E/(2N)] = (0, {}]", e / (2.0 * n))));
    }
    let x = grid.nodes();
    let lambda = eps / 8.0;
    if x[1] > lambda {
        return Err(Error::config(format!(
            "grid too coarse: x_1 = {} exceeds eps/8 = {lambda}; refine near 0 or raise eps",
            x[1]
        )));
    }
    let delta = 3.0 * e / n;
    let top = 0.75 * delta + lambda;
    if top > grid.x_max() {
        return Err(Error::config(format!("x_max = {} must be at least {top}", grid.x_max())));
    }
    let a = 2.0 * e / (eps * (delta - eps));
    let b = 2.0 * n * (2.0 * e / n - eps) / (delta * (delta - eps));
    let edges = [(0.25 * eps, 0.75 * eps, a), (0.25 * delta, 0.75 * delta, b)];
    let g = |t: f64| -> f64 {
        edges
            .iter()
            .map(|&(l, r, h)| h * (mollifier_cdf((t - l) / lambda) - mollifier_cdf((t - r) / lambda)))
            .sum()
    };
    let mut breaks = Vec::new();
    for &(l, r, _) in &edges {
        for c in [l, r] {
            for k in 0..=8 {
                breaks.push(c - lambda + k as f64 * lambda / 4.0);
            }
        }
    }
    let masses = project_dx(&g, grid, Projection::Hat, &breaks)?;
    let measure = IsotropicMeasure::new(grid.clone(), masses)?;

    let mut checks = Vec::new();
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let mut push = |name, ok: bool, detail: String| {
        let status = if ok { CheckStatus::Passed } else { CheckStatus::Failed };
        checks.push(TwoBumpCheck { name, status, detail });
    };
    let pre_n = 0.5 * (a * eps + b * delta);
    let pre_e = 0.25 * (a * eps * eps + b * delta * delta);
    push("plateau_moments", rel(pre_n, n) < 1e-12 && rel(pre_e, e) < 1e-12, format!("N(G0) = {pre_n}, E(G0) = {pre_e}"));
    let (mn, me) = (measure.mass(), measure.energy());
    push("mass", rel(mn, n) < 1e-6, format!("N(F0) = {mn}"));
    push("energy", rel(me, e) < 1e-6, format!("E(F0) = {me}"));
    let outside = g(0.999 * lambda) + g(top * 1.0001);
    push("support", outside == 0.0 && measure.condensate() == 0.0, format!("density outside support = {outside}"));
    let n02 = measure.n0p(1.5 * eps, 2.0);
    let low = 0.5 * a * eps;
    push("n02_vs_low_mass", n02 >= low / 9.0 * (1.0 - 1e-6), format!("N_02 = {n02}, F0([0,eps])/9 = {}", low / 9.0));
    match (consts, eps_admissible) {
        (Some(c), Some(ep)) if eps <= ep => {
            let thr = c.a_star * eps.powf(c.alpha);
            push("threshold", n02 >= thr, format!("N_02 = {n02} vs A* eps^alpha = {thr}"));
        }
        _ => checks.push(TwoBumpCheck {
            name: "threshold",
            status: CheckStatus::Skipped,
            detail: format!("eps = {eps} is not admissible (bound {eps_admissible:?})"),
        }),
    }
    Ok(TwoBump {
        measure,
        eps_used: eps,
        eps_admissible,
        a,
        b,
        delta,
        lambda,
        high_temperature: temp_ratio(n, e)? >= 1.0,
        checks,
    })
}

/// Mehler smoothing at index `k >= 1`:
/// `f_k = (1 - 1/(2k)) f_reg + h_k`, where `h_k` is the isotropic Mehler
/// transform of `mu_k = f_reg/(2k) + nu` at temperature `2 E(mu_k) / (3 N(mu_k))`.
///
/// `nu` is the condensate plus the nodes flagged in `singular`.
pub fn mehler_smooth(f: &IsotropicMeasure, k: u32, singular: Option<&[bool]>) -> Result<IsotropicMeasure> {
    if k == 0 {
        return Err(Error::domain("smoothing index must be >= 1"));
    }
    let grid = f.grid().clone();
    let x = grid.nodes();
    let m = f.masses();
    if let Some(s) = singular {
        if s.len() != m.len() {
            return Err(Error::domain("singular mask length differs from the grid"));
        }
    }
    let is_sing = |i: usize| i == 0 || singular.is_some_and(|s| s[i]);
    let kf = k as f64;
    let mu: Vec<f64> = (0..m.len()).map(|i| if is_sing(i) { m[i] } else { m[i] / (2.0 * kf) }).collect();
    let n_mu: f64 = mu.iter().sum();
    let e_mu: f64 = mu.iter().zip(x).map(|(a, b)| a * b).sum();
    if !(f.mass() > 0.0) {
        return Err(Error::domain("Mehler smoothing needs positive mass"));
    }
    if !(e_mu > 0.0) {
        return Err(Error::domain("Mehler smoothing needs positive energy (temperature would vanish)"));
    }
    let temp = 2.0 * e_mu / (3.0 * n_mu);
    let damp = (-2.0 * kf).exp();
    let sigma2 = temp * damp;
    let sigma = sigma2.sqrt();
    let a = (-(-2.0 * kf).exp_m1()).sqrt();
    let norm = 4.0 * PI * (2.0 * PI * sigma2).powf(-1.5);
    let rule = Rule::gauss_legendre(10)?;
    let mut h = vec![0.0; m.len()];
    let mut lost = 0.0;
    let x1 = x[1];
    let mut sub_x1 = 0.0;
    for (i, &w) in mu.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let c = a * (2.0 * x[i]).sqrt();
        let lo = (c - 12.0 * sigma).max(0.0);
        let hi = c + 12.0 * sigma;
        let panels = (((hi - lo) / (0.5 * sigma)).ceil() as usize).max(1);
        let ph = (hi - lo) / panels as f64;
        for p in 0..panels {
            let (pa, pb) = (lo + p as f64 * ph, lo + (p + 1) as f64 * ph);
            for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let u = pa + (pb - pa) * t;
                let ring = if c > 0.0 && u > 0.0 {
                    let q2 = 2.0 * c * u / sigma2;
                    ((-(u - c).powi(2) / (2.0 * sigma2)).exp() * (-(-q2).exp_m1())) * sigma2 / (2.0 * c * u)
                } else {
                    (-u * u / (2.0 * sigma2)).exp()
                };
                let dm = w * norm * u * u * ring * wt * (pb - pa);
                let xe = 0.5 * u * u;
                if xe < x1 {
                    // node 0 must stay empty; extrapolating onto nodes 1 and 2
                    // would go negative when x_2 - x_1 << x_1, so the energy
                    // excess dm (x_1 - xe) is accepted instead
                    h[1] += dm;
                    sub_x1 += dm * (x1 - xe);
                } else if !grid.deposit(&mut h, xe, dm) {
                    lost += dm;
                }
            }
        }
    }
    let total = f.mass();
    if lost > 1e-7 * total {
        return Err(Error::config(format!(
            "Mehler kernel leaks {lost} past x_max = {}; enlarge the grid",
            grid.x_max()
        )));
    }
    if sub_x1 > 1e-3 * f.energy() {
        return Err(Error::config(format!(
            "grid does not resolve the Mehler scale sigma^2 = {sigma2}: x_1 = {x1} shifts the energy by {sub_x1}"
        )));
    }
    let keep = 1.0 - 1.0 / (2.0 * kf);
    let mut out = vec![0.0; m.len()];
    for i in 1..m.len() {
        let reg = if is_sing(i) { 0.0 } else { m[i] };
        let v = keep * reg + h[i];
        if v < 0.0 {
            if v < -1e-13 * total {
                return Err(Error::config(format!(
                    "grid does not resolve the Mehler scale sigma^2 = {sigma2} (negative mass {v} at node {i})"
                )));
            }
            out[i] = 0.0;
        } else {
            out[i] = v;
        }
    }
    if sub_x1 > 0.0 {
        // mass-preserving tilt out_i (1 + lambda (xbar - x_i)) removes the excess
        let n: f64 = out.iter().sum();
        let xbar = out.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n;
        let var: f64 = out.iter().zip(x).map(|(a, b)| a * (b - xbar).powi(2)).sum();
        if var > 0.0 {
            let lambda = sub_x1 / var;
            if lambda * (grid.x_max() - xbar) >= 0.5 {
                return Err(Error::config(format!(
                    "grid does not resolve the Mehler scale sigma^2 = {sigma2}: energy correction too large"
                )));
            }
            for (v, &xi) in out.iter_mut().zip(x) {
                *v *= 1.0 + lambda * (xbar - xi);
            }
        }
    }
    IsotropicMeasure::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{project_density, Projection};

    #[test]
    fn mollifier_is_normalized_and_symmetric() {
        assert_eq!(mollifier_cdf(-1.0), 0.0);
        assert_eq!(mollifier_cdf(1.0), 1.0);
        assert!((mollifier_cdf(0.0) - 0.5).abs() < 1e-14);
        assert!((mollifier_cdf(0.3) + mollifier_cdf(-0.3) - 1.0).abs() < 1e-14);
        // c1 = 1 / int exp(-1/(1-x^2)), mpmath
        let c1 = 1.0 / bump_integral(1.0);
        assert!((c1 - 2.252_283_621_043_581).abs() < 1e-12, "{c1}");
    }

    fn geo() -> Arc<Grid> {
        Arc::new(Grid::geometric(128, 12.0, 1.05).unwrap())
    }

    #[test]
    fn two_bump_moments_and_support() {
        let g = geo();
        let tb = make_two_bump_condensing(1.0, 0.3, 0.5, 0.0, &g, Some(0.05)).unwrap();
        assert!((0.5 * (tb.a * 0.05 + tb.b * tb.delta) - 1.0).abs() < 1e-12);
        assert!((0.25 * (tb.a * 0.0025 + tb.b * tb.delta * tb.delta) - 0.3).abs() < 1e-12);
        assert!((tb.measure.mass() - 1.0).abs() < 1e-6);
        assert!((tb.measure.energy() - 0.3).abs() < 1e-6 * 0.3);
        assert!(tb.all_checked_pass(), "{:?}", tb.checks);
        let thr = tb.checks.iter().find(|c| c.name == "threshold").unwrap();
        assert_eq!(thr.status, CheckStatus::Skipped);
        assert!(tb.eps_admissible.unwrap() < 1e-30);
    }

    #[test]
    fn two_bump_rejects_coarse_grids() {
        let g = Arc::new(Grid::linear(16, 4.0).unwrap());
        let e = make_two_bump_condensing(1.0, 0.3, 0.5, 0.0, &g, Some(0.05)).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let e = make_two_bump_condensing(1.0, 0.3, 0.5, 0.0, &geo(), None).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn mehler_preserves_moments_and_entropy_bound() {
        let g = geo();
        let base = project_density(&|x: f64| 0.4 * (-(x - 1.0).powi(2)).exp(), &g, Projection::Cell).unwrap();
        let mut m = base.masses().to_vec();
        m[0] = 0.3;
        let f = IsotropicMeasure::new(g, m).unwrap();
        for k in 1..=2 {
            let s = mehler_smooth(&f, k, None).unwrap();
            assert_eq!(s.condensate(), 0.0);
            assert!(((s.mass() - f.mass()) / f.mass()).abs() < 1e-6);
            assert!(((s.energy() - f.energy()) / f.energy()).abs() < 1e-6);
            let bound = (1.0 - 0.5 / k as f64) * f.entropy();
            assert!(s.entropy() >= bound - 1e-8);
        }
    }

    #[test]
    fn mehler_of_singular_atoms_is_regular() {
        let g = geo();
        let mut m = vec![0.0; g.len()];
        m[0] = 0.5;
        m[100] = 0.5;
        let mut mask = vec![false; g.len()];
        mask[100] = true;
        let f = IsotropicMeasure::new(g.clone(), m.clone()).unwrap();
        let s = mehler_smooth(&f, 1, Some(&mask)).unwrap();
        assert!(((s.mass() - 1.0) / 1.0).abs() < 1e-6);
        assert!(((s.energy() - f.energy()) / f.energy()).abs() < 1e-6);
        assert!(s.entropy() > 0.0);
        let pure = IsotropicMeasure::new(g, {
            let mut v = vec![0.0; m.len()];
            v[0] = 1.0;
            v
        })
        .unwrap();
        assert!(matches!(mehler_smooth(&pure, 1, None), Err(Error::Domain(_))));
    }

    #[test]
    fn mehler_tends_to_identity() {
        let g = geo();
        let f = project_density(&|x: f64| (-x).exp(), &g, Projection::Cell).unwrap();
        let s = mehler_smooth(&f, 200, None).unwrap();
        assert!(f.norm1(&s).unwrap() < 1e-2 * f.mass());
    }
}
