//! Weak-form collision integrals against atomic measures and the explicit
//! lower bounds they satisfy for `phi_eps(x) = ((1 - x/eps)_+)^2`.

use crate::error::{Error, Result};
use crate::measure::IsotropicMeasure;
use crate::testfn::TestFunction;

use super::{delta_phi, j_op, k_split_with, w, PhiModel, Quadrature};

/// Nonzero atoms `(x, m)` of `f`.
fn atoms(f: &IsotropicMeasure) -> Vec<(f64, f64)> {
    f.grid().nodes().iter().copied().zip(f.masses().iter().copied()).filter(|&(_, m)| m != 0.0).collect()
}

/// `sum_{j,k} m_j m_k J[phi](x_j, x_k)`.
pub fn j_sum(model: &PhiModel, phi: &dyn TestFunction, f: &IsotropicMeasure, quad: &Quadrature) -> Result<f64> {
    let a = atoms(f);
    let mut acc = 0.0;
    for (j, &(y, mj)) in a.iter().enumerate() {
        for &(z, mk) in &a[j..] {
            let mult = if y == z { 1.0 } else { 2.0 };
            acc += mult * mj * mk * j_op(model, phi, y, z, quad)?;
        }
    }
    Ok(acc)
}

/// `W(x_i, x_j, x_k)` over the atoms of a measure for `j <= k`, so that
/// several test functions share one set of kernel evaluations.
#[derive(Debug, Clone)]
pub struct AtomWeights {
    atoms: Vec<(f64, f64)>,
    /// Indexed by `(i * n + j) * n + k`; entries with `j > k` stay unused.
    w: Vec<f64>,
}

impl AtomWeights {
    pub fn new(model: &PhiModel, f: &IsotropicMeasure, quad: &Quadrature) -> Result<Self> {
        let atoms = atoms(f);
        let n = atoms.len();
        let mut wv = vec![0.0; n * n * n];
        for (i, &(x, _)) in atoms.iter().enumerate() {
            for j in 0..n {
                for k in j..n {
                    wv[(i * n + j) * n + k] = w(model, x, atoms[j].0, atoms[k].0, quad)?;
                }
            }
        }
        Ok(AtomWeights { atoms, w: wv })
    }

    /// `sum_{i,j,k} m_i m_j m_k K[phi](x_i, x_j, x_k)`.
    pub fn k_sum(&self, phi: &dyn TestFunction) -> f64 {
        let a = &self.atoms;
        let n = a.len();
        let mut acc = 0.0;
        for (i, &(x, mi)) in a.iter().enumerate() {
            for (j, &(y, mj)) in a.iter().enumerate() {
                for (k, &(z, mk)) in a.iter().enumerate().skip(j) {
                    let mult = if y == z { 1.0 } else { 2.0 };
                    let wv = self.w[(i * n + j) * n + k];
                    if wv != 0.0 {
                        acc += mult * mi * mj * mk * wv * delta_phi(phi, x, y, z);
                    }
                }
            }
        }
        acc
    }

    /// `(sum m_i m_j m_k K1, sum m_i m_j m_k K2)`; `chi` already accounts
    /// for the `y <-> z` doubling, so only `y <= z` is visited.
    pub fn k_split_sum(&self, phi: &dyn TestFunction) -> (f64, f64) {
        let a = &self.atoms;
        let n = a.len();
        let (mut s1, mut s2) = (0.0, 0.0);
        for (i, &(x, mi)) in a.iter().enumerate() {
            for (j, &(y, mj)) in a.iter().enumerate() {
                for (k, &(z, mk)) in a.iter().enumerate().skip(j) {
                    let wv = self.w[(i * n + j) * n + k];
                    let (k1, k2) = k_split_with(phi, x, y, z, || Ok(wv)).expect("cached weight is infallible");
                    s1 += mi * mj * mk * k1;
                    s2 += mi * mj * mk * k2;
                }
            }
        }
        (s1, s2)
    }
}

/// `sum_{i,j,k} m_i m_j m_k K[phi](x_i, x_j, x_k)`.
pub fn k_sum(model: &PhiModel, phi: &dyn TestFunction, f: &IsotropicMeasure, quad: &Quadrature) -> Result<f64> {
    Ok(AtomWeights::new(model, f, quad)?.k_sum(phi))
}

/// `(sum m_i m_j m_k K1, sum m_i m_j m_k K2)` over atoms with `y <= z`.
pub fn k_split_sum(
    model: &PhiModel,
    phi: &dyn TestFunction,
    f: &IsotropicMeasure,
    quad: &Quadrature,
) -> Result<(f64, f64)> {
    Ok(AtomWeights::new(model, f, quad)?.k_split_sum(phi))
}

fn check_eps(eps: f64, hi: f64) -> Result<()> {
    if eps > 0.0 && eps <= hi {
        Ok(())
    } else {
        Err(Error::domain(format!("eps must lie in (0, {hi}], got {eps}")))
    }
}

/// Lower bound for `sum J[phi_eps]`:
/// `b0^2/134 eps^{3/2} (sum_{x in [eps/2, 1]} m x^{-(1-eta)/2})^2 - 2 M_{1/2} N_{0,2}(eps)`.
pub fn jj_lower_bound(f: &IsotropicMeasure, b0: f64, eta: f64, eps: f64) -> Result<f64> {
    check_eps(eps, 1.0)?;
    let s: f64 = atoms(f)
        .iter()
        .filter(|&&(x, _)| x >= 0.5 * eps && x <= 1.0)
        .map(|&(x, m)| m * x.powf(-(1.0 - eta) / 2.0))
        .sum();
    Ok(b0 * b0 / 134.0 * eps.powf(1.5) * s * s - 2.0 * f.moment(0.5) * f.n0p(eps, 2.0))
}

/// Lower bound for `sum K[phi_eps]`:
/// `b0^2/8 underline N_{alpha,2}(eps) A_{beta,p}(eps)^2`, `p = 3/2 + alpha`,
/// `beta = (1 - alpha - eta)/2`; requires `0 <= alpha < 1 - eta`.
pub fn kk_lower_bound(f: &IsotropicMeasure, b0: f64, eta: f64, alpha: f64, eps: f64) -> Result<f64> {
    check_eps(eps, 1.0)?;
    if !(alpha >= 0.0 && alpha < 1.0 - eta) {
        return Err(Error::domain(format!("alpha must lie in [0, 1 - eta), got {alpha}")));
    }
    let p = 1.5 + alpha;
    let beta = (1.0 - alpha - eta) / 2.0;
    let a = f.a_alpha_p(eps, beta, p);
    Ok(b0 * b0 / 8.0 * f.underline_n_alpha_p(eps, alpha, 2.0) * a * a)
}

/// Lower bound for `sum K[phi_eps]`:
/// `b0^2/16 gamma^{3/2} eps^{eta-1} N_{0,2}(gamma eps) F([gamma eps, 3 eps/2])^2`;
/// requires `eps <= 2/3` and `0 < gamma <= 24^{-2/3}`.
pub fn kk2_lower_bound(f: &IsotropicMeasure, b0: f64, eta: f64, gamma: f64, eps: f64) -> Result<f64> {
    check_eps(eps, 2.0 / 3.0)?;
    if !(gamma > 0.0 && gamma <= 24f64.powf(-2.0 / 3.0)) {
        return Err(Error::domain(format!("gamma must lie in (0, 24^(-2/3)], got {gamma}")));
    }
    let band = f.mass_in(gamma * eps, 1.5 * eps);
    Ok(b0 * b0 / 16.0 * gamma.powf(1.5) * eps.powf(eta - 1.0) * f.n0p(gamma * eps, 2.0) * band * band)
}
