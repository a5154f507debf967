//! Entropy dissipation `D(f)` on node triples.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{w, PhiModel, Quadrature};
use crate::measure::IsotropicMeasure;
use crate::solver::CollisionTable;

/// Per-triple cap on the `Gamma = inf` branch.
pub const DEFAULT_GAMMA_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dissipation {
    pub value: f64,
    /// Triples that hit the infinite branch of `Gamma` and were capped.
    pub capped: usize,
}

/// `Gamma(a, b) = (a - b) ln(a/b)`, `+inf` when exactly one argument is 0.
pub fn gamma_pair(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        if a == b {
            0.0
        } else {
            (a - b) * (a / b).ln()
        }
    } else if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Densities at node positions plus linear interpolation in between; below
/// `x_1` the first cell density is used.
struct DensityInterp<'a> {
    f: Vec<f64>,
    m: &'a IsotropicMeasure,
}

impl<'a> DensityInterp<'a> {
    fn new(m: &'a IsotropicMeasure) -> Self {
        DensityInterp { f: m.densities(), m }
    }

    fn at(&self, x: f64) -> f64 {
        let (b, t) = self.m.grid().bracket(x);
        self.bracketed(b, t)
    }

    fn bracketed(&self, b: usize, t: f64) -> f64 {
        if b == 0 {
            self.f[1]
        } else {
            (1.0 - t) * self.f[b] + t * self.f[b + 1]
        }
    }
}

/// One triple's `Pi Gamma(g_j g_k, g_i g_*)`, capped.
fn triple_term(fi: f64, fj: f64, fk: f64, fs: f64, cap: f64) -> (f64, bool) {
    let g = |f: f64| f / (1.0 + f);
    let pi = (1.0 + fi) * (1.0 + fs) * (1.0 + fj) * (1.0 + fk);
    let gm = gamma_pair(g(fj) * g(fk), g(fi) * g(fs));
    if gm.is_infinite() {
        (cap, true)
    } else {
        ((pi * gm).min(cap), false)
    }
}

fn check_cap(cap: f64) -> Result<()> {
    if cap > 0.0 && cap.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma cap must be positive and finite, got {cap}")))
    }
}

/// `D = pi sqrt2 sum_{i,j,k >= 1} w_i w_j w_k sqrt(x_i x_j x_k) W Pi Gamma`
/// over all node triples with `0 <= x_* <= x_max`.
pub fn entropy_dissipation(f: &IsotropicMeasure, model: &PhiModel, quad: &Quadrature, cap: f64) -> Result<Dissipation> {
    check_cap(cap)?;
    let grid = f.grid();
    let x = grid.nodes();
    let wd = grid.widths();
    let n = x.len();
    let dens = DensityInterp::new(f);
    let per_j: Vec<Result<(f64, usize)>> = (1..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            let mut capped = 0;
            for k in j..n {
                let s = x[j] + x[k];
                let mult = if j == k { 1.0 } else { 2.0 };
                for i in 1..n {
                    if x[i] >= s {
                        break;
                    }
                    let xs = s - x[i];
                    if xs > grid.x_max() {
                        continue;
                    }
                    let wv = w(model, x[i], x[j], x[k], quad)?;
                    if wv == 0.0 {
                        continue;
                    }
                    let (t, c) = triple_term(dens.f[i], dens.f[j], dens.f[k], dens.at(xs), cap);
                    capped += c as usize;
                    acc += mult * wd[i] * wd[j] * wd[k] * (x[i] * x[j] * x[k]).sqrt() * wv * t;
                }
            }
            Ok((acc, capped))
        })
        .collect();
    let mut value = 0.0;
    let mut capped = 0;
    for r in per_j {
        let (a, c) = r?;
        value += a;
        capped += c;
    }
    Ok(Dissipation { value: PI * SQRT_2 * value, capped })
}

/// Same sum restricted to the solver's truncated triple set, reusing the
/// stored weights.
pub fn entropy_dissipation_table(f: &IsotropicMeasure, table: &CollisionTable, cap: f64) -> Result<Dissipation> {
    check_cap(cap)?;
    if !std::sync::Arc::ptr_eq(f.grid(), table.grid()) && f.grid().nodes() != table.grid().nodes() {
        return Err(Error::domain("measure and collision table use different grids"));
    }
    let grid = f.grid();
    let x = grid.nodes();
    let wd = grid.widths();
    let dens = DensityInterp::new(f);
    let parts: Vec<Result<(f64, usize)>> = table
        .rows
        .par_chunks(crate::solver::ROW_CHUNK)
        .map(|rows| {
            let mut acc = 0.0;
            let mut capped = 0;
            for r in rows {
                let (j, k) = (r.j as usize, r.k as usize);
                if j == 0 {
                    continue;
                }
                let mult = if j == k { 1.0 } else { 2.0 };
                for tr in table.triples_of(r)?.iter() {
                    let i = tr.l as usize;
                    if i == 0 || tr.w == 0.0 {
                        continue;
                    }
                    let fs = dens.bracketed(tr.b as usize, tr.t);
                    let (t, c) = triple_term(dens.f[i], dens.f[j], dens.f[k], fs, cap);
                    capped += c as usize;
                    acc += mult * wd[i] * wd[j] * wd[k] * (x[i] * x[j] * x[k]).sqrt() * tr.w * t;
                }
            }
            Ok((acc, capped))
        })
        .collect();
    let mut value = 0.0;
    let mut capped = 0;
    for r in parts {
        let (a, c) = r?;
        value += a;
        capped += c;
    }
    Ok(Dissipation { value: PI * SQRT_2 * value, capped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{equilibrium_measure, solve_equilibrium};
    use crate::measure::Grid;
    use std::sync::Arc;

    #[test]
    fn gamma_conventions() {
        assert_eq!(gamma_pair(0.0, 0.0), 0.0);
        assert_eq!(gamma_pair(1.0, 0.0), f64::INFINITY);
        assert_eq!(gamma_pair(0.0, 2.0), f64::INFINITY);
        assert_eq!(gamma_pair(0.3, 0.3), 0.0);
        assert!((gamma_pair(2.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(gamma_pair(1.0, 2.0) > 0.0);
    }

    #[test]
    fn equilibrium_detailed_balance() {
        // g_be(x) = e^{-x/kappa}/A, so g(y) g(z) = g(x) g(x_*) whenever x + x_* = y + z
        let (a, kappa) = (1.3f64, 0.7f64);
        let g = |x: f64| (-x / kappa).exp() / a;
        for &(x, y, z) in &[(0.1, 0.5, 0.9), (1.0, 1.2, 2.0), (0.0, 0.3, 0.4)] {
            let xs = y + z - x;
            assert!((g(y) * g(z) - g(x) * g(xs)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_measure_and_positivity() {
        let g = Arc::new(Grid::geometric(16, 6.0, 1.1).unwrap());
        let q = Quadrature::default();
        let zero = IsotropicMeasure::zero(g.clone());
        assert_eq!(entropy_dissipation(&zero, &PhiModel::HardSphere, &q, DEFAULT_GAMMA_CAP).unwrap().value, 0.0);
        let m: Vec<f64> = g.nodes().iter().map(|&x| (1.0 + x.sin().abs()) * x.sqrt()).collect();
        let f = IsotropicMeasure::new(g, m).unwrap();
        let d = entropy_dissipation(&f, &PhiModel::HardSphere, &q, DEFAULT_GAMMA_CAP).unwrap();
        assert!(d.value > 0.0);
        assert_eq!(d.capped, 0);
    }

    #[test]
    fn equilibrium_dissipation_is_small() {
        let st = solve_equilibrium(1.0, 2.0 / crate::equilibrium::c_star()).unwrap();
        let q = Quadrature::default();
        let mut prev = f64::INFINITY;
        for n in [32, 64] {
            let g = Arc::new(Grid::geometric(n, 16.0, 1.03).unwrap());
            let f = equilibrium_measure(&st, &g).unwrap();
            let d = entropy_dissipation(&f, &PhiModel::HardSphere, &q, DEFAULT_GAMMA_CAP).unwrap();
            let mut noise = f.clone().into_masses();
            for (i, v) in noise.iter_mut().enumerate() {
                *v *= 1.0 + 0.2 * ((i % 3) as f64 - 1.0);
            }
            let off = IsotropicMeasure::new(g, noise).unwrap();
            let d_off = entropy_dissipation(&off, &PhiModel::HardSphere, &q, DEFAULT_GAMMA_CAP).unwrap();
            assert!(d.value < 0.05 * d_off.value, "n = {n}: {} vs {}", d.value, d_off.value);
            assert!(d.value < prev);
            prev = d.value;
        }
    }
}
