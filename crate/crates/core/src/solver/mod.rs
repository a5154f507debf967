//! Conservative Galerkin time stepping on hat test functions.
//!
//! `dm_i/dt = sum_{j,k} m_j m_k J[h_i](x_j, x_k)
//!          + sum_{l,j,k} m_l m_j m_k W(x_l, x_j, x_k) Delta h_i(x_l, x_j, x_k)`
//! with both sums restricted to `x_j + x_k <= x_max`. Every contribution is
//! deposited on hats, so `sum dm_i = 0` and `sum x_i dm_i = 0` hold up to
//! roundoff.

mod table;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    distance_report, entropy_dissipation_table, DiagnosticsRecord, EquilibriumReference, Snapshot,
    DEFAULT_GAMMA_CAP,
};
use crate::error::{Error, Result};
use crate::kernel::{PhiModel, Quadrature};
use crate::measure::IsotropicMeasure;

pub use table::{estimate_bytes, CollisionTable, JRule, TableMode, TableSpec};

/// Pair rows per parallel work unit. Fixed so that the reduction order does
/// not depend on the thread count.
pub(crate) const ROW_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    SspRk3,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded samples.
    pub output_stride: usize,
    /// Negative masses below `-positivity_tol * N` reject the step.
    pub positivity_tol: f64,
    pub max_halvings: u32,
    /// Bound on `dt (N + N^2) max|W|` checked before a run starts.
    pub cfl_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            integrator: Integrator::Rk4,
            dt: 1e-3,
            t_end: 1.0,
            output_stride: 100,
            positivity_tol: 1e-10,
            max_halvings: 20,
            cfl_limit: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("solver.dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            errs.push(format!("solver.t_end must be nonnegative, got {}", self.t_end));
        }
        if self.output_stride == 0 {
            errs.push("solver.output_stride must be at least 1".to_string());
        }
        if !(self.cfl_limit > 0.0 && self.cfl_limit.is_finite()) {
            errs.push(format!("solver.cfl_limit must be positive and finite, got {}", self.cfl_limit));
        }
        if !(self.positivity_tol >= 0.0) {
            errs.push(format!("solver.positivity_tol must be nonnegative, got {}", self.positivity_tol));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::config(errs.join("; ")))
        }
    }
}

fn check_grid(f: &IsotropicMeasure, table: &CollisionTable) -> Result<()> {
    if Arc::ptr_eq(f.grid(), table.grid()) || f.grid().nodes() == table.grid().nodes() {
        Ok(())
    } else {
        Err(Error::domain("measure and collision table use different grids"))
    }
}

/// Largest `dt` allowed by `dt (N + N^2) max|W| <= cfl_limit`.
pub fn max_stable_dt(f: &IsotropicMeasure, table: &CollisionTable, cfl_limit: f64) -> f64 {
    let n = f.mass();
    let scale = (n + n * n) * table.max_w();
    if scale > 0.0 {
        cfl_limit / scale
    } else {
        f64::INFINITY
    }
}

fn check_cfl(f: &IsotropicMeasure, table: &CollisionTable, config: &SolverConfig) -> Result<()> {
    let dt_max = max_stable_dt(f, table, config.cfl_limit);
    if config.dt > dt_max {
        return Err(Error::config(format!(
            "solver.dt = {} breaks the step guard dt (N + N^2) max|W| <= {}; use solver.dt <= {dt_max:.3e}",
            config.dt, config.cfl_limit
        )));
    }
    Ok(())
}

/// Mass-rate vector `dm/dt`.
pub fn rhs(f: &IsotropicMeasure, table: &CollisionTable) -> Result<Vec<f64>> {
    check_grid(f, table)?;
    rhs_masses(f.masses(), table)
}

fn rhs_masses(m: &[f64], table: &CollisionTable) -> Result<Vec<f64>> {
    let n = m.len();
    let parts: Vec<Result<Vec<f64>>> = table
        .rows
        .par_chunks(ROW_CHUNK)
        .map(|rows| {
            let mut out = vec![0.0; n];
            for r in rows {
                let (j, k) = (r.j as usize, r.k as usize);
                let pm = if j == k { m[j] * m[j] } else { 2.0 * m[j] * m[k] };
                if pm == 0.0 {
                    continue;
                }
                for (&i, &v) in r.j_idx.iter().zip(&r.j_val) {
                    out[i as usize] += pm * v;
                }
                let mut lost = 0.0;
                for tr in table.triples_of(r)?.iter() {
                    let rate = pm * m[tr.l as usize] * tr.ws;
                    if rate == 0.0 {
                        continue;
                    }
                    let b = tr.b as usize;
                    out[tr.l as usize] += rate;
                    out[b] += (1.0 - tr.t) * rate;
                    out[b + 1] += tr.t * rate;
                    lost += rate;
                }
                out[j] -= lost;
                out[k] -= lost;
            }
            Ok(out)
        })
        .collect();
    let mut acc = vec![0.0; n];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p?) {
            *a += v;
        }
    }
    Ok(acc)
}

fn axpy(m: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    m.iter().zip(d).map(|(x, y)| x + a * y).collect()
}

fn explicit_step(m: &[f64], dt: f64, integrator: Integrator, table: &CollisionTable) -> Result<Vec<f64>> {
    match integrator {
        Integrator::Euler => Ok(axpy(m, dt, &rhs_masses(m, table)?)),
        Integrator::SspRk3 => {
            let u1 = axpy(m, dt, &rhs_masses(m, table)?);
            let l1 = rhs_masses(&u1, table)?;
            let u2: Vec<f64> =
                m.iter().zip(&u1).zip(&l1).map(|((a, b), c)| 0.75 * a + 0.25 * (b + dt * c)).collect();
            let l2 = rhs_masses(&u2, table)?;
            Ok(m.iter().zip(&u2).zip(&l2).map(|((a, b), c)| a / 3.0 + 2.0 / 3.0 * (b + dt * c)).collect())
        }
        Integrator::Rk4 => {
            let k1 = rhs_masses(m, table)?;
            let k2 = rhs_masses(&axpy(m, 0.5 * dt, &k1), table)?;
            let k3 = rhs_masses(&axpy(m, 0.5 * dt, &k2), table)?;
            let k4 = rhs_masses(&axpy(m, dt, &k3), table)?;
            Ok((0..m.len()).map(|i| m[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
        }
    }
}

/// Clips negatives to zero and removes the gained mass and energy from the
/// two heaviest nodes. Returns the number of clipped nodes.
fn clip_and_repair(m: &mut [f64], x: &[f64]) -> usize {
    let mut dn = 0.0;
    let mut de = 0.0;
    let mut clipped = 0;
    for (v, &xi) in m.iter_mut().zip(x) {
        if *v < 0.0 {
            dn -= *v;
            de -= *v * xi;
            *v = 0.0;
            clipped += 1;
        }
    }
    if clipped == 0 {
        return 0;
    }
    let mut idx: Vec<usize> = (0..m.len()).collect();
    idx.sort_by(|&a, &b| m[b].total_cmp(&m[a]).then(a.cmp(&b)));
    let (a, b) = (idx[0], idx[1]);
    // da + db = dn, x_a da + x_b db = de
    let db = (de - x[a] * dn) / (x[b] - x[a]);
    let da = dn - db;
    m[a] -= da;
    m[b] -= db;
    clipped
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub dt_used: f64,
    pub halvings: u32,
    pub clipped: usize,
}

/// One explicit step of at most `dt`; on a positivity failure `dt` is halved.
pub fn step(
    f: &IsotropicMeasure,
    dt: f64,
    integrator: Integrator,
    table: &CollisionTable,
    positivity_tol: f64,
    max_halvings: u32,
    t: f64,
) -> Result<(IsotropicMeasure, StepStats)> {
    check_grid(f, table)?;
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be positive, got {dt}")));
    }
    let x = f.grid().nodes();
    let floor = -positivity_tol * f.mass();
    let mut h = dt;
    let mut worst = 0;
    for halvings in 0..=max_halvings {
        let mut m = explicit_step(f.masses(), h, integrator, table)?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite mass after a step at t = {t}")));
        }
        let (imin, vmin) = m.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        if vmin >= floor {
            let clipped = clip_and_repair(&mut m, x);
            let g = IsotropicMeasure::from_parts_unchecked(f.grid().clone(), m);
            return Ok((g, StepStats { dt_used: h, halvings, clipped }));
        }
        worst = imin;
        h *= 0.5;
    }
    Err(Error::Stiff { t, halvings: max_halvings, node: worst })
}

#[derive(Debug, Clone, Serialize)]
pub struct Conservation {
    pub mass_drift: f64,
    pub energy_drift: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub records: Vec<DiagnosticsRecord>,
    pub reference: EquilibriumReference,
    pub steps: usize,
    pub halvings: u64,
    pub clipped: u64,
    /// Max relative deviation of `N` and `E` from their initial values.
    pub drift: Conservation,
}

/// Diagnostics options used while running.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunDiagnostics {
    /// Reference `eps` for `N_{0,2}` in the records.
    pub n02_eps: f64,
    pub dissipation: bool,
    pub gamma_cap: f64,
}

impl Default for RunDiagnostics {
    fn default() -> Self {
        RunDiagnostics { n02_eps: 0.1, dissipation: true, gamma_cap: DEFAULT_GAMMA_CAP }
    }
}

fn record(
    t: f64,
    f: &IsotropicMeasure,
    table: &CollisionTable,
    reference: &EquilibriumReference,
    diag: &RunDiagnostics,
    prev_s: Option<f64>,
) -> Result<DiagnosticsRecord> {
    let s = f.entropy();
    let d = if diag.dissipation {
        entropy_dissipation_table(f, table, diag.gamma_cap)?
    } else {
        crate::diagnostics::Dissipation { value: f64::NAN, capped: 0 }
    };
    let dist = distance_report(f, &reference.discrete)?;
    Ok(DiagnosticsRecord {
        t,
        n: f.mass(),
        e: f.energy(),
        s,
        d: d.value,
        d_capped: d.capped,
        m0: f.condensate(),
        n02: f.n0p(diag.n02_eps, 2.0),
        dist1: dist.dist1,
        dist1circ: dist.dist1circ,
        entropy_gap: dist.entropy_gap,
        ds: prev_s.map_or(0.0, |p| s - p),
    })
}

/// Integrates from `f0` to `config.t_end`, sampling every `output_stride`
/// steps and at the final time.
pub fn run(
    f0: &IsotropicMeasure,
    table: &CollisionTable,
    config: &SolverConfig,
    diag: &RunDiagnostics,
) -> Result<Trajectory> {
    config.validate()?;
    check_grid(f0, table)?;
    check_cfl(f0, table, config)?;
    let reference = EquilibriumReference::new(f0.grid(), f0.mass(), f0.energy())?;
    let mut snapshots = vec![Snapshot { t: 0.0, measure: f0.clone() }];
    let mut records = vec![record(0.0, f0, table, &reference, diag, None)?];
    let (n0, e0) = (f0.mass(), f0.energy());
    let mut drift = Conservation { mass_drift: 0.0, energy_drift: 0.0 };
    let mut f = f0.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut halvings = 0u64;
    let mut clipped = 0u64;
    let mut since = 0usize;
    let t_end = config.t_end;
    while t < t_end {
        let h = config.dt.min(t_end - t);
        let (g, st) = step(&f, h, config.integrator, table, config.positivity_tol, config.max_halvings, t)?;
        f = g;
        t = if st.dt_used == h && h < config.dt { t_end } else { t + st.dt_used };
        // accumulated roundoff must not leave a sliver step before t_end
        if t_end - t < 1e-9 * config.dt {
            t = t_end;
        }
        steps += 1;
        halvings += st.halvings as u64;
        clipped += st.clipped as u64;
        if st.halvings == 0 {
            since += 1;
        }
        if n0 > 0.0 {
            drift.mass_drift = drift.mass_drift.max((f.mass() - n0).abs() / n0);
        }
        if e0 > 0.0 {
            drift.energy_drift = drift.energy_drift.max((f.energy() - e0).abs() / e0);
        }
        let done = t >= t_end;
        if since >= config.output_stride || done {
            since = 0;
            let prev = records.last().map(|r| r.s);
            records.push(record(t, &f, table, &reference, diag, prev)?);
            snapshots.push(Snapshot { t, measure: f.clone() });
        }
    }
    Ok(Trajectory { snapshots, records, reference, steps, halvings, clipped, drift })
}

/// Builds the table and runs; convenience over [`CollisionTable::build`] and [`run`].
pub fn run_with_model(
    f0: &IsotropicMeasure,
    model: &PhiModel,
    quad: &Arc<Quadrature>,
    table_spec: &TableSpec,
    config: &SolverConfig,
    diag: &RunDiagnostics,
) -> Result<Trajectory> {
    let table = CollisionTable::build(model, f0.grid(), quad, table_spec)?;
    run(f0, &table, config, diag)
}

/// `||rhs(f)||_1 = sum |dm_i/dt|`.
pub fn rhs_norm1(f: &IsotropicMeasure, table: &CollisionTable) -> Result<f64> {
    Ok(rhs(f, table)?.iter().map(|v| v.abs()).sum())
}

/// Largest per-node diagonal collision rate `sum_{j,k} m_j m_k W(x_l, x_j, x_k)`;
/// `dt` times this should stay below about 1 for explicit stability.
pub fn stiffness_estimate(f: &IsotropicMeasure, table: &CollisionTable) -> Result<f64> {
    check_grid(f, table)?;
    let m = f.masses();
    let mut rate = vec![0.0; m.len()];
    for r in &table.rows {
        let (j, k) = (r.j as usize, r.k as usize);
        let pm = if j == k { m[j] * m[j] } else { 2.0 * m[j] * m[k] };
        for tr in table.triples_of(r)?.iter() {
            rate[tr.l as usize] += pm * tr.ws;
        }
    }
    Ok(rate.into_iter().fold(0.0, f64::max))
}
