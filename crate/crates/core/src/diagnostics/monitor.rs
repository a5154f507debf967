//! Per-sample records, distances to equilibrium and the monotonicity checks
//! along a trajectory.

use std::sync::Arc;

use serde::Serialize;

use crate::equilibrium::{discrete_equilibrium, solve_equilibrium, DiscreteEquilibrium, EquilibriumState};
use crate::error::Result;
use crate::measure::{Grid, IsotropicMeasure};
use crate::testfn::TestFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub measure: IsotropicMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub n: f64,
    pub e: f64,
    pub s: f64,
    pub d: f64,
    pub d_capped: usize,
    pub m0: f64,
    pub n02: f64,
    pub dist1: f64,
    pub dist1circ: f64,
    pub entropy_gap: f64,
    /// Entropy increment since the previous sample.
    pub ds: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t,N,E,S,D,m0,n02_eps,dist1,dist1circ,dS";

    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.t, self.n, self.e, self.s, self.d, self.m0, self.n02, self.dist1, self.dist1circ, self.ds
        )
    }
}

/// Continuum equilibrium with the same `(N, E)` and the grid's discrete
/// maximum-entropy measure with identical discrete moments.
#[derive(Debug, Clone)]
pub struct EquilibriumReference {
    pub state: EquilibriumState,
    pub discrete: IsotropicMeasure,
    pub discrete_params: DiscreteEquilibrium,
}

impl EquilibriumReference {
    pub fn new(grid: &Arc<Grid>, n: f64, e: f64) -> Result<Self> {
        let state = solve_equilibrium(n, e)?;
        let (discrete, discrete_params) = discrete_equilibrium(grid, n, e)?;
        Ok(EquilibriumReference { state, discrete, discrete_params })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub dist1: f64,
    pub dist1circ: f64,
    pub entropy_gap: f64,
    pub condensate_gap: f64,
    /// `entropy_gap / dist1circ^2`, informational.
    pub gap_over_circ_sq: f64,
    /// `entropy_gap / sqrt(dist1circ)`, informational.
    pub gap_over_sqrt_circ: f64,
}

/// Gaps between `f` and an equilibrium measure on the same grid.
pub fn distance_report(f: &IsotropicMeasure, eq: &IsotropicMeasure) -> Result<DistanceReport> {
    let dist1 = f.norm1(eq)?;
    let dist1circ = f.norm1_circ(eq)?;
    let entropy_gap = eq.entropy() - f.entropy();
    let ratio = |d: f64| if d > 0.0 { entropy_gap / d } else { 0.0 };
    Ok(DistanceReport {
        dist1,
        dist1circ,
        entropy_gap,
        condensate_gap: (f.condensate() - eq.condensate()).abs(),
        gap_over_circ_sq: ratio(dist1circ * dist1circ),
        gap_over_sqrt_circ: ratio(dist1circ.sqrt()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonitorSpec {
    /// `eps` values for `e^{ct} N_{0,2}(F_t, eps)`.
    pub eps: Vec<f64>,
    /// Relative tolerance for the `e^{ct}` functionals.
    pub rel_tol: f64,
    /// Entropy may drop by at most `entropy_tol * |S|` per sample.
    pub entropy_tol: f64,
    /// Relative drift allowed in `N` and `E`.
    pub conservation_tol: f64,
}

impl Default for MonitorSpec {
    fn default() -> Self {
        MonitorSpec { eps: vec![0.1, 0.5], rel_tol: 1e-6, entropy_tol: 1e-9, conservation_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: String,
    /// Index of the later sample of the offending pair.
    pub index: usize,
    pub t: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MonotoneReport {
    pub violations: Vec<Violation>,
}

impl MonotoneReport {
    pub fn count(&self, kind: &str) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags decreases of `e^{ct} <phi, F_t>`, `e^{ct} N_{0,2}(F_t, eps)`,
/// `e^{ct} m_0(t)` and `S(F_t)`, and drifts of `N` and `E`.
///
/// `c` is the caller's rate, normally `sqrt(N E)`. Consecutive samples are
/// compared as `a_{k+1} >= e^{-c (t_{k+1} - t_k)} a_k - tol`, avoiding the
/// overflow of `e^{ct}` itself.
pub fn monitor_monotone(
    traj: &[Snapshot],
    phis: &[(&str, &dyn TestFunction)],
    c: f64,
    spec: &MonitorSpec,
) -> MonotoneReport {
    let mut out = MonotoneReport::default();
    if traj.is_empty() {
        return out;
    }
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for (name, phi) in phis {
        series.push((format!("phi:{name}"), traj.iter().map(|s| s.measure.integrate(*phi)).collect()));
    }
    for &eps in &spec.eps {
        series.push((format!("n02:{eps}"), traj.iter().map(|s| s.measure.n0p(eps, 2.0)).collect()));
    }
    series.push(("m0".to_string(), traj.iter().map(|s| s.measure.condensate()).collect()));
    for (kind, vals) in &series {
        for k in 1..traj.len() {
            let decay = (-c * (traj[k].t - traj[k - 1].t)).exp();
            let before = decay * vals[k - 1];
            let after = vals[k];
            if after < before - spec.rel_tol * before.abs().max(f64::MIN_POSITIVE) {
                out.violations.push(Violation { kind: kind.clone(), index: k, t: traj[k].t, before, after });
            }
        }
    }
    let s: Vec<f64> = traj.iter().map(|s| s.measure.entropy()).collect();
    for k in 1..traj.len() {
        if s[k] < s[k - 1] - spec.entropy_tol * s[k - 1].abs() {
            out.violations.push(Violation { kind: "entropy".into(), index: k, t: traj[k].t, before: s[k - 1], after: s[k] });
        }
    }
    let (n0, e0) = (traj[0].measure.mass(), traj[0].measure.energy());
    for (k, snap) in traj.iter().enumerate().skip(1) {
        let (n, e) = (snap.measure.mass(), snap.measure.energy());
        if (n - n0).abs() > spec.conservation_tol * n0.abs() {
            out.violations.push(Violation { kind: "mass".into(), index: k, t: snap.t, before: n0, after: n });
        }
        if (e - e0).abs() > spec.conservation_tol * e0.abs() {
            out.violations.push(Violation { kind: "energy".into(), index: k, t: snap.t, before: e0, after: e });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::c_star;
    use crate::testfn::{PhiEps, Quadratic};

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::geometric(32, 10.0, 1.05).unwrap())
    }

    #[test]
    fn constant_trajectory_is_clean() {
        let g = grid();
        let m: Vec<f64> = g.nodes().iter().map(|&x| (-x).exp() * x.sqrt() + 0.1).collect();
        let f = IsotropicMeasure::new(g, m).unwrap();
        let traj: Vec<Snapshot> = (0..5).map(|k| Snapshot { t: k as f64, measure: f.clone() }).collect();
        let q = Quadratic { a: 1.0, b: 0.0, c: 0.0 };
        let p = PhiEps { eps: 0.3 };
        let r = monitor_monotone(&traj, &[("x2", &q), ("eps", &p)], 0.5, &MonitorSpec::default());
        assert!(r.is_clean(), "{:?}", r.violations);
    }

    #[test]
    fn injected_drop_is_flagged() {
        let g = grid();
        let m: Vec<f64> = g.nodes().iter().map(|&x| (-x).exp() * x.sqrt()).collect();
        let f = IsotropicMeasure::new(g.clone(), m.clone()).unwrap();
        let mut m2 = m;
        m2[0] = 0.5;
        let with_c = IsotropicMeasure::new(g.clone(), m2.clone()).unwrap();
        m2[0] = 0.1;
        let dropped = IsotropicMeasure::new(g, m2).unwrap();
        let traj = vec![
            Snapshot { t: 0.0, measure: f },
            Snapshot { t: 0.1, measure: with_c },
            Snapshot { t: 0.2, measure: dropped },
        ];
        let r = monitor_monotone(&traj, &[], 0.0, &MonitorSpec::default());
        assert_eq!(r.count("m0"), 1);
        assert!(r.count("mass") >= 1);
        assert_eq!(r.violations.iter().find(|v| v.kind == "m0").unwrap().index, 2);
    }

    #[test]
    fn equilibrium_gaps_vanish() {
        let g = grid();
        let e = 0.5 / c_star();
        let r = EquilibriumReference::new(&g, 1.0, e).unwrap();
        let d = distance_report(&r.discrete, &r.discrete).unwrap();
        assert_eq!((d.dist1, d.dist1circ, d.entropy_gap, d.condensate_gap), (0.0, 0.0, 0.0, 0.0));
        assert!((d.condensate_gap - (r.discrete.condensate() - r.discrete_params.n0).abs()).abs() < 1e-15);
    }

    #[test]
    fn entropy_gap_nonnegative_on_perturbations() {
        let g = grid();
        let e = 1.5 / c_star();
        let r = EquilibriumReference::new(&g, 1.0, e).unwrap();
        let base = r.discrete.masses().to_vec();
        for k in 1..20 {
            // mass- and energy-neutral perturbation on three nodes
            let (a, b, c) = (k, k + 3, k + 7);
            let x = g.nodes();
            let amp = 1e-3 * base[b];
            // d_a + d_b + d_c = 0 and x_a d_a + x_b d_b + x_c d_c = 0 with d_b = -amp
            let d_c = amp * (x[b] - x[a]) / (x[c] - x[a]);
            let d_a = amp - d_c;
            let mut m = base.clone();
            m[a] += d_a;
            m[b] -= amp;
            m[c] += d_c;
            let f = IsotropicMeasure::new(g.clone(), m).unwrap();
            let d = distance_report(&f, &r.discrete).unwrap();
            assert!(d.entropy_gap >= -1e-12, "{}", d.entropy_gap);
        }
    }
}
