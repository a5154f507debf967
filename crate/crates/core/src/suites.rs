//! Randomized property suites over the kernel, the weak-form functionals and
//! Mehler smoothing. Shared by the `validate` command and the acceptance
//! tests; every suite is seeded and reports its worst violation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    j_sum, jj_lower_bound, kk2_lower_bound, kk_lower_bound, mc_reduce_check, w, w_hard_sphere_closed, AtomWeights,
    PhiModel, Quadrature, QuadratureSpec,
};
use crate::measure::{mehler_smooth, Grid, IsotropicMeasure};
use crate::testfn::{PhiEps, Quadratic, TestFunction};

/// Sample sizes of the suites.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteBudget {
    pub triples: usize,
    pub measures: usize,
    pub mc_samples: usize,
    pub mehler_inputs: usize,
}

impl Default for SuiteBudget {
    fn default() -> Self {
        SuiteBudget { triples: 10_000, measures: 1_000, mc_samples: 10_000_000, mehler_inputs: 100 }
    }
}

impl SuiteBudget {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (k, v) in [("triples", self.triples), ("measures", self.measures), ("mehler_inputs", self.mehler_inputs)] {
            if v == 0 {
                errs.push(format!("validate.{k} must be positive"));
            }
        }
        if self.mc_samples < 10_000 {
            errs.push(format!("validate.mc_samples must be >= 10000, got {}", self.mc_samples));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::config(errs.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub model: String,
    pub checks: usize,
    pub violations: usize,
    /// Largest violation margin seen, 0 when clean.
    pub worst: f64,
    pub passed: bool,
    pub detail: String,
}

/// Counts checks of `lhs >= rhs - tol`.
#[derive(Default)]
struct Tally {
    checks: usize,
    violations: usize,
    worst: f64,
    first: Option<String>,
}

impl Tally {
    fn ge(&mut self, lhs: f64, rhs: f64, tol: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        let gap = rhs - lhs;
        if !(gap <= tol) {
            self.violations += 1;
            self.worst = self.worst.max(if gap.is_nan() { f64::INFINITY } else { gap });
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn report(self, name: &str, model: &str) -> SuiteReport {
        let detail = match self.first {
            Some(s) => format!("first violation: {s}"),
            None => format!("{} checks clean", self.checks),
        };
        SuiteReport {
            name: name.into(),
            model: model.into(),
            checks: self.checks,
            violations: self.violations,
            worst: self.worst,
            passed: self.violations == 0,
            detail,
        }
    }
}

fn model_label(model: &PhiModel) -> String {
    match model {
        PhiModel::EtaModel { b0, eta } => format!("eta_model({b0}, {eta})"),
        m => m.name().to_string(),
    }
}

/// `Phi = 1` routed through the general tensor quadrature instead of the
/// hard-sphere shortcut.
fn constant_tabulated() -> PhiModel {
    PhiModel::Tabulated { r: vec![0.0, 1.0], phi_hat: vec![0.5, 0.5] }
}

/// Hard-sphere `W` from the bracket formula and from the full quadrature
/// against `min(sqrt x, sqrt x_*, sqrt y, sqrt z)/sqrt(xyz)` on random
/// triples in `(0, 10]^3`, plus exact boundary branches.
pub fn kernel_closed_form(n: usize, seed: u64, quad: &Quadrature) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tab = constant_tabulated();
    let mut t = Tally::default();
    for _ in 0..n {
        let (x, y, z) = (10.0 - rng.gen_range(0.0..10.0), 10.0 - rng.gen_range(0.0..10.0), 10.0 - rng.gen_range(0.0..10.0));
        let want = w_hard_sphere_closed(x, y, z);
        for (label, got) in [("bracket", w(&PhiModel::HardSphere, x, y, z, quad)?), ("quadrature", w(&tab, x, y, z, quad)?)] {
            let err = if want == 0.0 { got.abs() } else { (got - want).abs() / want };
            t.ge(1e-6, err, 0.0, || format!("{label} W({x}, {y}, {z}) = {got}, closed form {want}"));
        }
        // one vanishing argument: W is Phi / sqrt of the other two, Phi = 1
        let (a, b) = (y.min(z), y.max(z));
        let exact = [
            (w(&PhiModel::HardSphere, 0.0, y, z, quad)?, 1.0 / (y * z).sqrt()),
            (w(&PhiModel::HardSphere, a, 0.0, b, quad)?, 1.0 / (a * b).sqrt()),
            (w(&PhiModel::HardSphere, a, b, 0.0, quad)?, 1.0 / (a * b).sqrt()),
        ];
        for (got, want) in exact {
            if a < b || got != 0.0 {
                t.ge(4.0 * f64::EPSILON * want, (got - want).abs(), 0.0, || format!("boundary branch {got} vs {want}"));
            }
        }
    }
    Ok(t.report("kernel_closed_form", "hard_sphere"))
}

/// Symmetry, exchange monotonicity, `Phi <= 1` and, for the eta-model, the
/// lower bound `W >= b0^2/8 z^eta / sqrt(yz)` on `0 <= x < y <= z <= 1`.
pub fn kernel_inequalities(model: &PhiModel, n: usize, seed: u64, quad: &Quadrature) -> Result<SuiteReport> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    const TOL: f64 = 1e-8;
    for _ in 0..n {
        let (x, y, z) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let a = w(model, x, y, z, quad)?;
        let b = w(model, x, z, y, quad)?;
        t.ge(TOL * a.abs().max(1.0), (a - b).abs(), 0.0, || format!("symmetry W({x}, {y}, {z}) = {a} vs {b}"));
        let hs = w_hard_sphere_closed(x, y, z);
        t.ge(hs, a, TOL * hs.max(1.0), || format!("Phi <= 1: W({x}, {y}, {z}) = {a} above {hs}"));
        let mut s = [x, y, z];
        s.sort_by(f64::total_cmp);
        let [p, q, r] = s;
        if p < q && model.is_monotone() {
            let wx = w(model, p, q, r, quad)?;
            let wy = w(model, q, p, r, quad)?;
            t.ge(wx, wy, TOL * wx.max(1.0), || format!("exchange W({q}, {p}, {r}) = {wy} > W({p}, {q}, {r}) = {wx}"));
        }
        if let PhiModel::EtaModel { b0, eta } = *model {
            let mut u = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), 1.0 - rng.gen_range(0.0..1.0)];
            u.sort_by(f64::total_cmp);
            let [p, q, r] = u;
            if p < q {
                let wv = w(model, p, q, r, quad)?;
                let bound = b0 * b0 / 8.0 * r.powf(eta) / (q * r).sqrt();
                t.ge(wv, bound, TOL * bound.max(1.0), || format!("lower bound W({p}, {q}, {r}) = {wv} < {bound}"));
            }
        }
    }
    Ok(t.report("kernel_inequalities", &model_label(model)))
}

/// Smooth bump `prod (t (2 - t))^2` on `[0, 2]^3`.
pub fn reduction_bump(x: f64, y: f64, z: f64) -> f64 {
    let b = |t: f64| if t > 0.0 && t < 2.0 { (t * (2.0 - t)).powi(2) } else { 0.0 };
    b(x) * b(y) * b(z)
}

/// Monte Carlo over velocities against the energy-variable quadrature of
/// the reduction identity; passes within three standard errors.
pub fn reduction_identity(model: &PhiModel, samples: usize, seed: u64, quad: &Quadrature) -> Result<SuiteReport> {
    let r = mc_reduce_check(model, &reduction_bump, 2.0, samples, seed, quad)?;
    let z = r.z_score();
    Ok(SuiteReport {
        name: "reduction_identity".into(),
        model: model_label(model),
        checks: 1,
        violations: (z >= 3.0) as usize,
        worst: if z >= 3.0 { z } else { 0.0 },
        passed: z < 3.0,
        detail: format!(
            "mc {} +- {} vs quadrature {} ({} samples, z = {z:.3})",
            r.mc_estimate, r.stderr, r.quadrature_value, r.samples
        ),
    })
}

/// Random atomic measure with 1 to 10 atoms in `[0, x_hi]`; node 0 is
/// occupied with probability 1/4.
fn random_atoms(rng: &mut ChaCha8Rng, x_hi: f64) -> Result<IsotropicMeasure> {
    let n = rng.gen_range(1..=10);
    let mut atoms = Vec::with_capacity(n + 1);
    if rng.gen_bool(0.25) {
        atoms.push((0.0, rng.gen_range(0.01..1.0)));
    }
    for _ in 0..n {
        atoms.push((x_hi - rng.gen_range(0.0..x_hi), rng.gen_range(0.01..1.0)));
    }
    IsotropicMeasure::from_atoms(&atoms)
}

/// Triple sum of `K[phi]` against the split `K1 + K2`, both nonnegative,
/// for `phi_eps` and random convex quadratics.
pub fn convex_positivity(model: &PhiModel, n: usize, seed: u64, quad: &Quadrature) -> Result<SuiteReport> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    const TOL: f64 = 1e-10;
    for _ in 0..n {
        let f = random_atoms(&mut rng, 4.0)?;
        let pe = PhiEps { eps: rng.gen_range(0.1..3.0) };
        let qd = Quadratic { a: rng.gen_range(0.0..2.0), b: rng.gen_range(-2.0..2.0), c: rng.gen_range(-1.0..1.0) };
        let phis: [(&str, &dyn TestFunction); 2] = [("phi_eps", &pe), ("quadratic", &qd)];
        let aw = AtomWeights::new(model, &f, quad)?;
        for (name, phi) in phis {
            let k = aw.k_sum(phi);
            let (k1, k2) = aw.k_split_sum(phi);
            let scale = 1.0 + k.abs();
            t.ge(k, -TOL, 0.0, || format!("{name}: K sum {k} negative"));
            t.ge(k, k1 + k2, TOL * scale, || format!("{name}: K sum {k} below split {k1} + {k2}"));
            t.ge(k1, -TOL, 0.0, || format!("{name}: K1 sum {k1} negative"));
            t.ge(k2, -TOL, 0.0, || format!("{name}: K2 sum {k2} negative"));
        }
    }
    Ok(t.report("convex_positivity", &model_label(model)))
}

/// The explicit lower bounds for `sum J[phi_eps]` and `sum K[phi_eps]` on
/// random measures in `[0, 1]`, eta-model with `b0 = 1/2`.
pub fn functional_bounds(eta: f64, n: usize, seed: u64, quad: &Quadrature) -> Result<SuiteReport> {
    let b0 = 0.5;
    let model = PhiModel::eta_model(b0, eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    const TOL: f64 = 1e-8;
    let gamma_max = 24f64.powf(-2.0 / 3.0);
    for _ in 0..n {
        let f = random_atoms(&mut rng, 1.0)?;
        let eps = 1.0 - rng.gen_range(0.0..1.0);
        let phi = PhiEps { eps };
        let j = j_sum(&model, &phi, &f, quad)?;
        let jb = jj_lower_bound(&f, b0, eta, eps)?;
        t.ge(j, jb, TOL, || format!("J sum {j} below {jb} at eps {eps}"));
        let aw = AtomWeights::new(&model, &f, quad)?;
        let k = aw.k_sum(&phi);
        let alpha = rng.gen_range(0.0..1.0 - eta);
        let kb = kk_lower_bound(&f, b0, eta, alpha, eps)?;
        t.ge(k, kb, TOL, || format!("K sum {k} below {kb} at eps {eps}, alpha {alpha}"));
        let eps2 = 2.0 / 3.0 - rng.gen_range(0.0..2.0 / 3.0);
        let gamma = gamma_max - rng.gen_range(0.0..gamma_max);
        let k2 = aw.k_sum(&PhiEps { eps: eps2 });
        let kb2 = kk2_lower_bound(&f, b0, eta, gamma, eps2)?;
        t.ge(k2, kb2, TOL, || format!("K sum {k2} below {kb2} at eps {eps2}, gamma {gamma}"));
    }
    Ok(t.report("functional_bounds", &model_label(&model)))
}

/// Mass and energy conservation and the entropy bound
/// `S(f_k) >= (1 - 1/(2k)) S(F)` on random Gaussian-bump inputs, half of
/// them with a condensate of up to half the regular mass.
pub fn mehler_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sigma^2 = T e^{-2k} reaches ~1e-5 at k = 4; x_1 ~ 1e-7 resolves it
    let grid = Arc::new(Grid::geometric(180, 24.0, 1.1)?);
    let mut t = Tally::default();
    for _ in 0..n {
        let centre = rng.gen_range(0.3..3.0);
        let width = rng.gen_range(0.2..1.5);
        let amp = rng.gen_range(0.05..1.0);
        let mut m: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(grid.widths())
            .map(|(&x, &wd)| amp * (-((x - centre) / width).powi(2)).exp() * x.sqrt() * wd * rng.gen_range(0.5..1.5))
            .collect();
        // a condensate dominating the regular part cools the Mehler kernel
        // below the grid's resolution, which mehler_smooth refuses
        let reg: f64 = m[1..].iter().sum();
        m[0] = if rng.gen_bool(0.5) { rng.gen_range(0.0..0.5) * reg } else { 0.0 };
        let f = IsotropicMeasure::new(grid.clone(), m)?;
        let k = rng.gen_range(1..=4u32);
        let s = mehler_smooth(&f, k, None)?;
        let dm = (s.mass() - f.mass()).abs() / f.mass();
        let de = (s.energy() - f.energy()).abs() / f.energy();
        t.ge(1e-6, dm, 0.0, || format!("mass drift {dm} at k = {k}"));
        t.ge(1e-6, de, 0.0, || format!("energy drift {de} at k = {k}"));
        let bound = (1.0 - 0.5 / k as f64) * f.entropy();
        let se = s.entropy();
        t.ge(se, bound, 1e-8, || format!("entropy {se} below {bound} at k = {k}"));
    }
    Ok(t.report("mehler_smoothing", "none"))
}

/// Quadrature for the functional-bound suite. Against the default rule it
/// moves the `J` sums by at most ~3e-7 while the bounds keep slack above
/// ~6e-4, and it is ten times cheaper.
pub fn bounds_quadrature() -> Result<Quadrature> {
    Quadrature::new(QuadratureSpec { n_s: 32, n_theta: 32, n_x: 128, grading: 3 })
}

/// Every suite on hard spheres and `eta_model(0.5, 0.2)`.
pub fn run_all(budget: &SuiteBudget, seed: u64, quad: &Quadrature) -> Result<Vec<SuiteReport>> {
    budget.validate()?;
    let models = [PhiModel::HardSphere, PhiModel::eta_model(0.5, 0.2)?];
    let mut out = vec![kernel_closed_form(budget.triples, seed, quad)?];
    for (i, m) in models.iter().enumerate() {
        let s = seed.wrapping_add(1000 * (i as u64 + 1));
        out.push(kernel_inequalities(m, budget.triples, s, quad)?);
        out.push(reduction_identity(m, budget.mc_samples, s + 1, quad)?);
        out.push(convex_positivity(m, budget.measures, s + 2, quad)?);
    }
    out.push(functional_bounds(0.2, budget.measures, seed.wrapping_add(7), &bounds_quadrature()?)?);
    out.push(mehler_suite(budget.mehler_inputs, seed.wrapping_add(8))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn small_budgets_pass() {
        let q = quad();
        let eta = PhiModel::eta_model(0.5, 0.2).unwrap();
        for r in [
            kernel_closed_form(200, 1, &q).unwrap(),
            kernel_inequalities(&PhiModel::HardSphere, 200, 2, &q).unwrap(),
            kernel_inequalities(&eta, 200, 3, &q).unwrap(),
            convex_positivity(&eta, 20, 4, &q).unwrap(),
            functional_bounds(0.2, 20, 5, &q).unwrap(),
            mehler_suite(10, 6).unwrap(),
        ] {
            assert!(r.passed, "{}: {}", r.name, r.detail);
            assert!(r.checks > 0);
        }
    }

    #[test]
    fn tally_flags_violations() {
        let mut t = Tally::default();
        t.ge(1.0, 0.0, 0.0, || "never".into());
        t.ge(0.0, 1.0, 0.5, || "gap".into());
        t.ge(f64::NAN, 0.0, 0.0, || "nan".into());
        let r = t.report("x", "y");
        assert_eq!((r.checks, r.violations), (3, 2));
        assert!(!r.passed && r.detail.contains("gap") && r.worst.is_infinite());
    }

    #[test]
    fn budget_validation() {
        assert!(SuiteBudget::default().validate().is_ok());
        let b = SuiteBudget { mc_samples: 10, triples: 0, ..SuiteBudget::default() };
        let e = b.validate().unwrap_err().to_string();
        assert!(e.contains("validate.triples") && e.contains("validate.mc_samples"));
    }
}
