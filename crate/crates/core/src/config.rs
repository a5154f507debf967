//! Run configuration: a strict TOML file whose sections mirror the library
//! modules. Parsing reports every problem it finds in one pass.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{MonitorSpec, DEFAULT_GAMMA_CAP};
use crate::equilibrium::{c_star, equilibrium_measure, solve_equilibrium};
use crate::error::{Error, Result};
use crate::kernel::{PhiModel, QuadratureSpec};
use crate::measure::{make_two_bump_condensing, Grid, IsotropicMeasure, Spacing, TwoBump};
use crate::potential::PotentialSpec;
use crate::solver::{RunDiagnostics, SolverConfig, TableSpec};
use crate::suites::SuiteBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    HardSphere,
    EtaModel,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub b0: f64,
    pub eta: f64,
    /// Samples of `phi_hat` for `kind = "tabulated"`.
    pub r: Vec<f64>,
    pub phi_hat: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { kind: KernelKind::HardSphere, b0: 0.5, eta: 0.2, r: Vec::new(), phi_hat: Vec::new() }
    }
}

impl KernelConfig {
    pub fn model(&self) -> Result<PhiModel> {
        let m = match self.kind {
            KernelKind::HardSphere => PhiModel::HardSphere,
            KernelKind::EtaModel => PhiModel::EtaModel { b0: self.b0, eta: self.eta },
            KernelKind::Tabulated => PhiModel::Tabulated { r: self.r.clone(), phi_hat: self.phi_hat.clone() },
        };
        m.validate().map_err(|e| Error::config(format!("kernel: {e}")))?;
        Ok(m)
    }

    /// `(b0, eta)` for the condensation constants, which exist only for the
    /// eta model with `eta < 1/4`.
    pub fn bec_params(&self) -> Option<(f64, f64)> {
        (self.kind == KernelKind::EtaModel && self.eta < 0.25).then_some((self.b0, self.eta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Number of cells; the grid has `n + 1` nodes.
    pub n: usize,
    pub x_max: f64,
    pub spacing: Spacing,
    /// Width ratio of neighbouring cells, geometric spacing only.
    pub ratio: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 64, x_max: 16.0, spacing: Spacing::Linear, ratio: 1.05 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<Grid>> {
        let g = match self.spacing {
            Spacing::Linear => Grid::linear(self.n, self.x_max),
            Spacing::Geometric => Grid::geometric(self.n, self.x_max, self.ratio),
            Spacing::Custom => return Err(Error::config("grid.spacing = \"custom\" is only available through initial.path")),
        };
        g.map(Arc::new).map_err(|e| Error::config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Equilibrium with a sinusoidal perturbation of the regular part,
    /// corrected back to the target mass and energy.
    #[default]
    EquilibriumPerturbed,
    /// Two mollified plateaus with low temperature data.
    TwoBump,
    /// Node masses read from a `x,mass` CSV file, which also fixes the grid.
    CsvPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Total mass `N`.
    pub n: f64,
    /// Kinetic temperature ratio; sets `E = ratio N^{5/3} / c*` unless `e` is given.
    pub temp_ratio: Option<f64>,
    pub e: Option<f64>,
    pub amplitude: f64,
    pub mode: u32,
    /// Inner plateau scale for two-bump data.
    pub eps: Option<f64>,
    pub path: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::EquilibriumPerturbed,
            n: 1.0,
            temp_ratio: None,
            e: None,
            amplitude: 0.3,
            mode: 3,
            eps: None,
            path: None,
        }
    }
}

impl InitialConfig {
    /// Energy implied by `e` or `temp_ratio`; defaults to ratio 2.
    pub fn energy(&self) -> f64 {
        match (self.e, self.temp_ratio) {
            (Some(e), _) => e,
            (None, r) => r.unwrap_or(2.0) * self.n.powf(5.0 / 3.0) / c_star(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// `eps` values monitored through `e^{ct} N_{0,2}(F_t, eps)`.
    pub eps: Vec<f64>,
    /// `eps` of the `n02_eps` column.
    pub n02_eps: f64,
    pub dissipation: bool,
    pub gamma_cap: f64,
    pub monitor: bool,
    pub rel_tol: f64,
    pub entropy_tol: f64,
    pub conservation_tol: f64,
    /// Evaluate the condensation predictor on the initial data.
    pub predictor: bool,
    pub predictor_tau: f64,
    /// Defaults to the two-bump `eps` or the admissible bound.
    pub predictor_eps: Option<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        let m = MonitorSpec::default();
        DiagnosticsConfig {
            eps: m.eps,
            n02_eps: 0.1,
            dissipation: true,
            gamma_cap: DEFAULT_GAMMA_CAP,
            monitor: true,
            rel_tol: m.rel_tol,
            entropy_tol: m.entropy_tol,
            conservation_tol: m.conservation_tol,
            predictor: false,
            predictor_tau: 0.0,
            predictor_eps: None,
        }
    }
}

impl DiagnosticsConfig {
    pub fn monitor_spec(&self) -> MonitorSpec {
        MonitorSpec {
            eps: self.eps.clone(),
            rel_tol: self.rel_tol,
            entropy_tol: self.entropy_tol,
            conservation_tol: self.conservation_tol,
        }
    }

    pub fn run_diagnostics(&self) -> RunDiagnostics {
        RunDiagnostics { n02_eps: self.n02_eps, dissipation: self.dissipation, gamma_cap: self.gamma_cap }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub svg: bool,
    /// Write `state_<k>.csv` for every recorded sample.
    pub states: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), svg: true, states: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumConfig {
    pub n: f64,
    pub e: Option<f64>,
    pub temp_ratio: Option<f64>,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig { n: 1.0, e: None, temp_ratio: None }
    }
}

impl EquilibriumConfig {
    pub fn energy(&self) -> f64 {
        match (self.e, self.temp_ratio) {
            (Some(e), _) => e,
            (None, r) => r.unwrap_or(0.5) * self.n.powf(5.0 / 3.0) / c_star(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub eta: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_rho: usize,
    pub tol: f64,
    pub max_periods: usize,
    /// Radii of the Fourier round-trip check.
    pub r_samples: Vec<f64>,
    /// Half-periods budget of the inverse transform, in units of 16.
    pub budget: usize,
    /// Round-trip acceptance threshold.
    pub max_rel_err: f64,
    /// `U >= -positivity_tol` on the scan.
    pub positivity_tol: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        let s = PotentialSpec::new(0.5).expect("default potential spec is valid");
        PotentialConfig {
            eta: s.eta,
            rho_min: s.rho_min,
            rho_max: s.rho_max,
            n_rho: s.n_rho,
            tol: s.tol,
            max_periods: s.max_periods,
            r_samples: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            budget: 4,
            max_rel_err: 1e-3,
            positivity_tol: 1e-6,
        }
    }
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec> {
        let s = PotentialSpec {
            eta: self.eta,
            tol: self.tol,
            max_periods: self.max_periods,
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            n_rho: self.n_rho,
        };
        s.validate().map_err(|e| Error::config(format!("potential: {e}")))?;
        Ok(s)
    }
}

/// Everything a subcommand needs. Missing sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed of the Monte-Carlo and random property suites.
    pub seed: u64,
    pub kernel: KernelConfig,
    pub quadrature: QuadratureSpec,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub solver: SolverConfig,
    pub table: TableSpec,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    pub equilibrium: EquilibriumConfig,
    pub potential: PotentialConfig,
    pub validate: SuiteBudget,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            kernel: KernelConfig::default(),
            quadrature: QuadratureSpec::default(),
            grid: GridConfig::default(),
            initial: InitialConfig::default(),
            solver: SolverConfig::default(),
            table: TableSpec::default(),
            diagnostics: DiagnosticsConfig::default(),
            output: OutputConfig::default(),
            equilibrium: EquilibriumConfig::default(),
            potential: PotentialConfig::default(),
            validate: SuiteBudget::default(),
        }
    }
}

/// A validated configuration plus non-fatal notes produced while checking it.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

fn section<T: DeserializeOwned + Default>(table: &mut toml::Table, key: &str, errs: &mut Vec<String>) -> T {
    match table.remove(key) {
        None => T::default(),
        Some(v) => T::deserialize(v).unwrap_or_else(|e| {
            errs.push(format!("[{key}]: {}", e.message().trim()));
            T::default()
        }),
    }
}

/// Parses TOML text; `base` resolves relative paths inside it.
pub fn parse_config_str(text: &str, base: Option<&Path>) -> Result<Parsed> {
    parse_config_with(text, base, |_| {})
}

/// As [`parse_config_str`], applying `overrides` before validation.
pub fn parse_config_with(text: &str, base: Option<&Path>, overrides: impl FnOnce(&mut RunConfig)) -> Result<Parsed> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
        Error::Parse { line, msg: e.message().to_string() }
    })?;
    let mut errs = Vec::new();
    let seed = match table.remove("seed") {
        None => RunConfig::default().seed,
        Some(toml::Value::Integer(s)) if s >= 0 => s as u64,
        Some(v) => {
            errs.push(format!("seed must be a nonnegative integer, got {v}"));
            0
        }
    };
    let mut config = RunConfig {
        seed,
        kernel: section(&mut table, "kernel", &mut errs),
        quadrature: section(&mut table, "quadrature", &mut errs),
        grid: section(&mut table, "grid", &mut errs),
        initial: section(&mut table, "initial", &mut errs),
        solver: section(&mut table, "solver", &mut errs),
        table: section(&mut table, "table", &mut errs),
        diagnostics: section(&mut table, "diagnostics", &mut errs),
        output: section(&mut table, "output", &mut errs),
        equilibrium: section(&mut table, "equilibrium", &mut errs),
        potential: section(&mut table, "potential", &mut errs),
        validate: section(&mut table, "validate", &mut errs),
    };
    for key in table.keys() {
        errs.push(format!("unknown top-level key `{key}`"));
    }
    if let (Some(base), Some(p)) = (base, config.initial.path.as_mut()) {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    overrides(&mut config);
    let warnings = check(&mut config, &mut errs);
    if errs.is_empty() {
        Ok(Parsed { config, warnings })
    } else {
        Err(Error::config(errs.join("\n")))
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<Parsed> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path.parent())
}

fn push(errs: &mut Vec<String>, r: Result<()>) {
    if let Err(e) = r {
        errs.push(match e {
            Error::Config(m) => m,
            other => other.to_string(),
        });
    }
}

/// Range checks on every section. Errors go to `errs`; returns warnings.
pub fn check(c: &mut RunConfig, errs: &mut Vec<String>) -> Vec<String> {
    let mut warnings = Vec::new();
    push(errs, c.kernel.model().map(|_| ()));
    push(errs, c.quadrature.validate().map_err(|e| Error::config(format!("quadrature: {e}"))));
    if c.initial.kind != InitialKind::CsvPath {
        push(errs, c.grid.build().map(|_| ()));
    }
    push(errs, c.solver.validate());
    if c.table.panel_order == 0 {
        errs.push("table.panel_order must be at least 1".into());
    }
    let ic = &c.initial;
    if !(ic.n > 0.0 && ic.n.is_finite()) {
        errs.push(format!("initial.n must be positive, got {}", ic.n));
    }
    if ic.e.is_some() && ic.temp_ratio.is_some() {
        errs.push("initial.e and initial.temp_ratio are mutually exclusive".into());
    }
    if let Some(e) = ic.e {
        if !(e > 0.0 && e.is_finite()) {
            errs.push(format!("initial.e must be positive, got {e}"));
        }
    }
    if let Some(r) = ic.temp_ratio {
        if !(r > 0.0 && r.is_finite()) {
            errs.push(format!("initial.temp_ratio must be positive, got {r}"));
        }
    }
    match ic.kind {
        InitialKind::EquilibriumPerturbed => {
            if !(0.0..1.0).contains(&ic.amplitude) {
                errs.push(format!("initial.amplitude must lie in [0, 1), got {}", ic.amplitude));
            }
            if ic.mode == 0 {
                errs.push("initial.mode must be at least 1".into());
            }
        }
        InitialKind::TwoBump => {
            if let Some(eps) = ic.eps {
                if !(eps > 0.0) {
                    errs.push(format!("initial.eps must be positive, got {eps}"));
                }
            } else if c.kernel.bec_params().is_none() {
                errs.push("initial.eps is required for two_bump data unless kernel is eta_model with eta < 1/4".into());
            }
        }
        InitialKind::CsvPath => match &ic.path {
            None => errs.push("initial.path is required for kind = \"csv_path\"".into()),
            Some(p) if !p.is_file() => errs.push(format!("initial.path {} does not exist", p.display())),
            Some(_) => {}
        },
    }
    if ic.kind != InitialKind::CsvPath && ic.path.is_some() {
        errs.push("initial.path is only used with kind = \"csv_path\"".into());
    }
    let d = &mut c.diagnostics;
    for &eps in &d.eps {
        if !(eps > 0.0 && eps.is_finite()) {
            errs.push(format!("diagnostics.eps entries must be positive, got {eps}"));
        }
    }
    for (k, v) in [
        ("n02_eps", d.n02_eps),
        ("gamma_cap", d.gamma_cap),
        ("rel_tol", d.rel_tol),
        ("entropy_tol", d.entropy_tol),
        ("conservation_tol", d.conservation_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            errs.push(format!("diagnostics.{k} must be positive, got {v}"));
        }
    }
    if !(d.predictor_tau >= 0.0) {
        errs.push(format!("diagnostics.predictor_tau must be nonnegative, got {}", d.predictor_tau));
    }
    if d.predictor && c.kernel.bec_params().is_none() {
        d.predictor = false;
        warnings.push(match c.kernel.kind {
            KernelKind::EtaModel => format!(
                "kernel.eta = {} >= 1/4: the condensation predictor needs eta < 1/4 and is disabled",
                c.kernel.eta
            ),
            _ => "the condensation predictor needs kernel.kind = \"eta_model\" and is disabled".to_string(),
        });
    }
    let eq = &c.equilibrium;
    if !(eq.n > 0.0 && eq.n.is_finite()) {
        errs.push(format!("equilibrium.n must be positive, got {}", eq.n));
    }
    if eq.e.is_some() && eq.temp_ratio.is_some() {
        errs.push("equilibrium.e and equilibrium.temp_ratio are mutually exclusive".into());
    }
    if !(eq.energy() >= 0.0 && eq.energy().is_finite()) {
        errs.push(format!("equilibrium energy must be nonnegative, got {}", eq.energy()));
    }
    push(errs, c.potential.spec().map(|_| ()));
    if c.potential.budget == 0 {
        errs.push("potential.budget must be at least 1".into());
    }
    if c.potential.r_samples.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        errs.push("potential.r_samples must be finite and nonnegative".into());
    }
    push(errs, c.validate.validate());
    warnings
}

/// Initial data described by `[initial]`, with the two-bump construction
/// record when that kind is used.
pub fn initial_measure(c: &RunConfig) -> Result<(IsotropicMeasure, Option<TwoBump>)> {
    let ic = &c.initial;
    match ic.kind {
        InitialKind::CsvPath => {
            let path = ic.path.as_ref().ok_or_else(|| Error::config("initial.path is required"))?;
            Ok((IsotropicMeasure::load_csv(path)?, None))
        }
        InitialKind::TwoBump => {
            let grid = c.grid.build()?;
            // Without constants the override is mandatory; eta = 1/4 turns them off.
            let (b0, eta) = c.kernel.bec_params().unwrap_or((0.5, 0.25));
            let tb = make_two_bump_condensing(ic.n, ic.energy(), b0, eta, &grid, ic.eps)?;
            Ok((tb.measure.clone(), Some(tb)))
        }
        InitialKind::EquilibriumPerturbed => {
            let grid = c.grid.build()?;
            Ok((perturbed_equilibrium(&grid, ic.n, ic.energy(), ic.amplitude, ic.mode)?, None))
        }
    }
}

/// `F_be` with regular masses scaled by `1 + a sin(mode pi x / x_max)`, then
/// tilted by `exp(alpha + beta x)` so that mass and energy equal `(n, e)`.
pub fn perturbed_equilibrium(grid: &Arc<Grid>, n: f64, e: f64, amplitude: f64, mode: u32) -> Result<IsotropicMeasure> {
    let state = solve_equilibrium(n, e)?;
    let base = equilibrium_measure(&state, grid)?;
    let x = grid.nodes();
    let k = std::f64::consts::PI * mode as f64 / grid.x_max();
    let mut m = base.into_masses();
    for i in 1..m.len() {
        m[i] *= 1.0 + amplitude * (k * x[i]).sin();
    }
    let n_reg = n - m[0];
    if m[1..].iter().filter(|&&v| v > 0.0).count() < 2 || n_reg <= 0.0 {
        return Err(Error::config("perturbed equilibrium needs at least two occupied regular nodes"));
    }
    let target = e / n_reg;
    if !(target > x[1] && target < grid.x_max()) {
        return Err(Error::config(format!(
            "mean regular energy {target} is not representable on the grid; adjust grid.x_max or grid.n"
        )));
    }
    // mean energy of the tilted masses increases with beta; shift by x_max for overflow safety
    let mean = |beta: f64| {
        let (mut s0, mut s1) = (0.0, 0.0);
        for i in 1..m.len() {
            let w = m[i] * (beta * (x[i] - grid.x_max())).exp();
            s0 += w;
            s1 += w * x[i];
        }
        s1 / s0
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean(lo) > target {
        lo *= 2.0;
    }
    while mean(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if mean(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    for i in 1..m.len() {
        m[i] *= (beta * (x[i] - grid.x_max())).exp();
    }
    let s: f64 = m[1..].iter().sum();
    for v in &mut m[1..] {
        *v *= n_reg / s;
    }
    IsotropicMeasure::new(grid.clone(), m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Parsed> {
        parse_config_str(text, None)
    }

    #[test]
    fn empty_config_takes_defaults() {
        let p = parse("").unwrap();
        assert_eq!(p.config, RunConfig::default());
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let p = parse("[grid]\nn = 32\n[solver]\nt_end = 0.5\n").unwrap();
        assert_eq!(p.config.grid.n, 32);
        assert_eq!(p.config.grid.x_max, GridConfig::default().x_max);
        assert_eq!(p.config.solver.t_end, 0.5);
        assert_eq!(p.config.solver.dt, SolverConfig::default().dt);
    }

    #[test]
    fn negative_dt_names_the_key() {
        let e = parse("[solver]\ndt = -0.1\n").unwrap_err().to_string();
        assert!(e.contains("solver.dt"), "{e}");
    }

    #[test]
    fn all_errors_reported_at_once() {
        let e = parse("bogus = 1\n[solver]\ndt = -1.0\n[grid]\nn = 0\n[kernel]\nkind = \"eta_model\"\neta = 2.0\n[oops]\n")
            .unwrap_err()
            .to_string();
        for needle in ["bogus", "oops", "solver.dt", "eta", "grid"] {
            assert!(e.contains(needle), "missing {needle} in {e}");
        }
    }

    #[test]
    fn unknown_keys_in_sections_rejected() {
        let e = parse("[solver]\ndtt = 0.1\n").unwrap_err().to_string();
        assert!(e.contains("dtt"), "{e}");
    }

    #[test]
    fn large_eta_disables_predictor_with_warning() {
        let p = parse("[kernel]\nkind = \"eta_model\"\neta = 0.3\n[diagnostics]\npredictor = true\n").unwrap();
        assert!(!p.config.diagnostics.predictor);
        assert_eq!(p.warnings.len(), 1);
        assert!(p.warnings[0].contains("1/4"));
        let p = parse("[kernel]\nkind = \"eta_model\"\neta = 0.1\n[diagnostics]\npredictor = true\n").unwrap();
        assert!(p.config.diagnostics.predictor);
    }

    #[test]
    fn two_bump_needs_eps_without_constants() {
        let e = parse("[initial]\nkind = \"two_bump\"\n").unwrap_err().to_string();
        assert!(e.contains("initial.eps"), "{e}");
    }

    #[test]
    fn missing_csv_reported() {
        let e = parse("[initial]\nkind = \"csv_path\"\npath = \"/nonexistent/f.csv\"\n").unwrap_err().to_string();
        assert!(e.contains("does not exist"), "{e}");
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse(&text).unwrap().config, c);
    }

    #[test]
    fn perturbed_equilibrium_hits_moments() {
        let g = Arc::new(Grid::linear(64, 16.0).unwrap());
        for ratio in [0.5, 2.0] {
            let e = ratio / c_star();
            let f = perturbed_equilibrium(&g, 1.0, e, 0.3, 3).unwrap();
            assert!((f.mass() - 1.0).abs() < 1e-12);
            assert!((f.energy() - e).abs() < 1e-12 * e);
        }
    }
}
