//! Command-line front end. Every subcommand writes its artifacts and a
//! `manifest.json` under the output directory.
//!
//! Exit codes: 0 success, 2 rejected configuration or failed checks,
//! 1 runtime errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{initial_measure, parse_config_with, Parsed, RunConfig};
use crate::diagnostics::{bec_constants, bec_predict, distance_report, monitor_monotone, DiagnosticsRecord};
use crate::equilibrium::{equilibrium_entropy, solve_equilibrium};
use crate::error::{Error, Result};
use crate::kernel::{w, Quadrature};
use crate::measure::IsotropicMeasure;
use crate::plot::line_plot;
use crate::potential::{positivity_scan, roundtrip_check};
use crate::solver::{run, CollisionTable};
use crate::suites::run_all;

#[derive(Debug, Parser)]
#[command(name = "nordheim", version, about = "Isotropic Boltzmann-Nordheim kinetics for bosons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; defaults apply to missing sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed of the random suites, overriding `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the initial data and record diagnostics.
    Simulate,
    /// Solve for the equilibrium with mass `n` and energy `e`.
    Equilibrium {
        #[arg(long)]
        n: Option<f64>,
        #[arg(long)]
        e: Option<f64>,
        #[arg(long)]
        temp_ratio: Option<f64>,
    },
    /// Dump `W(x_i, x_j, x_k)` over the grid.
    KernelTable,
    /// Condensation constants and the predictor on the initial data.
    PredictBec,
    /// Scan the potential transform and check the Fourier round trip.
    Potential {
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        rho_min: Option<f64>,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        n_rho: Option<usize>,
    },
    /// Run every property suite.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibrium { .. } => "equilibrium",
            Command::KernelTable => "kernel-table",
            Command::PredictBec => "predict-bec",
            Command::Potential { .. } => "potential",
            Command::Validate => "validate",
        }
    }
}

/// How a command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ChecksFailed,
}

/// Files written by a command, in creation order.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Error::numeric(format!("json encoding: {e}")))?;
        self.write(name, &(text + "\n"))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn sha256(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of the effective configuration in canonical TOML form.
pub fn config_hash(c: &RunConfig) -> String {
    sha256(toml::to_string(c).unwrap_or_default().as_bytes())
}

fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::ChecksFailed) | Err(Error::Config(_) | Error::Parse { .. }) => 2,
        Err(_) => 1,
    }
}

fn write_manifest(
    dir: &Path,
    cli: &Cli,
    parsed: Option<&Parsed>,
    files: &[String],
    result: &Result<Outcome>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for f in files {
        let p = dir.join(f);
        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        entries.push(json!({"path": f, "bytes": bytes.len(), "sha256": sha256(&bytes)}));
    }
    let status = match result {
        Ok(Outcome::Success) => "ok",
        Ok(Outcome::ChecksFailed) => "checks_failed",
        Err(Error::Config(_) | Error::Parse { .. }) => "invalid_config",
        Err(_) => "error",
    };
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "status": status,
        "exit_code": exit_code(result),
        "error": result.as_ref().err().map(|e| e.to_string()),
        "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
        "config_sha256": parsed.map(|p| config_hash(&p.config)),
        "seed": parsed.map(|p| p.config.seed),
        "threads": rayon::current_num_threads(),
        "warnings": parsed.map(|p| p.warnings.clone()).unwrap_or_default(),
        "files": entries,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::numeric(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn load(cli: &Cli) -> Result<Parsed> {
    let (text, base) = match &cli.config {
        Some(p) => (std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?, p.parent().map(Path::to_path_buf)),
        None => (String::new(), None),
    };
    parse_config_with(&text, base.as_deref(), |c| {
        if let Some(o) = &cli.out {
            c.output.directory = o.clone();
        }
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        match &cli.command {
            Command::Equilibrium { n, e, temp_ratio } => {
                if let Some(n) = n {
                    c.equilibrium.n = *n;
                }
                if e.is_some() || temp_ratio.is_some() {
                    c.equilibrium.e = *e;
                    c.equilibrium.temp_ratio = *temp_ratio;
                }
            }
            Command::Potential { eta, rho_min, rho_max, n_rho } => {
                let p = &mut c.potential;
                p.eta = eta.unwrap_or(p.eta);
                p.rho_min = rho_min.unwrap_or(p.rho_min);
                p.rho_max = rho_max.unwrap_or(p.rho_max);
                p.n_rho = n_rho.unwrap_or(p.n_rho);
            }
            _ => {}
        }
    })
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return 2;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 1;
        }
    };
    pool.install(|| execute(&cli))
}

fn execute(cli: &Cli) -> i32 {
    let (parsed, loaded) = match load(cli) {
        Ok(p) => (Some(p), Ok(())),
        Err(e) => (None, Err(e)),
    };
    let dir = match &parsed {
        Some(p) => p.config.output.directory.clone(),
        None => cli.out.clone().unwrap_or_else(|| PathBuf::from("out")),
    };
    let mut art = None;
    let result = loaded.and_then(|()| {
        let p = parsed.as_ref().expect("loaded config");
        for w in &p.warnings {
            eprintln!("warning: {w}");
        }
        let a = art.insert(Artifacts::new(&dir)?);
        dispatch(cli, &p.config, a)
    });
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let files = art.map(|a| a.files).unwrap_or_default();
    if let Err(e) = write_manifest(&dir, cli, parsed.as_ref(), &files, &result) {
        eprintln!("error: could not write manifest: {e}");
        return 1;
    }
    exit_code(&result)
}

fn dispatch(cli: &Cli, c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate => cmd_simulate(c, art),
        Command::Equilibrium { .. } => cmd_equilibrium(c, art),
        Command::KernelTable => cmd_kernel_table(c, art),
        Command::PredictBec => cmd_predict_bec(c, art),
        Command::Potential { .. } => cmd_potential(c, art),
        Command::Validate => cmd_validate(c, art),
    }
}

fn quadrature(c: &RunConfig) -> Result<Quadrature> {
    Quadrature::new(c.quadrature)
}

/// Columns of the time series that get a plot.
const PLOTTED: [(&str, fn(&DiagnosticsRecord) -> f64); 8] = [
    ("N", |r| r.n),
    ("E", |r| r.e),
    ("S", |r| r.s),
    ("D", |r| r.d),
    ("m0", |r| r.m0),
    ("n02_eps", |r| r.n02),
    ("dist1", |r| r.dist1),
    ("dist1circ", |r| r.dist1circ),
];

fn timeseries_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Predictor eps: explicit, else the two-bump scale, else the admissible bound.
fn predictor_eps(c: &RunConfig, two_bump_eps: Option<f64>, admissible: f64) -> (f64, &'static str) {
    match (c.diagnostics.predictor_eps, two_bump_eps) {
        (Some(e), _) => (e, "diagnostics.predictor_eps"),
        (None, Some(e)) => (e, "initial data eps"),
        (None, None) => (admissible, "admissible bound"),
    }
}

/// Sample at or after `tau`, else the last one.
fn sample_at(snaps: &[crate::diagnostics::Snapshot], tau: f64) -> &IsotropicMeasure {
    let i = snaps.iter().position(|s| s.t >= tau).unwrap_or(snaps.len() - 1);
    &snaps[i].measure
}

fn cmd_simulate(c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let started = Instant::now();
    let (f0, two_bump) = initial_measure(c)?;
    let model = c.kernel.model()?;
    let quad = std::sync::Arc::new(quadrature(c)?);
    let table = CollisionTable::build(&model, f0.grid(), &quad, &c.table)?;
    let traj = run(&f0, &table, &c.solver, &c.diagnostics.run_diagnostics())?;
    art.write("timeseries.csv", &timeseries_csv(&traj.records))?;
    if c.output.states {
        for (k, s) in traj.snapshots.iter().enumerate() {
            art.write(&format!("state_{k}.csv"), &s.measure.to_csv())?;
        }
    }
    if c.output.svg {
        for (name, get) in PLOTTED {
            let pts: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, get(r))).collect();
            art.write(&format!("plots/{name}.svg"), &line_plot(&format!("{name}(t)"), "t", name, &pts))?;
        }
    }
    let monitor = if c.diagnostics.monitor {
        let rate = (f0.mass() * f0.energy()).sqrt();
        let rep = monitor_monotone(&traj.snapshots, &[], rate, &c.diagnostics.monitor_spec());
        let mut counts = serde_json::Map::new();
        for v in &rep.violations {
            let e = counts.entry(v.kind.clone()).or_insert(json!(0));
            *e = json!(e.as_u64().unwrap_or(0) + 1);
        }
        if !rep.is_clean() {
            eprintln!("warning: {} monotonicity flags, see summary.json", rep.violations.len());
        }
        json!({"rate": rate, "total": rep.violations.len(), "by_kind": counts, "violations": rep.violations})
    } else {
        Value::Null
    };
    let predictor = match (c.diagnostics.predictor, c.kernel.bec_params()) {
        (true, Some((b0, eta))) => {
            let consts = bec_constants(f0.mass(), f0.energy(), b0, eta)?;
            let (eps, source) =
                predictor_eps(c, two_bump.as_ref().map(|t| t.eps_used), consts.eps_admissible_max);
            let tau = c.diagnostics.predictor_tau;
            let pred = bec_predict(sample_at(&traj.snapshots, tau), tau, &consts, eps)?;
            json!({"constants": consts, "eps": eps, "eps_source": source, "tau": tau, "prediction": pred})
        }
        _ => Value::Null,
    };
    let last = traj.records.last().copied().ok_or_else(|| Error::numeric("run produced no samples"))?;
    let last_measure = &traj.snapshots.last().expect("run keeps the initial sample").measure;
    let gaps = distance_report(last_measure, &traj.reference.discrete)?;
    let d_integral: f64 = traj.records.windows(2).map(|p| 0.5 * (p[0].d + p[1].d) * (p[1].t - p[0].t)).sum();
    let n0 = traj.reference.state.n0;
    let summary = json!({
        "config_sha256": config_hash(c),
        "kernel": model.name(),
        "grid_nodes": f0.grid().len(),
        "table": {"fingerprint": table.fingerprint(), "pairs": table.n_pairs(), "triples": table.n_triples()},
        "steps": traj.steps,
        "halvings": traj.halvings,
        "clipped": traj.clipped,
        "drift": traj.drift,
        "final": last,
        "final_gaps": gaps,
        "condensate": {
            "m0": last.m0,
            "n0_continuum": n0,
            "n0_discrete": traj.reference.discrete_params.n0,
            "rel_gap_continuum": if n0 > 0.0 { Some((last.m0 - n0).abs() / n0) } else { None },
        },
        "reference": {"temp_ratio": traj.reference.state.temp_ratio, "a_coef": traj.reference.state.a_coef, "kappa": traj.reference.state.kappa},
        "monotone": monitor,
        "d_integral": d_integral,
        "d_capped_total": traj.records.iter().map(|r| r.d_capped).sum::<usize>(),
        "two_bump": two_bump.as_ref().map(|t| json!({"eps_used": t.eps_used, "eps_admissible": t.eps_admissible, "checks": t.checks})),
        "predictor": predictor,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    art.json("summary.json", &summary)?;
    Ok(Outcome::Success)
}

fn cmd_equilibrium(c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let st = solve_equilibrium(c.equilibrium.n, c.equilibrium.energy())?;
    let s_be = equilibrium_entropy(&st)?;
    let out = json!({
        "n": st.n,
        "e": st.e,
        "temp_ratio": st.temp_ratio,
        "A": st.a_coef,
        "kappa": st.kappa,
        "n0": st.n0,
        "S_be": s_be,
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Error::numeric(e.to_string()))?);
    art.json("equilibrium.json", &out)?;
    Ok(Outcome::Success)
}

fn cmd_kernel_table(c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let model = c.kernel.model()?;
    let quad = quadrature(c)?;
    let grid = c.grid.build()?;
    let x = grid.nodes();
    let rows: Vec<Result<String>> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut s = String::new();
            for j in 1..x.len() {
                for k in j..x.len() {
                    let v = w(&model, x[i], x[j], x[k], &quad)?;
                    let _ = writeln!(s, "{i},{j},{k},{:?},{:?},{:?},{v:?}", x[i], x[j], x[k]);
                }
            }
            Ok(s)
        })
        .collect();
    let mut csv = String::from("i,j,k,x,y,z,w\n");
    for r in rows {
        csv.push_str(&r?);
    }
    art.write("kernel_table.csv", &csv)?;
    Ok(Outcome::Success)
}

fn cmd_predict_bec(c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let (b0, eta) = c
        .kernel
        .bec_params()
        .ok_or_else(|| Error::config("predict-bec needs kernel.kind = \"eta_model\" with eta < 1/4"))?;
    let (f0, two_bump) = initial_measure(c)?;
    let consts = bec_constants(f0.mass(), f0.energy(), b0, eta)?;
    let (eps, source) = predictor_eps(c, two_bump.as_ref().map(|t| t.eps_used), consts.eps_admissible_max);
    let tau = c.diagnostics.predictor_tau;
    let pred = bec_predict(&f0, tau, &consts, eps)?;
    let out = json!({"constants": consts, "eps": eps, "eps_source": source, "tau": tau, "prediction": pred});
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Error::numeric(e.to_string()))?);
    art.json("predict_bec.json", &out)?;
    Ok(Outcome::Success)
}

fn cmd_potential(c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let p = &c.potential;
    let spec = p.spec()?;
    let scan = positivity_scan(&spec)?;
    let mut csv = String::from("rho,U\n");
    for (rho, u) in &scan.samples {
        let _ = writeln!(csv, "{rho:?},{u:?}");
    }
    art.write("potential.csv", &csv)?;
    let rt = roundtrip_check(&spec, &p.r_samples, p.budget)?;
    let positivity_ok = scan.min_u >= -p.positivity_tol;
    let roundtrip_ok = rt.max_rel_err < p.max_rel_err;
    let out = json!({
        "eta": spec.eta,
        "rho_min": spec.rho_min,
        "rho_max": spec.rho_max,
        "n_rho": spec.n_rho,
        "min_u": scan.min_u,
        "argmin_rho": scan.argmin_rho,
        "positivity_ok": positivity_ok,
        "roundtrip": rt.samples.iter().map(|(r, got, want, rel)| json!({"r": r, "got": got, "want": want, "rel_err": rel})).collect::<Vec<_>>(),
        "roundtrip_max_rel_err": rt.max_rel_err,
        "roundtrip_ok": roundtrip_ok,
    });
    println!(
        "eta {}: min U = {:.3e} at rho = {:.3e} ({}); round-trip max rel err = {:.3e} ({})",
        spec.eta,
        scan.min_u,
        scan.argmin_rho,
        if positivity_ok { "ok" } else { "FAIL" },
        rt.max_rel_err,
        if roundtrip_ok { "ok" } else { "FAIL" }
    );
    art.json("potential_summary.json", &out)?;
    Ok(if positivity_ok && roundtrip_ok { Outcome::Success } else { Outcome::ChecksFailed })
}

fn cmd_validate(c: &RunConfig, art: &mut Artifacts) -> Result<Outcome> {
    let quad = quadrature(c)?;
    let started = Instant::now();
    let reports = run_all(&c.validate, c.seed, &quad)?;
    for r in &reports {
        println!(
            "{} {} [{}]: {} checks, {} violations; {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.model,
            r.checks,
            r.violations,
            r.detail
        );
    }
    let all = reports.iter().all(|r| r.passed);
    art.json(
        "validate.json",
        &json!({"seed": c.seed, "budget": c.validate, "passed": all, "suites": reports, "wall_time_s": started.elapsed().as_secs_f64()}),
    )?;
    Ok(if all { Outcome::Success } else { Outcome::ChecksFailed })
}
