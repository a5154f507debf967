//! Precomputed collision tables for the hat-function Galerkin scheme.
//!
//! For every pair `j <= k` with `x_j + x_k <= x_max` the table stores the
//! sparse row `J[h_i](x_j, x_k)` over `i` and, unless on-the-fly, the
//! weights `W(x_l, x_j, x_k)` for `x_l < x_j + x_k` together with the hat
//! bracket of `x_* = x_j + x_k - x_l`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernel::{for_each_x_node, j_breakpoints, w, PhiModel, Quadrature, QuadratureSpec};
use crate::measure::{Grid, Spacing};
use crate::quad::Rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    #[default]
    Stored,
    /// `W` recomputed per triple on each right-hand side; identical results.
    OnTheFly,
}

/// How the `x`-integral inside `J[h_i](x_j, x_k)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JRule {
    /// Panel Gauss quadrature of the continuous integral.
    Exact,
    /// Node rule with the cell weights `sqrt(x_l) w_l` that define the
    /// reconstructed densities. On linear grids every `x_*` is a node and
    /// the scheme becomes a symmetric quartet model whose fixed points are
    /// discrete Bose-Einstein states.
    #[default]
    Lumped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableSpec {
    pub mode: TableMode,
    pub j_rule: JRule,
    /// Gauss points per panel in the `J` integrals; panels split at every
    /// node, its mirror `x_j + x_k - x_i` and the kinks of `W`.
    pub panel_order: usize,
    pub max_bytes: usize,
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec { mode: TableMode::Stored, j_rule: JRule::default(), panel_order: 4, max_bytes: 1 << 30 }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Triple {
    pub l: u32,
    /// `x_*` lies in `[x_b, x_{b+1}]` with weight `t` on `x_{b+1}`.
    pub b: u32,
    pub t: f64,
    pub w: f64,
    /// Weight used by the right-hand side: `w` times the quartet
    /// symmetrization factor (1 unless the lumped rule runs on a lattice).
    pub ws: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct PairRow {
    pub j: u32,
    pub k: u32,
    pub j_idx: Vec<u32>,
    pub j_val: Vec<f64>,
    pub triples: Vec<Triple>,
    /// Largest `|ws|` in the row, kept in both modes for the step guard.
    pub w_max: f64,
}

#[derive(Debug, Clone)]
pub struct CollisionTable {
    grid: Arc<Grid>,
    model: PhiModel,
    quad: Arc<Quadrature>,
    mode: TableMode,
    lattice: bool,
    pub(crate) rows: Vec<PairRow>,
    fingerprint: String,
}

/// Pairs `j <= k`, node 0 included, with `x_j + x_k <= x_max`.
fn admissible_pairs(grid: &Grid) -> Vec<(u32, u32)> {
    let x = grid.nodes();
    let x_max = grid.x_max();
    let mut out = Vec::new();
    for j in 0..x.len() {
        for k in j..x.len() {
            if x[j] + x[k] <= x_max * (1.0 + 1e-15) {
                out.push((j as u32, k as u32));
            } else {
                break;
            }
        }
    }
    out
}

/// Nodes `l` with `W(x_l, x_j, x_k)` possibly nonzero: `x_l < x_j + x_k`.
fn triple_count(grid: &Grid, pairs: &[(u32, u32)]) -> usize {
    let x = grid.nodes();
    pairs.iter().map(|&(j, k)| x.partition_point(|&v| v < x[j as usize] + x[k as usize])).sum()
}

fn fingerprint(grid: &Grid, model: &PhiModel, spec: &QuadratureSpec, table: &TableSpec) -> String {
    let mut h = Sha256::new();
    for x in grid.nodes() {
        h.update(x.to_le_bytes());
    }
    h.update(serde_json::to_vec(model).unwrap_or_default());
    h.update(serde_json::to_vec(spec).unwrap_or_default());
    h.update(table.panel_order.to_le_bytes());
    h.update([table.j_rule as u8]);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Bytes needed by the stored table, counted before anything is built.
pub fn estimate_bytes(grid: &Grid, mode: TableMode) -> usize {
    let pairs = admissible_pairs(grid);
    let x = grid.nodes();
    // each J row touches at most the nodes below x_j + x_k, twice
    let j_entries: usize =
        pairs.iter().map(|&(j, k)| 2 * x.partition_point(|&v| v <= x[j as usize] + x[k as usize]) + 2).sum();
    let k = match mode {
        TableMode::Stored => triple_count(grid, &pairs) * std::mem::size_of::<Triple>(),
        TableMode::OnTheFly => 0,
    };
    j_entries * 12 + k + pairs.len() * std::mem::size_of::<PairRow>()
}

impl CollisionTable {
    pub fn build(model: &PhiModel, grid: &Arc<Grid>, quad: &Arc<Quadrature>, spec: &TableSpec) -> Result<Self> {
        model.validate()?;
        if spec.panel_order == 0 {
            return Err(Error::config("table.panel_order must be positive"));
        }
        let need = estimate_bytes(grid, spec.mode);
        if need > spec.max_bytes {
            return Err(Error::config(format!(
                "collision table needs ~{need} bytes, above the cap of {} bytes; use table.mode = \"on_the_fly\" \
                 or a smaller grid",
                spec.max_bytes
            )));
        }
        let rule = Rule::gauss_legendre(spec.panel_order)?;
        let pairs = admissible_pairs(grid);
        let rows: Vec<Result<PairRow>> = pairs
            .par_iter()
            .map(|&(j, k)| build_row(model, grid, quad, &rule, spec, j, k))
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(CollisionTable {
            grid: grid.clone(),
            model: model.clone(),
            quad: quad.clone(),
            mode: spec.mode,
            lattice: on_lattice(grid, spec),
            rows,
            fingerprint: fingerprint(grid, model, &quad.spec, spec),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn model(&self) -> &PhiModel {
        &self.model
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    /// SHA-256 over grid nodes, model, quadrature and table parameters.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Largest rate weight `|W|` over all stored or recomputed triples.
    pub fn max_w(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.w_max))
    }

    pub fn n_pairs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_triples(&self) -> usize {
        match self.mode {
            TableMode::Stored => self.rows.iter().map(|r| r.triples.len()).sum(),
            TableMode::OnTheFly => triple_count(&self.grid, &admissible_pairs(&self.grid)),
        }
    }

    fn row(&self, j: usize, k: usize) -> Option<&PairRow> {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        self.rows
            .binary_search_by(|r| (r.j as usize, r.k as usize).cmp(&(j, k)))
            .ok()
            .map(|p| &self.rows[p])
    }

    /// `J[h_i](x_j, x_k)`; zero outside the truncated pair set.
    pub fn j_entry(&self, i: usize, j: usize, k: usize) -> f64 {
        self.row(j, k)
            .and_then(|r| r.j_idx.iter().position(|&v| v as usize == i).map(|p| r.j_val[p]))
            .unwrap_or(0.0)
    }

    /// Stored `W(x_l, x_j, x_k)`, or `None` outside the table.
    pub fn w_entry(&self, l: usize, j: usize, k: usize) -> Option<f64> {
        let r = self.row(j, k)?;
        match self.mode {
            TableMode::Stored => r.triples.iter().find(|t| t.l as usize == l).map(|t| t.w),
            TableMode::OnTheFly => {
                let x = self.grid.nodes();
                (x[l] < x[j] + x[k]).then(|| self.w_at(l, j, k).ok()).flatten()
            }
        }
    }

    pub(crate) fn w_at(&self, l: usize, j: usize, k: usize) -> Result<f64> {
        let x = self.grid.nodes();
        w(&self.model, x[l], x[j], x[k], &self.quad)
    }

    /// Triples of row `r`, recomputed when not stored.
    pub(crate) fn triples_of<'a>(&'a self, r: &'a PairRow) -> Result<std::borrow::Cow<'a, [Triple]>> {
        match self.mode {
            TableMode::Stored => Ok(std::borrow::Cow::Borrowed(&r.triples)),
            TableMode::OnTheFly => {
                Ok(std::borrow::Cow::Owned(triples_for(&self.model, &self.grid, &self.quad, self.lattice, r.j, r.k)?))
            }
        }
    }
}

/// On a linear grid every `x_* = x_j + x_k - x_l` is the node `j + k - l`.
fn on_lattice(grid: &Grid, spec: &TableSpec) -> bool {
    spec.j_rule == JRule::Lumped && grid.spacing() == Spacing::Linear
}

/// Rescales a quartet's cell-width weights to their geometric mean so that
/// every role in the exchange `(x, x_*) <-> (y, z)` carries the same weight.
/// Node 0 holds an atom and contributes no width. Equals 1 when all
/// participating cells have the same width.
fn quartet_factor(wd: &[f64], l: usize, s: usize, j: usize, k: usize) -> f64 {
    let mut prod = 1.0;
    let mut count = 0;
    for p in [l, s, j, k] {
        if p != 0 {
            prod *= wd[p];
            count += 1;
        }
    }
    if count < 2 {
        return 1.0;
    }
    let raw: f64 = [l, j, k].iter().filter(|&&p| p != 0).map(|&p| wd[p]).product();
    prod.powf((count - 1) as f64 / count as f64) / raw
}

fn triples_for(model: &PhiModel, grid: &Grid, quad: &Quadrature, lattice: bool, j: u32, k: u32) -> Result<Vec<Triple>> {
    let x = grid.nodes();
    let wd = grid.widths();
    let n = grid.n();
    let (j, k) = (j as usize, k as usize);
    let s = x[j] + x[k];
    let mut out = Vec::new();
    for (l, &xl) in x.iter().enumerate() {
        if xl >= s {
            break;
        }
        let wv = w(model, xl, x[j], x[k], quad)?;
        let t = if lattice {
            let si = j + k - l;
            let (b, t) = if si == n { (n - 1, 1.0) } else { (si, 0.0) };
            let ws = wv * quartet_factor(wd, l, si, j, k);
            Triple { l: l as u32, b: b as u32, t, w: wv, ws }
        } else {
            let (b, t) = grid.bracket(s - xl);
            Triple { l: l as u32, b: b as u32, t, w: wv, ws: wv }
        };
        out.push(t);
    }
    Ok(out)
}

fn build_row(
    model: &PhiModel,
    grid: &Grid,
    quad: &Quadrature,
    rule: &Rule,
    spec: &TableSpec,
    j: u32,
    k: u32,
) -> Result<PairRow> {
    let x = grid.nodes();
    let (y, z) = (x[j as usize], x[k as usize]);
    let s = y + z;
    let mut dense = vec![0.0; x.len()];
    let lattice = on_lattice(grid, spec);
    let triples = triples_for(model, grid, quad, lattice, j, k)?;
    if s > 0.0 && spec.j_rule == JRule::Lumped {
        // 1/2 sum_l sqrt(x_l) w_l W(x_l, y, z) [h_i(x_l) + h_i(x_*) - h_i(y) - h_i(z)]
        let wd = grid.widths();
        let mut loss = 0.0;
        for tr in triples.iter().filter(|tr| tr.l > 0) {
            let l = tr.l as usize;
            let v = 0.5 * wd[l] * x[l].sqrt() * tr.ws;
            if v != 0.0 {
                let b = tr.b as usize;
                dense[l] += v;
                dense[b] += (1.0 - tr.t) * v;
                dense[b + 1] += tr.t * v;
                loss += v;
            }
        }
        dense[j as usize] -= loss;
        dense[k as usize] -= loss;
    } else if s > 0.0 {
        let kinks: Vec<f64> = x[1..].iter().copied().take_while(|&v| v < s).collect();
        let pts = j_breakpoints(y, z, &kinks);
        // 1/2 int W sqrt(x) [h_i(x) + h_i(x_*)] dx minus the y, z terms
        let mut loss = 0.0;
        for_each_x_node(&pts, rule, |xv, wt| {
            let v = 0.5 * wt * w(model, xv, y, z, quad)? * xv.sqrt();
            if v != 0.0 {
                grid.deposit(&mut dense, xv, v);
                grid.deposit(&mut dense, (s - xv).max(0.0), v);
                loss += v;
            }
            Ok(())
        })?;
        dense[j as usize] -= loss;
        dense[k as usize] -= loss;
    }
    let w_max = triples.iter().fold(0.0, |a: f64, t| a.max(t.ws.abs()));
    let (j_idx, j_val) = dense.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i as u32, v)).unzip();
    let triples = match spec.mode {
        TableMode::Stored => triples,
        TableMode::OnTheFly => Vec::new(),
    };
    Ok(PairRow { j, k, j_idx, j_val, triples, w_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{j_op, w_hard_sphere_closed};
    use crate::testfn::Hat;

    fn small(model: &PhiModel, mode: TableMode) -> CollisionTable {
        small_rule(model, mode, JRule::default())
    }

    fn small_rule(model: &PhiModel, mode: TableMode, j_rule: JRule) -> CollisionTable {
        let g = Arc::new(Grid::geometric(16, 4.0, 1.1).unwrap());
        let q = Arc::new(Quadrature::default());
        CollisionTable::build(model, &g, &q, &TableSpec { mode, j_rule, ..TableSpec::default() }).unwrap()
    }

    #[test]
    fn hard_sphere_weights_match_closed_form() {
        let t = small(&PhiModel::HardSphere, TableMode::Stored);
        let x = t.grid().nodes().to_vec();
        for r in &t.rows {
            for tr in &r.triples {
                let want = w_hard_sphere_closed(x[tr.l as usize], x[r.j as usize], x[r.k as usize]);
                assert!((tr.w - want).abs() <= 1e-6 * want, "{} vs {want}", tr.w);
            }
        }
    }

    #[test]
    fn rows_conserve_mass_and_energy() {
        for model in [PhiModel::HardSphere, PhiModel::eta_model(0.5, 0.2).unwrap()] {
            let t = small(&model, TableMode::Stored);
            let x = t.grid().nodes();
            for r in &t.rows {
                let m: f64 = r.j_val.iter().sum();
                let e: f64 = r.j_idx.iter().zip(&r.j_val).map(|(&i, v)| x[i as usize] * v).sum();
                assert!(m.abs() < 1e-10 && e.abs() < 1e-10, "pair ({}, {}): {m} {e}", r.j, r.k);
            }
        }
    }

    #[test]
    fn j_entries_match_pointwise_operator() {
        // J[h_i] at the table's own pair equals j_op of the hat test function
        let t = small_rule(&PhiModel::HardSphere, TableMode::Stored, JRule::Exact);
        let x = t.grid().nodes().to_vec();
        let q = Quadrature::new(QuadratureSpec { n_x: 2048, ..QuadratureSpec::default() }).unwrap();
        for &(i, j, k) in &[(3usize, 5usize, 9usize), (0, 2, 2), (7, 4, 10), (1, 1, 3)] {
            let left = if i == 0 { x[0] } else { x[i - 1] };
            let hat = Hat { left, center: x[i], right: x[i + 1] };
            let want = j_op(&PhiModel::HardSphere, &hat, x[j], x[k], &q).unwrap();
            let got = t.j_entry(i, j, k);
            assert!((got - want).abs() < 1e-6 * (1.0 + want.abs()), "({i},{j},{k}): {got} vs {want}");
        }
    }

    #[test]
    fn symmetric_and_nonnegative() {
        let t = small(&PhiModel::eta_model(0.5, 0.3).unwrap(), TableMode::Stored);
        let n = t.grid().len();
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    assert_eq!(t.j_entry(i, j, k), t.j_entry(i, k, j));
                    if let Some(v) = t.w_entry(i, j, k) {
                        assert!(v >= 0.0);
                        assert_eq!(Some(v), t.w_entry(i, k, j));
                    }
                }
            }
        }
    }

    #[test]
    fn on_the_fly_matches_stored() {
        let a = small(&PhiModel::HardSphere, TableMode::Stored);
        let b = small(&PhiModel::HardSphere, TableMode::OnTheFly);
        assert_eq!(a.n_triples(), b.n_triples());
        assert_eq!(a.w_entry(3, 5, 9), b.w_entry(3, 5, 9));
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn quartet_factor_is_one_for_equal_widths() {
        let wd = [0.0, 2.0, 2.0, 2.0, 2.0];
        assert!((quartet_factor(&wd, 1, 2, 3, 4) - 1.0).abs() < 1e-15);
        assert!((quartet_factor(&wd, 0, 3, 1, 2) - 1.0).abs() < 1e-15);
        // the symmetrized weight w_l w_j w_k * factor is invariant under role swaps
        let wd = [0.0, 1.5, 1.0, 1.0, 0.5];
        let sym = |l: usize, s: usize, j: usize, k: usize| wd[l] * wd[j] * wd[k] * quartet_factor(&wd, l, s, j, k);
        assert!((sym(1, 4, 2, 3) - sym(2, 3, 1, 4)).abs() < 1e-15);
        assert!((sym(1, 4, 2, 3) - sym(4, 1, 3, 2)).abs() < 1e-15);
    }

    #[test]
    fn lumped_rows_conserve_on_lattice() {
        let g = Arc::new(Grid::linear(12, 3.0).unwrap());
        let q = Arc::new(Quadrature::default());
        let t = CollisionTable::build(&PhiModel::HardSphere, &g, &q, &TableSpec::default()).unwrap();
        let x = g.nodes();
        for r in &t.rows {
            let mass: f64 = r.j_val.iter().sum();
            let energy: f64 = r.j_idx.iter().zip(&r.j_val).map(|(&i, &v)| x[i as usize] * v).sum();
            let scale: f64 = r.j_val.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
            assert!(mass.abs() < 1e-13 * scale && energy.abs() < 1e-12 * scale * x[x.len() - 1]);
        }
    }

    #[test]
    fn memory_cap_is_enforced() {
        let g = Arc::new(Grid::geometric(32, 4.0, 1.05).unwrap());
        let q = Arc::new(Quadrature::default());
        let spec = TableSpec { max_bytes: 1000, ..TableSpec::default() };
        let e = CollisionTable::build(&PhiModel::HardSphere, &g, &q, &spec).unwrap_err();
        assert!(matches!(e, Error::Config(m) if m.contains("on_the_fly")));
    }
}
