//! Energy grids and discrete measures with a condensate atom at node 0.
//!
//! A measure is `sum_i m_i delta_{x_i}`; for `i >= 1` the mass is also read as
//! a cell-averaged density `f_i = m_i / (sqrt(x_i) w_i)`.

mod init;

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Rule;
use crate::testfn::TestFunction;

pub use init::{make_two_bump_condensing, mehler_smooth, mollifier_cdf, TwoBump, TwoBumpCheck};

/// `4 pi sqrt 2`, the Jacobian between 3D velocity densities and `f(x) sqrt(x) dx`.
pub const FOUR_PI_SQRT2: f64 = 4.0 * PI * SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Geometric,
    Custom,
}

/// Sorted energies `0 = x_0 < x_1 < ... < x_n` with midpoint cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    widths: Vec<f64>,
    spacing: Spacing,
}

impl Grid {
    /// `x_i = i x_max / n`.
    pub fn linear(n: usize, x_max: f64) -> Result<Self> {
        check_grid_args(n, x_max)?;
        let nodes = (0..=n).map(|i| x_max * i as f64 / n as f64).collect();
        Self::build(nodes, Spacing::Linear)
    }

    /// `x_i = x_max (r^i - 1) / (r^n - 1)`: cell widths grow by `ratio`.
    pub fn geometric(n: usize, x_max: f64, ratio: f64) -> Result<Self> {
        check_grid_args(n, x_max)?;
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::domain(format!("geometric ratio must exceed 1, got {ratio}")));
        }
        let denom = ratio.powi(n as i32) - 1.0;
        let mut nodes: Vec<f64> = (0..=n).map(|i| x_max * (ratio.powi(i as i32) - 1.0) / denom).collect();
        nodes[n] = x_max;
        Self::build(nodes, Spacing::Geometric)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        Self::build(nodes, Spacing::Custom)
    }

    fn build(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::domain("a grid needs at least two positive nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(Error::domain("grid must start at x_0 = 0"));
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::domain(format!("grid nodes must increase strictly (at index {})", i + 1)));
            }
        }
        let n = nodes.len() - 1;
        let mut widths = vec![0.0; n + 1];
        for i in 1..=n {
            let lo = if i == 1 { 0.0 } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let hi = if i == n { nodes[n] } else { 0.5 * (nodes[i] + nodes[i + 1]) };
            widths[i] = hi - lo;
        }
        Ok(Grid { nodes, widths, spacing })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cell widths; entry 0 is unused and zero.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Number of positive nodes.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `[lo, hi]` of cell `i >= 1`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let n = self.n();
        let lo = if i == 1 { 0.0 } else { 0.5 * (self.nodes[i - 1] + self.nodes[i]) };
        let hi = if i == n { self.nodes[n] } else { 0.5 * (self.nodes[i] + self.nodes[i + 1]) };
        (lo, hi)
    }

    /// Index `k` with `x_k <= x < x_{k+1}` and the linear weight of `x_{k+1}`.
    /// Requires `0 <= x <= x_max`; `x = x_max` maps to `(n - 1, 1)`.
    pub fn bracket(&self, x: f64) -> (usize, f64) {
        let n = self.n();
        let k = (self.nodes.partition_point(|&t| t <= x).max(1) - 1).min(n - 1);
        let t = (x - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        (k, t)
    }

    /// Distributes mass `m` at `x` onto the two neighbouring nodes so that
    /// mass and first moment are preserved. Returns `false` if `x` is
    /// outside `[0, x_max]`.
    pub fn deposit(&self, out: &mut [f64], x: f64, m: f64) -> bool {
        if !(x >= 0.0 && x <= self.x_max()) {
            return false;
        }
        let (k, t) = self.bracket(x);
        out[k] += (1.0 - t) * m;
        out[k + 1] += t * m;
        true
    }
}

fn check_grid_args(n: usize, x_max: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("grid needs n >= 2 positive nodes, got {n}")));
    }
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::domain(format!("x_max must be positive and finite, got {x_max}")));
    }
    Ok(())
}

/// Nonnegative node masses on a shared grid; node 0 is the condensate.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicMeasure {
    grid: Arc<Grid>,
    masses: Vec<f64>,
}

impl IsotropicMeasure {
    pub fn new(grid: Arc<Grid>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} masses for a grid with {} nodes",
                masses.len(),
                grid.len()
            )));
        }
        for (i, &m) in masses.iter().enumerate() {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::domain(format!("mass at node {i} must be finite and nonnegative, got {m}")));
            }
        }
        Ok(IsotropicMeasure { grid, masses })
    }

    /// Atomic measure `sum m delta_x` on a custom grid whose nodes are the
    /// atom locations; coincident atoms merge and the grid is padded with
    /// empty nodes when fewer than two positive locations are given.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut a: Vec<(f64, f64)> = atoms.to_vec();
        if a.iter().any(|&(x, m)| !(x >= 0.0 && x.is_finite()) || !(m >= 0.0 && m.is_finite())) {
            return Err(Error::domain("atoms need finite x >= 0 and m >= 0"));
        }
        a.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut nodes = vec![0.0];
        let mut masses = vec![0.0];
        for (x, m) in a {
            if x == *nodes.last().unwrap() {
                *masses.last_mut().unwrap() += m;
            } else {
                nodes.push(x);
                masses.push(m);
            }
        }
        while nodes.len() < 3 {
            let next = 2.0 * nodes.last().unwrap().max(0.5);
            nodes.push(next);
            masses.push(0.0);
        }
        Self::new(Arc::new(Grid::from_nodes(nodes)?), masses)
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        IsotropicMeasure { grid, masses: vec![0.0; n] }
    }

    /// Skips the sign check; used by the solver for masses it already
    /// validated.
    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, masses: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), masses.len());
        IsotropicMeasure { grid, masses }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.masses
    }

    pub fn same_grid(&self, other: &IsotropicMeasure) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes == other.grid.nodes
    }

    pub fn condensate(&self) -> f64 {
        self.masses[0]
    }

    pub fn mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn energy(&self) -> f64 {
        self.masses.iter().zip(&self.grid.nodes).map(|(m, x)| m * x).sum()
    }

    /// `M_p = sum x_i^p m_i` with `0^0 = 1`.
    pub fn moment(&self, p: f64) -> f64 {
        self.masses
            .iter()
            .zip(&self.grid.nodes)
            .map(|(m, &x)| if p == 0.0 { *m } else { m * x.powf(p) })
            .sum()
    }

    /// `<phi, F>`.
    pub fn integrate(&self, phi: &dyn TestFunction) -> f64 {
        self.masses.iter().zip(&self.grid.nodes).map(|(m, &x)| m * phi.eval(x)).sum()
    }

    /// `N_{0,p}(F, eps) = sum m_i ((1 - x_i/eps)_+)^p`.
    pub fn n0p(&self, eps: f64, p: f64) -> f64 {
        let mut acc = 0.0;
        for (m, &x) in self.masses.iter().zip(&self.grid.nodes) {
            if x >= eps {
                break;
            }
            acc += m * (1.0 - x / eps).powf(p);
        }
        acc
    }

    /// `N_{alpha,p} = eps^{-alpha} N_{0,p}`.
    pub fn n_alpha_p(&self, eps: f64, alpha: f64, p: f64) -> f64 {
        eps.powf(-alpha) * self.n0p(eps, p)
    }

    /// Infimum of `N_{alpha,p}(F, delta)` over `0 < delta <= eps`.
    ///
    /// Between consecutive nodes the set of contributing atoms is fixed, so
    /// each piece is minimized separately: at its endpoints and, in
    /// `u = 1/delta`, by a sampled golden-section search.
    pub fn underline_n_alpha_p(&self, eps: f64, alpha: f64, p: f64) -> f64 {
        let g = |d: f64| self.n_alpha_p(d, alpha, p);
        let mut best = g(eps);
        let mut left = 0.0;
        for &x in &self.grid.nodes[1..] {
            let right = x.min(eps);
            // on (left, right] the atoms with x_i <= left contribute
            if left > 0.0 {
                best = best.min(piece_min(&g, left, right));
            }
            best = best.min(g(right));
            if x >= eps {
                break;
            }
            left = x;
        }
        if left > 0.0 && left < eps {
            best = best.min(piece_min(&g, left, eps));
        }
        best
    }

    /// `A_{alpha,p} = eps^{-alpha} sum_{x_i <= eps} m_i (x_i/eps)^p`.
    pub fn a_alpha_p(&self, eps: f64, alpha: f64, p: f64) -> f64 {
        let mut acc = 0.0;
        for (m, &x) in self.masses.iter().zip(&self.grid.nodes) {
            if x > eps {
                break;
            }
            if x > 0.0 {
                acc += m * (x / eps).powf(p);
            }
        }
        eps.powf(-alpha) * acc
    }

    /// `F([a, b])`.
    pub fn mass_in(&self, a: f64, b: f64) -> f64 {
        self.masses
            .iter()
            .zip(&self.grid.nodes)
            .filter(|(_, &x)| x >= a && x <= b)
            .map(|(m, _)| m)
            .sum()
    }

    fn check_same(&self, other: &IsotropicMeasure) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::domain("measures live on different grids"))
        }
    }

    /// `sum (1 + x_i) |m_i - g_i|`.
    pub fn norm1(&self, other: &IsotropicMeasure) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .masses
            .iter()
            .zip(&other.masses)
            .zip(&self.grid.nodes)
            .map(|((a, b), x)| (1.0 + x) * (a - b).abs())
            .sum())
    }

    /// `sum x_i |m_i - g_i|`.
    pub fn norm1_circ(&self, other: &IsotropicMeasure) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .masses
            .iter()
            .zip(&other.masses)
            .zip(&self.grid.nodes)
            .map(|((a, b), x)| x * (a - b).abs())
            .sum())
    }

    /// Reconstructed cell density `f_i`; zero at node 0.
    pub fn density(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        self.masses[i] / (self.grid.nodes[i].sqrt() * self.grid.widths[i])
    }

    pub fn densities(&self) -> Vec<f64> {
        (0..self.masses.len()).map(|i| self.density(i)).collect()
    }

    /// `4 pi sqrt2 sum_{i>=1} s(f_i) sqrt(x_i) w_i`; the condensate never enters.
    pub fn entropy(&self) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for i in 1..self.masses.len() {
            let jac = g.nodes[i].sqrt() * g.widths[i];
            acc += entropy_density(self.masses[i] / jac) * jac;
        }
        FOUR_PI_SQRT2 * acc
    }

    /// Scales every mass by `c >= 0`.
    pub fn scaled(&self, c: f64) -> IsotropicMeasure {
        IsotropicMeasure {
            grid: self.grid.clone(),
            masses: self.masses.iter().map(|m| m * c).collect(),
        }
    }

    pub fn add(&self, other: &IsotropicMeasure) -> Result<IsotropicMeasure> {
        self.check_same(other)?;
        Ok(IsotropicMeasure {
            grid: self.grid.clone(),
            masses: self.masses.iter().zip(&other.masses).map(|(a, b)| a + b).collect(),
        })
    }

    /// CSV with header `x,mass`, LF line endings, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,mass\n");
        for (x, m) in self.grid.nodes.iter().zip(&self.masses) {
            let _ = writeln!(s, "{x:?},{m:?}");
        }
        s
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "x,mass" => {}
            Some((_, h)) => {
                return Err(Error::Parse { line: 1, msg: format!("expected header `x,mass`, found `{h}`") })
            }
            None => return Err(Error::Parse { line: 1, msg: "empty file".into() }),
        }
        let mut xs = Vec::new();
        let mut ms = Vec::new();
        for (i, line) in lines {
            let ln = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse { line: ln, msg: format!("expected two fields, found `{line}`") });
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { line: ln, msg: format!("bad number `{s}`: {e}") })
            };
            let (x, m) = (parse(a)?, parse(b)?);
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::Parse { line: ln, msg: format!("mass must be finite and nonnegative, got {m}") });
            }
            xs.push(x);
            ms.push(m);
        }
        let grid = Grid::from_nodes(xs).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        IsotropicMeasure::new(Arc::new(grid), ms)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// `s(y) = (1 + y) ln(1 + y) - y ln y`, `s(0) = 0`.
pub fn entropy_density(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y < 1.0 {
        // 1/y overflows for subnormal y
        y.ln_1p() + y * (y.ln_1p() - y.ln())
    } else {
        y.ln_1p() + y * (1.0 / y).ln_1p()
    }
}

/// How a density is turned into node masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// `m_i = int_{cell i} f sqrt(x) dx`; node 0 gets nothing.
    #[default]
    Cell,
    /// `m_i = int h_i f sqrt(x) dx` with hat functions: mass and energy on
    /// `[0, x_max]` are reproduced exactly.
    Hat,
}

const PANEL_ORDER: usize = 10;

/// Integrates `g(x)` against cells or hats; `g` is a density with respect
/// to `dx`. `breaks` are extra panel boundaries (kinks of `g`).
pub(crate) fn project_dx(
    g: &dyn Fn(f64) -> f64,
    grid: &Arc<Grid>,
    projection: Projection,
    breaks: &[f64],
) -> Result<Vec<f64>> {
    let rule = Rule::gauss_legendre(PANEL_ORDER)?;
    let x = grid.nodes();
    let n = grid.n();
    let mut out = vec![0.0; n + 1];
    let mut sorted: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < grid.x_max()).collect();
    sorted.sort_by(f64::total_cmp);
    let panels = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let mut pts = vec![a];
        let lo = sorted.partition_point(|&t| t <= a);
        for &t in &sorted[lo..] {
            if t >= b {
                break;
            }
            pts.push(t);
        }
        pts.push(b);
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let integrate = |a: f64, b: f64, weight: &dyn Fn(f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for (p, q) in panels(a, b) {
            acc += if p == 0.0 {
                rule.integrate_sqrt_left(p, q, |t| g(t) * weight(t))
            } else {
                rule.integrate(p, q, |t| g(t) * weight(t))
            };
        }
        acc
    };
    match projection {
        Projection::Cell => {
            for (i, o) in out.iter_mut().enumerate().skip(1) {
                let (a, b) = grid.cell(i);
                *o = integrate(a, b, &|_| 1.0);
            }
        }
        Projection::Hat => {
            for k in 0..n {
                let (a, b) = (x[k], x[k + 1]);
                let h = b - a;
                out[k] += integrate(a, b, &|t| (b - t) / h);
                out[k + 1] += integrate(a, b, &|t| (t - a) / h);
            }
        }
    }
    for (i, v) in out.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-14 {
                return Err(Error::domain(format!("negative projected mass {v} at node {i}")));
            }
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Projects a regular density `f` (with `dF = f(x) sqrt(x) dx`) onto the grid.
pub fn project_density(
    f: &dyn Fn(f64) -> f64,
    grid: &Arc<Grid>,
    projection: Projection,
) -> Result<IsotropicMeasure> {
    let g = |x: f64| if x > 0.0 { f(x) * x.sqrt() } else { 0.0 };
    let masses = project_dx(&g, grid, projection, &[])?;
    IsotropicMeasure::new(grid.clone(), masses)
}

/// Minimum of `g(1/u)` for `u` in `[1/b, 1/a)`.
fn piece_min(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const SAMPLES: usize = 32;
    let (u0, u1) = (1.0 / b, 1.0 / a);
    let at = |u: f64| g(1.0 / u);
    let h = (u1 - u0) / SAMPLES as f64;
    let mut k_best = 0;
    let mut v_best = at(u0);
    for k in 1..SAMPLES {
        let v = at(u0 + h * k as f64);
        if v < v_best {
            k_best = k;
            v_best = v;
        }
    }
    let mut lo = u0 + h * k_best.saturating_sub(1) as f64;
    let mut hi = (u0 + h * (k_best + 1) as f64).min(u1 - 1e-15 * u1);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (at(c), at(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = at(d);
        }
    }
    v_best.min(fc).min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_density_is_finite_for_subnormal_densities() {
        for y in [1e-310, 5e-324, 1e-200, 0.3, 1.0, 1e200] {
            let v = entropy_density(y);
            assert!(v.is_finite() && v >= 0.0, "{y}: {v}");
        }
        assert!((entropy_density(0.5) - (1.5f64.ln() + 0.5 * 3f64.ln())).abs() < 1e-15);
    }

    fn lin(n: usize) -> Arc<Grid> {
        Arc::new(Grid::linear(n, 4.0).unwrap())
    }

    #[test]
    fn grid_construction() {
        let g = Grid::linear(4, 2.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(&g.widths()[1..], &[0.75, 0.5, 0.5, 0.25]);
        let geo = Grid::geometric(64, 10.0, 1.05).unwrap();
        assert!((geo.widths().iter().sum::<f64>() - 10.0).abs() < 1e-12);
        assert_eq!(geo.x_max(), 10.0);
        let w = geo.nodes();
        assert!(((w[3] - w[2]) / (w[2] - w[1]) - 1.05).abs() < 1e-12);
        assert!(Grid::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Grid::from_nodes(vec![0.1, 1.0, 2.0]).is_err());
    }

    #[test]
    fn bracket_and_deposit() {
        let g = Grid::linear(4, 2.0).unwrap();
        assert_eq!(g.bracket(0.0), (0, 0.0));
        assert_eq!(g.bracket(0.75), (1, 0.5));
        assert_eq!(g.bracket(2.0), (3, 1.0));
        let mut out = vec![0.0; 5];
        assert!(g.deposit(&mut out, 0.6, 2.0));
        assert!((out.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!((out.iter().zip(g.nodes()).map(|(m, x)| m * x).sum::<f64>() - 1.2).abs() < 1e-15);
        assert!(!g.deposit(&mut out, 2.5, 1.0));
    }

    #[test]
    fn moment_examples() {
        let g = lin(4);
        let z = IsotropicMeasure::zero(g.clone());
        assert_eq!((z.mass(), z.energy(), z.moment(0.5)), (0.0, 0.0, 0.0));
        let d = IsotropicMeasure::new(g.clone(), vec![2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((d.mass(), d.energy()), (2.0, 0.0));
        let m = IsotropicMeasure::new(g, vec![0.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(m.moment(0.5), 6.0);
    }

    #[test]
    fn n_functional_examples() {
        let g = lin(4);
        let eps = 2.0;
        let c = IsotropicMeasure::new(g.clone(), vec![2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.n0p(0.3, 2.0), 2.0);
        let at_eps = IsotropicMeasure::new(g.clone(), vec![0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(at_eps.n0p(eps, 2.0), 0.0);
        let half = IsotropicMeasure::new(g.clone(), vec![0.0, 3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(half.n0p(eps, 2.0), 0.75);
        assert!((c.underline_n_alpha_p(eps, 0.3, 2.0) - 2.0 * eps.powf(-0.3)).abs() < 1e-15);
        assert!((at_eps.a_alpha_p(eps, 0.3, 1.7) - eps.powf(-0.3)).abs() < 1e-15);
        assert_eq!(c.a_alpha_p(eps, 0.3, 1.7), 0.0);
    }

    #[test]
    fn norm_examples() {
        let g = lin(4);
        let a = IsotropicMeasure::new(g.clone(), vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let b = IsotropicMeasure::zero(g.clone());
        assert_eq!(a.norm1(&a).unwrap(), 0.0);
        assert_eq!(a.norm1(&b).unwrap(), 1.0);
        assert_eq!(a.norm1_circ(&b).unwrap(), 0.0);
        let other = IsotropicMeasure::zero(Arc::new(Grid::linear(4, 5.0).unwrap()));
        assert!(a.norm1(&other).is_err());
    }

    #[test]
    fn entropy_examples() {
        let g = lin(8);
        assert_eq!(IsotropicMeasure::zero(g.clone()).entropy(), 0.0);
        let mut m = vec![0.0; 9];
        m[0] = 5.0;
        assert_eq!(IsotropicMeasure::new(g, m).unwrap().entropy(), 0.0);
        assert!((entropy_density(1.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let g = Arc::new(Grid::geometric(16, 7.0, 1.05).unwrap());
        let masses: Vec<f64> = (0..17).map(|i| (i as f64 * 0.37).sin().abs() / 3.0).collect();
        let m = IsotropicMeasure::new(g, masses).unwrap();
        let text = m.to_csv();
        assert!(!text.contains('\r'));
        let back = IsotropicMeasure::from_csv(&text).unwrap();
        assert_eq!(back.masses(), m.masses());
        assert_eq!(back.grid().nodes(), m.grid().nodes());
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let e = IsotropicMeasure::from_csv("x,mass\n0,1\n1,abc\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = IsotropicMeasure::from_csv("x,m\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = IsotropicMeasure::from_csv("x,mass\n0,1\n1,-2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn projection_of_zero_and_hat_conservation() {
        let g = Arc::new(Grid::geometric(40, 10.0, 1.05).unwrap());
        let z = project_density(&|_| 0.0, &g, Projection::Cell).unwrap();
        assert_eq!(z.mass(), 0.0);
        let f = |x: f64| (-x).exp();
        let hat = project_density(&f, &g, Projection::Hat).unwrap();
        let rule = Rule::gauss_legendre(40).unwrap();
        let mass = rule.integrate_sqrt_left(0.0, 10.0, |x| f(x) * x.sqrt());
        let energy = rule.integrate_sqrt_left(0.0, 10.0, |x| f(x) * x.powf(1.5));
        assert!((hat.mass() - mass).abs() < 1e-12 * mass);
        assert!((hat.energy() - energy).abs() < 1e-12 * energy);
        let cell = project_density(&f, &g, Projection::Cell).unwrap();
        assert!((cell.mass() - mass).abs() < 1e-12 * mass);
        assert_eq!(cell.condensate(), 0.0);
    }

    fn masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..2.0, n)
    }

    proptest! {
        #[test]
        fn linear_functionals_superpose(a in masses(9), b in masses(9), eps in 0.1f64..4.0) {
            let g = lin(8);
            let fa = IsotropicMeasure::new(g.clone(), a).unwrap();
            let fb = IsotropicMeasure::new(g.clone(), b).unwrap();
            let s = fa.add(&fb).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
            prop_assert!(close(s.mass(), fa.mass() + fb.mass()));
            prop_assert!(close(s.energy(), fa.energy() + fb.energy()));
            prop_assert!(close(s.moment(0.5), fa.moment(0.5) + fb.moment(0.5)));
            prop_assert!(close(s.n0p(eps, 2.0), fa.n0p(eps, 2.0) + fb.n0p(eps, 2.0)));
            prop_assert!(close(s.a_alpha_p(eps, 0.2, 1.6), fa.a_alpha_p(eps, 0.2, 1.6) + fb.a_alpha_p(eps, 0.2, 1.6)));
        }

        #[test]
        fn n0p_monotone(a in masses(9), eps in 0.1f64..3.0, de in 0.0f64..1.0, p in 1.0f64..4.0, dp in 0.0f64..2.0) {
            let f = IsotropicMeasure::new(lin(8), a).unwrap();
            prop_assert!(f.n0p(eps, p + dp) <= f.n0p(eps, p) + 1e-14);
            prop_assert!(f.n0p(eps + de, p) >= f.n0p(eps, p) - 1e-14);
            prop_assert!(f.n0p(eps, p) >= f.condensate());
        }

        #[test]
        fn underline_is_the_dense_infimum(a in masses(9), eps in 0.2f64..4.0, alpha in 0.0f64..0.9) {
            let f = IsotropicMeasure::new(lin(8), a).unwrap();
            let u = f.underline_n_alpha_p(eps, alpha, 2.0);
            for k in 1..=400 {
                let d = eps * k as f64 / 400.0;
                prop_assert!(u <= f.n_alpha_p(d, alpha, 2.0) * (1.0 + 1e-12) + 1e-14);
            }
        }

        #[test]
        fn norm_triangle(a in masses(9), b in masses(9), c in masses(9)) {
            let g = lin(8);
            let fa = IsotropicMeasure::new(g.clone(), a).unwrap();
            let fb = IsotropicMeasure::new(g.clone(), b).unwrap();
            let fc = IsotropicMeasure::new(g, c).unwrap();
            prop_assert!(fa.norm1(&fc).unwrap() <= fa.norm1(&fb).unwrap() + fb.norm1(&fc).unwrap() + 1e-12);
            prop_assert!(fa.norm1_circ(&fc).unwrap() <= fa.norm1_circ(&fb).unwrap() + fb.norm1_circ(&fc).unwrap() + 1e-12);
        }

        #[test]
        fn entropy_subadditive_concave_monotone(a in masses(9), b in masses(9), t in 0.0f64..1.0) {
            let g = lin(8);
            let fa = IsotropicMeasure::new(g.clone(), a).unwrap();
            let fb = IsotropicMeasure::new(g, b).unwrap();
            let (sa, sb) = (fa.entropy(), fb.entropy());
            let sum = fa.add(&fb).unwrap();
            prop_assert!(sum.entropy() <= sa + sb + 1e-10);
            prop_assert!(sum.entropy() >= sa.max(sb) - 1e-10);
            let mix = fa.scaled(1.0 - t).add(&fb.scaled(t)).unwrap();
            prop_assert!(mix.entropy() >= (1.0 - t) * sa + t * sb - 1e-10);
        }
    }
}
