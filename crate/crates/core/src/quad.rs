//! One-dimensional quadrature building blocks.
//!
//! Gauss-Legendre nodes come from `gauss-quad`; the graded variant composes
//! them with a polynomial sigmoid so that algebraic endpoint singularities
//! (`s^eta`, square roots, the cusp of `|a + e^{i theta} b|`) are smoothed.
//! `adaptive` is a global-subdivision Gauss-Kronrod (7, 15) scheme and
//! `wynn_epsilon` accelerates alternating partial sums.

use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights of a rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Plain Gauss-Legendre with `n` points mapped to `[0, 1]`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        let deg = NonZeroUsize::new(n).ok_or_else(|| Error::domain("quadrature order must be positive"))?;
        let gl = GaussLegendre::new(deg);
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Rule {
            nodes: pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect(),
            weights: pairs.iter().map(|p| 0.5 * p.1).collect(),
        })
    }

    /// Gauss-Legendre composed with `u = t^p / (t^p + (1-t)^p)`, which
    /// vanishes to order `p - 1` at both ends.
    pub fn graded(n: usize, p: i32) -> Result<Self> {
        if p < 1 {
            return Err(Error::domain("grading exponent must be >= 1"));
        }
        let base = Self::gauss_legendre(n)?;
        let pf = p as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (&t, &w) in base.nodes.iter().zip(&base.weights) {
            let a = t.powi(p);
            let b = (1.0 - t).powi(p);
            let d = a + b;
            nodes.push(a / d);
            // du/dt = p t^{p-1} (1-t)^{p-1} / d^2
            let du = pf * t.powi(p - 1) * (1.0 - t).powi(p - 1) / (d * d);
            weights.push(w * du);
        }
        Ok(Rule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(a + h * t);
        }
        acc * h
    }

    /// Integrates over `[a, b]` where the integrand behaves like
    /// `sqrt(x - a)` at the left end: `x = a + (b - a) t^2`.
    pub fn integrate_sqrt_left(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        let mut acc = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * 2.0 * t * f(a + h * t * t);
        }
        acc * h
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and error of one panel.
pub fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let est = rk * h;
    let err = ((rk - rg) * h).abs();
    (est, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss-Kronrod on `[a, b]`. Fails with a numeric error
/// when `max_panels` is exhausted before `abs_tol + rel_tol |I|` is met.
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    let (v, e) = gk15(a, b, &mut f);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, val: v, err: e });
    let mut total = v;
    let mut total_err = e;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(Error::numeric(format!(
                "adaptive quadrature on [{a}, {b}] did not converge: value {total}, error {total_err}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            return Err(Error::numeric(format!(
                "adaptive quadrature hit machine resolution near x = {m}: value {total}, error {total_err}"
            )));
        }
        let (v1, e1) = gk15(worst.a, m, &mut f);
        let (v2, e2) = gk15(m, worst.b, &mut f);
        total += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, val: v2, err: e2 });
    }
    // resum to shed accumulated cancellation in the running totals
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter() {
        value += p.val;
        error += p.err;
    }
    if !value.is_finite() {
        return Err(Error::numeric(format!("non-finite integral on [{a}, {b}]")));
    }
    Ok(Estimate { value, error })
}

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
/// best estimate and the difference between the last two extrapolants.
pub fn wynn_epsilon(partial: &[f64]) -> Estimate {
    let n = partial.len();
    if n == 0 {
        return Estimate { value: 0.0, error: f64::INFINITY };
    }
    if n < 3 {
        let last = partial[n - 1];
        let err = if n == 2 { (partial[1] - partial[0]).abs() } else { f64::INFINITY };
        return Estimate { value: last, error: err };
    }
    // e[k] holds column k of the epsilon table for the current diagonal
    let mut prev_col: Vec<f64> = partial.to_vec();
    let mut prev_prev: Vec<f64> = vec![0.0; n + 1];
    let mut evens: Vec<f64> = vec![partial[n - 1]];
    let mut col = 1;
    while prev_col.len() > 1 {
        let mut next = Vec::with_capacity(prev_col.len() - 1);
        for i in 0..prev_col.len() - 1 {
            let d = prev_col[i + 1] - prev_col[i];
            let base = if col == 1 { 0.0 } else { prev_prev[i + 1] };
            if d == 0.0 || !d.is_finite() {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / d);
            }
        }
        if col % 2 == 0 {
            if let Some(&v) = next.last() {
                if v.is_finite() {
                    evens.push(v);
                }
            }
        }
        prev_prev = prev_col;
        prev_col = next;
        col += 1;
    }
    let m = evens.len();
    if m == 1 {
        return Estimate {
            value: evens[0],
            error: (partial[n - 1] - partial[n - 2]).abs(),
        };
    }
    Estimate {
        value: evens[m - 1],
        error: (evens[m - 1] - evens[m - 2]).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let r = Rule::gauss_legendre(8).unwrap();
        let v = r.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_handles_endpoint_powers() {
        let r = Rule::graded(64, 3).unwrap();
        let v = r.integrate(0.0, 1.0, |x| x.powf(0.2));
        assert!((v - 1.0 / 1.2).abs() < 1e-10, "{v}");
        let v = r.integrate(0.0, 1.0, |x| (1.0 - x).sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_substitution() {
        let r = Rule::gauss_legendre(6).unwrap();
        let v = r.integrate_sqrt_left(0.0, 4.0, |x| x.sqrt());
        assert!((v - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_integrates_log_singularity() {
        let e = adaptive(|x: f64| -x.ln(), 0.0, 1.0, 1e-12, 1e-12, 500).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let e = adaptive(|x: f64| 1.0 / x, 0.0, 1.0, 1e-14, 0.0, 20);
        assert!(matches!(e, Err(Error::Numeric(_))));
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // partial sums of ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let mut partial = Vec::new();
        for k in 1..=15 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            partial.push(s);
        }
        let e = wynn_epsilon(&partial);
        assert!((e.value - std::f64::consts::LN_2).abs() < 1e-10, "{:?}", e);
    }
}
