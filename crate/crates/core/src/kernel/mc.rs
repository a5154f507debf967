//! Monte-Carlo check of the reduction of the 3D collision integral to the
//! energy-variable weight `W`.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{interior_integral, j_breakpoints, PhiModel, Quadrature};
use crate::error::{Error, Result};
use crate::quad::Rule;

/// Outcome of [`mc_reduce_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McReport {
    pub mc_estimate: f64,
    pub stderr: f64,
    pub quadrature_value: f64,
    pub samples: usize,
}

impl McReport {
    /// `|mc - quadrature|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.mc_estimate == self.quadrature_value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mc_estimate - self.quadrature_value).abs() / self.stderr
        }
    }
}

/// Inner bracket of the reduced integral:
/// `int_lo^hi int_0^{2 pi} Phi(sqrt2 s, sqrt2 Y_*) d theta ds`, which equals
/// `4 pi sqrt(xyz) W` in the interior and vanishes elsewhere.
pub fn reduction_inner(model: &PhiModel, x: f64, y: f64, z: f64, quad: &Quadrature) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && z > 0.0 && y + z > x) {
        return Ok(0.0);
    }
    interior_integral(model, x, y, z, quad)
}

fn uniform_ball(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 3] {
    loop {
        let p = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let r2: f64 = p.iter().map(|c| c * c).sum();
        if r2 <= 1.0 {
            return [p[0] * radius, p[1] * radius, p[2] * radius];
        }
    }
}

fn uniform_sphere(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let u: f64 = rng.gen_range(-1.0..1.0);
    let t: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - u * u).sqrt();
    [r * t.cos(), r * t.sin(), u]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Compares
/// `int B(v - v_*, omega) Psi(|v|^2/2, |v'|^2/2, |v_*'|^2/2) d omega dv_* dv`
/// estimated by Monte Carlo with
/// `sqrt2 int 1{y+z>x} Psi(x, y, z) 4 pi sqrt(xyz) W dx dy dz` by quadrature.
///
/// `psi` must vanish outside `[0, support]^3`. `v` is sampled uniformly in
/// the ball `|v|^2 <= 2 support`, `v_*` in `|v_*|^2 <= 4 support`, which
/// covers every collision with all three energies in the support.
pub fn mc_reduce_check(
    model: &PhiModel,
    psi: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    support: f64,
    n_samples: usize,
    seed: u64,
    quad: &Quadrature,
) -> Result<McReport> {
    if n_samples < 10_000 {
        return Err(Error::domain(format!("n_samples must be >= 1e4, got {n_samples}")));
    }
    if !(support > 0.0 && support.is_finite()) {
        return Err(Error::domain("psi support must be positive and finite"));
    }
    model.validate()?;
    let r1 = (2.0 * support).sqrt();
    let r2 = 2.0 * support.sqrt();
    let vol = (4.0 / 3.0 * PI).powi(2) * (r1 * r2).powi(3) * 4.0 * PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..n_samples {
        let v = uniform_ball(&mut rng, r1);
        let vs = uniform_ball(&mut rng, r2);
        let om = uniform_sphere(&mut rng);
        let rel = [v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]];
        let c = dot(&rel, &om);
        let vp = [v[0] - c * om[0], v[1] - c * om[1], v[2] - c * om[2]];
        let vsp = [vs[0] + c * om[0], vs[1] + c * om[1], vs[2] + c * om[2]];
        let x = 0.5 * dot(&v, &v);
        let y = 0.5 * dot(&vp, &vp);
        let z = 0.5 * dot(&vsp, &vsp);
        let p = psi(x, y, z);
        let val = if p == 0.0 {
            0.0
        } else {
            // |v - v'| = |c|, |v - v_*'| = |rel - c omega|
            let d2 = [rel[0] - c * om[0], rel[1] - c * om[1], rel[2] - c * om[2]];
            let ph = model.phi_hat(c.abs()) + model.phi_hat(dot(&d2, &d2).sqrt());
            c.abs() * ph * ph / (16.0 * PI * PI) * p
        };
        sum += val;
        sum2 += val * val;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0);
    let quadrature_value = reduced_integral(model, psi, support, quad)?;
    Ok(McReport {
        mc_estimate: vol * mean,
        stderr: vol * (var / (n - 1.0)).sqrt(),
        quadrature_value,
        samples: n_samples,
    })
}

/// `sqrt2 int_{[0,L]^3} 1{y+z>x} Psi * inner dx dy dz`, with the `y` axis
/// split at `z` and the `x` axis at the kinks of `W`.
fn reduced_integral(
    model: &PhiModel,
    psi: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    support: f64,
    quad: &Quadrature,
) -> Result<f64> {
    let outer = Rule::gauss_legendre(24)?;
    let inner = Rule::gauss_legendre(12)?;
    let mut total = 0.0;
    for (&tz, &wz) in outer.nodes.iter().zip(&outer.weights) {
        let z = support * tz;
        let wz = wz * support;
        for (ya, yb) in [(0.0, z), (z, support)] {
            let hy = yb - ya;
            for (&ty, &wy) in outer.nodes.iter().zip(&outer.weights) {
                let y = ya + hy * ty;
                let wy = wy * hy;
                let s = (y + z).min(support);
                let mut pts = j_breakpoints(y, z, &[]);
                pts.retain(|&p| p <= s);
                if *pts.last().unwrap() < s {
                    pts.push(s);
                }
                let mut acc = 0.0;
                super::for_each_x_node(&pts, &inner, |x, wx| {
                    let p = psi(x, y, z);
                    if p != 0.0 {
                        acc += wx * p * reduction_inner(model, x, y, z, quad)?;
                    }
                    Ok(())
                })?;
                total += wz * wy * acc;
            }
        }
    }
    Ok(SQRT_2 * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64, y: f64, z: f64) -> f64 {
        let b = |t: f64| if t > 0.0 && t < 2.0 { (t * (2.0 - t)).powi(2) } else { 0.0 };
        b(x) * b(y) * b(z)
    }

    #[test]
    fn zero_psi_gives_zero() {
        let q = Quadrature::default();
        let r = mc_reduce_check(&PhiModel::HardSphere, &|_, _, _| 0.0, 1.0, 10_000, 1, &q).unwrap();
        assert_eq!(r.mc_estimate, 0.0);
        assert_eq!(r.quadrature_value, 0.0);
    }

    #[test]
    fn refuses_small_sample_counts() {
        let q = Quadrature::default();
        assert!(mc_reduce_check(&PhiModel::HardSphere, &bump, 2.0, 100, 1, &q).is_err());
    }

    #[test]
    fn hard_sphere_agrees_within_three_sigma() {
        let q = Quadrature::default();
        let r = mc_reduce_check(&PhiModel::HardSphere, &bump, 2.0, 400_000, 7, &q).unwrap();
        assert!(r.z_score() < 3.0, "{r:?}");
    }
}
