//! Riemann zeta and the polylogarithm on real arguments.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

const BORWEIN_N: usize = 40;

fn borwein_d() -> [f64; BORWEIN_N + 1] {
    // d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    let n = BORWEIN_N as f64;
    let mut d = [0.0; BORWEIN_N + 1];
    let mut term = 1.0 / n; // i = 0: (n-1)! / n! = 1/n
    let mut acc = term;
    d[0] = n * acc;
    for i in 1..=BORWEIN_N {
        let fi = i as f64;
        term *= (n + fi - 1.0) * (n - fi + 1.0) * 4.0 / ((2.0 * fi - 1.0) * (2.0 * fi));
        acc += term;
        d[i] = n * acc;
    }
    d
}

/// Riemann zeta for real `s != 1`.
pub fn zeta(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::domain(format!("zeta argument must be finite, got {s}")));
    }
    if s == 1.0 {
        return Err(Error::domain("zeta has a pole at s = 1"));
    }
    if s == 0.0 {
        return Ok(-0.5);
    }
    if s < 0.5 {
        // functional equation
        if s == s.floor() && (s as i64) % 2 == 0 {
            return Ok(0.0);
        }
        let t = 1.0 - s;
        let z = zeta(t)?;
        return Ok(2f64.powf(s) * PI.powf(s - 1.0) * (0.5 * PI * s).sin() * gamma(t) * z);
    }
    if s > 60.0 {
        return Ok(1.0 + 2f64.powf(-s) + 3f64.powf(-s));
    }
    let d = borwein_d();
    let dn = d[BORWEIN_N];
    let mut acc = 0.0;
    for k in 0..BORWEIN_N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * (d[k] - dn) / ((k + 1) as f64).powf(s);
    }
    Ok(-acc / (dn * (1.0 - 2f64.powf(1.0 - s))))
}

/// Polylogarithm `Li_s(z)` for real `s > 1` and `0 <= z <= 1`.
pub fn polylog(s: f64, z: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(format!("polylog order must exceed 1, got {s}")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::domain(format!("polylog argument must lie in [0, 1], got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == 1.0 {
        return zeta(s);
    }
    if z <= 0.5 {
        let mut acc = 0.0;
        let mut zk = z;
        for k in 1..2000 {
            let t = zk / (k as f64).powf(s);
            acc += t;
            if t < 1e-17 * acc {
                return Ok(acc);
            }
            zk *= z;
        }
        return Err(Error::numeric(format!("polylog series did not converge at z = {z}")));
    }
    // Li_s(e^mu) = Gamma(1-s) (-mu)^{s-1} + sum_k zeta(s-k) mu^k / k!,  |mu| < 2 pi
    let mu = z.ln();
    let non_integer = s != s.floor();
    let mut acc = if non_integer {
        gamma(1.0 - s) * (-mu).powf(s - 1.0)
    } else {
        return polylog_integer_order(s as i64, mu);
    };
    let mut muk = 1.0;
    for k in 0..200 {
        if k > 0 {
            muk *= mu / k as f64;
        }
        let t = zeta(s - k as f64)? * muk;
        acc += t;
        if k > 4 && t.abs() < 1e-17 * acc.abs() {
            return Ok(acc);
        }
    }
    Err(Error::numeric(format!("polylog expansion did not converge at z = {z}")))
}

fn polylog_integer_order(s: i64, mu: f64) -> Result<f64> {
    // pole term of the expansion for integer s: mu^{s-1}/(s-1)! (H_{s-1} - ln(-mu))
    let sm1 = (s - 1) as usize;
    let mut fact = 1.0;
    let mut harmonic = 0.0;
    for j in 1..=sm1 {
        fact *= j as f64;
        harmonic += 1.0 / j as f64;
    }
    let mut acc = mu.powi(sm1 as i32) / fact * (harmonic - (-mu).ln());
    let mut muk = 1.0;
    for k in 0..200usize {
        if k > 0 {
            muk *= mu / k as f64;
        }
        if k == sm1 {
            continue;
        }
        let t = zeta((s - k as i64) as f64)? * muk;
        acc += t;
        if k > sm1 + 4 && t != 0.0 && t.abs() < 1e-17 * acc.abs() {
            return Ok(acc);
        }
    }
    Err(Error::numeric("polylog expansion did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // mpmath, 30 digits
    #[test]
    fn zeta_reference_values() {
        assert_relative_eq!(zeta(1.5).unwrap(), 2.612_375_348_685_488, max_relative = 1e-14);
        assert_relative_eq!(zeta(2.5).unwrap(), 1.341_487_257_250_917_2, max_relative = 1e-14);
        assert_relative_eq!(zeta(2.0).unwrap(), PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(zeta(0.5).unwrap(), -1.460_354_508_809_586_8, max_relative = 1e-13);
        assert_relative_eq!(zeta(-0.5).unwrap(), -0.207_886_224_977_354_57, max_relative = 1e-12);
        assert_relative_eq!(zeta(-1.5).unwrap(), -0.025_485_201_889_833_03, max_relative = 1e-12);
        assert_eq!(zeta(-2.0).unwrap(), 0.0);
        assert!(zeta(1.0).is_err());
    }

    #[test]
    fn polylog_reference_values() {
        assert_relative_eq!(polylog(1.5, 0.3).unwrap(), 0.338_311_095_544_806_27, max_relative = 1e-13);
        assert_relative_eq!(polylog(1.5, 0.9).unwrap(), 1.614_438_528_566_339_7, max_relative = 1e-12);
        assert_relative_eq!(polylog(2.5, 0.99).unwrap(), 1.317_539_425_958_727_7, max_relative = 1e-12);
        assert_relative_eq!(polylog(1.5, 1.0).unwrap(), 2.612_375_348_685_488, max_relative = 1e-14);
        assert_relative_eq!(polylog(2.0, 0.75).unwrap(), 0.978_469_392_930_306_1, max_relative = 1e-12);
    }

    #[test]
    fn polylog_branches_agree_at_the_switch() {
        for &s in &[1.5, 2.5, 3.0] {
            let a = polylog(s, 0.5).unwrap();
            let b = polylog(s, 0.5 + 1e-12).unwrap();
            assert!((a - b).abs() < 1e-11, "s={s}: {a} vs {b}");
        }
    }
}
