//! Test functions `phi` acting on energy-variable measures.

/// A bounded function on `[0, inf)` with known non-smooth points.
pub trait TestFunction: Sync {
    fn eval(&self, x: f64) -> f64;

    /// Points where the function or its first derivative may jump.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `phi_eps(x) = ((1 - x/eps)_+)^2`, convex and non-increasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEps {
    pub eps: f64,
}

impl TestFunction for PhiEps {
    fn eval(&self, x: f64) -> f64 {
        let t = (1.0 - x / self.eps).max(0.0);
        t * t
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.eps]
    }
}

/// `((1 - x/eps)_+)^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCut {
    pub eps: f64,
    pub p: f64,
}

impl TestFunction for PowerCut {
    fn eval(&self, x: f64) -> f64 {
        (1.0 - x / self.eps).max(0.0).powf(self.p)
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.eps]
    }
}

/// `a x^2 + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TestFunction for Quadratic {
    fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }
}

/// Piecewise-linear hat supported on `[left, right]` with peak 1 at `center`.
/// `left == center` gives the half-hat used at the condensate node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hat {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl TestFunction for Hat {
    fn eval(&self, x: f64) -> f64 {
        if x == self.center {
            1.0
        } else if x < self.center {
            if x <= self.left {
                0.0
            } else {
                (x - self.left) / (self.center - self.left)
            }
        } else if x >= self.right {
            0.0
        } else {
            (self.right - x) / (self.right - self.center)
        }
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.left, self.center, self.right]
    }
}

/// Wraps a closure; kinks may be listed explicitly.
pub struct FnTest<F> {
    pub f: F,
    pub kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FnTest<F> {
    pub fn new(f: F) -> Self {
        FnTest { f, kinks: Vec::new() }
    }
}

impl<F: Fn(f64) -> f64 + Sync> TestFunction for FnTest<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_eps_values() {
        let p = PhiEps { eps: 2.0 };
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(1.0), 0.25);
        assert_eq!(p.eval(3.0), 0.0);
    }

    #[test]
    fn hat_values() {
        let h = Hat { left: 1.0, center: 2.0, right: 4.0 };
        assert_eq!(h.eval(1.5), 0.5);
        assert_eq!(h.eval(3.0), 0.5);
        assert_eq!(h.eval(2.0), 1.0);
        let h0 = Hat { left: 0.0, center: 0.0, right: 1.0 };
        assert_eq!(h0.eval(0.0), 1.0);
        assert_eq!(h0.eval(0.25), 0.75);
    }
}
