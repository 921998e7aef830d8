//! One-dimensional quadrature: globally adaptive Gauss-Kronrod (7/15) bisection and
//! Gauss-Legendre rules.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Settings for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_panels: 4000 }
    }
}

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, &x) in XGK.iter().take(7).enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

impl Quadrature {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }

    /// Same settings with every panel count doubled and tolerances tightened tenfold,
    /// used for refinement checks.
    pub fn refined(self) -> Self {
        Self { abs_tol: self.abs_tol * 0.1, rel_tol: self.rel_tol * 0.1, max_panels: self.max_panels * 2 }
    }

    /// Integrate `f` over `[a, b]` (either order). Endpoints are never evaluated.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate { value: 0.0, error: 0.0, panels: 0 });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let (v, e) = gk15(&mut f, lo, hi);
        let mut panels = vec![(lo, hi, v, e)];
        loop {
            let value: f64 = panels.iter().map(|p| p.2).sum();
            let error: f64 = panels.iter().map(|p| p.3).sum();
            if !value.is_finite() {
                return Err(Error::QuadratureFailed { a, b, tol: self.abs_tol, estimate: f64::NAN });
            }
            if error <= self.abs_tol.max(self.rel_tol * value.abs()) {
                return Ok(Estimate { value: sign * value, error, panels: panels.len() });
            }
            if panels.len() >= self.max_panels {
                return Err(Error::QuadratureFailed { a, b, tol: self.abs_tol, estimate: error });
            }
            let worst = panels
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let (pa, pb, _, _) = panels.swap_remove(worst);
            let mid = 0.5 * (pa + pb);
            if mid <= pa || mid >= pb {
                return Err(Error::QuadratureFailed { a, b, tol: self.abs_tol, estimate: error });
            }
            let (v1, e1) = gk15(&mut f, pa, mid);
            let (v2, e2) = gk15(&mut f, mid, pb);
            panels.push((pa, mid, v1, e1));
            panels.push((mid, pb, v2, e2));
        }
    }

    /// Integrate `f` over `[a, inf)` through `x = a + u / (1 - u)`.
    pub fn integrate_to_infinity(&self, mut f: impl FnMut(f64) -> f64, a: f64) -> Result<Estimate> {
        self.integrate(
            |u| {
                let w = 1.0 - u;
                let v = f(a + u / w) / (w * w);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
        )
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| v * h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 8, 13] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = Quadrature::default();
        let e = q.integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = Quadrature::default();
        let a = q.integrate(f64::exp, 0.0, 1.0).unwrap().value;
        let b = q.integrate(f64::exp, 1.0, 0.0).unwrap().value;
        assert_eq!(a, -b);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn semi_infinite() {
        let q = Quadrature::default();
        let e = q.integrate_to_infinity(|x| (-x).exp(), 0.0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn panel_cap_is_reported() {
        let q = Quadrature { abs_tol: 1e-30, rel_tol: 0.0, max_panels: 4 };
        assert!(matches!(
            q.integrate(|x| (1.0 / x).sin(), 1e-3, 1.0),
            Err(Error::QuadratureFailed { .. })
        ));
    }
}
