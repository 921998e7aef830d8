//! Blow-up rate quadratures: `Gamma`, `Omega`, the cut-off integral of `Omega`, the
//! substitution identity relating them, and the projected rate integral.

use crate::error::{Error, Result};
use crate::numfmt;
use crate::quadrature::Quadrature;
use crate::trajectory::ScaleTrajectory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Below this argument `1 - e^-a (1 + a)` is summed as a power series.
pub const SERIES_CUTOFF: f64 = 0.5;

/// `1 - e^{-a}(1 + a)` for `a >= 0`, the regularized lower incomplete gamma `P(2, a)`.
pub fn lower_gamma2(a: f64) -> f64 {
    if a < SERIES_CUTOFF {
        lower_gamma2_series(a)
    } else {
        -(-a).exp_m1() - a * (-a).exp()
    }
}

/// `sum_{n>=2} (-1)^n (n-1) a^n / n!`.
pub fn lower_gamma2_series(a: f64) -> f64 {
    let mut term = a * a / 2.0;
    let mut sum: f64 = 0.0;
    let mut n = 2.0;
    while term.abs() > 1e-18 * sum.abs() && n < 60.0 {
        sum += (n - 1.0) * term;
        n += 1.0;
        term *= -a / n;
    }
    sum
}

/// `lower_gamma2` evaluated without the series branch.
pub fn lower_gamma2_direct(a: f64) -> f64 {
    -(-a).exp_m1() - a * (-a).exp()
}

/// `Gamma(tau, rho) = (1 - e^{-a}(1 + a)) / (rho^2 + 1)^2` with `a = tau (rho^2 + 1) / 4`.
pub fn gamma_fn(tau: f64, rho: f64) -> Result<f64> {
    if !(tau >= 0.0) || !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma_fn needs tau, rho >= 0, got ({tau}, {rho})")));
    }
    let q = rho * rho + 1.0;
    Ok(lower_gamma2(tau * q / 4.0) / (q * q))
}

/// Settings used for every nested quadrature in this module.
pub fn default_quadrature() -> Quadrature {
    Quadrature { abs_tol: 1e-13, rel_tol: 1e-13, max_panels: 4000 }
}

/// `Omega(tau) = int_0^inf Gamma(tau, rho) rho^5 / (1 + rho^2)^4 d rho`.
pub fn omega(tau: f64) -> Result<f64> {
    omega_with(tau, &default_quadrature())
}

pub fn omega_with(tau: f64, quad: &Quadrature) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("omega needs tau >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let inner = quad.integrate(
        |rho| {
            let q = 1.0 + rho * rho;
            lower_gamma2(tau * q / 4.0) * rho.powi(5) / q.powi(6)
        },
        0.0,
        1.0,
    )?;
    let tail = quad.integrate(
        |u| {
            if u == 0.0 {
                return 0.0;
            }
            let q = 1.0 + u * u;
            lower_gamma2(tau * q / (4.0 * u * u)) * u.powi(5) / q.powi(6)
        },
        0.0,
        1.0,
    )?;
    Ok(inner.value + tail.value)
}

/// Limit of `Omega` as `tau -> inf`.
pub const OMEGA_INFINITY: f64 = 1.0 / 60.0;

/// `int_0^M Omega` and the local growth rate `Omega(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiValue {
    pub cutoff: f64,
    pub value: f64,
    pub growth_rate: f64,
}

/// `int_a^b Omega` on dyadic panels.
fn omega_integral(a: f64, b: f64, quad: &Quadrature) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut edges = vec![a];
    let mut e = if a > 0.0 { a * 2.0 } else { b.min(1.0) };
    while e < b {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let mut err = None;
        let v = quad.integrate(
            |s| match omega_with(s, quad) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            w[0],
            w[1],
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        total += v.value;
    }
    Ok(total)
}

/// `int_0^M Omega(s) ds`; grows like `M / 60`, so the untruncated integral diverges.
pub fn xi_regularized(m: f64) -> Result<XiValue> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff must be positive, got {m}")));
    }
    let quad = default_quadrature();
    Ok(XiValue { cutoff: m, value: omega_integral(0.0, m, &quad)?, growth_rate: omega_with(m, &quad)? })
}

/// Both sides of `int_eps^M s^-3 Omega(s^-2) ds = 1/2 int_{M^-2}^{eps^-2} Omega(s) ds`.
pub fn i2_substitution_check(eps: f64, m: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) || !(m >= eps) {
        return Err(Error::InvalidArgument(format!("need 0 < eps <= M, got ({eps}, {m})")));
    }
    if eps == m {
        return Ok((0.0, 0.0));
    }
    let quad = default_quadrature();
    let mut err = None;
    let lhs = quad.integrate(
        |s| match omega_with(1.0 / (s * s), &quad) {
            Ok(v) => v / (s * s * s),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        eps,
        m,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let rhs = 0.5 * omega_integral(1.0 / (m * m), 1.0 / (eps * eps), &quad)?;
    Ok((lhs.value, rhs))
}

/// The truncated rate integral and its sensitivity to the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateIntegral {
    /// `144/mu(t) int_{t0}^{t - eps} mu mu' / (t - s)^2 Omega(mu(s)^2 / (t - s)) ds - 24 pi^2 / mu(t)`.
    pub value: f64,
    pub integral_term: f64,
    pub constant_term: f64,
    pub eps_cut: f64,
    /// The same quantity with `eps_cut / 2`.
    pub value_half_eps: f64,
    pub sensitivity: f64,
}

/// Default truncation `1e-3 (t - t0)`.
pub fn default_eps_cut(t0: f64, t: f64) -> f64 {
    1e-3 * (t - t0)
}

fn rate_integral_term(path: &ScaleTrajectory, t0: f64, t: f64, eps_cut: f64, mu_t: f64) -> Result<f64> {
    if matches!(path, ScaleTrajectory::Constant { .. }) {
        return Ok(0.0);
    }
    let quad = default_quadrature();
    let mut err = None;
    let v = quad.integrate(
        |s| {
            let r = path.eval(s).and_then(|(m, md)| {
                let w = t - s;
                Ok(m * md / (w * w) * omega_with(m * m / w, &quad)?)
            });
            r.unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            })
        },
        t0,
        t - eps_cut,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(144.0 / mu_t * v.value)
}

pub fn projection_rate_integral(path: &ScaleTrajectory, t0: f64, t: f64, eps_cut: f64) -> Result<RateIntegral> {
    if !(t > t0) {
        return Err(Error::InvalidArgument(format!("need t > t0, got t0={t0}, t={t}")));
    }
    if !(eps_cut > 0.0 && eps_cut < t - t0) {
        return Err(Error::InvalidArgument(format!("eps_cut must lie in (0, t - t0), got {eps_cut}")));
    }
    path.eval(t0)?;
    let mu_t = path.mu(t)?;
    let constant_term = -24.0 * PI * PI / mu_t;
    let integral_term = rate_integral_term(path, t0, t, eps_cut, mu_t)?;
    let half = rate_integral_term(path, t0, t, 0.5 * eps_cut, mu_t)?;
    let value = integral_term + constant_term;
    let value_half_eps = half + constant_term;
    Ok(RateIntegral { value, integral_term, constant_term, eps_cut, value_half_eps, sensitivity: value_half_eps - value })
}

/// `pi^2 / (6 |xi|)` and the sign of `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa0 {
    pub magnitude: f64,
    pub xi_sign: f64,
    /// `-pi^2 / (6 xi)`, negative when `xi > 0`.
    pub signed: f64,
}

pub fn kappa0_candidate(xi_value: f64) -> Result<Kappa0> {
    if xi_value == 0.0 || !xi_value.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa0 needs a nonzero finite input, got {xi_value}")));
    }
    let magnitude = PI * PI / (6.0 * xi_value.abs());
    Ok(Kappa0 { magnitude, xi_sign: xi_value.signum(), signed: -PI * PI / (6.0 * xi_value) })
}

/// Tabulated `Omega` with the cut-off `Xi` ladder and derived constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub tau_grid: Vec<f64>,
    pub omega_values: Vec<f64>,
    pub xi_reg: Vec<XiValue>,
    pub kappa0_candidates: Vec<Kappa0>,
    pub kappa0_candidate: f64,
    pub provenance: Quadrature,
}

impl RateTable {
    pub fn build(tau_grid: &[f64], cutoffs: &[f64]) -> Result<Self> {
        let mut tau_grid = tau_grid.to_vec();
        tau_grid.sort_by(f64::total_cmp);
        let omega_values = tau_grid.par_iter().map(|&t| omega(t)).collect::<Result<Vec<_>>>()?;
        let mut cutoffs = cutoffs.to_vec();
        cutoffs.sort_by(f64::total_cmp);
        let xi_reg = cutoffs.par_iter().map(|&m| xi_regularized(m)).collect::<Result<Vec<_>>>()?;
        let kappa0_candidates = xi_reg.iter().map(|x| kappa0_candidate(x.value)).collect::<Result<Vec<_>>>()?;
        let kappa0_candidate = kappa0_candidates.last().map_or(0.0, |k| k.magnitude);
        Ok(Self { tau_grid, omega_values, xi_reg, kappa0_candidates, kappa0_candidate, provenance: default_quadrature() })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,omega\n");
        for (t, o) in self.tau_grid.iter().zip(&self.omega_values) {
            s.push_str(&numfmt::row(&[*t, *o]));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_limits() {
        assert_eq!(gamma_fn(0.0, 2.0).unwrap(), 0.0);
        assert!((gamma_fn(1e6, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let t = 1e-3;
        assert!((gamma_fn(t, 0.0).unwrap() / (t * t / 32.0) - 1.0).abs() < 1e-3);
        assert!(gamma_fn(-1.0, 0.0).is_err());
        assert!(gamma_fn(1.0, -0.1).is_err());
    }

    #[test]
    fn taylor_coefficients() {
        // a^2/2 - a^3/3 + a^4/8 - a^5/30 + a^6/144
        let a: f64 = 1e-2;
        let taylor = a * a / 2.0 - a.powi(3) / 3.0 + a.powi(4) / 8.0 - a.powi(5) / 30.0 + a.powi(6) / 144.0;
        assert!((lower_gamma2(a) - taylor).abs() < 1e-15);
    }

    #[test]
    fn no_seam_between_branches() {
        for a in [1e-4, 1e-3, 0.1, 0.49, SERIES_CUTOFF, 0.7] {
            let s = lower_gamma2_series(a);
            let d = lower_gamma2_direct(a);
            assert!((s - d).abs() <= 1e-12 * s.max(1e-300) + 1e-16 * a, "a={a} s={s} d={d}");
        }
    }

    #[test]
    fn omega_limits() {
        assert_eq!(omega(0.0).unwrap(), 0.0);
        assert!((omega(1e4).unwrap() - OMEGA_INFINITY).abs() <= 1e-6);
        let coarse = omega_with(1.0, &Quadrature::with_tol(1e-10)).unwrap();
        let fine = omega_with(1.0, &Quadrature::with_tol(1e-10).refined()).unwrap();
        assert!(coarse > 0.0 && (coarse - fine).abs() < 1e-9);
    }

    #[test]
    fn xi_grows_like_m_over_60() {
        let a = xi_regularized(400.0).unwrap();
        let b = xi_regularized(800.0).unwrap();
        assert!(((b.value - a.value) / (400.0 / 60.0) - 1.0).abs() < 0.02);
        assert!((a.growth_rate - OMEGA_INFINITY).abs() < 1e-3);
    }

    #[test]
    fn substitution_identity() {
        for (eps, m) in [(0.5, 4.0), (0.25, 2.0), (1.0, 10.0)] {
            let (l, r) = i2_substitution_check(eps, m).unwrap();
            assert!((l - r).abs() <= 1e-8, "{eps} {m}: {l} vs {r}");
            assert!(l >= 0.0 && r >= 0.0);
        }
        assert_eq!(i2_substitution_check(2.0, 2.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn constant_path_gives_the_bare_constant() {
        let r = projection_rate_integral(&ScaleTrajectory::constant(0.5).unwrap(), 0.0, 1.0, 1e-3).unwrap();
        assert_eq!(r.value, -24.0 * PI * PI / 0.5);
        assert_eq!(r.sensitivity, 0.0);
    }

    #[test]
    fn shrinking_path_gives_a_negative_integral() {
        let path = ScaleTrajectory::exponential(0.5);
        for eps in [0.1, 0.01] {
            let r = projection_rate_integral(&path, 0.0, 1.0, eps).unwrap();
            assert!(r.integral_term < 0.0);
        }
    }

    #[test]
    fn kappa0_inversion() {
        let k = kappa0_candidate(-PI * PI / 6.0).unwrap();
        assert!((k.magnitude - 1.0).abs() < 1e-15 && k.xi_sign < 0.0 && (k.signed - 1.0).abs() < 1e-15);
        let k = kappa0_candidate(PI * PI / 6.0).unwrap();
        assert!((k.magnitude - 1.0).abs() < 1e-15 && k.xi_sign > 0.0);
        assert!((kappa0_candidate(-PI * PI / 12.0).unwrap().magnitude - 2.0).abs() < 1e-15);
        assert!(kappa0_candidate(0.0).is_err());
    }

    #[test]
    fn table_is_monotone() {
        let t = RateTable::build(&[0.0, 0.5, 1.0, 4.0, 16.0], &[1.0, 4.0, 16.0]).unwrap();
        assert_eq!(t.omega_values[0], 0.0);
        assert!(t.omega_values.windows(2).all(|w| w[1] >= w[0]));
        assert!(t.xi_reg.windows(2).all(|w| w[1].value >= w[0].value));
        assert!(t.to_csv().starts_with("tau,omega\n0.0000000000000000e0,0.0000000000000000e0\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn omega_is_nondecreasing(a in 0.0..50.0f64, d in 0.0..50.0f64) {
            let lo = omega(a).unwrap();
            let hi = omega(a + d).unwrap();
            prop_assert!(lo >= 0.0);
            prop_assert!(hi >= lo - 1e-13);
        }
    }
}
