//! The decaying solution of `lambda' + kappa(t) lambda = h(t)`:
//! `lambda(t) = -int_t^inf exp(K(tau) - K(t)) h(tau) dtau` with `K' = kappa`.
//!
//! Everything is carried in log-magnitude form so that doubly exponential rates and
//! forcings stay representable.

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use serde::{Deserialize, Serialize};

/// A positive decay rate with a known antiderivative.
pub trait DecayRate: Sync {
    fn kappa(&self, t: f64) -> f64;
    /// An antiderivative of `kappa`.
    fn antiderivative(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRate(pub f64);

impl DecayRate for ConstantRate {
    fn kappa(&self, _t: f64) -> f64 {
        self.0
    }
    fn antiderivative(&self, t: f64) -> f64 {
        self.0 * t
    }
}

/// `kappa(t) = c_star e^{2 c1 t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerRate {
    pub c1: f64,
    pub c_star: f64,
}

impl DecayRate for TowerRate {
    fn kappa(&self, t: f64) -> f64 {
        self.c_star * (2.0 * self.c1 * t).exp()
    }
    fn antiderivative(&self, t: f64) -> f64 {
        self.c_star * (2.0 * self.c1 * t).exp() / (2.0 * self.c1)
    }
}

/// A forcing given by its log-magnitude and sign.
pub trait Forcing: Sync {
    fn log_abs(&self, t: f64) -> f64;
    fn sign(&self, t: f64) -> f64;

    fn value(&self, t: f64) -> f64 {
        self.sign(t) * self.log_abs(t).exp()
    }
}

/// Adapter for a plain function of time.
pub struct FnForcing<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Forcing for FnForcing<F> {
    fn log_abs(&self, t: f64) -> f64 {
        (self.0)(t).abs().ln()
    }
    fn sign(&self, t: f64) -> f64 {
        let v = (self.0)(t);
        if v == 0.0 {
            0.0
        } else {
            v.signum()
        }
    }
}

/// Adapter for a forcing given in log form: `sign * exp(log_abs)`.
pub struct LogForcing<F>(pub F);

impl<F: Fn(f64) -> (f64, f64) + Sync> Forcing for LogForcing<F> {
    fn log_abs(&self, t: f64) -> f64 {
        (self.0)(t).0
    }
    fn sign(&self, t: f64) -> f64 {
        (self.0)(t).1
    }
}

/// `sign * exp(log_abs)`; zero is `(-inf, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub log_abs: f64,
    pub sign: f64,
}

impl LogValue {
    pub const ZERO: Self = Self { log_abs: f64::NEG_INFINITY, sign: 0.0 };

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }
}

/// The decaying branch, evaluated on demand.
pub struct DecayingSolution<'a> {
    rate: Box<dyn DecayRate + 'a>,
    forcing: &'a dyn Forcing,
    t0: f64,
    quad: Quadrature,
}

const MAX_PANELS: usize = 400;
/// Panels stop once the integrand has fallen this far below the reference scale.
const NEGLIGIBLE_EXPONENT: f64 = -60.0;

/// Builds the decaying solution on `[t0, inf)`, checking that the tail integral converges
/// at `t0`.
pub fn solve_decaying_scalar_ode<'a>(
    rate: impl DecayRate + 'a,
    forcing: &'a dyn Forcing,
    t0: f64,
) -> Result<DecayingSolution<'a>> {
    let sol = DecayingSolution { rate: Box::new(rate), forcing, t0, quad: Quadrature { abs_tol: 0.0, rel_tol: 1e-13, max_panels: 2000 } };
    sol.eval(t0)?;
    Ok(sol)
}

impl DecayingSolution<'_> {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `lambda(t)` in log form.
    pub fn eval(&self, t: f64) -> Result<LogValue> {
        if t < self.t0 {
            return Err(Error::InvalidArgument(format!("t = {t} precedes t0 = {}", self.t0)));
        }
        let k_t = self.rate.antiderivative(t);
        let l_t = self.forcing.log_abs(t);
        let reference = if l_t.is_finite() { l_t } else { 0.0 };
        let exponent = |tau: f64| self.rate.antiderivative(tau) - k_t + self.forcing.log_abs(tau) - reference;
        let integrand = |tau: f64| {
            let s = self.forcing.sign(tau);
            if s == 0.0 {
                0.0
            } else {
                s * exponent(tau).exp()
            }
        };
        let mut width = 1.0 / (1.0 + self.rate.kappa(t).abs());
        let mut a = t;
        let mut total = 0.0;
        for _ in 0..MAX_PANELS {
            let b = a + width;
            // The integrand is normalized to O(1) at `t`, so an absolute floor is meaningful.
            let quad = Quadrature { abs_tol: 1e-16 * width.min(1.0), ..self.quad };
            let part = quad
                .integrate(integrand, a, b)
                .map_err(|e| Error::DivergentForcing(format!("tail quadrature on [{a}, {b}] failed: {e}")))?
                .value;
            total += part;
            let e_end = exponent(b);
            if e_end.is_nan() || !total.is_finite() {
                return Err(Error::DivergentForcing(format!("forcing undefined near t = {b}")));
            }
            if e_end < NEGLIGIBLE_EXPONENT && part.abs() <= 1e-16 * total.abs().max(f64::MIN_POSITIVE) {
                return Ok(finish(reference, total));
            }
            if e_end < NEGLIGIBLE_EXPONENT && total == 0.0 && exponent(a) < NEGLIGIBLE_EXPONENT {
                return Ok(LogValue::ZERO);
            }
            a = b;
            width *= 2.0;
        }
        Err(divergent(t))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.value())
    }

    /// `lambda' = h - kappa lambda`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        Ok(self.forcing.value(t) - self.rate.kappa(t) * self.value(t)?)
    }

    /// `lambda(t0) e^{K(t0)}`, the constant selecting the decaying branch.
    pub fn branch_constant(&self) -> Result<LogValue> {
        let v = self.eval(self.t0)?;
        Ok(LogValue { log_abs: v.log_abs + self.rate.antiderivative(self.t0), sign: v.sign })
    }

    pub fn sample(&self, times: &[f64]) -> Result<Vec<LogValue>> {
        times.iter().map(|&t| self.eval(t)).collect()
    }
}

fn divergent(t: f64) -> Error {
    Error::DivergentForcing(format!("the tail integral from t = {t} does not converge"))
}

fn finish(reference: f64, total: f64) -> LogValue {
    if total == 0.0 {
        return LogValue::ZERO;
    }
    LogValue { log_abs: reference + total.abs().ln(), sign: -total.signum() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_forcing_gives_zero() {
        let f = FnForcing(|_t: f64| 0.0);
        let rate = ConstantRate(1.0);
        let sol = solve_decaying_scalar_ode(rate, &f, 0.0).unwrap();
        for t in [0.0, 1.0, 5.0] {
            assert_eq!(sol.value(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn exponential_forcing_hand_solution() {
        let f = FnForcing(|t: f64| (-2.0 * t).exp());
        let rate = ConstantRate(1.0);
        let sol = solve_decaying_scalar_ode(rate, &f, 0.0).unwrap();
        for t in [0.0f64, 0.5, 2.0, 10.0, 100.0] {
            let exact: f64 = -(-2.0 * t).exp();
            assert!((sol.value(t).unwrap() - exact).abs() <= 1e-8 * exact.abs(), "{t}");
        }
        let d = sol.branch_constant().unwrap();
        assert!((d.value() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn residual_for_oscillating_forcing() {
        let f = FnForcing(|t: f64| (-3.5 * t).exp() * (3.0 * t).cos());
        let rate = ConstantRate(2.0);
        let sol = solve_decaying_scalar_ode(rate, &f, 0.0).unwrap();
        let h = 1e-3;
        let v = |t: f64| sol.value(t).unwrap();
        for k in 1..20 {
            let t = 0.37 * k as f64;
            let d = (-v(t + 2.0 * h) + 8.0 * v(t + h) - 8.0 * v(t - h) + v(t - 2.0 * h)) / (12.0 * h);
            let res = d + 2.0 * sol.value(t).unwrap() - f.value(t);
            assert!(res.abs() < 1e-8, "{t}: {res}");
        }
    }

    #[test]
    fn growing_forcing_is_divergent() {
        let f = FnForcing(|t: f64| (2.0 * t).exp());
        let rate = ConstantRate(1.0);
        assert!(matches!(solve_decaying_scalar_ode(rate, &f, 0.0), Err(Error::DivergentForcing(_))));
    }

    #[test]
    fn decays_at_the_forcing_rate() {
        let f = FnForcing(|t: f64| (-3.0 * t).exp());
        let rate = ConstantRate(1.0);
        let sol = solve_decaying_scalar_ode(rate, &f, 0.0).unwrap();
        let bound = (0..40).map(|k| sol.value(k as f64).unwrap().abs() * (0.9 * k as f64).exp()).fold(0.0, f64::max);
        assert!(bound.is_finite() && bound < 1.0);
    }

    #[test]
    fn tower_rate_antiderivative() {
        let r = TowerRate { c1: 0.3, c_star: 48.0 };
        let h = 1e-6;
        let t = 0.8;
        let d = (r.antiderivative(t + h) - r.antiderivative(t - h)) / (2.0 * h);
        assert!((d - r.kappa(t)).abs() < 1e-6 * d);
    }
}
