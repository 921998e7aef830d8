//! Scale trajectories `t -> (mu(t), mu'(t))`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A positive scale path on `[t0, inf)` with its time derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScaleTrajectory {
    Constant { mu: f64 },
    /// `amplitude * exp(-kappa t)`.
    Exponential { amplitude: f64, kappa: f64 },
    /// `exp(-c_star exp(2 c1 t) / (2 c1))`.
    DoubleExponential { c1: f64, c_star: f64 },
    /// Cubic Hermite interpolation through `(t, mu, mu')` samples.
    Tabulated { t: Vec<f64>, mu: Vec<f64>, mu_dot: Vec<f64> },
}

impl ScaleTrajectory {
    pub fn constant(mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {mu}")));
        }
        Ok(Self::Constant { mu })
    }

    pub fn exponential(kappa: f64) -> Self {
        Self::Exponential { amplitude: 1.0, kappa }
    }

    pub fn tabulated(t: Vec<f64>, mu: Vec<f64>, mu_dot: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != mu.len() || t.len() != mu_dot.len() {
            return Err(Error::InvalidArgument("tabulated trajectory needs matching columns of length >= 2".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("tabulated times must increase strictly".into()));
        }
        if mu.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidArgument("tabulated scales must be positive".into()));
        }
        Ok(Self::Tabulated { t, mu, mu_dot })
    }

    /// Natural log of the scale; finite even where `mu` underflows.
    pub fn log_mu(&self, t: f64) -> Result<f64> {
        match self {
            Self::DoubleExponential { c1, c_star } => Ok(-c_star * (2.0 * c1 * t).exp() / (2.0 * c1)),
            _ => Ok(self.mu(t)?.ln()),
        }
    }

    pub fn mu(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|v| v.0)
    }

    pub fn mu_dot(&self, t: f64) -> Result<f64> {
        self.eval(t).map(|v| v.1)
    }

    /// `(mu(t), mu'(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !t.is_finite() {
            return Err(Error::TrajectoryUndefined(t));
        }
        match self {
            Self::Constant { mu } => Ok((*mu, 0.0)),
            Self::Exponential { amplitude, kappa } => {
                let m = amplitude * (-kappa * t).exp();
                Ok((m, -kappa * m))
            }
            Self::DoubleExponential { c1, c_star } => {
                let e = (2.0 * c1 * t).exp();
                let m = (-c_star * e / (2.0 * c1)).exp();
                Ok((m, -c_star * e * m))
            }
            Self::Tabulated { t: ts, mu, mu_dot } => {
                let n = ts.len();
                if t < ts[0] || t > ts[n - 1] {
                    return Err(Error::TrajectoryUndefined(t));
                }
                let k = ts.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
                let h = ts[k + 1] - ts[k];
                let s = (t - ts[k]) / h;
                let (h00, h10, h01, h11) =
                    (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s, -2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
                let (d00, d10, d01, d11) =
                    (6.0 * s * s - 6.0 * s, 3.0 * s * s - 4.0 * s + 1.0, -6.0 * s * s + 6.0 * s, 3.0 * s * s - 2.0 * s);
                let m = h00 * mu[k] + h10 * h * mu_dot[k] + h01 * mu[k + 1] + h11 * h * mu_dot[k + 1];
                let md = (d00 * mu[k] + d01 * mu[k + 1]) / h + d10 * mu_dot[k] + d11 * mu_dot[k + 1];
                Ok((m, md))
            }
        }
    }

    /// Same shape with the scale multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Constant { mu } => Self::Constant { mu: mu * c },
            Self::Exponential { amplitude, kappa } => Self::Exponential { amplitude: amplitude * c, kappa: *kappa },
            Self::Tabulated { t, mu, mu_dot } => Self::Tabulated {
                t: t.clone(),
                mu: mu.iter().map(|m| m * c).collect(),
                mu_dot: mu_dot.iter().map(|m| m * c).collect(),
            },
            Self::DoubleExponential { .. } => {
                let mut ts = Vec::new();
                let (mut mu, mut md) = (Vec::new(), Vec::new());
                for k in 0..=400 {
                    let t = k as f64 * 0.01;
                    let (m, d) = self.eval(t).unwrap_or((f64::MIN_POSITIVE, 0.0));
                    ts.push(t);
                    mu.push(m.max(f64::MIN_POSITIVE) * c);
                    md.push(d * c);
                }
                Self::Tabulated { t: ts, mu, mu_dot: md }
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Exponential { .. } => "exponential",
            Self::DoubleExponential { .. } => "double-exponential",
            Self::Tabulated { .. } => "tabulated",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_log_derivative_is_constant() {
        let p = ScaleTrajectory::exponential(0.7);
        for t in [0.0, 1.0, 5.5] {
            let (m, d) = p.eval(t).unwrap();
            assert!((d / m + 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn double_exponential_log_is_exact() {
        let p = ScaleTrajectory::DoubleExponential { c1: 0.5, c_star: 48.0 };
        assert_eq!(p.log_mu(3.0).unwrap(), -48.0 * 3f64.exp());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |t: f64| 2.0 + t - 0.3 * t * t + 0.05 * t.powi(3);
        let df = |t: f64| 1.0 - 0.6 * t + 0.15 * t * t;
        let ts: Vec<f64> = (0..6).map(|k| k as f64 * 0.7).collect();
        let p = ScaleTrajectory::tabulated(ts.clone(), ts.iter().map(|&t| f(t)).collect(), ts.iter().map(|&t| df(t)).collect()).unwrap();
        for t in [0.1, 1.33, 3.49] {
            let (m, d) = p.eval(t).unwrap();
            assert!((m - f(t)).abs() < 1e-12);
            assert!((d - df(t)).abs() < 1e-12);
        }
        assert!(matches!(p.eval(10.0), Err(Error::TrajectoryUndefined(_))));
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(ScaleTrajectory::tabulated(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(ScaleTrajectory::tabulated(vec![0.0, 1.0], vec![1.0, -1.0], vec![0.0, 0.0]).is_err());
        assert!(ScaleTrajectory::constant(0.0).is_err());
    }
}
