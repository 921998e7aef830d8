//! Profile states and the closed-form initial data.

use super::grid::RadialGrid;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `psi(r_k)` at one time. `inner_vacuum` is the value `psi` tends to at the origin (0 or 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub grid: RadialGrid,
    pub psi: Vec<f64>,
    pub time: f64,
    pub inner_vacuum: f64,
}

impl ProfileState {
    /// Builds a state, inferring the inner vacuum from the innermost value.
    pub fn new(grid: RadialGrid, psi: Vec<f64>, time: f64) -> Result<Self> {
        let v = if psi.first().is_some_and(|p| *p > 1.0) { 2.0 } else { 0.0 };
        Self::with_vacuum(grid, psi, time, v)
    }

    pub fn with_vacuum(grid: RadialGrid, psi: Vec<f64>, time: f64, inner_vacuum: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("{} values for {} nodes", psi.len(), grid.len())));
        }
        if psi.iter().any(|p| !p.is_finite()) || !time.is_finite() {
            return Err(Error::InvalidArgument("profile values must be finite".into()));
        }
        if inner_vacuum != 0.0 && inner_vacuum != 2.0 {
            return Err(Error::InvalidArgument(format!("inner vacuum must be 0 or 2, got {inner_vacuum}")));
        }
        Ok(Self { grid, psi, time, inner_vacuum })
    }

    fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        let psi = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), psi, 0.0).expect("closed-form profiles are finite")
    }

    /// The Dirichlet value held at the outermost node.
    pub fn outer_value(&self) -> f64 {
        self.psi[self.psi.len() - 1]
    }

    /// `psi -> 2 - psi`, which maps solutions to solutions.
    pub fn reflected(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            psi: self.psi.iter().map(|p| 2.0 - p).collect(),
            time: self.time,
            inner_vacuum: 2.0 - self.inner_vacuum,
        }
    }

    /// `psi / r^2`.
    pub fn psi_bar(&self) -> Vec<f64> {
        self.grid.nodes().iter().zip(&self.psi).map(|(r, p)| p / (r * r)).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `2 r^2 / (r^2 + lambda^2)`.
pub fn bubble(lambda: f64, r: f64) -> f64 {
    let r2 = r * r;
    2.0 * r2 / (r2 + lambda * lambda)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// The stationary profile of scale `lambda`.
pub fn steady_profile(lambda: f64, grid: &RadialGrid) -> Result<ProfileState> {
    positive("lambda", lambda)?;
    Ok(ProfileState::from_fn(grid, |r| bubble(lambda, r)))
}

/// `-2r^2 / (1 + r^2) + 2r^2 / (mu1^2 + r^2)`: a bubble of scale `mu1` inside an
/// anti-bubble of unit scale.
pub fn one_bubble_ansatz(mu1: f64, grid: &RadialGrid) -> Result<ProfileState> {
    positive("mu1", mu1)?;
    if mu1 >= 1.0 {
        return Err(Error::InvalidArgument(format!("mu1 must be below 1, got {mu1}")));
    }
    Ok(ProfileState::from_fn(grid, |r| bubble(mu1, r) - bubble(1.0, r)))
}

/// `2r^2 / (mu2^2 + r^2)` minus the one-bubble profile of scale `mu1`.
pub fn tower_ansatz(mu1: f64, mu2: f64, grid: &RadialGrid) -> Result<ProfileState> {
    positive("mu2", mu2)?;
    if mu2 >= mu1 {
        return Err(Error::InvalidArgument(format!("need mu2 < mu1, got mu2={mu2}, mu1={mu1}")));
    }
    let inner = one_bubble_ansatz(mu1, grid)?;
    let psi = grid.nodes().iter().zip(&inner.psi).map(|(&r, p)| bubble(mu2, r) - p).collect();
    ProfileState::new(grid.clone(), psi, 0.0)
}

/// Radii where the closed-form tower profile equals 1, by bisection in `ln r` between
/// sign changes on a fine sample.
pub fn tower_crossings_closed(mu1: f64, mu2: f64, r_min: f64, r_max: f64) -> Vec<f64> {
    let f = |s: f64| {
        let r = s.exp();
        bubble(mu2, r) - bubble(mu1, r) + bubble(1.0, r) - 1.0
    };
    let (a, b) = (r_min.ln(), r_max.ln());
    let n = 20_000;
    let mut out = Vec::new();
    let mut prev = (a, f(a));
    for k in 1..=n {
        let s = a + (b - a) * k as f64 / n as f64;
        let v = f(s);
        if prev.1 * v < 0.0 {
            let (mut lo, mut hi) = (prev.0, s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push((0.5 * (lo + hi)).exp());
        }
        prev = (s, v);
    }
    out
}

/// The right-hand side of the equation for `psi / r^2`,
/// `u_rr + 5 u_r / r + (6 - 2 r^2 u) u^2`, by second-order differences on the
/// nonuniform grid; zero at the two end nodes.
pub fn psi_bar_rhs(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let n = r.len();
    let mut out = vec![0.0; n];
    for k in 1..n - 1 {
        let (hm, hp) = (r[k] - r[k - 1], r[k + 1] - r[k]);
        let d1 = (hm * hm * u[k + 1] - hp * hp * u[k - 1] + (hp * hp - hm * hm) * u[k]) / (hm * hp * (hm + hp));
        let d2 = 2.0 * (hm * u[k + 1] - (hm + hp) * u[k] + hp * u[k - 1]) / (hm * hp * (hm + hp));
        out[k] = d2 + 5.0 * d1 / r[k] + (6.0 - 2.0 * r[k] * r[k] * u[k]) * u[k] * u[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::log_uniform(1e-6, 100.0, 4001).unwrap()
    }

    #[test]
    fn steady_values() {
        let g = grid();
        let s = steady_profile(1.0, &g).unwrap();
        assert!((bubble(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!(s.psi[0] < 1e-11 && (s.psi[g.len() - 1] - 2.0).abs() < 1e-3);
        assert!(steady_profile(0.0, &g).is_err());
        assert_eq!(s.inner_vacuum, 0.0);
        assert_eq!(s.reflected().inner_vacuum, 2.0);
    }

    #[test]
    fn one_bubble_limits() {
        let mu = 0.01;
        let g = grid();
        let s = one_bubble_ansatz(mu, &g).unwrap();
        for (r, p) in g.nodes().iter().zip(&s.psi) {
            if *r < 1e-2 * mu {
                assert!((p - 2.0 * r * r / (mu * mu)).abs() < 1e-3 * p.max(1e-300));
            }
            if *r > 10.0 * mu && *r < 0.1 {
                assert!((p - 2.0).abs() < 3.0 * (r * r + mu * mu / (r * r)));
            }
        }
        // Far out the two bubbles cancel up to 2 (1 - mu^2) / r^2.
        let r = g.r_max();
        assert!((s.outer_value() * r * r / (2.0 * (1.0 - mu * mu)) - 1.0).abs() < 1e-3);
        assert!(one_bubble_ansatz(1.0, &g).is_err());
    }

    #[test]
    fn tower_plateaus_and_crossings() {
        let (mu1, mu2) = (0.1, 1e-4);
        let g = grid();
        let s = tower_ansatz(mu1, mu2, &g).unwrap();
        let at = |target: f64| {
            let k = g.nodes().partition_point(|r| *r < target);
            s.psi[k]
        };
        assert!((at(3e-3) - 2.0).abs() < 0.05);
        assert!(at(0.7).abs() < 0.9 && at(0.7) < at(3e-3));
        assert!(at(0.9).abs() < 1.0);
        assert!(tower_ansatz(0.1, 0.2, &g).is_err());
        let c = tower_crossings_closed(mu1, mu2, 1e-6, 100.0);
        assert_eq!(c.len(), 3);
        assert!((c[0] / mu2 - 1.0).abs() < 0.01);
    }
}
