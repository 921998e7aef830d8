//! The projection of the first-order error onto the dilation mode, computed directly
//! by four-dimensional quadrature and through two one-dimensional reductions.

use super::appendix::{tilde_l_b1q, tilde_l_phi0};
use super::duhamel::{psi_correction_pair, scale_forcing, RadialValue};
use crate::ball::{BallGrid, BallSpec};
use crate::error::{Error, Result};
use crate::gauge::kernel_mode;
use crate::quadrature::Quadrature;
use crate::rates::{projection_rate_integral, RateIntegral};
use crate::trajectory::ScaleTrajectory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// All routes to the dilation-mode projection at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCheck {
    pub t: f64,
    pub mu: f64,
    pub radius: f64,
    /// Four-dimensional quadrature over the ball of the closed forms.
    pub direct: f64,
    /// The same on a grid with twice the nodes in every direction.
    pub direct_refined: f64,
    pub grid_sensitivity: f64,
    /// Estimated contribution from outside the ball.
    pub tail_estimate: f64,
    /// Exact radial reduction of the same integrand, integrated to infinity.
    pub reduced: f64,
    /// The closed rate formula with its truncation.
    pub closed: RateIntegral,
}

impl ProjectionCheck {
    /// `|direct - closed| / |closed|`.
    pub fn closed_mismatch(&self) -> f64 {
        (self.direct - self.closed.value).abs() / self.closed.value.abs()
    }

    /// `|direct - reduced| / |reduced|`.
    pub fn reduced_mismatch(&self) -> f64 {
        (self.direct - self.reduced).abs() / self.reduced.abs()
    }
}

fn profile_at(path: &ScaleTrajectory, t0: f64, t: f64, z: f64) -> Result<RadialValue> {
    if matches!(path, ScaleTrajectory::Constant { .. }) {
        return Ok(RadialValue::default());
    }
    let p = scale_forcing(path);
    psi_correction_pair(&p, t0, t, z)
}

/// `int_{|y| < R} sum_i <L[Phi0] - L[B_1], Z^0_i>(y) dy` with `x = xi + mu(t) y`.
pub fn projection_direct(path: &ScaleTrajectory, t0: f64, t: f64, spec: &BallSpec) -> Result<(f64, f64)> {
    let grid = BallGrid::new(*spec);
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mu = path.mu(t)?;
    let xi = [0.0; 4];
    let profiles: Vec<RadialValue> = grid
        .radii()
        .par_iter()
        .map(|&rho| profile_at(path, t0, t, mu * (1.0 + rho * rho).sqrt()))
        .collect::<Result<_>>()?;
    let (dirs, weights) = grid.sphere_rule();
    let shell = |ir: usize, rho: f64| -> f64 {
        dirs.iter()
            .zip(weights)
            .map(|(d, w)| {
                let y = d.map(|v| v * rho);
                let x = y.map(|v| mu * v);
                let l = tilde_l_phi0(&x, mu, &xi, profiles[ir]) - tilde_l_b1q(&x, mu, &xi);
                w * l.dot(&kernel_mode(0, &y).unwrap_or_default())
            })
            .sum()
    };
    let total = grid.integrate_shells(shell);
    let last = grid.radii().len() - 1;
    let r_last = grid.radii()[last];
    let tail = shell(last, r_last) * r_last.powi(4) / 2.0;
    Ok((total, tail))
}

/// The radial reduction of [`projection_direct`] over all of space:
/// `(288 pi^2 / mu) int_0^inf rho^5 (f0(mu sqrt(1 + rho^2)) - 1 / (1 + mu^2 rho^2)) / (1 + rho^2)^4 drho`.
pub fn projection_reduced(path: &ScaleTrajectory, t0: f64, t: f64) -> Result<f64> {
    let mu = path.mu(t)?;
    let quad = Quadrature { abs_tol: 1e-12, rel_tol: 1e-10, max_panels: 2000 };
    let mut err = None;
    let v = quad.integrate_to_infinity(
        |rho| {
            let w = rho.powi(5) / (1.0 + rho * rho).powi(4);
            let f = profile_at(path, t0, t, mu * (1.0 + rho * rho).sqrt()).unwrap_or_else(|e| {
                err.get_or_insert(e);
                RadialValue::default()
            });
            w * (f.value - 1.0 / (1.0 + mu * mu * rho * rho))
        },
        0.0,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(288.0 * PI * PI / mu * v.value)
}

/// Runs every route and reports their values and sensitivities.
pub fn projection_identity_check(
    path: &ScaleTrajectory,
    t0: f64,
    t: f64,
    spec: &BallSpec,
    eps_cut: f64,
) -> Result<ProjectionCheck> {
    if !(t > t0) {
        return Err(Error::InvalidArgument(format!("need t > t0, got t0={t0}, t={t}")));
    }
    let (direct, tail_estimate) = projection_direct(path, t0, t, spec)?;
    let (direct_refined, _) = projection_direct(path, t0, t, &spec.refined())?;
    Ok(ProjectionCheck {
        t,
        mu: path.mu(t)?,
        radius: spec.radius,
        direct,
        direct_refined,
        grid_sensitivity: direct_refined - direct,
        tail_estimate,
        reduced: projection_reduced(path, t0, t)?,
        closed: projection_rate_integral(path, t0, t, eps_cut)?,
    })
}

/// `-(288 pi^2 / mu) int_0^inf rho^5 / ((1 + mu^2 rho^2)(1 + rho^2)^4) drho`, the value
/// for a frozen scale, which tends to `-48 pi^2 / mu` as `mu -> 0`.
pub fn frozen_scale_projection(mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let quad = Quadrature { abs_tol: 1e-14, rel_tol: 1e-12, max_panels: 2000 };
    let v = quad.integrate_to_infinity(|rho| rho.powi(5) / ((1.0 + mu * mu * rho * rho) * (1.0 + rho * rho).powi(4)), 0.0)?;
    Ok(-288.0 * PI * PI / mu * v.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_scale_values() {
        assert!((frozen_scale_projection(1.0).unwrap() + 12.0 * PI * PI).abs() < 1e-9);
        let mu = 1e-4;
        let v = frozen_scale_projection(mu).unwrap() * mu;
        assert!((v + 48.0 * PI * PI).abs() < 1e-3 * 48.0 * PI * PI);
        assert!(frozen_scale_projection(0.0).is_err());
    }

    #[test]
    fn direct_matches_radial_reduction_for_frozen_scale() {
        let path = ScaleTrajectory::constant(0.2).unwrap();
        let spec = BallSpec::with_radius(400.0);
        let (direct, tail) = projection_direct(&path, 0.0, 1.0, &spec).unwrap();
        let reduced = projection_reduced(&path, 0.0, 1.0).unwrap();
        assert!((direct - reduced).abs() < 1e-4 * reduced.abs(), "{direct} {reduced} {tail}");
        assert!(tail < 0.0 && tail.abs() < 1e-3 * reduced.abs());
    }

    #[test]
    fn direct_is_homogeneous_in_scale() {
        let spec = BallSpec::with_radius(200.0);
        let a = projection_direct(&ScaleTrajectory::constant(0.3).unwrap(), 0.0, 1.0, &spec).unwrap().0;
        let b = projection_reduced(&ScaleTrajectory::constant(0.3).unwrap(), 0.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-4 * b.abs());
    }

    #[test]
    fn moving_scale_routes_agree() {
        let path = ScaleTrajectory::exponential(0.5);
        let spec = BallSpec::with_radius(100.0);
        let (direct, _) = projection_direct(&path, 0.0, 1.0, &spec).unwrap();
        let reduced = projection_reduced(&path, 0.0, 1.0).unwrap();
        assert!((direct - reduced).abs() < 1e-3 * reduced.abs(), "{direct} {reduced}");
    }
}
