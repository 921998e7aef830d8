//! Bubble scales read off a profile: crossings of the level `psi = 1` and a
//! least-squares fit of the innermost bubble.

use super::profile::{bubble, ProfileState};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// Radii where `psi` crosses 1, ascending.
    pub crossings: Vec<f64>,
    /// `lambda` minimizing `sum (psi - 2r^2 / (r^2 + lambda^2))^2` near the origin.
    pub fit: Option<f64>,
}

impl Scales {
    pub fn first(&self) -> f64 {
        self.crossings[0]
    }
}

/// Crossing between nodes `k` and `k + 1`. Interpolates linearly in `(ln r, atanh(psi - 1))`,
/// which is exact for stationary profiles, when both values lie in `(0, 2)`.
fn interpolate(r0: f64, r1: f64, p0: f64, p1: f64) -> f64 {
    let (d0, d1) = (p0 - 1.0, p1 - 1.0);
    if d0.abs() < 1.0 && d1.abs() < 1.0 {
        let (a0, a1) = (d0.atanh(), d1.atanh());
        let (s0, s1) = (r0.ln(), r1.ln());
        (s0 + (s1 - s0) * a0 / (a0 - a1)).exp()
    } else {
        r0 + (r1 - r0) * d0 / (d0 - d1)
    }
}

/// All crossings of `psi = 1`. A node exactly at 1 counts once when the sign differs
/// on either side; touches without a sign change are ignored.
pub fn crossings(state: &ProfileState) -> Vec<f64> {
    let r = state.grid.nodes();
    let d: Vec<f64> = state.psi.iter().map(|p| p - 1.0).collect();
    let n = d.len();
    let mut out = Vec::new();
    let mut k = 0;
    while k + 1 < n {
        if d[k] != 0.0 && d[k] * d[k + 1] < 0.0 {
            out.push(interpolate(r[k], r[k + 1], state.psi[k], state.psi[k + 1]));
            k += 1;
        } else if d[k] != 0.0 && d[k + 1] == 0.0 {
            let start = k + 1;
            let mut end = start;
            while end < n && d[end] == 0.0 {
                end += 1;
            }
            if end < n && d[end] * d[k] < 0.0 {
                out.push(r[start]);
            }
            k = end;
        } else {
            k += 1;
        }
    }
    out
}

/// Gauss-Newton on `ln lambda` over the nodes below `limit`.
fn fit_bubble(state: &ProfileState, limit: f64, start: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = state
        .grid
        .nodes()
        .iter()
        .zip(&state.psi)
        .take_while(|(r, _)| **r < limit)
        .map(|(r, p)| (*r, *p))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let mut ell = start.ln();
    for _ in 0..60 {
        let lambda2 = (2.0 * ell).exp();
        let (mut jtj, mut jtr) = (0.0, 0.0);
        for &(r, p) in &pts {
            let q = r * r + lambda2;
            let model = 2.0 * r * r / q;
            let jac = -4.0 * r * r * lambda2 / (q * q);
            jtj += jac * jac;
            jtr += jac * (p - model);
        }
        if jtj == 0.0 {
            return None;
        }
        let delta = jtr / jtj;
        ell += delta.clamp(-1.0, 1.0);
        if delta.abs() < 1e-14 {
            break;
        }
    }
    let lambda = ell.exp();
    lambda.is_finite().then_some(lambda)
}

/// Crossings and the fitted inner scale over `(0, fit_window * first crossing)`.
pub fn extract_scales(state: &ProfileState, fit_window: f64) -> Result<Scales> {
    let crossings = crossings(state);
    let Some(&first) = crossings.first() else {
        return Err(Error::NoCrossing);
    };
    let fit = fit_bubble(state, fit_window * first, first);
    Ok(Scales { crossings, fit })
}

/// Residual of the fitted bubble on the fit window, for diagnostics.
pub fn fit_residual(state: &ProfileState, lambda: f64, limit: f64) -> f64 {
    state
        .grid
        .nodes()
        .iter()
        .zip(&state.psi)
        .take_while(|(r, _)| **r < limit)
        .map(|(r, p)| (p - bubble(lambda, *r)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::grid::RadialGrid;
    use super::super::profile::{one_bubble_ansatz, steady_profile, tower_ansatz, tower_crossings_closed};
    use super::*;

    #[test]
    fn steady_profile_scale_is_exact() {
        let g = RadialGrid::default();
        for lambda in [1e-3, 0.1, 2.0] {
            let s = extract_scales(&steady_profile(lambda, &g).unwrap(), 1.0).unwrap();
            assert_eq!(s.crossings.len(), 1);
            assert!((s.first() - lambda).abs() < 1e-10 * lambda.max(1.0), "{lambda}");
            assert!((s.fit.unwrap() - lambda).abs() < 1e-10 * lambda);
        }
    }

    #[test]
    fn one_bubble_first_crossing() {
        let g = RadialGrid::default();
        let s = extract_scales(&one_bubble_ansatz(0.01, &g).unwrap(), 0.5).unwrap();
        assert!((s.first() / 0.01 - 1.0).abs() < 0.01);
    }

    #[test]
    fn tower_has_three_crossings() {
        let g = RadialGrid::default();
        let s = extract_scales(&tower_ansatz(0.1, 1e-4, &g).unwrap(), 0.5).unwrap();
        let exact = tower_crossings_closed(0.1, 1e-4, g.r_min(), g.r_max());
        assert_eq!(s.crossings.len(), 3);
        for (a, b) in s.crossings.iter().zip(&exact) {
            assert!((a / b - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn exact_node_and_touch() {
        let g = RadialGrid::log_uniform(1e-2, 1e2, 65).unwrap();
        let mut psi = vec![0.0; 65];
        for (k, p) in psi.iter_mut().enumerate() {
            *p = if k < 20 { 0.5 } else if k == 20 { 1.0 } else { 1.5 };
        }
        psi[40] = 1.0;
        let s = ProfileState::new(g.clone(), psi, 0.0).unwrap();
        assert_eq!(crossings(&s), vec![g.nodes()[20]]);
        let flat = ProfileState::new(g, vec![0.2; 65], 0.0).unwrap();
        assert!(matches!(extract_scales(&flat, 0.5), Err(Error::NoCrossing)));
    }
}
