//! Time stepping: implicit schemes solved by damped Newton with tridiagonal Jacobians.

use super::model::{DiscreteModel, PotentialKind};
use super::profile::ProfileState;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scheme {
    /// Average-vector-field discrete gradient: the energy decreases exactly.
    #[default]
    DiscreteGradient,
    ImplicitMidpoint,
    BackwardEuler,
    /// One linear solve per step with the Hessian frozen at the old state.
    LinearlyImplicit,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DiscreteGradient => "implicit",
            Self::ImplicitMidpoint => "midpoint",
            Self::BackwardEuler => "backward-euler",
            Self::LinearlyImplicit => "imex",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit" | "discrete-gradient" => Ok(Self::DiscreteGradient),
            "midpoint" => Ok(Self::ImplicitMidpoint),
            "backward-euler" => Ok(Self::BackwardEuler),
            "imex" => Ok(Self::LinearlyImplicit),
            _ => Err(Error::InvalidArgument(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Settings for [`step`] and [`super::run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Initial (or fixed) time step.
    pub dt: f64,
    pub adaptive: bool,
    pub dt_min: f64,
    pub dt_max: f64,
    pub scheme: Scheme,
    pub potential: PotentialKind,
    pub t_end: f64,
    /// Spacing of output rows in time.
    pub output_every: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// The scale fit uses nodes below `fit_window` times the first crossing.
    pub fit_window: f64,
    /// Stop once the first scale falls below `stop_factor * r_min`.
    pub stop_factor: f64,
    /// Number of scale columns in the time series.
    pub max_scales: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            adaptive: true,
            dt_min: 1e-12,
            dt_max: 0.05,
            scheme: Scheme::default(),
            potential: PotentialKind::default(),
            t_end: 1.0,
            output_every: 0.01,
            newton_tol: 1e-10,
            max_newton: 25,
            fit_window: 0.5,
            stop_factor: 10.0,
            max_scales: 3,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("output_every", self.output_every),
            ("newton_tol", self.newton_tol),
            ("fit_window", self.fit_window),
            ("stop_factor", self.stop_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(Error::InvalidArgument("dt_min exceeds dt_max".into()));
        }
        if self.max_newton == 0 || self.max_scales == 0 {
            return Err(Error::InvalidArgument("max_newton and max_scales must be positive".into()));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidArgument("t_end must be finite".into()));
        }
        Ok(())
    }

    /// `dt / r_min^2`, the stiffness an explicit scheme would face.
    pub fn stiffness_ratio(&self, r_min: f64) -> f64 {
        self.dt / (r_min * r_min)
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::InvalidArgument("singular tridiagonal system".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for k in 1..n {
        denom = diag[k] - sub[k] * c[k - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::InvalidArgument("singular tridiagonal system".into()));
        }
        c[k] = if k + 1 < n { sup[k] / denom } else { 0.0 };
        d[k] = (rhs[k] - sub[k] * d[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}

/// Result of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: ProfileState,
    pub dt: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Stepping machinery bound to one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: DiscreteModel,
    config: FlowConfig,
}

/// Residual divided by the diagonal of the Newton matrix: roughly the size of the
/// next Newton correction in units of `psi`, which stays meaningful near the origin
/// where `dt / m_k` is enormous.
fn scaled_norm(res: &[f64], diag: &[f64]) -> f64 {
    res.iter().zip(diag).fold(0.0, |m, (r, d)| m.max((r / d).abs()))
}

impl Stepper {
    pub fn new(state: &ProfileState, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { model: DiscreteModel::new(&state.grid, config.potential)?, config })
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    /// `G(b)` and its tridiagonal Jacobian for the implicit schemes.
    fn scheme_gradient(&self, a: &[f64], b: &[f64], v: f64) -> (Vec<f64>, (Vec<f64>, Vec<f64>, Vec<f64>)) {
        let m = &self.model;
        match self.config.scheme {
            Scheme::DiscreteGradient => (m.averaged_gradient(a, b, v), m.averaged_hessian(a, b, v)),
            Scheme::ImplicitMidpoint => {
                let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                let (s, d, u) = m.hessian(&mid, v);
                let half = |w: Vec<f64>| w.into_iter().map(|x| 0.5 * x).collect::<Vec<_>>();
                (m.gradient(&mid, v), (half(s), half(d), half(u)))
            }
            Scheme::BackwardEuler | Scheme::LinearlyImplicit => (m.gradient(b, v), m.hessian(b, v)),
        }
    }

    fn residual(&self, a: &[f64], b: &[f64], g: &[f64], dt: f64) -> Vec<f64> {
        let mass = self.model.mass();
        (0..a.len() - 1).map(|k| b[k] - a[k] + dt * g[k] / mass[k]).collect()
    }

    fn newton_matrix(&self, jac: (Vec<f64>, Vec<f64>, Vec<f64>), dt: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mass = self.model.mass();
        let (mut sub, mut diag, mut sup) = jac;
        for k in 0..diag.len() {
            let w = dt / mass[k];
            sub[k] *= w;
            sup[k] *= w;
            diag[k] = 1.0 + w * diag[k];
        }
        (sub, diag, sup)
    }

    /// Advances `state` by exactly `dt`.
    pub fn advance(&self, state: &ProfileState, dt: f64) -> Result<StepOutcome> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let a = &state.psi;
        let v = state.inner_vacuum;
        let n_free = a.len() - 1;
        let mut b = a.clone();
        if self.config.scheme == Scheme::LinearlyImplicit {
            let (g, jac) = self.scheme_gradient(a, a, v);
            let rhs = self.residual(a, a, &g, dt);
            let (s, d, u) = self.newton_matrix(jac, dt);
            let delta = solve_tridiagonal(&s, &d, &u, &rhs)?;
            for k in 0..n_free {
                b[k] -= delta[k];
            }
            let next = ProfileState { psi: b, time: state.time + dt, ..state.clone() };
            return Ok(StepOutcome { state: next, dt, iterations: 1, residual: 0.0 });
        }
        let (_, jac) = self.scheme_gradient(a, &b, v);
        let mut matrix = self.newton_matrix(jac, dt);
        let mut res = self.residual(a, &b, &self.scheme_gradient(a, &b, v).0, dt);
        let mut norm = scaled_norm(&res, &matrix.1);
        let mut iterations = 0;
        while norm > self.config.newton_tol {
            if iterations >= self.config.max_newton {
                return Err(Error::NewtonFailed { iterations, residual: norm });
            }
            iterations += 1;
            let delta = solve_tridiagonal(&matrix.0, &matrix.1, &matrix.2, &res)?;
            let mut damping = 1.0;
            loop {
                let trial: Vec<f64> =
                    b.iter().enumerate().map(|(k, x)| if k < n_free { x - damping * delta[k] } else { *x }).collect();
                let (tg, tj) = self.scheme_gradient(a, &trial, v);
                let tres = self.residual(a, &trial, &tg, dt);
                let tmatrix = self.newton_matrix(tj, dt);
                let tnorm = scaled_norm(&tres, &tmatrix.1);
                if tnorm.is_finite() && (tnorm < norm || tnorm <= self.config.newton_tol) {
                    b = trial;
                    matrix = tmatrix;
                    res = tres;
                    norm = tnorm;
                    break;
                }
                damping *= 0.5;
                if damping < 1e-3 {
                    return Err(Error::NewtonFailed { iterations, residual: norm });
                }
            }
        }
        let next = ProfileState { psi: b, time: state.time + dt, ..state.clone() };
        Ok(StepOutcome { state: next, dt, iterations, residual: norm })
    }
}

/// One step of size `config.dt` with the configured scheme.
pub fn step(state: &ProfileState, config: &FlowConfig) -> Result<StepOutcome> {
    Stepper::new(state, *config)?.advance(state, config.dt)
}

#[cfg(test)]
mod tests {
    use super::super::grid::RadialGrid;
    use super::super::model::energy;
    use super::super::profile::{one_bubble_ansatz, steady_profile, tower_ansatz};
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::log_uniform(1e-5, 50.0, 513).unwrap()
    }

    #[test]
    fn thomas_solves() {
        let sub = [0.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 0.0];
        let x = solve_tridiagonal(&sub, &diag, &sup, &[5.0, 6.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn steady_state_is_preserved() {
        let g = grid();
        for scheme in [Scheme::DiscreteGradient, Scheme::ImplicitMidpoint, Scheme::BackwardEuler] {
            let s = steady_profile(0.1, &g).unwrap();
            let cfg = FlowConfig { dt: 1e-3, scheme, ..FlowConfig::default() };
            let out = step(&s, &cfg).unwrap();
            assert!(out.state.max_abs_diff(&s) < 1e-9, "{scheme:?}");
        }
    }

    #[test]
    fn energy_decreases() {
        let g = grid();
        // The tower's inner bubble evolves on the time scale mu2^2.
        for (s, dt) in [(one_bubble_ansatz(0.1, &g).unwrap(), 1e-3), (tower_ansatz(0.1, 1e-3, &g).unwrap(), 1e-7)] {
            let cfg = FlowConfig { dt, ..FlowConfig::default() };
            let mut cur = s;
            for _ in 0..5 {
                let next = step(&cur, &cfg).unwrap().state;
                assert!(energy(&next).unwrap() <= energy(&cur).unwrap() + 1e-12);
                cur = next;
            }
        }
    }

    #[test]
    fn midpoint_is_second_order() {
        let g = RadialGrid::log_uniform(1e-3, 10.0, 129).unwrap();
        let s = one_bubble_ansatz(0.2, &g).unwrap();
        let err = |dt: f64| {
            let full = FlowConfig { dt, scheme: Scheme::ImplicitMidpoint, newton_tol: 1e-13, ..FlowConfig::default() };
            let half = FlowConfig { dt: dt / 2.0, ..full };
            let one = step(&s, &full).unwrap().state;
            let two = step(&step(&s, &half).unwrap().state, &half).unwrap().state;
            one.max_abs_diff(&two)
        };
        let (e1, e2) = (err(2e-3), err(1e-3));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn reflection_commutes_with_stepping() {
        let g = grid();
        let s = tower_ansatz(0.1, 1e-3, &g).unwrap();
        let cfg = FlowConfig { dt: 1e-3, ..FlowConfig::default() };
        let a = step(&s, &cfg).unwrap().state.reflected();
        let b = step(&s.reflected(), &cfg).unwrap().state;
        assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::DiscreteGradient, Scheme::ImplicitMidpoint, Scheme::BackwardEuler, Scheme::LinearlyImplicit] {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("rk4".parse::<Scheme>().is_err());
        assert!(FlowConfig { dt: 0.0, ..FlowConfig::default() }.validate().is_err());
    }
}
