//! The discrete energy of the equivariant flow and its gradient.
//!
//! With `s = ln r` and `phi = psi - 1` the equation reads
//! `r^2 phi_t = phi_ss + 2 phi (1 - phi^2)`, the `L^2(r dr)` gradient flow of
//! `E = 1/2 int (phi_s^2 + (1 - phi^2)^2) ds`. The discrete energy sums link terms
//! `(phi_{k+1} - phi_k)^2 / (2 ds_k)`, node potentials `sigma_k Q(phi_k)` and a core
//! term standing in for the region inside the first node. The core term is the energy
//! whose gradient is the flux to a ghost node continuing a sampled `tanh` kink, so
//! `psi - v` vanishes like `r^2` and, with the kink-exact potential, every bubble is an
//! exact discrete equilibrium.
//! The outermost node is held fixed.

use super::grid::RadialGrid;
use super::profile::ProfileState;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Choice of node potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PotentialKind {
    /// Kink-exact on log-uniform grids, polynomial otherwise.
    #[default]
    Auto,
    /// `Q(phi) = (phi^2 - 1)^2 / 2`.
    Polynomial,
    /// A discrete potential for which sampled `tanh` kinks are exact equilibria;
    /// needs a constant step in `ln r`.
    KinkExact,
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Polynomial => "polynomial",
            Self::KinkExact => "kink-exact",
        }
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "polynomial" => Ok(Self::Polynomial),
            "kink-exact" => Ok(Self::KinkExact),
            _ => Err(Error::InvalidArgument(format!("unknown potential '{s}'"))),
        }
    }
}

/// `-ln(1 - x) - x` without cancellation for small `x`.
fn log_tail(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut sum = 0.0;
        let mut p = x * x;
        for n in 2..40 {
            sum += p / n as f64;
            p *= x;
        }
        sum
    } else {
        -(-x).ln_1p() - x
    }
}

/// `-ln(1 - x) - x - x^2 / 2`.
fn log_tail3(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let mut sum = 0.0;
        let mut p = x * x * x;
        for n in 3..40 {
            sum += p / n as f64;
            p *= x;
        }
        sum
    } else {
        log_tail(x) - 0.5 * x * x
    }
}

/// Energy of the region inside the first node as a function of `u = |psi_0 - v|`.
/// Its derivative `(tau / h) u (2 - u) / (1 - tau u)`, with `tau = t / (1 + t)` and
/// `t = tanh h`, is the flux to the ghost value `(phi_0 -+ t) / (1 -+ t phi_0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Core {
    tau: f64,
    h: f64,
}

impl Core {
    fn new(h: f64) -> Self {
        let t = h.tanh();
        Self { tau: t / (1.0 + t), h }
    }

    fn energy(&self, u: f64) -> f64 {
        let tau = self.tau;
        let d = tau * u;
        if d >= 1.0 {
            return f64::INFINITY;
        }
        // Exact antiderivative, arranged as 2 tau L(d) - (L(d) - d^2 / 2) over tau^3.
        (2.0 * tau * log_tail(d) - log_tail3(d)) / (tau * tau * self.h)
    }

    fn slope(&self, u: f64) -> f64 {
        self.tau / self.h * u * (2.0 - u) / (1.0 - self.tau * u)
    }

    fn curvature(&self, u: f64) -> f64 {
        let q = 1.0 - self.tau * u;
        self.tau / self.h * ((2.0 - 2.0 * u) * q + self.tau * u * (2.0 - u)) / (q * q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Potential {
    Polynomial,
    /// Parameters `t = tanh h` and the step `h`.
    Kink { t2: f64, h2: f64 },
}

impl Potential {
    fn kink(h: f64) -> Self {
        let t = h.tanh();
        Self::Kink { t2: t * t, h2: h * h }
    }

    /// Density per unit `s`, as a function of `psi`.
    fn q(&self, psi: f64) -> f64 {
        let phi = psi - 1.0;
        match *self {
            Self::Polynomial => 0.5 * (psi * (psi - 2.0)).powi(2),
            Self::Kink { t2, h2 } => {
                // With x = t^2 phi^2 and delta = t^2 (1 - phi^2), rearranged so that
                // nothing cancels near the vacua.
                let x = t2 * phi * phi;
                if x >= 1.0 {
                    return f64::INFINITY;
                }
                let delta = -t2 * psi * (psi - 2.0);
                (delta * delta / (t2 * (1.0 - x)) - (1.0 - t2) / t2 * log_tail(delta / (1.0 - x))) / h2
            }
        }
    }

    // `phi^2 - 1` is formed as `psi (psi - 2)` so that values near either vacuum keep
    // their relative precision.
    fn dq(&self, psi: f64) -> f64 {
        let phi = psi - 1.0;
        let cubic = 2.0 * phi * psi * (psi - 2.0);
        match *self {
            Self::Polynomial => cubic,
            Self::Kink { t2, h2, .. } => t2 * cubic / ((1.0 - t2 * phi * phi) * h2),
        }
    }

    fn d2q(&self, psi: f64) -> f64 {
        let phi = psi - 1.0;
        match *self {
            Self::Polynomial => 6.0 * phi * phi - 2.0,
            Self::Kink { t2, h2, .. } => {
                let d = 1.0 - t2 * phi * phi;
                2.0 * t2 * ((3.0 * phi * phi - 1.0) * d + 2.0 * t2 * phi * phi * psi * (psi - 2.0)) / (d * d * h2)
            }
        }
    }
}

/// Gauss-Legendre nodes on `[0, 1]` for averaged derivatives.
fn unit_rule() -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(4);
    (x.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

/// Geometry and potential of the discrete energy on one grid.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    steps: Vec<f64>,
    sigma: Vec<f64>,
    mass: Vec<f64>,
    core: Core,
    potential: Potential,
    rule: (Vec<f64>, Vec<f64>),
}

impl DiscreteModel {
    pub fn new(grid: &RadialGrid, kind: PotentialKind) -> Result<Self> {
        let n = grid.len();
        let steps = match grid.uniform_step() {
            Some(h) => vec![h; n - 1],
            None => grid.log_steps(),
        };
        let potential = match (kind, grid.uniform_step()) {
            (PotentialKind::Polynomial, _) | (PotentialKind::Auto, None) => Potential::Polynomial,
            (PotentialKind::KinkExact | PotentialKind::Auto, Some(h)) => Potential::kink(h),
            (PotentialKind::KinkExact, None) => {
                return Err(Error::InvalidArgument("the kink-exact potential needs a log-uniform grid".into()))
            }
        };
        let mut sigma = vec![0.0; n];
        sigma[0] = steps[0];
        for k in 1..n - 1 {
            sigma[k] = 0.5 * (steps[k - 1] + steps[k]);
        }
        sigma[n - 1] = 0.5 * steps[n - 2];
        let mass = grid.nodes().iter().zip(&sigma).map(|(r, s)| r * r * s).collect();
        let core = Core::new(steps[0]);
        Ok(Self { steps, sigma, mass, core, potential, rule: unit_rule() })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// `r_k^2 sigma_k`, the `L^2(r dr)` weights.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn energy(&self, psi: &[f64], vacuum: f64) -> f64 {
        let n = psi.len();
        let links: f64 = (0..n - 1).map(|k| 0.5 * (psi[k + 1] - psi[k]).powi(2) / self.steps[k]).sum();
        let nodes: f64 = (0..n).map(|k| self.sigma[k] * self.potential.q(psi[k])).sum();
        links + nodes + self.core.energy(depth(psi[0], vacuum))
    }

    /// `dE / dpsi_k` for the free nodes; the last entry is zero.
    pub fn gradient(&self, psi: &[f64], vacuum: f64) -> Vec<f64> {
        let mut g = self.link_gradient(psi);
        for k in 0..psi.len() - 1 {
            g[k] += self.sigma[k] * self.potential.dq(psi[k]);
        }
        g[0] += orientation(vacuum) * self.core.slope(depth(psi[0], vacuum));
        g
    }

    fn link_gradient(&self, psi: &[f64]) -> Vec<f64> {
        let n = psi.len();
        let mut g = vec![0.0; n];
        for k in 0..n - 1 {
            let flux = (psi[k + 1] - psi[k]) / self.steps[k];
            g[k] -= flux;
            if k + 1 < n - 1 {
                g[k + 1] += flux;
            }
        }
        g
    }

    /// The discrete gradient between `a` and `b`: exact for the links and the divided
    /// difference of every nonlinear term, so that `E(b) - E(a) = <gradient, b - a>`.
    pub fn averaged_gradient(&self, a: &[f64], b: &[f64], vacuum: f64) -> Vec<f64> {
        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let mut g = self.link_gradient(&mid);
        for k in 0..a.len() - 1 {
            g[k] += self.sigma[k] * divided_difference(&self.rule, |x| self.potential.q(x), |x| self.potential.dq(x), a[k], b[k]);
        }
        let (ua, ub) = (depth(a[0], vacuum), depth(b[0], vacuum));
        // d/dpsi = orientation * d/du and (b - a) = orientation * (ub - ua).
        g[0] += orientation(vacuum)
            * divided_difference(&self.rule, |u| self.core.energy(u), |u| self.core.slope(u), ua, ub);
        g
    }

    /// Tridiagonal `(sub, diag, sup)` of the Hessian of the links on the free nodes.
    fn link_hessian(&self, n_free: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut sub = vec![0.0; n_free];
        let mut diag = vec![0.0; n_free];
        let mut sup = vec![0.0; n_free];
        for k in 0..n_free {
            diag[k] += 1.0 / self.steps[k];
            if k > 0 {
                diag[k] += 1.0 / self.steps[k - 1];
                sub[k] = -1.0 / self.steps[k - 1];
            }
            if k + 1 < n_free {
                sup[k] = -1.0 / self.steps[k];
            }
        }
        (sub, diag, sup)
    }

    /// Hessian of `E` at `psi` on the free nodes.
    pub fn hessian(&self, psi: &[f64], vacuum: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n_free = psi.len() - 1;
        let (sub, mut diag, sup) = self.link_hessian(n_free);
        for k in 0..n_free {
            diag[k] += self.sigma[k] * self.potential.d2q(psi[k]);
        }
        diag[0] += self.core.curvature(depth(psi[0], vacuum));
        (sub, diag, sup)
    }

    /// Jacobian of [`Self::averaged_gradient`] with respect to `b`.
    pub fn averaged_hessian(&self, a: &[f64], b: &[f64], vacuum: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n_free = a.len() - 1;
        let (mut sub, mut diag, mut sup) = self.link_hessian(n_free);
        for k in 0..n_free {
            sub[k] *= 0.5;
            sup[k] *= 0.5;
            diag[k] = 0.5 * diag[k] + self.sigma[k] * slope_of_difference(&self.rule, |x| self.potential.d2q(x), a[k], b[k]);
        }
        let (ua, ub) = (depth(a[0], vacuum), depth(b[0], vacuum));
        diag[0] += slope_of_difference(&self.rule, |u| self.core.curvature(u), ua, ub);
        (sub, diag, sup)
    }

    /// `psi_t = -(1 / m_k) dE / dpsi_k`; zero at the held outer node.
    pub fn rhs(&self, psi: &[f64], vacuum: f64) -> Vec<f64> {
        self.gradient(psi, vacuum).iter().zip(&self.mass).map(|(g, m)| -g / m).collect()
    }
}

/// Distance of `psi` from the inner vacuum, growing into the interval between the vacua.
fn depth(psi: f64, vacuum: f64) -> f64 {
    orientation(vacuum) * (psi - vacuum)
}

fn orientation(vacuum: f64) -> f64 {
    if vacuum < 1.0 {
        1.0
    } else {
        -1.0
    }
}

/// `(f(b) - f(a)) / (b - a)`, by quadrature of `df` when the points are close.
fn divided_difference(rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let d = b - a;
    if d.abs() > 1e-3 {
        (f(b) - f(a)) / d
    } else {
        let (x, w) = rule;
        x.iter().zip(w).map(|(t, wt)| wt * df(a + t * d)).sum()
    }
}

/// `d/db` of the divided difference, given the second derivative `d2f`.
fn slope_of_difference(rule: &(Vec<f64>, Vec<f64>), d2f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = rule;
    x.iter().zip(w).map(|(t, wt)| wt * t * d2f(a + t * (b - a))).sum()
}

/// Discrete energy with the default potential.
pub fn energy(state: &ProfileState) -> Result<f64> {
    energy_with(state, PotentialKind::Auto)
}

pub fn energy_with(state: &ProfileState, kind: PotentialKind) -> Result<f64> {
    Ok(DiscreteModel::new(&state.grid, kind)?.energy(&state.psi, state.inner_vacuum))
}

/// `psi_rr + psi_r / r - 2 (psi - 1)(psi - 2) psi / r^2` as discretized by the model.
pub fn rhs(state: &ProfileState) -> Result<Vec<f64>> {
    rhs_with(state, PotentialKind::Auto)
}

pub fn rhs_with(state: &ProfileState, kind: PotentialKind) -> Result<Vec<f64>> {
    Ok(DiscreteModel::new(&state.grid, kind)?.rhs(&state.psi, state.inner_vacuum))
}

/// `sum_k m_k f_k g_k`, the discrete `L^2(r dr)` pairing.
pub fn weighted_inner(model: &DiscreteModel, f: &[f64], g: &[f64]) -> f64 {
    model.mass().iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::super::profile::{one_bubble_ansatz, steady_profile};
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> RadialGrid {
        RadialGrid::log_uniform(1e-4, 20.0, n).unwrap()
    }

    #[test]
    fn vacua_are_fixed_points() {
        let g = grid(257);
        for c in [0.0, 2.0] {
            let s = ProfileState::new(g.clone(), vec![c; g.len()], 0.0).unwrap();
            for kind in [PotentialKind::Polynomial, PotentialKind::KinkExact] {
                assert!(rhs_with(&s, kind).unwrap().iter().all(|v| v.abs() < 1e-12));
            }
        }
        let zero = ProfileState::new(g.clone(), vec![0.0; g.len()], 0.0).unwrap();
        assert!(energy(&zero).unwrap().abs() < 1e-13);
    }

    #[test]
    fn kink_exact_steady_profiles() {
        let g = grid(513);
        for lambda in [0.01, 0.3, 2.0] {
            let s = steady_profile(lambda, &g).unwrap();
            let r = rhs(&s).unwrap();
            let scaled: Vec<f64> = r.iter().zip(g.nodes()).map(|(v, x)| (v * x * x).abs()).collect();
            let worst = scaled.iter().fold(0.0, |m: f64, v| m.max(*v));
            assert!(worst < 1e-11, "{lambda}: {worst}");
        }
    }

    #[test]
    fn core_derivatives() {
        let core = Core::new(0.03);
        for u in [1e-6, 0.01, 0.4, 1.0, 1.7, 2.0] {
            let h = 1e-5;
            let fd = (core.energy(u + h) - core.energy(u - h)) / (2.0 * h);
            assert!((fd - core.slope(u)).abs() < 1e-6 * core.slope(u).abs().max(1.0), "{u}");
            let fd2 = (core.slope(u + h) - core.slope(u - h)) / (2.0 * h);
            assert!((fd2 - core.curvature(u)).abs() < 1e-6 * core.curvature(u).abs().max(1.0), "{u}");
        }
        let small = 1e-4;
        assert!((core.energy(small) / (core.tau / core.h * small * small) - 1.0).abs() < 1e-3);
        assert_eq!(core.energy(0.0), 0.0);
    }

    #[test]
    fn polynomial_steady_residual_is_second_order() {
        let measure = |g: &RadialGrid| {
            let s = steady_profile(0.3, g).unwrap();
            let r = rhs_with(&s, PotentialKind::Polynomial).unwrap();
            let n = g.len();
            (n / 8..n - n / 8).map(|k| (r[k] * g.nodes()[k].powi(2)).abs()).fold(0.0, f64::max)
        };
        let g = grid(257);
        let e1 = measure(&g);
        let e2 = measure(&g.refined().unwrap());
        assert!((e1 / e2).log2() >= 1.9, "{e1} {e2}");
    }

    #[test]
    fn energy_is_scale_invariant() {
        let g = RadialGrid::log_uniform(1e-6, 1e3, 2049).unwrap();
        let e: Vec<f64> = [1e-3, 1e-2, 0.1, 1.0].iter().map(|&l| energy(&steady_profile(l, &g).unwrap()).unwrap()).collect();
        for v in &e {
            assert!((v - 4.0 / 3.0).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn kink_potential_matches_polynomial_at_small_step() {
        let p = Potential::kink(1e-3);
        for phi in [-1.5, -0.3, 0.0, 0.7, 1.0, 1.2] {
            let q = 0.5 * (phi * phi - 1.0f64).powi(2);
            let psi = phi + 1.0;
            assert!((p.q(psi) - q).abs() < 1e-5);
            let fd = (p.q(psi + 1e-6) - p.q(psi - 1e-6)) / 2e-6;
            assert!((fd - p.dq(psi)).abs() < 1e-6);
            let fd2 = (p.dq(psi + 1e-6) - p.dq(psi - 1e-6)) / 2e-6;
            assert!((fd2 - p.d2q(psi)).abs() < 1e-5);
        }
        assert!(p.q(2.0).abs() < 1e-15 && p.q(0.0).abs() < 1e-15);
    }

    #[test]
    fn averaged_gradient_is_exact_difference() {
        let g = grid(129);
        let m = DiscreteModel::new(&g, PotentialKind::KinkExact).unwrap();
        let a = one_bubble_ansatz(0.1, &g).unwrap().psi;
        let mut b = a.clone();
        for (k, v) in b.iter_mut().enumerate().take(g.len() - 1) {
            *v += 0.05 * ((k as f64) * 0.1).sin();
        }
        let gbar = m.averaged_gradient(&a, &b, 0.0);
        let pred: f64 = gbar.iter().zip(a.iter().zip(&b)).map(|(gk, (x, y))| gk * (y - x)).sum();
        let actual = m.energy(&b, 0.0) - m.energy(&a, 0.0);
        assert!((pred - actual).abs() < 1e-12 * actual.abs().max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn variational_derivative(center in 40usize..200, width in 3usize..20, amp in -1.0f64..1.0) {
            let g = grid(257);
            let s = one_bubble_ansatz(0.05, &g).unwrap();
            let model = DiscreteModel::new(&g, PotentialKind::Polynomial).unwrap();
            let v: Vec<f64> = (0..g.len())
                .map(|k| {
                    let d = (k as f64 - center as f64) / width as f64;
                    if d.abs() < 1.0 { amp * (1.0 - d * d).powi(2) } else { 0.0 }
                })
                .collect();
            let central = |eps: f64| {
                let plus: Vec<f64> = s.psi.iter().zip(&v).map(|(p, w)| p + eps * w).collect();
                let minus: Vec<f64> = s.psi.iter().zip(&v).map(|(p, w)| p - eps * w).collect();
                (model.energy(&plus, 0.0) - model.energy(&minus, 0.0)) / (2.0 * eps)
            };
            // Richardson step removes the eps^2 term.
            let fd = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
            let pairing = -weighted_inner(&model, &model.rhs(&s.psi, 0.0), &v);
            prop_assert!((fd - pairing).abs() <= 1e-7 * fd.abs().max(1e-3), "{} {}", fd, pairing);
        }
    }
}
