//! Quantities of the two-bubble tower: the orthogonality constant, the inner scale
//! laws, the radial correction `phi0` and the scale correction `mu12`.

use super::duhamel::RadialCorrection;
use super::scalar_ode::{solve_decaying_scalar_ode, DecayingSolution, Forcing, TowerRate};
use crate::error::{Error, Result};
use crate::numfmt::row;
use crate::quadrature::{gauss_legendre_on, Quadrature};
use crate::trajectory::ScaleTrajectory;
use serde::{Deserialize, Serialize};

/// Value of the outer profile at the origin.
pub const PROFILE_AT_ORIGIN: f64 = 2.0;

/// `W(y) = 2 / (y^2 (y^2 + 1))`.
pub fn weight_w(y: f64) -> f64 {
    2.0 / (y * y * (y * y + 1.0))
}

/// The radial kernel `Z(y) = (1 + y^2)^{-2}`.
pub fn kernel_z(y: f64) -> f64 {
    (1.0 + y * y).powi(-2)
}

fn kernel_z_derivs(y: f64) -> (f64, f64, f64) {
    let q = 1.0 + y * y;
    (q.powi(-2), -4.0 * y / q.powi(3), (20.0 * y * y - 4.0) / q.powi(4))
}

/// `12 W - 6 y^2 W^2`, evaluated literally.
pub fn tower_potential(y: f64) -> f64 {
    let w = weight_w(y);
    12.0 * w - 6.0 * y * y * w * w
}

/// `L0[phi] = phi'' + 5 phi' / y + 24 (1 + y^2)^{-2} phi`.
pub fn l0_operator(phi: f64, dphi: f64, d2phi: f64, y: f64) -> f64 {
    d2phi + 5.0 * dphi / y + 24.0 * kernel_z(y) * phi
}

/// `L0[Z]` from the closed derivatives of `Z`.
pub fn l0_of_kernel(y: f64) -> f64 {
    let (z, dz, d2z) = kernel_z_derivs(y);
    l0_operator(z, dz, d2z, y)
}

/// The second homogeneous solution of `L0`, singular like `-y^{-4} / 4` at the origin,
/// normalized so that its Wronskian with `Z` is `y^{-5}`.
pub fn second_solution(y: f64) -> f64 {
    let y2 = y * y;
    kernel_z(y) * (-0.25 / (y2 * y2) - 2.0 / y2 + 6.0 * y.ln() + 2.0 * y2 + 0.25 * y2 * y2)
}

/// Closed derivative of [`second_solution`].
pub fn second_solution_derivative(y: f64) -> f64 {
    let y2 = y * y;
    let (z, dz, _) = kernel_z_derivs(y);
    let bracket = -0.25 / (y2 * y2) - 2.0 / y2 + 6.0 * y.ln() + 2.0 * y2 + 0.25 * y2 * y2;
    dz * bracket + z * (1.0 + y2).powi(4) / (y2 * y2 * y)
}

/// `c_* = int (12W - 6y^2W^2) U(0) Z y^5 / int Z^2 y^5`.
pub fn cstar() -> Result<f64> {
    let quad = Quadrature { abs_tol: 1e-14, rel_tol: 1e-14, max_panels: 2000 };
    let num = quad.integrate_to_infinity(|y| tower_potential(y) * PROFILE_AT_ORIGIN * kernel_z(y) * y.powi(5), 0.0)?;
    let den = quad.integrate_to_infinity(|y| kernel_z(y).powi(2) * y.powi(5), 0.0)?;
    Ok(num.value / den.value)
}

/// `ln mu02(t) = -c_star e^{2 c1 t} / (2 c1)`.
pub fn log_mu02_closed(t: f64, c1: f64, c_star: f64) -> f64 {
    -c_star * (2.0 * c1 * t).exp() / (2.0 * c1)
}

pub fn mu02_closed(t: f64, c1: f64, c_star: f64) -> f64 {
    log_mu02_closed(t, c1, c_star).exp()
}

/// Classical fourth-order Runge-Kutta for `u' = f(t, u)` over `steps` equal steps.
pub fn rk4(f: impl Fn(f64, f64) -> f64, t0: f64, u0: f64, t1: f64, steps: usize) -> f64 {
    let h = (t1 - t0) / steps.max(1) as f64;
    (0..steps.max(1)).fold(u0, |u, k| {
        let t = t0 + k as f64 * h;
        let k1 = f(t, u);
        let k2 = f(t + 0.5 * h, u + 0.5 * h * k1);
        let k3 = f(t + 0.5 * h, u + 0.5 * h * k2);
        let k4 = f(t + h, u + h * k3);
        u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    })
}

/// `ln mu02(t1)` by integrating `mu mu' + c_star (mu / mu01)^2 = 0` in `ln mu`, started
/// from the closed value at `t0`.
pub fn log_mu02_integrated(t0: f64, t1: f64, steps: usize, c1: f64, c_star: f64) -> f64 {
    let mu01_sqr = |t: f64| (-2.0 * c1 * t).exp();
    rk4(|t, _| -c_star / mu01_sqr(t), t0, log_mu02_closed(t0, c1, c_star), t1, steps)
}

/// Parameters of the tower: `mu01 = e^{-c1 t}` and `mu02` from the closed law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TowerParams {
    pub c1: f64,
    pub c_star: f64,
    pub t0: f64,
}

impl TowerParams {
    pub fn new(c1: f64, c_star: f64, t0: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(c_star > 0.0) {
            return Err(Error::InvalidArgument(format!("tower rates must be positive, got c1={c1}, c_star={c_star}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidArgument("t0 must be finite".into()));
        }
        let p = Self { c1, c_star, t0 };
        if !(p.log_lambda02(t0) < 0.0) {
            return Err(Error::InvalidArgument("the inner scale must start below the outer one".into()));
        }
        Ok(p)
    }

    /// Uses the orthogonality constant from [`cstar`].
    pub fn consistent(c1: f64, t0: f64) -> Result<Self> {
        Self::new(c1, cstar()?, t0)
    }

    pub fn mu01(&self) -> ScaleTrajectory {
        ScaleTrajectory::exponential(self.c1)
    }

    pub fn mu02(&self) -> ScaleTrajectory {
        ScaleTrajectory::DoubleExponential { c1: self.c1, c_star: self.c_star }
    }

    pub fn log_mu01(&self, t: f64) -> f64 {
        -self.c1 * t
    }

    pub fn log_mu02(&self, t: f64) -> f64 {
        log_mu02_closed(t, self.c1, self.c_star)
    }

    /// `ln(mu02 / mu01)`.
    pub fn log_lambda02(&self, t: f64) -> f64 {
        self.log_mu02(t) - self.log_mu01(t)
    }

    pub fn rate(&self) -> TowerRate {
        TowerRate { c1: self.c1, c_star: self.c_star }
    }
}

/// Uniform grid in `ln y` on `[y_min, y_max]`.
pub fn log_grid(y_min: f64, y_max: f64, n: usize) -> Vec<f64> {
    let (a, b) = (y_min.ln(), y_max.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Result of [`solve_l0`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L0Solution {
    pub profile: RadialCorrection,
    /// `|int F Z y^5| / sum_parts int |part Z| y^5`.
    pub orthogonality_defect: f64,
    /// Coefficient of `Z` removed by the normalization.
    pub removed_kernel: f64,
}

const ORTHOGONALITY_TOL: f64 = 1e-8;
const PANEL_NODES: usize = 8;

fn panel_integrals(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> Vec<f64> {
    grid.windows(2)
        .map(|w| {
            let (x, wt) = gauss_legendre_on(PANEL_NODES, w[0], w[1]);
            x.iter().zip(&wt).map(|(s, c)| c * f(*s)).sum()
        })
        .collect()
}

/// Composite Simpson in `ln y` for samples on a log grid with an odd number of nodes,
/// trapezoid on the last panel otherwise.
fn simpson_log(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let h = (grid[n - 1] / grid[0]).ln() / (n - 1) as f64;
    let g: Vec<f64> = grid.iter().zip(values).map(|(y, v)| y * v).collect();
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut s = g[0] + g[m - 1];
    for k in 1..m - 1 {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g[k];
    }
    let mut total = s * h / 3.0;
    if m < n {
        total += 0.5 * h * (g[n - 2] + g[n - 1]);
    }
    total
}

/// Bounded solution of `L0[phi] + F = 0` with `F = sum parts`, orthogonal to `Z` in the
/// `y^5 dy` weight, sampled on `grid`.
pub fn solve_l0(parts: &[&dyn Fn(f64) -> f64], grid: &[f64], time: f64) -> Result<L0Solution> {
    if grid.len() < 3 || grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("the radial grid must be positive and increasing".into()));
    }
    let forcing = |s: f64| parts.iter().map(|p| p(s)).sum::<f64>();
    let quad = Quadrature { abs_tol: 0.0, rel_tol: 1e-13, max_panels: 2000 };
    let mut size = 0.0;
    for p in parts {
        size += quad.integrate_to_infinity(|s| (p(s) * kernel_z(s)).abs() * s.powi(5), 0.0)?.value;
    }
    let quad = Quadrature { abs_tol: 1e-15 * size, ..quad };
    let proj = quad.integrate_to_infinity(|s| forcing(s) * kernel_z(s) * s.powi(5), 0.0)?.value;
    let defect = if size > 0.0 { proj.abs() / size } else { 0.0 };
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(defect));
    }
    let n = grid.len();
    let y_min = grid[0];
    let y_max = grid[n - 1];
    let with_z2 = |s: f64| second_solution(s) * forcing(s) * s.powi(5);
    let with_z = |s: f64| kernel_z(s) * forcing(s) * s.powi(5);
    let (x0, w0) = gauss_legendre_on(PANEL_NODES, 0.0, y_min);
    let head = |f: &dyn Fn(f64) -> f64| x0.iter().zip(&w0).map(|(s, c)| c * f(*s)).sum::<f64>();
    let p_z2 = panel_integrals(&with_z2, grid);
    let p_z = panel_integrals(&with_z, grid);
    // Inner accumulation of the Z2 weight and of the Z weight for y <= 1; outer tails beyond.
    let mut inner_z2 = vec![head(&with_z2)];
    let mut inner_z = vec![head(&with_z)];
    for k in 0..n - 1 {
        inner_z2.push(inner_z2[k] + p_z2[k]);
        inner_z.push(inner_z[k] + p_z[k]);
    }
    let mut tail_z = vec![0.0; n];
    tail_z[n - 1] = quad.integrate_to_infinity(with_z, y_max)?.value;
    for k in (0..n - 1).rev() {
        tail_z[k] = tail_z[k + 1] + p_z[k];
    }
    let raw: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            let b = if y <= 1.0 { inner_z[k] } else { -tail_z[k] };
            kernel_z(y) * inner_z2[k] - second_solution(y) * b
        })
        .collect();
    let zz: Vec<f64> = grid.iter().map(|&y| kernel_z(y).powi(2) * y.powi(5)).collect();
    let pz: Vec<f64> = grid.iter().zip(&raw).map(|(&y, v)| v * kernel_z(y) * y.powi(5)).collect();
    let removed = simpson_log(grid, &pz) / simpson_log(grid, &zz);
    let values = grid.iter().zip(&raw).map(|(&y, v)| v - removed * kernel_z(y)).collect();
    Ok(L0Solution {
        profile: RadialCorrection { z_grid: grid.to_vec(), values, time },
        orthogonality_defect: defect,
        removed_kernel: removed,
    })
}

/// `max |L0[phi] + F| / scale` over the interior nodes, with fourth-order differences
/// in `ln y` on a log grid.
pub fn l0_residual(profile: &RadialCorrection, forcing: &dyn Fn(f64) -> f64, scale: f64) -> f64 {
    let y = &profile.z_grid;
    let v = &profile.values;
    let n = y.len();
    if n < 5 {
        return f64::NAN;
    }
    let h = (y[n - 1] / y[0]).ln() / (n - 1) as f64;
    (2..n - 2)
        .map(|k| {
            let ds = (-v[k + 2] + 8.0 * v[k + 1] - 8.0 * v[k - 1] + v[k - 2]) / (12.0 * h);
            let dss = (-v[k + 2] + 16.0 * v[k + 1] - 30.0 * v[k] + 16.0 * v[k - 1] - v[k - 2]) / (12.0 * h * h);
            let yk = y[k];
            let l0 = (dss + 4.0 * ds) / (yk * yk) + 24.0 * kernel_z(yk) * v[k];
            (l0 + forcing(yk)).abs()
        })
        .fold(0.0, f64::max)
        / scale
}

/// Report of [`phi0_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phi0Report {
    pub solution: L0Solution,
    /// `ln lambda02^2`; the profile is stored divided by `lambda02^2`.
    pub log_scale: f64,
    pub residual: f64,
}

pub const PHI0_MIN_RADIUS: f64 = 100.0;

/// The correction `phi0(., t)` forced by `mu02 mu02' Z + (12W - 6y^2W^2) lambda02^2 U(0)`.
/// Both terms carry `lambda02^2`, which is factored out of the stored profile.
pub fn phi0_solve(tower: &TowerParams, t: f64, y_max: f64, nodes: usize) -> Result<Phi0Report> {
    if y_max < PHI0_MIN_RADIUS {
        return Err(Error::InvalidArgument(format!("y_max must be at least {PHI0_MIN_RADIUS}, got {y_max}")));
    }
    if nodes < 5 {
        return Err(Error::GridTooCoarse(format!("{nodes} radial nodes")));
    }
    // mu02 mu02' / lambda02^2 = -c_star and lambda02^2 / lambda02^2 = 1.
    let c_star = tower.c_star;
    let scale_part = move |y: f64| -c_star * kernel_z(y);
    let profile_part = |y: f64| tower_potential(y) * PROFILE_AT_ORIGIN;
    let grid = log_grid(1e-3, y_max, nodes);
    let solution = solve_l0(&[&scale_part, &profile_part], &grid, t)?;
    let forcing = |y: f64| scale_part(y) + profile_part(y);
    let scale = grid.iter().map(|&y| scale_part(y).abs() + profile_part(y).abs()).fold(0.0, f64::max);
    let residual = l0_residual(&solution.profile, &forcing, scale);
    Ok(Phi0Report { solution, log_scale: 2.0 * tower.log_lambda02(t), residual })
}

/// The decaying scale correction `mu12' + c_star e^{2 c1 t} mu12 = G`.
pub fn mu12_solve<'a>(tower: &TowerParams, forcing: &'a dyn Forcing, t0: f64) -> Result<DecayingSolution<'a>> {
    solve_decaying_scalar_ode(tower.rate(), forcing, t0)
}

/// CSV with columns `y,phi0` (the profile divided by `lambda02^2`).
pub fn phi0_csv(profile: &RadialCorrection) -> String {
    let mut out = String::from("y,phi0\n");
    for (y, v) in profile.z_grid.iter().zip(&profile.values) {
        out.push_str(&row(&[*y, *v]));
        out.push('\n');
    }
    out
}

/// CSV with columns `t,mu02,mu12,log_mu02,log_abs_mu12`.
pub fn tower_csv(tower: &TowerParams, mu12: &DecayingSolution<'_>, times: &[f64]) -> Result<String> {
    let mut out = String::from("t,mu02,mu12,log_mu02,log_abs_mu12\n");
    for &t in times {
        let l = mu12.eval(t)?;
        let lm = tower.log_mu02(t);
        out.push_str(&row(&[t, lm.exp(), l.value(), lm, l.log_abs]));
        out.push('\n');
    }
    Ok(out)
}
