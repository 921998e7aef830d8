//! The radial kernel `k1` of the six-dimensional heat equation and the Duhamel
//! corrections built from it.

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::rates::{lower_gamma2, SERIES_CUTOFF};
use crate::trajectory::ScaleTrajectory;
use serde::{Deserialize, Serialize};

/// `(1 - e^{-a}(1 + a)) / a^2`, finite at `a = 0`.
fn gamma2_over_a2(a: f64) -> f64 {
    if a < SERIES_CUTOFF {
        let mut term: f64 = 0.5;
        let mut sum: f64 = 0.0;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs() && n < 60.0 {
            sum += (n - 1.0) * term;
            n += 1.0;
            term *= -a / n;
        }
        sum
    } else {
        lower_gamma2(a) / (a * a)
    }
}

/// `(2 a^2 e^{-a} - 4 (1 - e^{-a}(1 + a))) / a^3`, finite at `a = 0`.
fn dk1_series(a: f64) -> f64 {
    if a < SERIES_CUTOFF {
        let mut sum = 0.0;
        let mut fact = 6.0;
        let mut pow = 1.0;
        for m in 3..60 {
            let mf = m as f64;
            if m > 3 {
                fact *= mf;
                pow *= -a;
            }
            // pow carries (-1)^{m-3}, and (-1)^m = -(-1)^{m-3}.
            let term = 2.0 * (mf - 1.0) * (mf - 2.0) * pow / fact;
            sum -= term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (2.0 * a * a * (-a).exp() - 4.0 * lower_gamma2(a)) / (a * a * a)
    }
}

fn check(t: f64, z: f64) -> Result<()> {
    if !(t > 0.0) || !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("k1 needs t, z > 0, got ({t}, {z})")));
    }
    Ok(())
}

/// `k1(t, z) = (1 - e^{-a}(1 + a)) / z^4` with `a = z^2 / (4t)`.
pub fn k1_kernel(t: f64, z: f64) -> Result<f64> {
    check(t, z)?;
    let a = z * z / (4.0 * t);
    if a < SERIES_CUTOFF {
        Ok(gamma2_over_a2(a) / (16.0 * t * t))
    } else {
        Ok(lower_gamma2(a) / z.powi(4))
    }
}

/// `d k1 / dz`.
pub fn k1_kernel_dz(t: f64, z: f64) -> Result<f64> {
    check(t, z)?;
    let a = z * z / (4.0 * t);
    Ok(dk1_series(a) * z / (64.0 * t * t * t))
}

/// A radial function of `z` sampled on a grid at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialCorrection {
    pub z_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub time: f64,
}

/// A value of a radial correction together with its `z`-derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialValue {
    pub value: f64,
    pub deriv: f64,
}

impl RadialValue {
    pub fn new(value: f64, deriv: f64) -> Self {
        Self { value, deriv }
    }
}

fn duhamel(p: &dyn Fn(f64) -> f64, t0: f64, t: f64, kernel: impl Fn(f64) -> f64) -> Result<f64> {
    if !(t > t0) {
        return Err(Error::InvalidArgument(format!("need t > t0, got t0={t0}, t={t}")));
    }
    let quad = Quadrature { abs_tol: 1e-14, rel_tol: 1e-12, max_panels: 4000 };
    Ok(quad.integrate(|s| p(s) * kernel(t - s), t0, t)?.value)
}

/// `psi(z, t) = int_{t0}^t p(s) k1(t - s, z) ds`.
pub fn psi_correction(p: &dyn Fn(f64) -> f64, t0: f64, t: f64, z: f64) -> Result<f64> {
    check(1.0, z)?;
    duhamel(p, t0, t, |w| k1_kernel(w, z).unwrap_or(0.0))
}

/// `d psi / dz`, differentiated under the integral.
pub fn psi_correction_dz(p: &dyn Fn(f64) -> f64, t0: f64, t: f64, z: f64) -> Result<f64> {
    check(1.0, z)?;
    duhamel(p, t0, t, |w| k1_kernel_dz(w, z).unwrap_or(0.0))
}

/// Value and derivative together.
pub fn psi_correction_pair(p: &dyn Fn(f64) -> f64, t0: f64, t: f64, z: f64) -> Result<RadialValue> {
    Ok(RadialValue::new(psi_correction(p, t0, t, z)?, psi_correction_dz(p, t0, t, z)?))
}

/// The scale forcing `2 mu mu'` of a trajectory.
pub fn scale_forcing(path: &ScaleTrajectory) -> impl Fn(f64) -> f64 + '_ {
    move |s| path.eval(s).map_or(0.0, |(m, d)| 2.0 * m * d)
}

/// `psi` on a grid of `z` values.
pub fn psi_profile(p: &dyn Fn(f64) -> f64, t0: f64, t: f64, z_grid: &[f64]) -> Result<RadialCorrection> {
    let values = z_grid.iter().map(|&z| psi_correction(p, t0, t, z)).collect::<Result<Vec<_>>>()?;
    Ok(RadialCorrection { z_grid: z_grid.to_vec(), values, time: t })
}

/// `int_0^T k1(s, z) ds` in closed form.
///
/// With `a = z^2 / (4s)` the integral becomes `(1 / (4 z^2)) int_b^inf g(a) / a^2 da`,
/// and `(e^{-a} - 1) / a` is an antiderivative of `g(a) / a^2`.
pub fn k1_time_integral(big_t: f64, z: f64) -> Result<f64> {
    check(big_t, z)?;
    let b = z * z / (4.0 * big_t);
    let at_b = if b < 1e-8 { -1.0 + b / 2.0 } else { (-b).exp_m1() / b };
    Ok(-at_b / (4.0 * z * z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_limits() {
        for t in [0.1, 1.0, 3.0] {
            let k = k1_kernel(t, 1e-6).unwrap();
            assert!((k - 1.0 / (32.0 * t * t)).abs() <= 1e-8 * k);
        }
        let z = 3.0;
        assert!((k1_kernel(1e-4, z).unwrap() - z.powi(-4)).abs() < 1e-14);
        assert!(k1_kernel(0.0, 1.0).is_err());
        assert!(k1_kernel(1.0, 0.0).is_err());
    }

    #[test]
    fn kernel_branches_agree() {
        for t in [0.5, 2.0] {
            let z = (4.0 * t * SERIES_CUTOFF).sqrt();
            let lo = k1_kernel(t, z * (1.0 - 1e-12)).unwrap();
            let hi = k1_kernel(t, z * (1.0 + 1e-12)).unwrap();
            assert!((lo - hi).abs() < 3e-12 * lo);
            let lo = k1_kernel_dz(t, z * (1.0 - 1e-12)).unwrap();
            let hi = k1_kernel_dz(t, z * (1.0 + 1e-12)).unwrap();
            assert!((lo - hi).abs() < 1e-10 * lo.abs());
        }
    }

    #[test]
    fn derivative_matches_fd() {
        for (t, z) in [(1.0, 0.3), (0.2, 2.0), (3.0, 5.0)] {
            let h = 1e-5 * z;
            let fd = (k1_kernel(t, z + h).unwrap() - k1_kernel(t, z - h).unwrap()) / (2.0 * h);
            let an = k1_kernel_dz(t, z).unwrap();
            assert!((fd - an).abs() < 1e-7 * an.abs().max(1e-3), "{t} {z}: {fd} {an}");
        }
        let t: f64 = 0.7;
        let z = 1e-4;
        assert!((k1_kernel_dz(t, z).unwrap() / (-z / (96.0 * t.powi(3))) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kernel_solves_radial_heat_equation() {
        let (t, z) = (0.8, 1.3);
        let (ht, hz) = (1e-4, 1e-4);
        let k = |t: f64, z: f64| k1_kernel(t, z).unwrap();
        let kt = (k(t + ht, z) - k(t - ht, z)) / (2.0 * ht);
        let kzz = (k(t, z + hz) - 2.0 * k(t, z) + k(t, z - hz)) / (hz * hz);
        let kz = (k(t, z + hz) - k(t, z - hz)) / (2.0 * hz);
        assert!((kt - kzz - 5.0 * kz / z).abs() < 1e-6 * kt.abs().max(1e-3));
    }

    #[test]
    fn constant_forcing_matches_closed_antiderivative() {
        let p = |_s: f64| 1.7;
        for z in [0.2, 1.0, 4.0] {
            let v = psi_correction(&p, 0.0, 2.5, z).unwrap();
            let exact = 1.7 * k1_time_integral(2.5, z).unwrap();
            assert!((v - exact).abs() < 1e-10 * exact.abs(), "{z}: {v} {exact}");
        }
        assert_eq!(psi_correction(&|_| 0.0, 0.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn kernel_bounds() {
        for t in [0.01, 1.0, 10.0] {
            let mut prev = f64::INFINITY;
            for k in 1..50 {
                let z = 0.1 * k as f64;
                let v = k1_kernel(t, z).unwrap();
                assert!(v > 0.0 && v < prev);
                let scaled = z.powi(4) * v;
                assert!(scaled > 0.0 && scaled <= 1.0 + 4.0 * f64::EPSILON);
                prev = v;
            }
        }
    }
}
