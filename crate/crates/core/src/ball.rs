//! Tensor-product quadrature on a ball in `R^4` in hyperspherical coordinates.
//!
//! The radius is split into geometrically growing panels with Gauss-Legendre nodes;
//! the polar angle `chi` uses Gauss-Chebyshev nodes of the second kind (exact for the
//! `sin^2 chi` weight), `cos theta` uses Gauss-Legendre, and the azimuth the periodic
//! trapezoid rule.

use crate::forms::Point;
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Resolution of a [`BallGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub radius: f64,
    /// Outer edge of the first radial panel `[0, core]`.
    pub core: f64,
    /// Ratio between consecutive panel edges beyond the core.
    pub panel_ratio: f64,
    pub radial_per_panel: usize,
    pub n_chi: usize,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for BallSpec {
    fn default() -> Self {
        Self { radius: 50.0, core: 0.05, panel_ratio: 2.0, radial_per_panel: 8, n_chi: 8, n_theta: 8, n_phi: 12 }
    }
}

impl BallSpec {
    pub fn with_radius(radius: f64) -> Self {
        Self { radius, ..Self::default() }
    }

    /// Twice the nodes in every direction.
    pub fn refined(self) -> Self {
        Self {
            radial_per_panel: 2 * self.radial_per_panel,
            n_chi: 2 * self.n_chi,
            n_theta: 2 * self.n_theta,
            n_phi: 2 * self.n_phi,
            ..self
        }
    }

    pub fn build(self) -> BallGrid {
        BallGrid::new(self)
    }
}

/// Quadrature points and weights on the ball of radius `spec.radius`.
#[derive(Debug, Clone)]
pub struct BallGrid {
    spec: BallSpec,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    directions: Vec<Point>,
    angular_weights: Vec<f64>,
    points: Vec<Point>,
}

fn radial_rule(spec: &BallSpec) -> (Vec<f64>, Vec<f64>) {
    let mut edges = vec![0.0];
    let mut e = spec.core.min(spec.radius);
    while e < spec.radius {
        edges.push(e);
        e *= spec.panel_ratio;
    }
    edges.push(spec.radius);
    let mut r = Vec::new();
    let mut w = Vec::new();
    for pair in edges.windows(2) {
        let (x, wt) = gauss_legendre_on(spec.radial_per_panel, pair[0], pair[1]);
        r.extend(x);
        w.extend(wt);
    }
    (r, w)
}

fn angular_rule(spec: &BallSpec) -> (Vec<Point>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    // Gauss-Chebyshev of the second kind in cos(chi): exact for the sin^2 weight.
    let m = spec.n_chi as f64 + 1.0;
    let chi: Vec<f64> = (1..=spec.n_chi).map(|k| k as f64 * pi / m).collect();
    let wchi = vec![pi / m; spec.n_chi];
    let (ct, wct) = gauss_legendre(spec.n_theta);
    let dphi = 2.0 * pi / spec.n_phi as f64;
    let mut dirs = Vec::with_capacity(spec.n_chi * spec.n_theta * spec.n_phi);
    let mut w = Vec::with_capacity(dirs.capacity());
    for (c, wc) in chi.iter().zip(&wchi) {
        let (sc, cc) = c.sin_cos();
        for (t, wt) in ct.iter().zip(&wct) {
            let st = (1.0 - t * t).sqrt();
            for k in 0..spec.n_phi {
                let (sp, cp) = ((k as f64 + 0.5) * dphi).sin_cos();
                dirs.push([cc, sc * t, sc * st * cp, sc * st * sp]);
                w.push(wc * sc * sc * wt * dphi);
            }
        }
    }
    (dirs, w)
}

impl BallGrid {
    pub fn new(spec: BallSpec) -> Self {
        if !(spec.radius > 0.0) || spec.radial_per_panel == 0 || spec.n_chi == 0 || spec.n_theta == 0 || spec.n_phi == 0 {
            return Self {
                spec,
                radii: vec![],
                radial_weights: vec![],
                directions: vec![],
                angular_weights: vec![],
                points: vec![],
            };
        }
        let (radii, radial_weights) = radial_rule(&spec);
        let (directions, angular_weights) = angular_rule(&spec);
        let points = radii
            .iter()
            .flat_map(|&r| directions.iter().map(move |d| d.map(|v| v * r)))
            .collect();
        Self { spec, radii, radial_weights, directions, angular_weights, points }
    }

    pub fn with_radius(radius: f64) -> Self {
        BallSpec::with_radius(radius).build()
    }

    pub fn spec(&self) -> &BallSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Weight of point `k` (radial weight times `r^3` times angular weight).
    pub fn weight(&self, k: usize) -> f64 {
        let na = self.directions.len();
        let (ir, ia) = (k / na, k % na);
        let r = self.radii[ir];
        self.radial_weights[ir] * r * r * r * self.angular_weights[ia]
    }

    /// `int f` over the ball.
    pub fn integrate(&self, f: impl Fn(&Point) -> f64 + Sync) -> f64 {
        self.integrate_indexed(|_, x| f(x))
    }

    /// `int f` where `f` also receives the flat point index.
    pub fn integrate_indexed(&self, f: impl Fn(usize, &Point) -> f64 + Sync) -> f64 {
        self.integrate_shells(|ir, r| {
            let na = self.directions.len();
            let _ = r;
            (0..na).map(|ia| self.angular_weights[ia] * f(ir * na + ia, &self.points[ir * na + ia])).sum()
        })
    }

    /// `int f` where the per-shell work can share radius-only data: `shell(ir, r)` must
    /// return the angular integral over the sphere of radius `r`.
    pub fn integrate_shells(&self, shell: impl Fn(usize, f64) -> f64 + Sync) -> f64 {
        let parts: Vec<f64> = (0..self.radii.len())
            .into_par_iter()
            .map(|ir| {
                let r = self.radii[ir];
                self.radial_weights[ir] * r * r * r * shell(ir, r)
            })
            .collect();
        parts.iter().sum()
    }

    /// Angular nodes (unit vectors) and weights, summing to `2 pi^2`.
    pub fn sphere_rule(&self) -> (&[Point], &[f64]) {
        (&self.directions, &self.angular_weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn volume_and_moments() {
        let g = BallGrid::with_radius(2.0);
        let vol = g.integrate(|_| 1.0);
        assert!((vol - PI * PI / 2.0 * 16.0).abs() < 1e-10);
        let second = g.integrate(|x| x[2] * x[2]);
        assert!((second - 2.0 * PI * PI * 64.0 / 24.0).abs() < 1e-9, "{second}");
        let odd = g.integrate(|x| x[0] * x[1] * x[1] + x[3]);
        assert!(odd.abs() < 1e-12);
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        let g = BallGrid::with_radius(1.0);
        let s: f64 = g.sphere_rule().1.iter().sum();
        assert!((s - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn weights_match_integrate() {
        let g = BallSpec { radius: 1.0, radial_per_panel: 3, n_chi: 2, n_theta: 2, n_phi: 4, ..Default::default() }.build();
        let a: f64 = (0..g.len()).map(|k| g.weight(k) * g.points()[k][0].powi(2)).sum();
        let b = g.integrate(|x| x[0] * x[0]);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn decaying_radial_integrand() {
        // int_{|x|<R} (1+|x|^2)^-4 = pi^2 (1/6 - 1/(2 q^2) + 1/(3 q^3)) with q = 1 + R^2.
        let g = BallGrid::with_radius(50.0);
        let v = g.integrate(|x| (1.0 + x.iter().map(|c| c * c).sum::<f64>()).powi(-4));
        let q = 1.0 + 50.0f64.powi(2);
        let exact = PI * PI * (1.0 / 6.0 - 0.5 / (q * q) + 1.0 / (3.0 * q.powi(3)));
        assert!((v - exact).abs() < 1e-10 * exact, "{v} {exact}");
    }

    #[test]
    fn empty_spec() {
        let g = BallSpec { n_phi: 0, ..Default::default() }.build();
        assert!(g.is_empty());
    }
}
