//! Connections on the trivial `SU(2)` bundle over `R^4`: the BPST family, curvature,
//! the stationary Yang-Mills operator, the linearization at `B_{1,0}` and its kernel.

use crate::ball::BallGrid;
use crate::error::{Error, Result};
use crate::fd::FiniteDiff;
use crate::forms::{dx_wedge_dxbar, OneForm, Point, TwoForm, PAIRS};
use crate::quaternion::ImQuaternion;
use serde::{Deserialize, Serialize};

/// Modulation parameters: scale, center, rotation 2-form and scale correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupParams {
    pub mu: f64,
    pub xi: Point,
    /// `theta_{rs}` for `r < s` in [`PAIRS`] order.
    pub theta: [f64; 6],
    pub lambda: f64,
}

impl BlowupParams {
    pub fn new(mu: f64, xi: Point) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {mu}")));
        }
        Ok(Self { mu, xi, theta: [0.0; 6], lambda: 0.0 })
    }

    /// The unit instanton centered at the origin.
    pub fn unit() -> Self {
        Self { mu: 1.0, xi: [0.0; 4], theta: [0.0; 6], lambda: 0.0 }
    }

    pub fn with_theta(mut self, theta: [f64; 6]) -> Self {
        self.theta = theta;
        self
    }

    /// Antisymmetric accessor `theta(r, s) = -theta(s, r)`.
    pub fn theta(&self, r: usize, s: usize) -> f64 {
        if r == s {
            return 0.0;
        }
        let (lo, hi, sign) = if r < s { (r, s, 1.0) } else { (s, r, -1.0) };
        PAIRS.iter().position(|&p| p == (lo, hi)).map_or(0.0, |k| sign * self.theta[k])
    }
}

/// What a field is, so analytic derivatives can be used when they exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FieldFamily {
    Bpst(BlowupParams),
    KernelMode(usize),
    Zero,
    Constant,
    Custom,
}

/// A smooth map `R^4 -> Im H (x) R^4`, i.e. a connection or a perturbation of one.
pub trait ConnectionField: Sync {
    fn eval(&self, x: &Point) -> OneForm;

    /// `out[i] = d_i A` when known in closed form.
    fn jacobian(&self, _x: &Point) -> Option<[OneForm; 4]> {
        None
    }

    /// The curvature when known in closed form.
    fn curvature(&self, _x: &Point) -> Option<TwoForm> {
        None
    }

    fn family(&self) -> FieldFamily {
        FieldFamily::Custom
    }
}

/// Adapter for closures.
pub struct FnField<F>(pub F);

impl<F: Fn(&Point) -> OneForm + Sync> ConnectionField for FnField<F> {
    fn eval(&self, x: &Point) -> OneForm {
        (self.0)(x)
    }
}

pub struct ZeroField;

impl ConnectionField for ZeroField {
    fn eval(&self, _x: &Point) -> OneForm {
        OneForm::ZERO
    }
    fn jacobian(&self, _x: &Point) -> Option<[OneForm; 4]> {
        Some([OneForm::ZERO; 4])
    }
    fn family(&self) -> FieldFamily {
        FieldFamily::Zero
    }
}

pub struct ConstantField(pub OneForm);

impl ConnectionField for ConstantField {
    fn eval(&self, _x: &Point) -> OneForm {
        self.0
    }
    fn jacobian(&self, _x: &Point) -> Option<[OneForm; 4]> {
        Some([OneForm::ZERO; 4])
    }
    fn family(&self) -> FieldFamily {
        FieldFamily::Constant
    }
}

/// Coefficient table of the instanton numerators: `N_j(y) = sum_m y_m C[j][m]`.
const NUMERATOR: [[ImQuaternion; 4]; 4] = {
    let z = ImQuaternion::ZERO;
    let (i, j, k) = (ImQuaternion::I, ImQuaternion::J, ImQuaternion::K);
    let (mi, mj, mk) = (ImQuaternion::new(-1.0, 0.0, 0.0), ImQuaternion::new(0.0, -1.0, 0.0), ImQuaternion::new(0.0, 0.0, -1.0));
    [[z, i, j, k], [mi, z, k, mj], [mj, mk, z, i], [mk, j, mi, z]]
};

/// `Im(y dx-bar)` componentwise: the numerators of the instanton.
pub fn instanton_numerators(y: &Point) -> OneForm {
    OneForm(std::array::from_fn(|j| {
        (0..4).fold(ImQuaternion::ZERO, |acc, m| acc + NUMERATOR[j][m].scale(y[m]))
    }))
}

fn offset(x: &Point, xi: &Point) -> Point {
    std::array::from_fn(|m| x[m] - xi[m])
}

fn norm_sqr(y: &Point) -> f64 {
    y.iter().map(|v| v * v).sum()
}

/// The BPST instanton `B_{mu,xi} = Im((x - xi) dx-bar) / (mu^2 + |x - xi|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bpst {
    pub params: BlowupParams,
}

impl Bpst {
    pub fn new(params: BlowupParams) -> Self {
        Self { params }
    }

    pub fn unit() -> Self {
        Self::new(BlowupParams::unit())
    }

    pub fn centered(mu: f64, xi: Point) -> Result<Self> {
        Ok(Self::new(BlowupParams::new(mu, xi)?))
    }
}

impl ConnectionField for Bpst {
    fn eval(&self, x: &Point) -> OneForm {
        let y = offset(x, &self.params.xi);
        let d = self.params.mu * self.params.mu + norm_sqr(&y);
        instanton_numerators(&y).scale(1.0 / d)
    }

    fn jacobian(&self, x: &Point) -> Option<[OneForm; 4]> {
        let y = offset(x, &self.params.xi);
        let d = self.params.mu * self.params.mu + norm_sqr(&y);
        let n = instanton_numerators(&y);
        Some(std::array::from_fn(|i| {
            OneForm(std::array::from_fn(|j| NUMERATOR[j][i].scale(1.0 / d) - n[j].scale(2.0 * y[i] / (d * d))))
        }))
    }

    fn curvature(&self, x: &Point) -> Option<TwoForm> {
        Some(bpst_curvature(&self.params, x))
    }

    fn family(&self) -> FieldFamily {
        FieldFamily::Bpst(self.params)
    }
}

/// Closed-form components of `B_{mu,xi}` at `x`.
pub fn bpst_connection(params: &BlowupParams, x: &Point) -> OneForm {
    Bpst::new(*params).eval(x)
}

/// `mu^2 dx ^ dx-bar / (mu^2 + |x - xi|^2)^2`.
pub fn bpst_curvature(params: &BlowupParams, x: &Point) -> TwoForm {
    let r2 = norm_sqr(&offset(x, &params.xi));
    let mu2 = params.mu * params.mu;
    dx_wedge_dxbar().scale(mu2 / ((mu2 + r2) * (mu2 + r2)))
}

fn check_step(h: f64) -> Result<FiniteDiff> {
    FiniteDiff::new(h)
}

fn eval_fn<'a, A: ConnectionField + ?Sized>(a: &'a A) -> impl Fn(&Point) -> OneForm + 'a {
    move |p: &Point| a.eval(p)
}

/// Curvature `F_ij = d_i A_j - d_j A_i + [A_i, A_j]` by central differences.
pub fn curvature_fd<A: ConnectionField + ?Sized>(a: &A, x: &Point, h: f64) -> Result<TwoForm> {
    let fd = check_step(h)?;
    Ok(curvature_with(&fd.gradient(&eval_fn(a), x), &a.eval(x)))
}

fn curvature_with(grad: &[OneForm; 4], v: &OneForm) -> TwoForm {
    TwoForm::from_fn(|i, j| grad[i][j] - grad[j][i] + v[i].bracket(v[j]))
}

/// Analytic curvature when available, otherwise [`curvature_fd`].
pub fn curvature<A: ConnectionField + ?Sized>(a: &A, x: &Point, fd: &FiniteDiff) -> TwoForm {
    if let Some(f) = a.curvature(x) {
        return f;
    }
    let grad = a.jacobian(x).unwrap_or_else(|| fd.gradient(&eval_fn(a), x));
    curvature_with(&grad, &a.eval(x))
}

/// `sum_i d_i A_i`; uses the analytic Jacobian when the field carries one.
pub fn divergence<A: ConnectionField + ?Sized>(a: &A, x: &Point, h: f64) -> Result<ImQuaternion> {
    let fd = check_step(h)?;
    if let Some(jac) = a.jacobian(x) {
        return Ok((0..4).fold(ImQuaternion::ZERO, |acc, i| acc + jac[i][i]));
    }
    divergence_fd_with(a, x, &fd)
}

/// `sum_i d_i A_i` by central differences regardless of the field family.
pub fn divergence_fd<A: ConnectionField + ?Sized>(a: &A, x: &Point, h: f64) -> Result<ImQuaternion> {
    divergence_fd_with(a, x, &check_step(h)?)
}

fn divergence_fd_with<A: ConnectionField + ?Sized>(a: &A, x: &Point, fd: &FiniteDiff) -> Result<ImQuaternion> {
    let f = eval_fn(a);
    Ok((0..4).fold(ImQuaternion::ZERO, |acc, i| acc + fd.d(&f, x, i)[i]))
}

/// Residual of the stationary Yang-Mills equation
/// `Delta A_j - sum d_i d_j A_i + sum [d_i A_i, A_j] + sum [A_i, d_i A_j] + sum [A_i, F_ij]`.
pub fn ym_residual<A: ConnectionField + ?Sized>(a: &A, x: &Point, h: f64) -> Result<OneForm> {
    ym_residual_with(a, x, &check_step(h)?)
}

pub fn ym_residual_with<A: ConnectionField + ?Sized>(a: &A, x: &Point, fd: &FiniteDiff) -> Result<OneForm> {
    let f = eval_fn(a);
    let v = a.eval(x);
    let grad = fd.gradient(&f, x);
    let lap = fd.laplacian(&f, x);
    let div = (0..4).fold(ImQuaternion::ZERO, |acc, i| acc + grad[i][i]);
    let mut out = OneForm::ZERO;
    for j in 0..4 {
        let mut r = lap[j] + div.bracket(v[j]);
        for i in 0..4 {
            r -= fd.dd(&f, x, i, j)[i];
            let fij = grad[i][j] - grad[j][i] + v[i].bracket(v[j]);
            r += v[i].bracket(grad[i][j]) + v[i].bracket(fij);
        }
        out[j] = r;
    }
    Ok(out)
}

/// Convention for the rotational kernel modes `Z^5` and `Z^7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ModeConvention {
    /// `F(V x, .)` with the anti-self-dual generators `e12 - e34`, `e13 + e24`, `e14 - e23`;
    /// these are annihilated by the linearized operator.
    #[default]
    Kernel,
    /// The component formulas exactly as tabulated in the source, which for `l = 5, 7`
    /// use the self-dual generators and are not in the kernel.
    AsTabulated,
}

/// Generator `V` of the rotation mode `l` in `5..=7`, as `(V x)_r`.
fn rotation_vector(l: usize, x: &Point, conv: ModeConvention) -> Point {
    let s = match conv {
        ModeConvention::Kernel => -1.0,
        ModeConvention::AsTabulated => 1.0,
    };
    match l {
        5 => [x[1], -x[0], s * x[3], -s * x[2]],
        6 => [x[2], x[3], -x[0], -x[1]],
        _ => [x[3], s * x[2], -s * x[1], -x[0]],
    }
}

/// Kernel mode `Z^l` of the elliptic linearized operator at `B_{1,0}`.
pub fn kernel_mode(l: usize, x: &Point) -> Result<OneForm> {
    kernel_mode_with(l, x, ModeConvention::Kernel)
}

pub fn kernel_mode_with(l: usize, x: &Point, conv: ModeConvention) -> Result<OneForm> {
    let w = 1.0 / (1.0 + norm_sqr(x)).powi(2);
    match l {
        0 => Ok(instanton_numerators(x).scale(2.0 * w)),
        1..=4 => Ok(OneForm(std::array::from_fn(|j| NUMERATOR[j][l - 1].scale(-2.0 * w)))),
        5..=7 => {
            let f = bpst_curvature(&BlowupParams::unit(), x);
            Ok(f.contract(&rotation_vector(l, x, conv)))
        }
        _ => Err(Error::ModeOutOfRange(l)),
    }
}

/// `Z^l` as a field, for feeding into the operators.
#[derive(Debug, Clone, Copy)]
pub struct KernelMode {
    l: usize,
    conv: ModeConvention,
}

impl KernelMode {
    pub fn new(l: usize) -> Result<Self> {
        Self::with_convention(l, ModeConvention::Kernel)
    }

    pub fn with_convention(l: usize, conv: ModeConvention) -> Result<Self> {
        if l > 7 {
            return Err(Error::ModeOutOfRange(l));
        }
        Ok(Self { l, conv })
    }
}

impl ConnectionField for KernelMode {
    fn eval(&self, x: &Point) -> OneForm {
        kernel_mode_with(self.l, x, self.conv).unwrap_or(OneForm::ZERO)
    }
    fn family(&self) -> FieldFamily {
        FieldFamily::KernelMode(self.l)
    }
}

/// The lower-order part of the linearization at the instanton `bg`:
/// `sum_i ([phi_i, d_i B_j] + [B_i, d_i phi_j] + [phi_i, F_ij] + [B_i, d_i phi_j - d_j phi_i + [phi_i, B_j] + [B_i, phi_j]])
///  + d_j sum_i [B_i, phi_i] + [B_j, sum_i [B_i, phi_i]]`.
pub fn lower_order_op_at<P: ConnectionField + ?Sized>(bg: &Bpst, phi: &P, x: &Point, fd: &FiniteDiff) -> OneForm {
    let b = bg.eval(x);
    let db = bg.jacobian(x).unwrap_or([OneForm::ZERO; 4]);
    let f = bpst_curvature(&bg.params, x);
    let p = phi.eval(x);
    let dp = phi.jacobian(x).unwrap_or_else(|| fd.gradient(&eval_fn(phi), x));
    let contraction = (0..4).fold(ImQuaternion::ZERO, |acc, i| acc + b[i].bracket(p[i]));
    let mut out = OneForm::ZERO;
    for j in 0..4 {
        let mut r = b[j].bracket(contraction);
        for i in 0..4 {
            r += p[i].bracket(db[i][j]);
            r += b[i].bracket(dp[i][j]);
            r += p[i].bracket(f.get(i, j));
            let inner = dp[i][j] - dp[j][i] + p[i].bracket(b[j]) + b[i].bracket(p[j]);
            r += b[i].bracket(inner);
            r += db[j][i].bracket(p[i]) + b[i].bracket(dp[j][i]);
        }
        out[j] = r;
    }
    out
}

/// Lower-order operator at `B_{1,0}`.
pub fn lower_order_op<P: ConnectionField + ?Sized>(phi: &P, x: &Point, h: f64) -> Result<OneForm> {
    Ok(lower_order_op_at(&Bpst::unit(), phi, x, &check_step(h)?))
}

fn bracket_of_divergence(bg: &Bpst, p: &OneForm, x: &Point) -> OneForm {
    let db = bg.jacobian(x).unwrap_or([OneForm::ZERO; 4]);
    let div = (0..4).fold(ImQuaternion::ZERO, |acc, i| acc + db[i][i]);
    OneForm(std::array::from_fn(|j| div.bracket(p[j])))
}

/// `Delta phi_j + sum_i [d_i B_i, phi_j] + lower_order_op`, the gauge-fixed elliptic
/// linearization at `bg`.
pub fn elliptic_linearized_at<P: ConnectionField + ?Sized>(bg: &Bpst, phi: &P, x: &Point, fd: &FiniteDiff) -> OneForm {
    let lap = fd.laplacian(&eval_fn(phi), x);
    lap + bracket_of_divergence(bg, &phi.eval(x), x) + lower_order_op_at(bg, phi, x, fd)
}

/// Elliptic linearization at `B_{1,0}` with `phi` derivatives by central differences.
pub fn elliptic_linearized<P: ConnectionField + ?Sized>(phi: &P, x: &Point, h: f64) -> Result<OneForm> {
    Ok(elliptic_linearized_at(&Bpst::unit(), phi, x, &check_step(h)?))
}

/// The parabolic variant without the `[d_i B_i, phi_j]` term.
pub fn parabolic_linearized<P: ConnectionField + ?Sized>(phi: &P, x: &Point, h: f64) -> Result<OneForm> {
    let fd = check_step(h)?;
    let bg = Bpst::unit();
    Ok(fd.laplacian(&eval_fn(phi), x) + lower_order_op_at(&bg, phi, x, &fd))
}

/// Difference between the elliptic and parabolic forms, `sum_i [d_i B_i, phi_j]`.
pub fn operator_discrepancy<P: ConnectionField + ?Sized>(phi: &P, x: &Point) -> OneForm {
    let bg = Bpst::unit();
    bracket_of_divergence(&bg, &phi.eval(x), x)
}

/// The unreduced form of the gauge-fixed linearization at `bg`: the linearized Yang-Mills
/// operator plus `D_B D_B^* phi`, every derivative taken literally.
pub fn elliptic_linearized_expanded<P: ConnectionField + ?Sized>(
    bg: &Bpst,
    phi: &P,
    x: &Point,
    fd: &FiniteDiff,
) -> OneForm {
    let f = eval_fn(phi);
    let b = bg.eval(x);
    let db = bg.jacobian(x).unwrap_or([OneForm::ZERO; 4]);
    let curv = bpst_curvature(&bg.params, x);
    let p = phi.eval(x);
    let dp = fd.gradient(&f, x);
    let lap = fd.laplacian(&f, x);
    let div_p = (0..4).fold(ImQuaternion::ZERO, |acc, i| acc + dp[i][i]);
    let div_b = (0..4).fold(ImQuaternion::ZERO, |acc, i| acc + db[i][i]);
    let gauge = (0..4).fold(ImQuaternion::ZERO, |acc, i| acc + b[i].bracket(p[i]));
    let mut out = OneForm::ZERO;
    for j in 0..4 {
        let mut r = lap[j] + div_p.bracket(b[j]) + div_b.bracket(p[j]);
        for i in 0..4 {
            r -= fd.dd(&f, x, i, j)[i];
            r += p[i].bracket(db[i][j]) + b[i].bracket(dp[i][j]) + p[i].bracket(curv.get(i, j));
            r += b[i].bracket(dp[i][j] - dp[j][i] + p[i].bracket(b[j]) + b[i].bracket(p[j]));
            r += fd.dd(&f, x, j, i)[i] + db[j][i].bracket(p[i]) + b[i].bracket(dp[j][i]);
        }
        r += b[j].bracket(div_p + gauge);
        out[j] = r;
    }
    out
}

/// `int sum_i <phi_i, Z^l_i> dy` for values sampled at the grid points.
pub fn project_onto_kernel(grid: &BallGrid, phi_values: &[OneForm], l: usize) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if phi_values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for a grid of {} points",
            phi_values.len(),
            grid.len()
        )));
    }
    if l > 7 {
        return Err(Error::ModeOutOfRange(l));
    }
    Ok(grid.integrate_indexed(|k, y| {
        let z = kernel_mode(l, y).unwrap_or(OneForm::ZERO);
        phi_values[k].dot(&z)
    }))
}

/// [`project_onto_kernel`] for a field evaluated on the fly.
pub fn project_field_onto_kernel<P: ConnectionField + ?Sized>(grid: &BallGrid, phi: &P, l: usize) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if l > 7 {
        return Err(Error::ModeOutOfRange(l));
    }
    Ok(grid.integrate(|y| phi.eval(y).dot(&kernel_mode(l, y).unwrap_or(OneForm::ZERO))))
}

/// `1/2 int |F_A|^2`, analytic curvature when the field provides one.
pub fn ym_energy<A: ConnectionField + ?Sized>(a: &A, grid: &BallGrid) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let fd = FiniteDiff::default();
    Ok(0.5 * grid.integrate(|x| curvature(a, x, &fd).norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const I: ImQuaternion = ImQuaternion::I;
    const J: ImQuaternion = ImQuaternion::J;
    const K: ImQuaternion = ImQuaternion::K;

    fn points(n: usize, radius: f64, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| loop {
                let p: Point = std::array::from_fn(|_| rng.gen_range(-radius..radius));
                if norm_sqr(&p) <= radius * radius {
                    break p;
                }
            })
            .collect()
    }

    #[test]
    fn bpst_values() {
        let p = BlowupParams::unit();
        assert_eq!(bpst_connection(&p, &[0.0; 4]), OneForm::ZERO);
        let b = bpst_connection(&p, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b, OneForm([ImQuaternion::ZERO, I.scale(-0.5), J.scale(-0.5), K.scale(-0.5)]));
        let x = [0.3, -1.1, 0.8, 2.0];
        let big = bpst_connection(&BlowupParams::new(2.0, [0.0; 4]).unwrap(), &x);
        let small = bpst_connection(&p, &x.map(|v| v / 2.0)).scale(0.5);
        assert!((big - small).max_norm() < 1e-15);
    }

    #[test]
    fn printed_component_formulas() {
        let p = BlowupParams::new(0.7, [0.1, -0.2, 0.3, 0.05]).unwrap();
        let x = [0.9, 0.4, -0.6, 1.3];
        let y = offset(&x, &p.xi);
        let d = 0.49 + norm_sqr(&y);
        let b = bpst_connection(&p, &x);
        let expect = [
            ImQuaternion::new(y[1], y[2], y[3]),
            ImQuaternion::new(-y[0], -y[3], y[2]),
            ImQuaternion::new(y[3], -y[0], -y[1]),
            ImQuaternion::new(-y[2], y[1], -y[0]),
        ];
        for j in 0..4 {
            assert!((b[j] - expect[j].scale(1.0 / d)).norm() < 1e-15);
        }
    }

    #[test]
    fn curvature_table_at_center() {
        let f = bpst_curvature(&BlowupParams::unit(), &[0.0; 4]);
        assert_eq!(f.get(0, 1), I.scale(-2.0));
        assert_eq!(f.get(2, 3), I.scale(-2.0));
        assert_eq!(f.get(0, 2), J.scale(-2.0));
        assert_eq!(f.get(1, 3), J.scale(2.0));
        assert_eq!(f.get(0, 3), K.scale(-2.0));
        assert_eq!(f.get(1, 2), K.scale(-2.0));
    }

    #[test]
    fn curvature_decays_like_r_minus_four() {
        let p = BlowupParams::unit();
        let a = bpst_curvature(&p, &[100.0, 0.0, 0.0, 0.0]).max_norm();
        let b = bpst_curvature(&p, &[200.0, 0.0, 0.0, 0.0]).max_norm();
        assert_relative_eq!(a / b, 16.0, max_relative = 0.01);
    }

    #[test]
    fn fd_curvature_matches_closed_form() {
        let b = Bpst::unit();
        let x = [1.0, 0.0, 0.0, 0.0];
        let d = curvature_fd(&b, &x, 1e-3).unwrap() - bpst_curvature(&b.params, &x);
        assert!(d.max_norm() < 1e-6);
    }

    #[test]
    fn constant_and_zero_fields() {
        let c = ConstantField(OneForm([I, J, K, I.scale(2.0)]));
        let f = curvature_fd(&c, &[0.2, 0.1, 0.0, -0.3], 1e-3).unwrap();
        assert_eq!(f.get(0, 1), I.bracket(J));
        assert_eq!(f.get(1, 3), J.bracket(I.scale(2.0)));
        assert_eq!(divergence(&c, &[0.0; 4], 1e-3).unwrap(), ImQuaternion::ZERO);
        assert_eq!(ym_residual(&ZeroField, &[0.1; 4], 1e-3).unwrap(), OneForm::ZERO);
        assert_eq!(curvature_fd(&ZeroField, &[0.1; 4], 1e-3).unwrap(), TwoForm::ZERO);
    }

    #[test]
    fn linear_field_divergence() {
        let a = FnField(|x: &Point| {
            let mut o = OneForm::ZERO;
            o[0] = I.scale(x[0]);
            o
        });
        let d = divergence(&a, &[0.4, 1.0, -2.0, 0.5], 1e-3).unwrap();
        assert!((d - I).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_steps() {
        let b = Bpst::unit();
        assert_eq!(curvature_fd(&b, &[0.0; 4], 0.0), Err(Error::NonPositiveStep(0.0)));
        assert!(divergence(&b, &[0.0; 4], -1.0).is_err());
        assert!(ym_residual(&b, &[0.0; 4], 0.0).is_err());
        assert!(elliptic_linearized(&b, &[0.0; 4], 0.0).is_err());
        assert!(lower_order_op(&b, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn instanton_is_yang_mills() {
        let b = Bpst::unit();
        let x = [0.7, 0.3, -0.2, 0.1];
        assert!(ym_residual(&b, &x, 1e-3).unwrap().max_norm() < 1e-5);
    }

    #[test]
    fn residual_scales_with_mu() {
        let b = Bpst::centered(0.5, [0.2, -0.1, 0.3, 0.0]).unwrap();
        let x = [0.7, 0.3, -0.2, 0.1];
        let r = ym_residual(&b, &x, 1e-3).unwrap().max_norm();
        assert!(r * 0.5f64.powi(3) < 1e-5, "{r}");
    }

    #[test]
    fn analytic_jacobian_matches_fd() {
        let b = Bpst::centered(0.8, [0.1, 0.2, -0.3, 0.4]).unwrap();
        let x = [0.5, -0.7, 0.2, 1.1];
        let jac = b.jacobian(&x).unwrap();
        let fd = FiniteDiff::new(1e-4).unwrap().gradient(&|p: &Point| b.eval(p), &x);
        for i in 0..4 {
            assert!((jac[i] - fd[i]).max_norm() < 1e-7);
        }
    }

    #[test]
    fn kernel_mode_values() {
        let z0 = kernel_mode(0, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(z0[0], I.scale(0.5));
        assert_eq!(z0[1], ImQuaternion::ZERO);
        assert_eq!(z0[2], K.scale(-0.5));
        assert_eq!(z0[3], J.scale(0.5));
        let x = [0.3, -0.4, 1.2, 0.7];
        let w = 2.0 / (1.0 + norm_sqr(&x)).powi(2);
        assert_eq!(kernel_mode(1, &x).unwrap()[0], ImQuaternion::ZERO);
        let tab = [
            [ImQuaternion::ZERO, I, J, K],
            [-I, ImQuaternion::ZERO, K, -J],
            [-J, -K, ImQuaternion::ZERO, I],
            [-K, J, -I, ImQuaternion::ZERO],
        ];
        for l in 1..=4 {
            let z = kernel_mode(l, &x).unwrap();
            for j in 0..4 {
                assert!((z[j] - tab[l - 1][j].scale(w)).norm() < 1e-15, "l={l} j={j}");
            }
        }
        assert_eq!(kernel_mode(8, &x), Err(Error::ModeOutOfRange(8)));
    }

    #[test]
    fn z0_decays_like_r_cubed() {
        let a = kernel_mode(0, &[10.0, 0.0, 0.0, 0.0]).unwrap().norm_sqr().sqrt();
        let b = kernel_mode(0, &[20.0, 0.0, 0.0, 0.0]).unwrap().norm_sqr().sqrt();
        assert_relative_eq!(a / b, 8.0, max_relative = 0.02);
    }

    #[test]
    fn tabulated_rotation_modes_follow_the_printed_components() {
        let x = [0.3, -0.4, 1.2, 0.7];
        let f = bpst_curvature(&BlowupParams::unit(), &x);
        let g = |a: usize, b: usize| f.get(a - 1, b - 1);
        let [x1, x2, x3, x4] = x;
        let printed = [
            [
                g(1, 2).scale(x1) + g(1, 4).scale(x3) - g(1, 3).scale(x4),
                g(2, 1).scale(-x2) + g(2, 4).scale(x3) - g(2, 3).scale(x4),
                g(3, 2).scale(x1) - g(3, 1).scale(x2) + g(3, 4).scale(x3),
                g(4, 2).scale(x1) - g(4, 1).scale(x2) - g(4, 3).scale(x4),
            ],
            [
                g(1, 3).scale(x1) + g(1, 4).scale(x2) - g(1, 2).scale(x4),
                g(2, 3).scale(x1) - g(2, 1).scale(x3) + g(2, 4).scale(x2),
                g(3, 1).scale(-x3) + g(3, 4).scale(x2) - g(3, 2).scale(x4),
                g(4, 3).scale(x1) - g(4, 1).scale(x3) - g(4, 2).scale(x4),
            ],
            [
                g(1, 4).scale(x1) + g(1, 3).scale(x2) - g(1, 2).scale(x3),
                g(2, 4).scale(x1) - g(2, 1).scale(x4) + g(2, 3).scale(x2),
                g(3, 4).scale(x1) - g(3, 1).scale(x4) - g(3, 2).scale(x3),
                g(4, 1).scale(-x4) + g(4, 3).scale(x2) - g(4, 2).scale(x3),
            ],
        ];
        for (k, l) in (5..=7).enumerate() {
            let z = kernel_mode_with(l, &x, ModeConvention::AsTabulated).unwrap();
            for j in 0..4 {
                assert!((z[j] - printed[k][j]).norm() < 1e-14, "l={l} j={j}");
            }
        }
        assert_eq!(
            kernel_mode_with(6, &x, ModeConvention::Kernel).unwrap(),
            kernel_mode_with(6, &x, ModeConvention::AsTabulated).unwrap()
        );
    }

    #[test]
    fn kernel_modes_are_annihilated() {
        for x in points(6, 3.0, 7) {
            for l in 0..8 {
                let r = elliptic_linearized(&KernelMode::new(l).unwrap(), &x, 1e-3).unwrap();
                assert!(r.max_norm() < 1e-5, "l={l} r={}", r.max_norm());
            }
        }
    }

    #[test]
    fn tabulated_z5_is_not_in_the_kernel() {
        let x = [0.7, 0.3, -0.2, 0.1];
        let z = KernelMode::with_convention(5, ModeConvention::AsTabulated).unwrap();
        assert!(elliptic_linearized(&z, &x, 1e-3).unwrap().max_norm() > 0.1);
    }

    #[test]
    fn reduced_and_expanded_forms_agree() {
        let bg = Bpst::unit();
        let fd = FiniteDiff::new(1e-3).unwrap();
        let phi = FnField(|x: &Point| {
            let e = (-norm_sqr(x)).exp();
            OneForm([I.scale(e * x[1]), J.scale(e), K.scale(e * x[0] * x[3]), ImQuaternion::new(e, x[2] * e, 0.0)])
        });
        for x in points(4, 2.0, 11) {
            let a = elliptic_linearized_at(&bg, &phi, &x, &fd);
            let b = elliptic_linearized_expanded(&bg, &phi, &x, &fd);
            assert!((a - b).max_norm() < 1e-5, "{}", (a - b).max_norm());
        }
    }

    #[test]
    fn lower_order_of_constant_field_by_hand() {
        // d phi = 0 and B(0) = 0, so only [phi_i, F_ij] and [dB_j_i, phi_i] + [phi_i, d_i B_j] survive.
        let c = OneForm([I; 4]);
        let x = [0.0; 4];
        let got = lower_order_op(&ConstantField(c), &x, 1e-3).unwrap();
        let bg = Bpst::unit();
        let db = bg.jacobian(&x).unwrap();
        let f = bpst_curvature(&bg.params, &x);
        for j in 0..4 {
            let mut e = ImQuaternion::ZERO;
            for i in 0..4 {
                e += I.bracket(db[i][j]) + I.bracket(f.get(i, j)) + db[j][i].bracket(I);
            }
            assert!((got[j] - e).norm() < 1e-14);
        }
        assert_eq!(lower_order_op(&ZeroField, &[0.3; 4], 1e-3).unwrap(), OneForm::ZERO);
    }

    #[test]
    fn theta_accessor_is_antisymmetric() {
        let p = BlowupParams::unit().with_theta([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        for r in 0..4 {
            for s in 0..4 {
                assert_eq!(p.theta(r, s), -p.theta(s, r));
            }
        }
        assert_eq!(p.theta(2, 1), -4.0);
        assert!(BlowupParams::new(0.0, [0.0; 4]).is_err());
    }

    proptest! {
        #[test]
        fn bpst_is_self_dual_and_coulomb(
            mu in 0.2..3.0f64,
            xi in prop::array::uniform4(-1.0..1.0f64),
            x in prop::array::uniform4(-4.0..4.0f64),
        ) {
            let b = Bpst::centered(mu, xi).unwrap();
            prop_assert!(crate::forms::selfdual_residual(&bpst_curvature(&b.params, &x)) <= 1e-12);
            prop_assert!(divergence(&b, &x, 1e-3).unwrap().norm() <= 1e-12);
            prop_assert!(divergence_fd(&b, &x, 1e-3).unwrap().norm() <= 10.0 * 1e-6);
        }

        #[test]
        fn elliptic_equals_laplacian_plus_lower_order(x in prop::array::uniform4(-2.0..2.0f64)) {
            let fd = FiniteDiff::new(1e-3).unwrap();
            let phi = Bpst::centered(1.3, [0.2, 0.0, -0.1, 0.3]).unwrap();
            let lhs = elliptic_linearized(&phi, &x, 1e-3).unwrap();
            let rhs = fd.laplacian(&|p: &Point| phi.eval(p), &x) + lower_order_op(&phi, &x, 1e-3).unwrap();
            prop_assert!((lhs - rhs).max_norm() <= 10.0 * 1e-6);
        }
    }
}
