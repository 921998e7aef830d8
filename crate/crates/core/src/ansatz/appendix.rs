//! Closed forms of the lower-order operator applied to the building blocks of the
//! approximate solution, and the fields they are meant to describe.

use super::duhamel::RadialValue;
use crate::error::{Error, Result};
use crate::forms::{dx_wedge_dxbar, OneForm, Point, TwoForm};
use crate::gauge::{instanton_numerators, ConnectionField};
use crate::quaternion::ImQuaternion;
use serde::{Deserialize, Serialize};

fn offset(x: &Point, xi: &Point) -> Point {
    std::array::from_fn(|m| x[m] - xi[m])
}

fn norm_sqr(y: &Point) -> f64 {
    y.iter().map(|v| v * v).sum()
}

fn im(a: f64, b: f64, c: f64) -> ImQuaternion {
    ImQuaternion::new(a, b, c)
}

/// The lower-order operator at `B_{mu,q}` applied to `B_{1,q}`.
pub fn tilde_l_b1q(x: &Point, mu: f64, q: &Point) -> OneForm {
    let y = offset(x, q);
    let r2 = norm_sqr(&y);
    let d = r2 + mu * mu;
    instanton_numerators(&y).scale(24.0 * mu * mu / ((r2 + 1.0) * d * d))
}

/// The shared scalar factors `(S, A)` of the radial closed forms.
fn factors(y: &Point, mu: f64, f: RadialValue) -> (f64, f64) {
    let r2 = norm_sqr(y);
    let z2 = r2 + mu * mu;
    let z = z2.sqrt();
    let s = 24.0 * mu * mu * f.value / (z2 * z2);
    let a = 4.0 * (2.0 * (2.0 * r2 - mu * mu) * z * f.value + z2 * z2 * f.deriv) / (z2 * z2 * z);
    (s, a)
}

/// The lower-order operator at `B_{mu,xi}` applied to `f0(z) Im((x - xi) dx-bar)`.
pub fn tilde_l_phi0(x: &Point, mu: f64, xi: &Point, f0: RadialValue) -> OneForm {
    let y = offset(x, xi);
    let (s, _) = factors(&y, mu, f0);
    instanton_numerators(&y).scale(s)
}

/// The three rotation-generated corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phi1Variant {
    First,
    Second,
    Third,
}

impl Phi1Variant {
    pub const ALL: [Self; 3] = [Self::First, Self::Second, Self::Third];

    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            3 => Ok(Self::Third),
            _ => Err(Error::InvalidArgument(format!("correction variant must be 1, 2 or 3, got {k}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::First => 1,
            Self::Second => 2,
            Self::Third => 3,
        }
    }

    /// The rotation field `V y` whose contraction with `dx ^ dx-bar` defines the correction.
    pub fn rotation(self, y: &Point) -> Point {
        match self {
            Self::First => [y[1], -y[0], y[3], -y[2]],
            Self::Second => [y[2], y[3], -y[0], -y[1]],
            Self::Third => [y[3], y[2], -y[1], -y[0]],
        }
    }
}

/// The tabulated closed forms for the rotation-generated corrections.
pub fn tilde_l_phi1(variant: Phi1Variant, x: &Point, mu: f64, xi: &Point, f: RadialValue) -> OneForm {
    let y = offset(x, xi);
    let (s, a) = factors(&y, mu, f);
    let [y1, y2, y3, y4] = y;
    let c = match variant {
        Phi1Variant::First => [
            im(-a * y1, -s * y4, s * y3),
            im(-a * y2, -s * y3, -s * y4),
            im(-a * y3, s * y2, -s * y1),
            im(-a * y4, s * y1, s * y2),
        ],
        Phi1Variant::Second => [
            im(-s * y4, s * y1, s * y2),
            im(s * y3, -s * y2, s * y1),
            im(s * y2, s * y3, s * y4),
            im(-s * y1, -s * y4, s * y3),
        ],
        Phi1Variant::Third => [
            im(-s * y3, s * y2, -a * y1),
            im(s * y4, -s * y1, -a * y2),
            im(s * y1, s * y4, -a * y3),
            im(-s * y2, -s * y3, -a * y4),
        ],
    };
    OneForm(c)
}

/// [`tilde_l_phi1`] addressed by the numeric variant `1`, `2` or `3`.
pub fn tilde_l_phi1_indexed(variant: u8, x: &Point, mu: f64, xi: &Point, f: RadialValue) -> Result<OneForm> {
    Ok(tilde_l_phi1(Phi1Variant::from_index(variant)?, x, mu, xi, f))
}

type Radial = dyn Fn(f64) -> f64 + Sync;

/// `f0(sqrt(|x - xi|^2 + mu^2)) Im((x - xi) dx-bar)`.
pub struct Phi0Field<'a> {
    pub mu: f64,
    pub xi: Point,
    pub profile: &'a Radial,
}

impl ConnectionField for Phi0Field<'_> {
    fn eval(&self, x: &Point) -> OneForm {
        let y = offset(x, &self.xi);
        let z = (norm_sqr(&y) + self.mu * self.mu).sqrt();
        instanton_numerators(&y).scale((self.profile)(z))
    }
}

/// `f(z) (dx ^ dx-bar)(V y, .)` for the rotation field of `variant`.
pub struct Phi1Field<'a> {
    pub variant: Phi1Variant,
    pub mu: f64,
    pub xi: Point,
    pub profile: &'a Radial,
}

impl ConnectionField for Phi1Field<'_> {
    fn eval(&self, x: &Point) -> OneForm {
        let y = offset(x, &self.xi);
        let z = (norm_sqr(&y) + self.mu * self.mu).sqrt();
        let t: TwoForm = dx_wedge_dxbar();
        t.contract(&self.variant.rotation(&y)).scale((self.profile)(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::FiniteDiff;
    use crate::gauge::{lower_order_op_at, Bpst};
    use proptest::prelude::*;

    const XI: Point = [0.3, -0.2, 0.1, 0.4];

    fn profile(z: f64) -> f64 {
        (1.0 + z * z).recip() + 0.3 * (-z).exp()
    }

    fn profile_dz(z: f64) -> f64 {
        -2.0 * z / (1.0 + z * z).powi(2) - 0.3 * (-z).exp()
    }

    fn radial(z: f64) -> RadialValue {
        RadialValue::new(profile(z), profile_dz(z))
    }

    fn zval(x: &Point, mu: f64) -> f64 {
        (norm_sqr(&offset(x, &XI)) + mu * mu).sqrt()
    }

    fn relative(a: &OneForm, b: &OneForm) -> f64 {
        (*a - *b).max_norm() / b.max_norm().max(1e-12)
    }

    #[test]
    fn b1q_closed_form_at_center_and_far() {
        assert_eq!(tilde_l_b1q(&XI, 0.5, &XI).max_norm(), 0.0);
        let far = |s: f64| tilde_l_b1q(&[s, 0.0, 0.0, 0.0], 0.7, &[0.0; 4]).max_norm();
        let ratio = far(400.0) / far(200.0);
        assert!((ratio - 2f64.powi(-5)).abs() < 1e-3 * ratio);
    }

    #[test]
    fn b1q_first_component_formula() {
        let (x, mu, q) = ([0.7, -0.4, 1.1, 0.2], 0.6, [0.1, 0.2, -0.3, 0.5]);
        let y = offset(&x, &q);
        let r2 = norm_sqr(&y);
        let c = 24.0 * mu * mu / ((r2 + 1.0) * (r2 + mu * mu).powi(2));
        let l = tilde_l_b1q(&x, mu, &q);
        assert!((l[0] - im(c * y[1], c * y[2], c * y[3])).max_abs() < 1e-15);
    }

    #[test]
    fn b1q_matches_generic_operator() {
        let fd = FiniteDiff::default();
        for (mu, x) in [(1.0, [0.3, 0.8, -0.5, 0.2]), (0.4, [1.3, -0.2, 0.6, -0.9])] {
            let q = [0.0; 4];
            let generic = lower_order_op_at(&Bpst::centered(mu, q).unwrap(), &Bpst::centered(1.0, q).unwrap(), &x, &fd);
            assert!(relative(&tilde_l_b1q(&x, mu, &q), &generic) < 1e-10);
        }
    }

    #[test]
    fn zero_profile_gives_zero() {
        let x = [0.4, 0.1, -0.3, 0.9];
        let zero = RadialValue::default();
        assert_eq!(tilde_l_phi0(&x, 0.5, &XI, zero).max_norm(), 0.0);
        for v in Phi1Variant::ALL {
            assert_eq!(tilde_l_phi1(v, &x, 0.5, &XI, zero).max_norm(), 0.0);
        }
        assert_eq!(tilde_l_phi0(&XI, 0.5, &XI, radial(0.5)).max_norm(), 0.0);
        assert!(Phi1Variant::from_index(4).is_err());
        assert!(tilde_l_phi1_indexed(0, &x, 0.5, &XI, zero).is_err());
    }

    #[test]
    fn second_variant_relation_to_generic_operator() {
        // The tabulated closed form equals -1/2 of the operator applied to its defining field.
        let fd = FiniteDiff::default();
        let mu = 0.6;
        let x = [0.9, -0.4, 0.7, 1.2];
        let field = Phi1Field { variant: Phi1Variant::Second, mu, xi: XI, profile: &profile };
        let generic = lower_order_op_at(&Bpst::centered(mu, XI).unwrap(), &field, &x, &fd);
        let closed = tilde_l_phi1(Phi1Variant::Second, &x, mu, &XI, radial(zval(&x, mu)));
        assert!(relative(&closed, &generic.scale(-0.5)) < 1e-5);
    }

    #[test]
    fn first_and_third_variants_are_related_by_relabelling() {
        // Third(y) at component perm[a] equals First(P y) at component a with (i, j, k) -> (k, i, j).
        let perm = [0usize, 3, 1, 2];
        let mu = 0.8;
        for y in [[0.3, -1.1, 0.6, 0.2], [1.5, 0.4, -0.7, -0.9]] {
            let x: Point = std::array::from_fn(|m| XI[m] + y[m]);
            let py: Point = std::array::from_fn(|a| y[perm[a]]);
            let px: Point = std::array::from_fn(|m| XI[m] + py[m]);
            let f = radial(zval(&x, mu));
            let third = tilde_l_phi1(Phi1Variant::Third, &x, mu, &XI, f);
            let first = tilde_l_phi1(Phi1Variant::First, &px, mu, &XI, f);
            for a in 0..4 {
                let v = first[a];
                let relabelled = im(v.b, v.c, v.a);
                assert!((third[perm[a]] - relabelled).max_abs() < 1e-14);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn phi0_closed_form_matches_generic_operator(
            y in prop::array::uniform4(-2.0f64..2.0),
            mu in 0.2f64..1.5,
        ) {
            let fd = FiniteDiff::default();
            let x: Point = std::array::from_fn(|m| XI[m] + y[m]);
            let field = Phi0Field { mu, xi: XI, profile: &profile };
            let generic = lower_order_op_at(&Bpst::centered(mu, XI).unwrap(), &field, &x, &fd);
            let closed = tilde_l_phi0(&x, mu, &XI, radial(zval(&x, mu)));
            let scale = generic.max_norm().max(1.0);
            prop_assert!((closed - generic).max_norm() <= 10.0 * fd.h() * fd.h() * scale);
        }
    }
}
