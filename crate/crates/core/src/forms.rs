//! `Im H`-valued one- and two-forms on `R^4`.

use crate::quaternion::ImQuaternion;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Neg, Sub};

/// A point of `R^4`.
pub type Point = [f64; 4];

/// `sum_i A_i dx_i`; component `i` is the coefficient of `dx_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OneForm(pub [ImQuaternion; 4]);

impl OneForm {
    pub const ZERO: Self = Self([ImQuaternion::ZERO; 4]);

    pub fn scale(self, s: f64) -> Self {
        Self(self.0.map(|c| c.scale(s)))
    }

    /// `sum_i <A_i, B_i>`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.dot(*b)).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.dot(self)
    }

    /// Largest component norm.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ImQuaternion> {
        self.0.iter()
    }
}

impl Index<usize> for OneForm {
    type Output = ImQuaternion;
    fn index(&self, i: usize) -> &ImQuaternion {
        &self.0[i]
    }
}

impl IndexMut<usize> for OneForm {
    fn index_mut(&mut self, i: usize) -> &mut ImQuaternion {
        &mut self.0[i]
    }
}

impl Add for OneForm {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for OneForm {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for OneForm {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Ordered index pairs `(i, j)`, `i < j`, in storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn pair_slot(i: usize, j: usize) -> Option<(usize, f64)> {
    if i == j {
        return None;
    }
    let (lo, hi, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
    PAIRS.iter().position(|&p| p == (lo, hi)).map(|s| (s, sign))
}

/// `sum_{i<j} F_ij dx_i ^ dx_j`, stored for the six pairs in [`PAIRS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoForm(pub [ImQuaternion; 6]);

impl TwoForm {
    pub const ZERO: Self = Self([ImQuaternion::ZERO; 6]);

    /// Build from a full antisymmetric accessor `(i, j) -> F_ij` evaluated for `i < j`.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> ImQuaternion) -> Self {
        Self(PAIRS.map(|(i, j)| f(i, j)))
    }

    /// `F_ij` for any ordered pair (zero-based); `get(j, i) == -get(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> ImQuaternion {
        match pair_slot(i, j) {
            Some((s, sign)) => self.0[s].scale(sign),
            None => ImQuaternion::ZERO,
        }
    }

    /// Set `F_ij`, storing `-value` if `i > j`.
    pub fn set(&mut self, i: usize, j: usize, value: ImQuaternion) {
        if let Some((s, sign)) = pair_slot(i, j) {
            self.0[s] = value.scale(sign);
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Self(self.0.map(|c| c.scale(s)))
    }

    /// `sum_{i<j} <F_ij, F_ij>`.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Interior product with a vector: `F(V, .)_j = sum_r V_r F_rj`.
    pub fn contract(&self, v: &Point) -> OneForm {
        OneForm(std::array::from_fn(|j| {
            (0..4).fold(ImQuaternion::ZERO, |acc, r| acc + self.get(r, j).scale(v[r]))
        }))
    }
}

impl Add for TwoForm {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for TwoForm {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

/// The anti-self-dual defect `max(|F12 - F34|, |F13 - F42|, |F14 - F23|)`.
pub fn selfdual_residual(f: &TwoForm) -> f64 {
    let d = |a: (usize, usize), b: (usize, usize)| (f.get(a.0, a.1) - f.get(b.0, b.1)).norm();
    d((0, 1), (2, 3)).max(d((0, 2), (3, 1))).max(d((0, 3), (1, 2)))
}

/// The constant self-dual form `dx ^ dx-bar`.
pub fn dx_wedge_dxbar() -> TwoForm {
    let (i, j, k) = (ImQuaternion::I, ImQuaternion::J, ImQuaternion::K);
    let mut f = TwoForm::ZERO;
    f.set(0, 1, i.scale(-2.0));
    f.set(2, 3, i.scale(-2.0));
    f.set(0, 2, j.scale(-2.0));
    f.set(3, 1, j.scale(-2.0));
    f.set(0, 3, k.scale(-2.0));
    f.set(1, 2, k.scale(-2.0));
    f
}
