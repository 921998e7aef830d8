//! Central finite differences for `OneForm`-valued maps on `R^4`.

use crate::error::{Error, Result};
use crate::forms::{OneForm, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FdOrder {
    #[default]
    Second,
    Fourth,
}

/// Step and stencil order. Second derivatives are nested first differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiff {
    h: f64,
    order: FdOrder,
}

impl Default for FiniteDiff {
    fn default() -> Self {
        Self { h: 1e-3, order: FdOrder::Second }
    }
}

fn shifted(x: &Point, i: usize, d: f64) -> Point {
    let mut y = *x;
    y[i] += d;
    y
}

impl FiniteDiff {
    pub fn new(h: f64) -> Result<Self> {
        Self::with_order(h, FdOrder::Second)
    }

    pub fn with_order(h: f64, order: FdOrder) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::NonPositiveStep(h));
        }
        Ok(Self { h, order })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn order(&self) -> FdOrder {
        self.order
    }

    pub fn halved(&self) -> Self {
        Self { h: 0.5 * self.h, order: self.order }
    }

    /// `d/dx_i f(x)`.
    pub fn d<F: Fn(&Point) -> OneForm + ?Sized>(&self, f: &F, x: &Point, i: usize) -> OneForm {
        let h = self.h;
        match self.order {
            FdOrder::Second => (f(&shifted(x, i, h)) - f(&shifted(x, i, -h))).scale(0.5 / h),
            FdOrder::Fourth => {
                let a = f(&shifted(x, i, h)) - f(&shifted(x, i, -h));
                let b = f(&shifted(x, i, 2.0 * h)) - f(&shifted(x, i, -2.0 * h));
                (a.scale(8.0) - b).scale(1.0 / (12.0 * h))
            }
        }
    }

    /// All four partials, `out[i] = d_i f(x)`.
    pub fn gradient<F: Fn(&Point) -> OneForm + ?Sized>(&self, f: &F, x: &Point) -> [OneForm; 4] {
        std::array::from_fn(|i| self.d(f, x, i))
    }

    /// `d_i d_j f(x)` as a nested first difference.
    pub fn dd<F: Fn(&Point) -> OneForm + ?Sized>(&self, f: &F, x: &Point, i: usize, j: usize) -> OneForm {
        self.d(&|y: &Point| self.d(f, y, j), x, i)
    }

    /// Componentwise Laplacian.
    pub fn laplacian<F: Fn(&Point) -> OneForm + ?Sized>(&self, f: &F, x: &Point) -> OneForm {
        (0..4).fold(OneForm::ZERO, |acc, i| acc + self.dd(f, x, i, i))
    }
}
