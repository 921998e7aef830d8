//! Radial grids for the equivariant flow.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MIN_NODES: usize = 64;
/// Largest allowed ratio between neighbouring spacings in `ln r`.
pub const MAX_SPACING_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GridLaw {
    /// `r_k = exp(ln r_min + k h)`.
    LogUniform { r_min: f64, r_max: f64 },
    /// Arbitrary increasing nodes.
    Tabulated,
}

impl GridLaw {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LogUniform { .. } => "log-uniform",
            Self::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    law: GridLaw,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self::log_uniform(1e-5, 50.0, 2048).expect("default grid is valid")
    }
}

impl RadialGrid {
    pub fn log_uniform(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_min > 0.0) || !(r_max > r_min) || !r_max.is_finite() {
            return Err(Error::InvalidArgument(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n < MIN_NODES {
            return Err(Error::GridTooCoarse(format!("{n} nodes, at least {MIN_NODES} required")));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|k| (a + k as f64 * h).exp()).collect();
        nodes[0] = r_min;
        nodes[n - 1] = r_max;
        Ok(Self { nodes, law: GridLaw::LogUniform { r_min, r_max } })
    }

    pub fn tabulated(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::GridTooCoarse(format!("{} nodes, at least {MIN_NODES} required", nodes.len())));
        }
        if !(nodes[0] > 0.0) || nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument("grid nodes must be positive, finite and strictly increasing".into()));
        }
        let grid = Self { nodes, law: GridLaw::Tabulated };
        let steps = grid.log_steps();
        if let Some(w) = steps.windows(2).find(|w| w[1] / w[0] > MAX_SPACING_RATIO || w[0] / w[1] > MAX_SPACING_RATIO) {
            return Err(Error::GridTooCoarse(format!("neighbouring spacings {} and {} differ too much", w[0], w[1])));
        }
        Ok(grid)
    }

    /// Rebuilds a grid from stored nodes and a law tag, keeping the nodes verbatim.
    pub fn from_parts(nodes: Vec<f64>, law: GridLaw) -> Result<Self> {
        let mut g = Self::tabulated(nodes)?;
        g.law = law;
        Ok(g)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn law(&self) -> GridLaw {
        self.law
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `ln r_{k+1} - ln r_k`.
    pub fn log_steps(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
    }

    /// The constant step in `ln r` of a log-uniform grid.
    pub fn uniform_step(&self) -> Option<f64> {
        match self.law {
            GridLaw::LogUniform { r_min, r_max } => Some((r_max.ln() - r_min.ln()) / (self.len() - 1) as f64),
            GridLaw::Tabulated => None,
        }
    }

    /// Same bounds with the spacing halved.
    pub fn refined(&self) -> Result<Self> {
        match self.law {
            GridLaw::LogUniform { r_min, r_max } => Self::log_uniform(r_min, r_max, 2 * self.len() - 1),
            GridLaw::Tabulated => {
                let mut nodes = Vec::with_capacity(2 * self.len() - 1);
                for w in self.nodes.windows(2) {
                    nodes.push(w[0]);
                    nodes.push((w[0] * w[1]).sqrt());
                }
                nodes.push(self.r_max());
                Self::tabulated(nodes)
            }
        }
    }
}
