use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScheme {
    Uniform,
    Logarithmic,
}

/// Strictly increasing sample nodes t₀ < … < t_N with N ≥ 2 and t₀ ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    scheme: GridScheme,
}

impl Grid {
    pub fn from_nodes(nodes: Vec<f64>, scheme: GridScheme) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidParameter(format!("a grid needs at least 3 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes[0] < 0.0 {
            return Err(Error::InvalidParameter("grid nodes must be finite and non-negative".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("grid nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, scheme })
    }

    /// `steps + 1` equally spaced nodes from `start` to `stop`.
    pub fn uniform(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps < 2 || !(stop > start) {
            return Err(Error::InvalidParameter(format!(
                "uniform grid needs stop > start and at least 2 steps, got [{start}, {stop}] with {steps}"
            )));
        }
        let h = (stop - start) / steps as f64;
        let mut nodes: Vec<f64> = (0..=steps).map(|j| start + j as f64 * h).collect();
        nodes[steps] = stop;
        Self::from_nodes(nodes, GridScheme::Uniform)
    }

    /// `count` log-spaced nodes from `start` to `stop`, both positive.
    pub fn logarithmic(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start > 0.0) || !(stop > start) || count < 3 {
            return Err(Error::InvalidParameter(format!(
                "logarithmic grid needs 0 < start < stop and at least 3 nodes, got [{start}, {stop}] with {count}"
            )));
        }
        let (a, b) = (start.ln(), stop.ln());
        let mut nodes: Vec<f64> = (0..count)
            .map(|j| (a + (b - a) * j as f64 / (count - 1) as f64).exp())
            .collect();
        nodes[0] = start;
        nodes[count - 1] = stop;
        Self::from_nodes(nodes, GridScheme::Logarithmic)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Step of a uniform grid.
    pub fn step(&self) -> Result<f64> {
        match self.scheme {
            GridScheme::Uniform => Ok((self.last() - self.first()) / (self.len() - 1) as f64),
            GridScheme::Logarithmic => Err(Error::InvalidParameter("a uniform grid is required".into())),
        }
    }
}
