use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("nodes must increase strictly from 0 to 1")]
    BadNodes,
}

/// Partition of `[0, 1]` with homogeneous Dirichlet conditions at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(n_cells: usize) -> Result<Self, MeshError> {
        if n_cells < 2 {
            return Err(MeshError::TooFewCells(n_cells));
        }
        let nodes = (0..=n_cells).map(|k| k as f64 / n_cells as f64).collect();
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, MeshError> {
        if nodes.len() < 3 {
            return Err(MeshError::TooFewCells(nodes.len().saturating_sub(1)));
        }
        let ok = nodes[0] == 0.0 && *nodes.last().unwrap() == 1.0 && nodes.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(MeshError::BadNodes);
        }
        Ok(Self { nodes })
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Interior degrees of freedom.
    pub fn dofs(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn h(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}
