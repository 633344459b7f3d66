//! Site lattices with nearest-neighbour edges (open boundary conditions).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of `n` sites and a list of undirected nearest-neighbour edges.
///
/// Edges are stored as `(j, k)` with `j < k`, sorted lexicographically; this
/// ordering also fixes the gate order of the layered circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Lattice {
    /// 1D chain of `len` sites.
    pub fn chain(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("lattice.length must be >= 1".into()));
        }
        let edges = (0..len.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        Ok(Self { n: len, edges })
    }

    /// 2D `rows` x `cols` grid, row-major site order, open boundaries.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config("lattice.rows/cols must be >= 1".into()));
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((idx(r, c), idx(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((idx(r, c), idx(r + 1, c)));
                }
            }
        }
        edges.sort_unstable();
        Ok(Self {
            n: rows * cols,
            edges,
        })
    }

    /// Explicit edge list; validates ranges, distinctness, and duplicates.
    pub fn custom(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (j, k) in edges {
            if j == k {
                return Err(Error::Config(format!("lattice edge ({j},{k}) joins a site to itself")));
            }
            if j >= n || k >= n {
                return Err(Error::Config(format!(
                    "lattice edge ({j},{k}) out of range for {n} sites"
                )));
            }
            normalized.push((j.min(k), j.max(k)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("lattice has duplicate edges".into()));
        }
        Ok(Self { n, edges: normalized })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}
