use crate::error::{Error, Result};

const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// Allocation bins per resource used by [`TransitionKernel::uniform_edges`] callers by default.
pub const DEFAULT_BINS: usize = 8;

/// Type transition probabilities conditioned on the allocation bin.
///
/// `probabilities[next][now][bin]`. Bins are the cells of the product grid
/// of per-resource `bin_edges`, numbered row-major (the last resource varies
/// fastest); within a resource, cell `j` is `[e_j, e_{j+1})` and the last
/// cell is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    pub probabilities: Vec<Vec<Vec<f64>>>,
    pub bin_edges: Vec<Vec<f64>>,
}

impl TransitionKernel {
    pub fn new(probabilities: Vec<Vec<Vec<f64>>>, bin_edges: Vec<Vec<f64>>) -> Result<Self> {
        let k = TransitionKernel {
            probabilities,
            bin_edges,
        };
        k.validate()?;
        Ok(k)
    }

    /// Kernel that ignores the allocation: one bin spanning `[0, z_max]` on
    /// every resource, with `matrix[next][now]`.
    pub fn allocation_independent(matrix: Vec<Vec<f64>>, num_resources: usize, z_max: f64) -> Result<Self> {
        let probabilities = matrix.into_iter().map(|row| row.into_iter().map(|p| vec![p]).collect()).collect();
        TransitionKernel::new(probabilities, vec![vec![0.0, z_max]; num_resources])
    }

    /// `bins` equal-width cells covering `[0, z_max]`.
    pub fn uniform_edges(z_max: f64, bins: usize) -> Vec<f64> {
        (0..=bins).map(|j| if j == bins { z_max } else { z_max * j as f64 / bins as f64 }).collect()
    }

    /// Types never change.
    pub fn identity(num_theta: usize, num_resources: usize, z_max: f64) -> Self {
        let m = (0..num_theta)
            .map(|a| (0..num_theta).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        TransitionKernel::allocation_independent(m, num_resources, z_max).expect("identity is stochastic")
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_edges.is_empty() {
            return Err(Error::validation("kernel.bin_edges", "one edge list per resource is required"));
        }
        for (n, edges) in self.bin_edges.iter().enumerate() {
            if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
                return Err(Error::validation(
                    "kernel.bin_edges",
                    format!("edges of resource {n} must be finite, strictly increasing and at least two"),
                ));
            }
        }
        let t = self.probabilities.len();
        let bins = self.num_bins();
        if t == 0 || self.probabilities.iter().any(|m| m.len() != t || m.iter().any(|row| row.len() != bins)) {
            return Err(Error::validation(
                "kernel.probabilities",
                format!("shape must be |T| x |T| x {bins}"),
            ));
        }
        if self.probabilities.iter().flatten().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::validation("kernel.probabilities", "entries must lie in [0, 1]"));
        }
        for now in 0..t {
            for bin in 0..bins {
                let total: f64 = (0..t).map(|next| self.probabilities[next][now][bin]).sum();
                if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    return Err(Error::validation(
                        "kernel.probabilities",
                        format!("column (type {now}, bin {bin}) sums to {total}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn num_theta(&self) -> usize {
        self.probabilities.len()
    }

    pub fn num_resources(&self) -> usize {
        self.bin_edges.len()
    }

    /// Cells per resource.
    pub fn cells(&self) -> Vec<usize> {
        self.bin_edges.iter().map(|e| e.len() - 1).collect()
    }

    pub fn num_bins(&self) -> usize {
        self.cells().iter().product()
    }

    fn cell(&self, n: usize, z: f64) -> Result<usize> {
        let edges = &self.bin_edges[n];
        let last = edges.len() - 1;
        if !(z >= edges[0] && z <= edges[last]) {
            return Err(Error::Domain(format!(
                "allocation {z} of resource {n} outside the bin range [{}, {}]",
                edges[0], edges[last]
            )));
        }
        Ok(edges[1..last].iter().take_while(|e| **e <= z).count())
    }

    /// Bin of an allocation vector.
    pub fn bin(&self, z: &[f64]) -> Result<usize> {
        let cells = self.cells();
        let mut index = 0;
        for n in 0..cells.len() {
            index = index * cells[n] + self.cell(n, z[n])?;
        }
        Ok(index)
    }

    /// Per-resource cell indices of a bin.
    pub fn cell_indices(&self, mut bin: usize) -> Vec<usize> {
        let cells = self.cells();
        let mut out = vec![0; cells.len()];
        for n in (0..cells.len()).rev() {
            out[n] = bin % cells[n];
            bin /= cells[n];
        }
        out
    }

    /// Closed box of allocations in `bin` intersected with `[0, z_max]`;
    /// `None` when empty. Upper ends of half-open cells are the largest
    /// float below the edge.
    pub fn bin_box(&self, bin: usize, z_max: f64) -> Option<Vec<(f64, f64)>> {
        let cells = self.cell_indices(bin);
        let mut out = Vec::with_capacity(cells.len());
        for (n, j) in cells.iter().enumerate() {
            let edges = &self.bin_edges[n];
            let lo = edges[*j].max(0.0);
            let hi = if *j + 2 == edges.len() { edges[*j + 1] } else { edges[*j + 1].next_down() };
            let hi = hi.min(z_max);
            if lo > hi {
                return None;
            }
            out.push((lo, hi));
        }
        Some(out)
    }

    /// Next-type distribution of a type-`now` agent in `bin`.
    pub fn column(&self, now: usize, bin: usize) -> Vec<f64> {
        (0..self.num_theta()).map(|next| self.probabilities[next][now][bin]).collect()
    }

    /// Whether a type's transitions ignore the allocation.
    pub fn ignores_allocation(&self, now: usize) -> bool {
        let first = self.column(now, 0);
        (1..self.num_bins()).all(|b| self.column(now, b) == first)
    }

    pub fn is_allocation_independent(&self) -> bool {
        (0..self.num_theta()).all(|t| self.ignores_allocation(t))
    }
}
