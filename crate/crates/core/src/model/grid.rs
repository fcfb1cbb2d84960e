use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid must start at 0 and be strictly increasing (node {0})")]
    NotIncreasing(usize),
    #[error("spacing ratio {ratio} exceeds 2 at node {node}")]
    RatioTooLarge { node: usize, ratio: f64 },
    #[error("maximum refinement depth {0} reached")]
    MaxDepthExceeded(u32),
}

/// Radial nodes `0 = r_0 < r_1 < ... < r_N = R` built from a uniform base
/// grid by nested dyadic refinement toward the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    base_spacing: f64,
    /// Right end of each refinement level, finest last. Empty for a uniform grid.
    level_extents: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(radius: f64, cells: usize) -> Result<Self, GridError> {
        if cells < 3 {
            return Err(GridError::TooFewNodes(cells + 1));
        }
        let h = radius / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        nodes[cells] = radius;
        Ok(Self { nodes, base_spacing: h, level_extents: Vec::new() })
    }

    /// Arbitrary nodes; checked against the grid invariants. Treated as
    /// level 0 with `base_spacing` equal to the largest cell.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, GridError> {
        if nodes.len() < 4 {
            return Err(GridError::TooFewNodes(nodes.len()));
        }
        let base = nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let g = Self { nodes, base_spacing: base, level_extents: Vec::new() };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.nodes[0] != 0.0 {
            return Err(GridError::NotIncreasing(0));
        }
        for i in 1..self.nodes.len() {
            if !(self.nodes[i] > self.nodes[i - 1]) {
                return Err(GridError::NotIncreasing(i));
            }
        }
        for i in 1..self.nodes.len() - 1 {
            let hm = self.nodes[i] - self.nodes[i - 1];
            let hp = self.nodes[i + 1] - self.nodes[i];
            let ratio = (hp / hm).max(hm / hp);
            if ratio > 2.0 + 1e-9 {
                return Err(GridError::RatioTooLarge { node: i, ratio });
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of cells (the node count is `cells() + 1`).
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn level(&self) -> u32 {
        self.level_extents.len() as u32
    }

    pub fn base_spacing(&self) -> f64 {
        self.base_spacing
    }

    pub fn h_min(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn level_extents(&self) -> &[f64] {
        &self.level_extents
    }

    /// Adds one refinement level: every cell inside `[0, extent]` is split at
    /// its midpoint, where `extent` is `cells_per_level` new cells long but
    /// never beyond the current finest level. Returns the new grid and, for
    /// each new node, whether it is one of the inserted midpoints.
    pub fn refine(&self, cells_per_level: usize, max_depth: u32) -> Result<(Self, Vec<bool>), GridError> {
        if self.level() >= max_depth {
            return Err(GridError::MaxDepthExceeded(max_depth));
        }
        let h = self.h_min();
        let finest_extent = self.level_extents.last().copied().unwrap_or(self.radius());
        let want = cells_per_level as f64 * 0.5 * h;
        let extent = want.min(finest_extent);
        let mut nodes = Vec::with_capacity(self.nodes.len() + cells_per_level);
        let mut inserted = Vec::with_capacity(self.nodes.len() + cells_per_level);
        let mut new_extent = 0.0;
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            inserted.push(false);
            if w[1] <= extent * (1.0 + 1e-12) {
                nodes.push(0.5 * (w[0] + w[1]));
                inserted.push(true);
                new_extent = w[1];
            }
        }
        nodes.push(self.radius());
        inserted.push(false);
        let mut level_extents = self.level_extents.clone();
        level_extents.push(new_extent);
        let g = Self { nodes, base_spacing: self.base_spacing, level_extents };
        g.validate()?;
        Ok((g, inserted))
    }
}

/// Quadrature and stencil weights shared by the energy functionals and the
/// flow operator. For cells `[r_i, r_{i+1}]` and dual cells around nodes:
///
/// * `face[i]`: mean of `r^{m-1}` over cell `i`, so that
///   `face[i] * (dtheta)^2 / h` integrates `theta_r^2 r^{m-1}` exactly for
///   piecewise linear `theta`;
/// * `volume[i]`: `int r^{m-1}` over the dual cell of node `i`;
/// * `zero_order[i]`: weight of `(m-1) sin^2(theta_i) / r_i^2` chosen so the
///   discrete linear operator annihilates `theta = r` exactly at every
///   interior node, which makes the stencil consistent up to the origin.
#[derive(Debug, Clone)]
pub struct CellWeights {
    pub face: Vec<f64>,
    pub volume: Vec<f64>,
    pub zero_order: Vec<f64>,
}

impl CellWeights {
    pub fn new(grid: &RadialGrid, m: u32) -> Self {
        let r = grid.nodes();
        let n = r.len();
        let mf = m as f64;
        let pw = |x: f64| x.powi(m as i32);
        let face: Vec<f64> = r
            .windows(2)
            .map(|w| (pw(w[1]) - pw(w[0])) / (mf * (w[1] - w[0])))
            .collect();
        let mut volume = vec![0.0; n];
        for i in 0..n {
            let lo = if i == 0 { 0.0 } else { 0.5 * (r[i - 1] + r[i]) };
            let hi = if i == n - 1 { r[i] } else { 0.5 * (r[i] + r[i + 1]) };
            volume[i] = (pw(hi) - pw(lo)) / mf;
        }
        let mut zero_order = vec![0.0; n];
        for i in 1..n - 1 {
            zero_order[i] = (face[i] - face[i - 1]) / r[i];
        }
        // Boundary half cell: (m-1) * int r^{m-3} over [r_{N-1/2}, R].
        let lo = 0.5 * (r[n - 2] + r[n - 1]);
        let hi = r[n - 1];
        zero_order[n - 1] = if m == 2 {
            (hi / lo).ln()
        } else {
            (mf - 1.0) * (hi.powi(m as i32 - 2) - lo.powi(m as i32 - 2)) / (mf - 2.0)
        };
        Self { face, volume, zero_order }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_invariants() {
        let g = RadialGrid::uniform(2.0, 8).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.radius(), 2.0);
        assert_eq!(g.cells(), 8);
        assert_eq!(g.level(), 0);
        g.validate().unwrap();
    }

    #[test]
    fn repeated_refinement_halves_spacing() {
        let mut g = RadialGrid::uniform(1.0, 64).unwrap();
        let h0 = g.h_min();
        for k in 1..=6u32 {
            g = g.refine(32, 30).unwrap().0;
            g.validate().unwrap();
            assert_eq!(g.level(), k);
            let expected = h0 * 0.5f64.powi(k as i32);
            assert!((g.h_min() - expected).abs() < 1e-15);
        }
        assert_eq!(g.radius(), 1.0);
    }

    #[test]
    fn refinement_depth_is_bounded() {
        let g = RadialGrid::uniform(1.0, 16).unwrap();
        let g = g.refine(8, 1).unwrap().0;
        assert_eq!(g.refine(8, 1).unwrap_err(), GridError::MaxDepthExceeded(1));
    }

    #[test]
    fn rejects_bad_ratio() {
        let err = RadialGrid::from_nodes(vec![0.0, 0.1, 0.2, 0.8, 1.0]).unwrap_err();
        assert!(matches!(err, GridError::RatioTooLarge { .. }));
    }

    #[test]
    fn weights_integrate_r_power() {
        let g = RadialGrid::uniform(1.0, 50).unwrap().refine(20, 5).unwrap().0;
        for m in 2..=6u32 {
            let w = CellWeights::new(&g, m);
            let vol: f64 = w.volume.iter().sum();
            assert!((vol - 1.0 / m as f64).abs() < 1e-14);
        }
    }
}
