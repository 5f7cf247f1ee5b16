use crate::error::{invalid, Result};

/// Quasi-uniform periodic partition of `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    h_min: f64,
    h_max: f64,
}

const MAX_MESH_RATIO: f64 = 10.0;

impl Mesh {
    pub fn uniform(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(invalid("mesh needs at least one cell"));
        }
        let n = cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|i| i as f64 / n).collect();
        nodes[cells] = 1.0;
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("mesh needs at least one cell"));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(invalid("mesh must span [0, 1]"));
        }
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if widths.iter().any(|&h| !(h > 0.0)) {
            return Err(invalid("mesh cells must have positive width"));
        }
        let h_min = widths.iter().copied().fold(f64::INFINITY, f64::min);
        let h_max = widths.iter().copied().fold(0.0, f64::max);
        if h_max / h_min > MAX_MESH_RATIO {
            return Err(invalid(format!(
                "mesh is not quasi-uniform: h_max / h_min = {}",
                h_max / h_min
            )));
        }
        Ok(Self {
            nodes,
            h_min,
            h_max,
        })
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn left(&self, cell: usize) -> f64 {
        self.nodes[cell]
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    pub fn center(&self, cell: usize) -> f64 {
        0.5 * (self.nodes[cell] + self.nodes[cell + 1])
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Physical coordinate of reference point `xi` in `cell`.
    pub fn map(&self, cell: usize, xi: f64) -> f64 {
        self.center(cell) + 0.5 * self.width(cell) * xi
    }

    /// Cell containing `x` (wrapped into `[0, 1)`) and its reference coordinate.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let x = x.rem_euclid(1.0);
        let cell = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.cells() - 1),
            Err(i) => i.saturating_sub(1).min(self.cells() - 1),
        };
        let xi = (2.0 * (x - self.center(cell)) / self.width(cell)).clamp(-1.0, 1.0);
        (cell, xi)
    }

    pub fn left_neighbour(&self, cell: usize) -> usize {
        if cell == 0 {
            self.cells() - 1
        } else {
            cell - 1
        }
    }

    pub fn right_neighbour(&self, cell: usize) -> usize {
        if cell + 1 == self.cells() {
            0
        } else {
            cell + 1
        }
    }

    /// Averaged width used by interface terms; interface `i` sits at `nodes[i]`
    /// between cells `i - 1` (periodically) and `i`.
    pub fn interface_width(&self, interface: usize) -> f64 {
        let right = interface % self.cells();
        0.5 * (self.width(self.left_neighbour(right)) + self.width(right))
    }
}
