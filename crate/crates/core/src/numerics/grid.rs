use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("a grid needs at least two nodes")]
    TooSmall,
    #[error("grid must start at 0, found {0}")]
    BadOrigin(f64),
    #[error("grid nodes must be finite and strictly increasing (index {0})")]
    NotIncreasing(usize),
}

/// Ascending time nodes starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Grid, GridError> {
        if nodes.len() < 2 {
            return Err(GridError::TooSmall);
        }
        if nodes[0] != 0.0 {
            return Err(GridError::BadOrigin(nodes[0]));
        }
        for i in 1..nodes.len() {
            if !nodes[i].is_finite() || nodes[i] <= nodes[i - 1] {
                return Err(GridError::NotIncreasing(i));
            }
        }
        Ok(Grid { nodes })
    }

    /// `n` equally spaced nodes on `[0, end]`.
    pub fn uniform(end: f64, n: usize) -> Result<Grid, GridError> {
        if n < 2 {
            return Err(GridError::TooSmall);
        }
        let last = (n - 1) as f64;
        Grid::new((0..n).map(|i| end * (i as f64 / last)).collect())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().expect("grid is non-empty")
    }

    /// Largest spacing between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// The grid with every panel split at its midpoint; node `i` of `self` is
    /// node `2i` of the result.
    pub fn refined(&self) -> Grid {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.end());
        Grid { nodes }
    }

    /// Index of the last node `<= t` (0 when `t` precedes the grid).
    pub fn locate(&self, t: f64) -> usize {
        self.nodes.partition_point(|&x| x <= t).saturating_sub(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_hits_end_exactly() {
        let g = Grid::uniform(1.0, 5).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.max_spacing(), 0.25);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(Grid::new(vec![0.0]), Err(GridError::TooSmall));
        assert_eq!(Grid::new(vec![0.5, 1.0]), Err(GridError::BadOrigin(0.5)));
        assert_eq!(Grid::new(vec![0.0, 1.0, 1.0]), Err(GridError::NotIncreasing(2)));
    }

    #[test]
    fn refinement_keeps_old_nodes_at_even_indices() {
        let g = Grid::uniform(2.0, 7).unwrap();
        let r = g.refined();
        assert_eq!(r.len(), 13);
        for (i, &t) in g.nodes().iter().enumerate() {
            assert_eq!(r.nodes()[2 * i], t);
        }
    }

    #[test]
    fn locate_finds_left_node() {
        let g = Grid::uniform(1.0, 5).unwrap();
        assert_eq!(g.locate(0.0), 0);
        assert_eq!(g.locate(0.3), 1);
        assert_eq!(g.locate(0.5), 2);
        assert_eq!(g.locate(1.0), 4);
    }
}
