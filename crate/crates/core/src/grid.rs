use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered time nodes strictly inside an open interval `(t_start, t_end)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    nodes: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    t_start: f64,
    t_end: f64,
    nodes: Vec<f64>,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.t_start, raw.t_end, raw.nodes)
    }
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, nodes: Vec<f64>) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(Error::InvalidGrid(format!(
                "empty interval ({t_start}, {t_end})"
            )));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidGrid("no nodes".into()));
        }
        for (i, &t) in nodes.iter().enumerate() {
            if !t.is_finite() || t <= t_start || t >= t_end {
                return Err(Error::InvalidGrid(format!(
                    "node {i} at {t} is not inside ({t_start}, {t_end})"
                )));
            }
        }
        if let Some(k) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!(
                "nodes {k} and {} are not strictly increasing",
                k + 1
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            nodes,
        })
    }

    /// Cell-centred uniform grid: `n` nodes at `t_start + (i + 1/2) * span / n`.
    pub fn uniform(t_start: f64, t_end: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("no nodes".into()));
        }
        let dt = (t_end - t_start) / n as f64;
        let nodes = (0..n).map(|i| t_start + (i as f64 + 0.5) * dt).collect();
        Self::new(t_start, t_end, nodes)
    }

    /// `n` equally spaced nodes from `first` to `last` inclusive.
    pub fn spanning(t_start: f64, t_end: f64, first: f64, last: f64, n: usize) -> Result<Self> {
        let nodes = match n {
            0 => Vec::new(),
            1 => vec![first],
            _ => {
                let step = (last - first) / (n - 1) as f64;
                (0..n).map(|i| first + i as f64 * step).collect()
            }
        };
        Self::new(t_start, t_end, nodes)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
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

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn cell_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Width of cell `k`, i.e. `t_{k+1} - t_k`.
    pub fn cell_width(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    pub fn cell_widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_cell_width(&self) -> f64 {
        self.cell_widths().into_iter().fold(0.0, f64::max)
    }

    pub fn min_cell_width(&self) -> f64 {
        self.cell_widths().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Distance covered by the nodes, `t_last - t_first`.
    pub fn node_span(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index,
                len: self.nodes.len(),
            })
        }
    }

    /// Composite trapezoid weights for the node window `start..=end`.
    pub fn trapezoid_weights(&self, start: usize, end: usize) -> Vec<f64> {
        let mut w = vec![0.0; end - start + 1];
        for k in start..end {
            let half = 0.5 * self.cell_width(k);
            w[k - start] += half;
            w[k + 1 - start] += half;
        }
        w
    }

    /// First node index `j <= i` with `t_j >= t_i - width`, up to rounding.
    pub fn backward_window_start(&self, i: usize, width: f64) -> usize {
        let target = self.nodes[i] - width - 1e-12 * (self.t_end - self.t_start);
        self.nodes[..=i].partition_point(|&t| t < target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_is_cell_centred() {
        let g = TimeGrid::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.125, 0.375, 0.625, 0.875]);
        assert!((g.cell_width(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_nodes_on_the_boundary() {
        assert!(TimeGrid::new(0.0, 1.0, vec![0.0, 0.5]).is_err());
        assert!(TimeGrid::new(0.0, 1.0, vec![0.5, 0.5]).is_err());
        assert!(TimeGrid::new(1.0, 0.0, vec![0.5]).is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let g = TimeGrid::new(0.0, 1.0, vec![0.1, 0.2, 0.5, 0.9]).unwrap();
        let w = g.trapezoid_weights(0, 3);
        assert!((w.iter().sum::<f64>() - 0.8).abs() < 1e-15);
        assert_eq!(g.trapezoid_weights(2, 2), vec![0.0]);
    }

    #[test]
    fn backward_window_snaps_to_nodes() {
        let g = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
        assert_eq!(g.backward_window_start(5, 0.2), 3);
        assert_eq!(g.backward_window_start(5, 10.0), 0);
    }

    #[test]
    fn deserialization_validates() {
        let bad = r#"{"t_start":0,"t_end":1,"nodes":[0.5,0.2]}"#;
        assert!(serde_json::from_str::<TimeGrid>(bad).is_err());
        let ok = r#"{"t_start":0,"t_end":1,"nodes":[0.2,0.5]}"#;
        assert_eq!(serde_json::from_str::<TimeGrid>(ok).unwrap().len(), 2);
    }
}
