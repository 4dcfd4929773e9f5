//! Discrete monotone families of normed spaces.
//!
//! A family is a time grid with one finite-dimensional normed space per node
//! and forward transition maps between adjacent nodes. The transition between
//! any ordered pair of nodes is the composition of the adjacent maps, unless
//! an explicit matrix was registered for that pair.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::norm::NormedNode;
use crate::report::{VerificationReport, Witness};

/// Forward map between two node spaces.
#[derive(Clone, Debug, PartialEq)]
pub enum Transition {
    Identity,
    /// Keeps coordinates where `keep` is true and zeroes the rest.
    Mask(Vec<bool>),
    /// Dense matrix, `rows = target dim`, `cols = source dim`.
    Dense(DMatrix<f64>),
}

impl Transition {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Transition::Identity => x.clone(),
            Transition::Mask(keep) => DVector::from_iterator(
                x.len(),
                x.iter().zip(keep).map(|(a, k)| if *k { *a } else { 0.0 }),
            ),
            Transition::Dense(m) => m * x,
        }
    }

    fn target_dim(&self, source: usize) -> usize {
        match self {
            Transition::Dense(m) => m.nrows(),
            _ => source,
        }
    }

    fn source_dim(&self) -> Option<usize> {
        match self {
            Transition::Identity => None,
            Transition::Mask(keep) => Some(keep.len()),
            Transition::Dense(m) => Some(m.ncols()),
        }
    }
}

/// Whether stored time runs with the physical time of the underlying
/// construction or against it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Forward,
    Reversed,
}

#[derive(Clone, Debug)]
pub struct MonotoneFamily {
    label: String,
    grid: TimeGrid,
    nodes: Vec<NormedNode>,
    coords: Vec<Vec<f64>>,
    adjacent: Vec<Transition>,
    explicit: BTreeMap<(usize, usize), DMatrix<f64>>,
    orientation: Orientation,
}

impl MonotoneFamily {
    pub fn new(
        label: impl Into<String>,
        grid: TimeGrid,
        nodes: Vec<NormedNode>,
        adjacent: Vec<Transition>,
    ) -> Result<Self> {
        if nodes.len() != grid.len() {
            return Err(Error::param(format!(
                "{} node spaces for a grid of {} nodes",
                nodes.len(),
                grid.len()
            )));
        }
        if adjacent.len() + 1 != nodes.len() {
            return Err(Error::param(format!(
                "{} adjacent transitions for {} nodes",
                adjacent.len(),
                nodes.len()
            )));
        }
        for (k, tr) in adjacent.iter().enumerate() {
            let src = nodes[k].dim();
            if let Some(d) = tr.source_dim() {
                if d != src {
                    return Err(Error::DimensionMismatch {
                        expected: src,
                        found: d,
                    });
                }
            }
            let dst = nodes[k + 1].dim();
            if tr.target_dim(src) != dst {
                return Err(Error::DimensionMismatch {
                    expected: dst,
                    found: tr.target_dim(src),
                });
            }
        }
        let coords = nodes
            .iter()
            .map(|n| (0..n.dim()).map(|k| k as f64).collect())
            .collect();
        Ok(Self {
            label: label.into(),
            grid,
            nodes,
            coords,
            adjacent,
            explicit: BTreeMap::new(),
            orientation: Orientation::Forward,
        })
    }

    /// Every node carries the same space and all transitions are identities.
    pub fn constant(label: impl Into<String>, grid: TimeGrid, node: NormedNode) -> Self {
        let n = grid.len();
        Self::new(
            label,
            grid,
            vec![node; n],
            vec![Transition::Identity; n.saturating_sub(1)],
        )
        .expect("constant family is well formed")
    }

    /// Spatial coordinate of every vector entry, per node (used by samplers).
    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.nodes.len() {
            return Err(Error::param("one coordinate list per node expected"));
        }
        for (c, node) in coords.iter().zip(&self.nodes) {
            if c.len() != node.dim() {
                return Err(Error::DimensionMismatch {
                    expected: node.dim(),
                    found: c.len(),
                });
            }
        }
        self.coords = coords;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    /// Registers an explicit transition matrix for the pair `from <= to`,
    /// overriding the composed adjacent maps.
    pub fn with_explicit_transition(
        mut self,
        from: usize,
        to: usize,
        matrix: DMatrix<f64>,
    ) -> Result<Self> {
        self.grid.check_index(to)?;
        if from > to {
            return Err(Error::BackwardTransition { from, to });
        }
        if matrix.ncols() != self.nodes[from].dim() || matrix.nrows() != self.nodes[to].dim() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes[to].dim() * self.nodes[from].dim(),
                found: matrix.len(),
            });
        }
        self.explicit.insert((from, to), matrix);
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &NormedNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[NormedNode] {
        &self.nodes
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    pub fn adjacent(&self) -> &[Transition] {
        &self.adjacent
    }

    pub fn explicit_transitions(&self) -> &BTreeMap<(usize, usize), DMatrix<f64>> {
        &self.explicit
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dim(&self, i: usize) -> usize {
        self.nodes[i].dim()
    }

    /// `‖x‖_{t_node}`.
    pub fn eval_norm(&self, node: usize, x: &DVector<f64>) -> Result<f64> {
        self.grid.check_index(node)?;
        self.nodes[node].norm(x)
    }

    /// `N(t_i, v)` for a core vector `v` given in the first node's space.
    pub fn core_norm(&self, node: usize, v: &DVector<f64>) -> Result<f64> {
        let pushed = self.apply_transition(0, node, v)?;
        self.eval_norm(node, &pushed)
    }

    /// Image of `x ∈ X_from` in `X_to`.
    pub fn apply_transition(&self, from: usize, to: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.grid.check_index(from)?;
        self.grid.check_index(to)?;
        if from > to {
            return Err(Error::BackwardTransition { from, to });
        }
        if x.len() != self.dim(from) {
            return Err(Error::DimensionMismatch {
                expected: self.dim(from),
                found: x.len(),
            });
        }
        Ok(self.push(from, to, x))
    }

    /// Unchecked push; callers guarantee `from <= to` and dimensions.
    pub(crate) fn push(&self, from: usize, to: usize, x: &DVector<f64>) -> DVector<f64> {
        if let Some(m) = self.explicit.get(&(from, to)) {
            return m * x;
        }
        let mut y = x.clone();
        for tr in &self.adjacent[from..to] {
            y = tr.apply(&y);
        }
        y
    }

    /// One adjacent step `P(k, k+1)`.
    pub(crate) fn step(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        self.adjacent[k].apply(x)
    }

    pub(crate) fn has_explicit(&self) -> bool {
        !self.explicit.is_empty()
    }

    /// `[x, P(from, from+1) x, …, P(from, n-1) x]`.
    pub fn orbit(&self, from: usize, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.len();
        let mut out = Vec::with_capacity(n - from);
        if self.has_explicit() {
            for to in from..n {
                out.push(self.push(from, to, x));
            }
        } else {
            let mut y = x.clone();
            for k in from..n {
                if k > from {
                    y = self.step(k - 1, &y);
                }
                out.push(y.clone());
            }
        }
        out
    }

    /// `P(from, to)` as a dense matrix.
    pub fn transition_matrix(&self, from: usize, to: usize) -> Result<DMatrix<f64>> {
        self.grid.check_index(to)?;
        if from > to {
            return Err(Error::BackwardTransition { from, to });
        }
        let src = self.dim(from);
        let mut m = DMatrix::zeros(self.dim(to), src);
        for c in 0..src {
            let mut e = DVector::zeros(src);
            e[c] = 1.0;
            m.set_column(c, &self.push(from, to, &e));
        }
        Ok(m)
    }

    /// Sum of `x_i ∈ X_{t_i}` and `x_j ∈ X_{t_j}`, landing in the later space.
    pub fn cross_time_add(
        &self,
        i: usize,
        x_i: &DVector<f64>,
        j: usize,
        x_j: &DVector<f64>,
    ) -> Result<(usize, DVector<f64>)> {
        for (idx, x) in [(i, x_i), (j, x_j)] {
            self.grid.check_index(idx)?;
            if x.len() != self.dim(idx) {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(idx),
                    found: x.len(),
                });
            }
        }
        if i <= j {
            Ok((j, self.push(i, j, x_i) + x_j))
        } else {
            Ok((i, x_i + self.push(j, i, x_j)))
        }
    }

    pub(crate) fn random_vector(&self, node: usize, rng: &mut impl Rng) -> DVector<f64> {
        let mut x = DVector::from_fn(self.dim(node), |_, _| rng.gen_range(-1.0..1.0));
        self.nodes[node].project_to_active(&mut x);
        x
    }

    /// Fuzzes the family axioms: monotonicity of core norms, contraction of
    /// transitions and the semigroup law. Violations are reported, not raised.
    pub fn check(&self, samples: usize, seed: u64, tolerance: f64) -> VerificationReport {
        check_family(self, samples, seed, tolerance)
    }
}

struct Worst {
    value: f64,
    pair: Vec<usize>,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            pair: Vec::new(),
        }
    }

    fn offer(&mut self, value: f64, pair: &[usize]) {
        if value > self.value {
            self.value = value;
            self.pair = pair.to_vec();
        }
    }
}

pub fn check_family(
    family: &MonotoneFamily,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = family.len();
    let mut mono = Worst::new();
    let mut contraction = Worst::new();
    let mut semigroup = Worst::new();

    let explicit: Vec<(usize, usize)> = family.explicit.keys().copied().collect();

    for _ in 0..samples {
        // N(t_i, v) >= N(t_j, v) for i <= j on a core vector.
        let v = family.random_vector(0, &mut rng);
        let norms: Vec<f64> = family
            .orbit(0, &v)
            .iter()
            .enumerate()
            .map(|(i, x)| family.nodes[i].norm_unchecked(x.as_slice()))
            .collect();
        let mut best = (norms[0], 0usize);
        for (j, &nj) in norms.iter().enumerate().skip(1) {
            mono.offer(nj - best.0, &[best.1, j]);
            if nj < best.0 {
                best = (nj, j);
            }
        }

        // Contraction on adjacent pairs, explicit pairs and one random pair.
        let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect();
        pairs.extend(explicit.iter().copied());
        if n > 2 {
            let a = rng.gen_range(0..n - 1);
            let b = rng.gen_range(a + 1..n);
            pairs.push((a, b));
        }
        for (a, b) in pairs {
            let x = family.random_vector(a, &mut rng);
            let before = family.nodes[a].norm_unchecked(x.as_slice());
            let after = family.nodes[b].norm_unchecked(family.push(a, b, &x).as_slice());
            contraction.offer(after - before, &[a, b]);
        }

        // P(i,k) = P(j,k) P(i,j), including the degenerate i == j case.
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(i..n);
        let k = rng.gen_range(j..n);
        let mut triples = vec![(i, j, k), (i, i, k)];
        for &(a, b) in &explicit {
            triples.push((a, b, b));
            triples.push((a, a, b));
            triples.push((a, b, n - 1));
        }
        for (a, b, c) in triples {
            let x = family.random_vector(a, &mut rng);
            let direct = family.push(a, c, &x);
            let composed = family.push(b, c, &family.push(a, b, &x));
            semigroup.offer((direct - composed).amax(), &[a, b, c]);
            let same = family.push(a, a, &x);
            semigroup.offer((same - &x).amax(), &[a, a, a]);
        }
    }

    let (worst_name, worst) = [
        ("monotonicity", &mono),
        ("contraction", &contraction),
        ("semigroup", &semigroup),
    ]
    .into_iter()
    .fold(("monotonicity", &mono), |acc, cur| {
        if cur.1.value > acc.1.value {
            cur
        } else {
            acc
        }
    });
    let witness = (worst.value > tolerance).then(|| {
        Witness::new(
            worst.pair.clone(),
            format!("{worst_name} violated by {:.3e}", worst.value),
        )
    });
    VerificationReport::from_residual(
        format!("family_axioms[{}]", family.label),
        worst.value,
        tolerance,
        witness,
    )
    .metric("monotonicity", mono.value)
    .metric("contraction", contraction.value)
    .metric("semigroup", semigroup.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Exponent;

    fn two_node(weights: [f64; 2]) -> MonotoneFamily {
        let grid = TimeGrid::uniform(0.0, 1.0, 2).unwrap();
        let nodes = weights
            .iter()
            .map(|&w| NormedNode::weighted_lq(Exponent::TWO, vec![w; 3], vec![true; 3]).unwrap())
            .collect();
        MonotoneFamily::new("two", grid, nodes, vec![Transition::Identity]).unwrap()
    }

    #[test]
    fn identity_transition_at_same_node() {
        let fam = two_node([2.0, 1.0]);
        let x = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(fam.apply_transition(1, 1, &x).unwrap(), x);
    }

    #[test]
    fn backward_transition_rejected() {
        let fam = two_node([2.0, 1.0]);
        let x = DVector::zeros(3);
        assert!(matches!(
            fam.apply_transition(1, 0, &x),
            Err(Error::BackwardTransition { from: 1, to: 0 })
        ));
    }

    #[test]
    fn cross_time_add_inverse_and_neutral() {
        let grid = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let node = NormedNode::euclidean(3);
        let fam = MonotoneFamily::new(
            "m",
            grid,
            vec![node; 3],
            vec![
                Transition::Mask(vec![true, true, false]),
                Transition::Mask(vec![true, false, false]),
            ],
        )
        .unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (k, s) = fam.cross_time_add(1, &x, 1, &(-&x)).unwrap();
        assert_eq!(k, 1);
        assert_eq!(s, DVector::zeros(3));
        let (k, s) = fam.cross_time_add(0, &x, 2, &DVector::zeros(3)).unwrap();
        assert_eq!(k, 2);
        assert_eq!(s, DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let y = DVector::from_vec(vec![-0.5, 0.25, 4.0]);
        assert_eq!(
            fam.cross_time_add(0, &x, 2, &y).unwrap(),
            fam.cross_time_add(2, &y, 0, &x).unwrap()
        );
    }

    #[test]
    fn swapped_norms_flag_monotonicity() {
        let fam = two_node([1.0, 2.0]);
        let report = fam.check(20, 42, 1e-12);
        assert!(!report.passed());
        assert!(report.metrics["monotonicity"] > 0.0);
        let w = report.witness.unwrap();
        assert_eq!(w.indices, vec![0, 1]);
    }

    #[test]
    fn half_identity_self_map_breaks_semigroup() {
        let fam = two_node([2.0, 1.0])
            .with_explicit_transition(0, 0, DMatrix::identity(3, 3) * 0.5)
            .unwrap();
        let report = fam.check(10, 42, 1e-12);
        assert!(report.metrics["semigroup"] > 0.1);
        assert!(!report.passed());
        assert!(report.witness.unwrap().note.contains("semigroup"));
    }

    #[test]
    fn dimension_checks_on_construction() {
        let grid = TimeGrid::uniform(0.0, 1.0, 2).unwrap();
        let nodes = vec![NormedNode::euclidean(3), NormedNode::euclidean(2)];
        assert!(MonotoneFamily::new("bad", grid.clone(), nodes.clone(), vec![Transition::Identity]).is_err());
        let ok = MonotoneFamily::new(
            "ok",
            grid,
            nodes,
            vec![Transition::Dense(DMatrix::from_row_slice(2, 3, &[1., 0., 0., 0., 1., 0.]))],
        );
        assert!(ok.is_ok());
    }
}
