//! Static neighbor structures: fully connected, square grid without
//! wraparound, and random fixed-outdegree graphs.

use std::fmt;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;

use crate::{Error, NodeId, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Clique {
        nodes: usize,
    },
    /// `side × side` nodes, 4-neighborhood clipped at the borders.
    Grid {
        side: usize,
    },
    /// Every node gets `outdegree` distinct random out-neighbors. Directed.
    RandomOutdegree {
        nodes: usize,
        outdegree: usize,
    },
}

impl TopologyKind {
    pub fn node_count(&self) -> usize {
        match *self {
            Self::Clique { nodes } | Self::RandomOutdegree { nodes, .. } => nodes,
            Self::Grid { side } => side * side,
        }
    }

    /// Short name used in config files: `clique`, `grid` or `outdegree`.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Clique { .. } => "clique",
            Self::Grid { .. } => "grid",
            Self::RandomOutdegree { .. } => "outdegree",
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Topology> {
        match *self {
            Self::Clique { nodes } => build_clique(nodes),
            Self::Grid { side } => build_grid(side),
            Self::RandomOutdegree { nodes, outdegree } => build_random_outdegree(nodes, outdegree, rng),
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Clique { nodes } => write!(f, "clique({nodes})"),
            Self::Grid { side } => write!(f, "grid({side}x{side})"),
            Self::RandomOutdegree { nodes, outdegree } => write!(f, "outdegree{outdegree}({nodes})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Adjacency {
    // Stored implicitly; a 2500-node clique would otherwise hold ~6M entries.
    Complete,
    Lists(Vec<Vec<NodeId>>),
}

/// Immutable out-neighbor structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    node_count: usize,
    adjacency: Adjacency,
}

pub fn build_clique(n: usize) -> Result<Topology> {
    if n < 2 {
        return Err(Error::InvalidTopology(format!(
            "a clique needs at least 2 nodes, got {n}"
        )));
    }
    Ok(Topology {
        kind: TopologyKind::Clique { nodes: n },
        node_count: n,
        adjacency: Adjacency::Complete,
    })
}

pub fn build_grid(side: usize) -> Result<Topology> {
    if side < 2 {
        return Err(Error::InvalidTopology(format!(
            "grid side must be at least 2, got {side}"
        )));
    }
    let id = |r: usize, c: usize| r * side + c;
    let mut lists = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let mut out = Vec::with_capacity(4);
            if r > 0 {
                out.push(id(r - 1, c));
            }
            if c > 0 {
                out.push(id(r, c - 1));
            }
            if c + 1 < side {
                out.push(id(r, c + 1));
            }
            if r + 1 < side {
                out.push(id(r + 1, c));
            }
            lists.push(out);
        }
    }
    Ok(Topology {
        kind: TopologyKind::Grid { side },
        node_count: side * side,
        adjacency: Adjacency::Lists(lists),
    })
}

pub fn build_random_outdegree<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Topology> {
    if n < 2 {
        return Err(Error::InvalidTopology(format!("need at least 2 nodes, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidTopology(format!(
            "outdegree must satisfy 1 <= k <= n - 1 (k = {k}, n = {n})"
        )));
    }
    let lists = (0..n)
        .map(|node| {
            index::sample(rng, n - 1, k)
                .into_iter()
                .map(|j| if j >= node { j + 1 } else { j })
                .collect()
        })
        .collect();
    Ok(Topology {
        kind: TopologyKind::RandomOutdegree { nodes: n, outdegree: k },
        node_count: n,
        adjacency: Adjacency::Lists(lists),
    })
}

impl Topology {
    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node < self.node_count {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node,
                node_count: self.node_count,
            })
        }
    }

    /// Out-neighbors of `node`, in generation order.
    pub fn neighbors(&self, node: NodeId) -> Result<Vec<NodeId>> {
        self.check(node)?;
        Ok(match &self.adjacency {
            Adjacency::Complete => (0..self.node_count).filter(|&j| j != node).collect(),
            Adjacency::Lists(lists) => lists[node].clone(),
        })
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        match &self.adjacency {
            Adjacency::Complete => self.node_count - 1,
            Adjacency::Lists(lists) => lists[node].len(),
        }
    }

    /// Uniform out-neighbor of `node`, or `None` when it has none.
    pub fn random_neighbor<R: Rng + ?Sized>(&self, node: NodeId, rng: &mut R) -> Option<NodeId> {
        match &self.adjacency {
            Adjacency::Complete => {
                let j = rng.gen_range(0..self.node_count - 1);
                Some(if j >= node { j + 1 } else { j })
            }
            Adjacency::Lists(lists) => {
                let out = &lists[node];
                if out.is_empty() {
                    None
                } else {
                    Some(out[rng.gen_range(0..out.len())])
                }
            }
        }
    }

    /// One line per node: `node_id: n1 n2 n3 ...`.
    pub fn to_adjacency_text(&self) -> String {
        let mut text = String::new();
        for node in 0..self.node_count {
            let _ = write!(text, "{node}:");
            let neighbors = self.neighbors(node).expect("node in range");
            for j in neighbors {
                let _ = write!(text, " {j}");
            }
            text.push('\n');
        }
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use std::collections::BTreeSet;

    fn set(v: Vec<NodeId>) -> BTreeSet<NodeId> {
        v.into_iter().collect()
    }

    fn assert_simple(t: &Topology) {
        for i in 0..t.node_count() {
            let out = t.neighbors(i).unwrap();
            assert!(!out.contains(&i), "self-loop at {i}");
            assert_eq!(set(out.clone()).len(), out.len(), "duplicate neighbor at {i}");
            assert!(out.iter().all(|&j| j < t.node_count()));
            assert_eq!(out.len(), t.out_degree(i));
        }
    }

    #[test]
    fn clique() {
        let t = build_clique(4).unwrap();
        assert_simple(&t);
        for i in 0..4 {
            assert_eq!(t.neighbors(i).unwrap().len(), 3);
        }
        assert_eq!(t.neighbors(0).unwrap(), vec![1, 2, 3]);
        assert_eq!(set(build_clique(3).unwrap().neighbors(0).unwrap()), set(vec![1, 2]));
        let big = build_clique(2500).unwrap();
        assert_eq!(big.node_count(), 2500);
        assert_eq!(big.out_degree(1234), 2499);
        assert!(build_clique(1).is_err());
    }

    #[test]
    fn clique_random_neighbor_is_uniform_and_never_self() {
        let t = build_clique(5).unwrap();
        let mut rng = rng_from_seed(1);
        let mut counts = [0usize; 5];
        for _ in 0..40_000 {
            counts[t.random_neighbor(2, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[2], 0);
        for (j, &c) in counts.iter().enumerate().filter(|(j, _)| *j != 2) {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "neighbor {j}: {c}");
        }
    }

    #[test]
    fn grid_degrees() {
        let t = build_grid(3).unwrap();
        assert_simple(&t);
        let degrees: Vec<usize> = (0..9).map(|i| t.out_degree(i)).collect();
        assert_eq!(degrees, vec![2, 3, 2, 3, 4, 3, 2, 3, 2]);
        assert_eq!(t.neighbors(0).unwrap(), vec![1, 3]);
        assert_eq!(build_grid(2).unwrap().neighbors(0).unwrap(), vec![1, 2]);
        assert_eq!(build_grid(50).unwrap().node_count(), 2500);
        assert!(build_grid(1).is_err());
    }

    #[test]
    fn grid_edge_count_and_corners() {
        for side in 2..12 {
            let t = build_grid(side).unwrap();
            let degree_sum: usize = (0..t.node_count()).map(|i| t.out_degree(i)).sum();
            assert_eq!(degree_sum, 2 * 2 * side * (side - 1));
            for corner in [0, side - 1, side * (side - 1), side * side - 1] {
                assert_eq!(t.out_degree(corner), 2);
            }
        }
    }

    #[test]
    fn undirected_kinds_are_symmetric() {
        for t in [build_clique(7).unwrap(), build_grid(5).unwrap()] {
            for i in 0..t.node_count() {
                for j in t.neighbors(i).unwrap() {
                    assert!(t.neighbors(j).unwrap().contains(&i));
                }
            }
        }
    }

    #[test]
    fn random_outdegree() {
        let mut rng = rng_from_seed(5);
        let t = build_random_outdegree(2500, 4, &mut rng).unwrap();
        assert_simple(&t);
        assert!((0..2500).all(|i| t.out_degree(i) == 4));

        let forced = build_random_outdegree(5, 4, &mut rng).unwrap();
        let clique = build_clique(5).unwrap();
        for i in 0..5 {
            assert_eq!(set(forced.neighbors(i).unwrap()), set(clique.neighbors(i).unwrap()));
        }

        let a = build_random_outdegree(300, 4, &mut rng_from_seed(9)).unwrap();
        let b = build_random_outdegree(300, 4, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
        assert!(build_random_outdegree(5, 5, &mut rng).is_err());
        assert!(build_random_outdegree(5, 0, &mut rng).is_err());
    }

    #[test]
    fn out_of_range_node() {
        let t = build_grid(2).unwrap();
        assert_eq!(t.neighbors(4), Err(Error::NodeOutOfRange { node: 4, node_count: 4 }));
    }

    #[test]
    fn adjacency_export() {
        let text = build_grid(2).unwrap().to_adjacency_text();
        assert_eq!(text, "0: 1 2\n1: 0 3\n2: 0 3\n3: 1 2\n");
    }
}
