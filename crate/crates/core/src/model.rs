//! Observed-item model: one presence bit per node, updated pairwise by
//! sampling a [`TransitionMatrix`].

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::pairwise::{sample_transition, PairState, TransitionMatrix};
use crate::topology::Topology;
use crate::{Error, NodeId, Result};

/// Where the observed item starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedNode {
    Fixed(NodeId),
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelNetwork {
    presence: Vec<bool>,
    seen: Vec<bool>,
    topology: Arc<Topology>,
    round: u64,
    replication: usize,
    coverage: usize,
}

pub fn init_model<R: Rng + ?Sized>(topology: Arc<Topology>, seed_node: SeedNode, rng: &mut R) -> Result<ModelNetwork> {
    let node_count = topology.node_count();
    let node = match seed_node {
        SeedNode::Fixed(node) if node < node_count => node,
        SeedNode::Fixed(node) => return Err(Error::NodeOutOfRange { node, node_count }),
        SeedNode::Random => rng.gen_range(0..node_count),
    };
    let mut presence = vec![false; node_count];
    presence[node] = true;
    Ok(ModelNetwork {
        seen: presence.clone(),
        presence,
        topology,
        round: 0,
        replication: 1,
        coverage: 1,
    })
}

impl ModelNetwork {
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn holds(&self, node: NodeId) -> bool {
        self.presence[node]
    }

    pub fn has_seen(&self, node: NodeId) -> bool {
        self.seen[node]
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn coverage(&self) -> usize {
        self.coverage
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    /// One round: every node, in random order, initiates with a uniform
    /// out-neighbor and the pair jumps to a state drawn from the matrix.
    pub fn run_round<R: Rng + ?Sized>(&mut self, matrix: &TransitionMatrix, rng: &mut R) {
        let mut order: Vec<NodeId> = (0..self.presence.len()).collect();
        order.shuffle(rng);
        for a in order {
            let Some(b) = self.topology.random_neighbor(a, rng) else {
                continue;
            };
            let pre = PairState {
                initiator: self.presence[a],
                contacted: self.presence[b],
            };
            if pre == PairState::S00 {
                // Absorbing for every variant: skip the draw.
                continue;
            }
            let post = sample_transition(matrix, pre, rng);
            self.set(a, post.initiator);
            self.set(b, post.contacted);
        }
        self.round += 1;
    }

    fn set(&mut self, node: NodeId, bit: bool) {
        if self.presence[node] != bit {
            self.presence[node] = bit;
            if bit {
                self.replication += 1;
                if !self.seen[node] {
                    self.seen[node] = true;
                    self.coverage += 1;
                }
            } else {
                self.replication -= 1;
            }
        }
    }
}
