//! Pairwise interaction models and cache-level simulators for gossip
//! protocols.
//!
//! The crate has two engines that are meant to be compared against each
//! other:
//!
//! * [`protocol`] simulates every node's cache for Shuffle, the simplified
//!   Newscast (push-pull, push, pull) and Cyclon, with per-message loss and
//!   non-atomic exchanges.
//! * [`model`] keeps a single presence bit per node for one observed item and
//!   updates gossiping pairs by sampling the 4×4 transition matrices built in
//!   [`pairwise`].
//!
//! [`metrics`] measures pairwise occupancy, estimates `P_inx` and `P_drop`
//! from it and aggregates run ensembles; [`experiment`] wires everything into
//! the occupancy, dissemination, model and comparison experiments.
//!
//! ```
//! use gossiplab::pairwise::{self, ChannelParams, GossipParams, ModelProbabilities,
//!     PairState, ProtocolVariant};
//!
//! let params = GossipParams::new(500, 100, 50).unwrap();
//! let probs = ModelProbabilities::new(
//!     pairwise::p_select(&params),
//!     pairwise::p_drop_shuffle_uniform(&params),
//! ).unwrap();
//! let m = pairwise::build_matrix(ProtocolVariant::Shuffle, probs, ChannelParams::LOSSLESS);
//! assert_eq!(m.get(PairState::S10, PairState::S00), 0.0);
//! assert!((m.get(PairState::S01, PairState::S01) - 0.5).abs() < 1e-12);
//! ```

pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod output;
pub mod pairwise;
pub mod protocol;
pub mod seed;
pub mod topology;

pub use error::{Error, Result};

/// Index of a node in a [`topology::Topology`].
pub type NodeId = usize;

/// Identifier of a data item (or, for Cyclon, of the node a link points to).
pub type ItemId = u32;
