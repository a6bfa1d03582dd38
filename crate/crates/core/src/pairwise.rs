//! Closed-form building blocks (`P_select`, `P_drop`) and the 4×4 pairwise
//! transition matrices for every protocol variant.
//!
//! A [`PairState`] records whether the initiator `A` and the contacted node
//! `B` hold the observed item `d`. A [`TransitionMatrix`] maps a pre-exchange
//! state to a distribution over post-exchange states. Every entry is written
//! out from its own formula; row sums of one are a property that is checked,
//! never used to fill an entry.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::{Error, Result};

/// System parameters of a gossip protocol: `n` distinct items, cache size `c`
/// and exchange buffer size `s`, with `0 < s <= c < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GossipParams {
    n: usize,
    c: usize,
    s: usize,
}

impl GossipParams {
    pub fn new(n: usize, c: usize, s: usize) -> Result<Self> {
        if s == 0 || s > c {
            return Err(Error::InvalidParams(format!(
                "exchange size must satisfy 0 < s <= c (s = {s}, c = {c})"
            )));
        }
        if c >= n {
            return Err(Error::InvalidParams(format!(
                "cache size must be smaller than the number of items (c = {c}, n = {n})"
            )));
        }
        Ok(Self { n, c, s })
    }

    /// `n = 500, c = 100, s = 50`.
    pub fn paper() -> Self {
        Self { n: 500, c: 100, s: 50 }
    }

    /// Number of distinct items in the network.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cache capacity per node.
    pub fn c(&self) -> usize {
        self.c
    }

    /// Exchange buffer size.
    pub fn s(&self) -> usize {
        self.s
    }
}

/// Channel reliability: every message is lost independently with `p_loss`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    p_loss: f64,
}

impl ChannelParams {
    pub const LOSSLESS: Self = Self { p_loss: 0.0 };

    pub fn new(p_loss: f64) -> Result<Self> {
        check_probability("p_loss", p_loss)?;
        Ok(Self { p_loss })
    }

    pub fn p_loss(&self) -> f64 {
        self.p_loss
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::LOSSLESS
    }
}

/// Joint presence of the observed item at the initiator (first bit) and the
/// contacted node (second bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairState {
    pub initiator: bool,
    pub contacted: bool,
}

impl PairState {
    pub const S00: Self = Self::new(false, false);
    pub const S01: Self = Self::new(false, true);
    pub const S10: Self = Self::new(true, false);
    pub const S11: Self = Self::new(true, true);

    /// All four states in row/column order `00, 01, 10, 11`.
    pub const ALL: [Self; 4] = [Self::S00, Self::S01, Self::S10, Self::S11];

    pub const fn new(initiator: bool, contacted: bool) -> Self {
        Self { initiator, contacted }
    }

    /// Position in [`PairState::ALL`].
    pub const fn index(self) -> usize {
        (self.initiator as usize) << 1 | self.contacted as usize
    }

    pub const fn from_index(index: usize) -> Self {
        Self::new(index & 2 != 0, index & 1 != 0)
    }

    /// The same pair seen from the other side.
    pub const fn swapped(self) -> Self {
        Self::new(self.contacted, self.initiator)
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.initiator as u8, self.contacted as u8)
    }
}

/// Row-stochastic map from pre-exchange to post-exchange [`PairState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    entries: [[f64; 4]; 4],
}

impl TransitionMatrix {
    fn zeros() -> Self {
        Self { entries: [[0.0; 4]; 4] }
    }

    fn set(&mut self, pre: PairState, post: PairState, p: f64) {
        self.entries[pre.index()][post.index()] = p;
    }

    /// `P(post | pre)`.
    pub fn get(&self, pre: PairState, post: PairState) -> f64 {
        self.entries[pre.index()][post.index()]
    }

    /// Distribution over post-states for `pre`, in [`PairState::ALL`] order.
    pub fn row(&self, pre: PairState) -> &[f64; 4] {
        &self.entries[pre.index()]
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    pub fn row_sum(&self, pre: PairState) -> f64 {
        self.row(pre).iter().sum()
    }

    /// Largest `|row sum - 1|` over the four rows.
    pub fn max_row_error(&self) -> f64 {
        PairState::ALL
            .iter()
            .map(|&pre| (self.row_sum(pre) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Protocol variants for which a transition matrix exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolVariant {
    NewscastPushPull,
    NewscastPush,
    NewscastPull,
    Shuffle,
    ShuffleLossy,
}

impl ProtocolVariant {
    pub const ALL: [Self; 5] = [
        Self::NewscastPushPull,
        Self::NewscastPush,
        Self::NewscastPull,
        Self::Shuffle,
        Self::ShuffleLossy,
    ];

    /// Only the lossy Shuffle matrix reads the channel parameters.
    pub fn uses_channel(self) -> bool {
        matches!(self, Self::ShuffleLossy)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NewscastPushPull => "newscast-pushpull",
            Self::NewscastPush => "newscast-push",
            Self::NewscastPull => "newscast-pull",
            Self::Shuffle => "shuffle",
            Self::ShuffleLossy => "shuffle-lossy",
        }
    }
}

impl fmt::Display for ProtocolVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown matrix variant `{s}`")))
    }
}

/// The two building blocks every transition probability is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelProbabilities {
    p_select: f64,
    p_drop: f64,
}

impl ModelProbabilities {
    pub fn new(p_select: f64, p_drop: f64) -> Result<Self> {
        check_probability("p_select", p_select)?;
        check_probability("p_drop", p_drop)?;
        Ok(Self { p_select, p_drop })
    }

    pub fn p_select(&self) -> f64 {
        self.p_select
    }

    pub fn p_drop(&self) -> f64 {
        self.p_drop
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// Probability that a cached item is placed in the exchange buffer: `s/c`.
pub fn p_select(params: &GossipParams) -> f64 {
    params.s as f64 / params.c as f64
}

/// Newscast drop probability given `k` duplicates between the received buffer
/// and the receiver's cache: `1 - c/(c + s - k)`.
pub fn p_drop_newscast_given_k(params: &GossipParams, k: usize) -> Result<f64> {
    if k > params.s {
        return Err(Error::DuplicatesOutOfRange { k, s: params.s });
    }
    let c = params.c as f64;
    let s = params.s as f64;
    Ok(1.0 - c / (c + s - k as f64))
}

/// Newscast drop probability under uniformly distributed items, i.e. with the
/// mean duplicate count `s*c/n`: `1 / (1 + c*n / (s*(n - c)))`.
pub fn p_drop_newscast(params: &GossipParams) -> f64 {
    let (n, c, s) = (params.n as f64, params.c as f64, params.s as f64);
    1.0 / (1.0 + c * n / (s * (n - c)))
}

/// Shuffle drop probability under uniformly distributed items: `(n-c)/(n-s)`.
pub fn p_drop_shuffle_uniform(params: &GossipParams) -> f64 {
    (params.n - params.c) as f64 / (params.n - params.s) as f64
}

/// Shuffle drop probability for an arbitrary item distribution.
///
/// `p_inx` is the probability that an item of one partner's cache is also in
/// the other's. With `A1 = S_A \ C_B` (received items the node must make room
/// for) and `A2 = S_B \ S_A` (sent items it may discard),
/// `P(A1) = p_select (1 - p_inx)` and `P(A2) = p_select (1 - p_select p_inx)`,
/// so the result is `P(A1)/P(A2) = (1 - p_inx) / (1 - p_select p_inx)`.
///
/// `p_select * p_inx = 1` means every selected item is a duplicate and is
/// rejected rather than clamped.
pub fn p_drop_general(p_inx: f64, p_select: f64) -> Result<f64> {
    check_probability("p_inx", p_inx)?;
    check_probability("p_select", p_select)?;
    let denominator = 1.0 - p_select * p_inx;
    if denominator <= 0.0 {
        return Err(Error::DegenerateDrop);
    }
    Ok((1.0 - p_inx) / denominator)
}

/// Builds the transition matrix of `variant`. `channel` is ignored unless the
/// variant is [`ProtocolVariant::ShuffleLossy`].
pub fn build_matrix(variant: ProtocolVariant, probs: ModelProbabilities, channel: ChannelParams) -> TransitionMatrix {
    use PairState as S;

    let ps = probs.p_select;
    let pns = 1.0 - ps;
    let pd = probs.p_drop;
    let pnd = 1.0 - pd;

    let mut m = TransitionMatrix::zeros();
    // Items never appear from nowhere.
    m.set(S::S00, S::S00, 1.0);

    match variant {
        ProtocolVariant::NewscastPushPull => {
            m.set(S::S01, S::S01, (pns + ps * pd) * pnd);
            m.set(S::S10, S::S10, (pns + ps * pd) * pnd);
            m.set(S::S01, S::S10, ps * pd * pnd);
            m.set(S::S10, S::S01, ps * pd * pnd);
            m.set(S::S01, S::S11, ps * pnd * pnd);
            m.set(S::S10, S::S11, ps * pnd * pnd);
            m.set(S::S01, S::S00, (ps * pd + pns) * pd);
            m.set(S::S10, S::S00, (ps * pd + pns) * pd);
            m.set(S::S11, S::S01, pnd * pd);
            m.set(S::S11, S::S10, pnd * pd);
            m.set(S::S11, S::S11, pnd * pnd);
            m.set(S::S11, S::S00, pd * pd);
        }
        ProtocolVariant::NewscastPush => {
            // The initiator never updates its cache.
            m.set(S::S01, S::S01, pnd);
            m.set(S::S01, S::S00, pd);
            m.set(S::S10, S::S10, pns + ps * pd);
            m.set(S::S10, S::S11, ps * pnd);
            m.set(S::S11, S::S10, pd);
            m.set(S::S11, S::S11, pnd);
        }
        ProtocolVariant::NewscastPull => {
            // The contacted node never updates its cache.
            m.set(S::S01, S::S01, pns + ps * pd);
            m.set(S::S01, S::S11, ps * pnd);
            m.set(S::S10, S::S10, pnd);
            m.set(S::S10, S::S00, pd);
            m.set(S::S11, S::S01, pd);
            m.set(S::S11, S::S11, pnd);
        }
        ProtocolVariant::Shuffle => {
            m.set(S::S01, S::S01, pns);
            m.set(S::S10, S::S10, pns);
            m.set(S::S01, S::S10, ps * pd);
            m.set(S::S10, S::S01, ps * pd);
            m.set(S::S01, S::S11, ps * pnd);
            m.set(S::S10, S::S11, ps * pnd);
            m.set(S::S11, S::S01, ps * pns * pd);
            m.set(S::S11, S::S10, ps * pns * pd);
            m.set(S::S11, S::S11, 1.0 - 2.0 * ps * pns * pd);
        }
        ProtocolVariant::ShuffleLossy => {
            let pl = channel.p_loss;
            let pnl = 1.0 - pl;

            // Only A has d. A drops d only after receiving a reply, which
            // means B kept it, so 00 is unreachable.
            m.set(S::S10, S::S01, pnl * pnl * ps * pd);
            m.set(S::S10, S::S10, pns + pl * ps);
            m.set(S::S10, S::S11, pnl * pnl * ps * pnd + pnl * pl * ps);

            // Only B has d. B may drop it and the reply carrying it be lost.
            m.set(S::S01, S::S01, pnl * (pns + pl * ps * pnd) + pl);
            m.set(S::S01, S::S10, pnl * pnl * ps * pd);
            m.set(S::S01, S::S11, pnl * pnl * ps * pnd);
            m.set(S::S01, S::S00, pnl * pl * ps * pd);

            // Both have d. A's drop needs both messages, B's only the request.
            m.set(S::S11, S::S01, pnl * pnl * ps * pd * pns);
            m.set(S::S11, S::S10, pnl * pns * ps * pd);
            m.set(S::S11, S::S11, 1.0 - (2.0 - pl * (3.0 - pl)) * ps * pns * pd);
        }
    }
    m
}

/// Draws a post-exchange state from the row of `pre`.
pub fn sample_transition<R: Rng + ?Sized>(matrix: &TransitionMatrix, pre: PairState, rng: &mut R) -> PairState {
    let row = matrix.row(pre);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = pre.index();
    for (post, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = post;
            if u < acc {
                return PairState::from_index(post);
            }
        }
    }
    // Rounding left `acc` a hair below one.
    PairState::from_index(last_positive)
}
