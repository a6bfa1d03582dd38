//! Cache-level simulation of Shuffle, the simplified Newscast and Cyclon.
//!
//! A round visits every node once in a fresh random order; each visited node
//! initiates one exchange with a uniform out-neighbor, and the exchange is
//! applied in full before the next node initiates. Every exchange draws its
//! own [`MessageScenario`].

mod cache;
mod cyclon;
mod newscast;
mod shuffle;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

pub use cache::{Cache, ExchangeBuffer};
pub use cyclon::{cyclon_exchange, CyclonCache, CyclonOutcome};
pub use newscast::newscast_exchange;
pub use shuffle::{shuffle_exchange, ExchangeTrace};

use crate::pairwise::GossipParams;
use crate::topology::Topology;
use crate::{Error, ItemId, NodeId, Result};

/// Direction of a Newscast exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    PushPull,
    Push,
    Pull,
}

/// Every protocol the engine can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Shuffle,
    Newscast(Direction),
    Cyclon,
}

impl Protocol {
    pub const ALL: [Self; 5] = [
        Self::Shuffle,
        Self::Newscast(Direction::PushPull),
        Self::Newscast(Direction::Push),
        Self::Newscast(Direction::Pull),
        Self::Cyclon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shuffle => "shuffle",
            Self::Newscast(Direction::PushPull) => "newscast-pushpull",
            Self::Newscast(Direction::Push) => "newscast-push",
            Self::Newscast(Direction::Pull) => "newscast-pull",
            Self::Cyclon => "cyclon",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "shuffle-lossy" {
            return Ok(Self::Shuffle);
        }
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown protocol `{s}`")))
    }
}

/// Loss outcome of one exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageScenario {
    RequestLost,
    ReplyLost,
    Delivered,
}

impl MessageScenario {
    /// Request lost with `p_loss`, otherwise reply lost with `p_loss`.
    pub fn draw<R: Rng + ?Sized>(p_loss: f64, rng: &mut R) -> Self {
        if rng.gen_bool(p_loss) {
            Self::RequestLost
        } else if rng.gen_bool(p_loss) {
            Self::ReplyLost
        } else {
            Self::Delivered
        }
    }
}

pub(crate) fn check_exchange_size(s: usize, a: &Cache, b: &Cache) -> Result<()> {
    let capacity = a.capacity().min(b.capacity());
    if s > capacity {
        Err(Error::ExchangeTooLarge { s, capacity })
    } else {
        Ok(())
    }
}

pub(crate) fn pair_mut<T>(slice: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert_ne!(a, b, "a node cannot gossip with itself");
    if a < b {
        let (lo, hi) = slice.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = slice.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

/// Items whose pre-exchange pair state is recorded during a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tracking {
    /// Record nothing.
    Off,
    /// Items `0..count`, i.e. all startup items.
    Items { count: usize },
    /// One item.
    Single(ItemId),
}

/// Pre-exchange pair-state tallies over tracked items; the first bit is the
/// initiator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    pub fn add(&mut self, other: &PairCounts) {
        self.n00 += other.n00;
        self.n01 += other.n01;
        self.n10 += other.n10;
        self.n11 += other.n11;
    }

    fn observe(a: &Cache, b: &Cache, tracking: Tracking) -> Option<Self> {
        match tracking {
            Tracking::Off => None,
            Tracking::Single(item) => {
                let mut counts = Self::default();
                match (a.contains(item), b.contains(item)) {
                    (false, false) => counts.n00 = 1,
                    (false, true) => counts.n01 = 1,
                    (true, false) => counts.n10 = 1,
                    (true, true) => counts.n11 = 1,
                }
                Some(counts)
            }
            Tracking::Items { count } => {
                let tracked = |x: &&ItemId| (**x as usize) < count;
                let in_a = a.items().iter().filter(tracked).count() as u64;
                let in_b = b.items().iter().filter(tracked).count() as u64;
                let n11 = a.items().iter().filter(tracked).filter(|&&x| b.contains(x)).count() as u64;
                let (n10, n01) = (in_a - n11, in_b - n11);
                Some(Self {
                    n11,
                    n10,
                    n01,
                    n00: count as u64 - n11 - n10 - n01,
                })
            }
        }
    }
}

/// What happened during one round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundLog {
    pub initiations: usize,
    /// Nodes that had nobody to contact.
    pub skipped: usize,
    /// One entry per initiated exchange when tracking is on.
    pub pair_counts: Vec<PairCounts>,
}

impl RoundLog {
    pub fn pooled_counts(&self) -> PairCounts {
        let mut total = PairCounts::default();
        for c in &self.pair_counts {
            total.add(c);
        }
        total
    }
}

/// Caches of every node of a Shuffle or Newscast network, over a static
/// topology.
#[derive(Debug, Clone)]
pub struct NetworkState {
    caches: Vec<Cache>,
    topology: Arc<Topology>,
    params: GossipParams,
    round: u64,
}

/// Seeds each of the `n` items at one uniformly random node that still has a
/// free slot.
pub fn init_network<R: Rng + ?Sized>(
    topology: Arc<Topology>,
    params: GossipParams,
    rng: &mut R,
) -> Result<NetworkState> {
    let nodes = topology.node_count();
    if nodes < 2 {
        return Err(Error::InvalidTopology("need at least 2 nodes".into()));
    }
    if params.n() > nodes * params.c() {
        return Err(Error::InvalidParams(format!(
            "{} items do not fit into {nodes} caches of {}",
            params.n(),
            params.c()
        )));
    }
    let universe = params.n() + 1;
    let mut caches: Vec<Cache> = (0..nodes).map(|_| Cache::new(params.c(), universe)).collect();
    for item in 0..params.n() as ItemId {
        loop {
            let node = rng.gen_range(0..nodes);
            if caches[node].insert(item) {
                break;
            }
        }
    }
    Ok(NetworkState {
        caches,
        topology,
        params,
        round: 0,
    })
}

impl NetworkState {
    pub fn caches(&self) -> &[Cache] {
        &self.caches
    }

    pub fn cache(&self, node: NodeId) -> &Cache {
        &self.caches[node]
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn params(&self) -> GossipParams {
        self.params
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn node_count(&self) -> usize {
        self.caches.len()
    }

    /// Runs `rounds` lossless rounds.
    pub fn run_startup<R: Rng + ?Sized>(&mut self, rounds: u64, protocol: Protocol, rng: &mut R) -> Result<()> {
        for _ in 0..rounds {
            self.run_round(protocol, 0.0, Tracking::Off, rng)?;
        }
        Ok(())
    }

    /// Runs one round. Cyclon has its own overlay and runs on
    /// [`CyclonNetwork`] instead.
    pub fn run_round<R: Rng + ?Sized>(
        &mut self,
        protocol: Protocol,
        p_loss: f64,
        tracking: Tracking,
        rng: &mut R,
    ) -> Result<RoundLog> {
        if protocol == Protocol::Cyclon {
            return Err(Error::Unsupported("Cyclon runs on CyclonNetwork".into()));
        }
        if !(0.0..=1.0).contains(&p_loss) {
            return Err(Error::InvalidProbability {
                name: "p_loss",
                value: p_loss,
            });
        }
        let s = self.params.s();
        let mut order: Vec<NodeId> = (0..self.caches.len()).collect();
        order.shuffle(rng);
        let mut log = RoundLog::default();
        let (mut sent_a, mut sent_b) = (ExchangeBuffer::default(), ExchangeBuffer::default());
        for initiator in order {
            let Some(contacted) = self.topology.random_neighbor(initiator, rng) else {
                log.skipped += 1;
                continue;
            };
            let (a, b) = pair_mut(&mut self.caches, initiator, contacted);
            if let Some(counts) = PairCounts::observe(a, b, tracking) {
                log.pair_counts.push(counts);
            }
            let scenario = MessageScenario::draw(p_loss, rng);
            match protocol {
                Protocol::Shuffle => {
                    shuffle::shuffle_exchange_with(a, b, s, scenario, rng, &mut sent_a, &mut sent_b)?;
                }
                Protocol::Newscast(direction) => {
                    newscast_exchange(a, b, s, direction, scenario, rng)?;
                }
                Protocol::Cyclon => unreachable!(),
            }
            log.initiations += 1;
        }
        self.round += 1;
        Ok(log)
    }

    /// Places a brand-new item at `node`, evicting one uniform item if the
    /// cache is full.
    pub fn insert_item<R: Rng + ?Sized>(&mut self, item: ItemId, node: NodeId, rng: &mut R) -> Result<()> {
        let node_count = self.caches.len();
        if node >= node_count {
            return Err(Error::NodeOutOfRange { node, node_count });
        }
        if self.caches.iter().any(|c| c.contains(item)) {
            return Err(Error::DuplicateItem(item));
        }
        let cache = &mut self.caches[node];
        if cache.is_full() {
            let victim = cache.items()[rng.gen_range(0..cache.len())];
            cache.remove_all(&[victim]);
        }
        cache.insert(item);
        Ok(())
    }

    /// Number of caches holding `item`.
    pub fn replication(&self, item: ItemId) -> usize {
        self.caches.iter().filter(|c| c.contains(item)).count()
    }

    /// Number of nodes that have ever held `item`.
    pub fn coverage(&self, item: ItemId) -> usize {
        self.caches.iter().filter(|c| c.has_seen(item)).count()
    }

    /// Sorted distinct items present anywhere.
    pub fn distinct_items(&self) -> Vec<ItemId> {
        let mut all: Vec<ItemId> = self.caches.iter().flat_map(|c| c.items().iter().copied()).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn all_full(&self) -> bool {
        self.caches.iter().all(Cache::is_full)
    }
}

/// Cyclon overlay: the caches themselves decide who gossips with whom.
#[derive(Debug, Clone)]
pub struct CyclonNetwork {
    caches: Vec<CyclonCache>,
    exchange: usize,
    round: u64,
}

/// One round's Cyclon log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CyclonRoundLog {
    pub outcomes: Vec<CyclonOutcome>,
    pub skipped: usize,
}

/// Seeds every cache with `capacity` uniform links to other nodes.
pub fn init_cyclon_network<R: Rng + ?Sized>(
    node_count: usize,
    capacity: usize,
    exchange: usize,
    rng: &mut R,
) -> Result<CyclonNetwork> {
    if node_count < 2 {
        return Err(Error::InvalidTopology("need at least 2 nodes".into()));
    }
    if capacity == 0 || capacity >= node_count {
        return Err(Error::InvalidParams(format!(
            "Cyclon cache size must satisfy 0 < c < N (c = {capacity}, N = {node_count})"
        )));
    }
    if exchange == 0 || exchange > capacity {
        return Err(Error::ExchangeTooLarge { s: exchange, capacity });
    }
    let caches = (0..node_count)
        .map(|owner| {
            let mut cache = CyclonCache::new(owner, capacity, node_count);
            for j in rand::seq::index::sample(rng, node_count - 1, capacity) {
                cache.insert(if j >= owner { j + 1 } else { j });
            }
            cache
        })
        .collect();
    Ok(CyclonNetwork {
        caches,
        exchange,
        round: 0,
    })
}

impl CyclonNetwork {
    pub fn caches(&self) -> &[CyclonCache] {
        &self.caches
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn run_round<R: Rng + ?Sized>(&mut self, p_loss: f64, rng: &mut R) -> Result<CyclonRoundLog> {
        if !(0.0..=1.0).contains(&p_loss) {
            return Err(Error::InvalidProbability {
                name: "p_loss",
                value: p_loss,
            });
        }
        let mut order: Vec<NodeId> = (0..self.caches.len()).collect();
        order.shuffle(rng);
        let mut log = CyclonRoundLog::default();
        for initiator in order {
            let scenario = MessageScenario::draw(p_loss, rng);
            match cyclon_exchange(&mut self.caches, initiator, self.exchange, scenario, rng)? {
                Some(outcome) => log.outcomes.push(outcome),
                None => log.skipped += 1,
            }
        }
        self.round += 1;
        Ok(log)
    }

    /// Removes every link to `node` and its coverage history, as if it had
    /// just joined.
    pub fn forget_node(&mut self, node: NodeId) {
        for cache in &mut self.caches {
            cache.purge(node);
        }
    }

    /// Gives `holder` a link to `node`, evicting a uniform link if its cache
    /// is full.
    pub fn insert_link<R: Rng + ?Sized>(&mut self, holder: NodeId, node: NodeId, rng: &mut R) -> Result<()> {
        let node_count = self.caches.len();
        for id in [holder, node] {
            if id >= node_count {
                return Err(Error::NodeOutOfRange { node: id, node_count });
            }
        }
        if holder == node {
            return Err(Error::InvalidParams("a node cannot hold a link to itself".into()));
        }
        let cache = &mut self.caches[holder];
        if !cache.contains(node) {
            cache.make_room(rng);
            cache.insert(node);
        }
        Ok(())
    }

    /// Number of caches holding a link to `node`.
    pub fn replication(&self, node: NodeId) -> usize {
        self.caches.iter().filter(|c| c.contains(node)).count()
    }

    /// Number of nodes that have ever held a link to `node`.
    pub fn coverage(&self, node: NodeId) -> usize {
        self.caches
            .iter()
            .filter(|c| c.links().has_seen(node as ItemId))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::topology::{build_clique, build_grid};

    fn small() -> GossipParams {
        GossipParams::new(50, 10, 5).unwrap()
    }

    #[test]
    fn scenario_frequencies() {
        let mut rng = rng_from_seed(1);
        let draws = 200_000;
        let p = 0.3;
        let (mut req, mut rep) = (0, 0);
        for _ in 0..draws {
            match MessageScenario::draw(p, &mut rng) {
                MessageScenario::RequestLost => req += 1,
                MessageScenario::ReplyLost => rep += 1,
                MessageScenario::Delivered => {}
            }
        }
        assert!((req as f64 / draws as f64 - p).abs() < 0.005);
        assert!((rep as f64 / draws as f64 - 0.7 * p).abs() < 0.005);
        for _ in 0..1000 {
            assert_eq!(MessageScenario::draw(0.0, &mut rng), MessageScenario::Delivered);
        }
    }

    #[test]
    fn init_places_every_item_once() {
        let topo = Arc::new(build_clique(2500).unwrap());
        let state = init_network(topo, GossipParams::paper(), &mut rng_from_seed(2)).unwrap();
        let placements: usize = state.caches().iter().map(Cache::len).sum();
        assert_eq!(placements, 500);
        assert!((0..500).all(|i| state.replication(i) == 1));
        let again = init_network(state.topology().clone(), GossipParams::paper(), &mut rng_from_seed(2)).unwrap();
        assert_eq!(state.caches(), again.caches());
    }

    #[test]
    fn startup_fills_caches_without_losing_items() {
        let topo = Arc::new(build_clique(100).unwrap());
        let mut rng = rng_from_seed(3);
        let mut state = init_network(topo, small(), &mut rng).unwrap();
        state.run_startup(60, Protocol::Shuffle, &mut rng).unwrap();
        assert!(state.all_full());
        assert_eq!(state.distinct_items().len(), 50);
        let total: usize = (0..50).map(|i| state.replication(i)).sum();
        assert_eq!(total, 100 * 10);
        assert_eq!(state.round(), 60);
    }

    #[test]
    fn zero_startup_rounds_is_a_no_op() {
        let topo = Arc::new(build_clique(10).unwrap());
        let mut rng = rng_from_seed(4);
        let mut state = init_network(topo, small(), &mut rng).unwrap();
        let before = state.caches().to_vec();
        state.run_startup(0, Protocol::Shuffle, &mut rng).unwrap();
        assert_eq!(state.caches(), &before[..]);
    }

    #[test]
    fn round_initiations_and_tracking() {
        let topo = Arc::new(build_clique(40).unwrap());
        let mut rng = rng_from_seed(5);
        let mut state = init_network(topo, small(), &mut rng).unwrap();
        state.run_startup(30, Protocol::Shuffle, &mut rng).unwrap();
        let log = state
            .run_round(Protocol::Shuffle, 0.0, Tracking::Items { count: 50 }, &mut rng)
            .unwrap();
        assert_eq!(log.initiations, 40);
        assert_eq!(log.skipped, 0);
        assert_eq!(log.pair_counts.len(), 40);
        for c in &log.pair_counts {
            assert_eq!(c.total(), 50);
            // Both caches are full: 10 items each.
            assert_eq!(c.n10 + c.n11, 10);
            assert_eq!(c.n01 + c.n11, 10);
        }
    }

    #[test]
    fn tracking_ignores_inserted_items() {
        let topo = Arc::new(build_clique(20).unwrap());
        let mut rng = rng_from_seed(6);
        let mut state = init_network(topo, small(), &mut rng).unwrap();
        state.run_startup(30, Protocol::Shuffle, &mut rng).unwrap();
        state.insert_item(50, 0, &mut rng).unwrap();
        let (a, b) = (state.cache(0).clone(), {
            let mut b = state.cache(1).clone();
            let first = b.items()[0];
            b.remove_all(&[first]);
            b.insert(50);
            b
        });
        let counts = PairCounts::observe(&a, &b, Tracking::Items { count: 50 }).unwrap();
        assert_eq!(counts.total(), 50);
        assert_eq!(counts.n10 + counts.n11, 9);
        assert_eq!(counts.n01 + counts.n11, 9);
        let single = PairCounts::observe(&a, &b, Tracking::Single(50)).unwrap();
        assert_eq!(single.n11, 1);
    }

    #[test]
    fn insert_item_contract() {
        let topo = Arc::new(build_grid(4).unwrap());
        let mut rng = rng_from_seed(7);
        let mut state = init_network(topo, small(), &mut rng).unwrap();
        state.run_startup(100, Protocol::Shuffle, &mut rng).unwrap();
        assert!(state.all_full());
        state.insert_item(50, 3, &mut rng).unwrap();
        assert_eq!(state.cache(3).len(), 10);
        assert_eq!(state.replication(50), 1);
        assert_eq!(state.coverage(50), 1);
        assert_eq!(state.insert_item(50, 4, &mut rng), Err(Error::DuplicateItem(50)));
        assert!(state.insert_item(51, 16, &mut rng).is_err());
    }

    #[test]
    fn newscast_rounds_keep_caches_full() {
        let topo = Arc::new(build_clique(50).unwrap());
        let mut rng = rng_from_seed(8);
        let mut state = init_network(topo, small(), &mut rng).unwrap();
        let pushpull = Protocol::Newscast(Direction::PushPull);
        state.run_startup(50, pushpull, &mut rng).unwrap();
        assert!(state.all_full());
        for direction in [Direction::PushPull, Direction::Push, Direction::Pull] {
            state
                .run_round(Protocol::Newscast(direction), 0.2, Tracking::Off, &mut rng)
                .unwrap();
            assert!(state.all_full());
        }
    }

    #[test]
    fn cyclon_network_rounds() {
        let mut rng = rng_from_seed(9);
        let mut net = init_cyclon_network(100, 10, 5, &mut rng).unwrap();
        for _ in 0..50 {
            let log = net.run_round(0.0, &mut rng).unwrap();
            assert_eq!(log.outcomes.len(), 100);
            assert!(log.outcomes.iter().all(|o| o.partner_holds_initiator_link));
        }
        net.forget_node(7);
        assert_eq!(net.replication(7), 0);
        assert_eq!(net.coverage(7), 0);
        net.run_round(0.0, &mut rng).unwrap();
        assert!(net.replication(7) >= 1);
        assert!(net.coverage(7) >= net.replication(7));
    }

    #[test]
    fn protocol_names_roundtrip() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert_eq!("shuffle-lossy".parse::<Protocol>().unwrap(), Protocol::Shuffle);
    }
}
