use rand::seq::index;
use rand::Rng;

use super::cache::{Cache, ExchangeBuffer};
use super::{pair_mut, MessageScenario};
use crate::{Error, ItemId, NodeId, Result};

/// A Cyclon cache holds links to other nodes and never a link to its owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclonCache {
    owner: NodeId,
    links: Cache,
}

impl CyclonCache {
    pub fn new(owner: NodeId, capacity: usize, node_count: usize) -> Self {
        Self {
            owner,
            links: Cache::new(capacity, node_count),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn links(&self) -> &Cache {
        &self.links
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.links.contains(node as ItemId)
    }

    /// Adds a link unless it points at the owner, is present, or the cache is
    /// full.
    pub fn insert(&mut self, node: NodeId) -> bool {
        node != self.owner && self.links.insert(node as ItemId)
    }

    pub(crate) fn purge(&mut self, node: NodeId) {
        self.links.purge(node as ItemId);
    }

    /// Drops one uniform link when the cache is full.
    pub(crate) fn make_room<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.links.is_full() && !self.links.is_empty() {
            let victim = self.links.items()[rng.gen_range(0..self.links.len())];
            self.links.remove_all(&[victim]);
        }
    }
}

/// Result of one Cyclon initiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclonOutcome {
    pub initiator: NodeId,
    pub partner: NodeId,
    pub scenario: MessageScenario,
    /// Whether the partner holds a link to the initiator after the exchange.
    pub partner_holds_initiator_link: bool,
}

/// Initiates one Cyclon exchange from `initiator`.
///
/// The initiator picks `s` random links `σ`, takes a uniform entry of `σ` as
/// partner and ships `σ` with that entry replaced by a link to itself. The
/// partner replies with `s` random links of its own. Each side drops
/// self-links and links it already holds from what it received, fills empty
/// slots first and then overwrites entries among the links it sent.
///
/// Returns `Ok(None)` when the initiator's cache is empty.
pub fn cyclon_exchange<R: Rng + ?Sized>(
    caches: &mut [CyclonCache],
    initiator: NodeId,
    s: usize,
    scenario: MessageScenario,
    rng: &mut R,
) -> Result<Option<CyclonOutcome>> {
    let node_count = caches.len();
    if initiator >= node_count {
        return Err(Error::NodeOutOfRange {
            node: initiator,
            node_count,
        });
    }
    if s > caches[initiator].links.capacity() {
        return Err(Error::ExchangeTooLarge {
            s,
            capacity: caches[initiator].links.capacity(),
        });
    }
    if caches[initiator].links.is_empty() {
        return Ok(None);
    }
    let sigma = ExchangeBuffer::draw(&caches[initiator].links, s, rng);
    let partner = sigma.items()[rng.gen_range(0..sigma.len())] as NodeId;
    let outgoing = ExchangeBuffer::from_items(
        sigma
            .items()
            .iter()
            .map(|&x| if x as NodeId == partner { initiator as ItemId } else { x })
            .collect(),
    );

    let (a, p) = pair_mut(caches, initiator, partner);
    if scenario != MessageScenario::RequestLost {
        let reply = ExchangeBuffer::draw(&p.links, s, rng);
        absorb(p, &reply, &outgoing, rng);
        if scenario == MessageScenario::Delivered {
            absorb(a, &sigma, &reply, rng);
        }
    }
    Ok(Some(CyclonOutcome {
        initiator,
        partner,
        scenario,
        partner_holds_initiator_link: p.contains(initiator),
    }))
}

fn absorb<R: Rng + ?Sized>(cache: &mut CyclonCache, sent: &ExchangeBuffer, received: &ExchangeBuffer, rng: &mut R) {
    let owner = cache.owner as ItemId;
    let fresh: Vec<ItemId> = received
        .items()
        .iter()
        .copied()
        .filter(|&x| x != owner && !cache.links.contains(x))
        .collect();
    let overflow = fresh.len().saturating_sub(cache.links.free_slots());
    if overflow > 0 {
        let replaceable: Vec<ItemId> = sent
            .items()
            .iter()
            .copied()
            .filter(|&x| cache.links.contains(x) && !received.items().contains(&x))
            .collect();
        let count = overflow.min(replaceable.len());
        let victims: Vec<ItemId> = index::sample(rng, replaceable.len(), count)
            .into_iter()
            .map(|i| replaceable[i])
            .collect();
        cache.links.remove_all(&victims);
    }
    for link in fresh {
        cache.links.insert(link);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn network(n: usize, c: usize, rng: &mut impl Rng) -> Vec<CyclonCache> {
        (0..n)
            .map(|owner| {
                let mut cache = CyclonCache::new(owner, c, n);
                for j in index::sample(rng, n - 1, c) {
                    cache.insert(if j >= owner { j + 1 } else { j });
                }
                cache
            })
            .collect()
    }

    #[test]
    fn owner_link_is_refused() {
        let mut cache = CyclonCache::new(3, 4, 10);
        assert!(!cache.insert(3));
        assert!(cache.insert(4));
    }

    #[test]
    fn exchange_keeps_invariants_and_delivers_initiator_link() {
        let mut rng = rng_from_seed(10);
        let mut caches = network(50, 8, &mut rng);
        for round in 0..200 {
            for node in 0..50 {
                let outcome = cyclon_exchange(&mut caches, node, 4, MessageScenario::Delivered, &mut rng)
                    .unwrap()
                    .unwrap();
                assert!(outcome.partner_holds_initiator_link, "round {round}");
                assert_ne!(outcome.partner, node);
            }
            for cache in &caches {
                assert!(!cache.contains(cache.owner()));
                assert!(cache.links().len() <= 8);
            }
        }
    }

    #[test]
    fn request_lost_changes_nothing() {
        let mut rng = rng_from_seed(11);
        let mut caches = network(20, 5, &mut rng);
        let before = caches.clone();
        let outcome = cyclon_exchange(&mut caches, 0, 3, MessageScenario::RequestLost, &mut rng)
            .unwrap()
            .unwrap();
        assert_eq!(caches, before);
        assert_eq!(
            outcome.partner_holds_initiator_link,
            before[outcome.partner].contains(0)
        );
    }

    #[test]
    fn empty_cache_skips() {
        let mut rng = rng_from_seed(12);
        let mut caches = vec![CyclonCache::new(0, 3, 2), CyclonCache::new(1, 3, 2)];
        assert_eq!(
            cyclon_exchange(&mut caches, 0, 2, MessageScenario::Delivered, &mut rng).unwrap(),
            None
        );
    }
}
