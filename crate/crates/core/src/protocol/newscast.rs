use rand::seq::index;
use rand::Rng;

use super::cache::{Cache, ExchangeBuffer};
use super::shuffle::ExchangeTrace;
use super::{check_exchange_size, Direction, MessageScenario};
use crate::{ItemId, Result};

/// One simplified-Newscast exchange.
///
/// A receiver keeps `c` items drawn uniformly from its cache united with the
/// received buffer (everything, if that union fits). Push only updates the
/// contacted node, pull only the initiator. A lost request means nobody
/// updates; a lost reply means only the contacted node updates, and for push
/// it makes no difference at all.
pub fn newscast_exchange<R: Rng + ?Sized>(
    initiator: &mut Cache,
    contacted: &mut Cache,
    s: usize,
    direction: Direction,
    scenario: MessageScenario,
    rng: &mut R,
) -> Result<ExchangeTrace> {
    check_exchange_size(s, initiator, contacted)?;
    let initiator_sent = match direction {
        Direction::PushPull | Direction::Push => ExchangeBuffer::draw(initiator, s, rng),
        // A pull request carries no items.
        Direction::Pull => ExchangeBuffer::default(),
    };
    if scenario == MessageScenario::RequestLost {
        return Ok(ExchangeTrace {
            initiator_sent,
            contacted_sent: None,
        });
    }
    let contacted_sent = match direction {
        Direction::PushPull | Direction::Pull => ExchangeBuffer::draw(contacted, s, rng),
        Direction::Push => ExchangeBuffer::default(),
    };
    if matches!(direction, Direction::PushPull | Direction::Push) {
        absorb(contacted, &initiator_sent, rng);
    }
    if scenario == MessageScenario::Delivered && matches!(direction, Direction::PushPull | Direction::Pull) {
        absorb(initiator, &contacted_sent, rng);
    }
    Ok(ExchangeTrace {
        initiator_sent,
        contacted_sent: Some(contacted_sent),
    })
}

fn absorb<R: Rng + ?Sized>(cache: &mut Cache, received: &ExchangeBuffer, rng: &mut R) {
    let fresh: Vec<ItemId> = received
        .items()
        .iter()
        .copied()
        .filter(|&x| !cache.contains(x))
        .collect();
    let total = cache.len() + fresh.len();
    if total > cache.capacity() {
        // Survivors are a uniform c-subset of cache ∪ fresh: discard a uniform
        // (total - c)-subset instead.
        let held = cache.len();
        let mut evicted = Vec::new();
        let mut rejected = vec![false; fresh.len()];
        for i in index::sample(rng, total, total - cache.capacity()) {
            if i < held {
                evicted.push(cache.items()[i]);
            } else {
                rejected[i - held] = true;
            }
        }
        cache.remove_all(&evicted);
        for (item, _) in fresh.into_iter().zip(rejected).filter(|(_, r)| !r) {
            cache.insert(item);
        }
    } else {
        for item in fresh {
            cache.insert(item);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairwise::{p_drop_newscast_given_k, GossipParams};
    use crate::seed::rng_from_seed;

    fn cache_of(items: impl IntoIterator<Item = ItemId>, capacity: usize) -> Cache {
        let mut c = Cache::new(capacity, 512);
        for i in items {
            assert!(c.insert(i));
        }
        c
    }

    #[test]
    fn push_never_touches_initiator() {
        let mut rng = rng_from_seed(1);
        for scenario in [
            MessageScenario::Delivered,
            MessageScenario::ReplyLost,
            MessageScenario::RequestLost,
        ] {
            let mut a = cache_of(0..10, 10);
            let mut b = cache_of(10..20, 10);
            let a0 = a.clone();
            newscast_exchange(&mut a, &mut b, 5, Direction::Push, scenario, &mut rng).unwrap();
            assert_eq!(a, a0);
            assert_eq!(b.len(), 10);
        }
    }

    #[test]
    fn pull_never_touches_contacted() {
        let mut rng = rng_from_seed(2);
        for scenario in [MessageScenario::Delivered, MessageScenario::ReplyLost] {
            let mut a = cache_of(0..10, 10);
            let mut b = cache_of(10..20, 10);
            let b0 = b.clone();
            newscast_exchange(&mut a, &mut b, 5, Direction::Pull, scenario, &mut rng).unwrap();
            assert_eq!(b, b0);
        }
    }

    #[test]
    fn push_reply_loss_is_irrelevant() {
        let run = |scenario| {
            let mut rng = rng_from_seed(3);
            let mut a = cache_of(0..10, 10);
            let mut b = cache_of(10..20, 10);
            newscast_exchange(&mut a, &mut b, 5, Direction::Push, scenario, &mut rng).unwrap();
            b
        };
        assert_eq!(run(MessageScenario::Delivered), run(MessageScenario::ReplyLost));
    }

    #[test]
    fn pushpull_reply_lost_updates_only_contacted() {
        let mut rng = rng_from_seed(4);
        let mut a = cache_of(0..10, 10);
        let mut b = cache_of(10..20, 10);
        let (a0, b0) = (a.clone(), b.clone());
        newscast_exchange(
            &mut a,
            &mut b,
            5,
            Direction::PushPull,
            MessageScenario::ReplyLost,
            &mut rng,
        )
        .unwrap();
        assert_eq!(a, a0);
        assert_ne!(b, b0);
    }

    #[test]
    fn pushpull_can_drop_a_shared_item_on_both_sides() {
        let mut rng = rng_from_seed(5);
        let mut both_dropped = 0;
        for _ in 0..5000 {
            let mut a = cache_of((0..9).chain([99]), 10);
            let mut b = cache_of((20..29).chain([99]), 10);
            newscast_exchange(
                &mut a,
                &mut b,
                5,
                Direction::PushPull,
                MessageScenario::Delivered,
                &mut rng,
            )
            .unwrap();
            if !a.contains(99) && !b.contains(99) {
                both_dropped += 1;
            }
        }
        assert!(both_dropped > 0);
    }

    #[test]
    fn drop_frequency_matches_closed_form_given_k() {
        // c = 20, s = 10; the buffer shares exactly k items with the receiver.
        let params = GossipParams::new(100, 20, 10).unwrap();
        let mut rng = rng_from_seed(6);
        for k in [0usize, 4, 10] {
            let trials = 20_000;
            let mut dropped = 0u64;
            let mut eligible = 0u64;
            for _ in 0..trials {
                let mut b = cache_of(0..20, 20);
                let buffer: Vec<ItemId> = (0..k as ItemId).chain(100..(100 + (10 - k) as ItemId)).collect();
                absorb(&mut b, &ExchangeBuffer::from_items(buffer), &mut rng);
                assert_eq!(b.len(), 20);
                // Item 19 is never a duplicate: it is a generic cached item.
                eligible += 1;
                if !b.contains(19) {
                    dropped += 1;
                }
            }
            let freq = dropped as f64 / eligible as f64;
            let p = p_drop_newscast_given_k(&params, k).unwrap();
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((freq - p).abs() <= 4.0 * se + 1e-12, "k = {k}: {freq} vs {p}");
        }
    }
}
