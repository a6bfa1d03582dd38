use rand::Rng;

use super::cache::{partial_shuffle, with_scratch, Cache, ExchangeBuffer};
use super::{check_exchange_size, MessageScenario};
use crate::Result;

/// Buffers that travelled during one exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeTrace {
    pub initiator_sent: ExchangeBuffer,
    /// `None` when the request never reached the contacted node.
    pub contacted_sent: Option<ExchangeBuffer>,
}

/// One Shuffle exchange between `initiator` (A) and `contacted` (B).
///
/// A sends `S_A`; if the request arrives, B draws `S_B` before looking at
/// `S_A`, replies, and stores `S_A \ C_B`, discarding items of `S_B \ S_A` to
/// make room. A does the same with `S_B` only if the reply arrives. Free slots
/// are used before anything is discarded, so caches fill up during startup
/// without items being lost.
pub fn shuffle_exchange<R: Rng + ?Sized>(
    initiator: &mut Cache,
    contacted: &mut Cache,
    s: usize,
    scenario: MessageScenario,
    rng: &mut R,
) -> Result<ExchangeTrace> {
    let mut initiator_sent = ExchangeBuffer::default();
    let mut contacted_sent = ExchangeBuffer::default();
    let replied = shuffle_exchange_with(
        initiator,
        contacted,
        s,
        scenario,
        rng,
        &mut initiator_sent,
        &mut contacted_sent,
    )?;
    Ok(ExchangeTrace {
        initiator_sent,
        contacted_sent: replied.then_some(contacted_sent),
    })
}

/// [`shuffle_exchange`] writing into caller-owned buffers. Returns whether
/// the contacted node replied.
pub(crate) fn shuffle_exchange_with<R: Rng + ?Sized>(
    initiator: &mut Cache,
    contacted: &mut Cache,
    s: usize,
    scenario: MessageScenario,
    rng: &mut R,
    initiator_sent: &mut ExchangeBuffer,
    contacted_sent: &mut ExchangeBuffer,
) -> Result<bool> {
    check_exchange_size(s, initiator, contacted)?;
    initiator_sent.redraw(initiator, s, rng);
    if scenario == MessageScenario::RequestLost {
        return Ok(false);
    }
    contacted_sent.redraw(contacted, s, rng);
    absorb(contacted, contacted_sent, initiator_sent, rng);
    if scenario == MessageScenario::Delivered {
        absorb(initiator, initiator_sent, contacted_sent, rng);
    }
    Ok(true)
}

fn absorb<R: Rng + ?Sized>(cache: &mut Cache, sent: &ExchangeBuffer, received: &ExchangeBuffer, rng: &mut R) {
    let fresh = received.items().iter().filter(|&&x| !cache.contains(x)).count();
    let overflow = fresh.saturating_sub(cache.free_slots());
    if overflow > 0 {
        with_scratch(received.items(), |marks, droppable| {
            droppable.extend(
                sent.items()
                    .iter()
                    .copied()
                    .filter(|&x| !marks.get(x as usize).copied().unwrap_or(false)),
            );
            // |S_B \ S_A| >= |S_A \ C_B| - free slots always holds.
            debug_assert!(droppable.len() >= overflow);
            let overflow = overflow.min(droppable.len());
            partial_shuffle(droppable, overflow, rng);
            cache.remove_all(&droppable[..overflow]);
        });
    }
    // Victims never appear in the received buffer, so this inserts exactly
    // the fresh items.
    for &item in received.items() {
        cache.insert(item);
    }
}
