//! Structural predicates over matching sets and the constructive repairs
//! that restore fairness and orderliness without changing volume.

use std::collections::{HashMap, HashSet};

use crate::book::OrderBook;
use crate::shout::{Shout, ShoutId, Side};

use super::{MatchPair, MatchingSet};

/// Every pair takes its bid from the book's bids and its ask from the book's
/// asks, quantities agree, the bid is priced at or above the ask, and no
/// shout is used twice.
pub fn is_valid_matching(m: &MatchingSet, book: &OrderBook) -> bool {
    let index: HashMap<ShoutId, &Shout> = book
        .bids()
        .iter()
        .chain(book.asks())
        .map(|s| (s.id(), s))
        .collect();
    let in_book = |s: &Shout, side: Side| {
        index
            .get(&s.id())
            .is_some_and(|b| **b == *s && b.side() == side)
    };

    let mut seen = HashSet::with_capacity(2 * m.len());
    m.pairs().iter().all(|p| {
        in_book(&p.bid, Side::Buy)
            && in_book(&p.ask, Side::Sell)
            && p.bid.quantity() == p.ask.quantity()
            && p.bid.price() >= p.ask.price()
            && seen.insert(p.bid.id())
            && seen.insert(p.ask.id())
    })
}

/// No unmatched bid is priced strictly above a matched bid, and no unmatched
/// ask is priced strictly below a matched ask.
pub fn is_fair(m: &MatchingSet, book: &OrderBook) -> bool {
    let matched: HashSet<ShoutId> = m.shout_ids().collect();

    let lowest_matched_bid = m.bids().map(Shout::price).min();
    let highest_unmatched_bid = book
        .bids()
        .iter()
        .filter(|b| !matched.contains(&b.id()))
        .map(Shout::price)
        .max();
    if let (Some(matched), Some(unmatched)) = (lowest_matched_bid, highest_unmatched_bid) {
        if unmatched > matched {
            return false;
        }
    }

    let highest_matched_ask = m.asks().map(Shout::price).max();
    let lowest_unmatched_ask = book
        .asks()
        .iter()
        .filter(|a| !matched.contains(&a.id()))
        .map(Shout::price)
        .min();
    match (highest_matched_ask, lowest_unmatched_ask) {
        (Some(matched), Some(unmatched)) => unmatched >= matched,
        _ => true,
    }
}

/// Bid order and ask order of the matched pairs agree: there are no two
/// pairs where one has the strictly higher bid but the strictly lower ask.
/// Price ties on either side never count as a violation.
pub fn is_orderly(m: &MatchingSet) -> bool {
    // Sorted by bid price, the asks of each run of strictly increasing bids
    // must never drop below the highest ask seen at a strictly lower bid.
    let mut pairs: Vec<&MatchPair> = m.pairs().iter().collect();
    pairs.sort_by_key(|p| (p.bid.price(), p.ask.price()));

    let mut max_ask_below = None;
    let mut i = 0;
    while i < pairs.len() {
        let bid_price = pairs[i].bid.price();
        let group_end = i + pairs[i..]
            .iter()
            .take_while(|p| p.bid.price() == bid_price)
            .count();
        let group = &pairs[i..group_end];
        if let Some(max_below) = max_ask_below {
            if group.iter().any(|p| p.ask.price() < max_below) {
                return false;
            }
        }
        let group_max = group.iter().map(|p| p.ask.price()).max();
        max_ask_below = max_ask_below.max(group_max);
        i = group_end;
    }
    true
}

/// Swaps matched shouts for strictly more competitive unmatched ones on the
/// same side until the matching is fair. Volume is unchanged and the result
/// stays valid: a higher bid or a lower ask can only widen a pair's spread.
pub fn make_fair(m: &MatchingSet, book: &OrderBook) -> MatchingSet {
    let mut pairs = m.pairs().to_vec();
    let mut matched: HashSet<ShoutId> = m.shout_ids().collect();

    loop {
        let mut changed = false;

        let best_unmatched_bid = book
            .bids()
            .iter()
            .rev()
            .find(|b| !matched.contains(&b.id()));
        let worst_matched_bid = pairs
            .iter_mut()
            .min_by_key(|p| p.bid.sort_key())
            .map(|p| &mut p.bid);
        if let (Some(better), Some(worse)) = (best_unmatched_bid, worst_matched_bid) {
            if better.price() > worse.price() {
                matched.remove(&worse.id());
                matched.insert(better.id());
                *worse = *better;
                changed = true;
            }
        }

        let best_unmatched_ask = book.asks().iter().find(|a| !matched.contains(&a.id()));
        let worst_matched_ask = pairs
            .iter_mut()
            .max_by_key(|p| p.ask.sort_key())
            .map(|p| &mut p.ask);
        if let (Some(better), Some(worse)) = (best_unmatched_ask, worst_matched_ask) {
            if better.price() < worse.price() {
                matched.remove(&worse.id());
                matched.insert(better.id());
                *worse = *better;
                changed = true;
            }
        }

        if !changed {
            return MatchingSet::new(pairs);
        }
    }
}

/// Re-pairs the matched bids and asks by sorting each side ascending and
/// aligning by index. The sets of matched bids and asks are unchanged.
pub fn make_orderly(m: &MatchingSet) -> MatchingSet {
    let mut bids: Vec<Shout> = m.bids().copied().collect();
    let mut asks: Vec<Shout> = m.asks().copied().collect();
    bids.sort_unstable_by_key(Shout::sort_key);
    asks.sort_unstable_by_key(Shout::sort_key);
    bids.into_iter()
        .zip(asks)
        .map(|(bid, ask)| MatchPair { bid, ask })
        .collect()
}
