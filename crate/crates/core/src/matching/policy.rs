use crate::book::OrderBook;
use crate::money::Price;
use crate::shout::Shout;

use super::{ClearingResult, MatchPair, MatchingError, MatchingSet, Theta};

/// Absorbs binary representation error of decimal θ values before flooring,
/// e.g. `0.7 * 10.0 == 6.999...`.
const FLOOR_SLACK: f64 = 1e-9;

/// Pairs the `q` highest bids with the `q` lowest asks. Both selections are
/// taken in ascending price order and aligned by index, so the k-th lowest
/// selected bid meets the k-th lowest selected ask.
///
/// Panics if either side of the book holds fewer than `q` shouts.
pub fn pair_most_competitive(book: &OrderBook, q: usize) -> MatchingSet {
    let bids = book.bids();
    let asks = book.asks();
    assert!(
        q <= bids.len() && q <= asks.len(),
        "cannot pair {q} shouts from a book with {} bids and {} asks",
        bids.len(),
        asks.len()
    );
    let first_bid = bids.len() - q;
    bids[first_bid..]
        .iter()
        .zip(&asks[..q])
        .map(|(bid, ask)| MatchPair { bid: *bid, ask: *ask })
        .collect()
}

/// Equilibrium volume `max_p min(S(p), D(p))`: the number of pairs formed by
/// walking the highest bids down against the lowest asks while bid >= ask.
pub fn me_quantity(book: &OrderBook) -> u64 {
    debug_assert!(book.is_unit(), "clearing expects a normalized book");
    let bids = book.bids();
    let asks = book.asks();
    bids.iter()
        .rev()
        .zip(asks)
        .take_while(|(b, a)| b.price() >= a.price())
        .count() as u64
}

/// Uniform-price interval of a crossing book.
///
/// With `n` bids and `m` asks in the book, the bounds are the `n`-th lowest
/// and the `m`-th highest of all shout prices. Every price in the interval
/// attains `max_p min(S(p), D(p))`, and every pair chosen by [`me_match`]
/// has its bid at or above the upper bound and its ask at or below the
/// lower bound.
pub fn me_price_interval(book: &OrderBook) -> Result<(Price, Price), MatchingError> {
    if me_quantity(book) == 0 {
        return Err(MatchingError::NoCross);
    }
    let n = book.bids().len();
    let mut prices: Vec<Price> = book
        .bids()
        .iter()
        .chain(book.asks())
        .map(Shout::price)
        .collect();
    // lo is the n-th lowest (index n-1), hi the (n+1)-th lowest (index n).
    let (_, hi, _) = prices.select_nth_unstable(n);
    let hi = *hi;
    let lo = *prices[..n].iter().max().expect("book has at least one bid");
    Ok((lo, hi))
}

/// Matches exactly the intra-marginal shouts.
pub fn me_match(book: &OrderBook) -> MatchingSet {
    pair_most_competitive(book, me_quantity(book) as usize)
}

/// Result of the maximal-volume scan together with the number of shouts the
/// scan dequeued.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VolumeScan {
    pub q: u64,
    pub polls: usize,
}

/// Read-only queue over a sorted slice that counts successful polls.
struct Queue<'a> {
    items: std::slice::Iter<'a, Shout>,
    polls: usize,
}

impl<'a> Queue<'a> {
    fn new(items: &'a [Shout]) -> Self {
        Queue {
            items: items.iter(),
            polls: 0,
        }
    }

    fn poll(&mut self) -> Option<&'a Shout> {
        let next = self.items.next();
        if next.is_some() {
            self.polls += 1;
        }
        next
    }
}

/// Maximal volume `min_p (S(p) + D(p))` in one ascending pass.
pub fn mv_get_q(book: &OrderBook) -> u64 {
    mv_get_q_counted(book).q
}

/// [`mv_get_q`] with the poll count exposed.
///
/// Shouts are processed bottom-up by price. `q` tracks the horizontal gap
/// between the flipped supply curve and the demand curve minus the (still
/// unknown) total demand, which accumulates in `q_d` and is added back at
/// the end. Asks above the highest bid are never dequeued.
pub fn mv_get_q_counted(book: &OrderBook) -> VolumeScan {
    let mut bids = Queue::new(book.bids());
    let mut asks = Queue::new(book.asks());
    let mut q_min: i64 = 0;

    let mut a = asks.poll();
    if a.is_some() {
        let mut b = bids.poll();
        while let (Some(bid), Some(ask)) = (b, a) {
            if bid.price() >= ask.price() {
                break;
            }
            b = bids.poll();
        }

        let mut q_d: i64 = 0;
        let mut q: i64 = 0;
        while let Some(bid) = b {
            match a {
                Some(ask) if ask.price() <= bid.price() => {
                    q += ask.quantity() as i64;
                    a = asks.poll();
                }
                _ => {
                    q -= bid.quantity() as i64;
                    q_min = q_min.min(q);
                    q_d += bid.quantity() as i64;
                    b = bids.poll();
                }
            }
        }
        q_min += q_d;
    }

    VolumeScan {
        q: q_min as u64,
        polls: bids.polls + asks.polls,
    }
}

/// Fair, orderly matching of maximal volume.
pub fn mv_match(book: &OrderBook) -> MatchingSet {
    debug_assert!(book.is_unit(), "clearing expects a normalized book");
    pair_most_competitive(book, mv_get_q(book) as usize)
}

/// Target volume of the parametric policy, floored to whole units:
///
/// * `θ ∈ [-1, 0]`: `(1 + θ) · q_me`
/// * `θ ∈ [0, 1]`: `(1 - θ) · q_me + θ · q_mv`
pub fn mtheta_quantity(theta: Theta, q_me: u64, q_mv: u64) -> u64 {
    debug_assert!(q_me <= q_mv);
    let t = theta.value();
    let (me, mv) = (q_me as f64, q_mv as f64);
    let raw = if t <= 0.0 {
        (1.0 + t) * me
    } else {
        (1.0 - t) * me + t * mv
    };
    ((raw + FLOOR_SLACK).floor().max(0.0) as u64).min(q_mv)
}

/// Clears with the parametric policy: the MV pairing with the target volume
/// substituted for the maximal one.
pub fn mtheta_match(theta: Theta, book: &OrderBook) -> ClearingResult {
    debug_assert!(book.is_unit(), "clearing expects a normalized book");
    let q_me = me_quantity(book);
    let q_mv = mv_get_q(book);
    let q_target = mtheta_quantity(theta, q_me, q_mv);
    ClearingResult {
        matching: pair_most_competitive(book, q_target as usize),
        q_me,
        q_mv,
        q_target,
        price_interval: me_price_interval(book).ok(),
    }
}
