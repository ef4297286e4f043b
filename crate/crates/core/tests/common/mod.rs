//! Shared fixtures and brute-force references for the integration tests.
//!
//! The references work on doubled prices so that midpoints between adjacent
//! cent prices stay integral.

#![allow(dead_code)]

use double_auction::matching::MatchingSet;
use double_auction::{Money, OrderBook, Price};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INSTANCES: usize = 10_000;
pub const MAX_SIDE: usize = 12;

pub fn u(x: i64) -> Money {
    Money::from_units(x)
}

pub fn book(bids: &[i64], asks: &[i64]) -> OrderBook {
    let p = |v: &[i64]| v.iter().map(|&x| u(x)).collect::<Vec<_>>();
    OrderBook::from_unit_prices(&p(bids), &p(asks)).unwrap()
}

/// Random unit book with up to `MAX_SIDE` shouts per side and whole prices
/// in `[1, 100]`.
pub fn random_book(rng: &mut ChaCha8Rng) -> OrderBook {
    let side = |rng: &mut ChaCha8Rng| -> Vec<Price> {
        let n = rng.random_range(0..=MAX_SIDE);
        (0..n).map(|_| u(rng.random_range(1..=100))).collect()
    };
    let bids = side(rng);
    let asks = side(rng);
    OrderBook::from_unit_prices(&bids, &asks).unwrap()
}

/// The fixed corpus of random books shared by the oracle criteria.
pub fn corpus() -> Vec<OrderBook> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_b00c);
    (0..INSTANCES).map(|_| random_book(&mut rng)).collect()
}

/// Doubled candidate prices: every shout price, every midpoint between
/// adjacent distinct prices, and one point beyond each end.
pub fn candidate_prices2(book: &OrderBook) -> Vec<i64> {
    let mut prices: Vec<i64> = book
        .bids()
        .iter()
        .chain(book.asks())
        .map(|s| s.price().minor())
        .collect();
    prices.sort_unstable();
    prices.dedup();
    let Some((&lo, &hi)) = prices.first().zip(prices.last()) else {
        return vec![0];
    };
    let mut out = vec![(2 * lo - 1).max(0), 2 * hi + 1];
    out.extend(prices.iter().map(|p| 2 * p));
    out.extend(prices.windows(2).map(|w| w[0] + w[1]));
    out.sort_unstable();
    out.dedup();
    out
}

/// `S(p)` at doubled price `p2`.
pub fn supply2(book: &OrderBook, p2: i64) -> u64 {
    book.asks()
        .iter()
        .filter(|a| 2 * a.price().minor() <= p2)
        .map(|a| a.quantity() as u64)
        .sum()
}

/// `D(p)` at doubled price `p2`.
pub fn demand2(book: &OrderBook, p2: i64) -> u64 {
    book.bids()
        .iter()
        .filter(|b| 2 * b.price().minor() >= p2)
        .map(|b| b.quantity() as u64)
        .sum()
}

pub fn brute_me_quantity(book: &OrderBook) -> u64 {
    candidate_prices2(book)
        .into_iter()
        .map(|p| supply2(book, p).min(demand2(book, p)))
        .max()
        .unwrap_or(0)
}

pub fn brute_mv_quantity(book: &OrderBook) -> u64 {
    candidate_prices2(book)
        .into_iter()
        .map(|p| supply2(book, p) + demand2(book, p))
        .min()
        .unwrap_or(0)
}

/// Both inequalities relating matched bids and asks above and below every
/// candidate price.
pub fn demand_covers_supply(m: &MatchingSet, book: &OrderBook) -> bool {
    candidate_prices2(book).into_iter().all(|p2| {
        let count = |it: &mut dyn Iterator<Item = Price>, f: &dyn Fn(i64) -> bool| {
            it.filter(|p| f(2 * p.minor())).count()
        };
        let bids_above = count(&mut m.bids().map(|s| s.price()), &|x| x >= p2);
        let asks_above = count(&mut m.asks().map(|s| s.price()), &|x| x >= p2);
        let asks_below = count(&mut m.asks().map(|s| s.price()), &|x| x <= p2);
        let bids_below = count(&mut m.bids().map(|s| s.price()), &|x| x <= p2);
        bids_above >= asks_above && asks_below >= bids_below
    })
}

/// `|M| <= S(p) + D(p)` at every candidate price.
pub fn volume_within_supply_plus_demand(m: &MatchingSet, book: &OrderBook) -> bool {
    candidate_prices2(book)
        .into_iter()
        .all(|p2| m.volume() <= supply2(book, p2) + demand2(book, p2))
}
