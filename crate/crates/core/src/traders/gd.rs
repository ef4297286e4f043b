//! Gjerstad-Dickhaut belief-based bidding.
//!
//! A GD trader estimates, from the last `memory` shouts it has observed, the
//! probability that a shout at a given price would be accepted, and posts the
//! no-loss price that maximizes belief times surplus.
//!
//! For an ask at `a` the belief at an observed price point is
//!
//! ```text
//!          accepted asks >= a  +  bids >= a
//! p(a) = -----------------------------------------------------
//!         accepted asks >= a  +  bids >= a  +  rejected asks <= a
//! ```
//!
//! and symmetrically for a bid at `b` with accepted bids `<= b`, asks `<= b`
//! and rejected bids `>= b`. Between observed points the belief is linearly
//! interpolated, with an extra point at price zero. Above the highest
//! observed price the count formula is used directly. Wherever the formula
//! has no supporting observations at all (0/0) the belief is 0.

use serde::{Deserialize, Serialize};

use crate::money::{Money, Price};
use crate::shout::Side;

use super::history::{MarketHistory, ShoutRecord};
use super::TraderState;

pub const DEFAULT_MEMORY: usize = 8;
pub const DEFAULT_GRID: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GdParams {
    pub memory: usize,
    pub grid: usize,
}

impl Default for GdParams {
    fn default() -> Self {
        GdParams {
            memory: DEFAULT_MEMORY,
            grid: DEFAULT_GRID,
        }
    }
}

fn point_belief(window: &[ShoutRecord], side: Side, price: Price) -> Option<f64> {
    let count = |f: &dyn Fn(&ShoutRecord) -> bool| window.iter().filter(|r| f(r)).count();
    let (support, against) = match side {
        Side::Sell => (
            count(&|r| match r.side {
                Side::Sell => r.accepted && r.price >= price,
                Side::Buy => r.price >= price,
            }),
            count(&|r| r.side == Side::Sell && !r.accepted && r.price <= price),
        ),
        Side::Buy => (
            count(&|r| match r.side {
                Side::Buy => r.accepted && r.price <= price,
                Side::Sell => r.price <= price,
            }),
            count(&|r| r.side == Side::Buy && !r.accepted && r.price >= price),
        ),
    };
    let total = support + against;
    (total > 0).then(|| support as f64 / total as f64)
}

/// Estimated probability that a shout on `side` at `price` is accepted, or
/// `None` when the window holds no observations.
pub fn gd_belief(history: &MarketHistory, memory: usize, side: Side, price: Price) -> Option<f64> {
    let window = history.recent(memory);
    if window.is_empty() {
        return None;
    }
    let mut prices: Vec<Price> = window.iter().map(|r| r.price).collect();
    prices.sort_unstable();
    prices.dedup();

    let mut points: Vec<(Price, f64)> = prices
        .iter()
        .filter_map(|&p| point_belief(window, side, p).map(|b| (p, b)))
        .collect();
    let &(top, _) = points.last()?;
    if price > top {
        return Some(point_belief(window, side, price).unwrap_or(0.0));
    }
    if points[0].0 > Money::ZERO {
        let at_zero = point_belief(window, side, Money::ZERO).unwrap_or(0.0);
        points.insert(0, (Money::ZERO, at_zero));
    }

    let upper = points.partition_point(|&(p, _)| p < price);
    let (p1, b1) = points[upper];
    if p1 == price || upper == 0 {
        return Some(b1);
    }
    let (p0, b0) = points[upper - 1];
    let t = (price - p0).minor() as f64 / (p1 - p0).minor() as f64;
    Some(b0 + t * (b1 - b0))
}

/// No-loss price range: `[0, v]` for buyers, `[v, 2v]` for sellers.
pub(crate) fn no_loss_range(state: &TraderState) -> (Price, Price) {
    let v = state.private_value;
    match state.side {
        Side::Buy => (Money::ZERO, v),
        Side::Sell => (v, v + v),
    }
}

/// Expected surplus of posting `price`.
pub fn gd_expected_utility(
    state: &TraderState,
    history: &MarketHistory,
    params: &GdParams,
    price: Price,
) -> f64 {
    let belief = gd_belief(history, params.memory, state.side, price).unwrap_or(0.0);
    belief * (price - state.private_value).abs().minor() as f64
}

/// Candidate prices: observed prices inside the no-loss range plus an evenly
/// spaced grid across it (endpoints included).
pub fn gd_candidates(state: &TraderState, history: &MarketHistory, params: &GdParams) -> Vec<Price> {
    let (lo, hi) = no_loss_range(state);
    let span = (hi - lo).minor();
    let steps = params.grid.max(2) as i64 - 1;
    let mut out: Vec<Price> = (0..=steps)
        .map(|i| lo + Money::from_minor(span * i / steps))
        .chain(
            history
                .recent(params.memory)
                .iter()
                .map(|r| r.price)
                .filter(|p| (lo..=hi).contains(p)),
        )
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Utility-maximizing no-loss offer, ties broken toward the private value.
/// Returns `None` when there is no history to form beliefs from.
pub fn gd_offer(state: &TraderState, history: &MarketHistory, params: &GdParams) -> Option<Price> {
    if history.recent(params.memory).is_empty() {
        return None;
    }
    let v = state.private_value;
    gd_candidates(state, history, params)
        .into_iter()
        .map(|p| (p, gd_expected_utility(state, history, params, p)))
        .max_by(|(pa, ua), (pb, ub)| {
            ua.total_cmp(ub)
                .then_with(|| (*pb - v).abs().cmp(&(*pa - v).abs()))
        })
        .map(|(p, _)| p)
}

/// Shout posted when the history is still empty: the far end of the no-loss
/// range, which cannot trade against any no-loss counterparty with a
/// positive value but seeds the history for later rounds.
pub fn gd_opening_offer(state: &TraderState) -> Price {
    match state.side {
        Side::Buy => Money::ZERO,
        Side::Sell => no_loss_range(state).1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shout::{Shout, ShoutId, TraderId};
    use proptest::prelude::*;

    fn u(x: i64) -> Money {
        Money::from_units(x)
    }

    fn history(entries: &[(Side, i64, bool)]) -> MarketHistory {
        let mut h = MarketHistory::new();
        for (i, &(side, price, accepted)) in entries.iter().enumerate() {
            let s = Shout::unit(ShoutId::new(i as u64), TraderId(0), side, u(price)).unwrap();
            h.record_shout(&s);
            if accepted {
                h.mark_accepted(s.id());
            }
        }
        h
    }

    fn state(side: Side, v: i64) -> TraderState {
        TraderState::new(TraderId(0), side, u(v))
    }

    #[test]
    fn empty_history_has_no_belief() {
        let h = MarketHistory::new();
        assert_eq!(gd_belief(&h, 8, Side::Sell, u(80)), None);
        assert_eq!(gd_offer(&state(Side::Sell, 50), &h, &GdParams::default()), None);
    }

    #[test]
    fn single_accepted_ask_is_certain_at_its_price() {
        let h = history(&[(Side::Sell, 80, true)]);
        assert_eq!(gd_belief(&h, 8, Side::Sell, u(80)), Some(1.0));
        assert_eq!(gd_belief(&h, 8, Side::Sell, u(40)), Some(1.0));
        assert_eq!(gd_belief(&h, 8, Side::Sell, u(81)), Some(0.0));
    }

    #[test]
    fn interpolates_between_points() {
        // Ask belief: 1 at 80 (accepted ask), 0 at 100 (rejected ask, nothing above).
        let h = history(&[(Side::Sell, 80, true), (Side::Sell, 100, false)]);
        assert_eq!(gd_belief(&h, 8, Side::Sell, u(80)), Some(1.0));
        assert_eq!(gd_belief(&h, 8, Side::Sell, u(100)), Some(0.0));
        let mid = gd_belief(&h, 8, Side::Sell, u(90)).unwrap();
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn seller_follows_accepted_asks() {
        let h = history(&[
            (Side::Sell, 88, true),
            (Side::Sell, 90, true),
            (Side::Sell, 92, true),
        ]);
        let offer = gd_offer(&state(Side::Sell, 50), &h, &GdParams::default()).unwrap();
        assert_eq!(offer, u(92));
        assert!(offer >= u(50));
    }

    #[test]
    fn buyer_stays_within_value() {
        let h = history(&[(Side::Sell, 70, false), (Side::Buy, 60, true), (Side::Sell, 65, true)]);
        let s = state(Side::Buy, 80);
        let offer = gd_offer(&s, &h, &GdParams::default()).unwrap();
        assert!(offer <= u(80));
        let best = gd_expected_utility(&s, &h, &GdParams::default(), offer);
        for c in gd_candidates(&s, &h, &GdParams::default()) {
            assert!(gd_expected_utility(&s, &h, &GdParams::default(), c) <= best);
        }
    }

    #[test]
    fn zero_utility_everywhere_falls_back_to_value() {
        // Only a rejected bid at zero: bids never look acceptable.
        let h = history(&[(Side::Buy, 0, false)]);
        assert_eq!(gd_belief(&h, 8, Side::Buy, u(50)), Some(0.0));
        assert_eq!(gd_offer(&state(Side::Buy, 100), &h, &GdParams::default()), Some(u(100)));
        let s = state(Side::Sell, 60);
        let h = history(&[(Side::Sell, 500, false)]);
        assert_eq!(gd_offer(&s, &h, &GdParams::default()), Some(u(60)));
    }

    #[test]
    fn memory_limits_the_window() {
        let h = history(&[(Side::Sell, 60, false), (Side::Sell, 80, true)]);
        assert_eq!(gd_belief(&h, 1, Side::Sell, u(70)), Some(1.0));
        assert_eq!(gd_belief(&h, 2, Side::Sell, u(70)), Some(0.5));
    }

    #[test]
    fn opening_offers_cannot_cross() {
        assert_eq!(gd_opening_offer(&state(Side::Buy, 120)), Money::ZERO);
        assert_eq!(gd_opening_offer(&state(Side::Sell, 60)), u(120));
    }

    fn entries() -> impl Strategy<Value = Vec<(bool, i64, bool)>> {
        prop::collection::vec((any::<bool>(), 0i64..200, any::<bool>()), 1..12)
    }

    proptest! {
        #[test]
        fn beliefs_are_monotone(raw in entries(), a in 0i64..250, b in 0i64..250, memory in 1usize..12) {
            let list: Vec<_> = raw
                .iter()
                .map(|&(buy, p, acc)| (if buy { Side::Buy } else { Side::Sell }, p, acc))
                .collect();
            let h = history(&list);
            let (lo, hi) = (a.min(b), a.max(b));
            let ask_lo = gd_belief(&h, memory, Side::Sell, u(lo)).unwrap();
            let ask_hi = gd_belief(&h, memory, Side::Sell, u(hi)).unwrap();
            prop_assert!(ask_lo >= ask_hi - 1e-12);
            let bid_lo = gd_belief(&h, memory, Side::Buy, u(lo)).unwrap();
            let bid_hi = gd_belief(&h, memory, Side::Buy, u(hi)).unwrap();
            prop_assert!(bid_lo <= bid_hi + 1e-12);
            for x in [ask_lo, ask_hi, bid_lo, bid_hi] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}
