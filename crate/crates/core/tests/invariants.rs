mod common;

use common::*;
use double_auction::market::{random_profile, Market, MechanismSpec};
use double_auction::matching::{
    is_fair, me_match, me_price_interval, mtheta_match, mv_match, oracle_max_reported_profit,
    MatchPair, MatchingSet, Theta,
};
use double_auction::metrics::{
    actual_profit, equilibrium_profit, reported_profit, underlying_equilibrium, TraderValue,
    ValueProfile,
};
use double_auction::pricing::{price_matching, PricingRule};
use double_auction::{Money, OrderBook, Shout, StrategyKind, TraderId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn prices(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1i64..=100, 0..=max_len)
}

fn profile(buyers: &[i64], sellers: &[i64]) -> ValueProfile {
    let mk = |vals: &[i64], offset: usize| {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| TraderValue {
                trader: TraderId((offset + i) as u32),
                value: u(v),
                entitlement: 1,
            })
            .collect()
    };
    ValueProfile {
        buyers: mk(buyers, 0),
        sellers: mk(sellers, buyers.len()),
    }
}

/// Every valid matching of a small book.
fn all_matchings(book: &OrderBook) -> Vec<MatchingSet> {
    fn go(bids: &[Shout], asks: &mut Vec<Option<Shout>>, acc: &mut Vec<MatchPair>, out: &mut Vec<MatchingSet>) {
        let Some((bid, rest)) = bids.split_first() else {
            out.push(MatchingSet::new(acc.clone()));
            return;
        };
        go(rest, asks, acc, out);
        for i in 0..asks.len() {
            if let Some(ask) = asks[i].filter(|a| a.price() <= bid.price()) {
                asks[i] = None;
                acc.push(MatchPair { bid: *bid, ask });
                go(rest, asks, acc, out);
                acc.pop();
                asks[i] = Some(ask);
            }
        }
    }
    let mut asks: Vec<Option<Shout>> = book.asks().iter().copied().map(Some).collect();
    let mut out = Vec::new();
    go(book.bids(), &mut asks, &mut Vec::new(), &mut out);
    out
}

proptest! {
    #[test]
    fn trades_stay_inside_their_pair_spread(bids in prices(12), asks in prices(12), theta in -1.0f64..=1.0) {
        let b = book(&bids, &asks);
        let r = mtheta_match(Theta::new(theta).unwrap(), &b);
        for t in price_matching(&r.matching, PricingRule::PairMidpoint, None).unwrap() {
            prop_assert!(t.ask_price <= t.price && t.price <= t.bid_price);
        }
        let me = me_match(&b);
        if let Ok(interval) = me_price_interval(&b) {
            let uniform = price_matching(&me, PricingRule::UniformMidOfInterval, Some(interval)).unwrap();
            let p = uniform.first().map(|t| t.price);
            for t in &uniform {
                prop_assert!(t.ask_price <= t.price && t.price <= t.bid_price);
                prop_assert_eq!(Some(t.price), p);
            }
        }
    }

    #[test]
    fn equilibrium_matching_maximizes_reported_profit(bids in prices(12), asks in prices(12)) {
        let b = book(&bids, &asks);
        prop_assert_eq!(reported_profit(&me_match(&b)), oracle_max_reported_profit(&b).unwrap());
    }

    #[test]
    fn fair_matchings_maximize_profit_at_their_volume(bids in prices(5), asks in prices(5)) {
        let b = book(&bids, &asks);
        let all = all_matchings(&b);
        let top = |k: u64| all.iter().filter(|m| m.volume() == k).map(reported_profit).max();
        for m in all.iter().filter(|m| is_fair(m, &b)) {
            prop_assert_eq!(Some(reported_profit(m)), top(m.volume()));
        }
    }

    #[test]
    fn truthful_equilibrium_trading_is_fully_efficient(buyers in prices(10), sellers in prices(10)) {
        let p = profile(&buyers, &sellers);
        let truthful = p.truthful_book().unwrap();
        let Ok(eq) = underlying_equilibrium(&p) else { return Ok(()); };
        let pe = equilibrium_profit(&p, eq.price());
        for rule in [PricingRule::PairMidpoint, PricingRule::UniformMidOfInterval] {
            let trades = price_matching(&me_match(&truthful), rule, Some(eq.interval)).unwrap();
            prop_assert_eq!(actual_profit(&trades, &p).unwrap(), pe);
        }
        let mv = price_matching(&mv_match(&truthful), PricingRule::PairMidpoint, None).unwrap();
        prop_assert!(actual_profit(&mv, &p).unwrap() <= pe);
    }

    #[test]
    fn equilibrium_profit_is_flat_across_the_interval(buyers in prices(10), sellers in prices(10), t in 0.0f64..=1.0) {
        let p = profile(&buyers, &sellers);
        let Ok(eq) = underlying_equilibrium(&p) else { return Ok(()); };
        let (lo, hi) = eq.interval;
        let inner = lo + Money::from_minor(((hi - lo).minor() as f64 * t).round() as i64);
        let counts = |x: Money| {
            (
                p.buyers.iter().filter(|b| b.value >= x).count(),
                p.sellers.iter().filter(|s| s.value <= x).count(),
            )
        };
        let (nb, ns) = counts(inner);
        if nb == ns && counts(eq.price()) == (nb, ns) {
            prop_assert_eq!(equilibrium_profit(&p, inner), equilibrium_profit(&p, eq.price()));
        }
    }

    #[test]
    fn supply_and_demand_are_monotone_staircases(bids in prices(12), asks in prices(12), x in 0i64..=101, y in 0i64..=101) {
        let b = book(&bids, &asks);
        let (lo, hi) = (u(x.min(y)), u(x.max(y)));
        prop_assert!(b.supply_at(lo) <= b.supply_at(hi));
        prop_assert!(b.demand_at(lo) >= b.demand_at(hi));
        let above = b.asks().iter().filter(|a| a.price() > lo).count() as u64;
        prop_assert_eq!(b.supply_at(lo) + above, b.total_supply());
        let below = b.bids().iter().filter(|s| s.price() < lo).count() as u64;
        prop_assert_eq!(b.demand_at(lo) + below, b.total_demand());
    }
}

#[test]
fn markup_volume_is_non_increasing_on_fixed_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
        let volumes: Vec<u64> = [0, 5, 10, 15, 20]
            .iter()
            .map(|&d| {
                let shouted = ValueProfile {
                    buyers: p
                        .buyers
                        .iter()
                        .map(|t| TraderValue { value: (t.value - u(d)).max(Money::ZERO), ..*t })
                        .collect(),
                    sellers: p
                        .sellers
                        .iter()
                        .map(|t| TraderValue { value: t.value + u(d), ..*t })
                        .collect(),
                };
                me_match(&shouted.truthful_book().unwrap()).volume()
            })
            .collect();
        assert!(volumes.windows(2).all(|w| w[0] >= w[1]), "{volumes:?}");
    }
}

#[test]
fn day_volume_is_bounded_by_truthful_supply_plus_demand() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for seed in 0..100 {
        let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
        let truthful = p.truthful_book().unwrap();
        let bound = candidate_prices2(&truthful)
            .into_iter()
            .map(|x| supply2(&truthful, x) + demand2(&truthful, x))
            .min()
            .unwrap();
        for kind in ["cda", "ch", "mv"] {
            let spec = MechanismSpec::new(kind.parse().unwrap(), PricingRule::PairMidpoint).unwrap();
            let mut m = Market::homogeneous(spec, StrategyKind::TruthTelling, &p, seed).unwrap();
            let day = m.run_day(0, 3).unwrap();
            assert!(day.volume() <= bound, "{kind}: {} > {bound}", day.volume());
        }
    }
}
