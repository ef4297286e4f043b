//! Clearing-house (CH) and continuous double auction (CDA) markets.
//!
//! A day is split into rounds. In each round every trader with a remaining
//! entitlement is visited once, in a seeded random order, and may post or
//! replace its single standing shout. A CDA clears the book with equilibrium
//! matching after every placement; a CH clears once at the end of each round
//! with the parametric policy. Unmatched shouts stay on the book until the
//! day ends.
//!
//! Traders decide from the history as it stood when the round began.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::OrderBook;
use crate::matching::{me_match, me_price_interval, mtheta_match, MatchingSet, Theta};
use crate::metrics::{efficiency_report, EfficiencyReport, MetricsError, TraderValue, ValueProfile};
use crate::money::{Money, Price};
use crate::pricing::{price_matching, PricingRule, Trade};
use crate::shout::{Shout, ShoutId, Side, TraderId};
use crate::traders::{MarketHistory, StrategyKind, Trader, TraderState};

#[derive(Debug, Error, PartialEq)]
pub enum MarketError {
    #[error("uniform pricing is only defined for equilibrium clearing (cda, or ch with theta <= 0), not {0}")]
    UniformNeedsEquilibrium(MechanismKind),
    #[error("unknown mechanism `{0}` (expected cda | ch | ch:<theta> | mtheta:<theta> | mv)")]
    UnknownMechanism(String),
    #[error("invalid theta in `{0}`")]
    BadTheta(String),
    #[error("trader {0} appears more than once")]
    DuplicateTrader(TraderId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MechanismKind {
    /// Continuous double auction: equilibrium matching after every shout.
    Cda,
    /// Clearing house: parametric matching at the close of every round.
    Ch(Theta),
}

impl MechanismKind {
    pub fn theta(&self) -> Option<Theta> {
        match self {
            MechanismKind::Cda => None,
            MechanismKind::Ch(t) => Some(*t),
        }
    }
}

impl FromStr for MechanismKind {
    type Err = MarketError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.trim().to_ascii_lowercase();
        let theta = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .and_then(|v| Theta::new(v).ok())
                .ok_or_else(|| MarketError::BadTheta(s.to_string()))
        };
        match raw.split_once(':') {
            None => match raw.as_str() {
                "cda" => Ok(MechanismKind::Cda),
                "ch" | "me" => Ok(MechanismKind::Ch(Theta::EQUILIBRIUM)),
                "mv" => Ok(MechanismKind::Ch(Theta::MAX_VOLUME)),
                _ => Err(MarketError::UnknownMechanism(s.to_string())),
            },
            Some(("ch" | "mtheta", t)) => Ok(MechanismKind::Ch(theta(t)?)),
            Some(_) => Err(MarketError::UnknownMechanism(s.to_string())),
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismKind::Cda => f.write_str("cda"),
            MechanismKind::Ch(t) if *t == Theta::EQUILIBRIUM => f.write_str("ch"),
            MechanismKind::Ch(t) if *t == Theta::MAX_VOLUME => f.write_str("mv"),
            MechanismKind::Ch(t) => write!(f, "mtheta:{t}"),
        }
    }
}

impl TryFrom<String> for MechanismKind {
    type Error = MarketError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MechanismKind> for String {
    fn from(k: MechanismKind) -> String {
        k.to_string()
    }
}

/// A mechanism and its pricing rule. Uniform pricing is restricted to
/// mechanisms whose matched pairs all straddle the uniform-price interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MechanismSpec {
    kind: MechanismKind,
    pricing: PricingRule,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, pricing: PricingRule) -> Result<Self, MarketError> {
        let equilibrium = match kind {
            MechanismKind::Cda => true,
            MechanismKind::Ch(t) => t.value() <= 0.0,
        };
        if pricing == PricingRule::UniformMidOfInterval && !equilibrium {
            return Err(MarketError::UniformNeedsEquilibrium(kind));
        }
        Ok(MechanismSpec { kind, pricing })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn pricing(&self) -> PricingRule {
        self.pricing
    }
}

#[derive(Clone, Debug)]
pub struct DayResult {
    pub day: u32,
    pub trades: Vec<Trade>,
    pub final_book: OrderBook,
    pub report: EfficiencyReport,
}

impl DayResult {
    pub fn volume(&self) -> u64 {
        self.report.volume
    }
}

/// Draws `buyers` buyer values and `sellers` seller values uniformly (in
/// whole cents) from `[lo, hi]`. Buyers get trader ids `0..buyers`, sellers
/// the ids after them.
pub fn random_profile<R: Rng + ?Sized>(
    rng: &mut R,
    buyers: usize,
    sellers: usize,
    (lo, hi): (Money, Money),
) -> ValueProfile {
    let mut draw = |offset: usize, n: usize| -> Vec<TraderValue> {
        (0..n)
            .map(|i| TraderValue {
                trader: TraderId((offset + i) as u32),
                value: Money::from_minor(rng.random_range(lo.minor()..=hi.minor())),
                entitlement: 1,
            })
            .collect()
    };
    let buyers_v = draw(0, buyers);
    let sellers_v = draw(buyers, sellers);
    ValueProfile {
        buyers: buyers_v,
        sellers: sellers_v,
    }
}

#[derive(Clone, Debug)]
pub struct Market {
    spec: MechanismSpec,
    traders: Vec<Trader>,
    slot: HashMap<TraderId, usize>,
    book: OrderBook,
    history: MarketHistory,
    rng: ChaCha8Rng,
    next_seq: u64,
    day: u32,
    round: u32,
}

impl Market {
    pub fn new(spec: MechanismSpec, traders: Vec<Trader>, seed: u64) -> Result<Self, MarketError> {
        let mut slot = HashMap::with_capacity(traders.len());
        for (i, t) in traders.iter().enumerate() {
            if slot.insert(t.state.id, i).is_some() {
                return Err(MarketError::DuplicateTrader(t.state.id));
            }
        }
        Ok(Market {
            spec,
            traders,
            slot,
            book: OrderBook::new(),
            history: MarketHistory::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_seq: 0,
            day: 0,
            round: 0,
        })
    }

    /// A market where every trader in `profile` plays `strategy`. Trader and
    /// scheduling streams are all derived from `seed`.
    pub fn homogeneous(
        spec: MechanismSpec,
        strategy: StrategyKind,
        profile: &ValueProfile,
        seed: u64,
    ) -> Result<Self, MarketError> {
        let mut seeds = ChaCha8Rng::seed_from_u64(seed);
        let schedule_seed = seeds.next_u64();
        let sides = profile
            .buyers
            .iter()
            .map(|v| (Side::Buy, v))
            .chain(profile.sellers.iter().map(|v| (Side::Sell, v)));
        let traders = sides
            .map(|(side, v)| {
                let state = TraderState::new(v.trader, side, v.value);
                Trader::new(state, strategy, seeds.next_u64())
            })
            .collect();
        Market::new(spec, traders, schedule_seed)
    }

    pub fn spec(&self) -> MechanismSpec {
        self.spec
    }

    pub fn traders(&self) -> &[Trader] {
        &self.traders
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn history(&self) -> &MarketHistory {
        &self.history
    }

    pub fn value_profile(&self) -> ValueProfile {
        let mut profile = ValueProfile::default();
        for t in &self.traders {
            let v = TraderValue {
                trader: t.state.id,
                value: t.state.private_value,
                entitlement: 1,
            };
            match t.state.side {
                Side::Buy => profile.buyers.push(v),
                Side::Sell => profile.sellers.push(v),
            }
        }
        profile
    }

    /// Opens a new day: fresh entitlements, empty book. History is kept.
    pub fn open_day(&mut self, day: u32) {
        self.day = day;
        self.round = 0;
        self.book.clear();
        for t in &mut self.traders {
            t.state.entitlement_remaining = 1;
            t.state.active_shout = None;
        }
    }

    /// Runs one round and returns the trades it executed.
    pub fn run_round(&mut self) -> Vec<Trade> {
        let observed = self.history.clone();
        let mut order: Vec<usize> = (0..self.traders.len()).collect();
        order.shuffle(&mut self.rng);

        let mut trades = Vec::new();
        for i in order {
            let Some(price) = self.traders[i].decide(&observed) else {
                continue;
            };
            self.place(i, price);
            if self.spec.kind == MechanismKind::Cda {
                let m = me_match(&self.book);
                if !m.is_empty() {
                    let interval = me_price_interval(&self.book).ok();
                    trades.extend(self.execute(&m, interval));
                }
            }
        }
        if let MechanismKind::Ch(theta) = self.spec.kind {
            let r = mtheta_match(theta, &self.book);
            trades.extend(self.execute(&r.matching, r.price_interval));
        }
        self.round += 1;
        trades
    }

    /// Opens day `day`, runs `rounds` rounds and scores the day against the
    /// underlying equilibrium of the traders' private values.
    pub fn run_day(&mut self, day: u32, rounds: u32) -> Result<DayResult, MetricsError> {
        self.open_day(day);
        let mut trades = Vec::new();
        for _ in 0..rounds {
            trades.extend(self.run_round());
        }
        let report = efficiency_report(&self.value_profile(), &trades)?;
        Ok(DayResult {
            day,
            trades,
            final_book: self.book.clone(),
            report,
        })
    }

    fn place(&mut self, i: usize, price: Price) {
        let trader = &mut self.traders[i];
        if let Some(old) = trader.state.active_shout.take() {
            self.book.remove(old);
        }
        let id = ShoutId::new(self.next_seq);
        self.next_seq += 1;
        let shout = Shout::unit(id, trader.state.id, trader.state.side, price)
            .expect("strategies only produce non-negative prices");
        self.book
            .insert(shout)
            .expect("sequence numbers are never reused");
        self.history.record_shout(&shout);
        trader.state.active_shout = Some(id);
    }

    fn execute(&mut self, m: &MatchingSet, interval: Option<(Price, Price)>) -> Vec<Trade> {
        let mut trades = price_matching(m, self.spec.pricing, interval)
            .expect("pricing rule was validated against the mechanism");
        for t in &mut trades {
            t.day = self.day;
            t.round = self.round;
            for (shout, trader) in [(t.bid_id, t.buyer), (t.ask_id, t.seller)] {
                self.book.remove(shout);
                self.history.mark_accepted(shout);
                let state = &mut self.traders[self.slot[&trader]].state;
                state.entitlement_remaining -= t.quantity;
                state.active_shout = None;
            }
            self.history.record_trade(t.price);
        }
        trades
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{me_quantity, mv_get_q};
    use crate::traders::GdParams;

    fn u(x: i64) -> Money {
        Money::from_units(x)
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

    fn spec(kind: &str) -> MechanismSpec {
        MechanismSpec::new(kind.parse().unwrap(), PricingRule::PairMidpoint).unwrap()
    }

    fn market(kind: &str, strategy: &str, p: &ValueProfile, seed: u64) -> Market {
        Market::homogeneous(spec(kind), strategy.parse().unwrap(), p, seed).unwrap()
    }

    #[test]
    fn cda_trades_as_soon_as_shouts_cross() {
        let p = profile(&[100], &[60]);
        let mut m = market("cda", "tt", &p, 1);
        let day = m.run_day(0, 1).unwrap();
        assert_eq!(day.trades.len(), 1);
        assert_eq!(day.trades[0].price, u(80));
        assert!(day.final_book.is_empty());
    }

    #[test]
    fn ch_at_equilibrium_trades_intra_marginal_pair() {
        let p = profile(&[10, 6], &[5, 9]);
        let mut m = market("ch", "tt", &p, 2);
        let day = m.run_day(0, 1).unwrap();
        assert_eq!(day.trades.len(), 1);
        assert_eq!((day.trades[0].bid_price, day.trades[0].ask_price), (u(10), u(5)));
        assert_eq!(day.final_book.len(), 2);
    }

    #[test]
    fn ch_without_matching_never_trades() {
        let p = profile(&[120, 110, 90], &[50, 60, 100]);
        let mut m = market("mtheta:-1", "tt", &p, 3);
        let day = m.run_day(0, 5).unwrap();
        assert!(day.trades.is_empty());
        assert_eq!(day.report.efficiency, Some(0.0));
    }

    #[test]
    fn gd_cannot_trade_in_a_single_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in ["cda", "ch", "mtheta:-0.5", "mtheta:0.5", "mv"] {
            for seed in 0..20 {
                let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
                let day = market(kind, "gd", &p, seed).run_day(0, 1).unwrap();
                assert_eq!(day.volume(), 0, "{kind} seed {seed}");
            }
        }
    }

    #[test]
    fn gd_trades_once_it_has_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let total: u64 = (0..20)
            .map(|seed| {
                let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
                market("cda", "gd", &p, seed).run_day(0, 5).unwrap().volume()
            })
            .sum();
        assert!(total > 0);
    }

    #[test]
    fn truthful_single_round_volumes_match_the_book() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for seed in 0..50 {
            let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
            let truthful = p.truthful_book().unwrap();
            let me = market("ch", "tt", &p, seed).run_day(0, 1).unwrap();
            assert_eq!(me.volume(), me_quantity(&truthful));
            assert_eq!(me.report.efficiency, Some(100.0));
            let mv = market("mv", "tt", &p, seed).run_day(0, 1).unwrap();
            assert_eq!(mv.volume(), mv_get_q(&truthful));
        }
    }

    #[test]
    fn trades_respect_entitlements_and_spreads() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in ["cda", "ch", "mv", "mtheta:0.5"] {
            for strategy in ["zic", "gd", "ps:10"] {
                let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
                let day = market(kind, strategy, &p, 9).run_day(0, 10).unwrap();
                let mut seen = std::collections::HashSet::new();
                for t in &day.trades {
                    assert!(t.ask_price <= t.price && t.price <= t.bid_price);
                    assert!(seen.insert(t.buyer), "buyer traded twice");
                    assert!(seen.insert(t.seller), "seller traded twice");
                    assert!(t.round < 10);
                }
                assert_eq!(day.volume(), day.trades.len() as u64);
            }
        }
    }

    #[test]
    fn identical_seeds_reproduce_trades() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
        for strategy in ["zic", "gd"] {
            let a = market("cda", strategy, &p, 42).run_day(0, 6).unwrap();
            let b = market("cda", strategy, &p, 42).run_day(0, 6).unwrap();
            assert_eq!(a.trades, b.trades);
        }
    }

    #[test]
    fn new_day_restores_entitlements() {
        let p = profile(&[100], &[60]);
        let mut m = market("ch", "tt", &p, 1);
        assert_eq!(m.run_day(0, 1).unwrap().volume(), 1);
        let again = m.run_day(1, 1).unwrap();
        assert_eq!(again.volume(), 1);
        assert_eq!(again.trades[0].day, 1);
    }

    #[test]
    fn replacement_removes_the_old_shout() {
        let gd = StrategyKind::GjerstadDickhaut(GdParams::default());
        let p = profile(&[100, 90], &[140, 150]);
        let mut m = Market::homogeneous(spec("mtheta:-1"), gd, &p, 0).unwrap();
        m.open_day(0);
        for _ in 0..4 {
            m.run_round();
            assert_eq!(m.book().len(), 4);
        }
        assert_eq!(m.history().records().len(), 16);
    }

    #[test]
    fn uniform_pricing_requires_equilibrium_clearing() {
        let uniform = PricingRule::UniformMidOfInterval;
        assert!(MechanismSpec::new(MechanismKind::Cda, uniform).is_ok());
        assert!(MechanismSpec::new("mtheta:-0.5".parse().unwrap(), uniform).is_ok());
        assert!(matches!(
            MechanismSpec::new("mv".parse().unwrap(), uniform),
            Err(MarketError::UniformNeedsEquilibrium(_))
        ));
    }

    #[test]
    fn uniform_cda_prices_inside_each_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = random_profile(&mut rng, 10, 10, (u(50), u(150)));
        let s = MechanismSpec::new(MechanismKind::Cda, PricingRule::UniformMidOfInterval).unwrap();
        let mut m = Market::homogeneous(s, StrategyKind::ZeroIntelligenceC, &p, 3).unwrap();
        let day = m.run_day(0, 5).unwrap();
        assert!(!day.trades.is_empty());
    }

    #[test]
    fn mechanism_names_round_trip() {
        for s in ["cda", "ch", "mv", "mtheta:-0.5", "mtheta:0.5"] {
            assert_eq!(s.parse::<MechanismKind>().unwrap().to_string(), s);
        }
        assert_eq!("ch:0".parse::<MechanismKind>().unwrap().to_string(), "ch");
        assert_eq!("mtheta:1".parse::<MechanismKind>().unwrap().to_string(), "mv");
        assert!("mtheta:2".parse::<MechanismKind>().is_err());
        assert!("auction".parse::<MechanismKind>().is_err());
    }
}
