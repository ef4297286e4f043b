//! Profit and allocative-efficiency measures over private values.

use std::collections::HashMap;

use thiserror::Error;

use crate::book::{BookError, OrderBook};
use crate::matching::{me_price_interval, me_quantity, MatchingError, MatchingSet};
use crate::money::{Money, Price};
use crate::pricing::Trade;
use crate::shout::{Shout, ShoutId, Side, TraderId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no intra-marginal traders: underlying demand and supply do not cross")]
    NoCross,
    #[error("trade references trader {0} who is not in the value profile")]
    UnknownTrader(TraderId),
    #[error("invalid value profile: {0}")]
    InvalidProfile(#[from] BookError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraderValue {
    pub trader: TraderId,
    pub value: Money,
    pub entitlement: u32,
}

/// Private values and per-day entitlements of every trader in a market.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValueProfile {
    pub buyers: Vec<TraderValue>,
    pub sellers: Vec<TraderValue>,
}

impl ValueProfile {
    /// The book that truthful traders would submit.
    pub fn truthful_book(&self) -> Result<OrderBook, BookError> {
        let tagged = self
            .buyers
            .iter()
            .map(|t| (Side::Buy, t))
            .chain(self.sellers.iter().map(|t| (Side::Sell, t)));
        let shouts = tagged
            .enumerate()
            .map(|(i, (side, t))| {
                Shout::new(ShoutId::new(i as u64), t.trader, side, t.value, t.entitlement)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OrderBook::from_shouts(shouts)?.normalized())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Equilibrium {
    pub interval: (Price, Price),
    pub quantity: u64,
}

impl Equilibrium {
    /// Representative equilibrium price: interval midpoint, half-up.
    pub fn price(&self) -> Price {
        self.interval.0.midpoint(self.interval.1)
    }
}

/// Treats private values as truthful shouts and returns the equilibrium of
/// that book.
pub fn underlying_equilibrium(profile: &ValueProfile) -> Result<Equilibrium, MetricsError> {
    let book = profile.truthful_book()?;
    let interval = me_price_interval(&book).map_err(|e| match e {
        MatchingError::NoCross => MetricsError::NoCross,
        other => unreachable!("interval query cannot fail with {other}"),
    })?;
    Ok(Equilibrium {
        interval,
        quantity: me_quantity(&book),
    })
}

/// `Σ |v - p0| · q` over intra-marginal traders: buyers valuing at or above
/// `p0` and sellers valuing at or below it.
pub fn equilibrium_profit(profile: &ValueProfile, p0: Price) -> Money {
    let buyers = profile.buyers.iter().filter(|t| t.value >= p0);
    let sellers = profile.sellers.iter().filter(|t| t.value <= p0);
    buyers
        .chain(sellers)
        .map(|t| (t.value - p0).abs() * t.entitlement as u64)
        .sum()
}

/// `Σ |v - p| · q` over both counterparties of every trade.
pub fn actual_profit(trades: &[Trade], profile: &ValueProfile) -> Result<Money, MetricsError> {
    let buyers: HashMap<TraderId, Money> =
        profile.buyers.iter().map(|t| (t.trader, t.value)).collect();
    let sellers: HashMap<TraderId, Money> =
        profile.sellers.iter().map(|t| (t.trader, t.value)).collect();
    trades.iter().try_fold(Money::ZERO, |acc, t| {
        let vb = *buyers.get(&t.buyer).ok_or(MetricsError::UnknownTrader(t.buyer))?;
        let vs = *sellers.get(&t.seller).ok_or(MetricsError::UnknownTrader(t.seller))?;
        let q = t.quantity as u64;
        Ok(acc + (vb - t.price).abs() * q + (vs - t.price).abs() * q)
    })
}

/// `pa / pe` as a percentage; `None` when there is no equilibrium profit to
/// compare against.
pub fn allocative_efficiency(pa: Money, pe: Money) -> Option<f64> {
    (pe > Money::ZERO).then(|| 100.0 * pa.minor() as f64 / pe.minor() as f64)
}

/// `Σ (p(b) - p(a)) · q` over the pairs of a matching.
pub fn reported_profit(m: &MatchingSet) -> Money {
    m.pairs()
        .iter()
        .map(|p| p.spread() * p.quantity() as u64)
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub p0_interval: Option<(Price, Price)>,
    pub q0: u64,
    pub equilibrium_profit: Money,
    pub actual_profit: Money,
    /// Percentage; `None` when the equilibrium profit is zero.
    pub efficiency: Option<f64>,
    pub volume: u64,
}

/// Scores a set of executed trades against the profile's underlying
/// equilibrium, priced at the midpoint of the equilibrium interval.
pub fn efficiency_report(
    profile: &ValueProfile,
    trades: &[Trade],
) -> Result<EfficiencyReport, MetricsError> {
    let (p0_interval, q0, pe) = match underlying_equilibrium(profile) {
        Ok(eq) => (Some(eq.interval), eq.quantity, equilibrium_profit(profile, eq.price())),
        Err(MetricsError::NoCross) => (None, 0, Money::ZERO),
        Err(e) => return Err(e),
    };
    let pa = actual_profit(trades, profile)?;
    Ok(EfficiencyReport {
        p0_interval,
        q0,
        equilibrium_profit: pe,
        actual_profit: pa,
        efficiency: allocative_efficiency(pa, pe),
        volume: trades.iter().map(|t| t.quantity as u64).sum(),
    })
}
