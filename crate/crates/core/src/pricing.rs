use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::MatchingSet;
use crate::money::Price;
use crate::shout::{ShoutId, TraderId};

/// How executed pairs are priced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PricingRule {
    /// Every pair trades at the midpoint of the uniform-price interval.
    UniformMidOfInterval,
    /// Each pair trades at the midpoint of its own bid and ask.
    #[default]
    PairMidpoint,
}

impl FromStr for PricingRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(PricingRule::UniformMidOfInterval),
            "midpoint" => Ok(PricingRule::PairMidpoint),
            other => Err(format!("unknown pricing rule `{other}` (expected uniform|midpoint)")),
        }
    }
}

impl fmt::Display for PricingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PricingRule::UniformMidOfInterval => "uniform",
            PricingRule::PairMidpoint => "midpoint",
        })
    }
}

impl TryFrom<String> for PricingRule {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PricingRule> for String {
    fn from(r: PricingRule) -> String {
        r.to_string()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PricingError {
    #[error("uniform pricing needs a clearing interval but none was supplied")]
    IntervalMissing,
    #[error("uniform price {price} lies outside pair {bid}/{ask} spread [{ask_price}, {bid_price}]")]
    UniformInapplicable {
        price: Price,
        bid: ShoutId,
        ask: ShoutId,
        bid_price: Price,
        ask_price: Price,
    },
}

/// An executed pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trade {
    pub bid_id: ShoutId,
    pub ask_id: ShoutId,
    pub buyer: TraderId,
    pub seller: TraderId,
    pub bid_price: Price,
    pub ask_price: Price,
    pub price: Price,
    pub quantity: u32,
    pub day: u32,
    pub round: u32,
}

/// Prices every pair of `m`. Trades are stamped day 0, round 0; the market
/// overwrites the stamp when it executes them.
pub fn price_matching(
    m: &MatchingSet,
    rule: PricingRule,
    interval: Option<(Price, Price)>,
) -> Result<Vec<Trade>, PricingError> {
    let uniform = match rule {
        PricingRule::PairMidpoint => None,
        PricingRule::UniformMidOfInterval => {
            let (lo, hi) = interval.ok_or(PricingError::IntervalMissing)?;
            Some(lo.midpoint(hi))
        }
    };

    m.pairs()
        .iter()
        .map(|pair| {
            let (bid_price, ask_price) = (pair.bid.price(), pair.ask.price());
            let price = match uniform {
                None => bid_price.midpoint(ask_price),
                Some(p) if ask_price <= p && p <= bid_price => p,
                Some(p) => {
                    return Err(PricingError::UniformInapplicable {
                        price: p,
                        bid: pair.bid.id(),
                        ask: pair.ask.id(),
                        bid_price,
                        ask_price,
                    })
                }
            };
            Ok(Trade {
                bid_id: pair.bid.id(),
                ask_id: pair.ask.id(),
                buyer: pair.bid.trader(),
                seller: pair.ask.trader(),
                bid_price,
                ask_price,
                price,
                quantity: pair.quantity(),
                day: 0,
                round: 0,
            })
        })
        .collect()
}
