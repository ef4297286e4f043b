//! Trading strategies: truth telling (TT), fixed markup (PS), zero
//! intelligence with constraint (ZI-C) and Gjerstad-Dickhaut (GD).
//!
//! Every strategy respects the no-loss constraint: buyers never bid above
//! their private value and sellers never ask below it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::{Money, Price, SCALE};
use crate::shout::{ShoutId, Side, TraderId};

pub mod gd;
mod history;

pub use gd::{gd_belief, gd_offer, gd_opening_offer, GdParams};
pub use history::{MarketHistory, ShoutRecord};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraderState {
    pub id: TraderId,
    pub side: Side,
    pub private_value: Money,
    pub entitlement_remaining: u32,
    pub active_shout: Option<ShoutId>,
}

impl TraderState {
    pub fn new(id: TraderId, side: Side, private_value: Money) -> Self {
        TraderState {
            id,
            side,
            private_value,
            entitlement_remaining: 1,
            active_shout: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("unknown strategy `{0}` (expected tt | ps:<delta> | zic | gd[:memory,grid])")]
    Unknown(String),
    #[error("invalid strategy parameter in `{0}`")]
    BadParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyKind {
    TruthTelling,
    PureSimple { delta: Money },
    ZeroIntelligenceC,
    GjerstadDickhaut(GdParams),
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s.trim().to_ascii_lowercase();
        let bad = || StrategyError::BadParameter(s.to_string());
        let (name, arg) = match raw.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (raw.as_str(), None),
        };
        match (name, arg) {
            ("tt", None) => Ok(StrategyKind::TruthTelling),
            ("ps", Some(delta)) => {
                let delta: Money = delta.parse().map_err(|_| bad())?;
                if delta.is_negative() {
                    return Err(bad());
                }
                Ok(StrategyKind::PureSimple { delta })
            }
            ("zic" | "zi-c", None) => Ok(StrategyKind::ZeroIntelligenceC),
            ("gd", None) => Ok(StrategyKind::GjerstadDickhaut(GdParams::default())),
            ("gd", Some(params)) => {
                let (memory, grid) = params.split_once(',').ok_or_else(bad)?;
                let memory: usize = memory.trim().parse().map_err(|_| bad())?;
                let grid: usize = grid.trim().parse().map_err(|_| bad())?;
                if memory == 0 || grid < 2 {
                    return Err(bad());
                }
                Ok(StrategyKind::GjerstadDickhaut(GdParams { memory, grid }))
            }
            _ => Err(StrategyError::Unknown(s.to_string())),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::TruthTelling => f.write_str("tt"),
            StrategyKind::PureSimple { delta } if delta.minor() % SCALE == 0 => {
                write!(f, "ps:{}", delta.minor() / SCALE)
            }
            StrategyKind::PureSimple { delta } => write!(f, "ps:{delta}"),
            StrategyKind::ZeroIntelligenceC => f.write_str("zic"),
            StrategyKind::GjerstadDickhaut(p) if *p == GdParams::default() => f.write_str("gd"),
            StrategyKind::GjerstadDickhaut(p) => write!(f, "gd:{},{}", p.memory, p.grid),
        }
    }
}

impl TryFrom<String> for StrategyKind {
    type Error = StrategyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<StrategyKind> for String {
    fn from(k: StrategyKind) -> String {
        k.to_string()
    }
}

pub fn tt_offer(state: &TraderState) -> Price {
    state.private_value
}

pub fn ps_offer(state: &TraderState, delta: Money) -> Price {
    match state.side {
        Side::Buy => (state.private_value - delta).max(Money::ZERO),
        Side::Sell => state.private_value + delta,
    }
}

/// Uniform draw from `[0, v]` for buyers and `[v, 2v]` for sellers.
pub fn zic_offer<R: Rng + ?Sized>(state: &TraderState, rng: &mut R) -> Price {
    let v = state.private_value.minor();
    let (lo, hi) = match state.side {
        Side::Buy => (0, v),
        Side::Sell => (v, 2 * v),
    };
    Money::from_minor(rng.random_range(lo..=hi))
}

/// A trader: its state, strategy and private random stream.
#[derive(Clone, Debug)]
pub struct Trader {
    pub state: TraderState,
    pub strategy: StrategyKind,
    rng: ChaCha8Rng,
}

impl Trader {
    pub fn new(state: TraderState, strategy: StrategyKind, seed: u64) -> Self {
        Trader {
            state,
            strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Price of the shout this trader wants to post now, given what it has
    /// observed. `None` means it stays out this round.
    pub fn decide(&mut self, observed: &MarketHistory) -> Option<Price> {
        if self.state.entitlement_remaining == 0 {
            return None;
        }
        let price = match self.strategy {
            StrategyKind::TruthTelling => tt_offer(&self.state),
            StrategyKind::PureSimple { delta } => ps_offer(&self.state, delta),
            StrategyKind::ZeroIntelligenceC => zic_offer(&self.state, &mut self.rng),
            StrategyKind::GjerstadDickhaut(params) => gd_offer(&self.state, observed, &params)
                .unwrap_or_else(|| gd_opening_offer(&self.state)),
        };
        Some(price)
    }
}
