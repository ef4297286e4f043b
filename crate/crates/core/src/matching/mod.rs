//! Clearing policies for a single-unit double auction.
//!
//! Three policies share one pairing routine: the `q` most competitive bids
//! and the `q` most competitive asks are each taken in ascending price order
//! and paired index by index. They differ only in how `q` is chosen:
//!
//! * equilibrium matching (ME) uses `max_p min(S(p), D(p))`;
//! * maximal-volume matching (MV) uses `min_p (S(p) + D(p))`, found by a
//!   single linear scan of the sorted book;
//! * the parametric family interpolates between `0`, the ME volume and the
//!   MV volume with a parameter in `[-1, 1]`.
//!
//! The [`properties`] module holds the structural predicates (valid, fair,
//! orderly) and the repair transforms, and [`oracle`] holds brute-force
//! certifiers that share no code with the policies.

use std::fmt;

use thiserror::Error;

use crate::money::{Money, Price};
use crate::shout::{Shout, ShoutId};

pub mod oracle;
mod policy;
pub mod properties;

pub use oracle::{oracle_max_reported_profit, oracle_max_volume, ORACLE_MAX_SIDE};
pub use policy::{
    me_match, me_price_interval, me_quantity, mtheta_match, mtheta_quantity, mv_get_q,
    mv_get_q_counted, mv_match, pair_most_competitive, VolumeScan,
};
pub use properties::{is_fair, is_orderly, is_valid_matching, make_fair, make_orderly};

#[derive(Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error("demand and supply do not cross")]
    NoCross,
    #[error("instance has {bids} bids and {asks} asks; the oracle accepts at most {limit} per side")]
    TooLarge { bids: usize, asks: usize, limit: usize },
    #[error("theta {0} is outside [-1, 1]")]
    ThetaOutOfRange(f64),
}

/// A matched bid and ask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatchPair {
    pub bid: Shout,
    pub ask: Shout,
}

impl MatchPair {
    /// Bid price minus ask price, per unit.
    pub fn spread(&self) -> Money {
        self.bid.price() - self.ask.price()
    }

    pub fn quantity(&self) -> u32 {
        self.bid.quantity()
    }
}

/// The output of every clearing policy: a set of bid-ask pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchingSet {
    pairs: Vec<MatchPair>,
}

impl MatchingSet {
    pub fn new(pairs: Vec<MatchPair>) -> Self {
        MatchingSet { pairs }
    }

    pub fn pairs(&self) -> &[MatchPair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<MatchPair> {
        self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Units traded. Equals `len()` for unit shouts.
    pub fn volume(&self) -> u64 {
        self.pairs.iter().map(|p| p.quantity() as u64).sum()
    }

    pub fn bids(&self) -> impl Iterator<Item = &Shout> {
        self.pairs.iter().map(|p| &p.bid)
    }

    pub fn asks(&self) -> impl Iterator<Item = &Shout> {
        self.pairs.iter().map(|p| &p.ask)
    }

    pub fn shout_ids(&self) -> impl Iterator<Item = ShoutId> + '_ {
        self.pairs
            .iter()
            .flat_map(|p| [p.bid.id(), p.ask.id()])
    }
}

impl FromIterator<MatchPair> for MatchingSet {
    fn from_iter<I: IntoIterator<Item = MatchPair>>(iter: I) -> Self {
        MatchingSet::new(iter.into_iter().collect())
    }
}

/// Parameter of the parametric policy: `-1` matches nothing, `0` is ME and
/// `1` is MV.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Theta(f64);

impl Theta {
    pub const NONE: Theta = Theta(-1.0);
    pub const EQUILIBRIUM: Theta = Theta(0.0);
    pub const MAX_VOLUME: Theta = Theta(1.0);

    pub fn new(value: f64) -> Result<Self, MatchingError> {
        if (-1.0..=1.0).contains(&value) {
            Ok(Theta(value))
        } else {
            Err(MatchingError::ThetaOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Outcome of one parametric clearing.
#[derive(Clone, Debug, PartialEq)]
pub struct ClearingResult {
    pub matching: MatchingSet,
    pub q_me: u64,
    pub q_mv: u64,
    pub q_target: u64,
    /// Uniform-price interval of the book; `None` when nothing crosses.
    pub price_interval: Option<(Price, Price)>,
}
