use std::fmt;

use thiserror::Error;

use crate::money::Price;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Buy => "BID",
            Side::Sell => "ASK",
        })
    }
}

/// Shout identifier: the ordinal of the originating shout plus the unit index
/// assigned when a multi-unit shout is split. Ordering is lexicographic, so
/// sorting by id reproduces insertion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShoutId {
    pub seq: u64,
    pub unit: u32,
}

impl ShoutId {
    pub const fn new(seq: u64) -> Self {
        ShoutId { seq, unit: 0 }
    }
}

impl fmt::Display for ShoutId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.seq, self.unit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraderId(pub u32);

impl fmt::Display for TraderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShoutError {
    #[error("shout {0} has negative price {1}")]
    NegativePrice(ShoutId, Price),
    #[error("shout {0} has zero quantity")]
    ZeroQuantity(ShoutId),
}

/// A priced offer to buy (bid) or sell (ask).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shout {
    id: ShoutId,
    trader: TraderId,
    side: Side,
    price: Price,
    quantity: u32,
}

impl Shout {
    pub fn new(
        id: ShoutId,
        trader: TraderId,
        side: Side,
        price: Price,
        quantity: u32,
    ) -> Result<Self, ShoutError> {
        if price.is_negative() {
            return Err(ShoutError::NegativePrice(id, price));
        }
        if quantity == 0 {
            return Err(ShoutError::ZeroQuantity(id));
        }
        Ok(Shout {
            id,
            trader,
            side,
            price,
            quantity,
        })
    }

    /// Single-unit shout.
    pub fn unit(id: ShoutId, trader: TraderId, side: Side, price: Price) -> Result<Self, ShoutError> {
        Shout::new(id, trader, side, price, 1)
    }

    pub fn id(&self) -> ShoutId {
        self.id
    }

    pub fn trader(&self) -> TraderId {
        self.trader
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn price(&self) -> Price {
        self.price
    }

    pub fn quantity(&self) -> u32 {
        self.quantity
    }

    pub fn is_bid(&self) -> bool {
        self.side == Side::Buy
    }

    /// Sort key used everywhere shouts are ordered: ascending price, ties by id.
    pub fn sort_key(&self) -> (Price, ShoutId) {
        (self.price, self.id)
    }
}

/// Splits a shout into `quantity` single-unit shouts with the same price,
/// trader and side. Children keep the parent's sequence number and take
/// consecutive unit indices starting from the parent's.
pub fn split_multi_unit(shout: &Shout) -> Vec<Shout> {
    (0..shout.quantity)
        .map(|k| Shout {
            id: ShoutId {
                seq: shout.id.seq,
                unit: shout.id.unit + k,
            },
            quantity: 1,
            ..*shout
        })
        .collect()
}
