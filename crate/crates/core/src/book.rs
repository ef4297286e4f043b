use thiserror::Error;

use crate::money::Price;
use crate::shout::{split_multi_unit, Shout, ShoutError, ShoutId, Side, TraderId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BookError {
    #[error("shout {0} is already in the book")]
    DuplicateShout(ShoutId),
    #[error(transparent)]
    Shout(#[from] ShoutError),
}

/// Bids and asks, each kept sorted ascending by price with ties broken by
/// ascending shout id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OrderBook {
    bids: Vec<Shout>,
    asks: Vec<Shout>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_shouts<I: IntoIterator<Item = Shout>>(shouts: I) -> Result<Self, BookError> {
        let (mut bids, mut asks): (Vec<Shout>, Vec<Shout>) =
            shouts.into_iter().partition(Shout::is_bid);
        bids.sort_unstable_by_key(Shout::sort_key);
        asks.sort_unstable_by_key(Shout::sort_key);

        let mut ids: Vec<ShoutId> = bids.iter().chain(&asks).map(Shout::id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(BookError::DuplicateShout(w[0]));
        }
        Ok(OrderBook { bids, asks })
    }

    /// Builds a unit-shout book from bare prices. Bids receive sequence
    /// numbers `0..bids.len()`, asks continue after them; each shout gets its
    /// own trader id equal to its sequence number.
    pub fn from_unit_prices(bids: &[Price], asks: &[Price]) -> Result<Self, BookError> {
        let sides = bids
            .iter()
            .map(|p| (Side::Buy, *p))
            .chain(asks.iter().map(|p| (Side::Sell, *p)));
        let shouts = sides
            .enumerate()
            .map(|(i, (side, price))| {
                Shout::unit(ShoutId::new(i as u64), TraderId(i as u32), side, price)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_shouts(shouts)
    }

    pub fn bids(&self) -> &[Shout] {
        &self.bids
    }

    pub fn asks(&self) -> &[Shout] {
        &self.asks
    }

    pub fn side(&self, side: Side) -> &[Shout] {
        match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        }
    }

    pub fn len(&self) -> usize {
        self.bids.len() + self.asks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    /// True when every shout carries exactly one unit.
    pub fn is_unit(&self) -> bool {
        self.bids.iter().chain(&self.asks).all(|s| s.quantity() == 1)
    }

    /// Equivalent book with every multi-unit shout split into unit shouts.
    pub fn normalized(&self) -> OrderBook {
        let split = |v: &[Shout]| {
            let mut out: Vec<Shout> = v.iter().flat_map(split_multi_unit).collect();
            out.sort_unstable_by_key(Shout::sort_key);
            out
        };
        OrderBook {
            bids: split(&self.bids),
            asks: split(&self.asks),
        }
    }

    pub fn get(&self, id: ShoutId) -> Option<&Shout> {
        self.bids.iter().chain(&self.asks).find(|s| s.id() == id)
    }

    pub fn contains(&self, id: ShoutId) -> bool {
        self.get(id).is_some()
    }

    pub fn insert(&mut self, shout: Shout) -> Result<(), BookError> {
        if self.contains(shout.id()) {
            return Err(BookError::DuplicateShout(shout.id()));
        }
        let side = match shout.side() {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let at = side.partition_point(|s| s.sort_key() < shout.sort_key());
        side.insert(at, shout);
        Ok(())
    }

    pub fn remove(&mut self, id: ShoutId) -> Option<Shout> {
        for side in [&mut self.bids, &mut self.asks] {
            if let Some(pos) = side.iter().position(|s| s.id() == id) {
                return Some(side.remove(pos));
            }
        }
        None
    }

    pub fn clear(&mut self) {
        self.bids.clear();
        self.asks.clear();
    }

    /// S(p): total ask quantity priced at or below `p`.
    pub fn supply_at(&self, p: Price) -> u64 {
        let end = self.asks.partition_point(|a| a.price() <= p);
        self.asks[..end].iter().map(|a| a.quantity() as u64).sum()
    }

    /// D(p): total bid quantity priced at or above `p`.
    pub fn demand_at(&self, p: Price) -> u64 {
        let start = self.bids.partition_point(|b| b.price() < p);
        self.bids[start..].iter().map(|b| b.quantity() as u64).sum()
    }

    pub fn total_supply(&self) -> u64 {
        self.asks.iter().map(|a| a.quantity() as u64).sum()
    }

    pub fn total_demand(&self) -> u64 {
        self.bids.iter().map(|b| b.quantity() as u64).sum()
    }
}
