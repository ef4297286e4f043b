use std::collections::HashMap;

use crate::money::Price;
use crate::shout::{Shout, ShoutId, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShoutRecord {
    pub id: ShoutId,
    pub side: Side,
    pub price: Price,
    pub accepted: bool,
}

/// Chronological record of shouts and whether each was eventually matched,
/// plus executed trade prices. Records are only ever appended; the
/// `accepted` flag flips once when the shout trades.
#[derive(Clone, Debug, Default)]
pub struct MarketHistory {
    records: Vec<ShoutRecord>,
    index: HashMap<ShoutId, usize>,
    trade_prices: Vec<Price>,
}

impl MarketHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_shout(&mut self, shout: &Shout) {
        self.index.insert(shout.id(), self.records.len());
        self.records.push(ShoutRecord {
            id: shout.id(),
            side: shout.side(),
            price: shout.price(),
            accepted: false,
        });
    }

    /// Marks a recorded shout as matched. Unknown ids are ignored.
    pub fn mark_accepted(&mut self, id: ShoutId) {
        if let Some(&i) = self.index.get(&id) {
            self.records[i].accepted = true;
        }
    }

    pub fn record_trade(&mut self, price: Price) {
        self.trade_prices.push(price);
    }

    pub fn records(&self) -> &[ShoutRecord] {
        &self.records
    }

    /// The most recent `memory` shout records, oldest first.
    pub fn recent(&self, memory: usize) -> &[ShoutRecord] {
        let start = self.records.len().saturating_sub(memory);
        &self.records[start..]
    }

    pub fn trade_prices(&self) -> &[Price] {
        &self.trade_prices
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
