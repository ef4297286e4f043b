//! Plain-text order files.
//!
//! One shout per line: `BID|ASK <price> <quantity> [trader_id]`. Blank lines
//! and lines starting with `#` are skipped. Keywords are case-insensitive.
//!
//! ```text
//! # a small book
//! BID 10   1
//! BID 6.50 2 7
//! ASK 5    1
//! ```

use thiserror::Error;

use crate::book::{BookError, OrderBook};
use crate::metrics::{TraderValue, ValueProfile};
use crate::money::{Money, ParseMoneyError, Price};
use crate::shout::{Shout, ShoutId, Side, TraderId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderFileError {
    #[error("line {line}: expected `BID|ASK <price> <quantity> [trader_id]`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown side `{side}`")]
    UnknownSide { line: usize, side: String },
    #[error("line {line}: bad price: {source}")]
    BadPrice { line: usize, source: ParseMoneyError },
    #[error("line {line}: price must not be negative")]
    NegativePrice { line: usize },
    #[error("line {line}: quantity must be a positive integer")]
    BadQuantity { line: usize },
    #[error("line {line}: trader id must be a non-negative integer")]
    BadTrader { line: usize },
    #[error("line {line}: value files take exactly one unit per trader")]
    MultiUnitValue { line: usize },
    #[error(transparent)]
    Book(#[from] BookError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderLine {
    /// 1-based line number in the source text.
    pub line: usize,
    pub side: Side,
    pub price: Price,
    pub quantity: u32,
    pub trader: Option<TraderId>,
}

pub fn parse_orders(text: &str) -> Result<Vec<OrderLine>, OrderFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(OrderFileError::Malformed {
                line,
                text: trimmed.to_string(),
            });
        }
        let side = match fields[0].to_ascii_uppercase().as_str() {
            "BID" => Side::Buy,
            "ASK" => Side::Sell,
            _ => {
                return Err(OrderFileError::UnknownSide {
                    line,
                    side: fields[0].to_string(),
                })
            }
        };
        let price: Money = fields[1]
            .parse()
            .map_err(|source| OrderFileError::BadPrice { line, source })?;
        if price.is_negative() {
            return Err(OrderFileError::NegativePrice { line });
        }
        let quantity = fields[2]
            .parse::<u32>()
            .ok()
            .filter(|&q| q >= 1)
            .ok_or(OrderFileError::BadQuantity { line })?;
        let trader = fields
            .get(3)
            .map(|t| t.parse::<u32>().map(TraderId))
            .transpose()
            .map_err(|_| OrderFileError::BadTrader { line })?;
        out.push(OrderLine {
            line,
            side,
            price,
            quantity,
            trader,
        });
    }
    Ok(out)
}

/// Builds a normalized book. Shouts are numbered in file order; a line
/// without a trader id gets the trader id equal to its position.
pub fn book_from_orders(orders: &[OrderLine]) -> Result<OrderBook, OrderFileError> {
    let shouts = orders
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let trader = o.trader.unwrap_or(TraderId(i as u32));
            Shout::new(ShoutId::new(i as u64), trader, o.side, o.price, o.quantity)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(BookError::from)?;
    Ok(OrderBook::from_shouts(shouts)?.normalized())
}

/// Reads private values from order lines: each line is one trader, bids are
/// buyers and asks are sellers, and every quantity must be 1.
pub fn profile_from_orders(orders: &[OrderLine]) -> Result<ValueProfile, OrderFileError> {
    let mut profile = ValueProfile::default();
    for (i, o) in orders.iter().enumerate() {
        if o.quantity != 1 {
            return Err(OrderFileError::MultiUnitValue { line: o.line });
        }
        let v = TraderValue {
            trader: o.trader.unwrap_or(TraderId(i as u32)),
            value: o.price,
            entitlement: 1,
        };
        match o.side {
            Side::Buy => profile.buyers.push(v),
            Side::Sell => profile.sellers.push(v),
        }
    }
    Ok(profile)
}
