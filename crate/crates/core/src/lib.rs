//! Double-auction market clearing.
//!
//! Three clearing policies over a book of unit shouts:
//!
//! * equilibrium matching (ME), which trades only intra-marginal shouts,
//! * maximal-volume matching (MV), which trades as many units as the book allows,
//! * the Mθ family, which interpolates between no trade, ME and MV.
//!
//! On top of these sit trader strategies, a clearing-house and continuous
//! double-auction simulator, efficiency metrics and a batch experiment runner.

pub mod book;
pub mod experiments;
pub mod market;
pub mod matching;
pub mod metrics;
pub mod money;
pub mod orders;
pub mod pricing;
pub mod shout;
pub mod traders;

pub use book::{BookError, OrderBook};
pub use market::{DayResult, Market, MechanismKind, MechanismSpec};
pub use matching::{ClearingResult, MatchPair, MatchingError, MatchingSet, Theta};
pub use metrics::{EfficiencyReport, ValueProfile};
pub use money::{Money, Price};
pub use pricing::{PricingRule, Trade};
pub use shout::{Shout, ShoutId, Side, TraderId};
pub use traders::{StrategyKind, Trader, TraderState};
