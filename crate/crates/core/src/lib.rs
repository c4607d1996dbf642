//! Exact pricing and superhedging of game (Israeli) options in finite
//! discrete markets with proportional transaction costs.
//!
//! The seller's ask price and the buyer's bid price are computed by backward
//! induction over continuous piecewise-linear value functions
//! ([`pricing`]), superhedging strategies are built forward from those
//! functions ([`strategy`]), and every result can be checked independently
//! against a brute-force exact linear program and dual objects
//! ([`oracle`]). [`risk`] evaluates shortfall risk of partial hedges.
//!
//! All arithmetic is exact over big rationals.
//!
//! ```
//! use gamehedge::{canon1, pricing::prices, scalar::{int, ratio}};
//!
//! let p = prices(&canon1()).unwrap();
//! assert_eq!(p.ask, int(2));
//! assert_eq!(p.bid, ratio(7, 4));
//! ```

pub mod error;
pub mod lp;
pub mod market;
pub mod oracle;
pub mod polyhedral;
pub mod pricing;
pub mod random;
pub mod risk;
pub mod scalar;
pub mod stopping;
pub mod strategy;

pub use error::{Error, Result};
pub use market::{canon0, canon1, EventTree, Instance, NodeId, Portfolio};
pub use polyhedral::{Ext, PolyFn, SlopeBand};
pub use scalar::Scalar;
pub use stopping::PureStoppingTime;
pub use strategy::{HedgeStrategy, Side};
