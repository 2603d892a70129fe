//! Revenue-maximizing fixed-price selling of a single item of uncertain
//! quality, with and without a seller who commits to a quality signal.
//!
//! Start with [`valuation::Market`]; the `examples/` directory walks through
//! each capability.

pub mod cli;
pub mod error;
pub mod fixed_price;
pub mod numeric;
pub mod obedience;
pub mod oracle;
pub mod quality_dist;
pub mod signaling;
pub mod simulate;
pub mod valuation;

pub use error::{Error, Result};
pub use fixed_price::{FixedPriceSolution, Rationality};
pub use obedience::{ObedienceMode, ObedienceReport, Verdict};
pub use quality_dist::{DiscreteQualityGrid, Family, QualityDistribution};
pub use signaling::{Signal, SignalingMechanism, SignalingScheme};
pub use valuation::{Market, ValuationFunction, ValuationProfile};
