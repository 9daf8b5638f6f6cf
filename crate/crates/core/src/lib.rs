//! Metric distortion of query-limited randomized voting rules.

pub mod adversarial;
pub mod analysis;
pub mod checks;
pub mod error;
pub mod io;
pub mod mechanisms;
pub mod metric;
pub mod plane;
pub mod random;

pub use error::{Error, Result};
pub use mechanisms::{Mechanism, OutcomeDistribution};
pub use metric::{MetricInstance, Point};
