//! Scenario generation, scoring and parameter sweeps.

mod scenario;
mod score;
mod sweep;

pub use scenario::*;
pub use score::*;
pub use sweep::*;
