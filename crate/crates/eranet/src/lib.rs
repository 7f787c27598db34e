//! Longitudinal analysis of influence networks embedded in historical eras.
//!
//! The crate ingests a directed network of scholars with lifespans, assigns
//! each scholar to one era of a configurable periodization, repairs
//! era-reversal anomalies, and then analyzes time-sliced projections of the
//! network: within-era, inter-era, and accumulated-era partial networks,
//! structural metrics, influence signatures and power scores, brokerage
//! roles, and dynamic community tracking.
//!
//! The companion guide under `book/` walks through each concept; its code
//! snippets compile and run as doctests, so the book and the library cannot
//! drift apart.

pub mod brokerage;
pub mod chronology;
pub mod community;
pub mod error;
pub(crate) mod graph;
pub mod influence;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod slicing;

pub use error::{Error, Result};
pub use model::{Era, EraScheme, InfluenceEdge, InfluenceNetwork, Scholar};

// The guide's chapters, compiled as doctests. Only built when rustdoc
// collects doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/eras.md")]
    mod eras {}
    #[doc = include_str!("../../../book/src/slicing.md")]
    mod slicing {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/influence.md")]
    mod influence {}
    #[doc = include_str!("../../../book/src/brokerage.md")]
    mod brokerage {}
    #[doc = include_str!("../../../book/src/communities.md")]
    mod communities {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
