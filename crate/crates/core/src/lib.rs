//! Audience-duplication and hyperlink networks for a shared set of sites.
//!
//! The two graphs are built over the same node ids, aligned, and then
//! compared through structural metrics, community detection, QAP
//! correlation and force-directed maps.

pub mod audience;
pub mod communities;
pub mod crawler;
mod error;
pub mod exec;
pub mod graph;
pub mod hyperlink;
pub mod layout;
pub mod metrics;
pub mod pipeline;
pub mod qap;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::{NodeSet, SiteNode, WeightedGraph};
