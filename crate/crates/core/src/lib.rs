//! Deceptive review detection over a live review stream.
//!
//! A review is embedded ([`encoder`]), indexed for hybrid dense/sparse
//! retrieval ([`index`]), expanded into a heterogeneous evidence graph of
//! reviews and behavioral entities ([`graph`]) and adjudicated from the
//! evidence paths in that graph ([`reasoner`]). [`pipeline`] ties the stages
//! together; [`synth`] and [`eval`] generate and score synthetic campaigns.

pub mod canonical;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod http;
pub mod index;
pub mod model;
pub mod persist;
pub mod pipeline;
pub mod reasoner;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
