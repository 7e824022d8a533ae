//! HTTP service and command-line front end over `jarvis-core`: review and
//! behavior ingestion, case adjudication, graph inspection and auditor
//! decisions, persisted as append-only logs under a data directory.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod records;
pub mod state;

pub use api::{router, serve, ApiOptions};
pub use config::{Backends, RunConfig, ServiceConfig};
pub use error::{ApiError, Problem};
pub use records::{AdoptionReport, AuditorDecision, CaseRecord, Decision};
pub use state::Service;
