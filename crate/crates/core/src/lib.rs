//! Triage toolkit for Linux kernel bug trackers.
//!
//! The crate covers the whole offline pipeline: ingesting Bugzilla and
//! syzkaller reports ([`corpus`]), building labeled datasets ([`annotate`]),
//! effort and root-cause analytics ([`stats`], [`taxonomy`]), retrieval over
//! embedded historical reports ([`retrieval`]), prompt-based and feature-based
//! classification ([`triage`]) and evaluation protocols ([`eval`]).

pub mod annotate;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod retrieval;
pub mod stats;
pub mod taxonomy;
pub mod triage;

mod concurrency;

pub use concurrency::bounded_map;
#[cfg(feature = "http")]
pub mod http;
