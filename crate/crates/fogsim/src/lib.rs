//! Trace-driven simulator for hierarchical caching in cellular networks.
//!
//! The pipeline reconstructs (or synthesizes) per-operator topologies from
//! geotagged records, assigns per-content-item demand under configurable
//! recommendation and locality biases, computes the minimum cache deployment
//! achieving a target hit ratio at each of four network levels, and reports
//! price-of-fog, cache-size distributions, and mean data-travel distance.

pub mod cache;
pub mod config;
pub mod demand;
pub mod geo;
pub mod metrics;
pub mod scenario;
pub mod seed;
pub mod topology;
pub mod trace;
