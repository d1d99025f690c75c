//! Scenario files, reports and the command layer for the switched adaptive
//! quadrotor simulator.
//!
//! The numerical work lives in `quadswitch-core`; this crate adds the TOML
//! schema ([`config`]), run analysis ([`report`]), CSV and summary output
//! ([`output`]) and the commands behind the `quadswitch` binary ([`app`]).

pub mod app;
pub mod config;
pub mod output;
pub mod report;
