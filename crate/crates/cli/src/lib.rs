//! Scenario harness and command-line front end for `regvar`.

pub mod app;
pub mod report;
pub mod scenarios;
