//! Desk-scale infrastructure for developing, composing and evaluating app
//! analysis and instrumentation techniques.
//!
//! The crate is organised around the lifecycle of a technique:
//!
//! - [`model`]: the app representation (callbacks as control-flow graphs).
//! - [`arch`] and [`techniques`]: technique manifests over six reference
//!   component kinds, composed into pipelines of built-in components.
//! - [`diff`], [`testgen`], [`exec`], [`compare`]: differential testing of an
//!   instrumented app against its original, from callback diffing through
//!   path-sensitive test generation, simulated execution and pair comparison.
//! - [`dsl`]: the test-scripting language and its runner.
//! - [`repo`]: the content-addressed repository and its REST service.
//! - [`cli`]: the `decree` command line.

pub mod arch;
pub mod cli;
pub mod compare;
pub mod diff;
pub mod digest;
pub mod dsl;
pub mod exec;
pub mod model;
pub mod rational;
pub mod repo;
pub mod techniques;
pub mod testgen;

pub use digest::{fnv1a64, Digest64};
pub use rational::Ratio;
