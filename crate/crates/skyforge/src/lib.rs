//! File formats, model endpoint client and command implementations on top
//! of `skyforge-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use skyforge_core as core;

pub mod client;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod io;
