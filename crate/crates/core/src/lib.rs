//! Heterophily-aware graph neural bot detection.
//!
//! The crate is organised bottom-up: [`numcore`] provides matrices and a
//! reverse-mode tape, [`graph`] the multi-relation graph with homophily
//! metrics and synthetic benchmarks, [`homoaug`] the k-NN augmentation,
//! [`faat`] the attention network, [`train`] losses, training and ablations,
//! and [`experiments`] the sweeps behind the `hetbot` command line.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod faat;
pub mod features;
pub mod graph;
pub mod homoaug;
pub mod numcore;
pub mod train;

pub use error::{Error, Result};
