//! Semantic-flow characterization of long documents.
//!
//! A document is split into sentences, each sentence is embedded as the mean
//! of its word vectors, and the sentences are linked into a k-nearest-neighbour
//! similarity network. Communities of that network act as semantic fields; the
//! order in which the text visits them forms a first-order Markov chain whose
//! 2- and 3-node motifs become the document's feature vector. The
//! [`classify`] module evaluates classifiers on those features.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, caching and the
//! command line live in the `semflow` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classify;
pub mod community;
pub mod corpus;
pub mod embed;
mod error;
pub mod motifs;
pub mod semflow;
pub mod simnet;

pub use error::{Error, Result};
