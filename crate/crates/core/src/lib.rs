//! Word-level LSTM reordering model for phrase-based machine translation.
//!
//! The pipeline turns word-aligned parallel text into target-ordered
//! word-pair events labelled with orientations ([`orientation`]), trains a
//! recurrent classifier over them ([`model`], built on [`nn`]), and adds the
//! model's log-probability to n-best lists ([`rescore`]).

pub mod cli;
pub mod corpus;
pub mod error;
pub mod model;
pub mod nn;
pub mod orientation;
pub mod rescore;
pub mod synth;

pub use error::{Error, Result};
