//! Groups internet memes by joint image/text embedding similarity and
//! analyzes the emotions those groups evoke.
//!
//! The pipeline: load a [`corpus`], align precomputed [`embedding`]s to it,
//! score all meme pairs across both modalities ([`similarity`]), take
//! connected components above a threshold ([`grouping`]), attach one of six
//! emotions to each caption ([`emotion`]), then summarize with contingency
//! tests and word counts ([`analytics`]) and score human survey answers
//! against the groups ([`evaluation`]).

pub mod analytics;
pub mod corpus;
pub mod embedding;
pub mod emotion;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod grouping;
pub mod similarity;
pub mod util;

pub use error::{Error, ErrorKind, Result};
