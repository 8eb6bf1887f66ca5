//! Topic-model mapping of a research landscape and its alignment with a
//! second, demand-side corpus.
//!
//! The pipeline: load documents ([`corpus`]), delineate a field from seed
//! documents and citation clusters ([`delineation`]), build vocabularies and
//! count matrices ([`vocab`]), fit LDA by collapsed Gibbs sampling
//! ([`topicmodel`]), lay out topic maps ([`geometry`]), compare topic sets
//! across corpora ([`align`]) and summarise topic usage ([`analytics`]).

pub mod align;
pub mod analytics;
pub mod corpus;
pub mod delineation;
mod error;
pub mod geometry;
pub mod synth;
pub mod table;
pub mod topicmodel;
pub mod vocab;

pub use error::{Error, Result};
