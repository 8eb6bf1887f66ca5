//! Topic geometry: Jensen–Shannon distances between topics, principal
//! coordinates layouts and relevance-ranked term lists.

mod divergence;
pub mod eigen;
mod pcoa;
mod relevance;

pub use divergence::{
    check_distribution, js_divergence, rows_distance_matrix, topic_distance_matrix,
    DistanceKind, DistanceMatrix, NORMALIZATION_TOLERANCE,
};
pub use pcoa::{pcoa_layout, Layout};
pub use relevance::{relevance_scores, relevant_terms, term_probabilities, RelevanceConfig};
