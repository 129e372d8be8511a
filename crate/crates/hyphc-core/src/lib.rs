//! Interaction-pattern features and hyperbolic hierarchical clustering for
//! classifying retweet behaviour.
//!
//! The pipeline, end to end:
//!
//! 1. [`ingest`] parses line-delimited tweet/profile files and a label CSV
//!    into an indexed, immutable [`ingest::Corpus`].
//! 2. [`influencers`] ranks accounts by distinct-retweeter count
//!    (`rt_score`), selects the top `p` as Influencers and builds the set of
//!    users engaging with them.
//! 3. [`features`] assembles the per-user interaction matrix `F` (median
//!    retweet delay and retweet count against each Influencer) plus 13
//!    user-level profile features.
//! 4. [`hyphc`] embeds users in the Poincaré ball by minimizing a continuous
//!    relaxation of the Dasgupta cost over sampled triplets, and decodes the
//!    embedding back into a binary hierarchy.
//! 5. [`baselines`] provides PCA, feature agglomeration and spectral
//!    embedding for comparison.
//! 6. [`learn`] and [`eval`] run the classification experiments (SMOTE,
//!    random forest, F1 per class separation) and centroid-distance reports.
//! 7. [`synth`] generates deterministic corpora with planted collusive
//!    groups so the whole pipeline is testable offline.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod hyperbolic;
pub mod hyphc;
pub mod influencers;
pub mod ingest;
pub mod learn;
pub mod synth;

pub use data::FeatureMatrix;
pub use error::{Error, Result};
