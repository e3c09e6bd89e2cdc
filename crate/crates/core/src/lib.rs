//! Robust distributed source coding with nested lattices.
//!
//! Two encoders each observe one of a pair of correlated sources. Each
//! quantizes to a fine central lattice, labels the result with a point of a
//! coarse side lattice, and sends extra data a joint decoder can use to
//! recover both central points exactly when the sources are close.
//!
//! - [`lattice`]: nearest-point search, Voronoi geometry, nested pairs
//! - [`labeling`]: the labeling maps and their index sets
//! - [`codec`]: config validation, encoder, side and central decoders
//! - [`sources`]: correlated source generators and tail probabilities
//! - [`metrics`]: distortion, entropy estimates, rate accounting
//! - [`theory`]: closed-form predictions and lemma oracles

pub mod codec;
pub mod error;
pub mod labeling;
pub mod lattice;
mod linalg;
pub mod metrics;
pub mod quadrature;
pub mod sources;
pub mod theory;

pub use codec::{
    default_r0, Branch, CentralDecode, CodecSpec, Condition, ConditionCheck, Description, EncodeTrace, LrdscConfig,
    RecoveryAudit, ValidationReport, MIN_SAFE_MU,
};
pub use error::{Error, Result};
pub use labeling::{Decomposition, Encoder, LabelingContext};
pub use lattice::{CellSelector, Lattice, LatticeGeometry, LatticeKind, NestedPair, Separation};
pub use linalg::IntMatrix;
pub use metrics::{
    conditional_entropy, empirical_distortion, plug_in_entropy, rate_account, CountTable, DistortionSum,
    EntropyEstimator, RateInputs, RdReport,
};
pub use sources::{
    markov_rho_bound, sample_pairs, tail_probability, Correlation, Marginal, PairSampler, SourceModel, SourcePair,
    TailEstimate,
};
pub use theory::{
    lemma3_oracle, lmmse_rates, r_md, r_rc, shape_lemma_probe, thm2_predictions, Prediction, PredictionInputs,
};
