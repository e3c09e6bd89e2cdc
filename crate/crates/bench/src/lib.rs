//! Fixed codecs and inputs shared by the benchmarks.

use lrdsc::{
    sample_pairs, CodecSpec, Correlation, Description, Encoder, IntMatrix, Lattice, LrdscConfig, Marginal, SourceModel,
    SourcePair,
};

/// Hexagonal codec with `K = 16`, `μ = 12` at resolution `θ`.
pub fn hex_codec(theta: f64) -> LrdscConfig {
    CodecSpec {
        central: Lattice::hexagonal(theta).expect("positive scale"),
        sublattice: IntMatrix::scalar(2, 4),
        mu: 12,
        r0: None,
        c: None,
        allow_small_mu: false,
    }
    .validate()
    .expect("valid codec")
}

/// Identical-source pairs; `x₂` is nudged inside the `r0` ball of `codec`.
pub fn inputs(codec: &LrdscConfig, count: usize, seed: u64) -> Vec<SourcePair> {
    let model = SourceModel::new(
        Marginal::Gaussian { variance: 1.0 },
        Correlation::BoundedDifference {
            delta: 0.5 * codec.r0() / (codec.dim() as f64).sqrt(),
        },
        codec.dim(),
    )
    .expect("valid model");
    sample_pairs(&model, count, seed).expect("sampling")
}

pub fn descriptions(codec: &LrdscConfig, pairs: &[SourcePair]) -> Vec<(Description, Description)> {
    pairs
        .iter()
        .map(|p| {
            (
                codec.encode(Encoder::First, &p.first).expect("finite"),
                codec.encode(Encoder::Second, &p.second).expect("finite"),
            )
        })
        .collect()
}

/// Intermediate coefficients of the first encoder's inputs.
pub fn intermediate_points(codec: &LrdscConfig, pairs: &[SourcePair]) -> Vec<Vec<i64>> {
    pairs
        .iter()
        .map(|p| {
            codec
                .encode_trace(Encoder::First, &p.first)
                .expect("finite")
                .intermediate
        })
        .collect()
}
