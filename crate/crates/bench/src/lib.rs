//! Fixtures for the kernel benchmarks.

use cmla_core::{
    encode, fit_encoding, make_real, sample_synthetic, DataTable, EncodedMatrix, GeneratorKind,
    GeneratorSpec, MixtureSpec, RealRecipe, ScaleMode,
};

/// A real table from a two-component mixture over `dim` numerics.
pub fn real_table(n: usize, dim: usize, seed: u64) -> DataTable {
    make_real(&RealRecipe {
        n_rows: n,
        seed,
        mixture: MixtureSpec {
            weights: vec![0.5, 0.5],
            means: vec![vec![0.0; dim], vec![4.0; dim]],
            scale: 1.0,
        },
        numeric_names: Vec::new(),
        categorical: Vec::new(),
    })
    .expect("valid recipe")
}

/// Synthetic table drawn from `real` with light noise, plus both tables
/// encoded under the synthetic model.
pub fn encoded_pair(
    real: &DataTable,
    n: usize,
    seed: u64,
) -> (DataTable, EncodedMatrix, EncodedMatrix) {
    let synth = sample_synthetic(
        real,
        &GeneratorSpec::new(GeneratorKind::Noised { sigma: 0.02 }, seed, n),
    )
    .expect("valid spec");
    let model = fit_encoding(&synth, ScaleMode::Minmax).expect("fit");
    let s = encode(&model, &synth).expect("encode synthetic");
    let r = encode(&model, real).expect("encode real");
    (synth, s, r)
}
