//! Dense kernels, reverse-mode gradients, Adam and finite-difference checking.

mod gradcheck;
mod matrix;
mod param;
mod tape;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, DEFAULT_STEP};
pub use matrix::{dot, elementwise, sigmoid, Activation, Matrix};
pub use param::{adam_step, glorot_uniform, AdamConfig, ParamId, ParamStore, Parameter};
pub use tape::{Gradients, Tape, Var};

use rand::Rng;

/// Inverted-dropout mask: each entry is 0 with probability `p`, else `1/(1−p)`.
pub fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut impl Rng) -> Matrix {
    if p <= 0.0 {
        return Matrix::filled(rows, cols, 1.0);
    }
    let keep = 1.0 / (1.0 - p);
    let data = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    Matrix::from_vec(rows, cols, data).expect("shape matches by construction")
}

/// Seeded RNG used everywhere randomness is needed.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
