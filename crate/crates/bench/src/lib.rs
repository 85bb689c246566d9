//! Fixed inputs shared by the benches.

use std::sync::Arc;

use hmf_theta::exponents::presets;
use hmf_theta::sample::{random_expansion, random_weight};
use hmf_theta::{ExponentModel, QExpansion, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn model(name: &str) -> Arc<ExponentModel> {
    presets::load(name).expect("preset loads")
}

/// A seeded expansion with `nterms` terms drawn from the whole window.
pub fn expansion(model: &Arc<ExponentModel>, bound: i64, nterms: usize, seed: u64) -> QExpansion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = random_weight(model.shape(), 6, &mut rng);
    let l = random_weight(model.shape(), 6, &mut rng);
    let b = Rational::from_integer(bound);
    random_expansion(model, k, l, b, b, nterms, &mut rng).expect("window is nonempty")
}
