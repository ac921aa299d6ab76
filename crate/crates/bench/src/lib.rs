//! Shared fixtures for the benchmarks.

use qms_core::gksl::{build_generator, GkslRep, Superoperator};
use qms_core::instances;
use qms_core::DensityState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A seeded generator with faithful invariant state at dimension `d`.
pub fn commuting_fixture(d: usize) -> (Superoperator, DensityState, GkslRep) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let (rep, rho) = instances::modular_commuting_instance(&mut rng, d);
    (build_generator(&rep), rho, rep)
}

/// A seeded special representation relative to a random faithful state.
pub fn special_fixture(d: usize, m: usize) -> (Superoperator, DensityState) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEE5);
    let rho = DensityState::random(&mut rng, d, 0.05).expect("faithful state");
    let rep = instances::random_special_rep(&mut rng, d, m, &rho);
    (build_generator(&rep), rho)
}
