//! Shared input builders for the kernel benchmarks.

use htnqmc::htn::HtnState;
use htnqmc::pauli::Decomposition;

/// Tree state with deterministic pseudo-random angles.
pub fn seeded_htn(k: usize, n: usize, depth: usize, seed: u64) -> HtnState {
    let proto = HtnState::zeros(Decomposition::contiguous("cluster", k, n), depth);
    // Cheap splitmix-style angle fill; benchmarks only need fixed inputs.
    let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
    let flat: Vec<f64> = (0..proto.n_parameters())
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        })
        .collect();
    proto.with_flat_params(&flat).expect("length matches")
}
