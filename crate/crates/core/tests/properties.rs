//! Cross-module invariants that need more than one subsystem at a time:
//! generator/serialization round trips, sparse-vs-dense agreement, walker
//! dynamics against the diagonalization oracle, and the ansatz-vs-tree
//! fidelity pattern.

use htnqmc::fciqmc::{run_fciqmc, QmcConfig, ReferenceWavefunction};
use htnqmc::htn::{htn_energy, HtnState};
use htnqmc::models::{
    build_graphite_hubbard, build_heisenberg_chain, GRAPHITE_T1, GRAPHITE_T2, GRAPHITE_U,
};
use htnqmc::oracle::{
    dense_hamiltonian, energy_stats, fidelity, ground_state, single_reference_state,
};
use htnqmc::pauli::{
    connected_states, interaction_strength_gmr, matrix_element, parse_hamiltonian_text,
    Decomposition, PauliOp, PauliString, PauliSum,
};
use htnqmc::statevector::{apply_circuit, expectation, real_amplitude_ansatz, Statevector};
use htnqmc::vqe::{htn_vqe_minimize, vqe_minimize, OptimizerConfig};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn random_real_symmetric_sum(n: usize, n_terms: usize, rng: &mut ChaCha12Rng) -> PauliSum {
    let mut terms = Vec::new();
    for _ in 0..n_terms {
        let mut ops: Vec<PauliOp> = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => PauliOp::I,
                1 => PauliOp::X,
                _ => PauliOp::Z,
            })
            .collect();
        // Y letters in pairs keep every term real.
        if n >= 2 && rng.gen_bool(0.4) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            ops[a] = PauliOp::Y;
            ops[b] = PauliOp::Y;
        }
        terms.push((rng.gen_range(-1.0..1.0), PauliString::new(ops)));
    }
    PauliSum::from_terms(n, terms).unwrap()
}

#[test]
fn generators_round_trip_through_file_format() {
    for sum in [
        build_heisenberg_chain(2, 1.0).unwrap(),
        build_heisenberg_chain(3, 0.4).unwrap(),
        build_graphite_hubbard(GRAPHITE_T1, GRAPHITE_T2, GRAPHITE_U).unwrap(),
    ] {
        let text = htnqmc::pauli::hamiltonian_to_text(&sum);
        let back = parse_hamiltonian_text(&text).unwrap();
        assert_eq!(back, sum);
    }
}

#[test]
fn save_and_load_files() {
    let sum = build_graphite_hubbard(GRAPHITE_T1, GRAPHITE_T2, GRAPHITE_U).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hamiltonian.txt");
    htnqmc::pauli::save_hamiltonian_file(&sum, &path).unwrap();
    let back = htnqmc::pauli::load_hamiltonian_file(&path).unwrap();
    assert_eq!(back, sum);
}

#[test]
fn connected_states_reproduce_dense_columns() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    for n in [4usize, 7, 10] {
        let sum = random_real_symmetric_sum(n, 8, &mut rng);
        let dense = dense_hamiltonian(&sum).unwrap();
        let dim = 1u64 << n;
        for _ in 0..20 {
            let col = rng.gen_range(0..dim);
            let mut rebuilt = vec![0.0f64; dim as usize];
            rebuilt[col as usize] = sum.diagonal_element(col);
            for (row, el) in connected_states(&sum, col) {
                rebuilt[row as usize] += el;
            }
            for row in 0..dim {
                assert!(
                    (rebuilt[row as usize] - dense[(row as usize, col as usize)]).abs() < 1e-12,
                    "n={} column {} row {}",
                    n,
                    col,
                    row
                );
            }
        }
    }
}

#[test]
fn matrix_elements_symmetric_at_six_qubits() {
    let mut rng = ChaCha12Rng::seed_from_u64(32);
    let sum = random_real_symmetric_sum(6, 10, &mut rng);
    for _ in 0..500 {
        let a = rng.gen_range(0..64u64);
        let b = rng.gen_range(0..64u64);
        let ab = matrix_element(&sum, a, b).unwrap();
        let ba = matrix_element(&sum, b, a).unwrap();
        assert!((ab - ba).abs() <= 1e-10);
    }
}

#[test]
fn interaction_strength_invariances() {
    let h = build_heisenberg_chain(2, 0.7).unwrap();
    let base = Decomposition::contiguous("cluster", 2, 4);
    let reference = interaction_strength_gmr(&h, &base).unwrap();

    let mut rng = ChaCha12Rng::seed_from_u64(33);
    for _ in 0..20 {
        let mut groups: Vec<Vec<usize>> = base.groups().to_vec();
        // Permute qubits inside each group and shuffle the group order.
        for g in &mut groups {
            g.shuffle(&mut rng);
        }
        groups.shuffle(&mut rng);
        let dec = Decomposition::new("shuffled", groups).unwrap();
        let g = interaction_strength_gmr(&h, &dec).unwrap();
        assert!((g - reference).abs() < 1e-12);
    }
}

#[test]
fn heisenberg_elements_match_dense_matrix() {
    let h = build_heisenberg_chain(2, 1.0).unwrap();
    let dense = dense_hamiltonian(&h).unwrap();
    let neel = 0b01010101u64;
    let diag = matrix_element(&h, neel, neel).unwrap();
    assert!((diag - dense[(neel as usize, neel as usize)]).abs() < 1e-12);
    assert!((diag - h.diagonal_element(neel)).abs() < 1e-12);
    for (row, el) in connected_states(&h, neel) {
        assert!((el - dense[(row as usize, neel as usize)]).abs() < 1e-12);
    }
}

#[test]
fn heisenberg_energy_is_additive_at_zero_coupling() {
    let e_single = ground_state(&build_heisenberg_chain(1, 1.0).unwrap(), None).unwrap().energy;
    let decoupled = build_heisenberg_chain(2, 0.0).unwrap();
    let e_pair = ground_state(&decoupled, None).unwrap().energy;
    assert!((e_pair - 2.0 * e_single).abs() < 1e-9);
    // Coupling lowers the ground energy variationally.
    let coupled = ground_state(&build_heisenberg_chain(2, 0.2).unwrap(), None).unwrap().energy;
    assert!(coupled < e_pair + 1e-12);
}

#[test]
fn ansatz_expectation_matches_dense_quadratic_form() {
    let h = build_heisenberg_chain(2, 1.0).unwrap();
    let dense = dense_hamiltonian(&h).unwrap();
    let circuit = real_amplitude_ansatz(8, 3);
    let mut rng = ChaCha12Rng::seed_from_u64(34);
    for _ in 0..5 {
        let params: Vec<f64> = (0..circuit.n_parameters()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let state = apply_circuit(&circuit, &params, &Statevector::zero(8)).unwrap();
        let direct = expectation(&state, &h).unwrap();
        let mut quad = 0.0;
        for row in 0..256 {
            for col in 0..256 {
                quad += state.amplitude(row as u64).re
                    * dense[(row, col)]
                    * state.amplitude(col as u64).re;
            }
        }
        assert!((direct - quad).abs() < 1e-10);
    }
}

#[test]
fn htn_energy_matches_dense_expectation() {
    let h = build_heisenberg_chain(2, 1.0).unwrap();
    let dec = Decomposition::contiguous("cluster", 2, 4);
    let proto = HtnState::zeros(dec, 3);
    let mut rng = ChaCha12Rng::seed_from_u64(35);
    for _ in 0..5 {
        let flat: Vec<f64> = (0..proto.n_parameters()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let s = proto.with_flat_params(&flat).unwrap();
        let tree = htn_energy(&s, &h).unwrap();
        let dense = expectation(&s.expand_dense().unwrap(), &h).unwrap();
        assert!((tree - dense).abs() < 1e-10);
    }
}

#[test]
fn shift_tracks_ground_energy() {
    let h = build_heisenberg_chain(1, 1.0).unwrap();
    let e_exact = ground_state(&h, None).unwrap().energy;
    let start = single_reference_state(&h, None).unwrap();
    let reference = ReferenceWavefunction::single_basis(start);
    let cfg = QmcConfig { seed: 3, ..Default::default() };
    let trace = run_fciqmc(&h, &reference, start, &cfg).unwrap();

    let shifts: Vec<f64> = trace
        .records()
        .iter()
        .filter(|r| r.iteration >= 5_000)
        .map(|r| r.shift)
        .collect();
    let mean = shifts.iter().sum::<f64>() / shifts.len() as f64;
    let std = (shifts.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / shifts.len() as f64)
        .sqrt();
    assert!(
        (mean - e_exact).abs() <= 3.0 * std,
        "shift mean {} vs exact {} (std {})",
        mean,
        e_exact,
        std
    );
}

#[test]
fn walker_count_is_stationary_in_shift_mode() {
    let h = build_heisenberg_chain(1, 1.0).unwrap();
    let start = single_reference_state(&h, None).unwrap();
    let reference = ReferenceWavefunction::single_basis(start);
    let cfg = QmcConfig { seed: 4, ..Default::default() };
    let trace = run_fciqmc(&h, &reference, start, &cfg).unwrap();
    let activation = trace.shift_mode_start.expect("shift mode must activate");
    let n_at_activation = trace.records()[activation].n_walkers as f64;
    let late: Vec<f64> = trace
        .records()
        .iter()
        .filter(|r| r.iteration > activation)
        .map(|r| r.n_walkers as f64)
        .collect();
    let mean = late.iter().sum::<f64>() / late.len() as f64;
    assert!(
        mean > n_at_activation / 2.0 && mean < n_at_activation * 2.0,
        "mean {} vs activation {}",
        mean,
        n_at_activation
    );
}

#[test]
fn mixed_energy_window_examples() {
    // Constant trace and the ±1 alternation pin the stats conventions.
    let h = PauliSum::from_terms(1, vec![(1.0, PauliString::with_ops(1, &[(0, PauliOp::Z)]))]).unwrap();
    let reference = ReferenceWavefunction::single_basis(1);
    let cfg = QmcConfig { max_iters: 50, window: (10, 50), ..Default::default() };
    let trace = run_fciqmc(&h, &reference, 1, &cfg).unwrap();
    let stats = energy_stats(&trace, (10, 50), -1.0).unwrap();
    assert_eq!(stats.mean, -1.0);
    assert_eq!(stats.std, 0.0);
    assert_eq!(stats.abs_error, 0.0);
}

#[test]
fn no_decomposition_ansatz_matches_tree_fidelity_pattern() {
    // Best-of-five depth-10 flat ansatz against the depth-4 cluster tree:
    // the two should reach comparable fidelities, with the flat ansatz at
    // 88 parameters against the tree's 50.
    let h = build_heisenberg_chain(2, 1.0).unwrap();
    let gs = ground_state(&h, None).unwrap();

    let circuit = real_amplitude_ansatz(8, 10);
    assert_eq!(circuit.n_parameters(), 88);
    let mut flat_best = (f64::INFINITY, 0.0f64);
    for seed in 0..5u64 {
        let opt = OptimizerConfig { seed, max_evals: 15_000, ..Default::default() };
        let res = vqe_minimize(&h, &circuit, &opt).unwrap();
        if res.energy < flat_best.0 {
            let state = apply_circuit(&circuit, &res.params, &Statevector::zero(8)).unwrap();
            flat_best = (res.energy, fidelity(&state, &gs.state).unwrap());
        }
    }

    let dec = Decomposition::contiguous("cluster", 2, 4);
    let proto = HtnState::zeros(dec, 4);
    assert_eq!(proto.n_parameters(), 50);
    let mut tree_best = (f64::INFINITY, 0.0f64);
    for seed in 0..5u64 {
        let opt = OptimizerConfig { seed, max_evals: 15_000, ..Default::default() };
        let res = htn_vqe_minimize(&h, &proto, &opt).unwrap();
        if res.energy < tree_best.0 {
            let state = proto.with_flat_params(&res.params).unwrap().expand_dense().unwrap();
            tree_best = (res.energy, fidelity(&state, &gs.state).unwrap());
        }
    }

    assert!(flat_best.1 >= 0.9, "flat ansatz fidelity {}", flat_best.1);
    assert!(tree_best.1 >= 0.85, "tree fidelity {}", tree_best.1);
    assert!(
        (flat_best.1 - tree_best.1).abs() < 0.15,
        "fidelities diverge: flat {} vs tree {}",
        flat_best.1,
        tree_best.1
    );
}
