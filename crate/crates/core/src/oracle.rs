//! Dense exact diagonalization and derived diagnostics.
//!
//! Everything here is the verification side of the crate: ground states
//! (optionally restricted to a fixed electron number), fidelities, bipartite
//! entanglement entropies, single-reference selection, wave-function
//! distributions, and windowed trace statistics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fciqmc::RunTrace;
use crate::pauli::{PauliOp, PauliSum};
use crate::statevector::Statevector;

/// Largest qubit count accepted for dense matrix work.
pub const DENSE_QUBIT_LIMIT: usize = 14;

/// Residual tolerance ‖Hψ − Eψ‖ for accepted eigenpairs.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Lowest eigenpair of a Hamiltonian, optionally within a particle sector.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub energy: f64,
    pub state: Statevector,
    /// Electron count of the sector restriction, when one was applied.
    pub sector: Option<u32>,
}

const PAULI_MATS: [[[Complex64; 2]; 2]; 4] = {
    const Z0: Complex64 = Complex64::new(0.0, 0.0);
    const P1: Complex64 = Complex64::new(1.0, 0.0);
    const M1: Complex64 = Complex64::new(-1.0, 0.0);
    const PI: Complex64 = Complex64::new(0.0, 1.0);
    const MI: Complex64 = Complex64::new(0.0, -1.0);
    [
        [[P1, Z0], [Z0, P1]], // I
        [[Z0, P1], [P1, Z0]], // X
        [[Z0, MI], [PI, Z0]], // Y
        [[P1, Z0], [Z0, M1]], // Z
    ]
};

fn pauli_index(p: PauliOp) -> usize {
    match p {
        PauliOp::I => 0,
        PauliOp::X => 1,
        PauliOp::Y => 2,
        PauliOp::Z => 3,
    }
}

/// Dense real-symmetric matrix of a Pauli sum.
///
/// Built column by column from the literal 2×2 Pauli matrices (each column of
/// a Pauli product has exactly one non-zero entry), independently of the
/// sparse matrix-element path in [`crate::pauli`], so the two can check each
/// other.
pub fn dense_hamiltonian(h_sum: &PauliSum) -> Result<DMatrix<f64>> {
    let n = h_sum.n_qubits();
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::SizeLimit(n));
    }
    let dim = 1usize << n;
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for (coeff, string) in h_sum.terms() {
        let mats: Vec<&[[Complex64; 2]; 2]> =
            string.ops().iter().map(|&p| &PAULI_MATS[pauli_index(p)]).collect();
        for col in 0..dim {
            let mut row = 0usize;
            let mut value = Complex64::new(*coeff, 0.0);
            for (q, m) in mats.iter().enumerate() {
                let cbit = (col >> q) & 1;
                // Exactly one of the two rows is non-zero for every Pauli.
                let rbit = if m[0][cbit].norm_sqr() != 0.0 { 0 } else { 1 };
                value *= m[rbit][cbit];
                row |= rbit << q;
            }
            if value.im.abs() > 1e-12 {
                return Err(Error::ImaginaryResidue(value.im.abs()));
            }
            mat[(row, col)] += value.re;
        }
    }
    Ok(mat)
}

/// Lowest eigenpair of a symmetric matrix: tridiagonal eigensolve for the
/// estimate, then Rayleigh-quotient iterations to push the residual to
/// machine precision.
fn lowest_eigenpair(mat: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(mat.clone());
    let mut best = 0usize;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let dim = mat.nrows();
    let mut v = DMatrix::from_column_slice(dim, 1, eig.eigenvectors.column(best).as_slice());
    let mut mu = eig.eigenvalues[best];
    let scale = mat.norm().max(1.0);
    for _ in 0..4 {
        let resid = (mat * &v - mu * &v).norm();
        if resid <= 1e-13 * scale {
            break;
        }
        let shifted = mat - DMatrix::<f64>::identity(dim, dim) * (mu + 1e-14 * scale);
        match shifted.lu().solve(&v) {
            Some(y) => {
                let norm = y.norm();
                if !norm.is_finite() || norm == 0.0 {
                    break;
                }
                v = y / norm;
                mu = (v.transpose() * mat * &v)[(0, 0)];
            }
            None => break,
        }
    }
    (mu, v.column(0).iter().copied().collect())
}

fn canonical_sign(mut amps: Vec<f64>) -> Vec<f64> {
    // Deterministic phase: the dominant amplitude (lowest index on ties) is
    // made positive.
    let mut best = 0usize;
    for (i, a) in amps.iter().enumerate() {
        if a.abs() > amps[best].abs() + 1e-15 {
            best = i;
        }
    }
    if amps[best] < 0.0 {
        for a in &mut amps {
            *a = -*a;
        }
    }
    amps
}

fn to_statevector(amps: &[f64]) -> Statevector {
    Statevector::from_amplitudes(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
        .expect("power-of-two amplitude vector")
}

/// Lowest eigenpair of the Hamiltonian, optionally restricted to basis states
/// with a fixed number of set bits (electron count under the occupation
/// encoding).
pub fn ground_state(h_sum: &PauliSum, sector: Option<u32>) -> Result<SpectrumResult> {
    let n = h_sum.n_qubits();
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::SizeLimit(n));
    }
    let dim = 1usize << n;
    let full = dense_hamiltonian(h_sum)?;

    let (energy, amps) = match sector {
        None => lowest_eigenpair(&full),
        Some(count) => {
            let basis: Vec<usize> =
                (0..dim).filter(|h| (*h as u64).count_ones() == count).collect();
            if basis.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "no basis states with {} electrons on {} qubits",
                    count, n
                )));
            }
            let mut sub = DMatrix::<f64>::zeros(basis.len(), basis.len());
            for (i, &hi) in basis.iter().enumerate() {
                for (j, &hj) in basis.iter().enumerate() {
                    sub[(i, j)] = full[(hi, hj)];
                }
            }
            let (energy, sub_amps) = lowest_eigenpair(&sub);
            let mut amps = vec![0.0; dim];
            for (i, &h) in basis.iter().enumerate() {
                amps[h] = sub_amps[i];
            }
            (energy, amps)
        }
    };

    let amps = canonical_sign(amps);
    let state = to_statevector(&amps);

    // Residual check against the dense matrix.
    let v = DMatrix::from_column_slice(dim, 1, &amps);
    let resid = (&full * &v - energy * &v).norm();
    if resid > EIGEN_RESIDUAL_TOLERANCE {
        return Err(Error::InvalidConfig(format!(
            "eigenpair residual {:.3e} exceeds {:.0e}",
            resid, EIGEN_RESIDUAL_TOLERANCE
        )));
    }
    Ok(SpectrumResult { energy, state, sector })
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Base-2 von Neumann entropy of the reduced state over `part`.
///
/// The amplitude vector is reshaped into a matrix with `part` indexing the
/// rows; the entropy comes from the squared singular values. Eigenvalues
/// below 1e-14 are dropped.
pub fn bipartite_entropy(state: &Statevector, part: &[usize]) -> Result<f64> {
    let n = state.n_qubits();
    if part.is_empty() || part.len() >= n {
        return Err(Error::InvalidConfig("cut must be a proper non-empty qubit subset".into()));
    }
    let mut sorted = part.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != part.len() || *sorted.last().unwrap() >= n {
        return Err(Error::InvalidConfig("cut contains duplicate or out-of-range qubits".into()));
    }
    let rest: Vec<usize> = (0..n).filter(|q| !sorted.contains(q)).collect();
    let rows = 1usize << sorted.len();
    let cols = 1usize << rest.len();
    let mut mat = DMatrix::<Complex64>::zeros(rows, cols);
    for h in 0..state.dim() {
        let mut r = 0usize;
        for (i, &q) in sorted.iter().enumerate() {
            r |= ((h >> q) & 1) << i;
        }
        let mut c = 0usize;
        for (i, &q) in rest.iter().enumerate() {
            c |= ((h >> q) & 1) << i;
        }
        mat[(r, c)] = state.amplitude(h as u64);
    }
    let svd = mat.svd(false, false);
    let mut entropy = 0.0;
    for s in svd.singular_values.iter() {
        let p = s * s;
        if p > 1e-14 {
            entropy -= p * p.log2();
        }
    }
    Ok(entropy)
}

/// Basis index with the largest |amplitude| in the (sector-restricted) ground
/// state; ties resolve to the lowest index.
pub fn single_reference_state(h_sum: &PauliSum, sector: Option<u32>) -> Result<u64> {
    let gs = ground_state(h_sum, sector)?;
    Ok(dominant_basis_index(&gs.state))
}

/// Basis index with the largest |amplitude|; ties resolve to the lowest index.
pub fn dominant_basis_index(state: &Statevector) -> u64 {
    let mut best = 0u64;
    let mut best_mag = state.amplitude(0).norm();
    for h in 1..state.dim() as u64 {
        let mag = state.amplitude(h).norm();
        if mag > best_mag + 1e-15 {
            best = h;
            best_mag = mag;
        }
    }
    best
}

/// |amplitude| per basis index, sorted by index, with an optional qubit
/// relabeling applied first: bit `i` of the output index is bit `perm[i]` of
/// the input index.
pub fn wavefunction_distribution(
    state: &Statevector,
    reorder: Option<&[usize]>,
) -> Result<Vec<(u64, f64)>> {
    let n = state.n_qubits();
    if let Some(perm) = reorder {
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::InvalidConfig("permutation length must equal qubit count".into()));
        }
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidConfig("invalid qubit permutation".into()));
            }
            seen[p] = true;
        }
    }
    let mut out = Vec::with_capacity(state.dim());
    for h_new in 0..state.dim() as u64 {
        let h_old = match reorder {
            None => h_new,
            Some(perm) => {
                let mut h = 0u64;
                for (i, &p) in perm.iter().enumerate() {
                    h |= ((h_new >> i) & 1) << p;
                }
                h
            }
        };
        out.push((h_new, state.amplitude(h_old).norm()));
    }
    Ok(out)
}

/// Windowed statistics of the mixed-energy trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStats {
    pub mean: f64,
    /// Population standard deviation (divisor N).
    pub std: f64,
    /// |mean − E_exact|.
    pub abs_error: f64,
    pub n_samples: usize,
    pub n_invalid: usize,
}

/// Mean, population standard deviation, and absolute error of the valid
/// mixed-energy samples with window.start ≤ iteration ≤ window.end.
pub fn energy_stats(trace: &RunTrace, window: (usize, usize), e_exact: f64) -> Result<EnergyStats> {
    let (start, end) = window;
    if start >= end {
        return Err(Error::InvalidConfig("window start must precede end".into()));
    }
    let mut values = Vec::new();
    let mut invalid = 0usize;
    for rec in trace.records() {
        if rec.iteration < start || rec.iteration > end {
            continue;
        }
        match rec.e_mix {
            Some(e) => values.push(e),
            None => invalid += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::InvalidConfig("no valid mixed-energy samples in window".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(EnergyStats {
        mean,
        std: var.sqrt(),
        abs_error: (mean - e_exact).abs(),
        n_samples: values.len(),
        n_invalid: invalid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_heisenberg_chain;
    use crate::pauli::{matrix_element, parse_pauli_string, PauliString, PauliSum};
    use crate::statevector::basis_state;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn single_z_ground_state() {
        let z = PauliSum::from_terms(1, vec![(1.0, parse_pauli_string("Z", 1).unwrap())]).unwrap();
        let gs = ground_state(&z, None).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!((gs.state.amplitude(1).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_matches_sparse_elements() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..5 {
            // Random real-coefficient sum with Y letters in pairs so the
            // matrix is real.
            let n = 4usize;
            let mut terms = Vec::new();
            for _ in 0..6 {
                let mut ops = vec![PauliOp::I; n];
                for q in 0..n {
                    ops[q] = match rng.gen_range(0..3) {
                        0 => PauliOp::I,
                        1 => PauliOp::X,
                        _ => PauliOp::Z,
                    };
                }
                // Sprinkle a Y pair half the time.
                if rng.gen_bool(0.5) {
                    ops[0] = PauliOp::Y;
                    ops[1] = PauliOp::Y;
                }
                terms.push((rng.gen_range(-1.0..1.0), PauliString::new(ops)));
            }
            let sum = PauliSum::from_terms(n, terms).unwrap();
            let dense = dense_hamiltonian(&sum).unwrap();
            for row in 0..1u64 << n {
                for col in 0..1u64 << n {
                    let sparse = matrix_element(&sum, row, col).unwrap();
                    assert!((sparse - dense[(row as usize, col as usize)]).abs() < 1e-12);
                    // Real symmetric Hamiltonian.
                    let transpose = matrix_element(&sum, col, row).unwrap();
                    assert!((sparse - transpose).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn heisenberg_cluster_vs_power_iteration() {
        let h = build_heisenberg_chain(1, 1.0).unwrap();
        let gs = ground_state(&h, None).unwrap();

        // Independent route: power iteration on σI − H.
        let dense = dense_hamiltonian(&h).unwrap();
        let sigma = h.one_norm() + 1.0;
        let dim = dense.nrows();
        let shifted = DMatrix::<f64>::identity(dim, dim) * sigma - &dense;
        let mut v = DMatrix::from_fn(dim, 1, |i, _| 1.0 + (i as f64) * 1e-3);
        v /= v.norm();
        let mut lambda = 0.0;
        for _ in 0..20_000 {
            let w = &shifted * &v;
            lambda = w.norm();
            v = w / lambda;
        }
        let e_power = sigma - lambda;
        assert!(
            (gs.energy - e_power).abs() < 1e-6,
            "eigen {} vs power iteration {}",
            gs.energy,
            e_power
        );
    }

    #[test]
    fn fidelity_bounds_and_examples() {
        let a = basis_state(2, 0).unwrap();
        let b = basis_state(2, 3).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn entropy_product_and_bell() {
        let product = basis_state(2, 0b01).unwrap();
        assert!(bipartite_entropy(&product, &[0]).unwrap().abs() < 1e-12);

        let bell = Statevector::from_amplitudes(vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        assert!((bipartite_entropy(&bell, &[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(bipartite_entropy(&bell, &[]).is_err());
        assert!(bipartite_entropy(&bell, &[0, 1]).is_err());
    }

    #[test]
    fn entropy_symmetric_under_complement() {
        let h = build_heisenberg_chain(2, 1.0).unwrap();
        let gs = ground_state(&h, None).unwrap();
        let ea = bipartite_entropy(&gs.state, &[0, 1, 2, 3]).unwrap();
        let eb = bipartite_entropy(&gs.state, &[4, 5, 6, 7]).unwrap();
        assert!((ea - eb).abs() < 1e-10);
    }

    #[test]
    fn single_reference_of_z_sum() {
        let n = 3;
        let mut terms = Vec::new();
        for q in 0..n {
            terms.push((1.0, PauliString::with_ops(n, &[(q, PauliOp::Z)])));
        }
        let h = PauliSum::from_terms(n, terms).unwrap();
        assert_eq!(single_reference_state(&h, None).unwrap(), (1 << n) - 1);
    }

    #[test]
    fn heisenberg_single_reference_is_neel() {
        let h = build_heisenberg_chain(2, 1.0).unwrap();
        let h_star = single_reference_state(&h, None).unwrap();
        assert!(h_star == 0b01010101 || h_star == 0b10101010, "got {:#010b}", h_star);
    }

    #[test]
    fn sector_ground_state_vs_penalty_route() {
        // Two independent routes to a constrained minimum: restricting the
        // basis vs adding a large quadratic number penalty.
        let h = crate::models::build_graphite_hubbard(
            crate::models::GRAPHITE_T1,
            crate::models::GRAPHITE_T2,
            crate::models::GRAPHITE_U,
        )
        .unwrap();
        let sector = ground_state(&h, Some(4)).unwrap();
        let penalized = crate::vqe::number_penalty(&h, 4, 50.0).unwrap();
        let free = ground_state(&penalized, None).unwrap();
        assert!((sector.energy - free.energy).abs() < 1e-8);
    }

    #[test]
    fn distribution_spike_and_flat() {
        let spike = basis_state(8, 130).unwrap();
        let dist = wavefunction_distribution(&spike, None).unwrap();
        for (h, mag) in dist {
            if h == 130 {
                assert!((mag - 1.0).abs() < 1e-12);
            } else {
                assert!(mag < 1e-15);
            }
        }

        let n = 3usize;
        let amp = Complex64::new(1.0 / ((1u64 << n) as f64).sqrt(), 0.0);
        let uniform = Statevector::from_amplitudes(vec![amp; 1 << n]).unwrap();
        let dist = wavefunction_distribution(&uniform, None).unwrap();
        for (_, mag) in dist {
            assert!((mag - 1.0 / ((1u64 << n) as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_reorder() {
        // |q0=1, q1=0⟩ = index 1; swapping qubit labels moves it to index 2.
        let state = basis_state(2, 1).unwrap();
        let dist = wavefunction_distribution(&state, Some(&[1, 0])).unwrap();
        assert!((dist[2].1 - 1.0).abs() < 1e-12);
        assert!(dist[1].1 < 1e-15);
        assert!(wavefunction_distribution(&state, Some(&[0, 0])).is_err());
    }

    #[test]
    fn distribution_completeness() {
        let h = build_heisenberg_chain(1, 1.0).unwrap();
        let gs = ground_state(&h, None).unwrap();
        let total: f64 = wavefunction_distribution(&gs.state, None)
            .unwrap()
            .iter()
            .map(|(_, m)| m * m)
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}
