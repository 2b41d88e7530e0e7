//! Two-layer tree tensor network over qubit subsystems.
//!
//! An `nk`-qubit state is decomposed into `k` subsystems of `n` qubits. Each
//! subsystem carries a lower tensor: an n-qubit circuit applied to
//! |i⟩|0⟩^(n−1) where the leg bit i ∈ {0,1} enters on the first qubit of the
//! group. A k-qubit upper tensor supplies the coefficients over the 2^k leg
//! configurations. Transition amplitudes of product observables factor into
//! one 2×2 transition matrix per subsystem, contracted against the upper
//! state; that contraction is exact here, with an optional shot-sampled
//! overlap-test emulation in [`hadamard`].

pub mod hadamard;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Decomposition, PauliString, PauliSum, REALNESS_TOLERANCE};
use crate::statevector::{apply_circuit, basis_state, real_amplitude_ansatz, Circuit, Gate, Statevector};

/// Dense-expansion guard.
pub const HTN_DENSE_QUBIT_LIMIT: usize = 24;

/// Two-layer tree-tensor-network state.
///
/// Parameter layout: one real-amplitude parameter vector of length
/// (depth+1)·n per subsystem, plus one of length (depth+1)·k for the upper
/// tensor. The optional basis mask applies Pauli X after each lower circuit
/// (per global qubit), which pins the all-zero-angle state to a chosen basis
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct HtnState {
    dec: Decomposition,
    depth: usize,
    lower_params: Vec<Vec<f64>>,
    upper_params: Vec<f64>,
    lower_mask: u64,
}

impl HtnState {
    pub fn new(
        dec: Decomposition,
        depth: usize,
        lower_params: Vec<Vec<f64>>,
        upper_params: Vec<f64>,
        lower_mask: u64,
    ) -> Result<Self> {
        let k = dec.n_groups();
        let n = dec.group_size();
        if lower_params.len() != k {
            return Err(Error::SizeMismatch(format!(
                "expected {} lower parameter vectors, got {}",
                k,
                lower_params.len()
            )));
        }
        for (m, p) in lower_params.iter().enumerate() {
            if p.len() != (depth + 1) * n {
                return Err(Error::SizeMismatch(format!(
                    "lower tensor {} has {} parameters, expected {}",
                    m,
                    p.len(),
                    (depth + 1) * n
                )));
            }
        }
        if upper_params.len() != (depth + 1) * k {
            return Err(Error::SizeMismatch(format!(
                "upper tensor has {} parameters, expected {}",
                upper_params.len(),
                (depth + 1) * k
            )));
        }
        if dec.n_qubits() < 64 && lower_mask >= (1u64 << dec.n_qubits()) {
            return Err(Error::IndexOutOfRange { index: lower_mask, limit: 1u64 << dec.n_qubits() });
        }
        Ok(HtnState { dec, depth, lower_params, upper_params, lower_mask })
    }

    /// All angles zero, no mask: the |0…0⟩ state.
    pub fn zeros(dec: Decomposition, depth: usize) -> Self {
        let k = dec.n_groups();
        let n = dec.group_size();
        HtnState {
            dec,
            depth,
            lower_params: vec![vec![0.0; (depth + 1) * n]; k],
            upper_params: vec![0.0; (depth + 1) * k],
            lower_mask: 0,
        }
    }

    /// Identity upper tensor and X-string lower tensors: encodes |φ_h⟩.
    pub fn basis_encoder(dec: Decomposition, h: u64) -> Result<Self> {
        let mut s = HtnState::zeros(dec, 0);
        if s.dec.n_qubits() < 64 && h >= (1u64 << s.dec.n_qubits()) {
            return Err(Error::IndexOutOfRange { index: h, limit: 1u64 << s.dec.n_qubits() });
        }
        s.lower_mask = h;
        Ok(s)
    }

    /// Set the basis mask (X gates after every lower circuit).
    pub fn set_lower_mask(&mut self, mask: u64) -> Result<()> {
        if self.dec.n_qubits() < 64 && mask >= (1u64 << self.dec.n_qubits()) {
            return Err(Error::IndexOutOfRange { index: mask, limit: 1u64 << self.dec.n_qubits() });
        }
        self.lower_mask = mask;
        Ok(())
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.dec
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lower_mask(&self) -> u64 {
        self.lower_mask
    }

    pub fn lower_params(&self, m: usize) -> &[f64] {
        &self.lower_params[m]
    }

    pub fn upper_params(&self) -> &[f64] {
        &self.upper_params
    }

    /// Total parameter count nk(depth+1) + k(depth+1).
    pub fn n_parameters(&self) -> usize {
        let k = self.dec.n_groups();
        let n = self.dec.group_size();
        n * k * (self.depth + 1) + k * (self.depth + 1)
    }

    /// Flattened parameters: lower tensors in order, then the upper tensor.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for p in &self.lower_params {
            out.extend_from_slice(p);
        }
        out.extend_from_slice(&self.upper_params);
        out
    }

    /// Copy of this state with parameters replaced from a flat vector.
    pub fn with_flat_params(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.n_parameters() {
            return Err(Error::SizeMismatch(format!(
                "expected {} parameters, got {}",
                self.n_parameters(),
                flat.len()
            )));
        }
        let n = self.dec.group_size();
        let per_lower = (self.depth + 1) * n;
        let mut lower = Vec::with_capacity(self.dec.n_groups());
        let mut offset = 0;
        for _ in 0..self.dec.n_groups() {
            lower.push(flat[offset..offset + per_lower].to_vec());
            offset += per_lower;
        }
        let upper = flat[offset..].to_vec();
        HtnState::new(self.dec.clone(), self.depth, lower, upper, self.lower_mask)
    }

    /// Lower-tensor circuit for subsystem `m` (ansatz plus basis mask).
    pub fn lower_circuit(&self, m: usize) -> Circuit {
        let n = self.dec.group_size();
        let mut c = real_amplitude_ansatz(n, self.depth);
        for (r, &q) in self.dec.groups()[m].iter().enumerate() {
            if (self.lower_mask >> q) & 1 == 1 {
                c.push(Gate::X { qubit: r });
            }
        }
        c
    }

    /// Lower-tensor state |φ^i_m⟩ = U_Lm |i⟩|0⟩^(n−1) for leg bit `i`.
    pub fn lower_state(&self, m: usize, leg: u8) -> Result<Statevector> {
        let input = basis_state(self.dec.group_size(), leg as u64)?;
        apply_circuit(&self.lower_circuit(m), &self.lower_params[m], &input)
    }

    /// Upper-tensor state |ψ⟩ = U_U |0⟩^k.
    pub fn upper_state(&self) -> Result<Statevector> {
        let k = self.dec.n_groups();
        let c = real_amplitude_ansatz(k, self.depth);
        apply_circuit(&c, &self.upper_params, &Statevector::zero(k))
    }

    /// Full 2^(nk) statevector: Σ_i ψ_i ⊗_m |φ^{i_m}⟩, with each subsystem's
    /// qubits placed at their physical positions.
    pub fn expand_dense(&self) -> Result<Statevector> {
        let nk = self.dec.n_qubits();
        if nk > HTN_DENSE_QUBIT_LIMIT {
            return Err(Error::SizeLimit(nk));
        }
        let k = self.dec.n_groups();
        let upper = self.upper_state()?;
        let mut lower = Vec::with_capacity(k);
        for m in 0..k {
            lower.push([self.lower_state(m, 0)?, self.lower_state(m, 1)?]);
        }
        let dim = 1usize << nk;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for legs in 0..(1usize << k) {
            let coeff = upper.amplitude(legs as u64);
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            for (h, amp) in amps.iter_mut().enumerate() {
                let mut product = coeff;
                for (m, group) in self.dec.groups().iter().enumerate() {
                    let mut local = 0u64;
                    for (r, &q) in group.iter().enumerate() {
                        local |= ((h as u64 >> q) & 1) << r;
                    }
                    product *= lower[m][(legs >> m) & 1].amplitude(local);
                    if product.norm_sqr() == 0.0 {
                        break;
                    }
                }
                *amp += product;
            }
        }
        Statevector::from_amplitudes(amps)
    }
}

/// 2×2 transition matrix of one subsystem: entry (i', i) is
/// ⟨φ^{i'}_bra | O_m | φ^{i}_ket⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub entries: [[Complex64; 2]; 2],
}

impl TransitionMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TransitionMatrix { entries: [[one, zero], [zero, one]] }
    }

    pub fn entry(&self, bra_leg: usize, ket_leg: usize) -> Complex64 {
        self.entries[bra_leg][ket_leg]
    }

    /// Max-norm distance to another matrix.
    pub fn max_diff(&self, other: &TransitionMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.entries[r][c] - other.entries[r][c]).norm());
            }
        }
        d
    }
}

fn check_shared_decomposition(bra: &HtnState, ket: &HtnState) -> Result<()> {
    if bra.dec != ket.dec {
        return Err(Error::SizeMismatch("bra and ket use different decompositions".into()));
    }
    Ok(())
}

/// Transition matrix of subsystem `m` for a local observable string of length
/// n, computed by exact statevector contraction.
pub fn transition_matrix(
    bra: &HtnState,
    ket: &HtnState,
    m: usize,
    o_m: &PauliString,
) -> Result<TransitionMatrix> {
    check_shared_decomposition(bra, ket)?;
    if o_m.len() != bra.dec.group_size() {
        return Err(Error::StringLength { got: o_m.len(), expected: bra.dec.group_size() });
    }
    let bra_states = [bra.lower_state(m, 0)?, bra.lower_state(m, 1)?];
    let ket_states = [ket.lower_state(m, 0)?, ket.lower_state(m, 1)?];
    transition_matrix_from_states(&bra_states, &ket_states, o_m)
}

fn transition_matrix_from_states(
    bra_states: &[Statevector; 2],
    ket_states: &[Statevector; 2],
    o_m: &PauliString,
) -> Result<TransitionMatrix> {
    let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (ket_leg, ket_state) in ket_states.iter().enumerate() {
        let transformed = ket_state.apply_pauli(o_m)?;
        for (bra_leg, bra_state) in bra_states.iter().enumerate() {
            entries[bra_leg][ket_leg] = bra_state.inner(&transformed)?;
        }
    }
    Ok(TransitionMatrix { entries })
}

/// Result of the 2×2 singular value decomposition in the convention
/// N = U† · diag(d) · V with U, V unitary and d non-negative, `d[0] >= d[1]`.
#[derive(Debug, Clone, Copy)]
pub struct Svd2x2 {
    pub u: [[Complex64; 2]; 2],
    pub d: [f64; 2],
    pub v: [[Complex64; 2]; 2],
}

impl Svd2x2 {
    /// U† · diag(d) · V.
    pub fn reconstruct(&self) -> [[Complex64; 2]; 2] {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..2 {
                    // (U†)_{rs} = conj(U_{sr})
                    acc += self.u[s][r].conj() * self.d[s] * self.v[s][c];
                }
                out[r][c] = acc;
            }
        }
        out
    }
}

const SVD_DEGENERACY_TOL: f64 = 1e-14;

fn orthogonal_complement(v: [Complex64; 2]) -> [Complex64; 2] {
    [-v[1].conj(), v[0].conj()]
}

/// Singular value decomposition of a 2×2 complex matrix.
///
/// Degenerate directions are completed to the identity so that equal inputs
/// always produce identical factors.
pub fn svd_2x2(n: &TransitionMatrix) -> Svd2x2 {
    let e = &n.entries;
    // Gram matrix B = N†N, Hermitian positive semi-definite.
    let b00 = e[0][0].norm_sqr() + e[1][0].norm_sqr();
    let b11 = e[0][1].norm_sqr() + e[1][1].norm_sqr();
    let b01 = e[0][0].conj() * e[0][1] + e[1][0].conj() * e[1][1];

    let mean = 0.5 * (b00 + b11);
    let disc = (0.25 * (b00 - b11) * (b00 - b11) + b01.norm_sqr()).sqrt();
    let lam_hi = (mean + disc).max(0.0);
    let lam_lo = (mean - disc).max(0.0);
    let d = [lam_hi.sqrt(), lam_lo.sqrt()];

    // Right singular vectors (eigenvectors of B), largest first.
    let v1: [Complex64; 2];
    if b01.norm() <= SVD_DEGENERACY_TOL {
        if b00 >= b11 {
            v1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        } else {
            v1 = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        }
    } else {
        // Two algebraically equivalent eigenvector formulas; take the better
        // conditioned one.
        let cand_a = [b01, Complex64::new(lam_hi - b00, 0.0)];
        let cand_b = [Complex64::new(lam_hi - b11, 0.0), b01.conj()];
        let na = cand_a[0].norm_sqr() + cand_a[1].norm_sqr();
        let nb = cand_b[0].norm_sqr() + cand_b[1].norm_sqr();
        let cand = if na >= nb { cand_a } else { cand_b };
        let norm = (cand[0].norm_sqr() + cand[1].norm_sqr()).sqrt();
        v1 = [cand[0] / norm, cand[1] / norm];
    }
    let v2 = orthogonal_complement(v1);

    // Left singular vectors u_i = N v_i / d_i, identity-completed when the
    // singular value vanishes.
    let apply = |v: [Complex64; 2]| -> [Complex64; 2] {
        [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]]
    };
    let (u1, u2) = if d[0] <= SVD_DEGENERACY_TOL {
        (
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        )
    } else {
        let w1 = apply(v1);
        let u1 = [w1[0] / d[0], w1[1] / d[0]];
        let u2 = if d[1] <= SVD_DEGENERACY_TOL {
            orthogonal_complement(u1)
        } else {
            let w2 = apply(v2);
            [w2[0] / d[1], w2[1] / d[1]]
        };
        (u1, u2)
    };

    // Standard form N = Ũ Σ Ṽ† with Ũ = [u1 u2], Ṽ = [v1 v2]; convert to the
    // N = U† D V convention: U = Ũ†, V = Ṽ†.
    let u = [[u1[0].conj(), u1[1].conj()], [u2[0].conj(), u2[1].conj()]];
    let v = [[v1[0].conj(), v1[1].conj()], [v2[0].conj(), v2[1].conj()]];
    Svd2x2 { u, d, v }
}

/// Apply a 2×2 matrix to qubit `m` of a small statevector.
pub(crate) fn apply_2x2(state: &mut [Complex64], m: usize, mat: &[[Complex64; 2]; 2]) {
    let bit = 1usize << m;
    for base in 0..state.len() {
        if base & bit != 0 {
            continue;
        }
        let (a0, a1) = (state[base], state[base | bit]);
        state[base] = mat[0][0] * a0 + mat[0][1] * a1;
        state[base | bit] = mat[1][0] * a0 + mat[1][1] * a1;
    }
}

/// Transition amplitude ⟨bra| O |ket⟩ between two tree states: every Pauli
/// term factors over the subsystems into 2×2 transition matrices that are
/// contracted against the upper tensors.
pub fn transition_amplitude(bra: &HtnState, ket: &HtnState, observable: &PauliSum) -> Result<Complex64> {
    check_shared_decomposition(bra, ket)?;
    if observable.n_qubits() != bra.dec.n_qubits() {
        return Err(Error::SizeMismatch(format!(
            "observable on {} qubits, decomposition covers {}",
            observable.n_qubits(),
            bra.dec.n_qubits()
        )));
    }
    let k = bra.dec.n_groups();

    let mut bra_lower = Vec::with_capacity(k);
    let mut ket_lower = Vec::with_capacity(k);
    let mut same_lower = Vec::with_capacity(k);
    for m in 0..k {
        bra_lower.push([bra.lower_state(m, 0)?, bra.lower_state(m, 1)?]);
        ket_lower.push([ket.lower_state(m, 0)?, ket.lower_state(m, 1)?]);
        let group = &bra.dec.groups()[m];
        let mask_eq = group
            .iter()
            .all(|&q| (bra.lower_mask >> q) & 1 == (ket.lower_mask >> q) & 1);
        same_lower.push(mask_eq && bra.lower_params[m] == ket.lower_params[m] && bra.depth == ket.depth);
    }
    let upper_bra = bra.upper_state()?;
    let upper_ket = ket.upper_state()?;

    let mut total = Complex64::new(0.0, 0.0);
    for (coeff, string) in observable.terms() {
        let mut upper = upper_ket.amplitudes().to_vec();
        for m in 0..k {
            let local = string.restrict(&bra.dec.groups()[m]);
            // Identity observable between identical lower tensors is the
            // identity matrix by orthonormality of |φ^0⟩, |φ^1⟩.
            if local.is_identity() && same_lower[m] {
                continue;
            }
            let n_m = transition_matrix_from_states(&bra_lower[m], &ket_lower[m], &local)?;
            apply_2x2(&mut upper, m, &n_m.entries);
        }
        let mut term = Complex64::new(0.0, 0.0);
        for (i, amp) in upper.iter().enumerate() {
            term += upper_bra.amplitude(i as u64).conj() * amp;
        }
        total += term * *coeff;
    }
    Ok(total)
}

/// Energy ⟨s|H|s⟩ of a tree state, asserted real.
pub fn htn_energy(state: &HtnState, hamiltonian: &PauliSum) -> Result<f64> {
    let t = transition_amplitude(state, state, hamiltonian)?;
    if t.im.abs() > REALNESS_TOLERANCE {
        return Err(Error::ImaginaryResidue(t.im.abs()));
    }
    Ok(t.re)
}

/// Overlap ⟨s|φ_h⟩ with a computational basis state, evaluated through the
/// tree contraction against a basis-encoding network (identity upper tensor,
/// X-string lower tensors). Asserted real for the real-amplitude ansatz.
pub fn htn_overlap_basis(state: &HtnState, h: u64) -> Result<f64> {
    let nk = state.dec.n_qubits();
    if nk < 64 && h >= (1u64 << nk) {
        return Err(Error::IndexOutOfRange { index: h, limit: 1u64 << nk });
    }
    let encoder = HtnState::basis_encoder(state.dec.clone(), h)?;
    let identity = PauliSum::from_terms(nk, vec![(1.0, PauliString::identity(nk))])?;
    let t = transition_amplitude(state, &encoder, &identity)?;
    if t.im.abs() > REALNESS_TOLERANCE {
        return Err(Error::ImaginaryResidue(t.im.abs()));
    }
    Ok(t.re)
}

/// Number of distinct measurement settings needed for one transition
/// amplitude: 2·4^L·k + 2 in general, reduced to 4k+1 for real-valued states
/// with a single leg.
pub fn measurement_count(k: usize, legs: u32, real_valued: bool) -> usize {
    if real_valued && legs == 1 {
        return 4 * k + 1;
    }
    2 * 4usize.pow(legs) * k + 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{parse_pauli_string, PauliOp};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_htn(dec: Decomposition, depth: usize, seed: u64) -> HtnState {
        let proto = HtnState::zeros(dec, depth);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..proto.n_parameters()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        proto.with_flat_params(&flat).unwrap()
    }

    /// The same state built as one flat circuit: upper ansatz on the leg
    /// qubits, then each lower circuit on its group.
    fn footnote_circuit_state(s: &HtnState) -> Statevector {
        let nk = s.decomposition().n_qubits();
        let k = s.decomposition().n_groups();
        let mut state = Statevector::zero(nk);

        let upper = real_amplitude_ansatz(k, s.depth());
        let mut mapped = Circuit::new(nk);
        for gate in upper.gates() {
            match gate {
                Gate::Ry { qubit, angle } => mapped.push(Gate::Ry {
                    qubit: s.decomposition().groups()[*qubit][0],
                    angle: *angle,
                }),
                Gate::Cnot { control, target } => mapped.push(Gate::Cnot {
                    control: s.decomposition().groups()[*control][0],
                    target: s.decomposition().groups()[*target][0],
                }),
                other => panic!("unexpected gate {:?}", other),
            }
        }
        state = apply_circuit(&mapped, s.upper_params(), &state).unwrap();

        for m in 0..k {
            let lower = s.lower_circuit(m);
            let mut mapped = Circuit::new(nk);
            for gate in lower.gates() {
                match gate {
                    Gate::Ry { qubit, angle } => mapped.push(Gate::Ry {
                        qubit: s.decomposition().groups()[m][*qubit],
                        angle: *angle,
                    }),
                    Gate::Cnot { control, target } => mapped.push(Gate::Cnot {
                        control: s.decomposition().groups()[m][*control],
                        target: s.decomposition().groups()[m][*target],
                    }),
                    Gate::X { qubit } => {
                        mapped.push(Gate::X { qubit: s.decomposition().groups()[m][*qubit] })
                    }
                    other => panic!("unexpected gate {:?}", other),
                }
            }
            state = apply_circuit(&mapped, s.lower_params(m), &state).unwrap();
        }
        state
    }

    #[test]
    fn lower_state_zero_angles() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = HtnState::zeros(dec, 0);
        let phi0 = s.lower_state(0, 0).unwrap();
        assert!((phi0.amplitude(0).re - 1.0).abs() < 1e-14);
        let phi1 = s.lower_state(0, 1).unwrap();
        assert!((phi1.amplitude(1).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lower_states_stay_orthogonal() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        for seed in 0..10 {
            let s = random_htn(dec.clone(), 4, seed);
            for m in 0..2 {
                let phi0 = s.lower_state(m, 0).unwrap();
                let phi1 = s.lower_state(m, 1).unwrap();
                assert!(phi0.inner(&phi1).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transition_matrix_identity_case() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = random_htn(dec, 3, 5);
        let id = PauliString::identity(4);
        let n = transition_matrix(&s, &s, 0, &id).unwrap();
        assert!(n.max_diff(&TransitionMatrix::identity()) < 1e-12);
    }

    #[test]
    fn transition_matrix_z_on_leg() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = HtnState::zeros(dec, 0);
        let z_leg = PauliString::with_ops(4, &[(0, PauliOp::Z)]);
        let n = transition_matrix(&s, &s, 1, &z_leg).unwrap();
        assert!((n.entry(0, 0).re - 1.0).abs() < 1e-12);
        assert!((n.entry(1, 1).re + 1.0).abs() < 1e-12);
        assert!(n.entry(0, 1).norm() < 1e-12);
        assert!(n.entry(1, 0).norm() < 1e-12);
    }

    #[test]
    fn transition_matrix_against_direct_inner_products() {
        let dec = Decomposition::contiguous("cluster", 2, 3);
        let bra = random_htn(dec.clone(), 2, 8);
        let ket = random_htn(dec, 2, 9);
        let o = parse_pauli_string("XIZ", 3).unwrap();
        let n = transition_matrix(&bra, &ket, 1, &o).unwrap();
        for bra_leg in 0..2u8 {
            for ket_leg in 0..2u8 {
                let lhs = bra.lower_state(1, bra_leg).unwrap();
                let rhs = ket.lower_state(1, ket_leg).unwrap().apply_pauli(&o).unwrap();
                let expect = lhs.inner(&rhs).unwrap();
                assert!((n.entry(bra_leg as usize, ket_leg as usize) - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_simple_cases() {
        let svd = svd_2x2(&TransitionMatrix::identity());
        assert!((svd.d[0] - 1.0).abs() < 1e-15);
        assert!((svd.d[1] - 1.0).abs() < 1e-15);

        let zero = TransitionMatrix { entries: [[Complex64::new(0.0, 0.0); 2]; 2] };
        let svd = svd_2x2(&zero);
        assert_eq!(svd.d, [0.0, 0.0]);
        let rec = svd.reconstruct();
        for r in 0..2 {
            for c in 0..2 {
                assert!(rec[r][c].norm() < 1e-15);
            }
        }

        let perm = TransitionMatrix {
            entries: [
                [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)],
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ],
        };
        let svd = svd_2x2(&perm);
        assert!((svd.d[0] - 2.0).abs() < 1e-14);
        assert!((svd.d[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..100_000 {
            let n = TransitionMatrix {
                entries: [
                    [
                        Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                        Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                    ],
                    [
                        Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                        Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                    ],
                ],
            };
            let svd = svd_2x2(&n);
            let rec = svd.reconstruct();
            for r in 0..2 {
                for c in 0..2 {
                    assert!(
                        (rec[r][c] - n.entries[r][c]).norm() <= 1e-12,
                        "reconstruction error for {:?}",
                        n.entries
                    );
                }
            }
            assert!(svd.d[0] >= svd.d[1]);
        }
    }

    #[test]
    fn normalization_for_random_parameters() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let id = PauliSum::from_terms(8, vec![(1.0, PauliString::identity(8))]).unwrap();
        for seed in 0..10 {
            let s = random_htn(dec.clone(), 4, seed);
            let t = transition_amplitude(&s, &s, &id).unwrap();
            assert!((t.re - 1.0).abs() < 1e-10);
            assert!(t.im.abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_matches_dense_expansion() {
        let dec = Decomposition::contiguous("cluster", 2, 3);
        let h = {
            let mut terms = Vec::new();
            let mut rng = ChaCha12Rng::seed_from_u64(77);
            for _ in 0..5 {
                let ops: Vec<PauliOp> = (0..6)
                    .map(|_| match rng.gen_range(0..4) {
                        0 => PauliOp::I,
                        1 => PauliOp::X,
                        2 => PauliOp::Y,
                        _ => PauliOp::Z,
                    })
                    .collect();
                terms.push((rng.gen_range(-1.0..1.0), PauliString::new(ops)));
            }
            PauliSum::from_terms(6, terms).unwrap()
        };
        for seed in 0..5 {
            let bra = random_htn(dec.clone(), 2, 100 + seed);
            let ket = random_htn(dec.clone(), 2, 200 + seed);
            let t = transition_amplitude(&bra, &ket, &h).unwrap();

            let bra_dense = bra.expand_dense().unwrap();
            let ket_dense = ket.expand_dense().unwrap();
            let mut expect = Complex64::new(0.0, 0.0);
            for (c, s) in h.terms() {
                let transformed = ket_dense.apply_pauli(s).unwrap();
                expect += bra_dense.inner(&transformed).unwrap() * *c;
            }
            assert!((t - expect).norm() < 1e-10, "seed {}: {} vs {}", seed, t, expect);
        }
    }

    #[test]
    fn energy_of_zero_state_on_z_sum() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = HtnState::zeros(dec, 2);
        let mut terms = Vec::new();
        for q in 0..8 {
            terms.push((1.0, PauliString::with_ops(8, &[(q, PauliOp::Z)])));
        }
        let h = PauliSum::from_terms(8, terms).unwrap();
        assert!((htn_energy(&s, &h).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_zero_state() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = HtnState::zeros(dec, 3);
        assert!((htn_overlap_basis(&s, 0).unwrap() - 1.0).abs() < 1e-12);
        for h in [1u64, 5, 100, 255] {
            assert!(htn_overlap_basis(&s, h).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_of_masked_state() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let target = 0b01010101u64;
        let mut s = HtnState::zeros(dec, 2);
        s.set_lower_mask(target).unwrap();
        assert!((htn_overlap_basis(&s, target).unwrap() - 1.0).abs() < 1e-12);
        assert!(htn_overlap_basis(&s, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn overlaps_equal_dense_amplitudes() {
        let dec = Decomposition::even_odd(6);
        let s = random_htn(dec, 3, 55);
        let dense = s.expand_dense().unwrap();
        let mut sum_sq = 0.0;
        for h in 0..64u64 {
            let ov = htn_overlap_basis(&s, h).unwrap();
            assert!((ov - dense.amplitude(h).re).abs() < 1e-10);
            sum_sq += ov * ov;
        }
        assert!((sum_sq - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_expansion_matches_flat_circuit() {
        for (k, n, depth) in [(1usize, 3usize, 2usize), (2, 3, 2), (3, 2, 1)] {
            let dec = Decomposition::contiguous("cluster", k, n);
            let s = random_htn(dec, depth, (k * 10 + n) as u64);
            let dense = s.expand_dense().unwrap();
            let flat = footnote_circuit_state(&s);
            for h in 0..dense.dim() as u64 {
                assert!((dense.amplitude(h) - flat.amplitude(h)).norm() < 1e-12);
            }
            assert!((dense.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_expansion_zero_state() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = HtnState::zeros(dec, 4);
        let dense = s.expand_dense().unwrap();
        assert!((dense.amplitude(0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_counts() {
        assert_eq!(measurement_count(2, 1, false), 18);
        assert_eq!(measurement_count(2, 1, true), 9);
        assert_eq!(measurement_count(3, 2, false), 98);
    }

    #[test]
    fn parameter_layout_roundtrip() {
        let dec = Decomposition::contiguous("cluster", 2, 4);
        let s = random_htn(dec, 4, 1);
        assert_eq!(s.n_parameters(), 50);
        let flat = s.flat_params();
        let rebuilt = s.with_flat_params(&flat).unwrap();
        assert_eq!(rebuilt, s);
    }
}
