//! Shot-sampled overlap-test emulation of the tree contraction.
//!
//! The exact contraction in the parent module is the default everywhere; this
//! module emulates the measurement protocol that a device would run. Lower
//! tensors: an ancilla-controlled preparation of the bra/ket branches with
//! X/Y-basis ancilla readout giving the real/imaginary parts of each 2×2
//! transition-matrix entry. Upper tensor: after the per-subsystem SVD
//! N = U†DV, controlled application of U and V with a computational-basis
//! readout weighted by the diagonal of D.

use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::htn::{apply_2x2, svd_2x2, HtnState, TransitionMatrix};
use crate::pauli::{PauliOp, PauliString, PauliSum};
use crate::statevector::{apply_circuit, Angle, Circuit, Gate, Statevector};

/// Ancilla measurement basis of the overlap test.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Readout {
    RealPart,
    ImaginaryPart,
}

fn bound_gates(circuit: &Circuit, params: &[f64]) -> Result<Vec<Gate>> {
    let mut out = Vec::with_capacity(circuit.gates().len());
    for gate in circuit.gates() {
        out.push(match gate {
            Gate::Ry { qubit, angle } => {
                let theta = match angle {
                    Angle::Slot(s) => params[*s],
                    Angle::Fixed(v) => *v,
                };
                Gate::Ry { qubit: *qubit, angle: Angle::Fixed(theta) }
            }
            g => g.clone(),
        });
    }
    Ok(out)
}

/// Draw `shots` basis outcomes from |amps|² and average `value(outcome)`.
fn sample_mean<R: Rng>(
    amps: &[Complex64],
    shots: u64,
    rng: &mut R,
    value: impl Fn(usize) -> f64,
) -> f64 {
    let mut cumulative = Vec::with_capacity(amps.len());
    let mut total = 0.0;
    for a in amps {
        total += a.norm_sqr();
        cumulative.push(total);
    }
    let mut acc = 0.0;
    for _ in 0..shots {
        let u: f64 = rng.gen_range(0.0..total);
        let outcome = cumulative.partition_point(|&c| c <= u).min(amps.len() - 1);
        acc += value(outcome);
    }
    acc / shots as f64
}

/// State (|0⟩U^(2)|i⟩|0..⟩ + |1⟩U^(1)|i'⟩|0..⟩)/√2 with the ancilla as the
/// top qubit, built from the controlled-preparation circuit.
fn lower_branch_state(
    bra: &HtnState,
    ket: &HtnState,
    m: usize,
    bra_leg: u8,
    ket_leg: u8,
) -> Result<Statevector> {
    let n = bra.decomposition().group_size();
    let anc = n;
    let mut circuit = Circuit::new(n + 1);
    circuit.push(Gate::H { qubit: anc });
    if ket_leg == 1 {
        circuit.push(Gate::X { qubit: 0 });
    }
    if bra_leg != ket_leg {
        circuit.push(Gate::Cnot { control: anc, target: 0 });
    }
    // Ket circuit on the ancilla-0 branch.
    circuit.push(Gate::X { qubit: anc });
    for gate in bound_gates(&ket.lower_circuit(m), ket.lower_params(m))? {
        circuit.push(Gate::Controlled { control: anc, gate: Box::new(gate) });
    }
    circuit.push(Gate::X { qubit: anc });
    // Bra circuit on the ancilla-1 branch.
    for gate in bound_gates(&bra.lower_circuit(m), bra.lower_params(m))? {
        circuit.push(Gate::Controlled { control: anc, gate: Box::new(gate) });
    }
    apply_circuit(&circuit, &[], &Statevector::zero(n + 1))
}

fn measurement_rotation(o_m: &PauliString, anc: usize, readout: Readout, n_qubits: usize) -> Circuit {
    let mut rot = Circuit::new(n_qubits);
    for (q, &p) in o_m.ops().iter().enumerate() {
        match p {
            PauliOp::X => rot.push(Gate::H { qubit: q }),
            PauliOp::Y => {
                rot.push(Gate::Sdg { qubit: q });
                rot.push(Gate::H { qubit: q });
            }
            PauliOp::Z | PauliOp::I => {}
        }
    }
    match readout {
        Readout::RealPart => rot.push(Gate::H { qubit: anc }),
        Readout::ImaginaryPart => {
            rot.push(Gate::Sdg { qubit: anc });
            rot.push(Gate::H { qubit: anc });
        }
    }
    rot
}

/// Shot-sampled transition matrix of subsystem `m`: eight measurement
/// settings of `shots` each (four entries × real/imaginary readout).
pub fn sampled_transition_matrix<R: Rng>(
    bra: &HtnState,
    ket: &HtnState,
    m: usize,
    o_m: &PauliString,
    shots: u64,
    rng: &mut R,
) -> Result<TransitionMatrix> {
    let n = bra.decomposition().group_size();
    let anc = n;
    let parity_mask: u64 = o_m
        .ops()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != PauliOp::I)
        .map(|(q, _)| 1u64 << q)
        .sum();
    let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
    for bra_leg in 0..2u8 {
        for ket_leg in 0..2u8 {
            let prepared = lower_branch_state(bra, ket, m, bra_leg, ket_leg)?;
            let mut parts = [0.0f64; 2];
            for (slot, readout) in [Readout::RealPart, Readout::ImaginaryPart].iter().enumerate() {
                let rot = measurement_rotation(o_m, anc, *readout, n + 1);
                let rotated = apply_circuit(&rot, &[], &prepared)?;
                let mean = sample_mean(rotated.amplitudes(), shots, rng, |outcome| {
                    let bits = (outcome as u64 & parity_mask).count_ones()
                        + ((outcome >> anc) as u32 & 1);
                    if bits % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                });
                parts[slot] = mean;
            }
            // ⟨X_anc ⊗ O⟩ = Re N, ⟨Y_anc ⊗ O⟩ = −Im N.
            entries[bra_leg as usize][ket_leg as usize] = Complex64::new(parts[0], -parts[1]);
        }
    }
    Ok(TransitionMatrix { entries })
}

/// Shot-sampled transition amplitude: per term, sample the k transition
/// matrices, decompose each as N = U†DV, then run the upper overlap test with
/// a D-weighted computational readout.
pub fn sampled_transition_amplitude<R: Rng>(
    bra: &HtnState,
    ket: &HtnState,
    observable: &PauliSum,
    shots: u64,
    rng: &mut R,
) -> Result<Complex64> {
    let k = bra.decomposition().n_groups();
    let upper_bra = bra.upper_state()?;
    let upper_ket = ket.upper_state()?;
    let dim = upper_ket.dim();

    let mut total = Complex64::new(0.0, 0.0);
    for (coeff, string) in observable.terms() {
        let mut svds = Vec::with_capacity(k);
        for m in 0..k {
            let local = string.restrict(&bra.decomposition().groups()[m]);
            let n_m = sampled_transition_matrix(bra, ket, m, &local, shots, rng)?;
            svds.push(svd_2x2(&n_m));
        }

        // Branch states (⊗U_m)|ψ1⟩ and (⊗V_m)|ψ2⟩; ancilla is qubit k.
        let mut branch_bra = upper_bra.amplitudes().to_vec();
        let mut branch_ket = upper_ket.amplitudes().to_vec();
        for (m, svd) in svds.iter().enumerate() {
            apply_2x2(&mut branch_bra, m, &svd.u);
            apply_2x2(&mut branch_ket, m, &svd.v);
        }
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut joint = vec![Complex64::new(0.0, 0.0); 2 * dim];
        for h in 0..dim {
            joint[h] = branch_ket[h] * inv_sqrt2;
            joint[h + dim] = branch_bra[h] * inv_sqrt2;
        }
        let joint = Statevector::from_amplitudes(joint)?;

        let weight = |outcome: usize| -> f64 {
            let mut w = 1.0;
            for (m, svd) in svds.iter().enumerate() {
                w *= svd.d[(outcome >> m) & 1];
            }
            if (outcome >> k) & 1 == 0 {
                w
            } else {
                -w
            }
        };
        let mut parts = [0.0f64; 2];
        for (slot, readout) in [Readout::RealPart, Readout::ImaginaryPart].iter().enumerate() {
            let rot = measurement_rotation(&PauliString::identity(k), k, *readout, k + 1);
            let rotated = apply_circuit(&rot, &[], &joint)?;
            parts[slot] = sample_mean(rotated.amplitudes(), shots, rng, weight);
        }
        total += Complex64::new(parts[0], -parts[1]) * *coeff;
    }
    Ok(total)
}
