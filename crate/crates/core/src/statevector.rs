//! Dense statevector simulation of small circuits.
//!
//! The gate set is deliberately small: RY and CNOT cover the real-amplitude
//! ansatz, X prepares basis states, and H/S/S† plus generic controlled
//! wrappers are enough to emulate overlap-test circuits. Basis indexing
//! follows the crate-wide convention (bit `b` of an index is qubit `b`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, REALNESS_TOLERANCE};

/// Ordered rotation angles, in radians.
pub type ParameterVector = Vec<f64>;

/// Dense complex amplitudes over the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0…0⟩ on `n` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    /// Wrap raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || dim & (dim - 1) != 0 {
            return Err(Error::SizeMismatch(format!("amplitude vector length {} is not a power of two", dim)));
        }
        Ok(Statevector { n_qubits: dim.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, h: u64) -> Complex64 {
        self.amps[h as usize]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩ with the bra conjugated.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::SizeMismatch(format!(
                "inner product between {} and {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Apply one Pauli string, returning a new vector.
    pub fn apply_pauli(&self, string: &PauliString) -> Result<Statevector> {
        if string.len() != self.n_qubits {
            return Err(Error::StringLength { got: string.len(), expected: self.n_qubits });
        }
        let flips = string.flip_mask();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (h, &a) in self.amps.iter().enumerate() {
            let (target, phase) = string.apply_to_basis(h as u64);
            debug_assert_eq!(target, h as u64 ^ flips);
            out[target as usize] = phase * a;
        }
        Ok(Statevector { n_qubits: self.n_qubits, amps: out })
    }
}

/// Computational basis state |φ_h⟩.
pub fn basis_state(n_qubits: usize, h: u64) -> Result<Statevector> {
    let dim = 1u64 << n_qubits;
    if h >= dim {
        return Err(Error::IndexOutOfRange { index: h, limit: dim });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim as usize];
    amps[h as usize] = Complex64::new(1.0, 0.0);
    Ok(Statevector { n_qubits, amps })
}

/// Rotation angle: either bound to a parameter slot or fixed at build time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Slot(usize),
    Fixed(f64),
}

/// Supported gates.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Ry { qubit: usize, angle: Angle },
    Cnot { control: usize, target: usize },
    X { qubit: usize },
    H { qubit: usize },
    S { qubit: usize },
    Sdg { qubit: usize },
    /// Apply the inner gate only where `control` is set.
    Controlled { control: usize, gate: Box<Gate> },
}

impl Gate {
    fn max_qubit(&self) -> usize {
        match self {
            Gate::Ry { qubit, .. }
            | Gate::X { qubit }
            | Gate::H { qubit }
            | Gate::S { qubit }
            | Gate::Sdg { qubit } => *qubit,
            Gate::Cnot { control, target } => (*control).max(*target),
            Gate::Controlled { control, gate } => (*control).max(gate.max_qubit()),
        }
    }
}

/// Ordered gate list with a declared parameter-slot count.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_slots: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, n_slots: 0, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of parameter slots the circuit expects.
    pub fn n_parameters(&self) -> usize {
        self.n_slots
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) {
        assert!(gate.max_qubit() < self.n_qubits, "gate touches qubit outside the register");
        if let Gate::Ry { angle: Angle::Slot(s), .. } = gate {
            self.n_slots = self.n_slots.max(s + 1);
        }
        self.gates.push(gate);
    }

    /// Parameterized RY with the next free slot.
    pub fn push_ry_slot(&mut self, qubit: usize) {
        let slot = self.n_slots;
        self.push(Gate::Ry { qubit, angle: Angle::Slot(slot) });
    }

    /// Adjoint circuit with all slots frozen at the given parameter values.
    pub fn adjoint_bound(&self, params: &[f64]) -> Result<Circuit> {
        fn adjoint_gate(gate: &Gate, params: &[f64]) -> Result<Gate> {
            Ok(match gate {
                Gate::Ry { qubit, angle } => {
                    let theta = match angle {
                        Angle::Slot(s) => *params
                            .get(*s)
                            .ok_or_else(|| Error::SizeMismatch("parameter vector too short".into()))?,
                        Angle::Fixed(v) => *v,
                    };
                    Gate::Ry { qubit: *qubit, angle: Angle::Fixed(-theta) }
                }
                Gate::S { qubit } => Gate::Sdg { qubit: *qubit },
                Gate::Sdg { qubit } => Gate::S { qubit: *qubit },
                Gate::Controlled { control, gate } => Gate::Controlled {
                    control: *control,
                    gate: Box::new(adjoint_gate(gate, params)?),
                },
                g => g.clone(),
            })
        }
        let mut out = Circuit::new(self.n_qubits);
        for gate in self.gates.iter().rev() {
            out.push(adjoint_gate(gate, params)?);
        }
        Ok(out)
    }
}

fn resolve(angle: Angle, params: &[f64]) -> Result<f64> {
    match angle {
        Angle::Fixed(v) => Ok(v),
        Angle::Slot(s) => params
            .get(s)
            .copied()
            .ok_or_else(|| Error::SizeMismatch(format!("parameter slot {} beyond vector length {}", s, params.len()))),
    }
}

fn apply_gate(amps: &mut [Complex64], gate: &Gate, params: &[f64], ctrl_mask: usize) -> Result<()> {
    match gate {
        Gate::Controlled { control, gate } => {
            apply_gate(amps, gate, params, ctrl_mask | (1 << control))
        }
        Gate::Cnot { control, target } => {
            apply_single(amps, *target, ctrl_mask | (1 << control), |a0, a1| (a1, a0));
            Ok(())
        }
        Gate::X { qubit } => {
            apply_single(amps, *qubit, ctrl_mask, |a0, a1| (a1, a0));
            Ok(())
        }
        Gate::H { qubit } => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            apply_single(amps, *qubit, ctrl_mask, |a0, a1| (s * (a0 + a1), s * (a0 - a1)));
            Ok(())
        }
        Gate::S { qubit } => {
            let i = Complex64::new(0.0, 1.0);
            apply_single(amps, *qubit, ctrl_mask, |a0, a1| (a0, i * a1));
            Ok(())
        }
        Gate::Sdg { qubit } => {
            let mi = Complex64::new(0.0, -1.0);
            apply_single(amps, *qubit, ctrl_mask, |a0, a1| (a0, mi * a1));
            Ok(())
        }
        Gate::Ry { qubit, angle } => {
            let theta = resolve(*angle, params)?;
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            apply_single(amps, *qubit, ctrl_mask, move |a0, a1| (c * a0 - s * a1, s * a0 + c * a1));
            Ok(())
        }
    }
}

fn apply_single<F>(amps: &mut [Complex64], qubit: usize, ctrl_mask: usize, f: F)
where
    F: Fn(Complex64, Complex64) -> (Complex64, Complex64),
{
    let qbit = 1usize << qubit;
    debug_assert_eq!(ctrl_mask & qbit, 0, "control overlaps target");
    for base in 0..amps.len() {
        if base & qbit != 0 || base & ctrl_mask != ctrl_mask {
            continue;
        }
        let (a0, a1) = (amps[base], amps[base | qbit]);
        let (b0, b1) = f(a0, a1);
        amps[base] = b0;
        amps[base | qbit] = b1;
    }
}

/// Apply a circuit to an input state; the input is left unmodified.
pub fn apply_circuit(circuit: &Circuit, params: &[f64], input: &Statevector) -> Result<Statevector> {
    if circuit.n_qubits != input.n_qubits {
        return Err(Error::SizeMismatch(format!(
            "circuit on {} qubits applied to {}-qubit state",
            circuit.n_qubits, input.n_qubits
        )));
    }
    if params.len() < circuit.n_slots {
        return Err(Error::SizeMismatch(format!(
            "circuit needs {} parameters, got {}",
            circuit.n_slots,
            params.len()
        )));
    }
    let mut out = input.clone();
    for gate in &circuit.gates {
        apply_gate(&mut out.amps, gate, params, 0)?;
    }
    Ok(out)
}

/// Hardware-efficient real-amplitude ansatz with linear connectivity: an RY
/// layer on every qubit, then `depth` repeats of [CNOT chain, RY layer].
/// Parameter count is (depth+1)·n and every output amplitude is real.
pub fn real_amplitude_ansatz(n_qubits: usize, depth: usize) -> Circuit {
    assert!(n_qubits >= 1);
    let mut c = Circuit::new(n_qubits);
    for q in 0..n_qubits {
        c.push_ry_slot(q);
    }
    for _ in 0..depth {
        for q in 0..n_qubits.saturating_sub(1) {
            c.push(Gate::Cnot { control: q, target: q + 1 });
        }
        for q in 0..n_qubits {
            c.push_ry_slot(q);
        }
    }
    c
}

/// Exact expectation value ⟨ψ|O|ψ⟩ of a Pauli sum; asserted real.
pub fn expectation(state: &Statevector, observable: &PauliSum) -> Result<f64> {
    if observable.n_qubits() != state.n_qubits() {
        return Err(Error::SizeMismatch(format!(
            "observable on {} qubits, state on {}",
            observable.n_qubits(),
            state.n_qubits()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (coeff, string) in observable.terms() {
        let flips = string.flip_mask();
        let mut term = Complex64::new(0.0, 0.0);
        for (h, &a) in state.amps.iter().enumerate() {
            let (_, phase) = string.apply_to_basis(h as u64);
            let target = (h as u64 ^ flips) as usize;
            term += state.amps[target].conj() * phase * a;
        }
        acc += term * *coeff;
    }
    if acc.im.abs() > REALNESS_TOLERANCE {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    Ok(acc.re)
}
