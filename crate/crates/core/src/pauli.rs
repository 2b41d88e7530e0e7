//! Pauli-string algebra and weighted Pauli-sum Hamiltonians.
//!
//! Bit convention, shared by the whole crate: bit `b` of a basis index is the
//! state of qubit `b`, and the letters of a Pauli string read left to right
//! over qubits `0..n`. So `"XZI"` acts with X on qubit 0 and Z on qubit 1,
//! and the basis index `0b011` has qubits 0 and 1 set.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance below which merged coefficients are dropped.
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Tolerance on the imaginary residue of quantities asserted real.
pub const REALNESS_TOLERANCE: f64 = 1e-10;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    /// Parse one letter.
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(PauliOp::I),
            'X' => Ok(PauliOp::X),
            'Y' => Ok(PauliOp::Y),
            'Z' => Ok(PauliOp::Z),
            other => Err(Error::IllegalCharacter(other)),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// Fixed-length Pauli string over all qubits of a system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    ops: Vec<PauliOp>,
}

impl PauliString {
    /// Build from explicit letters.
    pub fn new(ops: Vec<PauliOp>) -> Self {
        PauliString { ops }
    }

    /// All-identity string on `n` qubits.
    pub fn identity(n: usize) -> Self {
        PauliString { ops: vec![PauliOp::I; n] }
    }

    /// Identity string with single letters placed at given qubits.
    pub fn with_ops(n: usize, placed: &[(usize, PauliOp)]) -> Self {
        let mut ops = vec![PauliOp::I; n];
        for &(q, p) in placed {
            assert!(q < n, "qubit index {} out of range for {} qubits", q, n);
            ops[q] = p;
        }
        PauliString { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, qubit: usize) -> PauliOp {
        self.ops[qubit]
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    /// True when every letter is the identity.
    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == PauliOp::I)
    }

    /// Bit mask of qubits whose basis value is flipped (X and Y positions).
    pub fn flip_mask(&self) -> u64 {
        let mut m = 0u64;
        for (q, &p) in self.ops.iter().enumerate() {
            if matches!(p, PauliOp::X | PauliOp::Y) {
                m |= 1 << q;
            }
        }
        m
    }

    /// Bit mask of qubits contributing a (−1)^bit phase (Z and Y positions).
    pub fn phase_mask(&self) -> u64 {
        let mut m = 0u64;
        for (q, &p) in self.ops.iter().enumerate() {
            if matches!(p, PauliOp::Z | PauliOp::Y) {
                m |= 1 << q;
            }
        }
        m
    }

    /// Number of Y letters, which fixes the overall power of i.
    pub fn y_count(&self) -> u32 {
        self.ops.iter().filter(|&&p| p == PauliOp::Y).count() as u32
    }

    /// Apply the string to the basis state `h`.
    ///
    /// Every Pauli string maps a basis state to exactly one basis state with
    /// a phase in {±1, ±i}; returns `(h ^ flips, phase)`.
    pub fn apply_to_basis(&self, h: u64) -> (u64, Complex64) {
        let flips = self.flip_mask();
        let minus = (h & self.phase_mask()).count_ones();
        let mut phase = match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        if minus % 2 == 1 {
            phase = -phase;
        }
        (h ^ flips, phase)
    }

    /// Restrict to a subset of qubits, in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliString {
        PauliString { ops: qubits.iter().map(|&q| self.ops[q]).collect() }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.ops {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

/// Parse a fixed-length Pauli string; rejects wrong length and unknown letters.
pub fn parse_pauli_string(text: &str, n_qubits: usize) -> Result<PauliString> {
    let mut ops = Vec::with_capacity(n_qubits);
    for c in text.chars() {
        ops.push(PauliOp::from_char(c)?);
    }
    if ops.len() != n_qubits {
        return Err(Error::StringLength { got: ops.len(), expected: n_qubits });
    }
    Ok(PauliString::new(ops))
}

/// Weighted sum of Pauli strings with real coefficients.
///
/// Canonical form: terms sorted by string, duplicates merged, coefficients
/// below the drop tolerance removed.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// Empty sum on `n_qubits` qubits (the zero operator).
    pub fn new(n_qubits: usize) -> Self {
        PauliSum { n_qubits, terms: Vec::new() }
    }

    /// Build and canonicalize from raw terms.
    pub fn from_terms(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut sum = PauliSum { n_qubits, terms };
        sum.canonicalize(DROP_TOLERANCE)?;
        Ok(sum)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Add a term; call [`PauliSum::canonicalize`] when done inserting.
    pub fn push(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.len() != self.n_qubits {
            return Err(Error::StringLength { got: string.len(), expected: self.n_qubits });
        }
        self.terms.push((coeff, string));
        Ok(())
    }

    /// Merge duplicate strings and drop coefficients with |c| below `tol`.
    pub fn canonicalize(&mut self, tol: f64) -> Result<()> {
        for (_, s) in &self.terms {
            if s.len() != self.n_qubits {
                return Err(Error::StringLength { got: s.len(), expected: self.n_qubits });
            }
        }
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, s) in self.terms.drain(..) {
            *merged.entry(s).or_insert(0.0) += c;
        }
        self.terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(s, c)| (c, s))
            .collect();
        Ok(())
    }

    /// Sum of |coefficients|; a cheap upper bound on the spectral radius.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Diagonal matrix element ⟨φ_h|H|φ_h⟩.
    pub fn diagonal_element(&self, h: u64) -> f64 {
        let mut acc = 0.0;
        for (c, s) in &self.terms {
            if s.flip_mask() == 0 {
                // Z/I strings are diagonal with a real ±1 phase.
                let minus = (h & s.phase_mask()).count_ones();
                acc += if minus % 2 == 0 { *c } else { -*c };
            }
        }
        acc
    }
}

/// Matrix element ⟨φ_row|H|φ_col⟩ of a Pauli sum between basis states.
///
/// Phases are tracked as complex numbers and the result is asserted real
/// within [`REALNESS_TOLERANCE`]; a larger residue signals a non-real
/// Hamiltonian and is reported as an error.
pub fn matrix_element(h_sum: &PauliSum, row: u64, col: u64) -> Result<f64> {
    let dim = 1u64 << h_sum.n_qubits();
    for idx in [row, col] {
        if idx >= dim {
            return Err(Error::IndexOutOfRange { index: idx, limit: dim });
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, s) in h_sum.terms() {
        let (target, phase) = s.apply_to_basis(col);
        if target == row {
            acc += phase * *c;
        }
    }
    if acc.im.abs() > REALNESS_TOLERANCE {
        return Err(Error::ImaginaryResidue(acc.im.abs()));
    }
    Ok(acc.re)
}

/// All basis states h′ ≠ h connected to h with a non-zero matrix element,
/// together with ⟨φ_h′|H|φ_h⟩, in ascending h′ order.
pub fn connected_states(h_sum: &PauliSum, h: u64) -> Vec<(u64, f64)> {
    let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
    for (c, s) in h_sum.terms() {
        let flips = s.flip_mask();
        if flips == 0 {
            continue;
        }
        let (target, phase) = s.apply_to_basis(h);
        // Off-diagonal elements of a real Hamiltonian are real; the imaginary
        // parts of individual strings cancel in the merged sum, so only the
        // real part is accumulated here.
        *acc.entry(target).or_insert(0.0) += (phase * *c).re;
    }
    acc.into_iter().filter(|(_, v)| v.abs() > DROP_TOLERANCE).collect()
}

/// Partition of the qubits into equally sized ordered subsystems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    name: String,
    groups: Vec<Vec<usize>>,
}

impl Decomposition {
    /// Build from explicit groups; they must be disjoint, cover `0..n_qubits`
    /// and have equal size.
    pub fn new(name: impl Into<String>, groups: Vec<Vec<usize>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidConfig("decomposition needs at least one group".into()));
        }
        let size = groups[0].len();
        if size == 0 {
            return Err(Error::InvalidConfig("decomposition groups must be non-empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &groups {
            if g.len() != size {
                return Err(Error::InvalidConfig("decomposition groups must have equal size".into()));
            }
            for &q in g {
                if !seen.insert(q) {
                    return Err(Error::InvalidConfig(format!("qubit {} appears twice", q)));
                }
            }
        }
        let n = groups.len() * size;
        if seen.iter().next_back() != Some(&(n - 1)) || seen.len() != n {
            return Err(Error::InvalidConfig("decomposition groups must cover 0..n".into()));
        }
        Ok(Decomposition { name: name.into(), groups })
    }

    /// Contiguous blocks of `n` qubits ("cluster" style).
    pub fn contiguous(name: impl Into<String>, k: usize, n: usize) -> Self {
        let groups = (0..k).map(|m| (m * n..(m + 1) * n).collect()).collect();
        Decomposition::new(name, groups).expect("contiguous groups are always valid")
    }

    /// Alternating qubits: group 0 takes 0, 2, 4, …, group 1 takes 1, 3, 5, ….
    pub fn even_odd(n_qubits: usize) -> Self {
        let groups = vec![
            (0..n_qubits).step_by(2).collect(),
            (1..n_qubits).step_by(2).collect(),
        ];
        Decomposition::new("even_odd", groups).expect("even/odd groups are always valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Number of subsystems k.
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Qubits per subsystem n.
    pub fn group_size(&self) -> usize {
        self.groups[0].len()
    }

    /// Total qubit count nk.
    pub fn n_qubits(&self) -> usize {
        self.groups.len() * self.groups[0].len()
    }

    /// Group index of each qubit.
    pub fn group_of(&self) -> Vec<usize> {
        let mut owner = vec![0; self.n_qubits()];
        for (m, g) in self.groups.iter().enumerate() {
            for &q in g {
                owner[q] = m;
            }
        }
        owner
    }
}

/// Average inter-subsystem interaction strength of a Hamiltonian under a
/// decomposition: (1/k)·Σ_a |c_a| over terms whose non-identity letters touch
/// two or more subsystems.
pub fn interaction_strength_gmr(h_sum: &PauliSum, dec: &Decomposition) -> Result<f64> {
    if dec.n_qubits() != h_sum.n_qubits() {
        return Err(Error::SizeMismatch(format!(
            "decomposition covers {} qubits, hamiltonian has {}",
            dec.n_qubits(),
            h_sum.n_qubits()
        )));
    }
    let owner = dec.group_of();
    let mut total = 0.0;
    for (c, s) in h_sum.terms() {
        let mut touched: Option<usize> = None;
        let mut crosses = false;
        for (q, &p) in s.ops().iter().enumerate() {
            if p == PauliOp::I {
                continue;
            }
            match touched {
                None => touched = Some(owner[q]),
                Some(g) if g != owner[q] => {
                    crosses = true;
                    break;
                }
                _ => {}
            }
        }
        if crosses {
            total += c.abs();
        }
    }
    Ok(total / dec.n_groups() as f64)
}

/// Parse a Hamiltonian from the text format: first non-comment line is the
/// qubit count, then one `<coefficient> <letters>` pair per line. `#` starts
/// a comment; blank lines are skipped.
pub fn parse_hamiltonian_text(text: &str) -> Result<PauliSum> {
    let mut n_qubits: Option<usize> = None;
    let mut terms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        match n_qubits {
            None => {
                let n = line.parse::<usize>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("expected qubit count, found '{}'", line),
                })?;
                if n == 0 || n > 63 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("qubit count {} out of supported range 1..=63", n),
                    });
                }
                n_qubits = Some(n);
            }
            Some(n) => {
                let mut parts = line.split_whitespace();
                let coeff_text = parts.next().unwrap();
                let string_text = parts.next().ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: "expected '<coefficient> <pauli letters>'".into(),
                })?;
                if parts.next().is_some() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "trailing fields after pauli string".into(),
                    });
                }
                let coeff = coeff_text.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("malformed coefficient '{}'", coeff_text),
                })?;
                if !coeff.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("non-finite coefficient '{}'", coeff_text),
                    });
                }
                let string = parse_pauli_string(string_text, n).map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
                terms.push((coeff, string));
            }
        }
    }
    let n = n_qubits.ok_or(Error::Parse { line: 0, msg: "empty hamiltonian file".into() })?;
    PauliSum::from_terms(n, terms)
}

/// Load a Hamiltonian from a file in the text format.
pub fn load_hamiltonian_file(path: impl AsRef<Path>) -> Result<PauliSum> {
    let text = std::fs::read_to_string(path)?;
    parse_hamiltonian_text(&text)
}

/// Serialize to the text format; re-loading the output reproduces the sum.
pub fn hamiltonian_to_text(h_sum: &PauliSum) -> String {
    let mut out = String::new();
    out.push_str(&format!("{}\n", h_sum.n_qubits()));
    for (c, s) in h_sum.terms() {
        out.push_str(&format!("{:.17e} {}\n", c, s));
    }
    out
}

/// Write a Hamiltonian to a file in the text format.
pub fn save_hamiltonian_file(h_sum: &PauliSum, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, hamiltonian_to_text(h_sum))?;
    Ok(())
}
