//! Built-in model Hamiltonians and the Jordan-Wigner fermion-qubit mapping.

use crate::error::{Error, Result};
use crate::pauli::{PauliOp, PauliString, PauliSum};

/// Second-quantized one- and two-body pieces supported by the mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FermionTerm {
    /// t·(a†_p a_q + a†_q a_p) with p ≠ q.
    Hopping { p: usize, q: usize, coeff: f64 },
    /// U·n_p n_q with p ≠ q.
    NumberNumber { p: usize, q: usize, coeff: f64 },
    /// ε·n_p.
    Number { p: usize, coeff: f64 },
}

/// Map one fermionic term to Pauli strings under the Jordan-Wigner encoding.
///
/// Hopping between p < q becomes (t/2)·(X_p Z…Z X_q + Y_p Z…Z Y_q) with a Z
/// chain over the intermediate qubits; n_q becomes (I − Z_q)/2; n_p n_q
/// expands to four Z/I strings. All coefficients stay real.
pub fn jordan_wigner(term: FermionTerm, n_qubits: usize) -> Result<PauliSum> {
    let check = |idx: usize| -> Result<()> {
        if idx >= n_qubits {
            return Err(Error::IndexOutOfRange { index: idx as u64, limit: n_qubits as u64 });
        }
        Ok(())
    };
    let mut terms = Vec::new();
    match term {
        FermionTerm::Hopping { p, q, coeff } => {
            check(p)?;
            check(q)?;
            if p == q {
                return Err(Error::InvalidConfig("hopping requires distinct indices".into()));
            }
            let (lo, hi) = if p < q { (p, q) } else { (q, p) };
            let chain: Vec<(usize, PauliOp)> = (lo + 1..hi).map(|z| (z, PauliOp::Z)).collect();
            for end in [PauliOp::X, PauliOp::Y] {
                let mut placed = chain.clone();
                placed.push((lo, end));
                placed.push((hi, end));
                terms.push((0.5 * coeff, PauliString::with_ops(n_qubits, &placed)));
            }
        }
        FermionTerm::NumberNumber { p, q, coeff } => {
            check(p)?;
            check(q)?;
            if p == q {
                return Err(Error::InvalidConfig("number-number requires distinct indices".into()));
            }
            // (1/4)(I − Z_p)(I − Z_q)
            terms.push((0.25 * coeff, PauliString::identity(n_qubits)));
            terms.push((-0.25 * coeff, PauliString::with_ops(n_qubits, &[(p, PauliOp::Z)])));
            terms.push((-0.25 * coeff, PauliString::with_ops(n_qubits, &[(q, PauliOp::Z)])));
            terms.push((
                0.25 * coeff,
                PauliString::with_ops(n_qubits, &[(p, PauliOp::Z), (q, PauliOp::Z)]),
            ));
        }
        FermionTerm::Number { p, coeff } => {
            check(p)?;
            terms.push((0.5 * coeff, PauliString::identity(n_qubits)));
            terms.push((-0.5 * coeff, PauliString::with_ops(n_qubits, &[(p, PauliOp::Z)])));
        }
    }
    PauliSum::from_terms(n_qubits, terms)
}

/// Map a whole list of fermionic terms and merge the result.
pub fn jordan_wigner_sum(terms: &[FermionTerm], n_qubits: usize) -> Result<PauliSum> {
    let mut all = Vec::new();
    for &t in terms {
        let mapped = jordan_wigner(t, n_qubits)?;
        all.extend(mapped.terms().iter().cloned());
    }
    PauliSum::from_terms(n_qubits, all)
}

/// Antiferromagnetic chain of k four-site clusters on 4k qubits.
///
/// Sites are 1-based in the usual physics convention; qubit b of this crate
/// is site b+1. Each cluster carries XX+YY+ZZ bonds with unit coefficient on
/// its three internal links; neighboring clusters are joined by one bond with
/// coefficient `j_inter`.
pub fn build_heisenberg_chain(k: usize, j_inter: f64) -> Result<PauliSum> {
    if k < 1 {
        return Err(Error::InvalidConfig("cluster count must be at least 1".into()));
    }
    let n = 4 * k;
    let mut terms = Vec::new();
    let bond = |a: usize, b: usize, c: f64, terms: &mut Vec<(f64, PauliString)>| {
        for p in [PauliOp::X, PauliOp::Y, PauliOp::Z] {
            terms.push((c, PauliString::with_ops(n, &[(a, p), (b, p)])));
        }
    };
    for cluster in 0..k {
        let base = 4 * cluster;
        for f in 0..3 {
            bond(base + f, base + f + 1, 1.0, &mut terms);
        }
    }
    for link in 1..k {
        bond(4 * link - 1, 4 * link, j_inter, &mut terms);
    }
    PauliSum::from_terms(n, terms)
}

/// Published couplings for the layered Hubbard cell, in Hartree.
pub const GRAPHITE_T1: f64 = -1.05e-1;
pub const GRAPHITE_T2: f64 = 1.03e-2;
pub const GRAPHITE_U: f64 = 3.00e-1;

/// Two-layer, four-carbon Hubbard cell on 8 spin-orbitals.
///
/// Spin-orbitals 1..=8 (qubits 0..=7): 1–4 sit in the first layer, 5–8 in the
/// second. Intra-layer hops q ↔ q+2 carry 3·t1, the two inter-layer hops
/// 1 ↔ 5 and 2 ↔ 6 carry 2·t2 (AB stacking leaves only one aligned
/// sublattice), and U couples the on-site pairs (1,2), (3,4), (5,6), (7,8).
pub fn build_graphite_hubbard(t1: f64, t2: f64, u: f64) -> Result<PauliSum> {
    let n = 8;
    let mut fterms = Vec::new();
    for q in [1usize, 2, 5, 6] {
        fterms.push(FermionTerm::Hopping { p: q - 1, q: q + 1, coeff: 3.0 * t1 });
    }
    for q in [1usize, 2] {
        fterms.push(FermionTerm::Hopping { p: q - 1, q: q + 3, coeff: 2.0 * t2 });
    }
    for q in [1usize, 3, 5, 7] {
        fterms.push(FermionTerm::NumberNumber { p: q - 1, q, coeff: u });
    }
    jordan_wigner_sum(&fterms, n)
}

/// Total-number operator N̂ = Σ_q (I − Z_q)/2 as a Pauli sum.
pub fn number_operator(n_qubits: usize) -> PauliSum {
    let mut terms = Vec::new();
    terms.push((0.5 * n_qubits as f64, PauliString::identity(n_qubits)));
    for q in 0..n_qubits {
        terms.push((-0.5, PauliString::with_ops(n_qubits, &[(q, PauliOp::Z)])));
    }
    PauliSum::from_terms(n_qubits, terms).expect("number operator terms are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::parse_pauli_string;

    fn coeff_of(sum: &PauliSum, text: &str) -> f64 {
        let target = parse_pauli_string(text, sum.n_qubits()).unwrap();
        sum.terms()
            .iter()
            .find(|(_, s)| *s == target)
            .map(|(c, _)| *c)
            .unwrap_or(0.0)
    }

    #[test]
    fn jw_adjacent_hopping() {
        let sum = jordan_wigner(FermionTerm::Hopping { p: 0, q: 1, coeff: -0.3 }, 2).unwrap();
        assert_eq!(sum.n_terms(), 2);
        assert!((coeff_of(&sum, "XX") + 0.15).abs() < 1e-15);
        assert!((coeff_of(&sum, "YY") + 0.15).abs() < 1e-15);
    }

    #[test]
    fn jw_long_range_hopping_has_z_chain() {
        let sum = jordan_wigner(FermionTerm::Hopping { p: 0, q: 4, coeff: 1.0 }, 5).unwrap();
        assert!((coeff_of(&sum, "XZZZX") - 0.5).abs() < 1e-15);
        assert!((coeff_of(&sum, "YZZZY") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jw_number_number_expansion() {
        let sum = jordan_wigner(FermionTerm::NumberNumber { p: 0, q: 1, coeff: 2.0 }, 2).unwrap();
        assert!((coeff_of(&sum, "II") - 0.5).abs() < 1e-15);
        assert!((coeff_of(&sum, "ZI") + 0.5).abs() < 1e-15);
        assert!((coeff_of(&sum, "IZ") + 0.5).abs() < 1e-15);
        assert!((coeff_of(&sum, "ZZ") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jw_rejects_bad_indices() {
        assert!(jordan_wigner(FermionTerm::Hopping { p: 0, q: 4, coeff: 1.0 }, 4).is_err());
        assert!(jordan_wigner(FermionTerm::Hopping { p: 1, q: 1, coeff: 1.0 }, 4).is_err());
    }

    #[test]
    fn heisenberg_term_counts() {
        let h2 = build_heisenberg_chain(2, 1.0).unwrap();
        assert_eq!(h2.n_terms(), 21);
        let h1 = build_heisenberg_chain(1, 0.7).unwrap();
        assert_eq!(h1.n_terms(), 9);
        assert!(build_heisenberg_chain(0, 1.0).is_err());
    }

    #[test]
    fn heisenberg_inter_cluster_coefficient() {
        let h = build_heisenberg_chain(2, 0.2).unwrap();
        // The inter-cluster bond sits between qubits 3 and 4.
        assert!((coeff_of(&h, "IIIZZIII") - 0.2).abs() < 1e-15);
        assert!((coeff_of(&h, "IIZZIIII") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heisenberg_reversal_invariance() {
        // Reversing the chain maps qubit q to nk−1−q; the term multiset is unchanged.
        let h = build_heisenberg_chain(3, 0.4).unwrap();
        let n = h.n_qubits();
        let mut reversed = Vec::new();
        for (c, s) in h.terms() {
            let ops: Vec<_> = (0..n).map(|q| s.op(n - 1 - q)).collect();
            reversed.push((*c, PauliString::new(ops)));
        }
        let reversed = PauliSum::from_terms(n, reversed).unwrap();
        assert_eq!(reversed, h);
    }

    #[test]
    fn graphite_layers_decouple_without_t2() {
        let h = build_graphite_hubbard(GRAPHITE_T1, 0.0, GRAPHITE_U).unwrap();
        for (_, s) in h.terms() {
            let lower = (0..4).any(|q| s.op(q) != PauliOp::I);
            let upper = (4..8).any(|q| s.op(q) != PauliOp::I);
            assert!(!(lower && upper), "term {} spans both layers", s);
        }
    }

    #[test]
    fn graphite_pure_onsite_is_diagonal() {
        let h = build_graphite_hubbard(0.0, 0.0, 1.0).unwrap();
        for (_, s) in h.terms() {
            assert_eq!(s.flip_mask(), 0);
        }
        // Zero-particle sector: the empty state has zero on-site energy.
        assert_eq!(crate::pauli::matrix_element(&h, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn graphite_published_values_structure() {
        let h = build_graphite_hubbard(GRAPHITE_T1, GRAPHITE_T2, GRAPHITE_U).unwrap();
        assert_eq!(h.n_qubits(), 8);
        // Intra-layer hop 1↔3 carries 3·t1/2 per X/Y string.
        assert!((coeff_of(&h, "XZXIIIII") - 1.5 * GRAPHITE_T1).abs() < 1e-15);
        // Inter-layer hop 1↔5 carries t2 per string.
        assert!((coeff_of(&h, "XZZZXIII") - GRAPHITE_T2).abs() < 1e-15);
    }

    #[test]
    fn number_operator_counts() {
        let n_op = number_operator(3);
        assert_eq!(crate::pauli::matrix_element(&n_op, 0b101, 0b101).unwrap(), 2.0);
        assert_eq!(crate::pauli::matrix_element(&n_op, 0, 0).unwrap(), 0.0);
    }
}
