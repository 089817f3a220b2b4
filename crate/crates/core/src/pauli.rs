//! Weighted sums of n-qubit Pauli words: parsing, exact expectation values,
//! dense diagonalization, the linear interpolation H(t) and the
//! weight-one-Z initial-operator heuristic.
//!
//! Word orientation: the leftmost character of a word acts on qubit n and the
//! rightmost on qubit 1. Combined with the q1-owns-the-most-significant-bit
//! state convention, the character at zero-based position j of a word acts on
//! index bit j.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::{StateVector, MAX_QUBITS};

/// Coefficients merging below this magnitude are dropped.
const MERGE_EPS: f64 = 1e-12;

/// An n-qubit Pauli word stored as X/Z bit masks (Y sets both).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord {
    n_qubits: u8,
    x_mask: u32,
    z_mask: u32,
}

impl PauliWord {
    pub fn parse(word: &str) -> Result<Self> {
        let n = word.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits: n,
                max: MAX_QUBITS,
            });
        }
        let (mut x_mask, mut z_mask) = (0u32, 0u32);
        for (j, ch) in word.chars().enumerate() {
            let bit = 1u32 << j;
            match ch {
                'I' => {}
                'X' => x_mask |= bit,
                'Y' => {
                    x_mask |= bit;
                    z_mask |= bit;
                }
                'Z' => z_mask |= bit,
                other => {
                    return Err(Error::ParseHamiltonian {
                        line: 0,
                        msg: format!("illegal Pauli character '{other}'"),
                    })
                }
            }
        }
        Ok(Self {
            n_qubits: n as u8,
            x_mask,
            z_mask,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Number of non-identity single-qubit factors.
    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    /// True when the word is a single Z with identities elsewhere.
    pub fn is_single_z(&self) -> bool {
        self.x_mask == 0 && self.z_mask.count_ones() == 1
    }

    pub(crate) fn x_mask(&self) -> u32 {
        self.x_mask
    }

    pub(crate) fn z_mask(&self) -> u32 {
        self.z_mask
    }

    fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// Phase and bit-flip action on a basis index: P|i> = phase(i) |i ^ flip>.
    fn action(&self, index: usize) -> Complex64 {
        const I_POW: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let sign = if (index as u32 & self.z_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        I_POW[(self.y_count() % 4) as usize] * sign
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n_qubits() {
            let bit = 1u32 << j;
            let ch = match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
                (false, false) => 'I',
                (true, false) => 'X',
                (true, true) => 'Y',
                (false, true) => 'Z',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

/// One weighted Pauli word (coefficient in Hartree).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub word: PauliWord,
}

/// A self-adjoint operator as a merged list of weighted Pauli words.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    /// Merges duplicate words, drops negligible coefficients and sorts into
    /// canonical (word-lexicographic) order. The term list may be empty.
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut merged: HashMap<PauliWord, f64> = HashMap::new();
        for t in terms {
            if t.word.n_qubits() != n_qubits {
                return Err(Error::QubitCountMismatch {
                    left: n_qubits,
                    right: t.word.n_qubits(),
                });
            }
            *merged.entry(t.word).or_insert(0.0) += t.coefficient;
        }
        let mut terms: Vec<PauliTerm> = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= MERGE_EPS)
            .map(|(word, coefficient)| PauliTerm { coefficient, word })
            .collect();
        terms.sort_by_key(|t| t.word.to_string());
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Coefficient of the identity word (0 when absent).
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.word.is_identity())
            .map_or(0.0, |t| t.coefficient)
    }

    /// Canonical one-term-per-line text form.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(&format!("{} {}\n", t.coefficient, t.word));
        }
        out
    }

    /// Sum scaled by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm {
                coefficient: factor * t.coefficient,
                word: t.word,
            })
            .collect();
        Self::new(self.n_qubits, terms).expect("scaling preserves validity")
    }
}

/// Parses one-term-per-line text (`<coefficient> <word>`, `#` comments).
pub fn parse_pauli_sum(text: &str) -> Result<PauliSum> {
    let mut terms = Vec::new();
    let mut n_qubits = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let coeff_str = parts.next().unwrap();
        let word_str = parts.next().ok_or_else(|| Error::ParseHamiltonian {
            line: line_no,
            msg: "expected `<coefficient> <word>`".into(),
        })?;
        if parts.next().is_some() {
            return Err(Error::ParseHamiltonian {
                line: line_no,
                msg: "trailing tokens after the Pauli word".into(),
            });
        }
        let coefficient: f64 = coeff_str.parse().map_err(|_| Error::ParseHamiltonian {
            line: line_no,
            msg: format!("malformed coefficient '{coeff_str}'"),
        })?;
        let word = PauliWord::parse(word_str).map_err(|e| match e {
            Error::ParseHamiltonian { msg, .. } => Error::ParseHamiltonian { line: line_no, msg },
            other => other,
        })?;
        match n_qubits {
            None => n_qubits = Some(word.n_qubits()),
            Some(n) if n != word.n_qubits() => {
                return Err(Error::ParseHamiltonian {
                    line: line_no,
                    msg: format!("word length {} differs from earlier {}", word.n_qubits(), n),
                })
            }
            _ => {}
        }
        terms.push(PauliTerm { coefficient, word });
    }
    let n_qubits = n_qubits.ok_or(Error::EmptyHamiltonian)?;
    PauliSum::new(n_qubits, terms)
}

/// Reads and parses a Hamiltonian file.
pub fn read_pauli_sum(path: &std::path::Path) -> Result<PauliSum> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ParseHamiltonian {
        line: 0,
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_pauli_sum(&text)
}

fn check_dims(h: &PauliSum, state: &StateVector) -> Result<()> {
    if h.n_qubits() != state.n_qubits() {
        return Err(Error::QubitCountMismatch {
            left: h.n_qubits(),
            right: state.n_qubits(),
        });
    }
    Ok(())
}

/// Exact expectation <phi|H|phi>. The imaginary residue is asserted below
/// 1e-10 and discarded.
pub fn exact_expectation(h: &PauliSum, state: &StateVector) -> Result<f64> {
    check_dims(h, state)?;
    let amps = state.amplitudes();
    let mut acc = Complex64::ZERO;
    for term in h.terms() {
        let flip = term.word.x_mask() as usize;
        let mut t = Complex64::ZERO;
        for (i, a) in amps.iter().enumerate() {
            t += amps[i ^ flip].conj() * term.word.action(i) * a;
        }
        acc += t * term.coefficient;
    }
    if acc.im.abs() >= 1e-10 {
        return Err(Error::ComplexExpectation(acc.im));
    }
    Ok(acc.re)
}

/// Dense 2^n x 2^n Hermitian matrix assembled from the terms.
pub fn dense_matrix(h: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << h.n_qubits();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for term in h.terms() {
        let flip = term.word.x_mask() as usize;
        for col in 0..dim {
            m[(col ^ flip, col)] += term.word.action(col) * term.coefficient;
        }
    }
    m
}

/// Two lowest eigenvalues (with multiplicity) and a normalized ground
/// eigenvector of the dense operator.
pub fn exact_eigen(h: &PauliSum) -> Result<(f64, f64, StateVector)> {
    let eig = SymmetricEigen::new(dense_matrix(h));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lam0 = eig.eigenvalues[order[0]];
    let lam1 = eig.eigenvalues[order[1]];
    let ground = eig.eigenvectors.column(order[0]).iter().copied().collect();
    Ok((lam0, lam1, StateVector::from_amplitudes(h.n_qubits(), ground)?))
}

/// The linear interpolation family H(t) = (1-t) H_I + t H_T.
#[derive(Debug, Clone)]
pub struct HomotopyHamiltonian {
    initial: PauliSum,
    target: PauliSum,
}

impl HomotopyHamiltonian {
    pub fn new(initial: PauliSum, target: PauliSum) -> Result<Self> {
        if initial.n_qubits() != target.n_qubits() {
            return Err(Error::QubitCountMismatch {
                left: initial.n_qubits(),
                right: target.n_qubits(),
            });
        }
        Ok(Self { initial, target })
    }

    pub fn initial(&self) -> &PauliSum {
        &self.initial
    }

    pub fn target(&self) -> &PauliSum {
        &self.target
    }

    pub fn n_qubits(&self) -> usize {
        self.target.n_qubits()
    }

    /// Term-merged H(t). `t` is not clamped; callers restrict the range.
    pub fn at(&self, t: f64) -> PauliSum {
        let mut terms: Vec<PauliTerm> = self.initial.scaled(1.0 - t).terms().to_vec();
        terms.extend_from_slice(self.target.scaled(t).terms());
        PauliSum::new(self.n_qubits(), terms).expect("matching qubit counts")
    }
}

/// The sub-sum of the identity word plus all weight-one Z words, the
/// initial-operator heuristic: its ground state is a known basis state.
pub fn extract_initial_hamiltonian(h_target: &PauliSum) -> PauliSum {
    let terms = h_target
        .terms()
        .iter()
        .filter(|t| t.word.is_identity() || t.word.is_single_z())
        .copied()
        .collect();
    PauliSum::new(h_target.n_qubits(), terms).expect("subset of a valid sum")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_layered_ry_ansatz, AnsatzSpec, StateVector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    pub(crate) fn lih_path() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/lih_2p5A.ham")
    }

    // Reference eigenvalues of the shipped operators, frozen from an
    // independent dense diagonalization (numpy.linalg.eigh).
    pub(crate) const LIH_LAM0: f64 = -0.052203164218002501;
    pub(crate) const LIH_LAM1: f64 = -0.0067257585354573053;
    pub(crate) const LIH_INITIAL_LAM0: f64 = -0.125676;

    #[test]
    fn parse_two_terms() {
        let h = parse_pauli_sum("0.567662 IIII\n0.245088 IIZI").unwrap();
        assert_eq!(h.n_qubits(), 4);
        assert_eq!(h.terms().len(), 2);
    }

    #[test]
    fn parse_merges_duplicates() {
        let h = parse_pauli_sum("1.0 Z\n2.0 Z").unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_abs_diff_eq!(h.terms()[0].coefficient, 3.0);
    }

    #[test]
    fn parse_full_lih_file() {
        let h = read_pauli_sum(&lih_path()).unwrap();
        assert_eq!(h.n_qubits(), 4);
        assert_eq!(h.terms().len(), 100);
        assert_abs_diff_eq!(h.identity_coefficient(), 0.567662);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(matches!(
            parse_pauli_sum("abc IIII"),
            Err(Error::ParseHamiltonian { line: 1, .. })
        ));
        assert!(matches!(
            parse_pauli_sum("1.0 IIQI"),
            Err(Error::ParseHamiltonian { .. })
        ));
        assert!(matches!(
            parse_pauli_sum("1.0 II\n1.0 III"),
            Err(Error::ParseHamiltonian { line: 2, .. })
        ));
        assert!(matches!(parse_pauli_sum("# only\n"), Err(Error::EmptyHamiltonian)));
    }

    #[test]
    fn serialize_round_trip_is_canonical() {
        let h = parse_pauli_sum("2.0 ZI # comment\n1.0e-1 XY\n0.5 ZI").unwrap();
        let text = h.serialize();
        let again = parse_pauli_sum(&text).unwrap();
        assert_eq!(h, again);
        assert_eq!(text, again.serialize());
    }

    #[test]
    fn lih_initial_operator_terms() {
        let target = read_pauli_sum(&lih_path()).unwrap();
        let initial = extract_initial_hamiltonian(&target);
        let mut got: Vec<(String, f64)> = initial
            .terms()
            .iter()
            .map(|t| (t.word.to_string(), t.coefficient))
            .collect();
        got.sort_by(|a, b| a.0.cmp(&b.0));
        let mut expect = vec![
            ("IIII".to_string(), 0.567662),
            ("ZIII".to_string(), -0.245088),
            ("IZII".to_string(), 0.101581),
            ("IIZI".to_string(), 0.245088),
            ("IIIZ".to_string(), -0.101581),
        ];
        expect.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(got.len(), 5);
        for ((gw, gc), (ew, ec)) in got.iter().zip(&expect) {
            assert_eq!(gw, ew);
            assert_abs_diff_eq!(gc, ec);
        }
    }

    #[test]
    fn weight_one_filter() {
        let h = parse_pauli_sum("0.5 ZZ\n0.1 ZI").unwrap();
        let init = extract_initial_hamiltonian(&h);
        assert_eq!(init.terms().len(), 1);
        assert_eq!(init.terms()[0].word.to_string(), "ZI");
        let no_z = parse_pauli_sum("0.3 XX").unwrap();
        assert!(extract_initial_hamiltonian(&no_z).terms().is_empty());
    }

    #[test]
    fn expectation_of_initial_operator_at_0110() {
        let target = read_pauli_sum(&lih_path()).unwrap();
        let initial = extract_initial_hamiltonian(&target);
        let state = StateVector::basis_state(4, 0b0110).unwrap();
        let e = exact_expectation(&initial, &state).unwrap();
        assert_abs_diff_eq!(e, LIH_INITIAL_LAM0, epsilon = 1e-12);
    }

    #[test]
    fn identity_expectation_is_coefficient() {
        let h = parse_pauli_sum("0.73 III").unwrap();
        let ansatz = build_layered_ry_ansatz(3, 1, &[], &[]).unwrap();
        let state = ansatz.prepare_state(&[0.3, -0.9, 1.4, 0.2, 0.0, 2.2]).unwrap();
        assert_abs_diff_eq!(exact_expectation(&h, &state).unwrap(), 0.73, epsilon = 1e-12);
    }

    #[test]
    fn z_expectation_is_cosine() {
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let ansatz = build_layered_ry_ansatz(1, 0, &[], &[]).unwrap();
        for (phi, expect) in [(0.0, 1.0), (PI / 2.0, 0.0), (PI, -1.0)] {
            let state = ansatz.prepare_state(&[phi]).unwrap();
            assert_abs_diff_eq!(
                exact_expectation(&h, &state).unwrap(),
                expect,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn eigen_single_z() {
        let h = parse_pauli_sum("1.0 Z").unwrap();
        let (lam0, lam1, ground) = exact_eigen(&h).unwrap();
        assert_abs_diff_eq!(lam0, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lam1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ground.amplitudes()[1].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_initial_operator() {
        let target = read_pauli_sum(&lih_path()).unwrap();
        let initial = extract_initial_hamiltonian(&target);
        let (lam0, lam1, ground) = exact_eigen(&initial).unwrap();
        assert_abs_diff_eq!(lam0, LIH_INITIAL_LAM0, epsilon = 1e-12);
        assert_abs_diff_eq!(lam1, 0.077486, epsilon = 1e-12);
        assert_abs_diff_eq!(ground.amplitudes()[0b0110].norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn eigen_lih_reference_energy() {
        let h = read_pauli_sum(&lih_path()).unwrap();
        let (lam0, lam1, ground) = exact_eigen(&h).unwrap();
        assert_abs_diff_eq!(lam0, LIH_LAM0, epsilon = 1e-9);
        assert_abs_diff_eq!(lam1, LIH_LAM1, epsilon = 1e-9);
        assert_abs_diff_eq!(exact_expectation(&h, &ground).unwrap(), lam0, epsilon = 1e-9);
    }

    #[test]
    fn homotopy_endpoints_and_midpoint() {
        let hi = parse_pauli_sum("1.0 Z").unwrap();
        let ht = parse_pauli_sum("3.0 Z").unwrap();
        let hh = HomotopyHamiltonian::new(hi.clone(), ht.clone()).unwrap();
        assert_eq!(hh.at(0.0), hi);
        assert_eq!(hh.at(1.0), ht);
        let mid = hh.at(0.5);
        assert_eq!(mid.terms().len(), 1);
        assert_abs_diff_eq!(mid.terms()[0].coefficient, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn homotopy_rejects_mismatched_sizes() {
        let a = parse_pauli_sum("1.0 Z").unwrap();
        let b = parse_pauli_sum("1.0 ZZ").unwrap();
        assert!(HomotopyHamiltonian::new(a, b).is_err());
    }

    #[test]
    fn variational_bound_on_random_states() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let h = read_pauli_sum(&lih_path()).unwrap();
        let (lam0, _, _) = exact_eigen(&h).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let amps: Vec<Complex64> = (0..16)
                .map(|_| {
                    Complex64::new(
                        StandardNormal.sample(&mut rng),
                        StandardNormal.sample(&mut rng),
                    )
                })
                .collect();
            let state = StateVector::from_amplitudes(4, amps).unwrap();
            assert!(exact_expectation(&h, &state).unwrap() >= lam0 - 1e-12);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Independent route: explicit Kronecker-product matrix.
        fn kron_matrix(h: &PauliSum) -> Vec<Vec<Complex64>> {
            let one = Complex64::ONE;
            let i = Complex64::I;
            let z = Complex64::ZERO;
            let mats = |ch: char| -> [[Complex64; 2]; 2] {
                match ch {
                    'I' => [[one, z], [z, one]],
                    'X' => [[z, one], [one, z]],
                    'Y' => [[z, -i], [i, z]],
                    'Z' => [[one, z], [z, -one]],
                    _ => unreachable!(),
                }
            };
            let n = h.n_qubits();
            let dim = 1 << n;
            let mut total = vec![vec![z; dim]; dim];
            for term in h.terms() {
                // q1 is the leftmost basis label = most significant bit, and
                // the rightmost word character acts on q1: accumulate the
                // Kronecker product over the reversed word.
                let mut acc = vec![vec![one]];
                for ch in term.word.to_string().chars().rev() {
                    let m = mats(ch);
                    let rows = acc.len();
                    let mut next = vec![vec![z; rows * 2]; rows * 2];
                    for (r, row) in acc.iter().enumerate() {
                        for (c, &v) in row.iter().enumerate() {
                            for a in 0..2 {
                                for b in 0..2 {
                                    next[r * 2 + a][c * 2 + b] = v * m[a][b];
                                }
                            }
                        }
                    }
                    acc = next;
                }
                for r in 0..dim {
                    for c in 0..dim {
                        total[r][c] += acc[r][c] * term.coefficient;
                    }
                }
            }
            total
        }

        fn arb_two_qubit_sum() -> impl Strategy<Value = PauliSum> {
            proptest::collection::vec((-2.0..2.0f64, 0usize..16), 1..6).prop_map(|raw| {
                let words = [
                    "II", "XI", "YI", "ZI", "IX", "XX", "YX", "ZX", "IY", "XY", "YY", "ZY",
                    "IZ", "XZ", "YZ", "ZZ",
                ];
                let terms = raw
                    .into_iter()
                    .map(|(c, w)| PauliTerm {
                        coefficient: c,
                        word: PauliWord::parse(words[w]).unwrap(),
                    })
                    .collect();
                PauliSum::new(2, terms).unwrap()
            })
        }

        proptest! {
            #[test]
            fn expectation_matches_assembled_matrix(
                h in arb_two_qubit_sum(),
                theta in proptest::collection::vec(-3.2..3.2f64, 4)
            ) {
                let ansatz = AnsatzSpec::h2().build().unwrap();
                let state = ansatz.prepare_state(&theta).unwrap();
                let m = kron_matrix(&h);
                let amps = state.amplitudes();
                let mut acc = Complex64::ZERO;
                for r in 0..4 {
                    for c in 0..4 {
                        acc += amps[r].conj() * m[r][c] * amps[c];
                    }
                }
                let direct = exact_expectation(&h, &state).unwrap();
                prop_assert!((direct - acc.re).abs() < 1e-12);
            }

            #[test]
            fn homotopy_expectation_is_affine(
                t in 0.0..1.0f64,
                theta in proptest::collection::vec(-3.2..3.2f64, 4)
            ) {
                let hi = parse_pauli_sum("0.4 ZI\n-0.3 XX").unwrap();
                let ht = parse_pauli_sum("1.1 ZZ\n0.2 YY\n0.5 IX").unwrap();
                let hh = HomotopyHamiltonian::new(hi.clone(), ht.clone()).unwrap();
                let ansatz = AnsatzSpec::h2().build().unwrap();
                let state = ansatz.prepare_state(&theta).unwrap();
                let lhs = exact_expectation(&hh.at(t), &state).unwrap();
                let rhs = (1.0 - t) * exact_expectation(&hi, &state).unwrap()
                    + t * exact_expectation(&ht, &state).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
