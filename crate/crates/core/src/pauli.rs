//! Qubit Hamiltonian of a Bloch matrix and the conventional qubit-wise
//! commuting (QWC) grouping used as the measurement-count baseline.
//!
//! With the local occupation mapping `c_j^+ = (X_j - i Y_j) / 2`, one qubit
//! per orbital, the Bloch Hamiltonian becomes
//!
//! ```text
//! H(k) = 1/2 sum_j eps_j (I - Z_j)
//!      + 1/2 sum_{j<l} Re H_jl (X_j X_l + Y_j Y_l)
//!      + 1/2 sum_{j<l} Im H_jl (Y_j X_l - X_j Y_l)
//! ```
//!
//! The identity part is kept as a scalar offset rather than a term.
//!
//! Qubit 0 is the most significant bit of a basis index, matching the
//! leftmost character of outcome strings in [`crate::simulator`].

use std::fmt;

use nalgebra::DMatrix;

use crate::tbmodel::{hermitian_deviation, BlochMatrix, HERMITIAN_TOLERANCE};
use crate::{Error, Result, C64};

/// Coefficients with magnitude below this are dropped.
pub const ZERO_COEFFICIENT: f64 = 1e-14;

/// Largest qubit count [`dense_matrix`] will expand.
pub const DENSE_QUBIT_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Action on a single-qubit basis state: `P|bit> = phase |bit'>`.
    fn act(self, bit: bool) -> (bool, C64) {
        match self {
            Pauli::I => (bit, C64::new(1.0, 0.0)),
            Pauli::X => (!bit, C64::new(1.0, 0.0)),
            // Y|0> = i|1>, Y|1> = -i|0>
            Pauli::Y => (!bit, if bit { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) }),
            Pauli::Z => (bit, if bit { C64::new(-1.0, 0.0) } else { C64::new(1.0, 0.0) }),
        }
    }
}

/// A weighted tensor product of single-qubit Paulis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub letters: Vec<Pauli>,
    pub coefficient: C64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coefficient: C64) -> Self {
        Self {
            letters,
            coefficient,
        }
    }

    /// Identity everywhere except the listed `(qubit, letter)` pairs.
    pub fn sparse(n_qubits: usize, ops: &[(usize, Pauli)], coefficient: f64) -> Self {
        let mut letters = vec![Pauli::I; n_qubits];
        for &(q, p) in ops {
            letters[q] = p;
        }
        Self::new(letters, C64::new(coefficient, 0.0))
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.as_char()).collect()
    }

    /// Qubits carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Image of basis state `index` under the unweighted string:
    /// `P|index> = phase |image>`.
    pub fn apply_to_basis(&self, index: usize) -> (usize, C64) {
        let n = self.letters.len();
        let mut out = index;
        let mut phase = C64::new(1.0, 0.0);
        for (q, p) in self.letters.iter().enumerate() {
            let shift = n - 1 - q;
            let bit = (index >> shift) & 1 == 1;
            let (new_bit, ph) = p.act(bit);
            if new_bit != bit {
                out ^= 1 << shift;
            }
            phase *= ph;
        }
        (out, phase)
    }

    /// `<psi| P |psi>` for the unweighted string on a dense amplitude vector.
    pub fn expectation(&self, amplitudes: &[C64]) -> C64 {
        amplitudes
            .iter()
            .enumerate()
            .map(|(b, &amp)| {
                let (img, phase) = self.apply_to_basis(b);
                amplitudes[img].conj() * phase * amp
            })
            .sum()
    }
}

/// The full qubit operator for one k-point.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitHamiltonian {
    pub n_qubits: usize,
    pub terms: Vec<PauliString>,
    /// Coefficient of the identity, `1/2 sum_j eps_j`, in eV.
    pub constant_offset: f64,
}

/// Maps a Hermitian Bloch matrix onto its qubit Hamiltonian. Terms are
/// ordered Z terms by qubit, then `XX, YY, YX, XY` per pair `(j, l)`.
pub fn qubit_hamiltonian(bloch: &BlochMatrix) -> Result<QubitHamiltonian> {
    let deviation = hermitian_deviation(bloch.entries());
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let n = bloch.dim();
    let eps = bloch.diagonal();
    let mut terms = Vec::new();
    for (j, &e) in eps.iter().enumerate() {
        if e.abs() > ZERO_COEFFICIENT {
            terms.push(PauliString::sparse(n, &[(j, Pauli::Z)], -0.5 * e));
        }
    }
    for j in 0..n {
        for l in (j + 1)..n {
            let h = bloch.get(j, l);
            if h.re.abs() > ZERO_COEFFICIENT {
                terms.push(PauliString::sparse(n, &[(j, Pauli::X), (l, Pauli::X)], 0.5 * h.re));
                terms.push(PauliString::sparse(n, &[(j, Pauli::Y), (l, Pauli::Y)], 0.5 * h.re));
            }
            if h.im.abs() > ZERO_COEFFICIENT {
                terms.push(PauliString::sparse(n, &[(j, Pauli::Y), (l, Pauli::X)], 0.5 * h.im));
                terms.push(PauliString::sparse(n, &[(j, Pauli::X), (l, Pauli::Y)], -0.5 * h.im));
            }
        }
    }
    Ok(QubitHamiltonian {
        n_qubits: n,
        terms,
        constant_offset: 0.5 * eps.iter().sum::<f64>(),
    })
}

impl fmt::Display for QubitHamiltonian {
    /// One `coeff  PAULI_STRING` line per term; the identity offset comes
    /// first when nonzero.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constant_offset.abs() > ZERO_COEFFICIENT {
            writeln!(f, "{}  {}", self.constant_offset, "I".repeat(self.n_qubits))?;
        }
        for t in &self.terms {
            writeln!(f, "{}  {}", t.coefficient.re, t.label())?;
        }
        Ok(())
    }
}

/// Measurement basis of one qubit inside a QWC group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRotation {
    None,
    XBasis,
    YBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QwcGroup {
    pub rotations: Vec<BasisRotation>,
    /// Indices into [`QubitHamiltonian::terms`].
    pub members: Vec<usize>,
}

impl QwcGroup {
    fn new(n: usize) -> Self {
        Self {
            rotations: vec![BasisRotation::None; n],
            members: Vec::new(),
        }
    }

    fn push(&mut self, index: usize, term: &PauliString) {
        for (q, p) in term.letters.iter().enumerate() {
            let r = match p {
                Pauli::X => BasisRotation::XBasis,
                Pauli::Y => BasisRotation::YBasis,
                Pauli::I | Pauli::Z => continue,
            };
            self.rotations[q] = r;
        }
        self.members.push(index);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QwcGrouping {
    pub groups: Vec<QwcGroup>,
}

impl QwcGrouping {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// The conventional grouping: all `Z`, all `XX`, all `YY`, then for each
/// `j` the groups `{X_j Y_l}` and `{Y_j X_l}` over `l > j`. Empty groups
/// are dropped, so a generic Hamiltonian yields `2N + 1` groups.
pub fn qwc_groups_conventional(h: &QubitHamiltonian) -> QwcGrouping {
    let n = h.n_qubits;
    let mut z = QwcGroup::new(n);
    let mut xx = QwcGroup::new(n);
    let mut yy = QwcGroup::new(n);
    let mut xy: Vec<QwcGroup> = (0..n).map(|_| QwcGroup::new(n)).collect();
    let mut yx: Vec<QwcGroup> = (0..n).map(|_| QwcGroup::new(n)).collect();

    for (i, t) in h.terms.iter().enumerate() {
        let support = t.support();
        match support.as_slice() {
            [_] => z.push(i, t),
            [j, l] => match (t.letters[*j], t.letters[*l]) {
                (Pauli::X, Pauli::X) => xx.push(i, t),
                (Pauli::Y, Pauli::Y) => yy.push(i, t),
                (Pauli::X, Pauli::Y) => xy[*j].push(i, t),
                (Pauli::Y, Pauli::X) => yx[*j].push(i, t),
                _ => unreachable!("qubit Hamiltonian terms are Z, XX, YY, XY or YX"),
            },
            _ => unreachable!("qubit Hamiltonian terms act on one or two qubits"),
        }
    }

    let mut groups = vec![z, xx, yy];
    for (a, b) in xy.into_iter().zip(yx) {
        groups.push(a);
        groups.push(b);
    }
    groups.retain(|g| !g.members.is_empty());
    QwcGrouping { groups }
}

/// Dense `2^N x 2^N` matrix of the Hamiltonian, offset included. Each term
/// is expanded as the Kronecker product of its single-qubit factors, which
/// has exactly one nonzero per column.
pub fn dense_matrix(h: &QubitHamiltonian) -> Result<DMatrix<C64>> {
    if h.n_qubits > DENSE_QUBIT_LIMIT {
        return Err(Error::TooManyQubits {
            n_qubits: h.n_qubits,
            limit: DENSE_QUBIT_LIMIT,
        });
    }
    let dim = 1usize << h.n_qubits;
    let mut m = DMatrix::<C64>::identity(dim, dim) * C64::new(h.constant_offset, 0.0);
    for t in &h.terms {
        for col in 0..dim {
            let (row, phase) = t.apply_to_basis(col);
            m[(row, col)] += t.coefficient * phase;
        }
    }
    Ok(m)
}

/// Basis index of the state with only qubit `j` set, `|e_j>`.
pub fn single_excitation_index(n_qubits: usize, j: usize) -> usize {
    1 << (n_qubits - 1 - j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tbmodel::KVector;

    fn bloch(n: usize, f: impl Fn(usize, usize) -> C64) -> BlochMatrix {
        BlochMatrix::from_matrix(KVector::new(vec![0.0]), DMatrix::from_fn(n, n, f)).unwrap()
    }

    fn two_level(h01: C64) -> BlochMatrix {
        bloch(2, |i, j| match (i, j) {
            (0, 1) => h01,
            (1, 0) => h01.conj(),
            _ => C64::new(0.0, 0.0),
        })
    }

    #[test]
    fn real_hopping_gives_xx_plus_yy() {
        let h = qubit_hamiltonian(&two_level(C64::new(1.0, 0.0))).unwrap();
        let dump = h.to_string();
        assert_eq!(dump, "0.5  XX\n0.5  YY\n");
        assert_eq!(h.constant_offset, 0.0);
    }

    #[test]
    fn imaginary_hopping_gives_yx_minus_xy() {
        let h = qubit_hamiltonian(&two_level(C64::new(0.0, 1.0))).unwrap();
        assert_eq!(h.to_string(), "0.5  YX\n-0.5  XY\n");
    }

    #[test]
    fn z_term_expands_to_kronecker_diagonal() {
        let h = QubitHamiltonian {
            n_qubits: 2,
            terms: vec![PauliString::sparse(2, &[(0, Pauli::Z)], 1.0)],
            constant_offset: 0.0,
        };
        let m = dense_matrix(&h).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(m.iter().filter(|c| c.norm() > 0.0).count(), 4);
    }

    #[test]
    fn hopping_pair_expands_to_swap_block() {
        let h = qubit_hamiltonian(&two_level(C64::new(1.0, 0.0))).unwrap();
        let m = dense_matrix(&h).unwrap();
        // |01> is index 1, |10> is index 2
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (1, 2) || (r, c) == (2, 1) { 1.0 } else { 0.0 };
                assert!((m[(r, c)] - C64::new(want, 0.0)).norm() < 1e-15, "({r},{c})");
            }
        }
    }

    #[test]
    fn dense_matrix_refuses_large_registers() {
        let h = QubitHamiltonian {
            n_qubits: 15,
            terms: vec![],
            constant_offset: 0.0,
        };
        assert!(matches!(dense_matrix(&h), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn grouping_counts() {
        let generic = |n: usize| {
            bloch(n, |i, j| {
                if i == j {
                    C64::new(0.3 + i as f64, 0.0)
                } else if i < j {
                    C64::new(0.1 * (i + 2 * j) as f64 + 0.05, 0.2 + 0.1 * i as f64)
                } else {
                    C64::new(0.1 * (j + 2 * i) as f64 + 0.05, -(0.2 + 0.1 * j as f64))
                }
            })
        };
        for n in [2, 3, 5] {
            let h = qubit_hamiltonian(&generic(n)).unwrap();
            assert_eq!(qwc_groups_conventional(&h).len(), 2 * n + 1);
        }
        let real_only = bloch(2, |i, j| match (i, j) {
            (0, 0) => C64::new(0.4, 0.0),
            (1, 1) => C64::new(-0.2, 0.0),
            _ => C64::new(0.7, 0.0),
        });
        let real_only = qubit_hamiltonian(&real_only).unwrap();
        assert_eq!(qwc_groups_conventional(&real_only).len(), 3);
    }

    #[test]
    fn y_action_matches_matrix() {
        // Y = [[0, -i], [i, 0]]
        let p = PauliString::sparse(1, &[(0, Pauli::Y)], 1.0);
        assert_eq!(p.apply_to_basis(0), (1, C64::new(0.0, 1.0)));
        assert_eq!(p.apply_to_basis(1), (0, C64::new(0.0, -1.0)));
    }
}
