//! Dense statevector simulator with shot sampling.
//!
//! Bit convention: qubit 0 is the most significant bit of a basis index and
//! the leftmost character of an outcome string, so on three qubits `|e_0>`
//! is `"100"` (index 4).
//!
//! The variational ansatz is a single excitation on qubit 0 followed by a
//! chain of two-parameter Givens blocks on neighbouring qubits. On the
//! ordered pair `(a, b)` a block with angles `(theta, phi)` acts as
//!
//! ```text
//!            |00>   |10>                 |01>                   |11>
//! |00>  [     1      0                    0                      0 ]
//! |10>  [     0      cos(theta/2)        -e^{-i phi} sin(theta/2) 0 ]
//! |01>  [     0      e^{i phi} sin(theta/2) cos(theta/2)          0 ]
//! |11>  [     0      0                    0                      1 ]
//! ```
//!
//! where `|10>` means qubit `a` set and qubit `b` clear. Every gate of the
//! ansatz preserves Hamming weight.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::{Error, Result, C64};

/// Default cap on the register size of a dense statevector.
pub const MAX_QUBITS: usize = 24;

const NORM_TOLERANCE: f64 = 1e-10;

/// Probabilities below this are omitted from [`exact_distribution`].
pub const DISTRIBUTION_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_register(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized (norm^2 = {norm})"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Embeds single-excitation amplitudes `a_j` as `sum_j a_j |e_j>`.
    pub fn single_excitation(a: &[C64]) -> Result<Self> {
        let n = a.len();
        check_register(n)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n];
        for (j, &aj) in a.iter().enumerate() {
            amplitudes[1 << (n - 1 - j)] = aj;
        }
        Self::from_amplitudes(n, amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Components `a_j = <e_j|psi>` on the Hamming-weight-1 states.
    pub fn single_excitation_amplitudes(&self) -> Vec<C64> {
        let n = self.n_qubits;
        (0..n).map(|j| self.amplitudes[1 << (n - 1 - j)]).collect()
    }

    fn apply_single(&mut self, q: usize, m: [[C64; 2]; 2]) {
        let mask = 1usize << (self.n_qubits - 1 - q);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_givens(&mut self, a: usize, b: usize, theta: f64, phi: f64) {
        let ma = 1usize << (self.n_qubits - 1 - a);
        let mb = 1usize << (self.n_qubits - 1 - b);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = C64::from_polar(1.0, phi);
        for i in 0..self.amplitudes.len() {
            if i & ma != 0 && i & mb == 0 {
                let j = (i ^ ma) | mb;
                let (u, v) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = u * c - e.conj() * s * v;
                self.amplitudes[j] = e * s * u + v * c;
            }
        }
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("register must have at least one qubit".into()));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            n_qubits,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    /// `S^dagger` followed by `H`; maps the `Y` eigenbasis onto the
    /// computational basis (`|+i> -> |0>`, `|-i> -> |1>`).
    SdgH(usize),
    PauliX(usize),
    Givens {
        first: usize,
        second: usize,
        theta: f64,
        phi: f64,
    },
}

impl Gate {
    fn targets(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Hadamard(q) | Gate::SdgH(q) | Gate::PauliX(q) => (q, None),
            Gate::Givens { first, second, .. } => (first, Some(second)),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Hadamard(q) => write!(f, "H {q}"),
            Gate::SdgH(q) => write!(f, "SdgH {q}"),
            Gate::PauliX(q) => write!(f, "X {q}"),
            Gate::Givens {
                first,
                second,
                theta,
                phi,
            } => write!(f, "G {first} {second} {theta} {phi}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let (a, b) = gate.targets();
        if a >= self.n_qubits || b.is_some_and(|b| b >= self.n_qubits) {
            return Err(Error::InvalidArgument(format!(
                "gate '{gate}' targets a qubit outside a {}-qubit register",
                self.n_qubits
            )));
        }
        if b == Some(a) {
            return Err(Error::InvalidArgument(format!(
                "gate '{gate}' needs two distinct targets"
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut out = self.clone();
        out.gates.extend_from_slice(&other.gates);
        Ok(out)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Ansatz angles, laid out as `[theta_0, phi_0, theta_1, phi_1, ...]` with
/// block `i` acting on qubits `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzParams(Vec<f64>);

impl AnsatzParams {
    pub fn new(n_qubits: usize, angles: Vec<f64>) -> Result<Self> {
        let want = Self::len_for(n_qubits);
        if n_qubits < 2 || angles.len() != want {
            return Err(Error::InvalidArgument(format!(
                "a {n_qubits}-qubit ansatz takes {want} angles, got {}",
                angles.len()
            )));
        }
        Ok(Self(angles))
    }

    pub fn len_for(n_qubits: usize) -> usize {
        2 * n_qubits.saturating_sub(1)
    }

    pub fn zeros(n_qubits: usize) -> Self {
        Self(vec![0.0; Self::len_for(n_qubits)])
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len() / 2 + 1
    }

    /// Angles that prepare `a` up to a global phase.
    ///
    /// Block `i` keeps `cos(theta_i / 2)` of the remaining weight on qubit
    /// `i` and passes the rest on, so `theta_i = 2 atan2(|a_{>i}|, |a_i|)`;
    /// the relative phases accumulate along the chain.
    pub fn from_amplitudes(a: &[C64]) -> Result<Self> {
        let n = a.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least 2 amplitudes".into()));
        }
        let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("amplitudes must have nonzero norm".into()));
        }
        let mags: Vec<f64> = a.iter().map(|x| x.norm() / norm).collect();
        let mut tail = vec![0.0f64; n + 1];
        for j in (0..n).rev() {
            tail[j] = (tail[j + 1].powi(2) + mags[j].powi(2)).sqrt();
        }
        let reference = a
            .iter()
            .find(|x| x.norm() > 0.0)
            .map(|x| x.arg())
            .unwrap_or(0.0);
        let mut phases = Vec::with_capacity(n);
        let mut last = 0.0;
        for x in a {
            if x.norm() > 0.0 {
                last = x.arg() - reference;
            }
            phases.push(last);
        }
        let mut angles = Vec::with_capacity(2 * (n - 1));
        for i in 0..n - 1 {
            angles.push(2.0 * tail[i + 1].atan2(mags[i]));
            angles.push(phases[i + 1] - phases[i]);
        }
        Ok(Self(angles))
    }
}

/// `X` on qubit 0, then `Givens(theta_i, phi_i)` on `(i, i + 1)` for
/// `i = 0..N-1`.
pub fn build_ansatz(n_qubits: usize, params: &AnsatzParams) -> Result<Circuit> {
    if params.angles().len() != AnsatzParams::len_for(n_qubits) || n_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "a {n_qubits}-qubit ansatz takes {} angles, got {}",
            AnsatzParams::len_for(n_qubits),
            params.angles().len()
        )));
    }
    let mut c = Circuit::new(n_qubits);
    c.push(Gate::PauliX(0))?;
    for (i, pair) in params.angles().chunks_exact(2).enumerate() {
        c.push(Gate::Givens {
            first: i,
            second: i + 1,
            theta: pair[0],
            phi: pair[1],
        })?;
    }
    Ok(c)
}

/// Applies the gates of `circuit` in order.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    if state.n_qubits != circuit.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits,
            found: circuit.n_qubits,
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let hadamard = [[one * h, one * h], [one * h, -one * h]];
    // H S^dagger = 1/sqrt2 [[1, -i], [1, i]]
    let sdg_h = [
        [one * h, C64::new(0.0, -h)],
        [one * h, C64::new(0.0, h)],
    ];
    let pauli_x = [[zero, one], [one, zero]];

    let mut out = state.clone();
    for g in &circuit.gates {
        match *g {
            Gate::Hadamard(q) => out.apply_single(q, hadamard),
            Gate::SdgH(q) => out.apply_single(q, sdg_h),
            Gate::PauliX(q) => out.apply_single(q, pauli_x),
            Gate::Givens {
                first,
                second,
                theta,
                phi,
            } => out.apply_givens(first, second, theta, phi),
        }
    }
    Ok(out)
}

/// Prepares the circuit's output from `|0...0>`.
pub fn run_circuit(circuit: &Circuit) -> Result<StateVector> {
    apply_circuit(&StateVector::zero(circuit.n_qubits)?, circuit)
}

/// Renders basis index `index` as an outcome string, qubit 0 first.
pub fn outcome_string(n_qubits: usize, index: usize) -> String {
    (0..n_qubits)
        .map(|q| if (index >> (n_qubits - 1 - q)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses an outcome string into a basis index.
pub fn parse_outcome(s: &str) -> Result<usize> {
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::InvalidArgument(format!("bad outcome string '{s}'"))),
    })
}

/// Outcome histogram of one measurement setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    n_qubits: usize,
    counts: BTreeMap<usize, u64>,
    total_shots: u64,
}

impl ShotCounts {
    /// Builds counts from `(outcome string, count)` pairs.
    pub fn from_strings<'a>(
        n_qubits: usize,
        entries: impl IntoIterator<Item = (&'a str, u64)>,
    ) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for (s, c) in entries {
            if s.len() != n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "outcome '{s}' does not have {n_qubits} bits"
                )));
            }
            if c > 0 {
                *counts.entry(parse_outcome(s)?).or_insert(0) += c;
                total += c;
            }
        }
        if total == 0 {
            return Err(Error::InvalidArgument("counts are empty".into()));
        }
        Ok(Self {
            n_qubits,
            counts,
            total_shots: total,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    /// Count for an outcome string, 0 when never observed.
    pub fn get(&self, outcome: &str) -> u64 {
        parse_outcome(outcome)
            .ok()
            .and_then(|i| self.counts.get(&i).copied())
            .unwrap_or(0)
    }

    pub fn count_of_index(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// Nonzero counts keyed by basis index.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    /// Nonzero counts keyed by outcome string.
    pub fn to_strings(&self) -> BTreeMap<String, u64> {
        self.iter()
            .map(|(i, c)| (outcome_string(self.n_qubits, i), c))
            .collect()
    }
}

/// Draws `shots` i.i.d. computational-basis outcomes from `|amplitude|^2`.
///
/// The histogram is drawn as a multinomial through a chain of conditional
/// binomials over the nonzero probabilities, with a ChaCha8 generator
/// seeded from `seed`.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<(usize, f64)> = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| (i, a.norm_sqr()))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    let mut remaining_mass: f64 = probs.iter().map(|&(_, p)| p).sum();
    let mut remaining = shots;
    let mut counts = BTreeMap::new();
    for (pos, &(index, p)) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let c = if pos + 1 == probs.len() {
            remaining
        } else {
            let q = (p / remaining_mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng)
        };
        if c > 0 {
            counts.insert(index, c);
        }
        remaining -= c;
        remaining_mass -= p;
    }
    Ok(ShotCounts {
        n_qubits: state.n_qubits,
        counts,
        total_shots: shots,
    })
}

/// Infinite-shot outcome distribution, omitting probabilities below
/// [`DISTRIBUTION_FLOOR`].
pub fn exact_distribution(state: &StateVector) -> BTreeMap<String, f64> {
    state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() >= DISTRIBUTION_FLOOR)
        .map(|(i, a)| (outcome_string(state.n_qubits, i), a.norm_sqr()))
        .collect()
}

/// Outcome frequencies of one setting, from shots or exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    n_qubits: usize,
    entries: Vec<(usize, f64)>,
    shots: Option<u64>,
}

impl Readout {
    pub fn from_counts(counts: &ShotCounts) -> Self {
        let total = counts.total_shots as f64;
        Self {
            n_qubits: counts.n_qubits,
            entries: counts.iter().map(|(i, c)| (i, c as f64 / total)).collect(),
            shots: Some(counts.total_shots),
        }
    }

    /// Exact probabilities, without the display floor.
    pub fn exact(state: &StateVector) -> Self {
        Self {
            n_qubits: state.n_qubits,
            entries: state
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, a)| (i, a.norm_sqr()))
                .filter(|&(_, p)| p > 0.0)
                .collect(),
            shots: None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `None` in analytic mode.
    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    /// `(basis index, frequency)` pairs with nonzero frequency.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.entries
            .iter()
            .find(|&&(i, _)| i == index)
            .map(|&(_, f)| f)
            .unwrap_or(0.0)
    }

    /// `sum_b f(b) (-1)^(b_j + b_l)`.
    pub fn pair_parity(&self, j: usize, l: usize) -> Result<f64> {
        let n = self.n_qubits;
        if j >= n || l >= n || j == l {
            return Err(Error::InvalidArgument(format!(
                "pair ({j}, {l}) is not a pair of distinct qubits of a {n}-qubit register"
            )));
        }
        let mask = (1usize << (n - 1 - j)) | (1usize << (n - 1 - l));
        Ok(self
            .entries
            .iter()
            .map(|&(i, f)| if (i & mask).count_ones() % 2 == 0 { f } else { -f })
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: C64, b: C64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn zero_angles_prepare_first_excitation() {
        let circ = build_ansatz(3, &AnsatzParams::zeros(3)).unwrap();
        let s = run_circuit(&circ).unwrap();
        let a = s.single_excitation_amplitudes();
        assert_close(a[0], c(1.0, 0.0), 1e-15);
        assert_close(a[1], c(0.0, 0.0), 1e-15);
        assert_close(a[2], c(0.0, 0.0), 1e-15);
        assert_eq!(exact_distribution(&s).keys().collect::<Vec<_>>(), vec!["100"]);
    }

    #[test]
    fn wrong_parameter_length_is_rejected() {
        assert!(AnsatzParams::new(3, vec![0.0; 3]).is_err());
        let bad = AnsatzParams(vec![0.0; 2]);
        assert!(build_ansatz(3, &bad).is_err());
    }

    #[test]
    fn hadamard_on_zero() {
        let mut circ = Circuit::new(1);
        circ.push(Gate::Hadamard(0)).unwrap();
        let s = run_circuit(&circ).unwrap();
        assert_close(s.amplitudes()[0], c(FRAC_1_SQRT_2, 0.0), 1e-15);
        assert_close(s.amplitudes()[1], c(FRAC_1_SQRT_2, 0.0), 1e-15);
    }

    #[test]
    fn sdgh_rotates_y_eigenbasis_to_computational() {
        let plus_i = StateVector::from_amplitudes(1, vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)])
            .unwrap();
        let minus_i =
            StateVector::from_amplitudes(1, vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)])
                .unwrap();
        let mut circ = Circuit::new(1);
        circ.push(Gate::SdgH(0)).unwrap();
        let a = apply_circuit(&plus_i, &circ).unwrap();
        let b = apply_circuit(&minus_i, &circ).unwrap();
        assert!((a.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        assert!((b.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gate_validation() {
        let mut circ = Circuit::new(2);
        assert!(circ.push(Gate::Hadamard(2)).is_err());
        assert!(circ
            .push(Gate::Givens { first: 1, second: 1, theta: 0.0, phi: 0.0 })
            .is_err());
        let s = StateVector::zero(3).unwrap();
        assert!(apply_circuit(&s, &circ).is_err());
    }

    #[test]
    fn deterministic_state_samples_one_outcome() {
        let s = StateVector::single_excitation(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let counts = sample(&s, 100, 3).unwrap();
        assert_eq!(counts.get("010"), 100);
        assert_eq!(counts.to_strings().len(), 1);
    }

    #[test]
    fn zero_shots_is_an_error() {
        let s = StateVector::zero(2).unwrap();
        assert!(sample(&s, 0, 1).is_err());
    }

    #[test]
    fn same_seed_same_counts() {
        let p = AnsatzParams::new(3, vec![1.0, 0.3, 2.0, -0.4]).unwrap();
        let s = run_circuit(&build_ansatz(3, &p).unwrap()).unwrap();
        assert_eq!(sample(&s, 5000, 42).unwrap(), sample(&s, 5000, 42).unwrap());
        assert_ne!(sample(&s, 5000, 42).unwrap(), sample(&s, 5000, 43).unwrap());
    }

    #[test]
    fn exact_distribution_examples() {
        let s = StateVector::single_excitation(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let d = exact_distribution(&s);
        assert_eq!(d.len(), 1);
        assert!((d["10"] - 1.0).abs() < 1e-15);

        let s = StateVector::single_excitation(&[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)])
            .unwrap();
        let d = exact_distribution(&s);
        assert!((d["01"] - 0.5).abs() < 1e-15 && (d["10"] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outcome_strings_round_trip() {
        assert_eq!(outcome_string(3, 4), "100");
        assert_eq!(parse_outcome("100").unwrap(), 4);
        assert!(parse_outcome("10x").is_err());
    }

    #[test]
    fn pair_parity_examples() {
        let even = ShotCounts::from_strings(2, [("00", 50), ("11", 50)]).unwrap();
        assert_eq!(Readout::from_counts(&even).pair_parity(0, 1).unwrap(), 1.0);
        let odd = ShotCounts::from_strings(2, [("01", 100)]).unwrap();
        assert_eq!(Readout::from_counts(&odd).pair_parity(0, 1).unwrap(), -1.0);
        assert!(Readout::from_counts(&odd).pair_parity(0, 2).is_err());
        assert!(Readout::from_counts(&odd).pair_parity(1, 1).is_err());
    }

    #[test]
    fn amplitudes_round_trip_through_angles() {
        let target = [
            c(0.5, 0.0),
            c(0.0, 0.0),
            C64::from_polar(0.5, 1.1),
            C64::from_polar(0.5f64.sqrt(), -2.0),
        ];
        let p = AnsatzParams::from_amplitudes(&target).unwrap();
        let s = run_circuit(&build_ansatz(4, &p).unwrap()).unwrap();
        let a = s.single_excitation_amplitudes();
        let overlap: C64 = a.iter().zip(&target).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        assert!(a[1].norm() < 1e-15);
    }

    #[test]
    fn half_angle_block_matches_closed_form() {
        let p = AnsatzParams::new(2, vec![PI / 2.0, PI / 2.0]).unwrap();
        let a = run_circuit(&build_ansatz(2, &p).unwrap())
            .unwrap()
            .single_excitation_amplitudes();
        assert_close(a[0], c(FRAC_1_SQRT_2, 0.0), 1e-15);
        assert_close(a[1], c(0.0, FRAC_1_SQRT_2), 1e-15);
    }
}
