//! Analytic-mode invariant batteries.
//!
//! Each check compares a protocol quantity against an independent
//! reference (dense or sparse operator expansion, Pauli expectations on the
//! full statevector, or the Rayleigh quotient of the exact amplitudes) and
//! records the largest deviation seen.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::pauli::{dense_matrix, qubit_hamiltonian, single_excitation_index, Pauli, PauliString, QubitHamiltonian};
use crate::protocol::{compress, run_protocol, ProtocolConfig, Provenance, XySign};
use crate::seed;
use crate::simulator::{apply_circuit, build_ansatz, run_circuit, AnsatzParams, Circuit, Gate, Readout, StateVector};
use crate::tbmodel::{BlochMatrix, KVector};
use crate::{Error, Result, C64};

/// Largest register the dense expansion is built for during validation;
/// above it the block is assembled column by column.
pub const DENSE_VALIDATION_LIMIT: usize = 8;
pub const MAX_VALIDATION_QUBITS: usize = 14;

/// Hermitian matrix with entries uniform in `[-1, 1] + i[-1, 1]`.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for l in (j + 1)..n {
            let v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(j, l)] = v;
            m[(l, j)] = v.conj();
        }
    }
    m
}

pub fn random_bloch<R: Rng>(n: usize, rng: &mut R) -> BlochMatrix {
    BlochMatrix::from_matrix(KVector::new(vec![0.0]), random_hermitian(n, rng))
        .expect("constructed Hermitian")
}

pub fn random_theta<R: Rng>(n: usize, rng: &mut R) -> AnsatzParams {
    let angles = (0..AnsatzParams::len_for(n))
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    AnsatzParams::new(n, angles).expect("length from len_for")
}

/// `a^dagger H a`.
pub fn rayleigh_quotient(h: &DMatrix<C64>, a: &[C64]) -> f64 {
    let n = a.len();
    let mut e = C64::new(0.0, 0.0);
    for j in 0..n {
        for l in 0..n {
            e += a[j].conj() * h[(j, l)] * a[l];
        }
    }
    e.re
}

/// `<e_j| H |e_l>` from the operator sum applied to each `|e_l>`.
pub fn single_excitation_block(h: &QubitHamiltonian) -> DMatrix<C64> {
    let n = h.n_qubits;
    let mut block = DMatrix::from_fn(n, n, |j, l| {
        C64::new(if j == l { h.constant_offset } else { 0.0 }, 0.0)
    });
    for l in 0..n {
        let col = single_excitation_index(n, l);
        for term in &h.terms {
            let (image, phase) = term.apply_to_basis(col);
            if image.count_ones() == 1 {
                let j = n - 1 - image.trailing_zeros() as usize;
                block[(j, l)] += term.coefficient * phase;
            }
        }
    }
    block
}

/// Same block read off the dense `2^N x 2^N` expansion.
pub fn dense_single_excitation_block(h: &QubitHamiltonian) -> Result<DMatrix<C64>> {
    let n = h.n_qubits;
    let dense = dense_matrix(h)?;
    Ok(DMatrix::from_fn(n, n, |j, l| {
        dense[(single_excitation_index(n, j), single_excitation_index(n, l))]
    }))
}

fn max_entry_deviation(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Setting with `S^dagger H` at even compressed positions and `H` at odd
/// ones, the mirror image of the `XY` setting.
pub fn complementary_xy_setting(kept: &[usize], n_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    for (p, &q) in kept.iter().enumerate() {
        c.push(if p % 2 == 0 { Gate::SdgH(q) } else { Gate::Hadamard(q) })?;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub n_qubits: Option<usize>,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when a case could not be evaluated at all.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<28} {:>3} {:>6} {:>12} {:>9}  result\n", "check", "N", "cases", "max dev", "tol");
        for c in &self.checks {
            let n = c.n_qubits.map_or("-".to_string(), |n| n.to_string());
            let verdict = match (&c.error, c.passed) {
                (Some(e), _) => format!("FAIL ({e})"),
                (None, true) => "pass".to_string(),
                (None, false) => "FAIL".to_string(),
            };
            s += &format!(
                "{:<28} {:>3} {:>6} {:>12.3e} {:>9.0e}  {verdict}\n",
                c.name, n, c.cases, c.max_deviation, c.tolerance
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationConfig {
    pub max_qubits: usize,
    /// Random Hermitian matrices per `N` for the block identity.
    pub matrices: usize,
    /// Random angle sets per `N` for the protocol checks.
    pub thetas: usize,
    pub seed: u64,
    #[serde(skip)]
    pub xy_sign: XySign,
}

impl ValidationConfig {
    pub fn new(max_qubits: usize) -> Self {
        Self {
            max_qubits,
            matrices: 50,
            thetas: 50,
            seed: 0,
            xy_sign: XySign::Antisymmetric,
        }
    }
}

pub const TOLERANCE: f64 = 1e-12;

struct Tally {
    name: &'static str,
    n: Option<usize>,
    cases: usize,
    max_dev: f64,
    error: Option<String>,
}

impl Tally {
    fn new(name: &'static str, n: Option<usize>) -> Self {
        Self {
            name,
            n,
            cases: 0,
            max_dev: 0.0,
            error: None,
        }
    }

    fn record(&mut self, deviation: f64) {
        self.cases += 1;
        // NaN must fail, so no f64::max here
        if !(deviation <= self.max_dev) {
            self.max_dev = deviation;
        }
    }

    fn run(mut self, body: impl FnOnce(&mut Self) -> Result<()>) -> CheckResult {
        if let Err(e) = body(&mut self) {
            self.error = Some(e.to_string());
        }
        CheckResult {
            name: self.name.to_string(),
            n_qubits: self.n,
            cases: self.cases,
            max_deviation: self.max_dev,
            tolerance: TOLERANCE,
            passed: self.error.is_none() && self.max_dev <= TOLERANCE,
            error: self.error,
        }
    }
}

/// Runs every battery for `N = 2..=max_qubits`; the zero-amplitude
/// patterns run at `N = 4` when `max_qubits >= 4`.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    if !(2..=MAX_VALIDATION_QUBITS).contains(&cfg.max_qubits) {
        return Err(Error::InvalidArgument(format!(
            "max_qubits must be in 2..={MAX_VALIDATION_QUBITS}, got {}",
            cfg.max_qubits
        )));
    }
    let protocol = ProtocolConfig {
        xy_sign: cfg.xy_sign,
        ..ProtocolConfig::analytic()
    };
    let mut checks = Vec::new();
    for n in 2..=cfg.max_qubits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[n as u64, 0]));
        checks.push(Tally::new("single-excitation block", Some(n)).run(|t| {
            for _ in 0..cfg.matrices {
                let m = random_hermitian(n, &mut rng);
                let h = qubit_hamiltonian(&BlochMatrix::from_matrix(KVector::new(vec![0.0]), m.clone())?)?;
                let block = if n <= DENSE_VALIDATION_LIMIT {
                    dense_single_excitation_block(&h)?
                } else {
                    single_excitation_block(&h)
                };
                t.record(max_entry_deviation(&block, &m));
            }
            Ok(())
        }));

        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[n as u64, 1]));
        let cases: Vec<(StateVector, BlochMatrix)> = (0..cfg.thetas)
            .map(|_| {
                let theta = random_theta(n, &mut rng);
                Ok((run_circuit(&build_ansatz(n, &theta)?)?, random_bloch(n, &mut rng)))
            })
            .collect::<Result<_>>()?;

        let mut direct = Tally::new("direct correlators", Some(n));
        let mut product = Tally::new("product-rule correlators", Some(n));
        let mut rayleigh = Tally::new("cost = Rayleigh quotient", Some(n));
        let mut leakage = Tally::new("leakage", Some(n));
        let mut body = || -> Result<()> {
            for (state, bloch) in &cases {
                let a = state.single_excitation_amplitudes();
                let run = run_protocol(state, &protocol, 0)?;
                leakage.record(run.amplitudes.leakage);
                for ((j, l), c, prov) in run.correlators.iter() {
                    let dev = (c - 2.0 * a[j].conj() * a[l]).norm();
                    match prov {
                        Provenance::Direct => direct.record(dev),
                        Provenance::ProductRule => product.record(dev),
                        Provenance::Zero => {}
                    }
                }
                rayleigh.record((run.energy(bloch)? - rayleigh_quotient(bloch.entries(), &a)).abs());
            }
            Ok(())
        };
        let outcome = body();
        for t in [direct, product, rayleigh, leakage] {
            let e = outcome.as_ref().err().map(|e| e.to_string());
            checks.push(t.run(|_| match e {
                Some(e) => Err(Error::Validation(e)),
                None => Ok(()),
            }));
        }

        checks.push(Tally::new("antisymmetry (protocol)", Some(n)).run(|t| {
            for (state, _) in &cases {
                antisymmetry_protocol(state, &protocol, t)?;
            }
            Ok(())
        }));
        checks.push(Tally::new("antisymmetry (statevector)", Some(n)).run(|t| {
            for (state, _) in &cases {
                for j in 0..n {
                    for l in (j + 1)..n {
                        let xy = PauliString::sparse(n, &[(j, Pauli::X), (l, Pauli::Y)], 1.0);
                        let yx = PauliString::sparse(n, &[(j, Pauli::Y), (l, Pauli::X)], 1.0);
                        t.record((xy.expectation(state.amplitudes()) + yx.expectation(state.amplitudes())).norm());
                    }
                }
            }
            Ok(())
        }));
    }
    if cfg.max_qubits >= 4 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[4, 2]));
        checks.push(Tally::new("zero-amplitude patterns", Some(4)).run(|t| {
            for zeros in zero_patterns(4) {
                zero_pattern_case(4, &zeros, &protocol, &mut rng, t)?;
            }
            Ok(())
        }));
    }
    Ok(ValidationReport { checks })
}

/// Every non-empty proper subset of `0..n`, by size then lexicographically.
pub fn zero_patterns(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1..(1usize << n) - 1)
        .map(|mask| (0..n).filter(|q| mask >> q & 1 == 1).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Random amplitudes with exact zeros at `zeros`.
pub fn amplitudes_with_zeros<R: Rng>(n: usize, zeros: &[usize], rng: &mut R) -> Vec<C64> {
    let mut a: Vec<C64> = (0..n)
        .map(|q| {
            if zeros.contains(&q) {
                C64::new(0.0, 0.0)
            } else {
                C64::from_polar(rng.random_range(0.3..1.0), rng.random_range(-3.0..3.0))
            }
        })
        .collect();
    let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    a
}

fn zero_pattern_case<R: Rng>(
    n: usize,
    zeros: &[usize],
    protocol: &ProtocolConfig,
    rng: &mut R,
    t: &mut Tally,
) -> Result<()> {
    let target = amplitudes_with_zeros(n, zeros, rng);
    let theta = AnsatzParams::from_amplitudes(&target)?;
    let state = run_circuit(&build_ansatz(n, &theta)?)?;
    let bloch = random_bloch(n, rng);
    let run = run_protocol(&state, protocol, 0)?;
    if run.amplitudes.zero_set != zeros {
        return Err(Error::Validation(format!(
            "planted zeros {zeros:?} detected as {:?}",
            run.amplitudes.zero_set
        )));
    }
    let expected_settings = if n - zeros.len() >= 2 { 3 } else { 1 };
    if run.settings.len() != expected_settings {
        return Err(Error::Validation(format!(
            "{} settings for zeros {zeros:?}",
            run.settings.len()
        )));
    }
    // Rayleigh quotient on the reduced support
    let mut reduced = state.single_excitation_amplitudes();
    for &z in zeros {
        reduced[z] = C64::new(0.0, 0.0);
    }
    t.record((run.energy(&bloch)? - rayleigh_quotient(bloch.entries(), &reduced)).abs());
    Ok(())
}

/// Compares the protocol's `<X_j Y_l>` (imaginary part of direct
/// correlators) with a directly measured `<Y_j X_l>`: from the mirror
/// setting when `j` sits at an even compressed position, from the raw `XY`
/// readout when it sits at an odd one.
fn antisymmetry_protocol(state: &StateVector, protocol: &ProtocolConfig, t: &mut Tally) -> Result<()> {
    let n = state.n_qubits();
    let run = run_protocol(state, protocol, 0)?;
    let kept = compress(&run.amplitudes);
    if kept.m() < 2 {
        return Ok(());
    }
    let xy_raw = Readout::exact(&apply_circuit(
        state,
        &crate::protocol::build_setting(crate::protocol::SettingKind::XY, &kept, n)?,
    )?);
    let mirror = Readout::exact(&apply_circuit(state, &complementary_xy_setting(&kept.kept, n)?)?);
    for ((j, l), c, prov) in run.correlators.iter() {
        if prov != Provenance::Direct {
            continue;
        }
        let p = kept.position(j).expect("direct pairs are kept");
        let yx = if p % 2 == 0 {
            mirror.pair_parity(j, l)?
        } else {
            xy_raw.pair_parity(j, l)?
        };
        t.record((c.im + yx).abs());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_and_dense_blocks_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            let m = random_hermitian(n, &mut rng);
            let h = qubit_hamiltonian(&BlochMatrix::from_matrix(KVector::new(vec![0.0]), m).unwrap()).unwrap();
            let a = single_excitation_block(&h);
            let b = dense_single_excitation_block(&h).unwrap();
            assert!(max_entry_deviation(&a, &b) < 1e-14);
        }
    }

    #[test]
    fn patterns_for_four_qubits() {
        let p = zero_patterns(4);
        assert_eq!(p.len(), 14);
        assert_eq!(p.iter().filter(|z| z.len() == 1).count(), 4);
        assert_eq!(p.iter().filter(|z| z.len() == 2).count(), 6);
        assert_eq!(p.iter().filter(|z| z.len() == 3).count(), 4);
    }

    #[test]
    fn small_battery_passes() {
        let cfg = ValidationConfig {
            matrices: 5,
            thetas: 5,
            ..ValidationConfig::new(5)
        };
        let r = run_validation(&cfg).unwrap();
        assert!(r.passed(), "{}", r.table());
    }

    #[test]
    fn corrupted_sign_is_caught_by_antisymmetry() {
        let cfg = ValidationConfig {
            matrices: 2,
            thetas: 5,
            xy_sign: XySign::Corrupted,
            ..ValidationConfig::new(4)
        };
        let r = run_validation(&cfg).unwrap();
        assert!(r
            .failures()
            .any(|c| c.name == "antisymmetry (protocol)"));
    }

    #[test]
    fn range_is_enforced() {
        assert!(run_validation(&ValidationConfig::new(1)).is_err());
        assert!(run_validation(&ValidationConfig::new(15)).is_err());
    }
}
