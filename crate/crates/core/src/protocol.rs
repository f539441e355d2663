//! The three-setting measurement protocol.
//!
//! For a single-excitation trial state `|psi> = sum_j a_j |e_j>` the cost
//!
//! ```text
//! E = sum_j eps_j |a_j|^2 + sum_{j<l} Re{ C_jl H_jl(k) },
//! C_jl = <X_j X_l> + i <X_j Y_l> = 2 conj(a_j) a_l
//! ```
//!
//! is estimated from three settings whatever the register size:
//!
//! * `Z`: computational basis, gives `|a_j|^2` and the zero set;
//! * `XX`: Hadamard on every kept qubit, gives every `<X_j X_l>`;
//! * `XY`: along the compressed index set, Hadamard at even positions and
//!   `S^dagger H` at odd positions, gives `<X_j Y_l>` for pairs of opposite
//!   parity (read as `-<Y_j X_l>` when the first position is odd).
//!
//! Same-parity correlators follow from the product rule
//! `C_jl = C_jk C_kl / (2 |a_k|^2)` with `k` of the opposite parity.

use std::collections::BTreeMap;

use crate::seed;
use crate::simulator::{run_circuit, sample, Circuit, Gate, Readout, StateVector};
use crate::tbmodel::BlochMatrix;
use crate::{Error, Result, C64};

/// How outcome frequencies are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact probabilities, the infinite-shot limit.
    Analytic,
    /// This many shots per setting.
    Shots(u64),
}

impl Mode {
    /// Shots per setting, `None` when analytic.
    pub fn shots(self) -> Option<u64> {
        match self {
            Mode::Analytic => None,
            Mode::Shots(s) => Some(s),
        }
    }
}

/// How the `XY` readout is turned into `<X_j Y_l>` for pairs whose first
/// compressed position is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XySign {
    /// `<X_j Y_l> = -<Y_j X_l>` on single-excitation states.
    #[default]
    Antisymmetric,
    /// Skips the sign flip. Exists only as a mutation fixture for the
    /// validation battery; never produces correct energies.
    Corrupted,
}

pub const DEFAULT_SHOT_ZERO_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_ANALYTIC_ZERO_THRESHOLD: f64 = 1e-28;
pub const DEFAULT_LEAKAGE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub mode: Mode,
    /// An index joins the zero set when its count is 0 or its estimated
    /// `|a_j|^2` is below `zero_threshold / N`.
    pub zero_threshold: f64,
    /// Runs abort when the weight outside the single-excitation sector
    /// exceeds this.
    pub leakage_limit: f64,
    /// Clip product-rule inputs to `2 |a_j| |a_l|` in shot mode.
    pub clip: bool,
    pub xy_sign: XySign,
}

impl ProtocolConfig {
    pub fn analytic() -> Self {
        Self {
            mode: Mode::Analytic,
            zero_threshold: DEFAULT_ANALYTIC_ZERO_THRESHOLD,
            leakage_limit: DEFAULT_LEAKAGE_LIMIT,
            clip: true,
            xy_sign: XySign::Antisymmetric,
        }
    }

    pub fn shots(shots: u64) -> Self {
        Self {
            mode: Mode::Shots(shots),
            zero_threshold: DEFAULT_SHOT_ZERO_THRESHOLD,
            ..Self::analytic()
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Analytic => Self::analytic(),
            Mode::Shots(s) => Self::shots(s),
        }
    }

    fn readout(&self, state: &StateVector, seed: u64) -> Result<Readout> {
        match self.mode {
            Mode::Analytic => Ok(Readout::exact(state)),
            Mode::Shots(shots) => Ok(Readout::from_counts(&sample(state, shots, seed)?)),
        }
    }
}

/// `|a_j|^2` and the zero set from the `Z` setting.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEstimate {
    pub probabilities: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Ascending indices treated as zero amplitudes.
    pub zero_set: Vec<usize>,
    /// Frequency of outcomes with Hamming weight other than 1.
    pub leakage: f64,
    pub shots_used: Option<u64>,
}

impl AmplitudeEstimate {
    pub fn from_readout(z: &Readout, zero_threshold: f64) -> Self {
        let n = z.n_qubits();
        let mut probabilities = vec![0.0; n];
        let mut leakage = 0.0;
        for &(index, f) in z.entries() {
            if index.count_ones() == 1 {
                let j = n - 1 - index.trailing_zeros() as usize;
                probabilities[j] += f;
            } else {
                leakage += f;
            }
        }
        let cutoff = zero_threshold / n as f64;
        let zero_set = probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == 0.0 || p < cutoff)
            .map(|(j, _)| j)
            .collect();
        Self {
            magnitudes: probabilities.iter().map(|p| p.sqrt()).collect(),
            probabilities,
            zero_set,
            leakage,
            shots_used: z.shots(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_zero(&self, j: usize) -> bool {
        self.zero_set.binary_search(&j).is_ok()
    }
}

/// Runs the `Z` setting on the output of `trial`.
pub fn measure_z(trial: &Circuit, cfg: &ProtocolConfig, seed: u64) -> Result<AmplitudeEstimate> {
    let state = run_circuit(trial)?;
    let z = cfg.readout(&state, seed)?;
    Ok(AmplitudeEstimate::from_readout(&z, cfg.zero_threshold))
}

/// Nonzero-amplitude qubits `s_0 < ... < s_{m-1}`; the position of a qubit
/// in this list decides its `XY` rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedIndexSet {
    pub kept: Vec<usize>,
}

impl CompressedIndexSet {
    pub fn m(&self) -> usize {
        self.kept.len()
    }

    pub fn position(&self, j: usize) -> Option<usize> {
        self.kept.binary_search(&j).ok()
    }
}

pub fn compress(amps: &AmplitudeEstimate) -> CompressedIndexSet {
    CompressedIndexSet {
        kept: (0..amps.n_qubits()).filter(|&j| !amps.is_zero(j)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SettingKind {
    Z,
    XX,
    XY,
}

impl SettingKind {
    pub fn name(self) -> &'static str {
        match self {
            SettingKind::Z => "Z",
            SettingKind::XX => "XX",
            SettingKind::XY => "XY",
        }
    }
}

/// Basis-rotation circuit appended before readout. Qubits outside `kept`
/// get no gate.
pub fn build_setting(kind: SettingKind, kept: &CompressedIndexSet, n_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    match kind {
        SettingKind::Z => {}
        SettingKind::XX => {
            for &q in &kept.kept {
                c.push(Gate::Hadamard(q))?;
            }
        }
        SettingKind::XY => {
            for (p, &q) in kept.kept.iter().enumerate() {
                c.push(if p % 2 == 0 { Gate::Hadamard(q) } else { Gate::SdgH(q) })?;
            }
        }
    }
    Ok(c)
}

/// Two-qubit parity `<P_j Q_l>` of a rotated-basis histogram.
pub fn estimate_pair_parity(counts: &crate::simulator::ShotCounts, j: usize, l: usize) -> Result<f64> {
    Readout::from_counts(counts).pair_parity(j, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    ProductRule,
    Zero,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Direct => "direct",
            Provenance::ProductRule => "product_rule",
            Provenance::Zero => "zero",
        }
    }
}

/// Pauli correlators `C_jl` for `j < l`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelatorSet {
    values: BTreeMap<(usize, usize), (C64, Provenance)>,
    /// Clipped copies of direct correlators, used only as product-rule
    /// inputs.
    product_inputs: BTreeMap<(usize, usize), C64>,
    /// Direct correlators whose estimate exceeded `2 |a_j| |a_l|`.
    pub clipped: usize,
}

impl CorrelatorSet {
    /// `C_jl`, using `C_lj = conj(C_jl)` for `j > l`.
    pub fn get(&self, j: usize, l: usize) -> Option<C64> {
        if j < l {
            self.values.get(&(j, l)).map(|v| v.0)
        } else {
            self.values.get(&(l, j)).map(|v| v.0.conj())
        }
    }

    /// `C_jl` as it enters the product rule: the clipped copy when one
    /// exists, the stored value otherwise.
    pub fn product_input(&self, j: usize, l: usize) -> Option<C64> {
        let clipped = if j < l {
            self.product_inputs.get(&(j, l)).copied()
        } else {
            self.product_inputs.get(&(l, j)).map(|c| c.conj())
        };
        clipped.or_else(|| self.get(j, l))
    }

    pub fn provenance(&self, j: usize, l: usize) -> Option<Provenance> {
        self.values.get(&(j.min(l), j.max(l))).map(|v| v.1)
    }

    pub fn insert(&mut self, j: usize, l: usize, value: C64, provenance: Provenance) {
        if j < l {
            self.values.insert((j, l), (value, provenance));
        } else {
            self.values.insert((l, j), (value.conj(), provenance));
        }
    }

    /// `((j, l), C_jl, provenance)` over stored pairs, `j < l`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), C64, Provenance)> + '_ {
        self.values.iter().map(|(&k, &(v, p))| (k, v, p))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `<X_j Y_l>` for compressed positions `p < q` of opposite parity.
fn xy_expectation(xy: &Readout, kept: &CompressedIndexSet, p: usize, q: usize, sign: XySign) -> Result<f64> {
    let measured = xy.pair_parity(kept.kept[p], kept.kept[q])?;
    // position p even: qubit s_p is read in X, s_q in Y
    Ok(match (p % 2 == 0, sign) {
        (true, _) | (false, XySign::Corrupted) => measured,
        (false, XySign::Antisymmetric) => -measured,
    })
}

/// Fills opposite-parity pairs from the `XX` and `XY` readouts and marks
/// every pair touching the zero set. Same-parity pairs stay unfilled.
///
/// With clipping on, an estimate above `2 |a_j| |a_l|` is kept as measured
/// for the cost function, and a copy shrunk onto the bound is what the
/// product rule consumes. Clipping the cost-function values too would bias
/// every `|C|` low: on single-excitation states the bound is attained
/// exactly, so about half of all estimates exceed it.
pub fn correlators_direct(
    amps: &AmplitudeEstimate,
    xx: &Readout,
    xy: &Readout,
    kept: &CompressedIndexSet,
    cfg: &ProtocolConfig,
) -> Result<CorrelatorSet> {
    let n = amps.n_qubits();
    for r in [xx, xy] {
        if r.n_qubits() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.n_qubits(),
            });
        }
    }
    let clip = cfg.clip && matches!(cfg.mode, Mode::Shots(_));
    let mut set = CorrelatorSet::default();
    for j in 0..n {
        for l in (j + 1)..n {
            let (p, q) = match (kept.position(j), kept.position(l)) {
                (Some(p), Some(q)) => (p, q),
                _ => {
                    set.insert(j, l, C64::new(0.0, 0.0), Provenance::Zero);
                    continue;
                }
            };
            if (p + q) % 2 == 0 {
                continue;
            }
            let c = C64::new(xx.pair_parity(j, l)?, xy_expectation(xy, kept, p, q, cfg.xy_sign)?);
            if clip {
                let bound = 2.0 * amps.magnitudes[j] * amps.magnitudes[l];
                let norm = c.norm();
                if norm > bound {
                    set.product_inputs.insert((j, l), c * (bound / norm));
                    set.clipped += 1;
                }
            }
            set.insert(j, l, c, Provenance::Direct);
        }
    }
    Ok(set)
}

/// Reconstructs the same-parity correlator `C_jl` through the
/// opposite-parity intermediate `k` with the largest `|a_k|^2`, stores it
/// and returns it.
pub fn product_rule(
    cset: &mut CorrelatorSet,
    amps: &AmplitudeEstimate,
    kept: &CompressedIndexSet,
    j: usize,
    l: usize,
) -> Result<C64> {
    let (p, q) = match (kept.position(j), kept.position(l)) {
        (Some(p), Some(q)) if p != q => (p, q),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "product rule needs two distinct kept qubits, got ({j}, {l})"
            )))
        }
    };
    if (p + q) % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "qubits {j} and {l} sit at compressed positions of different parity"
        )));
    }
    let k = kept
        .kept
        .iter()
        .enumerate()
        .filter(|(r, _)| r % 2 != p % 2)
        .map(|(_, &k)| k)
        .filter(|&k| amps.probabilities[k] > 0.0)
        // max |a_k|^2, lowest index on ties
        .fold(None::<usize>, |best, k| match best {
            Some(b) if amps.probabilities[b] >= amps.probabilities[k] => Some(b),
            _ => Some(k),
        })
        .ok_or_else(|| {
            Error::Missing(format!("no intermediate qubit of opposite parity for ({j}, {l})"))
        })?;
    let cjk = cset
        .product_input(j, k)
        .ok_or_else(|| Error::Missing(format!("correlator C_{j}{k} not filled")))?;
    let ckl = cset
        .product_input(k, l)
        .ok_or_else(|| Error::Missing(format!("correlator C_{k}{l} not filled")))?;
    let value = cjk * ckl / (2.0 * amps.probabilities[k]);
    cset.insert(j, l, value, Provenance::ProductRule);
    Ok(value)
}

/// Applies [`product_rule`] to every unfilled same-parity pair.
pub fn fill_product_rule(
    cset: &mut CorrelatorSet,
    amps: &AmplitudeEstimate,
    kept: &CompressedIndexSet,
) -> Result<()> {
    for (p, &j) in kept.kept.iter().enumerate() {
        for &l in kept.kept.iter().skip(p + 2).step_by(2) {
            product_rule(cset, amps, kept, j, l)?;
        }
    }
    Ok(())
}

/// `sum_j eps_j |a_j|^2 + sum_{j<l} Re{C_jl H_jl}` with `eps_j = H_jj`.
pub fn cost_function(bloch: &BlochMatrix, amps: &AmplitudeEstimate, cset: &CorrelatorSet) -> Result<f64> {
    let n = bloch.dim();
    if amps.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: amps.n_qubits(),
        });
    }
    let mut e: f64 = bloch
        .diagonal()
        .iter()
        .zip(&amps.probabilities)
        .map(|(eps, p)| eps * p)
        .sum();
    for j in 0..n {
        for l in (j + 1)..n {
            let c = cset
                .get(j, l)
                .ok_or_else(|| Error::Missing(format!("correlator C_{j}{l} not filled")))?;
            e += (c * bloch.get(j, l)).re;
        }
    }
    Ok(e)
}

/// Amplitudes up to a global phase: the largest amplitude is taken real
/// and every other phase is read off `arg C_rl`.
pub fn reconstruct_state(amps: &AmplitudeEstimate, cset: &CorrelatorSet) -> Result<Vec<C64>> {
    let n = amps.n_qubits();
    let r = (0..n)
        .filter(|&j| !amps.is_zero(j))
        .fold(None::<usize>, |best, j| match best {
            Some(b) if amps.magnitudes[b] >= amps.magnitudes[j] => Some(b),
            _ => Some(j),
        })
        .ok_or_else(|| Error::Missing("every amplitude is zero".into()))?;
    (0..n)
        .map(|l| {
            if amps.is_zero(l) {
                Ok(C64::new(0.0, 0.0))
            } else if l == r {
                Ok(C64::new(amps.magnitudes[r], 0.0))
            } else {
                let c = cset
                    .get(r, l)
                    .ok_or_else(|| Error::Missing(format!("correlator C_{r}{l} not filled")))?;
                Ok(C64::from_polar(amps.magnitudes[l], c.arg()))
            }
        })
        .collect()
}

/// Everything one cost evaluation measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub amplitudes: AmplitudeEstimate,
    pub compressed: CompressedIndexSet,
    pub correlators: CorrelatorSet,
    /// Settings actually executed, in order.
    pub settings: Vec<SettingKind>,
}

impl ProtocolRun {
    pub fn energy(&self, bloch: &BlochMatrix) -> Result<f64> {
        cost_function(bloch, &self.amplitudes, &self.correlators)
    }

    pub fn state(&self) -> Result<Vec<C64>> {
        reconstruct_state(&self.amplitudes, &self.correlators)
    }

    /// Circuit executions spent, `settings x shots` (0 in analytic mode).
    pub fn executions(&self) -> u64 {
        self.amplitudes.shots_used.unwrap_or(0) * self.settings.len() as u64
    }
}

/// Measures a prepared trial state with the `Z`, `XX` and `XY` settings and
/// completes the correlator set. The `XX` and `XY` settings are skipped
/// when fewer than two amplitudes survive, since no correlator is needed.
pub fn run_protocol(state: &StateVector, cfg: &ProtocolConfig, seed: u64) -> Result<ProtocolRun> {
    let n = state.n_qubits();
    let z = cfg.readout(state, seed::derive(seed, &[0]))?;
    let amplitudes = AmplitudeEstimate::from_readout(&z, cfg.zero_threshold);
    if amplitudes.leakage > cfg.leakage_limit {
        return Err(Error::Leakage {
            leakage: amplitudes.leakage,
            limit: cfg.leakage_limit,
        });
    }
    let compressed = compress(&amplitudes);
    let mut settings = vec![SettingKind::Z];

    let mut correlators = if compressed.m() >= 2 {
        let xx_state = crate::simulator::apply_circuit(state, &build_setting(SettingKind::XX, &compressed, n)?)?;
        let xy_state = crate::simulator::apply_circuit(state, &build_setting(SettingKind::XY, &compressed, n)?)?;
        let xx = cfg.readout(&xx_state, seed::derive(seed, &[1]))?;
        let xy = cfg.readout(&xy_state, seed::derive(seed, &[2]))?;
        settings.extend([SettingKind::XX, SettingKind::XY]);
        correlators_direct(&amplitudes, &xx, &xy, &compressed, cfg)?
    } else {
        let mut set = CorrelatorSet::default();
        for j in 0..n {
            for l in (j + 1)..n {
                set.insert(j, l, C64::new(0.0, 0.0), Provenance::Zero);
            }
        }
        set
    };
    fill_product_rule(&mut correlators, &amplitudes, &compressed)?;
    Ok(ProtocolRun {
        amplitudes,
        compressed,
        correlators,
        settings,
    })
}
