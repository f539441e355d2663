//! Variational quantum deflation along a k-path.
//!
//! Level `n` at a k-point minimizes
//!
//! ```text
//! E(theta) + beta * sum_{i<n} |<a_i, a(theta)>|^2
//! ```
//!
//! where `E` is the three-setting protocol energy and the overlaps are
//! computed classically from amplitudes reconstructed out of the same three
//! settings, so no extra measurement setting is ever needed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optimizer::{optimize, wrap_angle, OptimizerConfig};
use crate::protocol::{run_protocol, Mode, ProtocolConfig, ProtocolRun};
use crate::seed;
use crate::simulator::{build_ansatz, run_circuit, AnsatzParams};
use crate::tbmodel::{bloch_matrix, exact_bands, BlochMatrix, KVector, TightBindingModel};
use crate::{Error, Result, C64};

/// Deflation penalty settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeflationConfig {
    /// Penalty weight in eV; `None` uses `beta_scale * default_beta` per
    /// k-point.
    pub beta: Option<f64>,
    pub beta_scale: f64,
    /// Number of levels to compute; `None` means all `N`.
    pub max_levels: Option<usize>,
}

/// With shot noise the restoring force against mixing in a lower level is
/// `beta - (E_n - E_0)` per unit weight, while the reported energy moves by
/// `E_n - E_0`; the bare Gershgorin bound leaves almost no margin when the
/// spectrum is symmetric, so the default doubles it.
pub const DEFAULT_BETA_SCALE: f64 = 2.0;

impl Default for DeflationConfig {
    fn default() -> Self {
        Self {
            beta: None,
            beta_scale: DEFAULT_BETA_SCALE,
            max_levels: None,
        }
    }
}

/// `2 (max_j sum_l |H_jl| + max_j |eps_j|)`, an upper bound on twice the
/// spectral range by Gershgorin's theorem.
pub fn default_beta(bloch: &BlochMatrix) -> f64 {
    let n = bloch.dim();
    let row = (0..n)
        .map(|j| (0..n).map(|l| bloch.get(j, l).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let eps = bloch.diagonal().iter().map(|e| e.abs()).fold(0.0, f64::max);
    2.0 * (row + eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Start each k-point from the previous k-point's optimum at the same
    /// level.
    pub warm_start: bool,
    /// Optimizations per `(k, level)`; the first is warm (or a small
    /// perturbation of 0), the others start from uniform random angles.
    pub restarts: usize,
    /// Half-width of the perturbation around 0 for cold starts.
    pub initial_spread: f64,
    /// Clip direct correlators in shot mode.
    pub clip: bool,
}

impl RunConfig {
    pub fn analytic(seed: u64) -> Self {
        Self {
            mode: Mode::Analytic,
            seed,
            optimizer: OptimizerConfig::default(),
            warm_start: true,
            restarts: 5,
            initial_spread: 0.1,
            clip: true,
        }
    }

    pub fn shots(shots: u64, seed: u64) -> Self {
        Self {
            mode: Mode::Shots(shots),
            seed,
            optimizer: OptimizerConfig {
                step_tolerance: 1e-3,
                objective_tolerance: 0.0,
                min_stencil: 0.4,
                stencil_moves: false,
                shrink: 0.5,
                ..OptimizerConfig::default()
            },
            warm_start: true,
            restarts: 3,
            initial_spread: 0.1,
            clip: true,
        }
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            clip: self.clip,
            ..ProtocolConfig::for_mode(self.mode)
        }
    }

    fn validate(&self) -> Result<()> {
        if let Mode::Shots(0) = self.mode {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        if self.optimizer.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// One penalized cost evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatedEvaluation {
    pub energy: f64,
    pub penalty: f64,
    pub run: ProtocolRun,
    /// Reconstructed amplitudes of the trial state.
    pub state: Vec<C64>,
}

impl DeflatedEvaluation {
    pub fn total(&self) -> f64 {
        self.energy + self.penalty
    }
}

/// `|<a, b>|^2`.
pub fn overlap_sqr(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

/// Protocol energy of `theta` plus `beta * sum_i |<prior_i, a(theta)>|^2`.
pub fn deflated_cost(
    theta: &AnsatzParams,
    bloch: &BlochMatrix,
    priors: &[Vec<C64>],
    beta: f64,
    protocol: &ProtocolConfig,
    seed: u64,
) -> Result<DeflatedEvaluation> {
    let n = bloch.dim();
    let state = run_circuit(&build_ansatz(n, theta)?)?;
    let run = run_protocol(&state, protocol, seed)?;
    let energy = run.energy(bloch)?;
    let reconstructed = run.state()?;
    let penalty = beta * priors.iter().map(|p| overlap_sqr(p, &reconstructed)).sum::<f64>();
    Ok(DeflatedEvaluation {
        energy,
        penalty,
        run,
        state: reconstructed,
    })
}

/// Outcome of one `(k, level)` minimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTelemetry {
    pub level: usize,
    /// Protocol energy at `theta`, NaN when failed.
    pub energy: f64,
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub cost_evals: usize,
    /// Seed of the evaluation that produced `energy`.
    pub seed: u64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPointResult {
    pub k_index: usize,
    pub k: Vec<f64>,
    pub path_distance: f64,
    pub label: Option<String>,
    /// Exact eigenvalues, ascending.
    pub exact: Vec<f64>,
    /// Per-level results sorted by ascending energy (failed levels last).
    pub bands: Vec<LevelTelemetry>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandStructureResult {
    pub n_orbitals: usize,
    pub levels: usize,
    pub points: Vec<KPointResult>,
}

impl BandStructureResult {
    pub fn failures(&self) -> usize {
        self.points
            .iter()
            .flat_map(|p| &p.bands)
            .filter(|b| b.failure.is_some())
            .count()
    }

    /// Largest `|E_vqd - E_exact|` over every successful `(k, band)`.
    pub fn max_abs_error(&self) -> f64 {
        self.errors().fold(0.0, f64::max)
    }

    /// `|E_vqd - E_exact|` per successful `(k, band)`.
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().flat_map(|p| {
            p.bands
                .iter()
                .enumerate()
                .filter(|(_, b)| b.failure.is_none())
                .map(|(n, b)| (b.energy - p.exact[n]).abs())
        })
    }

    pub fn total_cost_evals(&self) -> usize {
        self.points
            .iter()
            .flat_map(|p| &p.bands)
            .map(|b| b.cost_evals)
            .sum()
    }
}

const FINAL_EVAL: u64 = u64::MAX;

fn solve_level(
    bloch: &BlochMatrix,
    priors: &[Vec<C64>],
    beta: f64,
    warm: Option<&[f64]>,
    cfg: &RunConfig,
    k_index: usize,
    level: usize,
) -> Result<(LevelTelemetry, Vec<C64>)> {
    let n = bloch.dim();
    let protocol = cfg.protocol();
    let n_params = AnsatzParams::len_for(n);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut cost_evals = 0;

    for restart in 0..cfg.restarts {
        let attempt_seed = seed::derive(cfg.seed, &[k_index as u64, level as u64, restart as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        let start: Vec<f64> = match (restart, warm) {
            (0, Some(w)) => w.to_vec(),
            (0, None) => (0..n_params)
                .map(|_| rng.random_range(-cfg.initial_spread..=cfg.initial_spread))
                .collect(),
            _ => (0..n_params)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect(),
        };
        let mut counter = 0u64;
        let objective = |x: &[f64]| -> Result<f64> {
            counter += 1;
            let params = AnsatzParams::new(n, x.to_vec())?;
            let eval = deflated_cost(
                &params,
                bloch,
                priors,
                beta,
                &protocol,
                seed::derive(attempt_seed, &[counter]),
            )?;
            Ok(eval.total())
        };
        let r = optimize(objective, &start, &cfg.optimizer)?;
        iterations += r.iterations;
        cost_evals += r.evaluations;
        if best.as_ref().is_none_or(|(v, _)| r.value < *v) {
            best = Some((r.value, r.x));
        }
    }

    let (_, theta) = best.expect("at least one restart");
    let theta: Vec<f64> = theta.into_iter().map(wrap_angle).collect();
    let final_seed = seed::derive(cfg.seed, &[k_index as u64, level as u64, FINAL_EVAL]);
    let eval = deflated_cost(
        &AnsatzParams::new(n, theta.clone())?,
        bloch,
        priors,
        beta,
        &protocol,
        final_seed,
    )?;
    cost_evals += 1;
    Ok((
        LevelTelemetry {
            level,
            energy: eval.energy,
            theta,
            iterations,
            cost_evals,
            seed: final_seed,
            failure: None,
        },
        eval.state,
    ))
}

fn solve_kpoint(
    model: &TightBindingModel,
    k: &KVector,
    k_index: usize,
    levels: usize,
    warm: Option<&[LevelTelemetry]>,
    cfg: &RunConfig,
    dcfg: &DeflationConfig,
) -> Result<KPointResult> {
    let bloch = bloch_matrix(model, k)?;
    let exact = exact_bands(&bloch)?;
    let beta = dcfg.beta.unwrap_or_else(|| dcfg.beta_scale * default_beta(&bloch));
    let mut priors: Vec<Vec<C64>> = Vec::with_capacity(levels);
    let mut bands = Vec::with_capacity(levels);
    for level in 0..levels {
        let warm_theta = warm
            .and_then(|w| w.iter().find(|t| t.level == level))
            .filter(|t| t.failure.is_none())
            .map(|t| t.theta.as_slice());
        match solve_level(&bloch, &priors, beta, warm_theta, cfg, k_index, level) {
            Ok((telemetry, state)) => {
                priors.push(state);
                bands.push(telemetry);
            }
            Err(e) => bands.push(LevelTelemetry {
                level,
                energy: f64::NAN,
                theta: Vec::new(),
                iterations: 0,
                cost_evals: 0,
                seed: 0,
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(KPointResult {
        k_index,
        k: k.components.clone(),
        path_distance: k.path_distance,
        label: k.label.clone(),
        exact,
        bands,
        beta,
    })
}

fn sort_bands(bands: &mut [LevelTelemetry]) {
    bands.sort_by(|a, b| match (a.failure.is_some(), b.failure.is_some()) {
        (false, false) => a.energy.total_cmp(&b.energy),
        (x, y) => x.cmp(&y),
    });
}

/// Runs deflation for every level at every k-point. With warm start the
/// path is walked in order; otherwise k-points run in parallel. Failed
/// `(k, level)` entries are recorded and the sweep continues.
pub fn band_sweep(
    model: &TightBindingModel,
    path: &[KVector],
    cfg: &RunConfig,
    dcfg: &DeflationConfig,
) -> Result<BandStructureResult> {
    cfg.validate()?;
    let n = model.n_orbitals();
    let levels = dcfg.max_levels.unwrap_or(n);
    if levels == 0 || levels > n {
        return Err(Error::InvalidArgument(format!(
            "max_levels must be in 1..={n}, got {levels}"
        )));
    }
    if let Some(beta) = dcfg.beta {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
    }
    if !(dcfg.beta_scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta_scale must be positive, got {}",
            dcfg.beta_scale
        )));
    }

    let points = if cfg.warm_start {
        let mut out: Vec<KPointResult> = Vec::with_capacity(path.len());
        let mut previous: Option<Vec<LevelTelemetry>> = None;
        for (i, k) in path.iter().enumerate() {
            let r = solve_kpoint(model, k, i, levels, previous.as_deref(), cfg, dcfg)?;
            previous = Some(r.bands.clone());
            out.push(r);
        }
        out
    } else {
        path.par_iter()
            .enumerate()
            .map(|(i, k)| solve_kpoint(model, k, i, levels, None, cfg, dcfg))
            .collect::<Result<Vec<_>>>()?
    };
    let points = points
        .into_iter()
        .map(|mut p| {
            sort_bands(&mut p.bands);
            p
        })
        .collect();
    Ok(BandStructureResult {
        n_orbitals: n,
        levels,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn pauli_x_bloch() -> BlochMatrix {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        BlochMatrix::from_matrix(KVector::new(vec![0.0]), m).unwrap()
    }

    #[test]
    fn ground_level_has_no_penalty() {
        let b = pauli_x_bloch();
        let theta = AnsatzParams::new(2, vec![0.7, 0.2]).unwrap();
        let e = deflated_cost(&theta, &b, &[], 10.0, &ProtocolConfig::analytic(), 0).unwrap();
        assert_eq!(e.penalty, 0.0);
        assert_eq!(e.total(), e.energy);
    }

    #[test]
    fn orthogonal_prior_adds_nothing_and_identical_prior_adds_beta() {
        let b = pauli_x_bloch();
        let theta = AnsatzParams::new(2, vec![std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        let plus = vec![C64::new(0.5f64.sqrt(), 0.0); 2];
        let minus = vec![C64::new(0.5f64.sqrt(), 0.0), C64::new(-(0.5f64.sqrt()), 0.0)];
        let cfg = ProtocolConfig::analytic();
        let e = deflated_cost(&theta, &b, &[minus], 3.0, &cfg, 0).unwrap();
        assert!(e.penalty.abs() < 1e-12);
        let e = deflated_cost(&theta, &b, &[plus], 3.0, &cfg, 0).unwrap();
        assert!((e.penalty - 3.0).abs() < 1e-10);
    }

    #[test]
    fn beta_bounds_twice_the_spectral_radius() {
        let b = pauli_x_bloch();
        assert_eq!(default_beta(&b), 2.0);
    }

    #[test]
    fn two_level_ground_state() {
        let b = pauli_x_bloch();
        let cfg = RunConfig::analytic(1);
        let protocol = cfg.protocol();
        let r = optimize(
            |x| {
                let p = AnsatzParams::new(2, x.to_vec())?;
                deflated_cost(&p, &b, &[], 1.0, &protocol, 0).map(|e| e.total())
            },
            &[0.1, 0.05],
            &cfg.optimizer,
        )
        .unwrap();
        assert!((r.value + 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn sort_places_failures_last() {
        let t = |e: f64, fail: bool| LevelTelemetry {
            level: 0,
            energy: e,
            theta: vec![],
            iterations: 0,
            cost_evals: 0,
            seed: 0,
            failure: fail.then(|| "x".to_string()),
        };
        let mut v = vec![t(1.0, false), t(f64::NAN, true), t(-1.0, false)];
        sort_bands(&mut v);
        assert_eq!(v[0].energy, -1.0);
        assert_eq!(v[1].energy, 1.0);
        assert!(v[2].failure.is_some());
    }
}
