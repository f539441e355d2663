//! Derivative-free trust-region minimizer.
//!
//! Each iteration fits a full quadratic model `m(s) = f + g.s + s'Hs/2` from
//! a stencil of `1 + 2n + n(n-1)/2` function values spaced at the current
//! trust radius (central differences for `g` and `diag H`, one corner per
//! pair for the cross terms), minimizes it inside the trust region with an
//! eigen-decomposition based subproblem solver and updates the radius from
//! the ratio of actual to predicted decrease. The best stencil point is
//! also a move candidate, which keeps progress going on noisy objectives.
//!
//! The center is re-evaluated every iteration so a single lucky draw of a
//! shot-noise objective does not freeze the iterate. For noisy objectives
//! `min_stencil` keeps the stencil wide enough that finite differences
//! resolve curvature above the noise, and `stencil_moves = false` restricts
//! moves to the model step, which averages over the whole stencil instead
//! of chasing the luckiest single draw.
//!
//! Angles are unconstrained and reported wrapped into `[-pi, pi)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Upper bound on trust-region iterations.
    pub max_iterations: usize,
    /// Stop once the trust radius falls below this.
    pub step_tolerance: f64,
    /// Stop after two consecutive accepted steps improving by less than this.
    pub objective_tolerance: f64,
    pub initial_radius: f64,
    pub max_radius: f64,
    /// Lower bound on the stencil spacing.
    pub min_stencil: f64,
    /// Allow jumping to the best stencil point.
    pub stencil_moves: bool,
    /// Radius factor after a poor step.
    pub shrink: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            step_tolerance: 1e-7,
            objective_tolerance: 1e-13,
            initial_radius: 0.5,
            max_radius: PI,
            min_stencil: 0.0,
            stencil_moves: true,
            shrink: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    /// Objective at `x` as last evaluated.
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                value: v,
                point: x.to_vec(),
            });
        }
        Ok(v)
    }
}

/// Minimizes `objective` from `x0`.
pub fn optimize<F>(objective: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if x0.is_empty() {
        return Err(Error::InvalidArgument("empty parameter vector".into()));
    }
    if cfg.max_iterations == 0 || cfg.initial_radius <= 0.0 || !(cfg.shrink > 0.0 && cfg.shrink < 1.0) {
        return Err(Error::InvalidArgument(
            "optimizer needs max_iterations >= 1, a positive initial radius and shrink in (0, 1)".into(),
        ));
    }
    let n = x0.len();
    let mut obj = Counted {
        f: objective,
        evaluations: 0,
    };
    let mut x: Vec<f64> = x0.iter().map(|&v| wrap_angle(v)).collect();
    let mut fx = obj.eval(&x)?;
    let mut radius = cfg.initial_radius.min(cfg.max_radius);
    let mut quiet_steps = 0;
    let mut iterations = 0;

    while iterations < cfg.max_iterations && radius >= cfg.step_tolerance {
        iterations += 1;
        if iterations > 1 {
            fx = obj.eval(&x)?;
        }
        let h = radius.min(1.0).max(cfg.min_stencil);
        let mut best: (Vec<f64>, f64) = (x.clone(), fx);
        let moves = cfg.stencil_moves;
        let consider = |p: Vec<f64>, v: f64, best: &mut (Vec<f64>, f64)| {
            if moves && v < best.1 {
                *best = (p, v);
            }
        };

        let shifted = |x: &[f64], moves: &[(usize, f64)]| {
            let mut p = x.to_vec();
            for &(i, d) in moves {
                p[i] += d;
            }
            p
        };
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        for i in 0..n {
            let p = shifted(&x, &[(i, h)]);
            plus[i] = obj.eval(&p)?;
            consider(p, plus[i], &mut best);
            let p = shifted(&x, &[(i, -h)]);
            minus[i] = obj.eval(&p)?;
            consider(p, minus[i], &mut best);
        }
        let g = DVector::from_fn(n, |i, _| (plus[i] - minus[i]) / (2.0 * h));
        let mut hess = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (plus[i] + minus[i] - 2.0 * fx) / (h * h)
            } else {
                0.0
            }
        });
        for i in 0..n {
            for j in (i + 1)..n {
                let p = shifted(&x, &[(i, h), (j, h)]);
                let v = obj.eval(&p)?;
                consider(p, v, &mut best);
                let hij = (v - plus[i] - plus[j] + fx) / (h * h);
                hess[(i, j)] = hij;
                hess[(j, i)] = hij;
            }
        }

        let step = trust_region_step(&g, &hess, radius);
        let predicted = -(g.dot(&step) + 0.5 * step.dot(&(&hess * &step)));
        let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let f_candidate = obj.eval(&candidate)?;
        let rho = if predicted > 0.0 {
            (fx - f_candidate) / predicted
        } else {
            -1.0
        };
        if f_candidate < best.1 {
            best = (candidate, f_candidate);
        }

        let improvement = fx - best.1;
        if improvement > 0.0 {
            x = best.0.iter().map(|&v| wrap_angle(v)).collect();
            fx = best.1;
            if improvement < cfg.objective_tolerance {
                quiet_steps += 1;
                if quiet_steps >= 2 {
                    break;
                }
            } else {
                quiet_steps = 0;
            }
        }

        let step_norm = step.norm();
        if rho >= 0.75 && step_norm >= 0.9 * radius {
            radius = (2.0 * radius).min(cfg.max_radius);
        } else if rho < 0.25 {
            radius *= cfg.shrink;
        }
    }
    Ok(OptimizeResult {
        x,
        value: fx,
        iterations,
        evaluations: obj.evaluations,
    })
}

/// Approximate minimizer of `g.s + s'Hs/2` subject to `|s| <= radius`.
fn trust_region_step(g: &DVector<f64>, hess: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    let n = g.len();
    let eig = SymmetricEigen::new(hess.clone());
    let q = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let gt = q.transpose() * g;
    let step_for = |shift: f64| -> DVector<f64> {
        let coeffs = DVector::from_fn(n, |i, _| {
            let d = lam[i] + shift;
            if d.abs() < 1e-300 {
                0.0
            } else {
                -gt[i] / d
            }
        });
        q * coeffs
    };

    let lam_min = lam.iter().copied().fold(f64::INFINITY, f64::min);
    if lam_min > 0.0 {
        let s = step_for(0.0);
        if s.norm() <= radius {
            return s;
        }
    }
    let lo0 = (-lam_min).max(0.0);
    let scale = lam.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    let mut lo = lo0 + 1e-12 * scale;
    let at_lo = step_for(lo);
    if at_lo.norm() < radius {
        // hard case: move along the lowest curvature direction to the boundary
        let i_min = (0..n).min_by(|&a, &b| lam[a].total_cmp(&lam[b])).unwrap();
        let dir = q.column(i_min).into_owned();
        let along = at_lo.dot(&dir);
        let rest = at_lo.norm_squared() - along * along;
        let tau = (radius * radius - rest).max(0.0).sqrt();
        let s1 = &at_lo + &dir * (tau - along);
        let s2 = &at_lo - &dir * (tau + along);
        let model = |s: &DVector<f64>| g.dot(s) + 0.5 * s.dot(&(hess * s));
        return if model(&s1) <= model(&s2) { s1 } else { s2 };
    }
    let mut hi = lo0 + g.norm() / radius + scale + 1.0;
    while step_for(hi).norm() > radius {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if step_for(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    step_for(hi)
}
