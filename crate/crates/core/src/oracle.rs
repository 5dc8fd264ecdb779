//! Reference Nash equilibria.
//!
//! The primary solver is a synchronous full-information projected gradient
//! iteration on the variational inequality. A brute-force best-response
//! search on a grid cross-checks it on small games.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nalgebra::DVector;

use crate::game::{CostModel, GameError, GameSpec};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: u64 = 1_000_000;
const REGULARITY_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("no convergence after {max_iters} iterations (residual {residual:e})")]
    NoConvergence { max_iters: u64, residual: f64 },
    #[error("best-response dynamics cycle with period {period}")]
    CycleDetected { period: usize },
    #[error("grid search supports at most 4 players, got {0}")]
    TooManyPlayers(usize),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
    #[error("oracle cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    ProjectedGradient,
    BestResponseGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub x_star: Vec<f64>,
    pub method: OracleMethod,
    /// Fixed-point residual at unit step, see [`vi_residual`].
    pub residual: f64,
    pub iterations: u64,
}

/// `max_i |x_i − T_{Ω_i}(x_i − ∂J_i/∂x_i(x))|`. Zero exactly at Nash
/// equilibria of games with convex costs.
pub fn vi_residual(spec: &GameSpec, x: &[f64]) -> Result<f64, OracleError> {
    let f = spec.pseudo_gradient(x)?;
    Ok(residual_from(spec, x, &f, 1.0))
}

fn residual_from(spec: &GameSpec, x: &[f64], f: &[f64], eta: f64) -> f64 {
    spec.actions()
        .iter()
        .zip(x.iter().zip(f))
        .map(|(a, (&xi, &fi))| (xi - a.project(xi - eta * fi)).abs())
        .fold(0.0, f64::max)
}

/// Options for [`solve_projected_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedGradientOptions {
    /// Step size; defaults to `1/ρ` for quadratic games and 1 otherwise.
    pub eta: Option<f64>,
    pub tol: f64,
    pub max_iters: u64,
    /// Starting point; defaults to the midpoint of `Ω`.
    pub start: Option<Vec<f64>>,
}

impl Default for ProjectedGradientOptions {
    fn default() -> Self {
        Self {
            eta: None,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            start: None,
        }
    }
}

/// `x ← T_Ω(x − η F(x))` until the unit-step residual drops below `tol`.
///
/// The step is halved whenever moves grow, or stay the same length while
/// reversing direction, so an optimistic `η` cannot make the iteration
/// diverge or cycle. Congestion costs use the capped gradient, so iterates
/// may pass through over-capacity points.
pub fn solve_projected_gradient(spec: &GameSpec, opts: &ProjectedGradientOptions) -> Result<OracleResult, OracleError> {
    let mut eta = match opts.eta {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(OracleError::InvalidInput(format!("step size {e}"))),
        None => {
            // Sampled Lipschitz constants blow up near congestion
            // singularities, so only the exact one is used.
            let reg = spec.estimate_regularity(REGULARITY_SAMPLES, 0)?;
            if reg.exact && reg.rho > 0.0 {
                1.0 / reg.rho
            } else {
                1.0
            }
        }
    };
    let mut x = match &opts.start {
        Some(s) if s.len() == spec.n() => s.clone(),
        Some(s) => {
            return Err(OracleError::InvalidInput(format!("start has {} entries", s.len())));
        }
        None => spec.actions().iter().map(|a| a.midpoint()).collect(),
    };
    spec.project(&mut x);
    let mut prev_step: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iters {
        let f = spec.pseudo_gradient_capped(&x)?;
        residual = residual_from(spec, &x, &f, 1.0);
        if residual <= opts.tol {
            return Ok(OracleResult {
                x_star: x,
                method: OracleMethod::ProjectedGradient,
                residual,
                iterations: it,
            });
        }
        let step: Vec<f64> = spec
            .actions()
            .iter()
            .zip(x.iter().zip(&f))
            .map(|(a, (&xi, &fi))| a.project(xi - eta * fi) - xi)
            .collect();
        if let Some(prev) = &prev_step {
            let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let (moved, before) = (norm(&step), norm(prev));
            let reversed = step.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() < 0.0;
            // Growing moves, or non-shrinking moves that bounce back, mean
            // the step is too long.
            if moved > before || (reversed && moved >= before) {
                eta *= 0.5;
                prev_step = None;
                continue;
            }
        }
        for (xi, d) in x.iter_mut().zip(&step) {
            *xi += d;
        }
        prev_step = Some(step);
    }
    Err(OracleError::NoConvergence {
        max_iters: opts.max_iters,
        residual,
    })
}

/// Gauss-Seidel best responses on a uniform grid of `points_per_axis`
/// actions per player, until a full sweep changes nothing. Ties go to the
/// smaller action; singular costs count as `+∞`.
pub fn solve_best_response_grid(
    spec: &GameSpec,
    points_per_axis: usize,
    max_sweeps: usize,
) -> Result<OracleResult, OracleError> {
    let n = spec.n();
    if n > 4 {
        return Err(OracleError::TooManyPlayers(n));
    }
    if points_per_axis < 2 {
        return Err(OracleError::InvalidInput(
            "need at least two grid points per axis".into(),
        ));
    }
    let grids: Vec<Vec<f64>> = spec
        .actions()
        .iter()
        .map(|a| {
            let h = (a.hi() - a.lo()) / (points_per_axis - 1) as f64;
            (0..points_per_axis).map(|p| a.lo() + h * p as f64).collect()
        })
        .collect();
    let nearest = |grid: &[f64], v: f64| {
        grid.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
            .map(|(p, _)| p)
            .unwrap()
    };
    let mut idx: Vec<usize> = spec
        .actions()
        .iter()
        .zip(&grids)
        .map(|(a, g)| nearest(g, a.midpoint()))
        .collect();
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    for sweep in 0..max_sweeps {
        if let Some(&prev) = seen.get(&idx) {
            return Err(OracleError::CycleDetected { period: sweep - prev });
        }
        seen.insert(idx.clone(), sweep);
        let before = idx.clone();
        for i in 0..n {
            let mut x: Vec<f64> = idx.iter().zip(&grids).map(|(&p, g)| g[p]).collect();
            let mut best = (f64::INFINITY, idx[i]);
            for (p, &v) in grids[i].iter().enumerate() {
                x[i] = v;
                let c = spec.cost_local(i, &spec.gather(i, &x)).unwrap_or(f64::INFINITY);
                if c < best.0 {
                    best = (c, p);
                }
            }
            idx[i] = best.1;
        }
        if idx == before {
            let x: Vec<f64> = idx.iter().zip(&grids).map(|(&p, g)| g[p]).collect();
            let f = spec.pseudo_gradient_capped(&x)?;
            return Ok(OracleResult {
                residual: residual_from(spec, &x, &f, 1.0),
                x_star: x,
                method: OracleMethod::BestResponseGrid,
                iterations: sweep as u64 + 1,
            });
        }
    }
    Err(OracleError::NoConvergence {
        max_iters: max_sweeps as u64,
        residual: f64::NAN,
    })
}

/// Solves `D x = −c` for a quadratic game, where `D` is the Jacobian of
/// the pseudo-gradient. Returns `None` for other cost models, a singular
/// `D`, or a solution outside `Ω` (then constraints are active and the
/// linear system is not the equilibrium condition).
pub fn quadratic_interior_equilibrium(spec: &GameSpec) -> Option<Vec<f64>> {
    let d = spec.quadratic_jacobian()?;
    let c = match spec.model() {
        CostModel::Quadratic { c, .. } => c,
        _ => return None,
    };
    let rhs = DVector::from_iterator(c.len(), c.iter().map(|v| -v));
    let x = d.lu().solve(&rhs)?;
    let x: Vec<f64> = x.iter().copied().collect();
    spec.in_domain(&x).then_some(x)
}

pub fn save_result(path: &Path, result: &OracleResult) -> Result<(), OracleError> {
    let text = serde_json::to_string_pretty(result).map_err(|e| OracleError::Cache(e.to_string()))?;
    fs::write(path, text).map_err(|e| OracleError::Cache(format!("{}: {e}", path.display())))
}

pub fn load_result(path: &Path) -> Result<OracleResult, OracleError> {
    let text = fs::read_to_string(path).map_err(|e| OracleError::Cache(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| OracleError::Cache(e.to_string()))
}
