//! Convergence-rate toolkit: the consensus contraction factor `γ`, the
//! step-size condition `φ`, the analytic lower bound on the ε-averaging
//! time, its Monte Carlo counterpart, and the per-iteration timing model
//! comparing the graphical algorithm with the fully coupled one.

use std::thread;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::engine::{Engine, EngineError, InitRule, RunTrace, StepSizePolicy};
use crate::game::GameSpec;
use crate::graph::{CommGraph, InterferenceGraph, PlayerGraph};
use crate::indexing::{IndexError, IndexMap, PairDistribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("averaging criterion not met within {horizon} events")]
    NotReached { horizon: u64 },
    #[error("{which} trace never settles below the target error {target}")]
    TargetNotReached { which: &'static str, target: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

/// Eigenvalues of `(A + Aᵀ)/2`, largest first.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Both routes to `γ` plus the full spectrum of `W̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    /// Largest eigenvalue of `W̄` off the `N`-dimensional consensus
    /// subspace (its `(N+1)`-th largest eigenvalue).
    pub lambda2: f64,
    /// `λ_max(E[Qᵀ Q])`, summed exactly over all pairs.
    pub lambda_max_qtq: f64,
    /// Eigenvalues of `W̄`, largest first.
    pub spectrum: Vec<f64>,
}

impl GammaReport {
    pub fn gamma(&self) -> f64 {
        self.lambda2
    }
}

/// `γ` for the graphical algorithm on `(G_I, G_C)`.
pub fn gamma_of(
    g_i: &InterferenceGraph,
    g_c: &CommGraph,
    dist: &PairDistribution,
) -> Result<GammaReport, SpectralError> {
    let map = IndexMap::new(g_i);
    let wbar = map.expected_comm_matrix(g_c, dist)?;
    let spectrum = symmetric_eigenvalues(&wbar);
    let lambda2 = spectrum.get(g_i.n()).copied().unwrap_or(0.0);
    let qtq = map.expected_qtq(g_c, dist)?;
    let lambda_max_qtq = symmetric_eigenvalues(&qtq)[0];
    Ok(GammaReport {
        lambda2,
        lambda_max_qtq,
        spectrum,
    })
}

/// `E[W_N(k)]` for the `N×N` pairwise averaging matrices
/// `I − ½ (e_i − e_j)(e_i − e_j)ᵀ`.
pub fn expected_player_gossip_matrix(
    g_c: &PlayerGraph,
    dist: &PairDistribution,
) -> Result<DMatrix<f64>, SpectralError> {
    let n = g_c.n();
    let mut acc = DMatrix::zeros(n, n);
    for (i, j, p) in dist.ordered_probabilities(g_c)? {
        let mut w = DMatrix::<f64>::identity(n, n);
        w[(i, i)] = 0.5;
        w[(j, j)] = 0.5;
        w[(i, j)] = 0.5;
        w[(j, i)] = 0.5;
        acc += w * p;
    }
    Ok(acc)
}

/// `γ` with the Kronecker-form `Q(k) = (W_N − (1/N) 1 1ᵀ W_N) ⊗ I_N`. Since
/// `E[QᵀQ] = (E[W_N] − 11ᵀ/N) ⊗ I_N`, this is `λ₂(E[W_N])`: it depends on
/// the communication graph only.
pub fn gamma_kronecker(g_c: &PlayerGraph, dist: &PairDistribution) -> Result<f64, SpectralError> {
    let wn = expected_player_gossip_matrix(g_c, dist)?;
    let ev = symmetric_eigenvalues(&wn);
    Ok(ev.get(1).copied().unwrap_or(0.0))
}

/// Inputs of the constant-step rate analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct RateInputs {
    pub gamma: f64,
    pub mu: f64,
    pub rho: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub l_max: f64,
    pub c_bound: f64,
    pub d_star: f64,
    pub x_min0: f64,
}

/// `φ` together with whether it lies in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi {
    pub value: f64,
    pub valid: bool,
}

pub fn phi(inputs: &RateInputs) -> Phi {
    let RateInputs {
        mu,
        rho,
        p_max,
        p_min,
        alpha_max,
        alpha_min,
        ..
    } = *inputs;
    let value = 1.0 + (1.0 + rho * rho + 2.0 * alpha_max) * p_max * alpha_max
        - (1.0 + rho * rho + 2.0 * mu) * p_min * alpha_min;
    Phi {
        value,
        valid: value > 0.0 && value < 1.0,
    }
}

/// `log(a / (ε³ − b)) / log(1/√γ)`; `None` when `ε³ ≤ b` or `γ ∉ (0, 1)`.
pub fn nav_lower_bound(gamma: f64, a: f64, b: f64, eps: f64) -> Option<f64> {
    let slack = eps.powi(3) - b;
    if !(slack > 0.0) || !(gamma > 0.0 && gamma < 1.0) || !(a > 0.0) {
        return None;
    }
    Some((a / slack).ln() / (1.0 / gamma.sqrt()).ln())
}

/// The constants behind the analytic bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c3: f64,
    pub c4: f64,
    pub a: f64,
    pub b: f64,
}

/// `C₃`, `C₄`, `a`, `b` from caller-supplied `C₁`, `C₂` (whose dependence on
/// `γ`, `α_max` and `N` is not available in closed form). `x_max` bounds
/// the action magnitudes and `n` is the number of players.
pub fn bound_constants(
    inputs: &RateInputs,
    n: usize,
    x_max: f64,
    c1: f64,
    c2: f64,
) -> Result<BoundConstants, SpectralError> {
    let ph = phi(inputs);
    if !ph.valid {
        return Err(SpectralError::InvalidInput(format!(
            "phi = {} is outside (0, 1)",
            ph.value
        )));
    }
    if !(inputs.x_min0 > 0.0) {
        return Err(SpectralError::InvalidInput("x_min(0) must be positive".into()));
    }
    let nf = n as f64;
    let l2 = inputs.l_max * inputs.l_max;
    let c3 = (nf * x_max * x_max).max(
        4.0 * nf * inputs.c_bound * inputs.c_bound * inputs.p_max * inputs.alpha_max * inputs.alpha_max
            + 2.0 * l2 * inputs.p_max * c2,
    ) / (1.0 - ph.value);
    let c4 = 2.0 * l2 * inputs.p_max * c1 / (1.0 - ph.value);
    let xm2 = inputs.x_min0 * inputs.x_min0;
    Ok(BoundConstants {
        c3,
        c4,
        a: c4 / xm2,
        b: (c3 - inputs.d_star * inputs.d_star) / xm2,
    })
}

/// Assembles [`RateInputs`] from the game, graphs and a constant policy.
pub fn rate_inputs(
    spec: &GameSpec,
    g_c: &CommGraph,
    dist: &PairDistribution,
    policy: &StepSizePolicy,
    regularity: &crate::game::RegularityEstimates,
    d_star: f64,
    x0: &[f64],
) -> Result<RateInputs, SpectralError> {
    let (alpha_min, alpha_max) = policy
        .extremes()
        .ok_or_else(|| SpectralError::InvalidInput("rate analysis needs constant step sizes".into()))?;
    let p = dist.participation(g_c)?;
    let gamma = gamma_of(spec.graph(), g_c, dist)?.gamma();
    Ok(RateInputs {
        gamma,
        mu: regularity.mu,
        rho: regularity.rho,
        p_max: p.iter().copied().fold(0.0, f64::max),
        p_min: p.iter().copied().fold(f64::INFINITY, f64::min),
        alpha_max,
        alpha_min,
        l_max: regularity.l_max,
        c_bound: regularity.c_bound,
        d_star,
        x_min0: x0.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min),
    })
}

/// Settings for [`empirical_nav`].
#[derive(Debug, Clone, PartialEq)]
pub struct NavSettings {
    pub eps: f64,
    pub seeds: Vec<u64>,
    pub horizon: u64,
    /// Length of the pilot run whose minimum distance to `x*` estimates `d*`.
    pub pilot_horizon: u64,
    pub pilot_seed: u64,
    pub init: InitRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavEstimate {
    pub events: u64,
    pub d_star: f64,
    /// Fraction of seeds still outside the ε-ball at `events`.
    pub fraction: f64,
}

/// Smallest `k` such that the fraction of seeds with
/// `(‖x(k) − x*‖ − d*) / ‖x(0)‖ ≥ ε` is at most `ε`.
pub fn empirical_nav(
    spec: &GameSpec,
    g_c: &CommGraph,
    policy: &StepSizePolicy,
    x_star: &[f64],
    settings: &NavSettings,
) -> Result<NavEstimate, SpectralError> {
    if !matches!(policy, StepSizePolicy::Constant(_)) {
        return Err(SpectralError::InvalidInput(
            "the averaging time is defined for constant step sizes".into(),
        ));
    }
    if !(settings.eps > 0.0 && settings.eps < 1.0) || settings.seeds.is_empty() {
        return Err(SpectralError::InvalidInput(
            "need 0 < eps < 1 and at least one seed".into(),
        ));
    }
    let dist = |x: &[f64]| x.iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();

    let mut pilot = Engine::new(spec, g_c, policy.clone(), &settings.init, settings.pilot_seed)?;
    pilot.require_nonzero_actions()?;
    let mut d_star = dist(&pilot.actions());
    for _ in 0..settings.pilot_horizon {
        pilot.step()?;
        d_star = d_star.min(dist(&pilot.actions()));
    }

    let curves = per_seed(&settings.seeds, |seed| -> Result<Vec<f64>, SpectralError> {
        let mut e = Engine::new(spec, g_c, policy.clone(), &settings.init, seed)?;
        e.require_nonzero_actions()?;
        let x0 = e.actions().iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut out = Vec::with_capacity(settings.horizon as usize + 1);
        out.push((dist(&e.actions()) - d_star) / x0);
        for _ in 0..settings.horizon {
            e.step()?;
            out.push((dist(&e.actions()) - d_star) / x0);
        }
        Ok(out)
    })?;

    let s = curves.len() as f64;
    for k in 0..=settings.horizon as usize {
        let outside = curves.iter().filter(|c| c[k] >= settings.eps).count() as f64;
        if outside / s <= settings.eps {
            return Ok(NavEstimate {
                events: k as u64,
                d_star,
                fraction: outside / s,
            });
        }
    }
    Err(SpectralError::NotReached {
        horizon: settings.horizon,
    })
}

/// Runs `job` for every seed on scoped threads; results come back in seed order.
pub fn per_seed<T, E, F>(seeds: &[u64], job: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync,
{
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(workers).max(1);
    let job = &job;
    thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| job(s)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("seed worker panicked"))
            .collect()
    })
}

/// Mean time per iteration for both algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    pub t_av1: f64,
    pub t_av2: f64,
}

/// `T_av¹ = Σ Pr(i wakes, contacts j) (|N_I(i) ∩ N_I(j)| r + (m_i/N) s)` and
/// `T_av² = (N − 1) r + s`, where `r` is the time to send one estimate and
/// `s` the time to evaluate a full gradient.
pub fn timing_model(
    g_i: &PlayerGraph,
    g_c: &PlayerGraph,
    dist: &PairDistribution,
    r: f64,
    s: f64,
) -> Result<TimingModel, SpectralError> {
    if !(r > 0.0 && s > 0.0) {
        return Err(SpectralError::InvalidInput("r and s must be positive".into()));
    }
    let n = g_i.n() as f64;
    let mut t1 = 0.0;
    for (i, j, p) in dist.ordered_probabilities(g_c)? {
        let shared = g_i.common_neighbor_count(i, j) as f64;
        let m_i = (g_i.degree(i) + 1) as f64;
        t1 += p * (shared * r + m_i / n * s);
    }
    let t2 = (n - 1.0) * r + s;
    debug_assert!(t1 <= t2 + 1e-12, "T_av1 = {t1} exceeds T_av2 = {t2}");
    Ok(TimingModel { t_av1: t1, t_av2: t2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupReport {
    pub target: f64,
    pub events_graphical: u64,
    pub events_full: u64,
    /// `events_full / events_graphical`.
    pub iteration_ratio: f64,
    /// `T_av² / T_av¹`.
    pub time_ratio: f64,
    /// Product of the two ratios.
    pub speedup: f64,
}

/// Compares the events each algorithm needs to settle below `target`
/// normalized error and folds in the per-iteration time ratio.
pub fn speedup_report(
    graphical: &RunTrace,
    full: &RunTrace,
    timing: &TimingModel,
    target: f64,
) -> Result<SpeedupReport, SpectralError> {
    let events_graphical = graphical
        .settling_event(target)
        .ok_or(SpectralError::TargetNotReached {
            which: "graphical",
            target,
        })?;
    let events_full = full.settling_event(target).ok_or(SpectralError::TargetNotReached {
        which: "fully coupled",
        target,
    })?;
    let iteration_ratio = events_full.max(1) as f64 / events_graphical.max(1) as f64;
    let time_ratio = timing.t_av2 / timing.t_av1;
    Ok(SpeedupReport {
        target,
        events_graphical,
        events_full,
        iteration_ratio,
        time_ratio,
        speedup: iteration_ratio * time_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{validate_communication, validate_interference};

    fn inputs() -> RateInputs {
        RateInputs {
            gamma: 0.5,
            mu: 1.0,
            rho: 1.0,
            p_max: 0.5,
            p_min: 0.5,
            alpha_max: 0.1,
            alpha_min: 0.1,
            l_max: 1.0,
            c_bound: 1.0,
            d_star: 0.0,
            x_min0: 1.0,
        }
    }

    #[test]
    fn phi_examples() {
        let p = phi(&inputs());
        assert!((p.value - 0.91).abs() < 1e-12 && p.valid);
        let zero = RateInputs {
            alpha_max: 0.0,
            alpha_min: 0.0,
            ..inputs()
        };
        let p0 = phi(&zero);
        assert_eq!(p0.value, 1.0);
        assert!(!p0.valid);
        let strong = RateInputs { mu: 3.0, ..inputs() };
        assert!(phi(&strong).value < p.value);
    }

    #[test]
    fn nav_bound_examples() {
        let v = nav_lower_bound(0.25, 1.0, 0.0, 0.5).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert_eq!(nav_lower_bound(0.25, 1.0, 0.2, 0.5), None);
        let lo = nav_lower_bound(0.3, 2.0, 0.01, 0.5).unwrap();
        let hi = nav_lower_bound(0.9, 2.0, 0.01, 0.5).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn bound_constants_follow_formulas() {
        let inp = inputs();
        let k = bound_constants(&inp, 2, 1.0, 1.0, 1.0).unwrap();
        let one_minus_phi = 1.0 - 0.91;
        let c3 = (2.0_f64).max(4.0 * 2.0 * 0.5 * 0.01 + 2.0 * 0.5) / one_minus_phi;
        assert!((k.c3 - c3).abs() < 1e-12);
        assert!((k.c4 - 1.0 / one_minus_phi).abs() < 1e-12);
        assert!((k.a - k.c4).abs() < 1e-12 && (k.b - k.c3).abs() < 1e-12);
    }

    #[test]
    fn gamma_two_players() {
        let gi = validate_interference(PlayerGraph::complete(2)).unwrap();
        let gc = validate_communication(&gi, PlayerGraph::complete(2)).unwrap();
        let g = gamma_of(&gi, &gc, &PairDistribution::UniformWakeup).unwrap();
        assert!(g.lambda2.abs() < 1e-12);
        assert!(g.lambda_max_qtq.abs() < 1e-12);
        assert_eq!(g.spectrum.len(), 4);
        assert!((g.spectrum[0] - 1.0).abs() < 1e-12 && (g.spectrum[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn timing_two_players() {
        let g = PlayerGraph::complete(2);
        let t = timing_model(&g, &g, &PairDistribution::UniformWakeup, 1.0, 1.0).unwrap();
        assert_eq!(t.t_av1, 1.0);
        assert_eq!(t.t_av2, 2.0);
    }

    #[test]
    fn timing_complete_graph() {
        let g = PlayerGraph::complete(5);
        let t = timing_model(&g, &g, &PairDistribution::UniformWakeup, 1.0, 2.0).unwrap();
        // N − 2 shared neighbors and m_i = N.
        assert!((t.t_av1 - (3.0 + 2.0)).abs() < 1e-12);
        assert_eq!(t.t_av2, 6.0);
    }

    #[test]
    fn kronecker_gamma_on_path() {
        let g = PlayerGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let wn = expected_player_gossip_matrix(&g, &PairDistribution::UniformEdge).unwrap();
        // each edge with prob 1/2: W = I - 1/4 (L)
        let lap = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert!((wn - (DMatrix::identity(3, 3) - lap * 0.25)).amax() < 1e-15);
        let g2 = gamma_kronecker(&g, &PairDistribution::UniformEdge).unwrap();
        // Laplacian eigenvalues 0, 1, 3
        assert!((g2 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn per_seed_keeps_order() {
        let seeds: Vec<u64> = (0..37).collect();
        let out: Result<Vec<u64>, ()> = per_seed(&seeds, |s| Ok(s * 2));
        assert_eq!(out.unwrap(), seeds.iter().map(|s| s * 2).collect::<Vec<_>>());
    }
}
