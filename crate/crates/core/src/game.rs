//! Partially coupled games: scalar action intervals, per-player costs that
//! read only the closed interference neighborhood, the pseudo-gradient, and
//! estimates of the regularity constants (monotonicity, Lipschitz, bounds).
//!
//! Every cost is compiled into a local form indexed by position in the
//! player's sorted closed neighborhood. That is also the layout of the
//! player's block in the stacked estimate vector, so the gossip engine
//! evaluates gradients straight from its estimate slots.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{InterferenceGraph, PlayerGraph};

/// Loads closer than this to capacity make a congestion cost singular.
pub const SINGULAR_MARGIN: f64 = 1e-9;
/// Magnitude cap applied by the guarded gradient.
pub const GRADIENT_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("expected {expected} entries for {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid action interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("action {value} of player {player} is outside its interval")]
    OutOfDomain { player: usize, value: f64 },
    #[error("cost of player {player} is singular: link {link} is at or above capacity")]
    SingularCost { player: usize, link: usize },
    #[error("cost of player {player} depends on player {other}, who is not an interference neighbor")]
    LocalityViolation { player: usize, other: usize },
    #[error("invalid game parameter: {0}")]
    InvalidParameter(String),
    #[error("pseudo-gradient is not monotone: estimated modulus {mu}")]
    MonotonicityViolation { mu: f64 },
}

/// Compact interval `[lo, hi]` of admissible actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionInterval {
    lo: f64,
    hi: f64,
}

impl ActionInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GameError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(GameError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y <= self.hi
    }

    /// Euclidean projection onto the interval.
    pub fn project(&self, y: f64) -> f64 {
        y.clamp(self.lo, self.hi)
    }
}

/// Read-only view of the actions a player's cost may depend on.
pub struct LocalView<'a> {
    players: &'a [usize],
    values: &'a [f64],
}

impl<'a> LocalView<'a> {
    pub fn players(&self) -> &'a [usize] {
        self.players
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    /// Action of player `j`; `None` if `j` is outside the neighborhood.
    pub fn get(&self, j: usize) -> Option<f64> {
        self.players.binary_search(&j).ok().map(|p| self.values[p])
    }
}

/// User-supplied cost with an analytic own-action gradient. Implementations
/// must only read players present in the view.
pub trait CustomCost: Send + Sync {
    fn cost(&self, player: usize, view: &LocalView<'_>) -> Result<f64, GameError>;
    fn grad_own(&self, player: usize, view: &LocalView<'_>) -> Result<f64, GameError>;
}

/// Congestion game on a multi-hop network: user `i` routes flow `x_i` over
/// the links in `paths[i]` and pays
/// `Σ_{l ∈ R_i} κ / (C_l − load_l) − χ_i log(x_i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WanetParams {
    /// 0-based link indices per user.
    pub paths: Vec<Vec<usize>>,
    pub capacities: Vec<f64>,
    pub kappa: f64,
    pub chi: Vec<f64>,
}

impl WanetParams {
    /// Users routing over each link.
    pub fn link_users(&self) -> Vec<Vec<usize>> {
        let mut users = vec![Vec::new(); self.capacities.len()];
        for (i, path) in self.paths.iter().enumerate() {
            for &l in path {
                if l < users.len() && !users[l].contains(&i) {
                    users[l].push(i);
                }
            }
        }
        users
    }
}

#[derive(Clone)]
pub enum CostModel {
    /// `J_i = q_ii x_i² + Σ_{j≠i} q_ij x_i x_j + c_i x_i`; row `i` of `q`
    /// belongs to player `i`.
    Quadratic {
        q: DMatrix<f64>,
        c: Vec<f64>,
    },
    Wanet(WanetParams),
    Custom(Arc<dyn CustomCost>),
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::Quadratic { q, c } => f.debug_struct("Quadratic").field("q", q).field("c", c).finish(),
            CostModel::Wanet(p) => f.debug_tuple("Wanet").field(p).finish(),
            CostModel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
struct LinkTerm {
    link: usize,
    capacity: f64,
    users: Vec<usize>,
}

#[derive(Clone)]
enum LocalCost {
    Quadratic {
        own: usize,
        diag: f64,
        cross: Vec<(usize, f64)>,
        lin: f64,
    },
    Wanet {
        own: usize,
        links: Vec<LinkTerm>,
        kappa: f64,
        chi: f64,
    },
    Custom(Arc<dyn CustomCost>),
}

/// Game over a validated interference graph.
#[derive(Clone)]
pub struct GameSpec {
    graph: InterferenceGraph,
    actions: Vec<ActionInterval>,
    model: CostModel,
    hoods: Vec<Vec<usize>>,
    local: Vec<LocalCost>,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("graph", &self.graph)
            .field("actions", &self.actions)
            .field("model", &self.model)
            .finish()
    }
}

impl GameSpec {
    pub fn new(graph: InterferenceGraph, actions: Vec<ActionInterval>, model: CostModel) -> Result<Self, GameError> {
        let n = graph.n();
        if actions.len() != n {
            return Err(GameError::DimensionMismatch {
                what: "action intervals",
                expected: n,
                got: actions.len(),
            });
        }
        let hoods: Vec<Vec<usize>> = (0..n).map(|i| graph.closed_neighborhood(i)).collect();
        let local = compile(&graph, &actions, &model, &hoods)?;
        Ok(Self {
            graph,
            actions,
            model,
            hoods,
            local,
        })
    }

    /// The same costs over the complete interference graph: every player
    /// keeps estimates of everyone, while costs still read only their true
    /// neighbors.
    pub fn full_coupling(&self) -> GameSpec {
        let complete = InterferenceGraph::complete(self.n()).expect("n > 0 by construction");
        GameSpec::new(complete, self.actions.clone(), self.model.clone())
            .expect("a complete graph accepts any local cost")
    }

    pub fn n(&self) -> usize {
        self.actions.len()
    }

    pub fn graph(&self) -> &InterferenceGraph {
        &self.graph
    }

    pub fn actions(&self) -> &[ActionInterval] {
        &self.actions
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    /// Sorted closed interference neighborhood of `i`.
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.hoods[i]
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.n() && x.iter().zip(&self.actions).all(|(&v, a)| a.contains(v))
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, a) in x.iter_mut().zip(&self.actions) {
            *v = a.project(*v);
        }
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), GameError> {
        if x.len() != self.n() {
            return Err(GameError::DimensionMismatch {
                what: "action vector",
                expected: self.n(),
                got: x.len(),
            });
        }
        for (player, (&value, a)) in x.iter().zip(&self.actions).enumerate() {
            if !a.contains(value) {
                return Err(GameError::OutOfDomain { player, value });
            }
        }
        Ok(())
    }

    /// Restriction of a full action vector to `i`'s closed neighborhood.
    pub fn gather(&self, i: usize, x: &[f64]) -> Vec<f64> {
        self.hoods[i].iter().map(|&j| x[j]).collect()
    }

    /// `J_i` evaluated on a local vector laid out like [`Self::neighborhood`].
    pub fn cost_local(&self, i: usize, local: &[f64]) -> Result<f64, GameError> {
        match &self.local[i] {
            LocalCost::Quadratic { own, diag, cross, lin } => {
                let xi = local[*own];
                let coupled: f64 = cross.iter().map(|&(p, q)| q * local[p]).sum();
                Ok(diag * xi * xi + xi * coupled + lin * xi)
            }
            LocalCost::Wanet { own, links, kappa, chi } => {
                let mut total = 0.0;
                for term in links {
                    let slack = term.capacity - term.users.iter().map(|&p| local[p]).sum::<f64>();
                    if slack <= SINGULAR_MARGIN {
                        return Err(GameError::SingularCost {
                            player: i,
                            link: term.link,
                        });
                    }
                    total += kappa / slack;
                }
                Ok(total - chi * (local[*own] + 1.0).ln())
            }
            LocalCost::Custom(c) => c.cost(
                i,
                &LocalView {
                    players: &self.hoods[i],
                    values: local,
                },
            ),
        }
    }

    /// `∂J_i/∂x_i` on a local vector.
    pub fn grad_own_local(&self, i: usize, local: &[f64]) -> Result<f64, GameError> {
        match &self.local[i] {
            LocalCost::Quadratic { own, diag, cross, lin } => {
                let coupled: f64 = cross.iter().map(|&(p, q)| q * local[p]).sum();
                Ok(2.0 * diag * local[*own] + coupled + lin)
            }
            LocalCost::Wanet { own, links, kappa, chi } => {
                let mut total = 0.0;
                for term in links {
                    let slack = term.capacity - term.users.iter().map(|&p| local[p]).sum::<f64>();
                    if slack <= SINGULAR_MARGIN {
                        return Err(GameError::SingularCost {
                            player: i,
                            link: term.link,
                        });
                    }
                    total += kappa / (slack * slack);
                }
                Ok(total - chi / (local[*own] + 1.0))
            }
            LocalCost::Custom(c) => c.grad_own(
                i,
                &LocalView {
                    players: &self.hoods[i],
                    values: local,
                },
            ),
        }
    }

    /// Gradient that never fails on congestion costs: each link's slack is
    /// floored so its term stays below [`GRADIENT_CAP`], and the total is
    /// clamped to `±GRADIENT_CAP`. Agrees with [`Self::grad_own_local`]
    /// wherever that is below the cap. The floored term is still
    /// nondecreasing in the link load, so monotonicity survives.
    pub fn grad_own_local_capped(&self, i: usize, local: &[f64]) -> Result<f64, GameError> {
        let g = match &self.local[i] {
            LocalCost::Wanet { own, links, kappa, chi } => {
                let floor = (kappa / GRADIENT_CAP).sqrt();
                let mut total = 0.0;
                for term in links {
                    let slack = term.capacity - term.users.iter().map(|&p| local[p]).sum::<f64>();
                    let slack = slack.max(floor);
                    total += kappa / (slack * slack);
                }
                total - chi / (local[*own] + 1.0)
            }
            _ => self.grad_own_local(i, local)?,
        };
        Ok(g.clamp(-GRADIENT_CAP, GRADIENT_CAP))
    }

    pub fn cost(&self, i: usize, x: &[f64]) -> Result<f64, GameError> {
        self.check_domain(x)?;
        self.cost_local(i, &self.gather(i, x))
    }

    pub fn grad_own(&self, i: usize, x: &[f64]) -> Result<f64, GameError> {
        self.check_domain(x)?;
        self.grad_own_local(i, &self.gather(i, x))
    }

    /// `F(x) = [∂J_i/∂x_i]_i`. Does not require `x ∈ Ω`.
    pub fn pseudo_gradient(&self, x: &[f64]) -> Result<Vec<f64>, GameError> {
        (0..self.n())
            .map(|i| self.grad_own_local(i, &self.gather(i, x)))
            .collect()
    }

    pub fn pseudo_gradient_capped(&self, x: &[f64]) -> Result<Vec<f64>, GameError> {
        (0..self.n())
            .map(|i| self.grad_own_local_capped(i, &self.gather(i, x)))
            .collect()
    }

    /// Jacobian of `F` for quadratic games (constant).
    pub fn quadratic_jacobian(&self) -> Option<DMatrix<f64>> {
        match &self.model {
            CostModel::Quadratic { q, .. } => {
                let n = self.n();
                Some(DMatrix::from_fn(
                    n,
                    n,
                    |i, j| {
                        if i == j {
                            2.0 * q[(i, i)]
                        } else {
                            q[(i, j)]
                        }
                    },
                ))
            }
            _ => None,
        }
    }

    /// Draws a point of `Ω` at which every cost is finite. Congestion games
    /// have singular regions inside the box, so infeasible draws are pulled
    /// toward the lower corner until they clear capacity.
    pub fn sample_regular_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<f64>> {
        let mut x: Vec<f64> = self
            .actions
            .iter()
            .map(|a| a.lo() + (a.hi() - a.lo()) * rng.random::<f64>())
            .collect();
        for _ in 0..64 {
            if self.pseudo_gradient(&x).is_ok() {
                return Some(x);
            }
            for (v, a) in x.iter_mut().zip(&self.actions) {
                *v = a.lo() + 0.5 * (*v - a.lo());
            }
        }
        None
    }

    pub fn estimate_regularity(&self, n_samples: usize, seed: u64) -> Result<RegularityEstimates, GameError> {
        let est = match &self.model {
            CostModel::Quadratic { q, .. } => self.quadratic_regularity(q),
            _ => self.sampled_regularity(n_samples, seed)?,
        };
        if est.mu < -1e-9 {
            return Err(GameError::MonotonicityViolation { mu: est.mu });
        }
        Ok(est)
    }

    fn quadratic_regularity(&self, q: &DMatrix<f64>) -> RegularityEstimates {
        let jac = self.quadratic_jacobian().expect("quadratic model");
        let sym = (&jac + jac.transpose()) * 0.5;
        let mu = SymmetricEigen::new(sym).eigenvalues.min();
        let rho = jac.singular_values().max();
        let n = self.n();
        let sigma: Vec<f64> = (0..n).map(|i| 2.0 * q[(i, i)].abs()).collect();
        let lipschitz_u: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| q[(i, j)] * q[(i, j)])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        // |∂J_i/∂x_i| is affine, so its maximum over the box sits at a corner.
        let c_bound = (0..n)
            .map(|i| {
                let (mut lo, mut hi) = match &self.model {
                    CostModel::Quadratic { c, .. } => (c[i], c[i]),
                    _ => unreachable!(),
                };
                for j in 0..n {
                    let a = if i == j { 2.0 * q[(i, i)] } else { q[(i, j)] };
                    let (p, r) = (a * self.actions[j].lo(), a * self.actions[j].hi());
                    lo += p.min(r);
                    hi += p.max(r);
                }
                lo.abs().max(hi.abs())
            })
            .fold(0.0, f64::max);
        let l_max = lipschitz_u.iter().copied().fold(0.0, f64::max);
        RegularityEstimates {
            mu,
            rho,
            sigma,
            lipschitz_u,
            l_max,
            c_bound,
            samples: 0,
            exact: true,
        }
    }

    fn sampled_regularity(&self, n_samples: usize, seed: u64) -> Result<RegularityEstimates, GameError> {
        let n = self.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mu = f64::INFINITY;
        let mut rho: f64 = 0.0;
        let mut sigma = vec![0.0_f64; n];
        let mut lipschitz_u = vec![0.0_f64; n];
        let mut c_bound: f64 = 0.0;
        let mut used = 0;
        for _ in 0..n_samples {
            let (Some(x), Some(y)) = (self.sample_regular_point(&mut rng), self.sample_regular_point(&mut rng)) else {
                continue;
            };
            let fx = self.pseudo_gradient(&x)?;
            let fy = self.pseudo_gradient(&y)?;
            let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let dist2: f64 = dx.iter().map(|d| d * d).sum();
            if dist2 == 0.0 {
                continue;
            }
            let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
            let inner: f64 = df.iter().zip(&dx).map(|(a, b)| a * b).sum();
            let dfn: f64 = df.iter().map(|d| d * d).sum::<f64>().sqrt();
            mu = mu.min(inner / dist2);
            rho = rho.max(dfn / dist2.sqrt());
            for i in 0..n {
                c_bound = c_bound.max(fx[i].abs()).max(fy[i].abs());
                // Own-coordinate and neighbor-coordinate Lipschitz ratios.
                let mut own = x.clone();
                own[i] = y[i];
                if let Ok(g) = self.grad_own_local(i, &self.gather(i, &own)) {
                    if dx[i] != 0.0 {
                        sigma[i] = sigma[i].max((fx[i] - g).abs() / dx[i].abs());
                    }
                    let du: f64 = self.hoods[i]
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| dx[j] * dx[j])
                        .sum::<f64>()
                        .sqrt();
                    if du > 0.0 {
                        lipschitz_u[i] = lipschitz_u[i].max((g - fy[i]).abs() / du);
                    }
                }
            }
            used += 1;
        }
        if used == 0 {
            return Err(GameError::InvalidParameter(
                "no regular sample points found in the action set".into(),
            ));
        }
        let l_max = lipschitz_u.iter().copied().fold(0.0, f64::max);
        Ok(RegularityEstimates {
            mu,
            rho,
            sigma,
            lipschitz_u,
            l_max,
            c_bound,
            samples: used,
            exact: false,
        })
    }
}

/// Regularity constants of the pseudo-gradient. `exact` is set when they
/// come from closed forms; otherwise they are sample extremes over
/// `samples` random pairs and are not certified bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityEstimates {
    pub mu: f64,
    pub rho: f64,
    pub sigma: Vec<f64>,
    pub lipschitz_u: Vec<f64>,
    pub l_max: f64,
    pub c_bound: f64,
    pub samples: usize,
    pub exact: bool,
}

fn compile(
    graph: &PlayerGraph,
    actions: &[ActionInterval],
    model: &CostModel,
    hoods: &[Vec<usize>],
) -> Result<Vec<LocalCost>, GameError> {
    let n = graph.n();
    let pos = |i: usize, j: usize| hoods[i].binary_search(&j).ok();
    match model {
        CostModel::Quadratic { q, c } => {
            if q.nrows() != n || q.ncols() != n {
                return Err(GameError::DimensionMismatch {
                    what: "quadratic coefficient rows",
                    expected: n,
                    got: q.nrows(),
                });
            }
            if c.len() != n {
                return Err(GameError::DimensionMismatch {
                    what: "linear coefficients",
                    expected: n,
                    got: c.len(),
                });
            }
            (0..n)
                .map(|i| {
                    let mut cross = Vec::new();
                    for j in (0..n).filter(|&j| j != i) {
                        let coef = q[(i, j)];
                        if coef == 0.0 {
                            continue;
                        }
                        let p = pos(i, j).ok_or(GameError::LocalityViolation { player: i, other: j })?;
                        cross.push((p, coef));
                    }
                    Ok(LocalCost::Quadratic {
                        own: pos(i, i).expect("closed neighborhood contains i"),
                        diag: q[(i, i)],
                        cross,
                        lin: c[i],
                    })
                })
                .collect()
        }
        CostModel::Wanet(p) => {
            if p.paths.len() != n {
                return Err(GameError::DimensionMismatch {
                    what: "user paths",
                    expected: n,
                    got: p.paths.len(),
                });
            }
            if p.chi.len() != n {
                return Err(GameError::DimensionMismatch {
                    what: "chi parameters",
                    expected: n,
                    got: p.chi.len(),
                });
            }
            if !(p.kappa > 0.0) {
                return Err(GameError::InvalidParameter(format!(
                    "kappa must be positive, got {}",
                    p.kappa
                )));
            }
            if p.capacities.iter().any(|&c| !(c > 0.0)) {
                return Err(GameError::InvalidParameter("link capacities must be positive".into()));
            }
            if p.chi.iter().any(|&c| !(c > 0.0)) {
                return Err(GameError::InvalidParameter("chi must be positive".into()));
            }
            if let Some((i, _)) = actions.iter().enumerate().find(|(_, a)| a.lo() <= -1.0) {
                return Err(GameError::InvalidParameter(format!(
                    "flow of user {i} may reach -1 where log(x + 1) is undefined"
                )));
            }
            let users = p.link_users();
            (0..n)
                .map(|i| {
                    if p.paths[i].is_empty() {
                        return Err(GameError::InvalidParameter(format!("user {i} has an empty path")));
                    }
                    let mut links = Vec::new();
                    for &l in &p.paths[i] {
                        if l >= p.capacities.len() {
                            return Err(GameError::InvalidParameter(format!(
                                "user {i} routes over unknown link {l}"
                            )));
                        }
                        if links.iter().any(|t: &LinkTerm| t.link == l) {
                            continue;
                        }
                        let mut local_users = Vec::with_capacity(users[l].len());
                        for &w in &users[l] {
                            local_users.push(pos(i, w).ok_or(GameError::LocalityViolation { player: i, other: w })?);
                        }
                        links.push(LinkTerm {
                            link: l,
                            capacity: p.capacities[l],
                            users: local_users,
                        });
                    }
                    Ok(LocalCost::Wanet {
                        own: pos(i, i).expect("closed neighborhood contains i"),
                        links,
                        kappa: p.kappa,
                        chi: p.chi[i],
                    })
                })
                .collect()
        }
        CostModel::Custom(c) => Ok((0..n).map(|_| LocalCost::Custom(Arc::clone(c))).collect()),
    }
}

/// Euclidean projection of `y` onto `interval`.
pub fn project(interval: &ActionInterval, y: f64) -> f64 {
    interval.project(y)
}
