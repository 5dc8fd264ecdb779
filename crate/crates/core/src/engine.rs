//! Asynchronous gossip Nash-equilibrium seeking.
//!
//! Each event `k`: a uniformly random player `i_k` wakes up and contacts a
//! uniformly random communication neighbor `j_k`; the two average the
//! estimates they both hold; each of them takes a projected gradient step
//! on its own action using the averaged estimates of its neighbors; and
//! the own-estimate slots are overwritten with the new actions. Everyone
//! else holds still.

use std::collections::HashMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{GameError, GameSpec};
use crate::graph::CommGraph;
use crate::indexing::IndexMap;

pub const DEFAULT_STRIDE: u64 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("communication graph is not a subgraph of the interference graph")]
    NotSubgraph,
    #[error("communication graph has {0} players but the game has {1}")]
    PlayerCount(usize, usize),
    #[error("initial value {value} for slot ({holder}, {subject}) is outside the subject's action set")]
    InfeasibleInit { holder: usize, subject: usize, value: f64 },
    #[error("expected {expected} initial values, got {got}")]
    InitLength { expected: usize, got: usize },
    #[error("initial action of player {0} is zero; constant-step analysis needs nonzero actions")]
    ZeroInitialAction(usize),
    #[error("invalid step-size policy: {0}")]
    BadPolicy(String),
    #[error("players {0} and {1} are not communication neighbors")]
    NotCommNeighbors(usize, usize),
    #[error("reference equilibrium has {got} entries, expected {expected}")]
    ReferenceLength { expected: usize, got: usize },
}

/// Step sizes `α_{k,i}`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSizePolicy {
    /// `α_{k,i} = 1/ν_k(i)`, with `ν` counted after the current update.
    Diminishing,
    /// Fixed per-player steps.
    Constant(Vec<f64>),
}

impl StepSizePolicy {
    pub fn uniform_constant(n: usize, alpha: f64) -> Self {
        StepSizePolicy::Constant(vec![alpha; n])
    }

    /// Step for player `i` whose update count, including this update, is `nu`.
    pub fn step(&self, i: usize, nu: u64) -> f64 {
        match self {
            StepSizePolicy::Diminishing => 1.0 / nu as f64,
            StepSizePolicy::Constant(a) => a[i],
        }
    }

    fn validate(&self, n: usize) -> Result<(), EngineError> {
        if let StepSizePolicy::Constant(a) = self {
            if a.len() != n {
                return Err(EngineError::BadPolicy(format!(
                    "{} step sizes for {n} players",
                    a.len()
                )));
            }
            if a.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(EngineError::BadPolicy("step sizes must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn extremes(&self) -> Option<(f64, f64)> {
        match self {
            StepSizePolicy::Diminishing => None,
            StepSizePolicy::Constant(a) => Some((
                a.iter().copied().fold(f64::INFINITY, f64::min),
                a.iter().copied().fold(0.0, f64::max),
            )),
        }
    }
}

/// Initial temporary estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum InitRule {
    /// Every estimate of player `j` at the midpoint of `Ω_j`.
    Midpoint,
    /// Every slot independently uniform in its subject's action set.
    UniformRandom,
    /// An action profile `x(0)`; every estimate of `j` starts at `x_j(0)`.
    Actions(Vec<f64>),
    /// A full stacked vector of length `m`.
    Stacked(Vec<f64>),
}

/// Options for [`run`] and [`run_full_coupling`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub init: InitRule,
    /// Record every `stride` events (plus the initial and final states).
    pub stride: u64,
    /// Reference equilibrium for the normalized error column.
    pub x_star: Option<Vec<f64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            init: InitRule::Midpoint,
            stride: DEFAULT_STRIDE,
            x_star: None,
        }
    }
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct EngineState {
    k: u64,
    x_tilde: Vec<f64>,
    nu: Vec<u64>,
    rng: ChaCha8Rng,
}

impl EngineState {
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn x_tilde(&self) -> &[f64] {
        &self.x_tilde
    }

    pub fn updates(&self) -> &[u64] {
        &self.nu
    }
}

/// One simulation run bound to a game and a communication graph.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    spec: &'a GameSpec,
    g_c: &'a CommGraph,
    map: IndexMap,
    policy: StepSizePolicy,
    exchanges: HashMap<(usize, usize), Vec<(usize, usize)>>,
    state: EngineState,
}

impl<'a> Engine<'a> {
    pub fn new(
        spec: &'a GameSpec,
        g_c: &'a CommGraph,
        policy: StepSizePolicy,
        init: &InitRule,
        seed: u64,
    ) -> Result<Self, EngineError> {
        let n = spec.n();
        if g_c.n() != n {
            return Err(EngineError::PlayerCount(g_c.n(), n));
        }
        if !g_c.is_subgraph_of(spec.graph()) {
            return Err(EngineError::NotSubgraph);
        }
        policy.validate(n)?;
        let map = IndexMap::new(spec.graph());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x_tilde = initial_estimates(spec, &map, init, &mut rng)?;
        let exchanges = g_c
            .edges()
            .into_iter()
            .map(|(u, v)| ((u, v), map.exchange_pairs(u, v)))
            .collect();
        Ok(Self {
            spec,
            g_c,
            map,
            policy,
            exchanges,
            state: EngineState {
                k: 0,
                x_tilde,
                nu: vec![0; n],
                rng,
            },
        })
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.map
    }

    pub fn spec(&self) -> &GameSpec {
        self.spec
    }

    /// Current actions `x(k)`.
    pub fn actions(&self) -> Vec<f64> {
        self.map.actions(&self.state.x_tilde)
    }

    /// Fails if some initial action is exactly zero.
    pub fn require_nonzero_actions(&self) -> Result<(), EngineError> {
        match self.actions().iter().position(|&v| v == 0.0) {
            Some(i) => Err(EngineError::ZeroInitialAction(i)),
            None => Ok(()),
        }
    }

    /// Draws the next gossiping pair `(i_k, j_k)`.
    pub fn select_pair(&mut self) -> (usize, usize) {
        let n = self.spec.n();
        let i = self.state.rng.random_range(0..n);
        let nb = self.g_c.neighbors(i);
        let j = nb[self.state.rng.random_range(0..nb.len())];
        (i, j)
    }

    fn pairs(&self, i: usize, j: usize) -> Result<&Vec<(usize, usize)>, EngineError> {
        self.exchanges
            .get(&(i.min(j), i.max(j)))
            .ok_or(EngineError::NotCommNeighbors(i, j))
    }

    /// The averaged estimates `x̄ = W(k) x̃(k)` after `i` and `j` gossip.
    /// Slots of other players, and slots the pair does not share, are
    /// copied through.
    pub fn gossip_exchange(&self, i: usize, j: usize) -> Result<Vec<f64>, EngineError> {
        let mut out = self.state.x_tilde.clone();
        for &(a, b) in self.pairs(i, j)? {
            let mean = 0.5 * out[a] + 0.5 * out[b];
            out[a] = mean;
            out[b] = mean;
        }
        Ok(out)
    }

    /// Projected gradient step of the two active players on the averaged
    /// estimates `x_hat` (from [`Self::gossip_exchange`] for the same pair),
    /// then `x̃(k+1)`: estimates from `x_hat`, own slots from the new actions.
    pub fn local_step(&mut self, mut x_hat: Vec<f64>, i: usize, j: usize) -> Result<(), EngineError> {
        let (si, sj) = (self.map.own_slot(i), self.map.own_slot(j));
        let (xi, xj) = (self.state.x_tilde[si], self.state.x_tilde[sj]);
        // Each player's gradient reads its own current action, not the average.
        x_hat[si] = xi;
        x_hat[sj] = xj;
        let gi = self.spec.grad_own_local_capped(i, &x_hat[self.map.block(i)])?;
        let gj = self.spec.grad_own_local_capped(j, &x_hat[self.map.block(j)])?;
        self.state.nu[i] += 1;
        self.state.nu[j] += 1;
        let ai = self.policy.step(i, self.state.nu[i]);
        let aj = self.policy.step(j, self.state.nu[j]);
        let acts = self.spec.actions();
        x_hat[si] = acts[i].project(xi - ai * gi);
        x_hat[sj] = acts[j].project(xj - aj * gj);
        self.state.x_tilde = x_hat;
        self.state.k += 1;
        Ok(())
    }

    /// One full event. Returns the pair that gossiped.
    pub fn step(&mut self) -> Result<(usize, usize), EngineError> {
        let (i, j) = self.select_pair();
        let x_hat = self.gossip_exchange(i, j)?;
        self.local_step(x_hat, i, j)?;
        Ok((i, j))
    }

    /// Runs `n_iters` events and records a trace.
    pub fn run(mut self, n_iters: u64, stride: u64, x_star: Option<&[f64]>) -> Result<RunTrace, EngineError> {
        let n = self.spec.n();
        if let Some(xs) = x_star {
            if xs.len() != n {
                return Err(EngineError::ReferenceLength {
                    expected: n,
                    got: xs.len(),
                });
            }
        }
        let stride = stride.max(1);
        let mut sums = Sums::default();
        let mut records = Vec::with_capacity((n_iters / stride) as usize + 2);
        records.push(self.record(None, x_star, &mut sums));
        for _ in 0..n_iters {
            let pair = self.step()?;
            let k = self.state.k;
            if k.is_multiple_of(stride) || k == n_iters {
                records.push(self.record(Some(pair), x_star, &mut sums));
            } else {
                sums.accumulate(&self.map, &self.state.x_tilde);
            }
        }
        Ok(RunTrace {
            n,
            stride,
            records,
            final_x_tilde: self.state.x_tilde,
            updates: self.state.nu,
        })
    }

    fn record(&self, pair: Option<(usize, usize)>, x_star: Option<&[f64]>, sums: &mut Sums) -> TraceRecord {
        let (consensus, action_gap) = sums.accumulate(&self.map, &self.state.x_tilde);
        let x = self.actions();
        TraceRecord {
            k: self.state.k,
            pair,
            ne_error: x_star.map(|xs| normalized_error(&x, xs)),
            x,
            consensus,
            action_gap,
            consensus_sq_sum: sums.consensus,
            action_sq_sum: sums.action,
        }
    }
}

#[derive(Default)]
struct Sums {
    consensus: f64,
    action: f64,
}

impl Sums {
    /// Adds `‖x̃ − Z‖²` and `‖x − z‖²` of the current state; returns the norms.
    fn accumulate(&mut self, map: &IndexMap, x_tilde: &[f64]) -> (f64, f64) {
        let z = map.average(x_tilde);
        let mut c2 = 0.0;
        for (s, &v) in x_tilde.iter().enumerate() {
            let d = v - z[map.owner(s).1];
            c2 += d * d;
        }
        let mut a2 = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            let d = x_tilde[map.own_slot(i)] - zi;
            a2 += d * d;
        }
        self.consensus += c2;
        self.action += a2;
        (c2.sqrt(), a2.sqrt())
    }
}

fn initial_estimates(
    spec: &GameSpec,
    map: &IndexMap,
    init: &InitRule,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, EngineError> {
    let acts = spec.actions();
    let m = map.m();
    let x: Vec<f64> = match init {
        InitRule::Midpoint => (0..m).map(|s| acts[map.owner(s).1].midpoint()).collect(),
        InitRule::UniformRandom => (0..m)
            .map(|s| {
                let a = acts[map.owner(s).1];
                a.lo() + (a.hi() - a.lo()) * rng.random::<f64>()
            })
            .collect(),
        InitRule::Actions(x0) => {
            if x0.len() != spec.n() {
                return Err(EngineError::InitLength {
                    expected: spec.n(),
                    got: x0.len(),
                });
            }
            map.lift(x0)
        }
        InitRule::Stacked(v) => {
            if v.len() != m {
                return Err(EngineError::InitLength {
                    expected: m,
                    got: v.len(),
                });
            }
            v.clone()
        }
    };
    for (s, &value) in x.iter().enumerate() {
        let (holder, subject) = map.owner(s);
        if !acts[subject].contains(value) {
            return Err(EngineError::InfeasibleInit { holder, subject, value });
        }
    }
    Ok(x)
}

/// `‖x − x*‖ / ‖x*‖`, or the plain distance when `x* = 0`.
pub fn normalized_error(x: &[f64], x_star: &[f64]) -> f64 {
    let d = x.iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let r = x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r > 0.0 {
        d / r
    } else {
        d
    }
}

/// A recorded state after event `k` (`k = 0` is the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: u64,
    /// Gossiping pair of event `k`; `None` for the initial state.
    pub pair: Option<(usize, usize)>,
    pub x: Vec<f64>,
    /// `‖x̃(k) − Z(k)‖`.
    pub consensus: f64,
    /// `‖x(k) − z(k)‖`.
    pub action_gap: f64,
    /// `‖x(k) − x*‖ / ‖x*‖` when a reference was supplied.
    pub ne_error: Option<f64>,
    /// `Σ_{t ≤ k} ‖x̃(t) − Z(t)‖²` over every event, not just recorded ones.
    pub consensus_sq_sum: f64,
    /// `Σ_{t ≤ k} ‖x(t) − z(t)‖²`.
    pub action_sq_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub n: usize,
    pub stride: u64,
    pub records: Vec<TraceRecord>,
    pub final_x_tilde: Vec<f64>,
    pub updates: Vec<u64>,
}

impl RunTrace {
    pub fn initial(&self) -> &TraceRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace holds the initial state")
    }

    /// First recorded event from which the normalized error stays at or
    /// below `target` for the rest of the trace.
    pub fn settling_event(&self, target: f64) -> Option<u64> {
        let mut first = None;
        for r in &self.records {
            match r.ne_error {
                Some(e) if e <= target => {
                    first.get_or_insert(r.k);
                }
                _ => first = None,
            }
        }
        first
    }

    /// CSV with header `k,i_k,j_k,x_1..x_N,res_consensus,res_ne`; one row
    /// per recorded event (the initial state is not a row). Players are
    /// 1-based; `res_ne` is empty without a reference equilibrium.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "k,i_k,j_k")?;
        for i in 1..=self.n {
            write!(w, ",x_{i}")?;
        }
        writeln!(w, ",res_consensus,res_ne")?;
        for r in self.records.iter().filter(|r| r.k > 0) {
            let (i, j) = r.pair.map_or((0, 0), |(i, j)| (i + 1, j + 1));
            write!(w, "{},{},{}", r.k, i, j)?;
            for v in &r.x {
                write!(w, ",{v}")?;
            }
            write!(w, ",{}", r.consensus)?;
            match r.ne_error {
                Some(e) => writeln!(w, ",{e}")?,
                None => writeln!(w, ",")?,
            }
        }
        Ok(())
    }
}

/// Initializes and runs the graphical algorithm for `n_iters` events.
pub fn run(
    spec: &GameSpec,
    g_c: &CommGraph,
    policy: StepSizePolicy,
    seed: u64,
    n_iters: u64,
    options: &RunOptions,
) -> Result<RunTrace, EngineError> {
    let engine = Engine::new(spec, g_c, policy, &options.init, seed)?;
    engine.run(n_iters, options.stride, options.x_star.as_deref())
}

/// The fully coupled baseline: the same protocol over a complete
/// interference graph, so every player tracks every other player. Costs
/// still read only true neighbors. `InitRule::Stacked` must then have
/// length `N²`.
pub fn run_full_coupling(
    spec: &GameSpec,
    g_c: &CommGraph,
    policy: StepSizePolicy,
    seed: u64,
    n_iters: u64,
    options: &RunOptions,
) -> Result<RunTrace, EngineError> {
    let full = spec.full_coupling();
    run(&full, g_c, policy, seed, n_iters, options)
}
