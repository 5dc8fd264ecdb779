//! WANET-style benchmark and report writers.
//!
//! Users route traffic over paths of links; two users interfere when their
//! paths share a link. The shipped topology is a representative sparse
//! network of 16 links and 15 users.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::engine::{run, run_full_coupling, EngineError, InitRule, RunOptions, RunTrace, StepSizePolicy};
use crate::game::{ActionInterval, CostModel, GameError, GameSpec, WanetParams};
use crate::graph::{
    maximal_triangle_free_spanning_subgraph, validate_communication, validate_interference, CommGraph, EdgeOrder,
    GraphError, InterferenceGraph, PlayerGraph,
};
use crate::indexing::PairDistribution;
use crate::oracle::{solve_projected_gradient, OracleError, OracleResult, ProjectedGradientOptions};
use crate::spectral::{gamma_of, speedup_report, timing_model, SpectralError, SpeedupReport, TimingModel};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid benchmark: {0}")]
    Invalid(String),
}

/// Interference graph of a routing game: `(i, j)` is an edge iff the paths
/// of users `i` and `j` share a link. Link labels are arbitrary.
pub fn derive_interference_from_paths(paths: &[Vec<usize>], n_users: usize) -> PlayerGraph {
    let sets: Vec<BTreeSet<usize>> = paths
        .iter()
        .take(n_users)
        .map(|p| p.iter().copied().collect())
        .collect();
    let mut edges = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if !sets[i].is_disjoint(&sets[j]) {
                edges.push((i, j));
            }
        }
    }
    PlayerGraph::new(n_users, edges).expect("pairs are in range and distinct")
}

/// User paths of the shipped topology, 1-based link indices.
const SHIPPED_PATHS: [&[usize]; 15] = [
    &[1, 2],
    &[2, 3],
    &[3, 4],
    &[4, 5, 6],
    &[6, 7],
    &[7, 8],
    &[8, 9],
    &[9, 10, 11],
    &[11, 12],
    &[12, 13],
    &[13, 14],
    &[14, 15, 16],
    &[16, 1],
    &[5, 10],
    &[15, 3],
];

/// Which communication graph to use on the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommVariant {
    /// The greedy maximal triangle-free spanning subgraph of `G_I`.
    Greedy,
    /// `G_C = G_I`.
    Dense,
}

/// A routing game over capacitated links.
#[derive(Debug, Clone, PartialEq)]
pub struct WanetBenchmark {
    /// Per-user paths, 1-based link indices.
    pub paths: Vec<Vec<usize>>,
    pub capacities: Vec<f64>,
    pub kappa: f64,
    pub chi: Vec<f64>,
    pub action_max: f64,
}

impl Default for WanetBenchmark {
    fn default() -> Self {
        Self::shipped()
    }
}

impl WanetBenchmark {
    /// 16 links of capacity 10, 15 users with `χ = 10`, `κ = 2`, `Ω = [0, 10]`.
    pub fn shipped() -> Self {
        Self {
            paths: SHIPPED_PATHS.iter().map(|p| p.to_vec()).collect(),
            capacities: vec![10.0; 16],
            kappa: 2.0,
            chi: vec![10.0; 15],
            action_max: 10.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn n_users(&self) -> usize {
        self.paths.len()
    }

    pub fn n_links(&self) -> usize {
        self.capacities.len()
    }

    /// Checks link indices, that every link carries traffic, and parameter
    /// lengths.
    pub fn validate(&self) -> Result<(), BenchError> {
        let l = self.n_links();
        let mut used = vec![false; l];
        for (i, p) in self.paths.iter().enumerate() {
            if p.is_empty() {
                return Err(BenchError::Invalid(format!("user {} has an empty path", i + 1)));
            }
            for &link in p {
                if link == 0 || link > l {
                    return Err(BenchError::Invalid(format!("user {} uses unknown link {link}", i + 1)));
                }
                used[link - 1] = true;
            }
        }
        if let Some(idle) = used.iter().position(|u| !u) {
            return Err(BenchError::Invalid(format!("link {} carries no user", idle + 1)));
        }
        if self.chi.len() != self.n_users() {
            return Err(BenchError::Invalid(format!(
                "{} χ values for {} users",
                self.chi.len(),
                self.n_users()
            )));
        }
        Ok(())
    }

    /// Parameters with 0-based links, as the cost model expects.
    pub fn params(&self) -> WanetParams {
        WanetParams {
            paths: self.paths.iter().map(|p| p.iter().map(|l| l - 1).collect()).collect(),
            capacities: self.capacities.clone(),
            kappa: self.kappa,
            chi: self.chi.clone(),
        }
    }

    pub fn interference(&self) -> Result<InterferenceGraph, BenchError> {
        self.validate()?;
        let g = derive_interference_from_paths(&self.paths, self.n_users());
        Ok(validate_interference(g)?)
    }

    pub fn game(&self) -> Result<GameSpec, BenchError> {
        let g_i = self.interference()?;
        let actions = vec![ActionInterval::new(0.0, self.action_max)?; self.n_users()];
        Ok(GameSpec::new(g_i, actions, CostModel::Wanet(self.params()))?)
    }

    pub fn comm_graph(&self, variant: CommVariant) -> Result<CommGraph, BenchError> {
        let g_i = self.interference()?;
        let g = match variant {
            CommVariant::Greedy => maximal_triangle_free_spanning_subgraph(&g_i, &EdgeOrder::Lexicographic),
            CommVariant::Dense => g_i.graph().clone(),
        };
        Ok(validate_communication(&g_i, g)?)
    }
}

/// Settings for [`compare`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSettings {
    pub seed: u64,
    pub n_iters: u64,
    pub stride: u64,
    pub policy: StepSizePolicy,
    pub init: InitRule,
    /// Normalized error target for the settling comparison.
    pub target: f64,
    /// Time to send one estimate.
    pub r: f64,
    /// Time to evaluate a full gradient.
    pub s: f64,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            n_iters: 1_000_000,
            stride: 100,
            policy: StepSizePolicy::Diminishing,
            init: InitRule::Midpoint,
            target: 0.05,
            r: 1.0,
            s: 1.0,
        }
    }
}

/// Outcome of running both algorithms on one game.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub x_star: OracleResult,
    pub graphical: RunTrace,
    pub full: RunTrace,
    pub timing: TimingModel,
    pub gamma_graphical: f64,
    /// `None` if either run never settled below the target.
    pub speedup: Option<SpeedupReport>,
    pub elapsed: Duration,
}

/// Runs the graphical algorithm and its fully coupled counterpart with the
/// same seed, communication graph and step sizes, against an oracle `x*`.
pub fn compare(spec: &GameSpec, g_c: &CommGraph, settings: &CompareSettings) -> Result<Comparison, BenchError> {
    let x_star = solve_projected_gradient(spec, &ProjectedGradientOptions::default())?;
    compare_against(spec, g_c, settings, x_star)
}

/// [`compare`] with a precomputed reference equilibrium.
pub fn compare_against(
    spec: &GameSpec,
    g_c: &CommGraph,
    settings: &CompareSettings,
    x_star: OracleResult,
) -> Result<Comparison, BenchError> {
    let start = Instant::now();
    let options = RunOptions {
        init: settings.init.clone(),
        stride: settings.stride,
        x_star: Some(x_star.x_star.clone()),
    };
    let (graphical, full) = std::thread::scope(|s| {
        let a = s.spawn(|| {
            run(
                spec,
                g_c,
                settings.policy.clone(),
                settings.seed,
                settings.n_iters,
                &options,
            )
        });
        let b = s.spawn(|| {
            run_full_coupling(
                spec,
                g_c,
                settings.policy.clone(),
                settings.seed,
                settings.n_iters,
                &options,
            )
        });
        (
            a.join().expect("graphical run panicked"),
            b.join().expect("full run panicked"),
        )
    });
    let (graphical, full) = (graphical?, full?);
    let dist = PairDistribution::UniformWakeup;
    let timing = timing_model(spec.graph(), g_c, &dist, settings.r, settings.s)?;
    let gamma_graphical = gamma_of(spec.graph(), g_c, &dist)?.gamma();
    let speedup = speedup_report(&graphical, &full, &timing, settings.target).ok();
    Ok(Comparison {
        x_star,
        graphical,
        full,
        timing,
        gamma_graphical,
        speedup,
        elapsed: start.elapsed(),
    })
}

impl Comparison {
    pub fn report(&self) -> KvReport {
        let mut r = KvReport::default();
        r.push("n_players", self.graphical.n);
        r.push("events", self.graphical.last().k);
        r.push("x_star", join(&self.x_star.x_star));
        r.push("oracle_residual", self.x_star.residual);
        r.push("gamma_graphical", self.gamma_graphical);
        r.push("t_av1", self.timing.t_av1);
        r.push("t_av2", self.timing.t_av2);
        r.push(
            "final_error_graphical",
            self.graphical.last().ne_error.unwrap_or(f64::NAN),
        );
        r.push("final_error_full", self.full.last().ne_error.unwrap_or(f64::NAN));
        match &self.speedup {
            Some(s) => {
                r.push("target", s.target);
                r.push("settle_graphical", s.events_graphical);
                r.push("settle_full", s.events_full);
                r.push("iteration_ratio", s.iteration_ratio);
                r.push("time_ratio", s.time_ratio);
                r.push("speedup", s.speedup);
            }
            None => r.push("speedup", "unavailable"),
        }
        r.push("elapsed_s", self.elapsed.as_secs_f64());
        r
    }
}

/// `γ` along a chain of communication graphs growing from the greedy
/// triangle-free subgraph to `G_I`, adding pruned edges in lexicographic
/// order. Returns `(edge_count, γ)` rows.
pub fn gamma_sweep(g_i: &InterferenceGraph, dist: &PairDistribution) -> Result<Vec<(usize, f64)>, BenchError> {
    let mut g = maximal_triangle_free_spanning_subgraph(g_i, &EdgeOrder::Lexicographic);
    let pruned: Vec<_> = g_i.edges().into_iter().filter(|&(u, v)| !g.has_edge(u, v)).collect();
    let mut rows = Vec::with_capacity(pruned.len() + 1);
    let c = validate_communication(g_i, g.clone())?;
    rows.push((g.edge_count(), gamma_of(g_i, &c, dist)?.gamma()));
    for (u, v) in pruned {
        g = g.with_edge(u, v);
        let c = validate_communication(g_i, g.clone())?;
        rows.push((g.edge_count(), gamma_of(g_i, &c, dist)?.gamma()));
    }
    Ok(rows)
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvReport {
    entries: Vec<(String, String)>,
}

impl KvReport {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }

    /// Parses lines written by [`Self::write`]; blank lines are skipped.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

/// Space-separated values, for vectors inside a key-value report.
pub fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// One `label,index,eigenvalue` row per eigenvalue.
pub fn write_spectra<W: Write>(mut w: W, spectra: &[(&str, &[f64])]) -> io::Result<()> {
    writeln!(w, "matrix,index,eigenvalue")?;
    for (label, values) in spectra {
        for (k, v) in values.iter().enumerate() {
            writeln!(w, "{label},{},{v}", k + 1)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_paths_have_no_edges() {
        let g = derive_interference_from_paths(&[vec![1], vec![2], vec![3]], 3);
        assert_eq!(g.edge_count(), 0);
        assert!(validate_interference(g).is_err());
    }

    #[test]
    fn shared_link_gives_single_edge() {
        let g = derive_interference_from_paths(&[vec![1, 2], vec![2, 3], vec![4]], 3);
        assert_eq!(g.edges(), vec![(0, 1)]);
        assert!(matches!(
            validate_interference(g),
            Err(GraphError::DisconnectedGraph { .. })
        ));
    }

    #[test]
    fn shipped_topology_is_sparse_and_connected() {
        let b = WanetBenchmark::shipped();
        b.validate().unwrap();
        assert_eq!(b.n_links(), 16);
        let g = b.interference().unwrap();
        assert_eq!(g.n(), 15);
        assert!(g.is_connected());
        for i in 0..15 {
            assert!((2..=5).contains(&g.degree(i)), "user {i} has degree {}", g.degree(i));
        }
        b.comm_graph(CommVariant::Greedy).unwrap();
        b.comm_graph(CommVariant::Dense).unwrap();
    }

    #[test]
    fn kv_report_round_trip() {
        let mut r = KvReport::default();
        r.push("a", 1.5);
        r.push("b", "x y");
        let mut buf = Vec::new();
        r.write(&mut buf).unwrap();
        assert_eq!(KvReport::parse(std::str::from_utf8(&buf).unwrap()), r);
    }
}
