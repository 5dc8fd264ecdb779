//! Run configuration: one TOML document per experiment.
//!
//! Players and links are 1-based in the file and 0-based in the library.
//!
//! ```toml
//! seed = 7
//! n_iters = 200000
//! stride = 100
//! algorithm = "graphical"
//!
//! [graph]
//! n_players = 3
//! interference = [[1, 2], [2, 3], [1, 3]]
//! auto_gm = true
//!
//! [game]
//! kind = "quadratic"
//! q = [[1.0, 0.2, 0.1], [0.2, 1.0, 0.1], [0.1, 0.2, 1.0]]
//! c = [-4.0, -5.0, -6.0]
//!
//! [actions]
//! lo = 0.0
//! hi = 10.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bench::{derive_interference_from_paths, BenchError, WanetBenchmark};
use crate::engine::{EngineError, InitRule, RunOptions, StepSizePolicy, DEFAULT_STRIDE};
use crate::game::{ActionInterval, CostModel, GameError, GameSpec};
use crate::graph::{
    maximal_triangle_free_spanning_subgraph, validate_communication, validate_interference, CommGraph, EdgeOrder,
    GraphError, PlayerGraph,
};
use crate::indexing::PairDistribution;
use crate::oracle::{
    load_result, quadratic_interior_equilibrium, save_result, solve_best_response_grid, solve_projected_gradient,
    OracleError, OracleMethod, OracleResult, ProjectedGradientOptions, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize error: {0}")]
    Emit(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Coarse error class for machine-readable reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The file could not be read or does not match the schema.
    Config,
    /// The file parses but describes an invalid graph or game.
    Validation,
    /// Simulation, analysis or solving failed.
    Runtime,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "ConfigError",
            ErrorCategory::Validation => "ValidationError",
            ErrorCategory::Runtime => "RuntimeError",
        }
    }
}

impl ConfigError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ConfigError::Io { .. } | ConfigError::Parse(_) | ConfigError::Emit(_) | ConfigError::Invalid(_) => {
                ErrorCategory::Config
            }
            ConfigError::Graph(_) | ConfigError::Game(_) | ConfigError::Bench(_) => ErrorCategory::Validation,
            ConfigError::Engine(_) | ConfigError::Oracle(_) | ConfigError::Spectral(_) => ErrorCategory::Runtime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Estimates of interference neighbors only.
    #[default]
    Graphical,
    /// Every player estimates every other player.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub n_iters: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default)]
    pub algorithm: Algorithm,
    pub graph: GraphConfig,
    pub game: GameConfig,
    pub actions: ActionsConfig,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    1
}

fn default_stride() -> u64 {
    DEFAULT_STRIDE
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub n_players: usize,
    /// 1-based edges. Congestion games may omit them; the graph is then
    /// derived from shared links.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference: Option<Vec<[usize; 2]>>,
    /// 1-based edges of `G_C`. When absent, `auto_gm` must be set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub communication: Option<Vec<[usize; 2]>>,
    /// Use the greedy triangle-free subgraph of `G_I` as `G_C`.
    #[serde(default = "default_true")]
    pub auto_gm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameConfig {
    /// `J_i = q_ii x_i² + Σ_{j≠i} q_ij x_i x_j + c_i x_i`.
    Quadratic { q: Vec<Vec<f64>>, c: Vec<f64> },
    /// Congestion costs; paths are 1-based link indices.
    Wanet {
        paths: Vec<Vec<usize>>,
        capacities: Vec<f64>,
        #[serde(default = "default_kappa")]
        kappa: f64,
        chi: Vec<f64>,
    },
}

fn default_kappa() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionsConfig {
    pub lo: f64,
    pub hi: f64,
    /// Per-player `[lo, hi]` overriding the shared bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_player: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Diminishing,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    #[serde(default)]
    pub policy: PolicyKind,
    /// Shared constant step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Per-player constant steps; wins over `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Midpoint,
    UniformRandom,
    Actions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default)]
    pub rule: InitKind,
    /// Initial actions for `rule = "actions"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_method")]
    pub method: OracleMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Directory for cached equilibria keyed by the game hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    /// A known equilibrium; skips solving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
}

fn default_method() -> OracleMethod {
    OracleMethod::ProjectedGradient
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iters() -> u64 {
    DEFAULT_MAX_ITERS
}

fn default_grid_points() -> usize {
    1001
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            method: default_method(),
            eta: None,
            tol: default_tol(),
            max_iters: default_max_iters(),
            grid_points: default_grid_points(),
            cache_dir: None,
            x_star: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    /// A uniformly random player wakes and picks a uniform `G_C` neighbor.
    #[default]
    UniformWakeup,
    /// Each `G_C` edge equally likely.
    UniformEdge,
}

impl DistributionKind {
    pub fn distribution(self) -> PairDistribution {
        match self {
            DistributionKind::UniformWakeup => PairDistribution::UniformWakeup,
            DistributionKind::UniformEdge => PairDistribution::UniformEdge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Time to send one estimate.
    #[serde(default = "default_unit")]
    pub r: f64,
    /// Time to evaluate a full gradient.
    #[serde(default = "default_unit")]
    pub s: f64,
    /// Normalized error target for settling comparisons.
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default)]
    pub distribution: DistributionKind,
}

fn default_unit() -> f64 {
    1.0
}

fn default_target() -> f64 {
    0.05
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            r: 1.0,
            s: 1.0,
            target: default_target(),
            distribution: DistributionKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: GameSpec,
    pub g_c: CommGraph,
    pub policy: StepSizePolicy,
    pub init: InitRule,
    pub distribution: PairDistribution,
}

impl Scenario {
    pub fn run_options(&self, stride: u64, x_star: Option<Vec<f64>>) -> RunOptions {
        RunOptions {
            init: self.init.clone(),
            stride,
            x_star,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check_schema()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// The shipped congestion benchmark as a config.
    pub fn wanet(bench: &WanetBenchmark) -> Self {
        RunConfig {
            seed: 1,
            n_iters: 1_000_000,
            stride: 100,
            algorithm: Algorithm::Graphical,
            graph: GraphConfig {
                n_players: bench.n_users(),
                interference: None,
                communication: None,
                auto_gm: true,
            },
            game: GameConfig::Wanet {
                paths: bench.paths.clone(),
                capacities: bench.capacities.clone(),
                kappa: bench.kappa,
                chi: bench.chi.clone(),
            },
            actions: ActionsConfig {
                lo: 0.0,
                hi: bench.action_max,
                per_player: None,
            },
            step: StepConfig::default(),
            init: InitConfig::default(),
            oracle: OracleConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Shape checks that need no graph or game construction.
    fn check_schema(&self) -> Result<(), ConfigError> {
        let n = self.graph.n_players;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if n == 0 {
            return bad("graph.n_players must be positive".into());
        }
        if self.graph.communication.is_none() && !self.graph.auto_gm {
            return bad("give graph.communication or set graph.auto_gm".into());
        }
        match &self.game {
            GameConfig::Quadratic { q, c } => {
                if q.len() != n || q.iter().any(|row| row.len() != n) {
                    return bad(format!("game.q must be {n}x{n}"));
                }
                if c.len() != n {
                    return bad(format!("game.c must have {n} entries"));
                }
                if self.graph.interference.is_none() {
                    return bad("quadratic games need graph.interference".into());
                }
            }
            GameConfig::Wanet { paths, chi, .. } => {
                if paths.len() != n || chi.len() != n {
                    return bad(format!("game.paths and game.chi must have {n} entries"));
                }
            }
        }
        if let Some(pp) = &self.actions.per_player {
            if pp.len() != n {
                return bad(format!("actions.per_player must have {n} entries"));
            }
        }
        match self.step.policy {
            PolicyKind::Diminishing => {
                if self.step.alpha.is_some() || self.step.alphas.is_some() {
                    return bad("step sizes given with the diminishing policy".into());
                }
            }
            PolicyKind::Constant => match (&self.step.alpha, &self.step.alphas) {
                (_, Some(a)) if a.len() != n => return bad(format!("step.alphas must have {n} entries")),
                (None, None) => return bad("constant policy needs step.alpha or step.alphas".into()),
                _ => {}
            },
        }
        match (self.init.rule, &self.init.values) {
            (InitKind::Actions, Some(v)) if v.len() != n => return bad(format!("init.values must have {n} entries")),
            (InitKind::Actions, None) => return bad("init.rule = \"actions\" needs init.values".into()),
            (InitKind::Midpoint | InitKind::UniformRandom, Some(_)) => {
                return bad("init.values is only read with rule = \"actions\"".into())
            }
            _ => {}
        }
        if let Some(x) = &self.oracle.x_star {
            if x.len() != n {
                return bad(format!("oracle.x_star must have {n} entries"));
            }
        }
        if self.stride == 0 {
            return bad("stride must be positive".into());
        }
        if !(self.analysis.target > 0.0) {
            return bad("analysis.target must be positive".into());
        }
        Ok(())
    }

    pub fn interference_graph(&self) -> Result<PlayerGraph, ConfigError> {
        let n = self.graph.n_players;
        match (&self.graph.interference, &self.game) {
            (Some(edges), _) => Ok(PlayerGraph::from_one_based(n, edges)?),
            (None, GameConfig::Wanet { paths, .. }) => Ok(derive_interference_from_paths(paths, n)),
            (None, _) => Err(ConfigError::Invalid("missing graph.interference".into())),
        }
    }

    pub fn game_spec(&self) -> Result<GameSpec, ConfigError> {
        let n = self.graph.n_players;
        let g_i = validate_interference(self.interference_graph()?)?;
        let actions = match &self.actions.per_player {
            Some(pp) => pp
                .iter()
                .map(|&[lo, hi]| ActionInterval::new(lo, hi))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![ActionInterval::new(self.actions.lo, self.actions.hi)?; n],
        };
        let model = match &self.game {
            GameConfig::Quadratic { q, c } => CostModel::Quadratic {
                q: DMatrix::from_fn(n, n, |i, j| q[i][j]),
                c: c.clone(),
            },
            GameConfig::Wanet {
                paths,
                capacities,
                kappa,
                chi,
            } => {
                let bench = WanetBenchmark {
                    paths: paths.clone(),
                    capacities: capacities.clone(),
                    kappa: *kappa,
                    chi: chi.clone(),
                    action_max: self.actions.hi,
                };
                bench.validate()?;
                CostModel::Wanet(bench.params())
            }
        };
        Ok(GameSpec::new(g_i, actions, model)?)
    }

    /// The configured `G_C`, validated against `G_I`.
    pub fn comm_graph(&self, spec: &GameSpec) -> Result<CommGraph, ConfigError> {
        let g = match &self.graph.communication {
            Some(edges) => PlayerGraph::from_one_based(self.graph.n_players, edges)?,
            None => maximal_triangle_free_spanning_subgraph(spec.graph(), &EdgeOrder::Lexicographic),
        };
        Ok(validate_communication(spec.graph(), g)?)
    }

    pub fn policy(&self) -> StepSizePolicy {
        let n = self.graph.n_players;
        match self.step.policy {
            PolicyKind::Diminishing => StepSizePolicy::Diminishing,
            PolicyKind::Constant => match (&self.step.alphas, self.step.alpha) {
                (Some(a), _) => StepSizePolicy::Constant(a.clone()),
                (None, Some(a)) => StepSizePolicy::uniform_constant(n, a),
                (None, None) => unreachable!("checked by the schema"),
            },
        }
    }

    pub fn init_rule(&self) -> InitRule {
        match self.init.rule {
            InitKind::Midpoint => InitRule::Midpoint,
            InitKind::UniformRandom => InitRule::UniformRandom,
            InitKind::Actions => InitRule::Actions(self.init.values.clone().unwrap_or_default()),
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let spec = self.game_spec()?;
        let g_c = self.comm_graph(&spec)?;
        Ok(Scenario {
            spec,
            g_c,
            policy: self.policy(),
            init: self.init_rule(),
            distribution: self.analysis.distribution.distribution(),
        })
    }

    /// SHA-256 over the canonical serialization of the game-defining
    /// sections (graph, costs, actions). Identical games hash identically
    /// regardless of run settings.
    pub fn game_hash(&self) -> Result<String, ConfigError> {
        #[derive(Serialize)]
        struct Key<'a> {
            n_players: usize,
            interference: Vec<[usize; 2]>,
            game: &'a GameConfig,
            actions: &'a ActionsConfig,
        }
        let key = Key {
            n_players: self.graph.n_players,
            interference: self.interference_graph()?.one_based_edges(),
            game: &self.game,
            actions: &self.actions,
        };
        let json = serde_json::to_vec(&key).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(&json)))
    }

    pub fn oracle_cache_path(&self) -> Result<Option<PathBuf>, ConfigError> {
        match &self.oracle.cache_dir {
            Some(dir) => Ok(Some(dir.join(format!("xstar-{}.json", &self.game_hash()?[..16])))),
            None => Ok(None),
        }
    }

    /// The reference equilibrium: the configured one, a cached one, the
    /// interior closed form of a quadratic game, or a fresh solve (cached
    /// when a cache directory is set).
    pub fn reference_equilibrium(&self, spec: &GameSpec) -> Result<OracleResult, ConfigError> {
        if let Some(x) = &self.oracle.x_star {
            let residual = crate::oracle::vi_residual(spec, x)?;
            return Ok(OracleResult {
                x_star: x.clone(),
                method: self.oracle.method,
                residual,
                iterations: 0,
            });
        }
        let cache = self.oracle_cache_path()?;
        if let Some(path) = &cache {
            if path.exists() {
                return Ok(load_result(path)?);
            }
        }
        let result = self.solve(spec)?;
        if let Some(path) = &cache {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|source| ConfigError::Io {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            save_result(path, &result)?;
        }
        Ok(result)
    }

    fn solve(&self, spec: &GameSpec) -> Result<OracleResult, ConfigError> {
        match self.oracle.method {
            OracleMethod::ProjectedGradient => {
                if self.oracle.eta.is_none() {
                    if let Some(x) = quadratic_interior_equilibrium(spec) {
                        let residual = crate::oracle::vi_residual(spec, &x)?;
                        return Ok(OracleResult {
                            x_star: x,
                            method: OracleMethod::ProjectedGradient,
                            residual,
                            iterations: 0,
                        });
                    }
                }
                let opts = ProjectedGradientOptions {
                    eta: self.oracle.eta,
                    tol: self.oracle.tol,
                    max_iters: self.oracle.max_iters,
                    start: None,
                };
                Ok(solve_projected_gradient(spec, &opts)?)
            }
            OracleMethod::BestResponseGrid => {
                let sweeps = self.oracle.max_iters.min(usize::MAX as u64) as usize;
                Ok(solve_best_response_grid(spec, self.oracle.grid_points, sweeps)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const K3: &str = r#"
n_iters = 10
[graph]
n_players = 3
interference = [[1, 2], [2, 3], [1, 3]]
[game]
kind = "quadratic"
q = [[1.0, 0.2, 0.1], [0.2, 1.0, 0.1], [0.1, 0.2, 1.0]]
c = [-4.0, -5.0, -6.0]
[actions]
lo = 0.0
hi = 10.0
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_toml_str(K3).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.stride, DEFAULT_STRIDE);
        assert_eq!(cfg.algorithm, Algorithm::Graphical);
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.g_c.edge_count(), 2);
        assert_eq!(sc.policy, StepSizePolicy::Diminishing);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = K3.replace("n_iters = 10", "n_iters = 10\nbogus = 1");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(ConfigError::Parse(_))));
        let text = K3.replace("kind = \"quadratic\"", "kind = \"quadratic\"\nextra = 2");
        assert!(RunConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn round_trips() {
        let cfg = RunConfig::from_toml_str(K3).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let w = RunConfig::wanet(&WanetBenchmark::shipped());
        let again = RunConfig::from_toml_str(&w.to_toml_string().unwrap()).unwrap();
        assert_eq!(w, again);
    }

    #[test]
    fn hash_ignores_run_settings() {
        let a = RunConfig::from_toml_str(K3).unwrap();
        let mut b = a.clone();
        b.seed = 99;
        b.n_iters = 5;
        assert_eq!(a.game_hash().unwrap(), b.game_hash().unwrap());
        if let GameConfig::Quadratic { c, .. } = &mut b.game {
            c[0] = -4.5;
        }
        assert_ne!(a.game_hash().unwrap(), b.game_hash().unwrap());
    }

    #[test]
    fn categories() {
        let e = RunConfig::from_toml_str("seed = ").unwrap_err();
        assert_eq!(e.category(), ErrorCategory::Config);
        let text = K3.replace("[[1, 2], [2, 3], [1, 3]]", "[[1, 2]]");
        let e = RunConfig::from_toml_str(&text).unwrap().scenario().unwrap_err();
        assert_eq!(e.category(), ErrorCategory::Validation);
    }
}
