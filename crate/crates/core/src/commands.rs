//! The work behind each CLI subcommand. Every command writes its artifacts
//! into the output directory and returns the key-value report it wrote.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::bench::{compare_against, gamma_sweep, join, write_spectra, CompareSettings, KvReport};
use crate::config::{Algorithm, ConfigError, GameConfig, RunConfig};
use crate::engine::{run, run_full_coupling, RunTrace};
use crate::graph::{maximal_triangle_free_spanning_subgraph, validate_communication, EdgeOrder, PlayerGraph};
use crate::oracle::save_result;
use crate::spectral::{
    expected_player_gossip_matrix, gamma_kronecker, gamma_of, phi, rate_inputs, symmetric_eigenvalues, timing_model,
};

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iters: Option<u64>,
    pub stride: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.iters {
            self.n_iters = v;
        }
        if let Some(v) = o.stride {
            if v == 0 {
                return Err(ConfigError::Invalid("stride must be positive".into()));
            }
            self.stride = v;
        }
        if let Some(v) = o.algorithm {
            self.algorithm = v;
        }
        if let Some(v) = &o.out {
            self.output.dir = v.clone();
        }
        Ok(())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, ConfigError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(io_err(&path))?;
    Ok(BufWriter::new(f))
}

fn write_report(dir: &Path, report: &KvReport) -> Result<(), ConfigError> {
    let path = dir.join("report.txt");
    report.write(create(dir, "report.txt")?).map_err(io_err(&path))
}

fn write_trace(dir: &Path, name: &str, trace: &RunTrace) -> Result<(), ConfigError> {
    let path = dir.join(name);
    trace.write_csv(create(dir, name)?).map_err(io_err(&path))
}

fn edges_str(g: &PlayerGraph) -> String {
    g.one_based_edges()
        .iter()
        .map(|[u, v]| format!("{u}-{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `run`: simulates one algorithm and writes `trace.csv` and `report.txt`.
/// The normalized error column is filled when a reference equilibrium can
/// be obtained.
pub fn run_command(cfg: &RunConfig) -> Result<KvReport, ConfigError> {
    let sc = cfg.scenario()?;
    let reference = cfg.reference_equilibrium(&sc.spec);
    let x_star = reference.as_ref().ok().map(|r| r.x_star.clone());
    let options = sc.run_options(cfg.stride, x_star.clone());
    let trace = match cfg.algorithm {
        Algorithm::Graphical => run(&sc.spec, &sc.g_c, sc.policy.clone(), cfg.seed, cfg.n_iters, &options)?,
        Algorithm::Full => run_full_coupling(&sc.spec, &sc.g_c, sc.policy.clone(), cfg.seed, cfg.n_iters, &options)?,
    };
    let dir = &cfg.output.dir;
    write_trace(dir, "trace.csv", &trace)?;

    let last = trace.last();
    let mut r = KvReport::default();
    r.push("algorithm", format!("{:?}", cfg.algorithm).to_lowercase());
    r.push("seed", cfg.seed);
    r.push("events", last.k);
    r.push("final_x", join(&last.x));
    r.push("consensus", last.consensus);
    r.push("consensus_sq_sum", last.consensus_sq_sum);
    r.push("action_sq_sum", last.action_sq_sum);
    match (&reference, last.ne_error) {
        (Ok(res), Some(e)) => {
            r.push("x_star", join(&res.x_star));
            r.push("normalized_error", e);
            if let Some(k) = trace.settling_event(cfg.analysis.target) {
                r.push("settling_event", k);
            }
        }
        (Err(e), _) => r.push("reference", format!("unavailable: {e}")),
        _ => {}
    }
    write_report(dir, &r)?;
    Ok(r)
}

/// `analyze`: `γ` both ways, the Kronecker-form `γ`, the timing model, and
/// `φ` when the step sizes are constant. Writes `report.txt` and
/// `spectra.csv`.
pub fn analyze_command(cfg: &RunConfig) -> Result<KvReport, ConfigError> {
    let sc = cfg.scenario()?;
    let g_i = sc.spec.graph();
    let gamma = gamma_of(g_i, &sc.g_c, &sc.distribution)?;
    let gamma_k = gamma_kronecker(&sc.g_c, &sc.distribution)?;
    let timing = timing_model(g_i, &sc.g_c, &sc.distribution, cfg.analysis.r, cfg.analysis.s)?;

    let mut r = KvReport::default();
    r.push("n_players", sc.spec.n());
    r.push("interference_edges", g_i.edge_count());
    r.push("communication_edges", sc.g_c.edge_count());
    r.push("stacked_dim", g_i.n() + 2 * g_i.edge_count());
    r.push("gamma", gamma.gamma());
    r.push("lambda_max_qtq", gamma.lambda_max_qtq);
    r.push("gamma_kronecker", gamma_k);
    r.push("t_av1", timing.t_av1);
    r.push("t_av2", timing.t_av2);
    r.push("time_ratio", timing.t_av2 / timing.t_av1);

    let reg = sc.spec.estimate_regularity(2000, cfg.seed)?;
    r.push("mu", reg.mu);
    r.push("rho", reg.rho);
    r.push("regularity_exact", reg.exact);
    if sc.policy.extremes().is_some() {
        let x0: Vec<f64> = sc.spec.actions().iter().map(|a| a.midpoint()).collect();
        let inputs = rate_inputs(&sc.spec, &sc.g_c, &sc.distribution, &sc.policy, &reg, 0.0, &x0)?;
        let ph = phi(&inputs);
        r.push("phi", ph.value);
        r.push("phi_valid", ph.valid);
    } else {
        r.push("phi", "unavailable: diminishing steps");
    }

    let player = symmetric_eigenvalues(&expected_player_gossip_matrix(&sc.g_c, &sc.distribution)?);
    let dir = &cfg.output.dir;
    let path = dir.join("spectra.csv");
    write_spectra(
        create(dir, "spectra.csv")?,
        &[("w_bar", &gamma.spectrum), ("player_gossip", &player)],
    )
    .map_err(io_err(&path))?;
    write_report(dir, &r)?;
    Ok(r)
}

/// `oracle`: computes or loads `x*`, writes `x_star.json` and `report.txt`.
pub fn oracle_command(cfg: &RunConfig) -> Result<KvReport, ConfigError> {
    let spec = cfg.game_spec()?;
    let res = cfg.reference_equilibrium(&spec)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    save_result(&dir.join("x_star.json"), &res)?;
    let mut r = KvReport::default();
    r.push("game_hash", cfg.game_hash()?);
    r.push("method", format!("{:?}", res.method));
    r.push("x_star", join(&res.x_star));
    r.push("residual", res.residual);
    r.push("iterations", res.iterations);
    write_report(dir, &r)?;
    Ok(r)
}

/// `graph`: the greedy triangle-free subgraph and the validation outcome
/// of the configured communication graph. The report is written even when
/// validation fails; the error is returned afterwards.
pub fn graph_command(cfg: &RunConfig) -> Result<KvReport, ConfigError> {
    let spec = cfg.game_spec()?;
    let g_i = spec.graph();
    let g_m = maximal_triangle_free_spanning_subgraph(g_i, &EdgeOrder::Lexicographic);
    let mut r = KvReport::default();
    r.push("n_players", g_i.n());
    r.push("interference_edges", edges_str(g_i));
    r.push("gm_edge_count", g_m.edge_count());
    r.push("gm_edges", edges_str(&g_m));
    r.push("gm_connected", g_m.is_connected());
    let candidate = match &cfg.graph.communication {
        Some(edges) => PlayerGraph::from_one_based(g_i.n(), edges)?,
        None => g_m.clone(),
    };
    r.push("communication_edges", edges_str(&candidate));
    let outcome = validate_communication(g_i, candidate);
    match &outcome {
        Ok(_) => r.push("validation", "PASS"),
        Err(e) => {
            r.push("validation", "FAIL");
            r.push("reason", e);
        }
    }
    write_report(&cfg.output.dir, &r)?;
    outcome?;
    Ok(r)
}

/// `bench wanet`: both algorithms on a congestion game with identical
/// seeds. Writes `report.txt`, `trace_graphical.csv`, `trace_full.csv` and
/// `gamma_sweep.csv`.
pub fn bench_wanet_command(cfg: &RunConfig) -> Result<KvReport, ConfigError> {
    if !matches!(cfg.game, GameConfig::Wanet { .. }) {
        return Err(ConfigError::Invalid(
            "bench wanet needs a game of kind \"wanet\"".into(),
        ));
    }
    let sc = cfg.scenario()?;
    let x_star = cfg.reference_equilibrium(&sc.spec)?;
    let settings = CompareSettings {
        seed: cfg.seed,
        n_iters: cfg.n_iters,
        stride: cfg.stride,
        policy: sc.policy.clone(),
        init: sc.init.clone(),
        target: cfg.analysis.target,
        r: cfg.analysis.r,
        s: cfg.analysis.s,
    };
    let cmp = compare_against(&sc.spec, &sc.g_c, &settings, x_star)?;
    let dir = &cfg.output.dir;
    write_trace(dir, "trace_graphical.csv", &cmp.graphical)?;
    write_trace(dir, "trace_full.csv", &cmp.full)?;

    let sweep = gamma_sweep(sc.spec.graph(), &sc.distribution)?;
    let path = dir.join("gamma_sweep.csv");
    let mut w = create(dir, "gamma_sweep.csv")?;
    let text: String = std::iter::once("communication_edges,gamma\n".to_string())
        .chain(sweep.iter().map(|(e, g)| format!("{e},{g}\n")))
        .collect();
    std::io::Write::write_all(&mut w, text.as_bytes()).map_err(io_err(&path))?;

    let r = cmp.report();
    write_report(dir, &r)?;
    Ok(r)
}
