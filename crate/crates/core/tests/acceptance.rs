//! Acceptance checks. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use gossip_nash::bench::compare_against;
use gossip_nash::bench::CompareSettings;
use gossip_nash::config::{GameConfig, RunConfig};
use gossip_nash::graph::validate_interference;
use gossip_nash::oracle::{solve_best_response_grid, solve_projected_gradient, ProjectedGradientOptions};
use gossip_nash::spectral::{gamma_of, per_seed, timing_model};
use gossip_nash::{
    ActionInterval, CostModel, Engine, GameSpec, IndexMap, InitRule, PairDistribution, PlayerGraph, RunOptions,
    StepSizePolicy,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 gossip matrix identities", matrix_identities),
        ("2 consensus projection", consensus_projection),
        ("3 contraction factor", contraction_factor),
        ("4 fully coupled reduction", kronecker_reduction),
        ("5 exchange equals matrix product", exchange_oracle),
        ("6 convergence on quadratic game", convergence),
        ("7 summable disagreement", summable_disagreement),
        ("8 oracle cross-validation", oracle_cross_validation),
        ("9 timing model", timing),
        ("10 congestion benchmark", wanet_benchmark),
        ("11 gradient finite differences", gradient_checks),
        ("12 deterministic traces", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  criterion {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}

/// `WᵀW = W`, `WH = H`, `HᵀW = Hᵀ`. `H` is rebuilt here from slot owners.
fn matrix_identities() -> Outcome {
    let mut rng = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (g_i, g_c) = random_pair(&mut rng, 12);
        let map = IndexMap::new(&g_i);
        let edges = g_c.edges();
        let (i, j) = edges[rng.random_range(0..edges.len())];
        let w = map.comm_matrix(&g_c, i, j).unwrap().to_dense();
        let h = DMatrix::from_fn(map.m(), map.n(), |s, z| if map.owner(s).1 == z { 1.0 } else { 0.0 });
        worst = worst
            .max(max_abs(&(w.transpose() * &w), &w))
            .max(max_abs(&(&w * &h), &h))
            .max(max_abs(&(h.transpose() * &w), &h.transpose()));
    }
    check(
        worst <= 1e-12,
        format!("max deviation {worst:.2e} over 200 samples, N <= 12"),
    )
}

/// `Q Z = 0` for `Z = H H̄ x̃`, and `‖I − H H̄‖₂ = 1`.
fn consensus_projection() -> Outcome {
    let mut rng = rng(2);
    let (mut worst_qz, mut worst_norm) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (g_i, g_c) = random_pair(&mut rng, 12);
        let map = IndexMap::new(&g_i);
        let x: Vec<f64> = (0..map.m()).map(|_| rng.random_range(-10.0..10.0)).collect();
        // Z by direct per-player averaging of estimates.
        let mut z = vec![0.0; map.n()];
        for (s, v) in x.iter().enumerate() {
            let subject = map.owner(s).1;
            z[subject] += v / map.m_vec()[subject] as f64;
        }
        let big_z = DVector::from_fn(map.m(), |s, _| z[map.owner(s).1]);
        let edges = g_c.edges();
        let (i, j) = edges[rng.random_range(0..edges.len())];
        let q = map.q_matrix(&map.comm_matrix(&g_c, i, j).unwrap());
        worst_qz = worst_qz.max((q * big_z).amax());
        let r = map.r();
        let norm = r.singular_values().max();
        worst_norm = worst_norm.max((norm - 1.0).abs());
    }
    check(
        worst_qz <= 1e-12 && worst_norm <= 1e-10,
        format!("max |QZ| {worst_qz:.2e}, max | ||R|| - 1 | {worst_norm:.2e} over 100 states"),
    )
}

fn second_block_eigenvalue(w: &DMatrix<f64>, n: usize) -> f64 {
    let sym = (w + w.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[n]
}

/// `γ < 1` on the suite; `λ_max(E[QᵀQ])` matches the `(N+1)`-th eigenvalue
/// of `W̄`. Under uniform edge selection `W̄` is assembled here from its
/// closed form `I − Σ (E_l^i − E_l^j)(E_l^i − E_l^j)ᵀ / (2|E_C|)`.
fn contraction_factor() -> Outcome {
    let suite = suite_pairs();
    let (mut worst_gamma, mut worst_gap) = (0.0f64, 0.0f64);
    for (name, g_i, g_c) in &suite {
        let map = IndexMap::new(g_i);
        let wake = gamma_of(g_i, g_c, &PairDistribution::UniformWakeup).unwrap();
        worst_gamma = worst_gamma.max(wake.gamma());
        worst_gap = worst_gap.max((wake.gamma() - wake.lambda_max_qtq).abs());

        let edge = gamma_of(g_i, g_c, &PairDistribution::UniformEdge).unwrap();
        let mut wbar = DMatrix::<f64>::identity(map.m(), map.m());
        let denom = 2.0 * g_c.edge_count() as f64;
        for (u, v) in g_c.edges() {
            for z in g_i.closed_neighborhood(u) {
                if let (Some(a), Some(b)) = (map.slot(u, z), map.slot(v, z)) {
                    wbar[(a, a)] -= 1.0 / denom;
                    wbar[(b, b)] -= 1.0 / denom;
                    wbar[(a, b)] += 1.0 / denom;
                    wbar[(b, a)] += 1.0 / denom;
                }
            }
        }
        let lambda2 = second_block_eigenvalue(&wbar, map.n());
        let gap = (lambda2 - edge.lambda_max_qtq).abs();
        if gap > 1e-10 {
            return Err(format!(
                "{name}: closed-form lambda2 {lambda2} vs {}",
                edge.lambda_max_qtq
            ));
        }
        worst_gamma = worst_gamma.max(edge.gamma());
        worst_gap = worst_gap.max(gap);
    }
    check(
        worst_gamma < 1.0 && worst_gap <= 1e-10,
        format!(
            "{} pairs, max gamma {worst_gamma:.6}, max |gamma - lambda2| {worst_gap:.2e}",
            suite.len()
        ),
    )
}

/// Complete interference graph: the stacked exchange matrix, permuted to
/// holder-major order, equals `(I − ½(e_i − e_j)(e_i − e_j)ᵀ) ⊗ I_N`.
fn kronecker_reduction() -> Outcome {
    let mut checked = 0;
    for n in 2..=5 {
        let g = PlayerGraph::complete(n);
        let map = IndexMap::new(&g);
        let mut perm = vec![0; n * n];
        for holder in 0..n {
            for subject in 0..n {
                perm[map.slot(holder, subject).unwrap()] = holder * n + subject;
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = map.comm_matrix(&g, i, j).unwrap().to_dense();
                let mut permuted = DMatrix::zeros(n * n, n * n);
                for a in 0..n * n {
                    for b in 0..n * n {
                        permuted[(perm[a], perm[b])] = w[(a, b)];
                    }
                }
                let e = DVector::from_fn(n, |k, _| {
                    if k == i {
                        1.0
                    } else if k == j {
                        -1.0
                    } else {
                        0.0
                    }
                });
                let base = DMatrix::<f64>::identity(n, n) - &e * e.transpose() * 0.5;
                let kron = base.kronecker(&DMatrix::<f64>::identity(n, n));
                if permuted != kron {
                    return Err(format!("N={n}, pair ({i},{j}) differs"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} ordered pairs for N in 2..=5 equal exactly"))
}

/// The engine's in-place averaging against a dense `W(k) x̃(k)`.
fn exchange_oracle() -> Outcome {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    let mut events = 0;
    for game in 0..10 {
        let (g_i, g_c) = random_pair(&mut rng, 12);
        let spec = random_quadratic(&mut rng, g_i, 2.0, 0.3, -5.0, 5.0);
        let mut engine = Engine::new(&spec, &g_c, StepSizePolicy::Diminishing, &InitRule::UniformRandom, game).unwrap();
        for _ in 0..1000 {
            let (i, j) = engine.select_pair();
            let x = DVector::from_column_slice(engine.state().x_tilde());
            let w = engine.index_map().comm_matrix(&g_c, i, j).unwrap().to_dense();
            let expected = w * x;
            let got = engine.gossip_exchange(i, j).unwrap();
            worst = got
                .iter()
                .zip(expected.iter())
                .fold(worst, |m, (a, b)| m.max((a - b).abs()));
            engine.local_step(got, i, j).unwrap();
            events += 1;
        }
    }
    check(
        worst <= 1e-15,
        format!("max deviation {worst:.2e} over {events} events"),
    )
}

/// `x*` of the five-player game from `D x = −c`, with `D` assembled from the
/// config rows: `2 q_ii` on the diagonal, `q_ij` off it.
fn quadratic5_reference(cfg: &RunConfig) -> Vec<f64> {
    let GameConfig::Quadratic { q, c } = &cfg.game else {
        panic!("quadratic config expected")
    };
    let n = c.len();
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * q[i][i] } else { q[i][j] });
    let rhs = DVector::from_iterator(n, c.iter().map(|v| -v));
    d.lu().solve(&rhs).unwrap().iter().copied().collect()
}

struct QuadRuns {
    traces: Vec<gossip_nash::RunTrace>,
    elapsed: Duration,
}

fn quadratic_runs() -> &'static QuadRuns {
    use std::sync::OnceLock;
    static RUNS: OnceLock<QuadRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let cfg = quadratic5();
        let sc = cfg.scenario().unwrap();
        let x_star = quadratic5_reference(&cfg);
        let options = RunOptions {
            init: InitRule::Midpoint,
            stride: 100,
            x_star: Some(x_star),
        };
        let start = Instant::now();
        let seeds: Vec<u64> = (1..=10).collect();
        let traces = per_seed(&seeds, |seed| {
            gossip_nash::run(&sc.spec, &sc.g_c, StepSizePolicy::Diminishing, seed, 200_000, &options)
        })
        .unwrap();
        QuadRuns {
            traces,
            elapsed: start.elapsed(),
        }
    })
}

fn convergence() -> Outcome {
    let runs = quadratic_runs();
    let mut finals: Vec<f64> = runs.traces.iter().map(|t| t.last().ne_error.unwrap()).collect();
    finals.sort_by(f64::total_cmp);
    let median = 0.5 * (finals[4] + finals[5]);
    let monotone = runs.traces.iter().all(|t| {
        let mut best = f64::INFINITY;
        t.records.iter().all(|r| {
            let e = r.ne_error.unwrap();
            let next = best.min(e);
            let ok = next <= best;
            best = next;
            ok
        })
    });
    let initial = runs.traces[0].initial().ne_error.unwrap();
    check(
        median <= 0.02 && monotone && runs.elapsed.as_secs_f64() <= 60.0,
        format!(
            "median error {:.3e}% after 2e5 events over 10 seeds (initial {:.1}%), running minimum nonincreasing: {monotone}, {:.1}s",
            100.0 * median,
            100.0 * initial,
            runs.elapsed.as_secs_f64()
        ),
    )
}

fn summable_disagreement() -> Outcome {
    let runs = quadratic_runs();
    let (mut worst_c, mut worst_a) = (0.0f64, 0.0f64);
    for t in &runs.traces {
        let cut = t.records.iter().find(|r| r.k >= 180_000).unwrap();
        let last = t.last();
        worst_c = worst_c.max(last.consensus_sq_sum - cut.consensus_sq_sum);
        worst_a = worst_a.max(last.action_sq_sum - cut.action_sq_sum);
    }
    check(
        worst_c < 1e-6 && worst_a < 1e-6,
        format!("increase over final 10%: estimates {worst_c:.2e}, actions {worst_a:.2e}"),
    )
}

fn small_suite() -> Vec<GameSpec> {
    let mut out = Vec::new();
    let interval = |lo, hi| ActionInterval::new(lo, hi).unwrap();
    let quad = |n: usize, g: PlayerGraph, q: Vec<f64>, c: Vec<f64>, a: Vec<ActionInterval>| {
        GameSpec::new(
            validate_interference(g).unwrap(),
            a,
            CostModel::Quadratic {
                q: DMatrix::from_row_slice(n, n, &q),
                c,
            },
        )
        .unwrap()
    };
    // Interior equilibrium.
    out.push(quad(
        2,
        PlayerGraph::complete(2),
        vec![1.0, 0.3, 0.2, 1.0],
        vec![-4.0, -3.0],
        vec![interval(0.0, 2.0 + 1.0); 2],
    ));
    // One player on its upper bound.
    out.push(quad(
        2,
        PlayerGraph::complete(2),
        vec![1.0, 0.5, 0.4, 1.0],
        vec![-6.0, -3.0],
        vec![interval(0.0, 2.0), interval(0.0, 2.0)],
    ));
    // Both on lower bounds.
    out.push(quad(
        2,
        PlayerGraph::complete(2),
        vec![1.0, 0.1, 0.1, 1.0],
        vec![1.0, 2.0],
        vec![interval(0.0, 1.0); 2],
    ));
    // Three players on a path, interior.
    out.push(quad(
        3,
        PlayerGraph::new(3, [(0, 1), (1, 2)]).unwrap(),
        vec![1.0, 0.2, 0.0, -0.3, 1.5, 0.2, 0.0, 0.4, 1.0],
        vec![-2.0, -3.0, -1.5],
        vec![interval(0.0, 2.0); 3],
    ));
    // Three players, complete, negative actions allowed, one bound active.
    out.push(quad(
        3,
        PlayerGraph::complete(3),
        vec![1.0, 0.3, -0.2, 0.1, 1.0, 0.2, 0.3, -0.3, 1.0],
        vec![1.0, -0.5, 4.0],
        vec![interval(-1.0, 1.0); 3],
    ));
    // A three-user congestion game on two links.
    let g = validate_interference(PlayerGraph::new(3, [(0, 1), (1, 2)]).unwrap()).unwrap();
    out.push(
        GameSpec::new(
            g,
            vec![interval(0.0, 2.0); 3],
            CostModel::Wanet(gossip_nash::WanetParams {
                paths: vec![vec![0], vec![0, 1], vec![1]],
                capacities: vec![4.0, 4.0],
                kappa: 1.0,
                chi: vec![1.0, 2.0, 1.0],
            }),
        )
        .unwrap(),
    );
    out
}

/// Projected gradient against grid best responses with cell width at most
/// `1e-3`, then unilateral deviations at the solution.
fn oracle_cross_validation() -> Outcome {
    let suite = small_suite();
    let mut worst = 0.0f64;
    let mut worst_gain = f64::NEG_INFINITY;
    let mut rng = rng(8);
    for (g, spec) in suite.iter().enumerate() {
        let opts = ProjectedGradientOptions {
            tol: 1e-14,
            ..Default::default()
        };
        let pg = solve_projected_gradient(spec, &opts).map_err(|e| format!("game {g}: {e}"))?;
        let width = spec.actions().iter().map(|a| a.hi() - a.lo()).fold(0.0, f64::max);
        let points = (width / 1e-3 - 1e-9).ceil() as usize + 1;
        let grid = solve_best_response_grid(spec, points, 500).map_err(|e| format!("game {g}: {e}"))?;
        let cell = width / (points - 1) as f64;
        let d = pg
            .x_star
            .iter()
            .zip(&grid.x_star)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // One cell apart is allowed; the slack absorbs rounding of the grid.
        if d > cell * (1.0 + 1e-9) {
            return Err(format!(
                "game {g}: solvers differ by {d:e}, cell {cell:e}, pg {:?}, grid {:?}",
                pg.x_star, grid.x_star
            ));
        }
        worst = worst.max(d);
        for i in 0..spec.n() {
            let base = spec.cost(i, &pg.x_star).unwrap();
            let a = spec.actions()[i];
            for _ in 0..100 {
                let mut y = pg.x_star.clone();
                y[i] = rng.random_range(a.lo()..=a.hi());
                let gain = match spec.cost(i, &y) {
                    Ok(c) => base - c,
                    Err(_) => continue,
                };
                worst_gain = worst_gain.max(gain);
            }
        }
    }
    check(
        worst <= 1e-3 * (1.0 + 1e-9) && worst_gain <= 1e-9,
        format!(
            "{} games, max solver gap {worst:.2e}, best unilateral gain {worst_gain:.2e}",
            suite.len()
        ),
    )
}

fn timing() -> Outcome {
    let mut count = 0;
    for (name, g_i, g_c) in suite_pairs() {
        for (r, s) in [(1.0, 1.0), (1.0, 10.0), (5.0, 0.5)] {
            for dist in [PairDistribution::UniformWakeup, PairDistribution::UniformEdge] {
                let t = timing_model(&g_i, &g_c, &dist, r, s).unwrap();
                if t.t_av1 > t.t_av2 {
                    return Err(format!("{name}: T_av1 {} > T_av2 {}", t.t_av1, t.t_av2));
                }
                count += 1;
            }
        }
    }
    let g = validate_interference(PlayerGraph::complete(2)).unwrap();
    let t = timing_model(&g, &g, &PairDistribution::UniformWakeup, 1.0, 1.0).unwrap();
    check(
        t.t_av1 == 1.0 && t.t_av2 == 2.0,
        format!(
            "T_av1 <= T_av2 in {count} cases; two players: T_av1 = {}, T_av2 = {}",
            t.t_av1, t.t_av2
        ),
    )
}

/// Own-action gradient of the congestion cost, written out from the paths.
fn wanet_gradient(paths: &[Vec<usize>], caps: &[f64], kappa: f64, chi: &[f64], x: &[f64], i: usize) -> f64 {
    let load = |l: usize| {
        paths
            .iter()
            .zip(x)
            .filter(|(p, _)| p.contains(&l))
            .map(|(_, v)| v)
            .sum::<f64>()
    };
    paths[i]
        .iter()
        .map(|&l| kappa / (caps[l - 1] - load(l)).powi(2))
        .sum::<f64>()
        - chi[i] / (x[i] + 1.0)
}

fn wanet_benchmark() -> Outcome {
    let cfg = RunConfig::from_toml_str(WANET).unwrap();
    let GameConfig::Wanet {
        paths,
        capacities,
        kappa,
        chi,
    } = &cfg.game
    else {
        panic!("congestion config expected")
    };
    let sc = cfg.scenario().unwrap();
    if !sc.spec.graph().is_connected() || sc.spec.n() != 15 {
        return Err("shipped interference graph is not a connected 15-vertex graph".into());
    }
    let x_star = cfg.reference_equilibrium(&sc.spec).unwrap();
    // Interior equilibrium: every own-gradient vanishes.
    let kkt = (0..15)
        .map(|i| wanet_gradient(paths, capacities, *kappa, chi, &x_star.x_star, i).abs())
        .fold(0.0, f64::max);
    if kkt > 1e-8 || x_star.x_star.iter().any(|&v| v <= 0.0 || v >= 10.0) {
        return Err(format!("reference is not an interior equilibrium (gradient {kkt:.2e})"));
    }
    let settings = CompareSettings {
        seed: cfg.seed,
        n_iters: 1_000_000,
        stride: 10,
        policy: StepSizePolicy::Diminishing,
        init: InitRule::Midpoint,
        target: 0.05,
        r: 1.0,
        s: 1.0,
    };
    let start = Instant::now();
    let cmp = compare_against(&sc.spec, &sc.g_c, &settings, x_star).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let Some(s) = cmp.speedup else {
        return Err("an algorithm never settled below 5%".into());
    };
    check(
        s.events_graphical <= 1_000_000 && s.iteration_ratio > 1.0 && s.speedup > 1.0 && secs <= 300.0,
        format!(
            "5% reached after {} events (graphical) vs {} (fully coupled), ratio {:.2}, speedup {:.1}, final errors {:.3}% / {:.3}%, {secs:.1}s",
            s.events_graphical,
            s.events_full,
            s.iteration_ratio,
            s.speedup,
            100.0 * cmp.graphical.last().ne_error.unwrap(),
            100.0 * cmp.full.last().ne_error.unwrap()
        ),
    )
}

fn fd_check(spec: &GameSpec, points: &[Vec<f64>]) -> f64 {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for x in points {
        for i in 0..spec.n() {
            let g = spec.grad_own(i, x).unwrap();
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (spec.cost(i, &up).unwrap() - spec.cost(i, &down).unwrap()) / (2.0 * h);
            worst = worst.max((g - fd).abs() / g.abs().max(1.0));
        }
    }
    worst
}

fn gradient_checks() -> Outcome {
    let mut rng = rng(11);
    let mut games: Vec<(String, GameSpec)> = vec![("quadratic5".into(), quadratic5().game_spec().unwrap())];
    for (k, spec) in small_suite().into_iter().enumerate() {
        games.push((format!("small{k}"), spec));
    }
    for k in 0..3 {
        let (g_i, _) = random_pair(&mut rng, 10);
        games.push((
            format!("random{k}"),
            random_quadratic(&mut rng, g_i, 1.5, 0.5, -3.0, 3.0),
        ));
    }
    games.push((
        "wanet".into(),
        RunConfig::from_toml_str(WANET).unwrap().game_spec().unwrap(),
    ));

    let mut worst = 0.0f64;
    for (name, spec) in &games {
        let mut points = Vec::new();
        while points.len() < 100 {
            let mut x: Vec<f64> = spec
                .actions()
                .iter()
                .map(|a| {
                    let pad = 1e-3 * (a.hi() - a.lo());
                    rng.random_range(a.lo() + pad..a.hi() - pad)
                })
                .collect();
            if let CostModel::Wanet(p) = spec.model() {
                // Scale toward the lower corner until every link keeps a
                // tenth of its capacity free.
                let users = p.link_users();
                loop {
                    let tight = users
                        .iter()
                        .zip(&p.capacities)
                        .any(|(u, c)| u.iter().map(|&j| x[j]).sum::<f64>() > 0.9 * c);
                    if !tight {
                        break;
                    }
                    let lo: Vec<f64> = spec
                        .actions()
                        .iter()
                        .map(|a| a.lo() + 1e-3 * (a.hi() - a.lo()))
                        .collect();
                    for (v, l) in x.iter_mut().zip(&lo) {
                        *v = l + 0.8 * (*v - l);
                    }
                }
            }
            points.push(x);
        }
        let w = fd_check(spec, &points);
        if w > 1e-6 {
            return Err(format!("{name}: relative error {w:.2e}"));
        }
        worst = worst.max(w);
    }
    check(
        worst <= 1e-6,
        format!(
            "{} games x 100 interior points, max relative error {worst:.2e}",
            games.len()
        ),
    )
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gossip-nash"))
        .args(args)
        .output()
        .unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let quad = root.join("quadratic5.toml");
    std::fs::write(&quad, QUADRATIC5).unwrap();
    let wanet = root.join("wanet.toml");
    std::fs::write(&wanet, WANET).unwrap();
    let runs: [(&Path, &str, &str); 3] = [
        (&quad, "graphical", "20000"),
        (&quad, "full", "20000"),
        (&wanet, "graphical", "20000"),
    ];
    let mut files = 0;
    for (k, (cfg, alg, iters)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = root.join(format!("run{k}-{rep}"));
            let o = cli(&[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "42",
                "--iters",
                iters,
                "--stride",
                "7",
                "--algorithm",
                alg,
                "--out",
                out.to_str().unwrap(),
            ]);
            if !o.status.success() {
                return Err(format!("run failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
            outputs.push(std::fs::read(out.join("trace.csv")).unwrap());
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Err(format!("trace {k} differs between runs"));
        }
        files += 1;
    }
    Ok(format!(
        "{files} configurations produce byte-identical trace.csv across two CLI runs"
    ))
}
