#![allow(dead_code)]

use gossip_nash::config::RunConfig;
use gossip_nash::graph::{validate_communication, validate_interference};
use gossip_nash::{
    maximal_triangle_free_spanning_subgraph, ActionInterval, CommGraph, CostModel, EdgeOrder, GameSpec,
    InterferenceGraph, PlayerGraph,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const QUADRATIC5: &str = include_str!("../../examples/configs/quadratic5.toml");
pub const K3_GRAPH: &str = include_str!("../../examples/configs/k3_graph.toml");
pub const WANET: &str = include_str!("../../examples/configs/wanet.toml");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random spanning tree plus each remaining pair with probability `p`.
pub fn random_connected(rng: &mut impl Rng, n: usize, p: f64) -> PlayerGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        edges.push((order[k].min(parent), order[k].max(parent)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    PlayerGraph::new(n, edges).unwrap()
}

/// A valid communication graph: the greedy subgraph under a shuffled edge
/// order, plus each pruned edge with probability `extra`.
pub fn random_comm(rng: &mut impl Rng, g_i: &InterferenceGraph, extra: f64) -> CommGraph {
    let mut order = g_i.edges();
    order.shuffle(rng);
    let mut g = maximal_triangle_free_spanning_subgraph(g_i, &EdgeOrder::Explicit(order));
    for (u, v) in g_i.edges() {
        if !g.has_edge(u, v) && rng.random::<f64>() < extra {
            g = g.with_edge(u, v);
        }
    }
    validate_communication(g_i, g).unwrap()
}

/// Random validated `(G_I, G_C)` with `2 ≤ N ≤ max_n`.
pub fn random_pair(rng: &mut impl Rng, max_n: usize) -> (InterferenceGraph, CommGraph) {
    let n = rng.random_range(2..=max_n);
    let p = rng.random_range(0.0..0.8);
    let g_i = validate_interference(random_connected(rng, n, p)).unwrap();
    let extra = rng.random_range(0.0..1.0);
    let g_c = random_comm(rng, &g_i, extra);
    (g_i, g_c)
}

/// Named deterministic graph pairs: paths, rings, stars, complete graphs,
/// grids, wheels and random graphs, each with its greedy subgraph and with
/// `G_C = G_I`.
pub fn suite_pairs() -> Vec<(String, InterferenceGraph, CommGraph)> {
    let mut graphs: Vec<(String, PlayerGraph)> = vec![
        ("K2".into(), PlayerGraph::complete(2)),
        ("K3".into(), PlayerGraph::complete(3)),
        ("K5".into(), PlayerGraph::complete(5)),
        ("path6".into(), PlayerGraph::new(6, (0..5).map(|i| (i, i + 1))).unwrap()),
        (
            "ring7".into(),
            PlayerGraph::new(7, (0..7).map(|i| (i.min((i + 1) % 7), i.max((i + 1) % 7)))).unwrap(),
        ),
        ("star6".into(), PlayerGraph::new(6, (1..6).map(|i| (0, i))).unwrap()),
        (
            "wheel6".into(),
            PlayerGraph::new(
                6,
                (1..6)
                    .map(|i| (0, i))
                    .chain((1..6).map(|i| (i.min(i % 5 + 1), i.max(i % 5 + 1)))),
            )
            .unwrap(),
        ),
        (
            "grid3x3".into(),
            PlayerGraph::new(
                9,
                (0..9).flat_map(|v| {
                    let mut e = Vec::new();
                    if v % 3 < 2 {
                        e.push((v, v + 1));
                    }
                    if v < 6 {
                        e.push((v, v + 3));
                    }
                    e
                }),
            )
            .unwrap(),
        ),
    ];
    let mut r = rng(2024);
    for k in 0..6 {
        let n = 4 + 2 * k;
        graphs.push((format!("random{n}"), random_connected(&mut r, n, 0.35)));
    }
    let mut out = Vec::new();
    for (name, g) in graphs {
        let g_i = validate_interference(g).unwrap();
        let g_m = maximal_triangle_free_spanning_subgraph(&g_i, &EdgeOrder::Lexicographic);
        out.push((
            format!("{name}/greedy"),
            g_i.clone(),
            validate_communication(&g_i, g_m).unwrap(),
        ));
        let full = g_i.graph().clone();
        out.push((
            format!("{name}/dense"),
            g_i.clone(),
            validate_communication(&g_i, full).unwrap(),
        ));
    }
    out
}

/// Quadratic game on `g` with diagonal `diag`, off-diagonal couplings drawn
/// from `[-coupling, coupling]` on edges, and linear terms in `[-10, 0]`.
pub fn random_quadratic(
    rng: &mut impl Rng,
    g: InterferenceGraph,
    diag: f64,
    coupling: f64,
    lo: f64,
    hi: f64,
) -> GameSpec {
    let n = g.n();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        q[(i, i)] = diag;
        for &j in g.neighbors(i) {
            q[(i, j)] = rng.random_range(-coupling..=coupling);
        }
    }
    let c = (0..n).map(|_| rng.random_range(-10.0..0.0)).collect();
    GameSpec::new(
        g,
        vec![ActionInterval::new(lo, hi).unwrap(); n],
        CostModel::Quadratic { q, c },
    )
    .unwrap()
}

pub fn quadratic5() -> RunConfig {
    RunConfig::from_toml_str(QUADRATIC5).unwrap()
}

pub fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}
