//! Expected time per iteration of the graphical algorithm versus the fully
//! coupled one, for a few interference patterns.

use gossip_nash::graph::validate_interference;
use gossip_nash::spectral::timing_model;
use gossip_nash::{maximal_triangle_free_spanning_subgraph, EdgeOrder, PairDistribution, PlayerGraph};

fn main() -> anyhow::Result<()> {
    let cases: Vec<(&str, PlayerGraph)> = vec![
        ("two players", PlayerGraph::complete(2)),
        ("path of 8", PlayerGraph::new(8, (0..7).map(|i| (i, i + 1)))?),
        ("ring of 12", PlayerGraph::new(12, (0..12).map(|i| (i, (i + 1) % 12)))?),
        ("complete 6", PlayerGraph::complete(6)),
    ];
    let dist = PairDistribution::UniformWakeup;
    for (name, g) in cases {
        let g_i = validate_interference(g)?;
        let g_c = maximal_triangle_free_spanning_subgraph(&g_i, &EdgeOrder::Lexicographic);
        for (r, s) in [(1.0, 1.0), (1.0, 10.0)] {
            let t = timing_model(&g_i, &g_c, &dist, r, s)?;
            println!(
                "{name:<12} r={r} s={s:<4}  T_av1={:.4}  T_av2={:.4}  ratio={:.2}",
                t.t_av1,
                t.t_av2,
                t.t_av2 / t.t_av1
            );
        }
    }
    Ok(())
}
