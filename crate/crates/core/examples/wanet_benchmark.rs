//! Graphical algorithm vs. the fully coupled baseline on the WANET game.

use gossip_nash::bench::{compare, CommVariant, CompareSettings, WanetBenchmark};

fn main() -> anyhow::Result<()> {
    let iters: u64 = std::env::args().nth(1).map_or(Ok(1_000_000), |s| s.parse())?;
    let bench = WanetBenchmark::shipped();
    let spec = bench.game()?;
    let g_c = bench.comm_graph(CommVariant::Greedy)?;
    println!(
        "G_I edges: {}, G_C edges: {}",
        spec.graph().edge_count(),
        g_c.edge_count()
    );
    let settings = CompareSettings {
        n_iters: iters,
        ..CompareSettings::default()
    };
    let cmp = compare(&spec, &g_c, &settings)?;
    cmp.report().write(std::io::stdout())?;
    for k in [1_000u64, 6_000, 30_000, 100_000, 300_000, 1_000_000] {
        let at = |t: &gossip_nash::RunTrace| t.records.iter().find(|r| r.k >= k).and_then(|r| r.ne_error);
        if let (Some(a), Some(b)) = (at(&cmp.graphical), at(&cmp.full)) {
            println!("k={k:>8}  graphical={:.4}%  full={:.4}%", 100.0 * a, 100.0 * b);
        }
    }
    Ok(())
}
