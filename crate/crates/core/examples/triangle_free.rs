//! Prunes an interference graph to a maximal triangle-free spanning
//! subgraph and checks which communication graphs are admissible.

use gossip_nash::graph::{is_triangle_free, validate_communication, validate_interference};
use gossip_nash::{maximal_triangle_free_spanning_subgraph, EdgeOrder, PlayerGraph};

fn main() -> anyhow::Result<()> {
    // A 3x2 grid of players with both diagonals in each cell.
    let g_i = validate_interference(PlayerGraph::from_one_based(
        6,
        &[
            [1, 2],
            [2, 3],
            [4, 5],
            [5, 6],
            [1, 4],
            [2, 5],
            [3, 6],
            [1, 5],
            [2, 4],
            [2, 6],
            [3, 5],
        ],
    )?)?;
    let g_m = maximal_triangle_free_spanning_subgraph(&g_i, &EdgeOrder::Lexicographic);
    println!("G_I: {} edges {:?}", g_i.edge_count(), g_i.one_based_edges());
    println!("G_m: {} edges {:?}", g_m.edge_count(), g_m.one_based_edges());
    println!(
        "triangle-free: {}, connected: {}",
        is_triangle_free(&g_m),
        g_m.is_connected()
    );

    for (u, v) in g_i.edges().into_iter().filter(|&(u, v)| !g_m.has_edge(u, v)) {
        let w = g_m.common_neighbor(u, v).expect("maximality gives a common neighbor");
        println!("pruned {}-{} is covered through {}", u + 1, v + 1, w + 1);
    }

    let g_c = validate_communication(&g_i, g_m.clone())?;
    println!("G_m accepted as communication graph ({} edges)", g_c.edge_count());

    // Removing an edge of G_m leaves some pruned edge uncovered.
    let (u, v) = g_m.edges()[0];
    let thinner = PlayerGraph::new(6, g_m.edges().into_iter().filter(|&e| e != (u, v)))?;
    match validate_communication(&g_i, thinner) {
        Ok(_) => println!("thinner graph also accepted"),
        Err(e) => println!("without {}-{}: {e}", u + 1, v + 1),
    }
    Ok(())
}
