//! Reference equilibria: projected gradient against a brute-force grid
//! best-response search, and a unilateral-deviation check.

use gossip_nash::graph::validate_interference;
use gossip_nash::oracle::{solve_best_response_grid, solve_projected_gradient, vi_residual, ProjectedGradientOptions};
use gossip_nash::{ActionInterval, CostModel, GameSpec, PlayerGraph};
use nalgebra::dmatrix;

fn main() -> anyhow::Result<()> {
    // A two-player game whose first player is pushed onto its bound.
    let g = validate_interference(PlayerGraph::complete(2))?;
    let spec = GameSpec::new(
        g,
        vec![ActionInterval::new(0.0, 2.0)?, ActionInterval::new(0.0, 4.0)?],
        CostModel::Quadratic {
            q: dmatrix![1.0, 0.5; 0.4, 1.0],
            c: vec![-6.0, -3.0],
        },
    )?;
    let pg = solve_projected_gradient(&spec, &ProjectedGradientOptions::default())?;
    let grid = solve_best_response_grid(&spec, 2001, 1000)?;
    println!("projected gradient: {:?} ({} iterations)", pg.x_star, pg.iterations);
    println!("grid best response: {:?} ({} sweeps)", grid.x_star, grid.iterations);
    println!("residual at x*: {:.3e}", vi_residual(&spec, &pg.x_star)?);

    for i in 0..spec.n() {
        let base = spec.cost(i, &pg.x_star)?;
        let a = spec.actions()[i];
        let worst_gain = (0..=100)
            .map(|t| {
                let mut y = pg.x_star.clone();
                y[i] = a.lo() + (a.hi() - a.lo()) * t as f64 / 100.0;
                base - spec.cost(i, &y).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        println!("player {}: best unilateral gain {worst_gain:.3e}", i + 1);
    }
    Ok(())
}
