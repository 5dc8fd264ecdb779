//! Runs the gossip algorithm on a five-player quadratic game and prints the
//! normalized error and consensus residual along the way.

use gossip_nash::config::RunConfig;
use gossip_nash::oracle::quadratic_interior_equilibrium;
use gossip_nash::{run, RunOptions};

const CONFIG: &str = include_str!("configs/quadratic5.toml");

fn main() -> anyhow::Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let sc = cfg.scenario()?;
    let x_star = quadratic_interior_equilibrium(&sc.spec).expect("interior equilibrium");
    println!("x* = {x_star:?}");
    println!("G_C = {:?}", sc.g_c.one_based_edges());

    let options = RunOptions {
        stride: 20_000,
        x_star: Some(x_star),
        ..sc.run_options(cfg.stride, None)
    };
    for seed in [1, 2, 3] {
        let trace = run(&sc.spec, &sc.g_c, sc.policy.clone(), seed, cfg.n_iters, &options)?;
        println!("seed {seed}");
        for r in &trace.records {
            println!(
                "  k={:>7}  error={:.3e}  ||x~-Z||={:.3e}  sum||x~-Z||^2={:.6}",
                r.k,
                r.ne_error.unwrap_or(f64::NAN),
                r.consensus,
                r.consensus_sq_sum
            );
        }
    }
    Ok(())
}
