//! Contraction factor of the expected gossip matrix as the communication
//! graph grows from the triangle-free subgraph to the full interference
//! graph, and the constant-step rate quantity.

use gossip_nash::bench::{gamma_sweep, WanetBenchmark};
use gossip_nash::config::RunConfig;
use gossip_nash::graph::{validate_communication, validate_interference};
use gossip_nash::spectral::{gamma_kronecker, gamma_of, phi, rate_inputs};
use gossip_nash::{ActionInterval, CostModel, GameSpec, PairDistribution, PlayerGraph, StepSizePolicy};
use nalgebra::DMatrix;

fn main() -> anyhow::Result<()> {
    let dist = PairDistribution::UniformWakeup;
    let bench = WanetBenchmark::shipped();
    let g_i = bench.interference()?;
    println!("congestion game, {} interference edges", g_i.edge_count());
    for (edges, gamma) in gamma_sweep(&g_i, &dist)? {
        println!("  |E_C| = {edges:>2}  gamma = {gamma:.6}");
    }

    let cfg = RunConfig::from_toml_str(include_str!("configs/quadratic5.toml"))?;
    let sc = cfg.scenario()?;
    let report = gamma_of(sc.spec.graph(), &sc.g_c, &dist)?;
    println!("quadratic game");
    println!("  gamma (W-bar)        = {:.12}", report.gamma());
    println!("  lambda_max E[Q^T Q]  = {:.12}", report.lambda_max_qtq);
    println!("  gamma (player level) = {:.12}", gamma_kronecker(&sc.g_c, &dist)?);

    let reg = sc.spec.estimate_regularity(0, 0)?;
    let x0: Vec<f64> = sc.spec.actions().iter().map(|a| a.midpoint()).collect();
    for alpha in [0.001, 0.01, 0.05, 0.2] {
        let policy = StepSizePolicy::uniform_constant(sc.spec.n(), alpha);
        let inputs = rate_inputs(&sc.spec, &sc.g_c, &dist, &policy, &reg, 0.0, &x0)?;
        let p = phi(&inputs);
        println!("  alpha = {alpha:<5}  phi = {:.6}  in (0,1): {}", p.value, p.valid);
    }

    // On a ring every player gossips equally often, and phi drops below 1
    // for small enough steps.
    let n = 6;
    let ring = validate_interference(PlayerGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)))?)?;
    let q = DMatrix::from_fn(n, n, |i, j| match (i == j, ring.has_edge(i, j)) {
        (true, _) => 1.0,
        (false, true) => 0.1,
        _ => 0.0,
    });
    let spec = GameSpec::new(
        ring.clone(),
        vec![ActionInterval::new(0.0, 10.0)?; n],
        CostModel::Quadratic { q, c: vec![-5.0; n] },
    )?;
    let g_c = validate_communication(&ring, ring.graph().clone())?;
    let reg = spec.estimate_regularity(0, 0)?;
    println!("ring game, mu = {:.4}, rho = {:.4}", reg.mu, reg.rho);
    for alpha in [0.01, 0.1, 0.5, 2.0] {
        let policy = StepSizePolicy::uniform_constant(n, alpha);
        let inputs = rate_inputs(&spec, &g_c, &dist, &policy, &reg, 0.0, &vec![5.0; n])?;
        let p = phi(&inputs);
        println!("  alpha = {alpha:<5}  phi = {:.6}  in (0,1): {}", p.value, p.valid);
    }
    Ok(())
}
