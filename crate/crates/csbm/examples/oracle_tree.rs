//! BP is exact on trees: compare converged AMP-BP marginals against exact
//! enumeration of the posterior on a small tree instance. The affinities are
//! scaled down at a fixed within/between ratio so that the non-edge terms
//! (handled by a global mean-field in the solver, exactly in the
//! enumeration) are negligible on both sides.
//!
//! ```bash
//! cargo run --release --example oracle_tree
//! ```

use csbm::amp_bp::{run_with, Criterion, RunOptions};
use csbm::graph::SparseGraph;
use csbm::model::{Features, Instance, ModelParams, Supervision};
use csbm::oracles::exact_marginals;
use rand::Rng;

fn main() -> csbm::Result<()> {
    let n = 12usize;
    let scale = 1e-8f64;
    let ratio = 4.0; // c_in / c_out

    let mut rng = csbm::rng::stream(3, "oracle-tree");
    let graph = SparseGraph::random_tree(n, &mut rng);
    let c_in = ratio * scale;
    let c_out = scale;
    let d = 0.5 * (c_in + c_out);
    let lambda = (c_in - c_out) / (2.0 * d.sqrt());
    let mut params = ModelParams::new(n, 2, d, lambda, 0.0);
    params.train_fraction = 0.25;
    let labels: Vec<i8> = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let instance = Instance::from_parts(graph, Features::zeros(2, n), labels, vec![0.0; 2], params, 3)?;

    let mut supervision = Supervision::unsupervised(n);
    for i in 0..n {
        if rng.random::<f64>() < 0.25 {
            supervision.revealed[i] = true;
            supervision.node_prior_plus[i] = if instance.truth_labels[i] > 0 { 1.0 } else { 0.0 };
        }
    }

    let exact = exact_marginals(&instance, &supervision)?;
    let options = RunOptions {
        msg_tol: 1e-13,
        max_iters: 500,
        init_noise: 0.0,
        criterion: Criterion::MessageChange,
        ..Default::default()
    };
    let affinity = instance.params.affinity();
    let fp = run_with(&instance, &supervision, &affinity, 0.0, None, &options, None)?;

    println!("node  revealed  exact     amp_bp    |diff|");
    let mut worst = 0.0f64;
    for i in 0..n {
        let diff = (exact.prob_plus[i] - fp.state.chi_node[i]).abs();
        worst = worst.max(diff);
        println!(
            "{i:<5} {:<9} {:.6}  {:.6}  {diff:.2e}",
            supervision.revealed[i], exact.prob_plus[i], fp.state.chi_node[i]
        );
    }
    println!("max |diff| = {worst:.3e}");
    Ok(())
}
