//! The dense-limit picture: run sparse AMP-BP and dense AMP-AMP on the same
//! moderately dense instance and compare both against the state-evolution
//! prediction.
//!
//! ```bash
//! cargo run --release --example dense_limit
//! ```

use csbm::amp_bp::{overlap, run, RunOptions};
use csbm::dense::{
    inverse_noise, run_amp_amp, se_predicted_overlap, state_evolution, transform_adjacency,
    DenseRunOptions, SeOptions, DEFAULT_DENSE_NODE_BUDGET,
};
use csbm::model::{make_supervision, sample_instance, ModelParams};

fn main() -> csbm::Result<()> {
    let n = 4000usize;
    let d = 20.0; // moderately dense: the rank-one approximation already holds
    let lambda = 0.9;
    let mu = 2.0;
    let mut params = ModelParams::new(n, 400, d, lambda, mu);
    params.train_fraction = 0.1;
    let instance = sample_instance(&params, 21)?;
    let supervision = make_supervision(&instance, 0.1, 1.0, 22)?;

    let fp_sparse = run(&instance, &supervision, &RunOptions::default())?;
    let q_sparse = overlap(
        &fp_sparse.hard_labels,
        &instance.truth_labels,
        &supervision.revealed,
    )?;

    let d_tilde = d / n as f64;
    let nu = 2.0 * lambda * d_tilde.sqrt();
    let problem = transform_adjacency(&instance.graph, d_tilde, nu, DEFAULT_DENSE_NODE_BUDGET)?;
    let fp_dense = run_amp_amp(
        &problem,
        &instance.features,
        &supervision,
        mu,
        &DenseRunOptions::default(),
    )?;
    let q_dense = overlap(
        &fp_dense.hard_labels,
        &instance.truth_labels,
        &supervision.revealed,
    )?;
    let m_u_emp: f64 = fp_dense
        .u_hat
        .iter()
        .zip(&instance.truth_labels)
        .map(|(u, &t)| u * t as f64)
        .sum::<f64>()
        / n as f64;

    let se = state_evolution(
        mu,
        params.alpha(),
        inverse_noise(nu, d_tilde),
        0.1,
        &SeOptions::default(),
    )?;

    println!("sparse AMP-BP : q_u = {q_sparse:.4} ({} iters)", fp_sparse.iters_used);
    println!("dense AMP-AMP : q_u = {q_dense:.4} ({} iters)", fp_dense.iters_used);
    println!(
        "state evolution: m_u = {:.4} (empirical {m_u_emp:.4}), predicted q_u = {:.4}",
        se.fixed_point.m_u,
        se_predicted_overlap(se.fixed_point.m)
    );
    Ok(())
}
