//! Run AMP-BP on one semi-supervised instance and report the test overlap,
//! the centroid MSE and the convergence behavior.
//!
//! ```bash
//! cargo run --release --example infer
//! ```

use csbm::amp_bp::{mse_v, overlap, run, RunOptions};
use csbm::model::{make_supervision, sample_instance, ModelParams};

fn main() -> csbm::Result<()> {
    let mut params = ModelParams::new(10_000, 1_000, 5.0, 1.0, 2.0);
    params.train_fraction = 0.1;
    let instance = sample_instance(&params, 1)?;
    let supervision = make_supervision(&instance, 0.1, 1.0, 2)?;

    let fp = run(&instance, &supervision, &RunOptions::default())?;
    let q = overlap(
        &fp.hard_labels,
        &instance.truth_labels,
        &supervision.revealed,
    )?;
    println!(
        "lambda = {}, mu^2 = {}, alpha = {}, rho = {}",
        params.snr_lambda,
        params.snr_mu * params.snr_mu,
        params.alpha(),
        params.train_fraction
    );
    println!(
        "q_u = {q:.4} after {} iterations (converged = {})",
        fp.iters_used, fp.converged
    );
    println!(
        "centroid mse = {:.4} (prior-mean baseline would be ~1)",
        mse_v(&fp.state.v_hat, &instance.centroids)
    );
    if let Some(trace) = &fp.overlap_trace {
        let shown: Vec<String> = trace.iter().take(12).map(|q| format!("{q:.3}")).collect();
        println!("overlap trace: {} ...", shown.join(" "));
    }
    Ok(())
}
