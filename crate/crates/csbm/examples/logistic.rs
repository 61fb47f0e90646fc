//! Feature-only baseline at `lambda = 0`: L2-regularized logistic regression
//! on the revealed nodes against the full Bayes-optimal solver.
//!
//! ```bash
//! cargo run --release --example logistic
//! ```

use csbm::amp_bp::{overlap, run, RunOptions};
use csbm::model::{make_supervision, sample_instance, ModelParams};
use csbm::oracles::{logistic_baseline, DEFAULT_L2_GRID};

fn main() -> csbm::Result<()> {
    let mut params = ModelParams::new(5000, 500, 5.0, 0.0, 2.0);
    params.train_fraction = 0.1;
    let instance = sample_instance(&params, 8)?;
    let supervision = make_supervision(&instance, 0.1, 1.0, 9)?;

    let q_logistic = logistic_baseline(&instance, &supervision, &DEFAULT_L2_GRID)?;
    let fp = run(&instance, &supervision, &RunOptions::default())?;
    let q_amp = overlap(
        &fp.hard_labels,
        &instance.truth_labels,
        &supervision.revealed,
    )?;
    println!("lambda = 0 (graph carries no signal), mu^2 = 4, alpha = 10, rho = 0.1");
    println!("logistic regression: q_u = {q_logistic:.4}");
    println!("AMP-BP:              q_u = {q_amp:.4}");
    println!("gap:                 {:.4}", q_amp - q_logistic);
    Ok(())
}
