//! Cross-check AMP-BP against Metropolis-within-Gibbs sampling of the same
//! posterior on a mid-sized instance.
//!
//! ```bash
//! cargo run --release --example mcmc_check
//! ```

use csbm::amp_bp::{overlap, run, RunOptions};
use csbm::model::{make_supervision, sample_instance, ModelParams};
use csbm::oracles::{mcmc_marginals, McmcOptions};
use std::time::Instant;

fn main() -> csbm::Result<()> {
    println!("lambda  q_amp_bp  q_mcmc   |diff|  accept  seconds");
    for lambda in [1.0f64, 1.5, 2.0] {
        let params = ModelParams::new(3000, 300, 5.0, lambda, 2.0);
        let instance = sample_instance(&params, 5)?;
        let supervision = make_supervision(&instance, 0.0, 1.0, 6)?;

        let fp = run(&instance, &supervision, &RunOptions::default())?;
        let q_amp = overlap(
            &fp.hard_labels,
            &instance.truth_labels,
            &supervision.revealed,
        )?;

        let t = Instant::now();
        let mcmc = mcmc_marginals(
            &instance,
            &supervision,
            &McmcOptions {
                sweeps: 2000,
                burn_in: 500,
                v_resample_every: 5,
                seed: 9,
            },
        )?;
        let q_mcmc = overlap(
            &mcmc.hard_labels,
            &instance.truth_labels,
            &supervision.revealed,
        )?;
        println!(
            "{lambda:<7} {q_amp:<9.4} {q_mcmc:<8.4} {:<7.4} {:<7.3} {:.1}",
            (q_amp - q_mcmc).abs(),
            mcmc.acceptance_rate,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
