//! Estimate `(c_in, c_out, mu)` by expectation-maximization from a
//! deliberately wrong starting point and watch the Bethe free entropy climb.
//!
//! ```bash
//! cargo run --release --example em
//! ```

use csbm::free_energy::{em_fit, EmOptions};
use csbm::model::{make_supervision, sample_instance, ModelParams};

fn main() -> csbm::Result<()> {
    let mut params = ModelParams::new(5000, 1000, 5.0, 1.0, 2.0);
    params.train_fraction = 0.1;
    let instance = sample_instance(&params, 3)?;
    let supervision = make_supervision(&instance, 0.1, 1.0, 4)?;

    let truth = params.affinity();
    println!(
        "generative parameters: c_in = {:.4}, c_out = {:.4}, mu = {:.4}",
        truth.c_in, truth.c_out, params.snr_mu
    );
    let init = (truth.c_in * 1.3, truth.c_out * 0.7, params.snr_mu * 1.5);
    println!(
        "starting from:         c_in = {:.4}, c_out = {:.4}, mu = {:.4}",
        init.0, init.1, init.2
    );

    let est = em_fit(&instance, &supervision, init, &EmOptions::default())?;
    println!("iter   c_in    c_out   mu      bethe_phi");
    for row in &est.trace {
        println!(
            "{:>4}   {:.4}  {:.4}  {:.4}  {:.6}",
            row.iter, row.c_in, row.c_out, row.mu, row.bethe_phi
        );
    }
    println!(
        "estimate:              c_in = {:.4}, c_out = {:.4}, mu = {:.4} (converged = {})",
        est.c_in, est.c_out, est.mu, est.converged
    );
    Ok(())
}
