//! Noisy supervision: revealed labels are kept with probability `q` and
//! flipped otherwise, and the solver sees tilted priors instead of point
//! masses. Watch the overlap degrade gracefully as labels get noisier.
//!
//! ```bash
//! cargo run --release --example noisy_labels
//! ```

use csbm::amp_bp::{overlap, run, RunOptions};
use csbm::model::{make_supervision, sample_instance, ModelParams};

fn main() -> csbm::Result<()> {
    println!("q      q_u   (lambda = 0.6 below threshold, rho = 0.1)");
    for q in [1.0f64, 0.9, 0.8, 0.7, 0.6, 0.5] {
        let mut params = ModelParams::new(8000, 800, 5.0, 0.6, 2.0);
        params.train_fraction = 0.1;
        params.label_flip_keep_prob = q;
        let instance = sample_instance(&params, 33)?;
        let supervision = make_supervision(&instance, 0.1, q, 34)?;
        let fp = run(&instance, &supervision, &RunOptions::default())?;
        let q_u = overlap(
            &fp.hard_labels,
            &instance.truth_labels,
            &supervision.revealed,
        )?;
        println!("{q:<5}  {q_u:.4}");
    }
    println!("(q = 0.5 carries no label information: the prior is uniform)");
    Ok(())
}
