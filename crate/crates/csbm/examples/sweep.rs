//! Sweep the graph snr across the detectability threshold, unsupervised and
//! semi-supervised, and print the CSV that the `csbm sweep` subcommand would
//! write.
//!
//! ```bash
//! cargo run --release --example sweep
//! ```

use csbm::cli::{run_sweep, write_csv, Algorithm, GridParam, SweepConfig};
use csbm::model::{detectability_threshold, Detectability, ModelParams};

fn main() -> csbm::Result<()> {
    let base = ModelParams::new(4000, 400, 5.0, 1.0, 2.0);
    if let Detectability::Threshold(lc) = detectability_threshold(2.0, base.alpha()) {
        println!("# detectability threshold lambda_c = {lc:.4}");
    }

    let mut config = SweepConfig::new(base, Algorithm::AmpBp);
    config.grid = vec![
        (GridParam::Lambda, vec![0.4, 0.6, 0.8, 1.0, 1.2]),
        (GridParam::Rho, vec![0.0, 0.1]),
    ];
    config.repeats = 3;
    config.master_seed = 12;

    let rows = run_sweep(&config)?;
    let stdout = std::io::stdout();
    write_csv(&rows, config.master_seed, stdout.lock())?;
    Ok(())
}
