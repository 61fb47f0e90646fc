//! Sample a CSBM instance, serialize it, and reload it bit-identically.
//!
//! ```bash
//! cargo run --release --example generate
//! ```

use csbm::model::{io, make_supervision, sample_instance, ModelParams};

fn main() -> csbm::Result<()> {
    let mut params = ModelParams::new(2000, 200, 5.0, 1.0, 2.0);
    params.train_fraction = 0.1;

    let instance = sample_instance(&params, 42)?;
    let supervision = make_supervision(&instance, 0.1, 1.0, 7)?;
    println!(
        "sampled N={} P={} with {} edges (mean degree {:.3}), {} revealed labels",
        instance.n(),
        instance.p(),
        instance.graph.n_edges(),
        instance.graph.mean_degree(),
        supervision.n_revealed(),
    );

    let dir = std::env::temp_dir().join("csbm-example-instance");
    io::save_instance(&instance, &dir)?;
    let back = io::load_instance(&dir)?;
    assert_eq!(back.features, instance.features);
    assert_eq!(back.graph, instance.graph);
    assert_eq!(back.truth_labels, instance.truth_labels);
    println!("round-tripped bit-identically through {}", dir.display());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
