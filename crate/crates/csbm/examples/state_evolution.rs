//! Track the dense-limit state-evolution recursion across the snr range and
//! print the predicted overlap next to each fixed point.
//!
//! ```bash
//! cargo run --release --example state_evolution
//! ```

use csbm::dense::{se_predicted_overlap, state_evolution, SeOptions};

fn main() -> csbm::Result<()> {
    let mu = 2.0;
    let alpha = 10.0;
    println!("# mu^2 = {}, alpha = {alpha}", mu * mu);
    println!("# at rho = 0 the recursion starts from the informative side;");
    println!("# from m_u = 0 the uninformative point is exactly stationary");
    println!("lambda  rho   m_u      m_v      m        steps  predicted_q_u");
    for rho in [0.0, 0.1] {
        for lambda in [0.5f64, 0.7, 0.9, 1.1, 1.5, 2.0] {
            let delta_i = lambda * lambda;
            let opts = SeOptions {
                informative_init: rho == 0.0,
                ..Default::default()
            };
            let t = state_evolution(mu, alpha, delta_i, rho, &opts)?;
            let fp = t.fixed_point;
            println!(
                "{lambda:<7} {rho:<5} {:.5}  {:.5}  {:.5}  {:>5}  {:.4}",
                fp.m_u,
                fp.m_v,
                fp.m,
                t.states.len(),
                se_predicted_overlap(fp.m)
            );
        }
    }
    println!();
    println!("# informative vs uninformative initialization at rho = 0.1, lambda = 0.9");
    for informative in [false, true] {
        let opts = SeOptions {
            informative_init: informative,
            ..Default::default()
        };
        let t = state_evolution(mu, alpha, 0.81, 0.1, &opts)?;
        println!(
            "informative = {informative}: m_u = {:.6} in {} steps",
            t.fixed_point.m_u,
            t.states.len()
        );
    }
    Ok(())
}
