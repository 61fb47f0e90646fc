//! Where inference becomes possible: the detectability threshold
//! `lambda_c = sqrt(1 - mu^2 / alpha)` and the `(phi, eps)` parameterization
//! that trades graph signal against feature signal at a fixed total snr.
//!
//! ```bash
//! cargo run --release --example threshold
//! ```

use csbm::model::{
    detectability_threshold, params_from_phi_eps, phi_eps_from_params, Detectability,
};

fn main() -> csbm::Result<()> {
    println!("mu^2   alpha  lambda_c");
    for (mu2, alpha) in [(0.0, 10.0), (4.0, 10.0), (4.0, 5.0), (4.0, 4.0), (4.0, 2.0)] {
        match detectability_threshold((mu2 as f64).sqrt(), alpha) {
            Detectability::Threshold(lc) => println!("{mu2:<6} {alpha:<6} {lc:.4}"),
            Detectability::AlwaysDetectable => {
                println!("{mu2:<6} {alpha:<6} always detectable (mu^2 > alpha)")
            }
        }
    }

    println!();
    println!("phi    eps    lambda   mu       check lambda^2 + mu^2/alpha");
    let alpha = 2.5;
    let eps = 3.25;
    for phi in [0.0f64, 0.25, 0.5, 0.75, 1.0] {
        let (lambda, mu) = params_from_phi_eps(phi, eps, alpha, 5.0)?;
        let total = lambda * lambda + mu * mu / alpha;
        println!("{phi:<6} {eps:<6} {lambda:<8.4} {mu:<8.4} {total:.10}");
        if phi > 0.0 && phi < 1.0 {
            let (phi2, eps2) = phi_eps_from_params(lambda, mu, alpha);
            assert!((phi2 - phi).abs() < 1e-10 && (eps2 - eps).abs() < 1e-10);
        }
    }
    println!("(round-trips through the defining relations to 1e-10)");
    Ok(())
}
