//! Exact posterior marginals by enumeration.
//!
//! For each label configuration `u` the log-weight is the exact Bernoulli
//! graph likelihood over all pairs plus the feature likelihood with the
//! centroids marginalized per feature row: since `u'u = N`, the covariance
//! `I_N + (mu/N) u u'` has determinant `1 + mu` and rank-one inverse update
//! `(I + (mu/N) u u')^{-1} = I - (mu/N) u u' / (1 + mu)`, so
//! `ln P(B_beta | u) = -(1/2)(B_beta'B_beta - (mu/N)(B_beta'u)^2/(1+mu))
//!  - (1/2) ln(1+mu) + const`.

use crate::error::{Error, Result};
use crate::model::{Instance, Supervision};
use crate::util::log_add_exp;

/// Enumeration is `O(2^N)`; refuse beyond this.
pub const MAX_ENUMERATION_NODES: usize = 16;

/// Posterior probability `P(u_i = +1)` per node.
#[derive(Debug, Clone)]
pub struct MarginalTable {
    pub prob_plus: Vec<f64>,
}

/// Exact marginals of `P(u | A, B, Xi)` for the binary model, `N <= 16`.
pub fn exact_marginals(instance: &Instance, supervision: &Supervision) -> Result<MarginalTable> {
    let n = instance.n();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::TooLarge {
            what: "exact enumeration",
            size: n,
            max: MAX_ENUMERATION_NODES,
        });
    }
    let p = instance.p();
    let mu = instance.params.snr_mu;
    let affinity = instance.params.affinity();
    let nf = n as f64;
    let ln_in = (affinity.c_in / nf).max(f64::MIN_POSITIVE).ln();
    let ln_out = (affinity.c_out / nf).max(f64::MIN_POSITIVE).ln();
    let ln_nin = (-affinity.c_in / nf).ln_1p();
    let ln_nout = (-affinity.c_out / nf).ln_1p();
    if !(ln_nin.is_finite() && ln_nout.is_finite()) {
        return Err(Error::InvalidParameter(
            "edge probability reaches 1; enumeration undefined".into(),
        ));
    }
    let lp: Vec<f64> = supervision.node_prior_plus.iter().map(|&q| q.ln()).collect();
    let lm: Vec<f64> = supervision
        .node_prior_plus
        .iter()
        .map(|&q| (1.0 - q).ln())
        .collect();
    let edges: Vec<(usize, usize)> = instance
        .graph
        .edges()
        .map(|(a, b)| (a as usize, b as usize))
        .collect();
    let features = &instance.features;
    let feat_scale = mu / nf / (2.0 * (1.0 + mu));
    let log_det_term = -(p as f64) * 0.5 * (1.0 + mu).ln();

    let total = 1usize << n;
    let mut log_w = vec![0f64; total];
    let mut bu = vec![0f64; p];
    for (mask, w) in log_w.iter_mut().enumerate() {
        // priors and group count
        let mut lw = 0.0;
        let mut n_plus = 0usize;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                lw += lp[i];
                n_plus += 1;
            } else {
                lw += lm[i];
            }
        }
        if lw == f64::NEG_INFINITY {
            *w = f64::NEG_INFINITY;
            continue;
        }
        // graph part: counts of same/different pairs among edges and overall
        let mut e_same = 0usize;
        for &(a, b) in &edges {
            if (mask >> a & 1) == (mask >> b & 1) {
                e_same += 1;
            }
        }
        let e_diff = edges.len() - e_same;
        let n_minus = n - n_plus;
        let same_pairs =
            n_plus * n_plus.saturating_sub(1) / 2 + n_minus * n_minus.saturating_sub(1) / 2;
        let diff_pairs = n_plus * n_minus;
        lw += e_same as f64 * ln_in + e_diff as f64 * ln_out;
        lw += (same_pairs - e_same) as f64 * ln_nin + (diff_pairs - e_diff) as f64 * ln_nout;

        // feature part (the u-independent -B'B/2 constant is dropped)
        if mu > 0.0 {
            bu.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                for (acc, &x) in bu.iter_mut().zip(features.node(i)) {
                    *acc += sign * x as f64;
                }
            }
            let quad: f64 = bu.iter().map(|x| x * x).sum();
            lw += feat_scale * quad + log_det_term;
        }
        *w = lw;
    }

    // normalize and reduce per node
    let mut log_z = f64::NEG_INFINITY;
    for &w in &log_w {
        log_z = log_add_exp(log_z, w);
    }
    if log_z == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(
            "posterior has zero total mass (inconsistent supervision)".into(),
        ));
    }
    let mut prob_plus = vec![0f64; n];
    for (i, prob) in prob_plus.iter_mut().enumerate() {
        let mut log_plus = f64::NEG_INFINITY;
        for (mask, &w) in log_w.iter().enumerate() {
            if mask >> i & 1 == 1 {
                log_plus = log_add_exp(log_plus, w);
            }
        }
        *prob = (log_plus - log_z).exp();
    }
    Ok(MarginalTable { prob_plus })
}
