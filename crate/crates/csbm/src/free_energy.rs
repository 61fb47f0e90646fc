//! Bethe free entropy at an AMP-BP fixed point, its parameter gradient, and
//! closed-form expectation-maximization updates for `(c_in, c_out, mu)`.
//!
//! The per-node free entropy is assembled from the fixed-point quantities:
//! a node term summing `exp(tilde_h_u) * prod_k (C chi^{k->i})_u` over the two
//! labels, an edge term removing double-counted pair normalizations, the
//! Gaussian channel term in `B_U, A_U`, and the feature-interaction term,
//! whose `O(NP)` bilinear part reduces to `O(N)` through the stored AMP field
//! `B_V` (the identity `sqrt(mu/N) v_hat' B u_hat = sum_i u_hat_i (B_V^i +
//! (mu/alpha) sigma_V u_hat_i)`, exact at a fixed point).

use crate::amp_bp::{self, FixedPoint, MessageState, RunOptions};
use crate::error::{Error, Result};
use crate::model::{Affinity, Instance, Supervision};
use crate::util::log_add_exp;

/// Per-node Bethe free entropy.
#[derive(Debug, Clone, Copy)]
pub struct BetheValue {
    pub phi: f64,
    /// Whether the supplied fixed point had met its convergence criterion;
    /// the value is still computed when false.
    pub from_converged: bool,
}

/// Gradient of the free entropy with respect to `(c_in, c_out, mu)`.
#[derive(Debug, Clone, Copy)]
pub struct FreeEntropyGradient {
    pub d_c_in: f64,
    pub d_c_out: f64,
    /// `None` when `mu = 0` (the derivative is singular there).
    pub d_mu: Option<f64>,
}

/// One closed-form EM update of the parameters.
#[derive(Debug, Clone, Copy)]
pub struct EmUpdate {
    pub c_in: f64,
    pub c_out: f64,
    /// `None` when the update is uninformative (vanishing estimates).
    pub mu: Option<f64>,
}

/// Evaluates the Bethe free entropy at a fixed point of AMP-BP run at
/// `(affinity, mu)`.
pub fn bethe_free_entropy(
    fp: &FixedPoint,
    instance: &Instance,
    affinity: &Affinity,
    mu: f64,
) -> BetheValue {
    let phi = bethe_phi(&fp.state, instance, affinity, mu, false);
    BetheValue {
        phi,
        from_converged: fp.converged,
    }
}

/// Reference evaluation with the feature-interaction term computed by the
/// naive `O(NP)` double sum instead of the factorized form; used to validate
/// the factorization.
pub fn bethe_free_entropy_naive(
    fp: &FixedPoint,
    instance: &Instance,
    affinity: &Affinity,
    mu: f64,
) -> BetheValue {
    let phi = bethe_phi(&fp.state, instance, affinity, mu, true);
    BetheValue {
        phi,
        from_converged: fp.converged,
    }
}

fn bethe_phi(
    state: &MessageState,
    instance: &Instance,
    affinity: &Affinity,
    mu: f64,
    naive_bilinear: bool,
) -> f64 {
    let n = instance.n() as f64;
    let p = instance.p();
    let alpha = n / p as f64;
    let graph = &instance.graph;
    let (c_in, c_out) = (affinity.c_in, affinity.c_out);
    let d = 0.5 * (c_in + c_out);
    let dc = c_in - c_out;

    // node term
    let mut node_sum = 0.0;
    for i in 0..graph.n_nodes() {
        let mut log_plus = state.tilde_plus[i];
        let mut log_minus = state.tilde_minus[i];
        for e in graph.out_range(i) {
            let chi_in = state.chi_dir[graph.reverse_id(e)];
            log_plus += (c_out + dc * chi_in).max(1e-300).ln();
            log_minus += (c_in - dc * chi_in).max(1e-300).ln();
        }
        node_sum += log_add_exp(log_plus, log_minus);
    }

    // edge term
    let mut edge_sum = 0.0;
    for i in 0..graph.n_nodes() {
        for e in graph.out_range(i) {
            let j = graph.head(e);
            if j < i {
                continue;
            }
            let a = state.chi_dir[e];
            let b = state.chi_dir[graph.reverse_id(e)];
            let pair = c_in * (a * b + (1.0 - a) * (1.0 - b))
                + c_out * (a * (1.0 - b) + b * (1.0 - a));
            edge_sum += pair.max(1e-300).ln();
        }
    }

    // Gaussian channel term on the centroids
    let log1p_au = (1.0 + state.a_u).ln();
    let channel: f64 = state
        .b_u
        .iter()
        .map(|bu| 0.5 * (bu * bu / (1.0 + state.a_u) - log1p_au))
        .sum();

    // feature-interaction term
    let sum_u_sq: f64 = state.u_hat.iter().map(|u| u * u).sum();
    let sum_v_sq: f64 = state.v_hat.iter().map(|v| v * v).sum();
    let bilinear = if naive_bilinear {
        bilinear_direct(instance, &state.v_hat, &state.u_hat, mu)
    } else {
        let onsager = mu / alpha * state.sigma_v;
        state
            .u_hat
            .iter()
            .zip(&state.b_v)
            .map(|(&u, &bv)| u * (bv + onsager * u))
            .sum()
    };
    let interaction = bilinear
        - mu / n * (0.5 * n * sum_v_sq + p as f64 * state.sigma_v * sum_u_sq
            - 0.5 * sum_v_sq * sum_u_sq);

    (n * d / 2.0 + node_sum - edge_sum + channel - interaction) / n
}

/// `sqrt(mu/N) * sum_{i,beta} B[beta][i] v_hat[beta] u_hat[i]` by direct pass.
fn bilinear_direct(instance: &Instance, v_hat: &[f64], u_hat: &[f64], mu: f64) -> f64 {
    let scale = (mu / instance.n() as f64).sqrt();
    let mut total = 0.0;
    for (i, col) in instance.features.nodes().enumerate() {
        total += crate::util::dot_f32_f64(col, v_hat) * u_hat[i];
    }
    scale * total
}

/// Analytic gradient at a fixed point of AMP-BP run at `(affinity, mu)`.
pub fn free_entropy_gradient(
    state: &MessageState,
    instance: &Instance,
    affinity: &Affinity,
    mu: f64,
) -> FreeEntropyGradient {
    let n = instance.n() as f64;
    let alpha = n / instance.p() as f64;
    let graph = &instance.graph;
    let (c_in, c_out) = (affinity.c_in, affinity.c_out);

    let mut grad_in = 0.0;
    let mut grad_out = 0.0;
    for i in 0..graph.n_nodes() {
        for e in graph.out_range(i) {
            let j = graph.head(e);
            if j < i {
                continue;
            }
            let a = state.chi_dir[e];
            let b = state.chi_dir[graph.reverse_id(e)];
            let same = a * b + (1.0 - a) * (1.0 - b);
            let cross = a * (1.0 - b) + b * (1.0 - a);
            let denom = (c_in * same + c_out * cross).max(1e-300);
            grad_in += same / denom;
            grad_out += cross / denom;
        }
    }
    let d_c_in = -0.25 + grad_in / n;
    let d_c_out = -0.25 + grad_out / n;

    let d_mu = if mu > 0.0 {
        let sum_u_sq: f64 = state.u_hat.iter().map(|u| u * u).sum();
        let sum_v_sq: f64 = state.v_hat.iter().map(|v| v * v).sum();
        let bilinear = bilinear_direct(instance, &state.v_hat, &state.u_hat, mu);
        // (1/sqrt(mu N)) sum B v u = bilinear / mu
        Some((bilinear / mu - sum_v_sq - state.sigma_v / alpha * sum_u_sq) / (2.0 * n))
    } else {
        None
    };
    FreeEntropyGradient {
        d_c_in,
        d_c_out,
        d_mu,
    }
}

/// One maximization-expectation update from a fixed point run at
/// `(affinity, mu)`; the affinity inside the update is the current estimate.
pub fn em_step(
    state: &MessageState,
    instance: &Instance,
    affinity: &Affinity,
    mu: f64,
) -> EmUpdate {
    let n = instance.n() as f64;
    let alpha = n / instance.p() as f64;
    let graph = &instance.graph;
    let (c_in, c_out) = (affinity.c_in, affinity.c_out);

    let mut acc_in = 0.0;
    let mut acc_out = 0.0;
    for i in 0..graph.n_nodes() {
        for e in graph.out_range(i) {
            let j = graph.head(e);
            if j < i {
                continue;
            }
            let a = state.chi_dir[e];
            let b = state.chi_dir[graph.reverse_id(e)];
            let same = a * b + (1.0 - a) * (1.0 - b);
            let cross = a * (1.0 - b) + b * (1.0 - a);
            let denom = (c_in * same + c_out * cross).max(1e-300);
            acc_in += c_in * same / denom;
            acc_out += c_out * cross / denom;
        }
    }
    let new_c_in = 4.0 / n * acc_in;
    let new_c_out = 4.0 / n * acc_out;

    let sum_u_sq: f64 = state.u_hat.iter().map(|u| u * u).sum();
    let sum_v_sq: f64 = state.v_hat.iter().map(|v| v * v).sum();
    let denom = alpha * sum_v_sq + state.sigma_v * sum_u_sq;
    // With all u_hat ~ 0 and v_hat ~ 0 the update is a ratio of noise-squared
    // terms; declare it uninformative and keep the current value.
    let dead = sum_u_sq / n < 1e-3 && (sum_v_sq / instance.p() as f64) < 1e-3;
    let new_mu = if mu > 0.0 && denom > 1e-12 && !dead {
        // (alpha / sqrt(N)) sum B v u = alpha * bilinear / sqrt(mu)
        let numer = alpha * bilinear_direct(instance, &state.v_hat, &state.u_hat, mu) / mu.sqrt();
        let root = numer / denom;
        Some(root * root)
    } else {
        None
    };
    EmUpdate {
        c_in: new_c_in,
        c_out: new_c_out,
        mu: new_mu,
    }
}

#[derive(Debug, Clone)]
pub struct EmOptions {
    pub max_outer: usize,
    /// Stop when the largest relative parameter change falls below this.
    pub rel_tol: f64,
    /// Mixing factor on parameter updates: `new = (1 - damping) * update + damping * old`.
    pub damping: f64,
    /// Inner AMP-BP solver options; successive solves are warm-started.
    pub run: RunOptions,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            rel_tol: 1e-4,
            damping: 0.5,
            run: RunOptions {
                msg_tol: 1e-7,
                max_iters: 400,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EmTraceRow {
    pub iter: usize,
    pub c_in: f64,
    pub c_out: f64,
    pub mu: f64,
    pub bethe_phi: f64,
}

/// Parameter-estimation result with the per-outer-iteration trace.
#[derive(Debug, Clone)]
pub struct ParamEstimate {
    pub c_in: f64,
    pub c_out: f64,
    pub mu: f64,
    pub trace: Vec<EmTraceRow>,
    pub converged: bool,
    /// Set when an inner solve diverged; the trace up to that point is kept.
    pub diverged: Option<String>,
}

/// Alternates AMP-BP runs (warm-started) with [`em_step`] updates until the
/// relative parameter change drops below `rel_tol`.
pub fn em_fit(
    instance: &Instance,
    supervision: &Supervision,
    init: (f64, f64, f64),
    options: &EmOptions,
) -> Result<ParamEstimate> {
    let (mut c_in, mut c_out, mut mu) = init;
    Affinity::new(c_in, c_out)?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "initial mu must be nonnegative, got {mu}"
        )));
    }
    let mut trace = Vec::new();
    let mut warm: Option<MessageState> = None;
    let mut converged = false;
    for outer in 0..options.max_outer {
        let affinity = Affinity::new(c_in, c_out)?;
        let fp = match amp_bp::run_with(
            instance,
            supervision,
            &affinity,
            mu,
            None,
            &options.run,
            warm.as_ref(),
        ) {
            Ok(fp) => fp,
            Err(e) => {
                return Ok(ParamEstimate {
                    c_in,
                    c_out,
                    mu,
                    trace,
                    converged: false,
                    diverged: Some(e.to_string()),
                });
            }
        };
        let phi = bethe_free_entropy(&fp, instance, &affinity, mu).phi;
        trace.push(EmTraceRow {
            iter: outer,
            c_in,
            c_out,
            mu,
            bethe_phi: phi,
        });

        let upd = em_step(&fp.state, instance, &affinity, mu);
        let mix = |old: f64, new: f64| options.damping * old + (1.0 - options.damping) * new;
        let next_c_in = mix(c_in, upd.c_in);
        let next_c_out = mix(c_out, upd.c_out);
        let next_mu = upd.mu.map_or(mu, |m| mix(mu, m));
        let rel = |old: f64, new: f64| (new - old).abs() / old.abs().max(1e-12);
        let change = rel(c_in, next_c_in)
            .max(rel(c_out, next_c_out))
            .max(rel(mu, next_mu));
        c_in = next_c_in;
        c_out = next_c_out;
        mu = next_mu;
        warm = Some(fp.state);
        if change < options.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(ParamEstimate {
        c_in,
        c_out,
        mu,
        trace,
        converged,
        diverged: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amp_bp::{init_state, iterate, run, Criterion, RunOptions};
    use crate::model::{make_supervision, sample_instance, ModelParams, Supervision};

    /// phi at the exact uninformative fixed point (mu = 0, lambda = 0, rho = 0)
    /// collapses to `-d/2 + (|E|/N) ln d`.
    #[test]
    fn null_value_matches_closed_form() {
        let params = ModelParams::new(400, 50, 5.0, 0.0, 0.0);
        let inst = sample_instance(&params, 21).unwrap();
        let sup = Supervision::unsupervised(inst.n());
        let opts = RunOptions {
            init_noise: 0.0,
            ..Default::default()
        };
        let affinity = inst.params.affinity();
        // one iteration populates the stored fields; the state is stationary
        let st = init_state(&inst, &sup, &opts);
        let st = iterate(&st, &inst, &sup, &affinity, 0.0).unwrap();
        let fp = FixedPoint {
            state: st,
            converged: true,
            iters_used: 1,
            overlap_trace: None,
            hard_labels: vec![1; inst.n()],
        };
        let phi = bethe_free_entropy(&fp, &inst, &affinity, 0.0).phi;
        let d = 5.0f64;
        let expect = -d / 2.0 + inst.graph.n_edges() as f64 / inst.n() as f64 * d.ln();
        assert!((phi - expect).abs() < 1e-10, "phi={phi}, expect={expect}");
    }

    #[test]
    fn factorized_term_matches_naive_evaluation() {
        let mut params = ModelParams::new(600, 120, 5.0, 1.0, 2.0);
        params.train_fraction = 0.2;
        let inst = sample_instance(&params, 22).unwrap();
        let sup = make_supervision(&inst, 0.2, 1.0, 23).unwrap();
        let opts = RunOptions {
            msg_tol: 1e-10,
            max_iters: 400,
            ..Default::default()
        };
        let fp = run(&inst, &sup, &opts).unwrap();
        assert!(fp.converged);
        let affinity = inst.params.affinity();
        let a = bethe_free_entropy(&fp, &inst, &affinity, 2.0).phi;
        let b = bethe_free_entropy_naive(&fp, &inst, &affinity, 2.0).phi;
        assert!((a - b).abs() < 1e-6, "factorized {a} vs naive {b}");
    }

    #[test]
    fn symmetric_point_gradient_exchange_symmetry() {
        // lambda = 0: at the symmetric fixed point the two affinity gradients agree.
        let params = ModelParams::new(500, 100, 4.0, 0.0, 0.0);
        let inst = sample_instance(&params, 24).unwrap();
        let sup = Supervision::unsupervised(inst.n());
        let opts = RunOptions {
            init_noise: 0.0,
            ..Default::default()
        };
        let affinity = inst.params.affinity();
        let st = init_state(&inst, &sup, &opts);
        let st = iterate(&st, &inst, &sup, &affinity, 0.0).unwrap();
        let g = free_entropy_gradient(&st, &inst, &affinity, 0.0);
        assert!((g.d_c_in - g.d_c_out).abs() < 1e-6);
        assert!(g.d_mu.is_none());
    }

    #[test]
    fn em_step_at_uniform_marginals_matches_degree() {
        // all chi = 1/2 collapses both updates to (2|E|/N) * c / d
        let params = ModelParams::new(500, 100, 4.0, 0.0, 0.0);
        let inst = sample_instance(&params, 25).unwrap();
        let sup = Supervision::unsupervised(inst.n());
        let opts = RunOptions {
            init_noise: 0.0,
            ..Default::default()
        };
        let affinity = inst.params.affinity();
        let st = init_state(&inst, &sup, &opts);
        let st = iterate(&st, &inst, &sup, &affinity, 0.0).unwrap();
        let upd = em_step(&st, &inst, &affinity, 0.0);
        let two_e_over_n = 2.0 * inst.graph.n_edges() as f64 / inst.n() as f64;
        assert!((upd.c_in - two_e_over_n).abs() < 1e-9);
        assert!((upd.c_out - two_e_over_n).abs() < 1e-9);
        assert!((0.5 * (upd.c_in + upd.c_out) - two_e_over_n).abs() < 1e-9);
    }

    #[test]
    fn mu_update_is_uninformative_without_feature_signal() {
        // no-signal data (mu = 0, lambda = 0, rho = 0), solver run at mu_est = 1:
        // the estimates stay near zero, so the update is ~0 or withheld
        let params = ModelParams::new(2000, 400, 5.0, 0.0, 0.0);
        let inst = sample_instance(&params, 26).unwrap();
        let sup = Supervision::unsupervised(inst.n());
        let affinity = inst.params.affinity();
        let fp = crate::amp_bp::run_with(
            &inst,
            &sup,
            &affinity,
            1.0,
            None,
            &RunOptions::default(),
            None,
        )
        .unwrap();
        let upd = em_step(&fp.state, &inst, &affinity, 1.0);
        match upd.mu {
            None => {}
            Some(m) => assert!(m < 0.05, "mu update {m}"),
        }
    }

    #[test]
    fn gradient_matches_finite_differences_small() {
        // small instance, re-solving to the fixed point at perturbed parameters
        let mut params = ModelParams::new(800, 200, 5.0, 1.0, 2.0);
        params.train_fraction = 0.25;
        let inst = sample_instance(&params, 28).unwrap();
        let sup = make_supervision(&inst, 0.25, 1.0, 29).unwrap();
        let opts = RunOptions {
            msg_tol: 1e-11,
            max_iters: 2000,
            criterion: Criterion::MessageChange,
            ..Default::default()
        };
        let affinity = inst.params.affinity();
        let base = crate::amp_bp::run_with(&inst, &sup, &affinity, 2.0, None, &opts, None).unwrap();
        assert!(base.converged);
        let g = free_entropy_gradient(&base.state, &inst, &affinity, 2.0);

        let solve = |c_in: f64, c_out: f64, mu: f64| -> f64 {
            let aff = Affinity::new(c_in, c_out).unwrap();
            let fp = crate::amp_bp::run_with(
                &inst,
                &sup,
                &aff,
                mu,
                None,
                &opts,
                Some(&base.state),
            )
            .unwrap();
            bethe_free_entropy(&fp, &inst, &aff, mu).phi
        };
        let h = 1e-3;
        let fd_in =
            (solve(affinity.c_in + h, affinity.c_out, 2.0) - solve(affinity.c_in - h, affinity.c_out, 2.0))
                / (2.0 * h);
        let fd_out =
            (solve(affinity.c_in, affinity.c_out + h, 2.0) - solve(affinity.c_in, affinity.c_out - h, 2.0))
                / (2.0 * h);
        let fd_mu = (solve(affinity.c_in, affinity.c_out, 2.0 + h)
            - solve(affinity.c_in, affinity.c_out, 2.0 - h))
            / (2.0 * h);
        assert!((g.d_c_in - fd_in).abs() < 5e-3, "{} vs {}", g.d_c_in, fd_in);
        assert!((g.d_c_out - fd_out).abs() < 5e-3, "{} vs {}", g.d_c_out, fd_out);
        assert!(
            (g.d_mu.unwrap() - fd_mu).abs() < 5e-3,
            "{} vs {}",
            g.d_mu.unwrap(),
            fd_mu
        );
    }

    #[test]
    fn em_fit_smoke_recovers_on_moderate_instance() {
        let mut params = ModelParams::new(3000, 600, 5.0, 1.0, 2.0);
        params.train_fraction = 0.15;
        let inst = sample_instance(&params, 30).unwrap();
        let sup = make_supervision(&inst, 0.15, 1.0, 31).unwrap();
        let truth = inst.params.affinity();
        let init = (truth.c_in * 1.3, truth.c_out * 0.7, 2.0 * 1.5);
        let est = em_fit(&inst, &sup, init, &EmOptions::default()).unwrap();
        assert!(est.converged, "trace: {:?}", est.trace.len());
        assert!(est.diverged.is_none());
        // at N=3000 the estimates carry a visible finite-size bias (the mu
        // estimator most of all); the tight 5% check runs at N=30000
        assert!(
            (est.c_in - truth.c_in).abs() / truth.c_in < 0.10,
            "c_in {} vs {}",
            est.c_in,
            truth.c_in
        );
        assert!(
            (est.c_out - truth.c_out).abs() / truth.c_out < 0.15,
            "c_out {} vs {}",
            est.c_out,
            truth.c_out
        );
        assert!(est.mu > 1.2 && est.mu < 2.8, "mu {}", est.mu);
        // EM ascends the Bethe free entropy along the trace
        for w in est.trace.windows(2) {
            assert!(w[1].bethe_phi >= w[0].bethe_phi - 1e-6);
        }
    }
}
