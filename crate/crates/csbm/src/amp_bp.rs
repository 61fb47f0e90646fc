//! The AMP-BP solver for the binary balanced CSBM.
//!
//! One iteration couples three blocks, all reading the previous iteration's
//! state (fully synchronous schedule):
//!
//! 1. AMP estimate of the centroids: `A_U = (mu/N) sum_i u_hat_i^2`,
//!    `B_U[beta] = sqrt(mu/N) sum_i B[beta][i] u_hat_i - (mu/N) (sum_i sigma_U^i) v_hat[beta]`,
//!    `v_hat = B_U / (1 + A_U)`, `sigma_V = 1 / (1 + A_U)`.
//! 2. AMP field on the nodes:
//!    `B_V[i] = sqrt(mu/N) sum_beta B[beta][i] v_hat[beta] - (mu/alpha) sigma_V u_hat_i`,
//!    with the Onsager memory term removing self-feedback.
//! 3. BP on the sparse graph with the non-edges collapsed into the global
//!    field `h`: directed messages and marginals are sigmoids of
//!    `tilde_h_+ - tilde_h_-` plus the incoming log-likelihood ratios
//!    `ln((c_out + (c_in - c_out) chi) / (c_in - (c_in - c_out) chi))`.
//!
//! Cost is `O(NP + |E| d_bar)` time per iteration and `O(NP)` memory.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Affinity, Instance, Supervision};
use crate::rng;
use crate::util::{dot_f32_f64, hard_label, sigmoid};

/// Full per-iteration state: directed-edge messages plus the AMP scalars.
#[derive(Debug, Clone)]
pub struct MessageState {
    /// `chi_+^{i->j}` per directed edge id.
    pub chi_dir: Vec<f64>,
    /// Marginals `chi_+^i` per node.
    pub chi_node: Vec<f64>,
    /// Posterior means `u_hat_i = 2 chi_+^i - 1`.
    pub u_hat: Vec<f64>,
    /// Posterior means `v_hat_beta` of the centroids.
    pub v_hat: Vec<f64>,
    /// Centroid posterior variance `sigma_V = 1 / (1 + A_U)`.
    pub sigma_v: f64,
    pub a_u: f64,
    pub b_u: Vec<f64>,
    pub b_v: Vec<f64>,
    /// Global fields `(h_+, h_-)`.
    pub field: [f64; 2],
    /// Per-node fields `tilde_h_+^i`, `tilde_h_-^i` (valid after one iteration).
    pub tilde_plus: Vec<f64>,
    pub tilde_minus: Vec<f64>,
    pub iter: usize,
}

/// Stopping rule for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Stop when the largest absolute change of any directed message or
    /// marginal drops below `msg_tol` (truth-free default).
    MessageChange,
    /// Stop when the overlap with the supplied truth changes by less than
    /// `overlap_tol` between iterations (the figure-reproduction mode).
    OverlapChange,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_iters: usize,
    pub msg_tol: f64,
    pub overlap_tol: f64,
    /// Iterations before any stopping rule may fire. Guards the
    /// overlap-change criterion against firing during the first iterations
    /// of an unsupervised run, where the escape from the uninformative point
    /// is still below the hard-label noise floor and the overlap barely moves.
    pub min_iters: usize,
    /// `new = (1 - damping) * update + damping * old`, applied to directed messages.
    pub damping: f64,
    /// Half-width of the uniform initialization perturbations.
    pub init_noise: f64,
    pub seed: u64,
    pub criterion: Criterion,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            msg_tol: 1e-6,
            overlap_tol: 1e-3,
            min_iters: 5,
            damping: 0.0,
            init_noise: 1e-2,
            seed: 0,
            criterion: Criterion::MessageChange,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.msg_tol > 0.0) || !(self.overlap_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "msg_tol and overlap_tol must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidParameter(
                "damping must lie in [0, 1)".into(),
            ));
        }
        if !(self.init_noise >= 0.0) {
            return Err(Error::InvalidParameter(
                "init_noise must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Converged (or stopped) solver output.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub state: MessageState,
    pub converged: bool,
    pub iters_used: usize,
    /// Overlap per iteration, present when ground truth was supplied.
    pub overlap_trace: Option<Vec<f64>>,
    /// `sign(u_hat)` with ties broken to +1.
    pub hard_labels: Vec<i8>,
}

/// Per-node log priors, precomputed once per run.
struct LogPriors {
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl LogPriors {
    fn new(supervision: &Supervision) -> Self {
        let plus = supervision.node_prior_plus.iter().map(|&p| p.ln()).collect();
        let minus = supervision
            .node_prior_plus
            .iter()
            .map(|&p| (1.0 - p).ln())
            .collect();
        Self { plus, minus }
    }
}

/// Initial state: messages at the priors plus uniform noise on
/// `[-init_noise, init_noise]`, `u_hat` at the prior means plus noise,
/// `v_hat` pure noise. Noiselessly pinned nodes receive no noise so the
/// pinning invariant holds from the start. Deterministic given the seed.
pub fn init_state(
    instance: &Instance,
    supervision: &Supervision,
    options: &RunOptions,
) -> MessageState {
    let n = instance.n();
    let p = instance.p();
    let graph = &instance.graph;
    let w = options.init_noise;
    let mut msg_rng = rng::stream(options.seed, "init-msg");
    let mut node_rng = rng::stream(options.seed, "init-node");
    let mut feat_rng = rng::stream(options.seed, "init-feat");
    let draw = |r: &mut rand_chacha::ChaCha8Rng| {
        if w == 0.0 {
            0.0
        } else {
            r.random::<f64>() * 2.0 * w - w
        }
    };

    let mut chi_dir = vec![0.0; graph.n_directed()];
    for i in 0..n {
        let prior = supervision.node_prior_plus[i];
        let pinned = supervision.is_pinned(i);
        for e in graph.out_range(i) {
            let eps = draw(&mut msg_rng);
            chi_dir[e] = if pinned {
                prior
            } else {
                (prior + eps).clamp(0.0, 1.0)
            };
        }
    }
    let mut u_hat = vec![0.0; n];
    let mut chi_node = vec![0.0; n];
    for i in 0..n {
        let prior = supervision.node_prior_plus[i];
        let eps = draw(&mut node_rng);
        u_hat[i] = if supervision.is_pinned(i) {
            2.0 * prior - 1.0
        } else {
            (2.0 * prior - 1.0 + eps).clamp(-1.0, 1.0)
        };
        chi_node[i] = 0.5 * (1.0 + u_hat[i]);
    }
    let v_hat: Vec<f64> = (0..p).map(|_| draw(&mut feat_rng)).collect();

    let mu = instance.params.snr_mu;
    let a_u = mu / n as f64 * u_hat.iter().map(|u| u * u).sum::<f64>();
    MessageState {
        chi_dir,
        chi_node,
        u_hat,
        v_hat,
        sigma_v: 1.0 / (1.0 + a_u),
        a_u,
        b_u: vec![0.0; p],
        b_v: vec![0.0; n],
        field: [0.0, 0.0],
        tilde_plus: vec![0.0; n],
        tilde_minus: vec![0.0; n],
        iter: 0,
    }
}

/// One synchronous iteration as a pure function of the previous state.
/// Returns the next state; errors name the first non-finite quantity.
pub fn iterate(
    state: &MessageState,
    instance: &Instance,
    supervision: &Supervision,
    affinity: &Affinity,
    mu: f64,
) -> Result<MessageState> {
    let priors = LogPriors::new(supervision);
    let mut next = state.clone();
    step_into(state, &mut next, instance, &priors, affinity, mu, 0.0)?;
    Ok(next)
}

/// The iteration body. Writes the full next state into `next` and returns the
/// largest absolute change over directed messages and marginals.
fn step_into(
    prev: &MessageState,
    next: &mut MessageState,
    instance: &Instance,
    priors: &LogPriors,
    affinity: &Affinity,
    mu: f64,
    damping: f64,
) -> Result<f64> {
    let n = instance.n();
    let p = instance.p();
    let nf = n as f64;
    let alpha = nf / p as f64;
    let graph = &instance.graph;
    let features = &instance.features;
    let iter = prev.iter;

    // -- AMP estimate of v_hat (uses u_hat^(t), v_hat^(t)) --
    let sum_u_sq: f64 = prev.u_hat.iter().map(|u| u * u).sum();
    let sum_sigma_u = nf - sum_u_sq; // sum_i (1 - u_hat_i^2)
    let a_u = mu / nf * sum_u_sq;
    if !a_u.is_finite() {
        return Err(Error::NonFinite { quantity: "A_U", iter });
    }
    let scale = (mu / nf).sqrt();

    let b_u = &mut next.b_u;
    b_u.iter_mut().for_each(|x| *x = 0.0);
    for (i, col) in features.nodes().enumerate() {
        let u = prev.u_hat[i];
        if u != 0.0 {
            for (acc, &x) in b_u.iter_mut().zip(col) {
                *acc += x as f64 * u;
            }
        }
    }
    let onsager_v = mu / nf * sum_sigma_u;
    for (acc, &v_old) in b_u.iter_mut().zip(&prev.v_hat) {
        *acc = scale * *acc - onsager_v * v_old;
    }
    if !b_u.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { quantity: "B_U", iter });
    }
    let sigma_v = 1.0 / (1.0 + a_u);
    for (v, &bu) in next.v_hat.iter_mut().zip(b_u.iter()) {
        *v = bu * sigma_v;
    }

    // -- AMP field on u (uses v_hat^(t+1), u_hat^(t)) --
    let v_hat = &next.v_hat;
    let onsager_u = mu / alpha * sigma_v;
    for (i, col) in features.nodes().enumerate() {
        next.b_v[i] = scale * dot_f32_f64(col, v_hat) - onsager_u * prev.u_hat[i];
    }
    if !next.b_v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { quantity: "B_V", iter });
    }

    // -- global field h (uses u_hat^(t)) --
    let (c_in, c_out) = (affinity.c_in, affinity.c_out);
    let sum_u: f64 = prev.u_hat.iter().sum();
    let s_plus = 0.5 * (nf + sum_u);
    let s_minus = nf - s_plus;
    let h_plus = (c_in * s_plus + c_out * s_minus) / nf;
    let h_minus = (c_out * s_plus + c_in * s_minus) / nf;
    if !(h_plus.is_finite() && h_minus.is_finite()) {
        return Err(Error::NonFinite { quantity: "h", iter });
    }
    for i in 0..n {
        next.tilde_plus[i] = -h_plus + priors.plus[i] + next.b_v[i];
        next.tilde_minus[i] = -h_minus + priors.minus[i] - next.b_v[i];
    }

    // -- BP update of messages and marginals (uses chi^(t)) --
    let dc = c_in - c_out;
    let mut max_delta = 0.0f64;
    let mut terms: Vec<f64> = Vec::new();
    for i in 0..n {
        let range = graph.out_range(i);
        terms.clear();
        let mut total = 0.0f64;
        for e in range.clone() {
            let chi_in = prev.chi_dir[graph.reverse_id(e)];
            let num = (c_out + dc * chi_in).max(1e-300);
            let den = (c_in - dc * chi_in).max(1e-300);
            let t = num.ln() - den.ln();
            terms.push(t);
            total += t;
        }
        let local = next.tilde_plus[i] - next.tilde_minus[i];
        for (k, e) in range.clone().enumerate() {
            let x = local + (total - terms[k]);
            let fresh = sigmoid(x);
            if fresh.is_nan() {
                return Err(Error::NonFinite { quantity: "chi_dir", iter });
            }
            let old = prev.chi_dir[e];
            let updated = if damping > 0.0 {
                (1.0 - damping) * fresh + damping * old
            } else {
                fresh
            };
            let d = (updated - old).abs();
            if d > max_delta {
                max_delta = d;
            }
            next.chi_dir[e] = updated;
        }
        let marg = sigmoid(local + total);
        if marg.is_nan() {
            return Err(Error::NonFinite { quantity: "chi_node", iter });
        }
        let d = (marg - prev.chi_node[i]).abs();
        if d > max_delta {
            max_delta = d;
        }
        next.chi_node[i] = marg;
        next.u_hat[i] = 2.0 * marg - 1.0;
    }

    next.a_u = a_u;
    next.sigma_v = sigma_v;
    next.field = [h_plus, h_minus];
    next.iter = prev.iter + 1;
    Ok(max_delta)
}

/// Runs AMP-BP with the instance's own generative parameters and ground truth.
pub fn run(
    instance: &Instance,
    supervision: &Supervision,
    options: &RunOptions,
) -> Result<FixedPoint> {
    let affinity = instance.params.affinity();
    run_with(
        instance,
        supervision,
        &affinity,
        instance.params.snr_mu,
        Some(&instance.truth_labels),
        options,
        None,
    )
}

/// Full-control driver: explicit `(affinity, mu)` (which may differ from the
/// generative ones, as in EM), optional ground truth for the overlap trace,
/// and an optional warm-start state.
pub fn run_with(
    instance: &Instance,
    supervision: &Supervision,
    affinity: &Affinity,
    mu: f64,
    truth: Option<&[i8]>,
    options: &RunOptions,
    warm_start: Option<&MessageState>,
) -> Result<FixedPoint> {
    options.validate()?;
    if options.criterion == Criterion::OverlapChange && truth.is_none() {
        return Err(Error::InvalidParameter(
            "overlap-change criterion requires ground truth".into(),
        ));
    }
    let priors = LogPriors::new(supervision);
    let mut cur = match warm_start {
        Some(s) => s.clone(),
        None => init_state(instance, supervision, options),
    };
    let mut nxt = cur.clone();
    let has_test = supervision.n_revealed() < instance.n();
    let mut trace: Option<Vec<f64>> = match truth {
        Some(_) if has_test => Some(Vec::new()),
        _ => None,
    };
    if options.criterion == Criterion::OverlapChange && !has_test {
        return Err(Error::EmptyTestSet);
    }

    let mut converged = false;
    let mut iters_used = 0;
    let mut hard: Vec<i8> = Vec::new();
    for _ in 0..options.max_iters {
        let delta = step_into(&cur, &mut nxt, instance, &priors, affinity, mu, options.damping)?;
        std::mem::swap(&mut cur, &mut nxt);
        iters_used += 1;

        let q_now = if let (Some(trace), Some(truth)) = (trace.as_mut(), truth) {
            hard = cur.u_hat.iter().map(|&u| hard_label(u)).collect();
            let q = overlap(&hard, truth, &supervision.revealed)?;
            trace.push(q);
            Some(q)
        } else {
            None
        };

        if iters_used < options.min_iters {
            continue;
        }
        match options.criterion {
            Criterion::MessageChange => {
                if delta < options.msg_tol {
                    converged = true;
                    break;
                }
            }
            Criterion::OverlapChange => {
                let t = trace.as_ref().expect("trace present under overlap criterion");
                if t.len() >= 2 {
                    let q = q_now.expect("overlap computed");
                    if (q - t[t.len() - 2]).abs() < options.overlap_tol {
                        converged = true;
                        break;
                    }
                }
            }
        }
    }
    let hard_labels = if hard.len() == instance.n() {
        hard
    } else {
        cur.u_hat.iter().map(|&u| hard_label(u)).collect()
    };
    Ok(FixedPoint {
        state: cur,
        converged,
        iters_used,
        overlap_trace: trace,
        hard_labels,
    })
}

/// Test overlap of Eq.-style rescaling: raw agreement over the hidden nodes,
/// maximized over the global sign flip, mapped to `[0, 1]` with 0 = chance.
pub fn overlap(hard: &[i8], truth: &[i8], revealed: &[bool]) -> Result<f64> {
    assert_eq!(hard.len(), truth.len());
    assert_eq!(hard.len(), revealed.len());
    let mut test = 0usize;
    let mut agree = 0usize;
    for i in 0..hard.len() {
        if !revealed[i] {
            test += 1;
            if hard[i] == truth[i] {
                agree += 1;
            }
        }
    }
    if test == 0 {
        return Err(Error::EmptyTestSet);
    }
    let q_hat = agree.max(test - agree) as f64 / test as f64;
    Ok(2.0 * q_hat - 1.0)
}

/// Mean squared error of the centroid estimate.
pub fn mse_v(v_hat: &[f64], v_truth: &[f64]) -> f64 {
    assert_eq!(v_hat.len(), v_truth.len());
    v_hat
        .iter()
        .zip(v_truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / v_hat.len() as f64
}
