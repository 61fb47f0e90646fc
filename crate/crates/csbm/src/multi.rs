//! AMP-BP for `r` unbalanced communities with a general symmetric affinity
//! matrix, one-hot labels and matrix-valued Onsager terms.
//!
//! Labels are the canonical basis vectors of `R^r`; centroids are `r`-vectors
//! per feature. The iteration mirrors the binary solver with the scalars
//! promoted to `r x r` matrices: `A_U = (mu/N) sum_i u_hat_i u_hat_i'`,
//! `v_hat = (I + A_U)^{-1} B_U`, `sigma_V = (I + A_U)^{-1}`, and the message
//! update keeps the quadratic term `-s' A_V s / 2` explicitly, which does not
//! cancel in the one-hot encoding.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::model::{Features, Instance, Supervision, DEFAULT_FEATURE_BUDGET};
use crate::rng;

/// Hyperparameters of the multi-community CSBM.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiParams {
    pub n_nodes: usize,
    pub feature_dim: usize,
    /// Group membership probabilities, length `r`, summing to 1.
    pub group_prior: Vec<f64>,
    /// Symmetric nonnegative `r x r` affinity matrix, row-major; edge
    /// probability between groups `s` and `t` is `C[s][t] / N`.
    pub affinity: Vec<f64>,
    pub snr_mu: f64,
    pub train_fraction: f64,
    pub label_flip_keep_prob: f64,
}

impl MultiParams {
    pub fn r(&self) -> usize {
        self.group_prior.len()
    }

    pub fn alpha(&self) -> f64 {
        self.n_nodes as f64 / self.feature_dim as f64
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.r();
        if r < 2 {
            return Err(Error::InvalidParameter("need at least 2 groups".into()));
        }
        if self.affinity.len() != r * r {
            return Err(Error::InvalidParameter(format!(
                "affinity must be {r}x{r}"
            )));
        }
        let sum: f64 = self.group_prior.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.group_prior.iter().any(|&p| !(0.0..=1.0).contains(&p))
        {
            return Err(Error::InvalidParameter(
                "group_prior must be a probability vector".into(),
            ));
        }
        for s in 0..r {
            for t in 0..r {
                let c = self.affinity[s * r + t];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::InvalidParameter(
                        "affinity entries must be finite and nonnegative".into(),
                    ));
                }
                if (c - self.affinity[t * r + s]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("affinity must be symmetric".into()));
                }
                if c / self.n_nodes as f64 > 1.0 {
                    return Err(Error::InvalidParameter(
                        "edge probability exceeds 1".into(),
                    ));
                }
            }
        }
        if !self.snr_mu.is_finite() || self.snr_mu < 0.0 {
            return Err(Error::InvalidParameter("snr_mu must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.train_fraction)
            || !(0.0..=1.0).contains(&self.label_flip_keep_prob)
        {
            return Err(Error::InvalidParameter(
                "train_fraction and label_flip_keep_prob must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Balanced binary-style parameters from `(d, lambda)`, as a bridge to
    /// the two-group model.
    pub fn balanced_binary(
        n_nodes: usize,
        feature_dim: usize,
        d: f64,
        lambda: f64,
        mu: f64,
    ) -> Result<Self> {
        let aff = crate::model::Affinity::from_snr(d, lambda)?;
        Ok(Self {
            n_nodes,
            feature_dim,
            group_prior: vec![0.5, 0.5],
            affinity: vec![aff.c_in, aff.c_out, aff.c_out, aff.c_in],
            snr_mu: mu,
            train_fraction: 0.0,
            label_flip_keep_prob: 1.0,
        })
    }
}

/// One sampled multi-community dataset.
#[derive(Debug, Clone)]
pub struct MultiInstance {
    pub graph: SparseGraph,
    pub features: Features,
    /// Group index per node, in `0..r`.
    pub truth_groups: Vec<u8>,
    /// Centroids, `P x r` row-major (`centroids[beta * r + s]`).
    pub centroids: Vec<f64>,
    pub params: MultiParams,
    pub seed: u64,
}

impl MultiInstance {
    pub fn n(&self) -> usize {
        self.params.n_nodes
    }

    pub fn p(&self) -> usize {
        self.params.feature_dim
    }

    pub fn r(&self) -> usize {
        self.params.r()
    }

    /// Re-encodes a binary instance in the one-hot two-group form
    /// (+1 -> group 0, -1 -> group 1). The feature matrix is shared. The
    /// one-hot feature model matches the binary one only at `mu = 0`, where
    /// both reduce to the same graph-plus-prior posterior; for `mu > 0` the
    /// one-hot model with `mu_multi = 2 mu_binary` agrees with the binary
    /// model only up to `O(1/sqrt(N))` finite-size terms.
    pub fn from_binary(instance: &Instance, mu_multi: f64) -> Result<Self> {
        let aff = instance.params.affinity();
        let params = MultiParams {
            n_nodes: instance.n(),
            feature_dim: instance.p(),
            group_prior: vec![0.5, 0.5],
            affinity: vec![aff.c_in, aff.c_out, aff.c_out, aff.c_in],
            snr_mu: mu_multi,
            train_fraction: instance.params.train_fraction,
            label_flip_keep_prob: instance.params.label_flip_keep_prob,
        };
        params.validate()?;
        let truth_groups = instance
            .truth_labels
            .iter()
            .map(|&u| if u > 0 { 0u8 } else { 1u8 })
            .collect();
        let mut centroids = vec![0.0; instance.p() * 2];
        for beta in 0..instance.p() {
            centroids[beta * 2] = instance.centroids[beta];
            centroids[beta * 2 + 1] = -instance.centroids[beta];
        }
        Ok(Self {
            graph: instance.graph.clone(),
            features: instance.features.clone(),
            truth_groups,
            centroids,
            params,
            seed: instance.seed,
        })
    }
}

/// Samples a multi-community instance; deterministic given `(params, seed)`.
pub fn sample_multi_instance(params: &MultiParams, seed: u64) -> Result<MultiInstance> {
    params.validate()?;
    let n = params.n_nodes;
    let p = params.feature_dim;
    let r = params.r();
    let required = n as u64 * p as u64;
    if required > DEFAULT_FEATURE_BUDGET {
        return Err(Error::ResourceBudget {
            what: "feature matrix",
            required,
            budget: DEFAULT_FEATURE_BUDGET,
        });
    }

    let mut label_rng = rng::stream(seed, "labels");
    let cdf: Vec<f64> = params
        .group_prior
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let truth_groups: Vec<u8> = (0..n)
        .map(|_| {
            let x = label_rng.random::<f64>();
            cdf.iter().position(|&c| x < c).unwrap_or(r - 1) as u8
        })
        .collect();

    let mut graph_rng = rng::stream(seed, "graph");
    let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); r];
    for (i, &g) in truth_groups.iter().enumerate() {
        blocks[g as usize].push(i as u32);
    }
    let mut edges = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    for s in 0..r {
        for t in s..r {
            let prob = params.affinity[s * r + t] / n as f64;
            if prob <= 0.0 {
                continue;
            }
            if s == t {
                sample_within(&blocks[s], prob, &mut graph_rng, &mut edges, &mut seen, n);
            } else {
                sample_between(
                    &blocks[s],
                    &blocks[t],
                    prob,
                    &mut graph_rng,
                    &mut edges,
                    &mut seen,
                    n,
                );
            }
        }
    }
    let graph = SparseGraph::from_edges(n, &edges)?;

    let mut centroid_rng = rng::stream(seed, "centroids");
    let centroids: Vec<f64> = (0..p * r)
        .map(|_| StandardNormal.sample(&mut centroid_rng))
        .collect();

    let mut noise_rng = rng::stream(seed, "noise");
    let scale = (params.snr_mu / n as f64).sqrt();
    let mut data = vec![0f32; n * p];
    for (i, chunk) in data.chunks_exact_mut(p).enumerate() {
        let g = truth_groups[i] as usize;
        for (beta, x) in chunk.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *x = (scale * centroids[beta * r + g] + z) as f32;
        }
    }

    Ok(MultiInstance {
        graph,
        features: Features::new(p, n, data),
        truth_groups,
        centroids,
        params: params.clone(),
        seed,
    })
}

fn pair_key(a: u32, b: u32, n: usize) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    lo as u64 * n as u64 + hi as u64
}

fn sample_within<R: Rng>(
    nodes: &[u32],
    p: f64,
    rng: &mut R,
    edges: &mut Vec<(u32, u32)>,
    seen: &mut HashSet<u64>,
    n: usize,
) {
    let m = nodes.len() as u64;
    if m < 2 {
        return;
    }
    let count = Binomial::new(m * (m - 1) / 2, p)
        .expect("valid binomial")
        .sample(rng);
    let mut placed = 0;
    while placed < count {
        let a = nodes[rng.random_range(0..nodes.len())];
        let b = nodes[rng.random_range(0..nodes.len())];
        if a != b && seen.insert(pair_key(a, b, n)) {
            edges.push((a.min(b), a.max(b)));
            placed += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_between<R: Rng>(
    left: &[u32],
    right: &[u32],
    p: f64,
    rng: &mut R,
    edges: &mut Vec<(u32, u32)>,
    seen: &mut HashSet<u64>,
    n: usize,
) {
    if left.is_empty() || right.is_empty() {
        return;
    }
    let count = Binomial::new(left.len() as u64 * right.len() as u64, p)
        .expect("valid binomial")
        .sample(rng);
    let mut placed = 0;
    while placed < count {
        let a = left[rng.random_range(0..left.len())];
        let b = right[rng.random_range(0..right.len())];
        if seen.insert(pair_key(a, b, n)) {
            edges.push((a.min(b), a.max(b)));
            placed += 1;
        }
    }
}

/// Per-node prior rows over the `r` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSupervision {
    pub revealed: Vec<bool>,
    /// `N x r` row-major probability vectors.
    pub prior: Vec<f64>,
    pub r: usize,
}

impl MultiSupervision {
    pub fn prior_row(&self, i: usize) -> &[f64] {
        &self.prior[i * self.r..(i + 1) * self.r]
    }

    pub fn n_revealed(&self) -> usize {
        self.revealed.iter().filter(|&&x| x).count()
    }

    /// Hidden-node priors set to the group prior (the unbalanced analogue of
    /// the uniform binary prior).
    pub fn unsupervised(n: usize, group_prior: &[f64]) -> Self {
        let r = group_prior.len();
        let mut prior = Vec::with_capacity(n * r);
        for _ in 0..n {
            prior.extend_from_slice(group_prior);
        }
        Self {
            revealed: vec![false; n],
            prior,
            r,
        }
    }

    /// Whether node `i` carries a point-mass prior.
    pub fn is_pinned(&self, i: usize) -> bool {
        self.revealed[i] && self.prior_row(i).iter().any(|&p| p == 1.0)
    }

    /// Two-group supervision from the binary representation.
    pub fn from_binary(supervision: &Supervision) -> Self {
        let n = supervision.revealed.len();
        let mut prior = Vec::with_capacity(n * 2);
        for &p in &supervision.node_prior_plus {
            prior.push(p);
            prior.push(1.0 - p);
        }
        Self {
            revealed: supervision.revealed.clone(),
            prior,
            r: 2,
        }
    }
}

/// Reveals `round(rho * N)` nodes; a revealed label is the truth with
/// probability `q`, otherwise uniform over the other `r - 1` groups, and the
/// prior encodes exactly that distribution.
pub fn make_multi_supervision(
    instance: &MultiInstance,
    rho: f64,
    q: f64,
    seed: u64,
) -> Result<MultiSupervision> {
    if !(0.0..=1.0).contains(&rho) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "rho and q must lie in [0, 1], got rho={rho}, q={q}"
        )));
    }
    let n = instance.n();
    let r = instance.r();
    let mut sup = MultiSupervision::unsupervised(n, &instance.params.group_prior);
    let k = (rho * n as f64).round() as usize;
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut pick_rng = rng::stream(seed, "reveal");
    for step in 0..k.min(n) {
        let j = pick_rng.random_range(step..n);
        order.swap(step, j);
    }
    let mut flip_rng = rng::stream(seed, "flip");
    for &iu in &order[..k.min(n)] {
        let i = iu as usize;
        sup.revealed[i] = true;
        let truth = instance.truth_groups[i] as usize;
        let obs = if flip_rng.random::<f64>() < q {
            truth
        } else {
            // uniform over the other groups
            let mut g = flip_rng.random_range(0..r - 1);
            if g >= truth {
                g += 1;
            }
            g
        };
        let row = &mut sup.prior[i * r..(i + 1) * r];
        if q == 1.0 {
            row.iter_mut().for_each(|x| *x = 0.0);
            row[obs] = 1.0;
        } else {
            let off = (1.0 - q) / (r - 1) as f64;
            row.iter_mut().for_each(|x| *x = off);
            row[obs] = q;
        }
    }
    Ok(sup)
}

/// Full iteration state of the multi-community solver.
#[derive(Debug, Clone)]
pub struct MultiState {
    /// Directed-edge messages, `2|E| x r` row-major probability vectors.
    pub chi_dir: Vec<f64>,
    /// Node marginals, `N x r`; these are also the posterior means `u_hat`
    /// of the one-hot labels.
    pub chi_node: Vec<f64>,
    /// Centroid means, `P x r`.
    pub v_hat: Vec<f64>,
    /// `r x r` matrices, row-major.
    pub a_u: Vec<f64>,
    pub sigma_v: Vec<f64>,
    pub a_v: Vec<f64>,
    pub b_u: Vec<f64>,
    pub b_v: Vec<f64>,
    /// Global field, length `r`.
    pub field: Vec<f64>,
    pub iter: usize,
}

impl MultiState {
    pub fn u_hat(&self, i: usize) -> &[f64] {
        let r = self.field.len();
        &self.chi_node[i * r..(i + 1) * r]
    }

    /// `sigma_U^i = diag(u_hat_i) - u_hat_i u_hat_i'`.
    pub fn sigma_u(&self, i: usize) -> Vec<f64> {
        let u = self.u_hat(i);
        let r = u.len();
        let mut m = vec![0.0; r * r];
        for s in 0..r {
            for t in 0..r {
                m[s * r + t] = if s == t { u[s] } else { 0.0 } - u[s] * u[t];
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct MultiRunOptions {
    pub max_iters: usize,
    pub msg_tol: f64,
    pub damping: f64,
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for MultiRunOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            msg_tol: 1e-6,
            damping: 0.0,
            init_noise: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiFixedPoint {
    pub state: MultiState,
    pub converged: bool,
    pub iters_used: usize,
    /// `argmax_s chi_s^i`, ties to the lowest group index.
    pub hard_labels: Vec<u8>,
}

/// Messages at the priors plus noise (projected back to the simplex),
/// marginals at the priors, centroids at pure noise.
pub fn init_multi_state(
    instance: &MultiInstance,
    supervision: &MultiSupervision,
    options: &MultiRunOptions,
) -> MultiState {
    let n = instance.n();
    let p = instance.p();
    let r = instance.r();
    let graph = &instance.graph;
    let w = options.init_noise;
    let mut msg_rng = rng::stream(options.seed, "init-msg");
    let mut feat_rng = rng::stream(options.seed, "init-feat");

    let mut chi_dir = vec![0.0; graph.n_directed() * r];
    for i in 0..n {
        let prior = supervision.prior_row(i);
        let pinned = supervision.is_pinned(i);
        for e in graph.out_range(i) {
            let row = &mut chi_dir[e * r..(e + 1) * r];
            row.copy_from_slice(prior);
            if w > 0.0 && !pinned {
                for x in row.iter_mut() {
                    *x = (*x + msg_rng.random::<f64>() * 2.0 * w - w).max(0.0);
                }
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter_mut().for_each(|x| *x /= s);
                }
            }
        }
    }
    let mut chi_node = vec![0.0; n * r];
    for i in 0..n {
        chi_node[i * r..(i + 1) * r].copy_from_slice(supervision.prior_row(i));
    }
    let v_hat: Vec<f64> = (0..p * r)
        .map(|_| {
            if w == 0.0 {
                0.0
            } else {
                feat_rng.random::<f64>() * 2.0 * w - w
            }
        })
        .collect();

    MultiState {
        chi_dir,
        chi_node,
        v_hat,
        a_u: vec![0.0; r * r],
        sigma_v: identity(r),
        a_v: vec![0.0; r * r],
        b_u: vec![0.0; p * r],
        b_v: vec![0.0; n * r],
        field: vec![0.0; r],
        iter: 0,
    }
}

/// One synchronous iteration; returns the next state.
pub fn iterate_multi(
    state: &MultiState,
    instance: &MultiInstance,
    supervision: &MultiSupervision,
) -> Result<MultiState> {
    let mut next = state.clone();
    let log_prior = log_priors(supervision);
    step_multi(state, &mut next, instance, &log_prior, 0.0)?;
    Ok(next)
}

fn log_priors(supervision: &MultiSupervision) -> Vec<f64> {
    supervision.prior.iter().map(|&p| p.ln()).collect()
}

fn identity(r: usize) -> Vec<f64> {
    let mut m = vec![0.0; r * r];
    for s in 0..r {
        m[s * r + s] = 1.0;
    }
    m
}

/// Cholesky factor (lower triangular) of an SPD `r x r` matrix.
fn cholesky(a: &[f64], r: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..=i {
            let mut s = a[i * r + j];
            for k in 0..j {
                s -= l[i * r + k] * l[j * r + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "matrix not positive definite".into(),
                    ));
                }
                l[i * r + j] = s.sqrt();
            } else {
                l[i * r + j] = s / l[j * r + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L L' x = b` in place.
fn solve_cholesky(l: &[f64], r: usize, b: &mut [f64]) {
    for i in 0..r {
        for k in 0..i {
            b[i] = b[i] - l[i * r + k] * b[k];
        }
        b[i] /= l[i * r + i];
    }
    for i in (0..r).rev() {
        for k in i + 1..r {
            b[i] = b[i] - l[k * r + i] * b[k];
        }
        b[i] /= l[i * r + i];
    }
}

fn inverse_spd(a: &[f64], r: usize) -> Result<Vec<f64>> {
    let l = cholesky(a, r)?;
    let mut inv = vec![0.0; r * r];
    let mut col = vec![0.0; r];
    for j in 0..r {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[j] = 1.0;
        solve_cholesky(&l, r, &mut col);
        for i in 0..r {
            inv[i * r + j] = col[i];
        }
    }
    Ok(inv)
}

fn step_multi(
    prev: &MultiState,
    next: &mut MultiState,
    instance: &MultiInstance,
    log_prior: &[f64],
    damping: f64,
) -> Result<f64> {
    let n = instance.n();
    let p = instance.p();
    let r = instance.r();
    let nf = n as f64;
    let alpha = nf / p as f64;
    let mu = instance.params.snr_mu;
    let graph = &instance.graph;
    let features = &instance.features;
    let affinity = &instance.params.affinity;
    let iter = prev.iter;
    let scale = (mu / nf).sqrt();

    // sums over nodes of u u' and of u (u_hat == chi_node)
    let mut sum_uu = vec![0.0; r * r];
    let mut sum_u = vec![0.0; r];
    for u in prev.chi_node.chunks_exact(r) {
        for s in 0..r {
            sum_u[s] += u[s];
            for t in 0..r {
                sum_uu[s * r + t] += u[s] * u[t];
            }
        }
    }
    let a_u: Vec<f64> = sum_uu.iter().map(|x| mu / nf * x).collect();
    // sum_i sigma_U^i = diag(sum_u) - sum_uu
    let mut sum_sigma_u = vec![0.0; r * r];
    for s in 0..r {
        for t in 0..r {
            sum_sigma_u[s * r + t] = if s == t { sum_u[s] } else { 0.0 } - sum_uu[s * r + t];
        }
    }

    // B_U pass: sqrt(mu/N) sum_i B[beta][i] u_hat_i - (mu/N) (sum sigma_U) v_hat_old
    let b_u = &mut next.b_u;
    b_u.iter_mut().for_each(|x| *x = 0.0);
    for (i, col) in features.nodes().enumerate() {
        let u = &prev.chi_node[i * r..(i + 1) * r];
        for (beta, &x) in col.iter().enumerate() {
            let xv = x as f64;
            let acc = &mut b_u[beta * r..(beta + 1) * r];
            for s in 0..r {
                acc[s] += xv * u[s];
            }
        }
    }
    for (beta, v_old) in prev.v_hat.chunks_exact(r).enumerate() {
        let acc = &mut b_u[beta * r..(beta + 1) * r];
        for s in 0..r {
            let mut ons = 0.0;
            for t in 0..r {
                ons += sum_sigma_u[s * r + t] * v_old[t];
            }
            acc[s] = scale * acc[s] - mu / nf * ons;
        }
    }
    if !b_u.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { quantity: "B_U", iter });
    }

    // v_hat = (I + A_U)^{-1} B_U, sigma_V = (I + A_U)^{-1}
    let mut i_plus_au = a_u.clone();
    for s in 0..r {
        i_plus_au[s * r + s] += 1.0;
    }
    let l = cholesky(&i_plus_au, r)?;
    let sigma_v = inverse_spd(&i_plus_au, r)?;
    let mut row = vec![0.0; r];
    for (beta, bu) in b_u.chunks_exact(r).enumerate() {
        row.copy_from_slice(bu);
        solve_cholesky(&l, r, &mut row);
        next.v_hat[beta * r..(beta + 1) * r].copy_from_slice(&row);
    }

    // A_V from the updated centroids
    let mut a_v = vec![0.0; r * r];
    for v in next.v_hat.chunks_exact(r) {
        for s in 0..r {
            for t in 0..r {
                a_v[s * r + t] += v[s] * v[t];
            }
        }
    }
    a_v.iter_mut().for_each(|x| *x *= mu / nf);

    // B_V pass: sqrt(mu/N) sum_beta B[beta][i] v_hat[beta] - (mu/alpha) sigma_V u_hat_i
    let v_hat = &next.v_hat;
    for (i, col) in features.nodes().enumerate() {
        let acc = &mut next.b_v[i * r..(i + 1) * r];
        acc.iter_mut().for_each(|x| *x = 0.0);
        for (beta, &x) in col.iter().enumerate() {
            let xv = x as f64;
            let v = &v_hat[beta * r..(beta + 1) * r];
            for s in 0..r {
                acc[s] += xv * v[s];
            }
        }
        let u = &prev.chi_node[i * r..(i + 1) * r];
        for s in 0..r {
            let mut ons = 0.0;
            for t in 0..r {
                ons += sigma_v[s * r + t] * u[t];
            }
            acc[s] = scale * acc[s] - mu / alpha * ons;
        }
    }
    if !next.b_v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { quantity: "B_V", iter });
    }

    // global field h = (1/N) C sum_i chi^i
    let mut field = vec![0.0; r];
    for s in 0..r {
        let mut acc = 0.0;
        for t in 0..r {
            acc += affinity[s * r + t] * sum_u[t];
        }
        field[s] = acc / nf;
    }
    if !field.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { quantity: "h", iter });
    }

    // log of (C chi)_s per directed edge, from the previous messages
    let n_dir = graph.n_directed();
    let mut ln_cm = vec![0.0; n_dir * r];
    for e in 0..n_dir {
        let chi = &prev.chi_dir[e * r..(e + 1) * r];
        let out = &mut ln_cm[e * r..(e + 1) * r];
        for s in 0..r {
            let mut acc = 0.0;
            for t in 0..r {
                acc += affinity[s * r + t] * chi[t];
            }
            out[s] = acc.max(1e-300).ln();
        }
    }

    // message and marginal updates
    let mut max_delta = 0.0f64;
    let mut logits = vec![0.0; r];
    let mut local = vec![0.0; r];
    let mut incoming_sum = vec![0.0; r];
    for i in 0..n {
        let prior = &log_prior[i * r..(i + 1) * r];
        for s in 0..r {
            local[s] = prior[s] - field[s] + next.b_v[i * r + s] - 0.5 * a_v[s * r + s];
        }
        incoming_sum.iter_mut().for_each(|x| *x = 0.0);
        let range = graph.out_range(i);
        for e in range.clone() {
            let rev = graph.reverse_id(e);
            let inc = &ln_cm[rev * r..(rev + 1) * r];
            for s in 0..r {
                incoming_sum[s] += inc[s];
            }
        }
        for e in range.clone() {
            let rev = graph.reverse_id(e);
            for s in 0..r {
                logits[s] = local[s] + incoming_sum[s] - ln_cm[rev * r + s];
            }
            let out = &mut next.chi_dir[e * r..(e + 1) * r];
            softmax_into(&logits, out)?;
            if damping > 0.0 {
                let old = &prev.chi_dir[e * r..(e + 1) * r];
                for s in 0..r {
                    out[s] = (1.0 - damping) * out[s] + damping * old[s];
                }
            }
            for s in 0..r {
                let d = (out[s] - prev.chi_dir[e * r + s]).abs();
                if d > max_delta {
                    max_delta = d;
                }
            }
        }
        for s in 0..r {
            logits[s] = local[s] + incoming_sum[s];
        }
        let out = &mut next.chi_node[i * r..(i + 1) * r];
        softmax_into(&logits, out)?;
        for s in 0..r {
            let d = (out[s] - prev.chi_node[i * r + s]).abs();
            if d > max_delta {
                max_delta = d;
            }
        }
    }

    next.a_u = a_u;
    next.sigma_v = sigma_v;
    next.a_v = a_v;
    next.field = field;
    next.iter = prev.iter + 1;
    Ok(max_delta)
}

fn softmax_into(logits: &[f64], out: &mut [f64]) -> Result<()> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return Err(Error::NonFinite {
            quantity: "chi",
            iter: 0,
        });
    }
    let mut z = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        let e = (l - m).exp();
        *o = e;
        z += e;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
    Ok(())
}

/// Runs the multi-community solver to the message-change criterion.
pub fn run_multi(
    instance: &MultiInstance,
    supervision: &MultiSupervision,
    options: &MultiRunOptions,
) -> Result<MultiFixedPoint> {
    if options.max_iters == 0 || !(options.msg_tol > 0.0) || !(0.0..1.0).contains(&options.damping)
    {
        return Err(Error::InvalidParameter("invalid run options".into()));
    }
    instance.params.validate()?;
    let log_prior = log_priors(supervision);
    let mut cur = init_multi_state(instance, supervision, options);
    let mut nxt = cur.clone();
    let mut converged = false;
    let mut iters_used = 0;
    for _ in 0..options.max_iters {
        let delta = step_multi(&cur, &mut nxt, instance, &log_prior, options.damping)?;
        std::mem::swap(&mut cur, &mut nxt);
        iters_used += 1;
        if delta < options.msg_tol {
            converged = true;
            break;
        }
    }
    let r = instance.r();
    let hard_labels = cur
        .chi_node
        .chunks_exact(r)
        .map(|row| {
            let mut best = 0usize;
            for s in 1..r {
                if row[s] > row[best] {
                    best = s;
                }
            }
            best as u8
        })
        .collect();
    Ok(MultiFixedPoint {
        state: cur,
        converged,
        iters_used,
        hard_labels,
    })
}

/// Maximum group count for exact permutation alignment.
pub const MAX_EXACT_PERMUTATION_GROUPS: usize = 8;

/// Test overlap for `r` groups: best agreement over group permutations when
/// nothing is revealed (exact search for `r <= 8`, greedy confusion-matrix
/// matching beyond), identity alignment otherwise, rescaled so that the
/// constant largest-group predictor scores 0 and perfect recovery scores 1.
pub fn overlap_multi(
    hard: &[u8],
    truth: &[u8],
    revealed: &[bool],
    group_prior: &[f64],
) -> Result<f64> {
    let r = group_prior.len();
    let test: Vec<usize> = (0..hard.len()).filter(|&i| !revealed[i]).collect();
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let any_revealed = revealed.iter().any(|&x| x);
    let agree_best = if any_revealed {
        test.iter().filter(|&&i| hard[i] == truth[i]).count() as f64
    } else {
        // confusion counts
        let mut counts = vec![0u64; r * r];
        for &i in &test {
            counts[hard[i] as usize * r + truth[i] as usize] += 1;
        }
        if r <= MAX_EXACT_PERMUTATION_GROUPS {
            best_permutation_agreement(&counts, r) as f64
        } else {
            greedy_agreement(&counts, r) as f64
        }
    };
    let q_hat = agree_best / test.len() as f64;
    let chance = group_prior.iter().cloned().fold(0.0, f64::max);
    Ok((q_hat - chance) / (1.0 - chance))
}

fn best_permutation_agreement(counts: &[u64], r: usize) -> u64 {
    let mut perm: Vec<usize> = (0..r).collect();
    let mut best = 0u64;
    heap_permutations(&mut perm, r, &mut |p| {
        let score: u64 = (0..r).map(|s| counts[s * r + p[s]]).sum();
        if score > best {
            best = score;
        }
    });
    best
}

fn heap_permutations<F: FnMut(&[usize])>(arr: &mut [usize], k: usize, f: &mut F) {
    if k == 1 {
        f(arr);
        return;
    }
    for i in 0..k {
        heap_permutations(arr, k - 1, f);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

fn greedy_agreement(counts: &[u64], r: usize) -> u64 {
    let mut used_pred = vec![false; r];
    let mut used_true = vec![false; r];
    let mut total = 0u64;
    for _ in 0..r {
        let mut best = (0usize, 0usize, 0u64);
        let mut found = false;
        for s in 0..r {
            if used_pred[s] {
                continue;
            }
            for t in 0..r {
                if used_true[t] {
                    continue;
                }
                if !found || counts[s * r + t] > best.2 {
                    best = (s, t, counts[s * r + t]);
                    found = true;
                }
            }
        }
        used_pred[best.0] = true;
        used_true[best.1] = true;
        total += best.2;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_group_params(
        n: usize,
        p: usize,
        prior: Vec<f64>,
        d: f64,
        eps: f64,
        mu: f64,
    ) -> MultiParams {
        // affinity with diagonal boost eps over the off-diagonal, mean degree ~ d
        let r = prior.len();
        let c_out = d - eps / r as f64;
        let c_in = c_out + eps;
        let mut affinity = vec![c_out; r * r];
        for s in 0..r {
            affinity[s * r + s] = c_in;
        }
        MultiParams {
            n_nodes: n,
            feature_dim: p,
            group_prior: prior,
            affinity,
            snr_mu: mu,
            train_fraction: 0.0,
            label_flip_keep_prob: 1.0,
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut p = three_group_params(100, 10, vec![0.5, 0.3, 0.2], 4.0, 2.0, 1.0);
        assert!(p.validate().is_ok());
        p.affinity[1] += 0.5; // breaks symmetry
        assert!(p.validate().is_err());
        let mut p2 = three_group_params(100, 10, vec![0.6, 0.3, 0.2], 4.0, 2.0, 1.0);
        assert!(p2.validate().is_err()); // prior does not sum to 1
        p2.group_prior = vec![0.5, 0.3, 0.2];
        p2.snr_mu = -1.0;
        assert!(p2.validate().is_err());
    }

    #[test]
    fn degenerate_prior_puts_all_nodes_in_one_group() {
        let params = three_group_params(200, 10, vec![1.0, 0.0, 0.0], 4.0, 1.5, 0.0);
        let inst = sample_multi_instance(&params, 60).unwrap();
        assert!(inst.truth_groups.iter().all(|&g| g == 0));
        assert!(inst.graph.check_simple());
    }

    #[test]
    fn binary_equivalence_of_generators_is_statistical() {
        // r=2 balanced with C from (d, lambda) matches the binary generator in
        // edge- and label-count distributions
        let d = 5.0;
        let lambda = 1.0;
        let n = 2000usize;
        let mut edges_multi = Vec::new();
        let mut edges_bin = Vec::new();
        let mut plus_multi = Vec::new();
        let mut plus_bin = Vec::new();
        for seed in 0..20u64 {
            let mp = MultiParams::balanced_binary(n, 50, d, lambda, 0.0).unwrap();
            let mi = sample_multi_instance(&mp, seed).unwrap();
            edges_multi.push(mi.graph.n_edges() as f64);
            plus_multi.push(mi.truth_groups.iter().filter(|&&g| g == 0).count() as f64);

            let bp = crate::model::ModelParams::new(n, 50, d, lambda, 0.0);
            let bi = crate::model::sample_instance(&bp, seed).unwrap();
            edges_bin.push(bi.graph.n_edges() as f64);
            plus_bin.push(bi.truth_labels.iter().filter(|&&u| u > 0).count() as f64);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let expect_edges = n as f64 * d / 2.0;
        let sd_edges = (n as f64 * d / 2.0).sqrt() / 20f64.sqrt();
        assert!((mean(&edges_multi) - expect_edges).abs() < 4.0 * sd_edges);
        assert!((mean(&edges_bin) - expect_edges).abs() < 4.0 * sd_edges);
        let sd_labels = (n as f64 / 4.0).sqrt() / 20f64.sqrt();
        assert!((mean(&plus_multi) - n as f64 / 2.0).abs() < 4.0 * sd_labels);
        assert!((mean(&plus_bin) - n as f64 / 2.0).abs() < 4.0 * sd_labels);
    }

    #[test]
    fn features_at_mu_zero_are_label_independent() {
        let params = three_group_params(300, 20, vec![0.5, 0.3, 0.2], 4.0, 1.5, 0.0);
        let inst = sample_multi_instance(&params, 61).unwrap();
        for g in 0..3u8 {
            let idx: Vec<usize> = (0..300).filter(|&i| inst.truth_groups[i] == g).collect();
            let m: f64 = idx.iter().map(|&i| inst.features.get(0, i)).sum::<f64>()
                / idx.len() as f64;
            assert!(m.abs() < 5.0 / (idx.len() as f64).sqrt(), "group {g}: {m}");
        }
    }

    #[test]
    fn simplex_and_psd_invariants_hold() {
        let params = three_group_params(300, 60, vec![0.5, 0.3, 0.2], 5.0, 3.0, 2.0);
        let inst = sample_multi_instance(&params, 62).unwrap();
        let sup = make_multi_supervision(&inst, 0.2, 1.0, 63).unwrap();
        let opts = MultiRunOptions::default();
        let mut st = init_multi_state(&inst, &sup, &opts);
        for _ in 0..8 {
            st = iterate_multi(&st, &inst, &sup).unwrap();
            for row in st.chi_dir.chunks_exact(3).chain(st.chi_node.chunks_exact(3)) {
                assert!(row.iter().all(|&x| x >= -1e-12));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            // sigma_V (I + A_U) = I
            let r = 3;
            for s in 0..r {
                for t in 0..r {
                    let mut acc = 0.0;
                    for k in 0..r {
                        let iau = if k == t { 1.0 } else { 0.0 } + st.a_u[k * r + t];
                        acc += st.sigma_v[s * r + k] * iau;
                    }
                    let expect = if s == t { 1.0 } else { 0.0 };
                    assert!((acc - expect).abs() < 1e-10);
                }
            }
            // sigma_U PSD: check the quadratic form on a few probes
            let su = st.sigma_u(5);
            for probe in [[1.0, 0.0, 0.0], [1.0, -1.0, 0.5], [0.3, 0.3, 0.4]] {
                let mut q = 0.0;
                for s in 0..r {
                    for t in 0..r {
                        q += probe[s] * su[s * r + t] * probe[t];
                    }
                }
                assert!(q >= -1e-12, "quadratic form {q}");
            }
        }
    }

    #[test]
    fn pinned_nodes_stay_pinned() {
        let params =
            three_group_params(200, 30, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 5.0, 3.0, 1.0);
        let inst = sample_multi_instance(&params, 64).unwrap();
        let sup = make_multi_supervision(&inst, 1.0, 1.0, 65).unwrap();
        let fp = run_multi(&inst, &sup, &MultiRunOptions::default()).unwrap();
        for i in 0..200 {
            assert_eq!(fp.hard_labels[i], inst.truth_groups[i]);
            let row = fp.state.u_hat(i);
            assert!((row[inst.truth_groups[i] as usize] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn group_relabeling_equivariance() {
        // permuting group indices in (C, prior, truth, supervision) permutes outputs
        let params = three_group_params(150, 30, vec![0.5, 0.3, 0.2], 5.0, 3.0, 1.5);
        let inst = sample_multi_instance(&params, 66).unwrap();
        let sup = make_multi_supervision(&inst, 0.3, 1.0, 67).unwrap();
        let opts = MultiRunOptions {
            init_noise: 0.0,
            max_iters: 30,
            msg_tol: 1e-30,
            ..Default::default()
        };
        let fp = run_multi(&inst, &sup, &opts).unwrap();

        // relabel 0 -> 1 -> 2 -> 0
        let perm = [1usize, 2, 0];
        let r = 3;
        let mut params2 = params.clone();
        for s in 0..r {
            params2.group_prior[perm[s]] = params.group_prior[s];
            for t in 0..r {
                params2.affinity[perm[s] * r + perm[t]] = params.affinity[s * r + t];
            }
        }
        let mut inst2 = inst.clone();
        inst2.params = params2;
        inst2.truth_groups = inst
            .truth_groups
            .iter()
            .map(|&g| perm[g as usize] as u8)
            .collect();
        let mut centroids2 = vec![0.0; inst.p() * r];
        for beta in 0..inst.p() {
            for s in 0..r {
                centroids2[beta * r + perm[s]] = inst.centroids[beta * r + s];
            }
        }
        inst2.centroids = centroids2;
        let mut sup2 = sup.clone();
        for i in 0..150 {
            for s in 0..r {
                sup2.prior[i * r + perm[s]] = sup.prior[i * r + s];
            }
        }
        let fp2 = run_multi(&inst2, &sup2, &opts).unwrap();
        for i in 0..150 {
            for s in 0..r {
                let a = fp.state.chi_node[i * r + s];
                let b = fp2.state.chi_node[i * r + perm[s]];
                assert!((a - b).abs() < 1e-12, "node {i} group {s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn overlap_multi_examples() {
        let prior = vec![1.0 / 3.0; 3];
        let truth: Vec<u8> = (0..300).map(|i| (i % 3) as u8).collect();
        let revealed = vec![false; 300];
        // perfect recovery up to permutation
        let hard: Vec<u8> = truth.iter().map(|&g| (g + 1) % 3).collect();
        let q = overlap_multi(&hard, &truth, &revealed, &prior).unwrap();
        assert!((q - 1.0).abs() < 1e-12);
        // constant predictor = largest group scores 0
        let constant = vec![0u8; 300];
        let q = overlap_multi(&constant, &truth, &revealed, &prior).unwrap();
        assert!(q.abs() < 1e-12);
        // uniform random predictor is near zero (permutation max inflates it
        // slightly at this size)
        let mut rng = crate::rng::stream(9, "overlap-null");
        let rand_pred: Vec<u8> = (0..300).map(|_| rng.random_range(0..3u8)).collect();
        let q = overlap_multi(&rand_pred, &truth, &revealed, &prior).unwrap();
        assert!(q.abs() < 3.0 / (300.0f64).sqrt() + 0.05, "q = {q}");
        // empty test set
        assert!(overlap_multi(&hard, &truth, &vec![true; 300], &prior).is_err());
    }

    #[test]
    fn below_threshold_three_groups_give_no_overlap() {
        // weak diagonal boost, mu = 0, unsupervised: overlap stays near zero
        let params = three_group_params(3000, 300, vec![1.0 / 3.0; 3], 5.0, 0.8, 0.0);
        let inst = sample_multi_instance(&params, 68).unwrap();
        let sup = MultiSupervision::unsupervised(3000, &params.group_prior);
        let fp = run_multi(&inst, &sup, &MultiRunOptions::default()).unwrap();
        let q = overlap_multi(
            &fp.hard_labels,
            &inst.truth_groups,
            &sup.revealed,
            &params.group_prior,
        )
        .unwrap();
        assert!(q.abs() < 0.05, "q = {q}");
    }

    #[test]
    fn recovers_three_groups_at_high_snr_with_supervision() {
        let params = three_group_params(2000, 200, vec![1.0 / 3.0; 3], 8.0, 12.0, 3.0);
        let inst = sample_multi_instance(&params, 69).unwrap();
        let sup = make_multi_supervision(&inst, 0.1, 1.0, 70).unwrap();
        let fp = run_multi(&inst, &sup, &MultiRunOptions::default()).unwrap();
        assert!(fp.converged);
        let q = overlap_multi(
            &fp.hard_labels,
            &inst.truth_groups,
            &sup.revealed,
            &params.group_prior,
        )
        .unwrap();
        assert!(q > 0.5, "q = {q}");
    }

    #[test]
    fn noisy_multi_supervision_priors() {
        let params = three_group_params(200, 10, vec![1.0 / 3.0; 3], 5.0, 3.0, 0.0);
        let inst = sample_multi_instance(&params, 71).unwrap();
        let sup = make_multi_supervision(&inst, 0.5, 0.7, 72).unwrap();
        for i in 0..200 {
            let row = sup.prior_row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if sup.revealed[i] {
                let hi = row.iter().cloned().fold(0.0, f64::max);
                assert!((hi - 0.7).abs() < 1e-12);
            }
        }
    }
}
