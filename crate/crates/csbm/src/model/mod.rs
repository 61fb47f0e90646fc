//! CSBM parameters, instance generation and semi-supervised priors.
//!
//! The generative model: `N` nodes carry hidden labels `u_i` drawn i.i.d.
//! Rademacher. An undirected simple graph is drawn with edge probability
//! `c_in / N` inside a group and `c_out / N` across groups, parameterized by
//! the average degree `d` and the graph snr `lambda` through
//! `c_in = d + lambda * sqrt(d)`, `c_out = d - lambda * sqrt(d)`. Features are
//! `B[beta][i] = sqrt(mu / N) * v[beta] * u_i + Z[beta][i]` with standard
//! normal centroids `v` and noise `Z`. Supervision reveals a fraction `rho`
//! of labels, each kept with probability `q` and flipped otherwise, and is
//! injected as node-dependent priors.

pub mod io;

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::rng;

/// Default cap on `N * P` feature elements (one instance at 4 bytes per
/// element stays within a few gigabytes).
pub const DEFAULT_FEATURE_BUDGET: u64 = 1_200_000_000;

/// Hyperparameters of the binary CSBM.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of nodes `N`.
    pub n_nodes: usize,
    /// Feature dimension `P`.
    pub feature_dim: usize,
    /// Average degree `d`.
    pub avg_degree: f64,
    /// Graph signal-to-noise ratio `lambda`.
    pub snr_lambda: f64,
    /// Feature signal strength `mu` (nonnegative).
    pub snr_mu: f64,
    /// Fraction `rho` of revealed labels.
    pub train_fraction: f64,
    /// Probability `q` that a revealed label is the true one (1 = noiseless).
    pub label_flip_keep_prob: f64,
    /// Number of groups `r` (2 for the binary model).
    pub num_groups: usize,
}

impl ModelParams {
    /// Binary model with noiseless supervision; `alpha = N / P`.
    pub fn new(n_nodes: usize, feature_dim: usize, avg_degree: f64, lambda: f64, mu: f64) -> Self {
        Self {
            n_nodes,
            feature_dim,
            avg_degree,
            snr_lambda: lambda,
            snr_mu: mu,
            train_fraction: 0.0,
            label_flip_keep_prob: 1.0,
            num_groups: 2,
        }
    }

    /// The aspect ratio `alpha = N / P`.
    pub fn alpha(&self) -> f64 {
        self.n_nodes as f64 / self.feature_dim as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.feature_dim == 0 {
            return Err(Error::InvalidParameter(
                "n_nodes and feature_dim must be positive".into(),
            ));
        }
        if !self.avg_degree.is_finite() || self.avg_degree < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "avg_degree must be finite and nonnegative, got {}",
                self.avg_degree
            )));
        }
        Affinity::from_snr(self.avg_degree, self.snr_lambda)?;
        if !self.snr_mu.is_finite() || self.snr_mu < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "snr_mu must be finite and nonnegative, got {}",
                self.snr_mu
            )));
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(Error::InvalidParameter(format!(
                "train_fraction must be in [0, 1], got {}",
                self.train_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.label_flip_keep_prob) {
            return Err(Error::InvalidParameter(format!(
                "label_flip_keep_prob must be in [0, 1], got {}",
                self.label_flip_keep_prob
            )));
        }
        if self.num_groups < 2 {
            return Err(Error::InvalidParameter(
                "num_groups must be at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn affinity(&self) -> Affinity {
        Affinity::from_snr(self.avg_degree, self.snr_lambda)
            .expect("validated parameters yield a valid affinity")
    }
}

/// The pair of SBM affinity coefficients (the 2x2 matrix
/// `[[c_in, c_out], [c_out, c_in]]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affinity {
    pub c_in: f64,
    pub c_out: f64,
}

impl Affinity {
    /// `c_in = d + lambda * sqrt(d)`, `c_out = d - lambda * sqrt(d)`.
    /// Rejects `|lambda| >= sqrt(d)` (negative edge probability), except for
    /// the degenerate no-graph point `lambda = 0`, `d = 0`.
    pub fn from_snr(d: f64, lambda: f64) -> Result<Self> {
        if !d.is_finite() || d < 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "affinity requires finite d >= 0 and finite lambda, got d={d}, lambda={lambda}"
            )));
        }
        if lambda != 0.0 && lambda.abs() >= d.sqrt() {
            return Err(Error::InvalidParameter(format!(
                "|lambda| = {} must be < sqrt(d) = {}",
                lambda.abs(),
                d.sqrt()
            )));
        }
        let s = lambda * d.sqrt();
        Ok(Self {
            c_in: d + s,
            c_out: d - s,
        })
    }

    pub fn mean_degree(&self) -> f64 {
        0.5 * (self.c_in + self.c_out)
    }

    pub fn new(c_in: f64, c_out: f64) -> Result<Self> {
        if !(c_in.is_finite() && c_out.is_finite()) || c_in < 0.0 || c_out < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "affinities must be finite and nonnegative, got ({c_in}, {c_out})"
            )));
        }
        Ok(Self { c_in, c_out })
    }
}

/// Feature matrix of shape `P x N`, stored column-major by node: all `P`
/// features of node `i` are contiguous. Storage is f32 to halve memory
/// traffic in the `O(NP)` inner loops; all accumulations are f64. The on-disk
/// format ([`io`]) is 64-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    p: usize,
    n: usize,
    data: Vec<f32>,
}

impl Features {
    pub fn new(p: usize, n: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), p * n);
        Self { p, n, data }
    }

    pub fn zeros(p: usize, n: usize) -> Self {
        Self {
            p,
            n,
            data: vec![0.0; p * n],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The `P` features of node `i`.
    #[inline]
    pub fn node(&self, i: usize) -> &[f32] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn get(&self, beta: usize, i: usize) -> f64 {
        self.data[i * self.p + beta] as f64
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    /// Iterate nodes as contiguous feature slices.
    pub fn nodes(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.p)
    }
}

/// One sampled CSBM dataset.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: SparseGraph,
    pub features: Features,
    /// Ground-truth labels in {-1, +1}.
    pub truth_labels: Vec<i8>,
    /// Centroid vector `v` of length `P`.
    pub centroids: Vec<f64>,
    pub params: ModelParams,
    pub seed: u64,
}

impl Instance {
    /// Assembles an instance from explicit parts (deserialization, oracles,
    /// hand-built test fixtures).
    pub fn from_parts(
        graph: SparseGraph,
        features: Features,
        truth_labels: Vec<i8>,
        centroids: Vec<f64>,
        params: ModelParams,
        seed: u64,
    ) -> Result<Self> {
        if graph.n_nodes() != params.n_nodes
            || features.n() != params.n_nodes
            || features.p() != params.feature_dim
            || truth_labels.len() != params.n_nodes
            || centroids.len() != params.feature_dim
        {
            return Err(Error::InvalidParameter(
                "instance parts have inconsistent shapes".into(),
            ));
        }
        Ok(Self {
            graph,
            features,
            truth_labels,
            centroids,
            params,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n_nodes
    }

    pub fn p(&self) -> usize {
        self.params.feature_dim
    }
}

/// Samples an instance with the default feature-memory budget.
///
/// Deterministic given `(params, seed)`: labels, graph, centroids and noise
/// are drawn from fixed derived streams (see [`crate::rng`]).
pub fn sample_instance(params: &ModelParams, seed: u64) -> Result<Instance> {
    sample_instance_with_budget(params, seed, DEFAULT_FEATURE_BUDGET)
}

/// Samples an instance, rejecting `N * P` beyond `budget` elements.
pub fn sample_instance_with_budget(
    params: &ModelParams,
    seed: u64,
    budget: u64,
) -> Result<Instance> {
    params.validate()?;
    let n = params.n_nodes;
    let p = params.feature_dim;
    let required = n as u64 * p as u64;
    if required > budget {
        return Err(Error::ResourceBudget {
            what: "feature matrix",
            required,
            budget,
        });
    }
    let affinity = params.affinity();

    let mut label_rng = rng::stream(seed, "labels");
    let truth_labels: Vec<i8> = (0..n)
        .map(|_| if label_rng.random::<bool>() { 1 } else { -1 })
        .collect();

    let mut graph_rng = rng::stream(seed, "graph");
    let graph = sample_sbm_graph(&truth_labels, &affinity, &mut graph_rng)?;

    let mut centroid_rng = rng::stream(seed, "centroids");
    let centroids: Vec<f64> = (0..p)
        .map(|_| StandardNormal.sample(&mut centroid_rng))
        .collect();

    let mut noise_rng = rng::stream(seed, "noise");
    let scale = (params.snr_mu / n as f64).sqrt();
    let mut data = vec![0f32; n * p];
    for (i, chunk) in data.chunks_exact_mut(p).enumerate() {
        let u = truth_labels[i] as f64;
        for (beta, x) in chunk.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *x = (scale * centroids[beta] * u + z) as f32;
        }
    }

    Ok(Instance {
        graph,
        features: Features::new(p, n, data),
        truth_labels,
        centroids,
        params: params.clone(),
        seed,
    })
}

/// Samples the SBM graph in `O(|E|)`: per label-block pair, the edge count is
/// binomial over the number of node pairs, then endpoints are drawn uniformly
/// with rejection of duplicates and self-loops (an exact sample of the
/// independent-Bernoulli ensemble).
fn sample_sbm_graph<R: Rng>(
    labels: &[i8],
    affinity: &Affinity,
    rng: &mut R,
) -> Result<SparseGraph> {
    let n = labels.len();
    let p_in = affinity.c_in / n as f64;
    let p_out = affinity.c_out / n as f64;
    if p_in > 1.0 || p_out > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "edge probability exceeds 1 (c_in/N = {p_in}, c_out/N = {p_out})"
        )));
    }
    let plus: Vec<u32> = (0..n).filter(|&i| labels[i] > 0).map(|i| i as u32).collect();
    let minus: Vec<u32> = (0..n).filter(|&i| labels[i] < 0).map(|i| i as u32).collect();

    let mut edges = Vec::new();
    let mut seen: HashSet<u64> = HashSet::new();
    sample_block_within(&plus, p_in, rng, &mut edges, &mut seen, n);
    sample_block_within(&minus, p_in, rng, &mut edges, &mut seen, n);
    sample_block_between(&plus, &minus, p_out, rng, &mut edges, &mut seen, n);
    SparseGraph::from_edges(n, &edges)
}

fn pair_key(a: u32, b: u32, n: usize) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    lo as u64 * n as u64 + hi as u64
}

fn sample_block_within<R: Rng>(
    nodes: &[u32],
    p: f64,
    rng: &mut R,
    edges: &mut Vec<(u32, u32)>,
    seen: &mut HashSet<u64>,
    n: usize,
) {
    let m = nodes.len() as u64;
    if m < 2 || p <= 0.0 {
        return;
    }
    let pairs = m * (m - 1) / 2;
    let count = Binomial::new(pairs, p).expect("valid binomial").sample(rng);
    let mut placed = 0u64;
    while placed < count {
        let a = nodes[rng.random_range(0..nodes.len())];
        let b = nodes[rng.random_range(0..nodes.len())];
        if a == b {
            continue;
        }
        if seen.insert(pair_key(a, b, n)) {
            edges.push((a.min(b), a.max(b)));
            placed += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_block_between<R: Rng>(
    left: &[u32],
    right: &[u32],
    p: f64,
    rng: &mut R,
    edges: &mut Vec<(u32, u32)>,
    seen: &mut HashSet<u64>,
    n: usize,
) {
    if left.is_empty() || right.is_empty() || p <= 0.0 {
        return;
    }
    let pairs = left.len() as u64 * right.len() as u64;
    let count = Binomial::new(pairs, p).expect("valid binomial").sample(rng);
    let mut placed = 0u64;
    while placed < count {
        let a = left[rng.random_range(0..left.len())];
        let b = right[rng.random_range(0..right.len())];
        if seen.insert(pair_key(a, b, n)) {
            edges.push((a.min(b), a.max(b)));
            placed += 1;
        }
    }
}

/// Revealed-node set and per-node priors `P_{U,i}(+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    /// Membership mask of the revealed set.
    pub revealed: Vec<bool>,
    /// `P_{U,i}(+1)` per node: 1/2 for hidden nodes, `{0, 1}` for noiselessly
    /// revealed nodes, `{1-q, q}` for noisy ones.
    pub node_prior_plus: Vec<f64>,
}

impl Supervision {
    /// A fully unsupervised prior (all nodes hidden).
    pub fn unsupervised(n: usize) -> Self {
        Self {
            revealed: vec![false; n],
            node_prior_plus: vec![0.5; n],
        }
    }

    pub fn n_revealed(&self) -> usize {
        self.revealed.iter().filter(|&&r| r).count()
    }

    pub fn n(&self) -> usize {
        self.revealed.len()
    }

    /// Whether node `i` is revealed with a noiseless (point-mass) prior.
    pub fn is_pinned(&self, i: usize) -> bool {
        self.revealed[i] && (self.node_prior_plus[i] == 0.0 || self.node_prior_plus[i] == 1.0)
    }
}

/// Reveals `round(rho * N)` nodes chosen uniformly without replacement,
/// independently of the labels. Each revealed label equals the truth with
/// probability `q` and is flipped otherwise; the prior encodes
/// `P(s) = q * delta(s, obs) + (1 - q) * delta(s, -obs)`.
pub fn make_supervision(instance: &Instance, rho: f64, q: f64, seed: u64) -> Result<Supervision> {
    if !(0.0..=1.0).contains(&rho) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "rho and q must lie in [0, 1], got rho={rho}, q={q}"
        )));
    }
    let n = instance.n();
    let k = (rho * n as f64).round() as usize;
    let mut revealed = vec![false; n];
    let mut prior = vec![0.5; n];

    // partial Fisher-Yates for the first k positions
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut pick_rng = rng::stream(seed, "reveal");
    for step in 0..k.min(n) {
        let j = pick_rng.random_range(step..n);
        order.swap(step, j);
    }
    let mut flip_rng = rng::stream(seed, "flip");
    for &iu in &order[..k.min(n)] {
        let i = iu as usize;
        revealed[i] = true;
        let keep = flip_rng.random::<f64>() < q;
        let obs = if keep {
            instance.truth_labels[i]
        } else {
            -instance.truth_labels[i]
        };
        prior[i] = if obs > 0 { q } else { 1.0 - q };
    }
    Ok(Supervision {
        revealed,
        node_prior_plus: prior,
    })
}

/// Result of the detectability-threshold formula `lambda_c = sqrt(1 - mu^2 / alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detectability {
    /// The critical graph snr below which unsupervised recovery is impossible.
    Threshold(f64),
    /// `mu^2 / alpha > 1`: the features alone cross the threshold.
    AlwaysDetectable,
}

pub fn detectability_threshold(mu: f64, alpha: f64) -> Detectability {
    let ratio = mu * mu / alpha;
    if ratio > 1.0 {
        Detectability::AlwaysDetectable
    } else {
        Detectability::Threshold((1.0 - ratio).sqrt())
    }
}

/// Inverts the `(phi, eps)` parameterization:
/// `lambda = sqrt(1 + eps) * sin(pi * phi / 2)`,
/// `mu = sqrt(alpha * (1 + eps)) * cos(pi * phi / 2)`,
/// so that `lambda^2 + mu^2 / alpha = 1 + eps` and
/// `phi = (2 / pi) * atan(lambda * sqrt(alpha) / mu)`.
pub fn params_from_phi_eps(phi: f64, eps: f64, alpha: f64, _d: f64) -> Result<(f64, f64)> {
    if !(-1.0..=1.0).contains(&phi) {
        return Err(Error::InvalidParameter(format!(
            "phi must lie in [-1, 1], got {phi}"
        )));
    }
    if eps < -1.0 || !eps.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need eps >= -1 and alpha > 0, got eps={eps}, alpha={alpha}"
        )));
    }
    let half = std::f64::consts::FRAC_PI_2 * phi;
    let lambda = (1.0 + eps).sqrt() * half.sin();
    let mu = (alpha * (1.0 + eps)).sqrt() * half.cos().max(0.0);
    Ok((lambda, mu))
}

/// The forward map `(lambda, mu) -> (phi, eps)`.
pub fn phi_eps_from_params(lambda: f64, mu: f64, alpha: f64) -> (f64, f64) {
    let eps = lambda * lambda + mu * mu / alpha - 1.0;
    let phi = if mu == 0.0 {
        lambda.signum()
    } else {
        std::f64::consts::FRAC_2_PI * (lambda * alpha.sqrt() / mu).atan()
    };
    (phi, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn affinity_from_snr_examples() {
        let a = Affinity::from_snr(5.0, 0.0).unwrap();
        assert_eq!((a.c_in, a.c_out), (5.0, 5.0));

        let a = Affinity::from_snr(5.0, 1.0).unwrap();
        assert!((a.c_in - 7.2360680).abs() < 1e-6);
        assert!((a.c_out - 2.7639320).abs() < 1e-6);
        assert!((a.mean_degree() - 5.0).abs() < 1e-12);

        let a = Affinity::from_snr(5.0, -1.0).unwrap();
        assert!((a.c_in - 2.7639320).abs() < 1e-6);
        assert!((a.c_out - 7.2360680).abs() < 1e-6);

        assert!(Affinity::from_snr(5.0, 5.0f64.sqrt()).is_err());
        assert!(Affinity::from_snr(5.0, -3.0).is_err());
        // degenerate no-graph point is allowed
        let a = Affinity::from_snr(0.0, 0.0).unwrap();
        assert_eq!((a.c_in, a.c_out), (0.0, 0.0));
    }

    #[test]
    fn sample_no_signal_limit() {
        let params = ModelParams::new(10, 5, 0.0, 0.0, 0.0);
        let inst = sample_instance(&params, 3).unwrap();
        assert_eq!(inst.graph.n_edges(), 0);
        // B is pure noise; just sanity-check value range
        assert!(inst.features.raw().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn sample_is_deterministic() {
        let params = ModelParams::new(300, 40, 4.0, 0.8, 1.5);
        let a = sample_instance(&params, 11).unwrap();
        let b = sample_instance(&params, 11).unwrap();
        assert_eq!(a.truth_labels, b.truth_labels);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);
        assert_eq!(
            a.centroids.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.centroids.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        let c = sample_instance(&params, 12).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn sampled_graph_is_simple_and_near_target_degree() {
        let params = ModelParams::new(5000, 100, 5.0, 1.0, 2.0);
        let inst = sample_instance(&params, 5).unwrap();
        assert!(inst.graph.check_simple());
        let d_emp = inst.graph.mean_degree();
        // ~10 sigma band: sd of mean degree is sqrt(2 d / N)
        assert!(
            (d_emp - 5.0).abs() < 10.0 * (2.0 * 5.0 / 5000.0f64).sqrt(),
            "empirical degree {d_emp}"
        );
    }

    #[test]
    fn feature_budget_is_enforced() {
        let params = ModelParams::new(1000, 1000, 3.0, 0.5, 1.0);
        let err = sample_instance_with_budget(&params, 0, 100).unwrap_err();
        assert!(matches!(err, Error::ResourceBudget { .. }));
    }

    #[test]
    fn feature_statistics_at_mu_zero() {
        let params = ModelParams::new(2000, 500, 3.0, 0.5, 0.0);
        let inst = sample_instance(&params, 9).unwrap();
        let np = (inst.n() * inst.p()) as f64;
        let mean: f64 = inst.features.raw().iter().map(|&x| x as f64).sum::<f64>() / np;
        let var: f64 = inst
            .features
            .raw()
            .iter()
            .map(|&x| (x as f64 - mean).powi(2))
            .sum::<f64>()
            / np;
        assert!(mean.abs() < 4.0 / np.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn label_balance_concentrates() {
        let params = ModelParams::new(10_000, 100, 3.0, 0.5, 0.0);
        let mut ok = 0;
        for seed in 0..20 {
            let inst = sample_instance(&params, seed).unwrap();
            let plus = inst.truth_labels.iter().filter(|&&u| u > 0).count() as f64;
            if (plus / 10_000.0 - 0.5).abs() < 0.02 {
                ok += 1;
            }
        }
        assert!(ok >= 19, "balance held for {ok}/20 seeds");
    }

    #[test]
    fn supervision_examples() {
        let params = ModelParams::new(200, 20, 3.0, 0.5, 1.0);
        let inst = sample_instance(&params, 2).unwrap();

        let sup = make_supervision(&inst, 0.0, 1.0, 7).unwrap();
        assert_eq!(sup.n_revealed(), 0);
        assert!(sup.node_prior_plus.iter().all(|&p| p == 0.5));

        let sup = make_supervision(&inst, 0.1, 1.0, 7).unwrap();
        assert_eq!(sup.n_revealed(), 20);
        for i in 0..200 {
            if sup.revealed[i] {
                let expect = if inst.truth_labels[i] > 0 { 1.0 } else { 0.0 };
                assert_eq!(sup.node_prior_plus[i], expect);
                assert!(sup.is_pinned(i));
            } else {
                assert_eq!(sup.node_prior_plus[i], 0.5);
            }
        }

        let sup = make_supervision(&inst, 0.1, 0.8, 7).unwrap();
        for i in 0..200 {
            if sup.revealed[i] {
                let p = sup.node_prior_plus[i];
                assert!((p - 0.8).abs() < 1e-15 || (p - 0.2).abs() < 1e-15);
            }
        }

        // deterministic given seed
        let a = make_supervision(&inst, 0.3, 0.9, 5).unwrap();
        let b = make_supervision(&inst, 0.3, 0.9, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn detectability_examples() {
        assert_eq!(
            detectability_threshold(0.0, 10.0),
            Detectability::Threshold(1.0)
        );
        match detectability_threshold(2.0, 10.0) {
            Detectability::Threshold(l) => assert!((l - 0.6f64.sqrt()).abs() < 1e-12),
            _ => panic!("expected threshold"),
        }
        assert_eq!(
            detectability_threshold(2.0, 4.0),
            Detectability::Threshold(0.0)
        );
        assert_eq!(
            detectability_threshold(3.0, 4.0),
            Detectability::AlwaysDetectable
        );
    }

    #[test]
    fn phi_eps_examples() {
        let (l, m) = params_from_phi_eps(1.0, 0.0, 10.0, 5.0).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && m.abs() < 1e-12);

        let (l, m) = params_from_phi_eps(0.0, 3.25, 2.5, 5.0).unwrap();
        assert!(l.abs() < 1e-12);
        assert!((m - (2.5f64 * 4.25).sqrt()).abs() < 1e-4, "mu = {m}");

        let (l, m) = params_from_phi_eps(0.5, 3.25, 2.5, 5.0).unwrap();
        assert!((l * l + m * m / 2.5 - 4.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn phi_eps_round_trips(phi in 0.01f64..0.99, eps in -0.5f64..4.0, alpha in 0.2f64..50.0) {
            let (lambda, mu) = params_from_phi_eps(phi, eps, alpha, 5.0).unwrap();
            prop_assume!(lambda > 0.0 && mu > 0.0);
            let (phi2, eps2) = phi_eps_from_params(lambda, mu, alpha);
            prop_assert!((phi - phi2).abs() < 1e-10);
            prop_assert!((eps - eps2).abs() < 1e-10);
        }
    }
}
