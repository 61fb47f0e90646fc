//! Dense-limit solver (AMP-AMP) and its state-evolution prediction.
//!
//! In the dense regime the affinities grow with `N` (`c_in - c_out =
//! nu sqrt(N)`, mean degree `d = d_tilde N`) and the adjacency matrix is
//! equivalent to a noisy rank-one matrix. The entrywise transform
//! `S_ij = (1/2) (A_ij / d_tilde - (1 - A_ij) / (1 - d_tilde))` has
//! conditional mean `(Delta_I / nu) u_i u_j / sqrt(N)` and variance
//! `Delta_I / nu^2` with `Delta_I = nu^2 / (4 d_tilde (1 - d_tilde))`, so the
//! BP on the graph side reduces to a second AMP coupled to the feature AMP
//! through the per-node fields.
//!
//! The scalar state evolution tracks the overlaps `m_u = (1/N) sum u_hat u`
//! and `m_v = (1/P) sum v_hat v` across iterations:
//! `m^t = (mu/alpha) m_v^t + Delta_I m_u^{t-1}`,
//! `m_u^t = rho + (1 - rho) E[tanh(m^t u0 + sqrt(m^t) W) u0]`,
//! `m_v^{t+1} = mu m_u^t / (1 + mu m_u^t)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::model::{Features, Supervision};
use crate::rng;
use crate::util::{dot_f32_f64, hard_label, normal_cdf};

/// Default cap on `N` for the dense `N x N` matrix (4 bytes per entry).
pub const DEFAULT_DENSE_NODE_BUDGET: usize = 20_000;

/// The rank-one-transformed coupling matrix plus its noise parameters.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    /// `N x N` row-major symmetric matrix with zero diagonal.
    pub s: Vec<f32>,
    pub n: usize,
    /// Graph snr `nu` (`c_in - c_out = nu sqrt(N)`).
    pub nu: f64,
    pub d_tilde: f64,
    /// Inverse noise `Delta_I = nu^2 / (4 d_tilde (1 - d_tilde))`.
    pub delta_i: f64,
}

/// Entrywise transform of a binary adjacency matrix; returns the dense matrix
/// and `Delta_I`. Rejects `d_tilde` outside `(0, 1)` and `N` beyond `budget`.
pub fn transform_adjacency(
    graph: &SparseGraph,
    d_tilde: f64,
    nu: f64,
    budget: usize,
) -> Result<DenseProblem> {
    if !(d_tilde > 0.0 && d_tilde < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "d_tilde must lie strictly inside (0, 1), got {d_tilde}"
        )));
    }
    let n = graph.n_nodes();
    if n > budget {
        return Err(Error::ResourceBudget {
            what: "dense adjacency transform",
            required: (n * n) as u64,
            budget: (budget * budget) as u64,
        });
    }
    let on_edge = (0.5 / d_tilde) as f32;
    let off_edge = (-0.5 / (1.0 - d_tilde)) as f32;
    let mut s = vec![off_edge; n * n];
    for i in 0..n {
        s[i * n + i] = 0.0;
        for &j in graph.neighbors(i) {
            s[i * n + j as usize] = on_edge;
        }
    }
    Ok(DenseProblem {
        s,
        n,
        nu,
        d_tilde,
        delta_i: inverse_noise(nu, d_tilde),
    })
}

/// `Delta_I = nu^2 / (4 d_tilde (1 - d_tilde))`.
pub fn inverse_noise(nu: f64, d_tilde: f64) -> f64 {
    nu * nu / (4.0 * d_tilde * (1.0 - d_tilde))
}

/// The idealized Gaussian surrogate with the same first two conditional
/// moments as the transform: `S_ij = (Delta_I/nu) u_i u_j / sqrt(N) +
/// (sqrt(Delta_I)/nu) xi_ij` with symmetric standard normal noise. Used for
/// pure state-evolution validation.
pub fn surrogate_problem(
    truth: &[i8],
    d_tilde: f64,
    nu: f64,
    seed: u64,
    budget: usize,
) -> Result<DenseProblem> {
    if !(d_tilde > 0.0 && d_tilde < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "d_tilde must lie strictly inside (0, 1), got {d_tilde}"
        )));
    }
    let n = truth.len();
    if n > budget {
        return Err(Error::ResourceBudget {
            what: "dense surrogate",
            required: (n * n) as u64,
            budget: (budget * budget) as u64,
        });
    }
    let delta_i = inverse_noise(nu, d_tilde);
    let signal = delta_i / nu / (n as f64).sqrt();
    let noise = delta_i.sqrt() / nu;
    let mut rng = rng::stream(seed, "dense-surrogate");
    let mut s = vec![0f32; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let val = (signal * truth[i] as f64 * truth[j] as f64 + noise * z) as f32;
            s[i * n + j] = val;
            s[j * n + i] = val;
        }
    }
    Ok(DenseProblem {
        s,
        n,
        nu,
        d_tilde,
        delta_i,
    })
}

#[derive(Debug, Clone)]
pub struct DenseRunOptions {
    pub max_iters: usize,
    /// Stop when `max |Delta u_hat|` falls below this.
    pub tol: f64,
    /// Mixing on the `u_hat` update.
    pub damping: f64,
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for DenseRunOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            damping: 0.0,
            init_noise: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseFixedPoint {
    pub u_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub converged: bool,
    pub iters_used: usize,
    pub hard_labels: Vec<i8>,
}

/// `f_U(b, p) = sum_u u P(u) e^{u b} / sum_u P(u) e^{u b}` for the binary
/// prior with `P(+1) = p`.
fn input_fn(b: f64, prior_plus: f64) -> f64 {
    if prior_plus == 1.0 {
        1.0
    } else if prior_plus == 0.0 {
        -1.0
    } else {
        (b + 0.5 * (prior_plus / (1.0 - prior_plus)).ln()).tanh()
    }
}

/// Runs AMP-AMP on the transformed (or surrogate) coupling matrix plus the
/// feature matrix. The first Onsager memory term uses `u_hat^{(-1)} = 0`.
pub fn run_amp_amp(
    problem: &DenseProblem,
    features: &Features,
    supervision: &Supervision,
    mu: f64,
    options: &DenseRunOptions,
) -> Result<DenseFixedPoint> {
    let n = problem.n;
    let p = features.p();
    if features.n() != n || supervision.revealed.len() != n {
        return Err(Error::InvalidParameter(
            "mismatched problem/feature/supervision sizes".into(),
        ));
    }
    let nf = n as f64;
    let alpha = nf / p as f64;
    let scale = (mu / nf).sqrt();
    let nu_over_sqrt_n = problem.nu / nf.sqrt();

    // initialization as in the sparse solver
    let w = options.init_noise;
    let mut node_rng = rng::stream(options.seed, "init-node");
    let mut feat_rng = rng::stream(options.seed, "init-feat");
    let draw = |r: &mut rand_chacha::ChaCha8Rng| {
        if w == 0.0 {
            0.0
        } else {
            r.random::<f64>() * 2.0 * w - w
        }
    };
    let mut u_hat: Vec<f64> = (0..n)
        .map(|i| {
            let prior = supervision.node_prior_plus[i];
            if supervision.is_pinned(i) {
                2.0 * prior - 1.0
            } else {
                (2.0 * prior - 1.0 + draw(&mut node_rng)).clamp(-1.0, 1.0)
            }
        })
        .collect();
    let mut v_hat: Vec<f64> = (0..p).map(|_| draw(&mut feat_rng)).collect();
    let mut u_prev = vec![0.0; n]; // u_hat^{(-1)}

    let mut b_u = vec![0.0; p];
    let mut b_v = vec![0.0; n];
    let mut converged = false;
    let mut iters_used = 0;
    for iter in 0..options.max_iters {
        let sum_u_sq: f64 = u_hat.iter().map(|u| u * u).sum();
        let sum_sigma_u = nf - sum_u_sq;
        let a_u = mu / nf * sum_u_sq;

        // feature-side AMP (identical to the sparse solver's)
        b_u.iter_mut().for_each(|x| *x = 0.0);
        for (i, col) in features.nodes().enumerate() {
            let u = u_hat[i];
            if u != 0.0 {
                for (acc, &x) in b_u.iter_mut().zip(col) {
                    *acc += x as f64 * u;
                }
            }
        }
        let onsager_v = mu / nf * sum_sigma_u;
        let sigma_v = 1.0 / (1.0 + a_u);
        for (bu, &v_old) in b_u.iter_mut().zip(&v_hat) {
            *bu = scale * *bu - onsager_v * v_old;
        }
        if !b_u.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { quantity: "B_U", iter });
        }
        for (v, &bu) in v_hat.iter_mut().zip(&b_u) {
            *v = bu * sigma_v;
        }
        let onsager_u = mu / alpha * sigma_v;
        for (i, col) in features.nodes().enumerate() {
            b_v[i] = scale * dot_f32_f64(col, &v_hat) - onsager_u * u_hat[i];
        }
        if !b_v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { quantity: "B_V", iter });
        }

        // graph-side AMP on the transformed matrix
        let onsager_uu = problem.delta_i / nf * sum_sigma_u;
        let mut max_delta = 0.0f64;
        let mut new_u = vec![0.0; n];
        for i in 0..n {
            let row = &problem.s[i * n..(i + 1) * n];
            let b_uu = nu_over_sqrt_n * dot_f32_f64(row, &u_hat) - onsager_uu * u_prev[i];
            let total = b_uu + b_v[i];
            if !total.is_finite() {
                return Err(Error::NonFinite { quantity: "B_UU", iter });
            }
            let fresh = input_fn(total, supervision.node_prior_plus[i]);
            new_u[i] = if options.damping > 0.0 {
                (1.0 - options.damping) * fresh + options.damping * u_hat[i]
            } else {
                fresh
            };
            let d = (new_u[i] - u_hat[i]).abs();
            if d > max_delta {
                max_delta = d;
            }
        }
        std::mem::swap(&mut u_prev, &mut u_hat);
        u_hat = new_u;
        iters_used += 1;
        if max_delta < options.tol {
            converged = true;
            break;
        }
    }
    let hard_labels = u_hat.iter().map(|&u| hard_label(u)).collect();
    Ok(DenseFixedPoint {
        u_hat,
        v_hat,
        converged,
        iters_used,
        hard_labels,
    })
}

// ---------------------------------------------------------------------------
// state evolution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeState {
    /// Combined snr field `m`.
    pub m: f64,
    pub m_u: f64,
    pub m_v: f64,
}

#[derive(Debug, Clone)]
pub struct SeOptions {
    pub max_iters: usize,
    /// Stop when `|Delta m_u|` falls below this.
    pub tol: f64,
    /// Start from `m_u = 1` instead of `m_u = rho`.
    pub informative_init: bool,
    /// Gauss-Hermite node count for the scalar expectation.
    pub quad_points: usize,
}

impl Default for SeOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-10,
            informative_init: false,
            quad_points: 101,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeTrajectory {
    pub states: Vec<SeState>,
    pub fixed_point: SeState,
    pub converged: bool,
}

/// Iterates the scalar recursion from `m_u^0 = rho` (or 1) to its fixed point.
pub fn state_evolution(
    mu: f64,
    alpha: f64,
    delta_i: f64,
    rho: f64,
    options: &SeOptions,
) -> Result<SeTrajectory> {
    if !(0.0..=1.0).contains(&rho) || mu < 0.0 || alpha <= 0.0 || delta_i < 0.0 {
        return Err(Error::InvalidParameter(
            "state evolution requires rho in [0,1], mu >= 0, alpha > 0, delta_i >= 0".into(),
        ));
    }
    let quad = GaussHermite::new(options.quad_points.max(3))?;
    let mut m_u = if options.informative_init { 1.0 } else { rho };
    let mut states = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iters {
        let m_v = mu * m_u / (1.0 + mu * m_u);
        let m = mu / alpha * m_v + delta_i * m_u;
        let next_m_u = rho + (1.0 - rho) * quad.expect_tanh(m);
        let state = SeState {
            m,
            m_u: next_m_u,
            m_v: mu * next_m_u / (1.0 + mu * next_m_u),
        };
        states.push(state);
        let delta = (next_m_u - m_u).abs();
        m_u = next_m_u;
        if delta < options.tol {
            converged = true;
            break;
        }
    }
    let fixed_point = *states.last().expect("at least one iteration");
    Ok(SeTrajectory {
        states,
        fixed_point,
        converged,
    })
}

/// Predicted test overlap of the sign estimator at the fixed point: the
/// effective field conditioned on `u0 = +1` is `m + sqrt(m) W`, so sign
/// agreement has probability `Phi(sqrt(m))` and `q_U = 2 Phi(sqrt(m)) - 1`.
pub fn se_predicted_overlap(m_fixed: f64) -> f64 {
    if m_fixed <= 0.0 {
        return 0.0;
    }
    2.0 * normal_cdf(m_fixed.sqrt()) - 1.0
}

/// Gauss-Hermite rule for the weight `exp(-x^2)`, built by Golub-Welsch:
/// nodes are eigenvalues of the Jacobi matrix (zero diagonal, off-diagonal
/// `sqrt(k/2)`), weights are `sqrt(pi)` times squared first eigenvector
/// components.
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("need at least one node".into()));
        }
        let mut d = vec![0.0; n];
        let mut e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        e.push(0.0);
        let mut z = vec![0.0; n];
        z[0] = 1.0;
        symmetric_tridiagonal_ql(&mut d, &mut e, &mut z)?;
        // sort by node
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let nodes: Vec<f64> = idx.iter().map(|&k| d[k]).collect();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let weights: Vec<f64> = idx.iter().map(|&k| sqrt_pi * z[k] * z[k]).collect();
        Ok(Self { nodes, weights })
    }

    /// `E[f(W)]` for standard normal `W`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(sqrt2 * x);
        }
        acc * inv_sqrt_pi
    }

    /// `E[tanh(m + sqrt(m) W)]`.
    pub fn expect_tanh(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 0.0;
        }
        let s = m.sqrt();
        self.expect(|w| (m + s * w).tanh())
    }
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix,
/// accumulating only the first row of the eigenvector matrix in `z`
/// (the classical Golub-Welsch reduction).
fn symmetric_tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::InvalidParameter(
                    "QL iteration failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_supervision, sample_instance, ModelParams};

    #[test]
    fn transform_values_match_formula() {
        let graph = SparseGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let prob = transform_adjacency(&graph, 0.5, 1.0, 100).unwrap();
        assert_eq!(prob.s[1], 1.0); // edge at d_tilde = 1/2
        assert_eq!(prob.s[2], -1.0); // non-edge
        assert_eq!(prob.s[0], 0.0); // diagonal
        assert!((prob.delta_i - 1.0).abs() < 1e-12);

        let prob = transform_adjacency(&graph, 0.1, 0.7, 100).unwrap();
        assert!((prob.s[1] as f64 - 5.0).abs() < 1e-6);
        assert!((prob.s[2] as f64 + 0.5555555555).abs() < 1e-6);
        assert!((prob.delta_i - 0.7 * 0.7 / (4.0 * 0.1 * 0.9)).abs() < 1e-12);

        assert!(transform_adjacency(&graph, 0.0, 1.0, 100).is_err());
        assert!(transform_adjacency(&graph, 1.0, 1.0, 100).is_err());
        assert!(transform_adjacency(&graph, 0.5, 1.0, 2).is_err());
    }

    #[test]
    fn surrogate_conditional_means_scale_correctly() {
        let n = 400usize;
        let truth: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let d_tilde = 0.05;
        let nu = 0.8;
        let prob = surrogate_problem(&truth, d_tilde, nu, 5, 1000).unwrap();
        let mut same = (0.0, 0usize);
        let mut diff = (0.0, 0usize);
        for i in 0..n {
            for j in i + 1..n {
                let v = prob.s[i * n + j] as f64;
                if truth[i] == truth[j] {
                    same = (same.0 + v, same.1 + 1);
                } else {
                    diff = (diff.0 + v, diff.1 + 1);
                }
            }
        }
        let gap = same.0 / same.1 as f64 - diff.0 / diff.1 as f64;
        let expect = 2.0 * prob.delta_i / nu / (n as f64).sqrt();
        let sd = 2.0 * prob.delta_i.sqrt() / nu / ((n * n / 4) as f64).sqrt();
        assert!((gap - expect).abs() < 5.0 * sd, "gap {gap} expect {expect}");
    }

    #[test]
    fn gauss_hermite_integrates_polynomials_exactly() {
        let q = GaussHermite::new(31).unwrap();
        assert!((q.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!(q.expect(|w| w).abs() < 1e-13);
        assert!((q.expect(|w| w * w) - 1.0).abs() < 1e-12);
        assert!((q.expect(|w| w.powi(4)) - 3.0).abs() < 1e-11);
        assert!((q.expect(|w| w.powi(6)) - 15.0).abs() < 1e-10);
        // E[e^W] = e^{1/2}
        assert!((q.expect(f64::exp) - (0.5f64).exp()).abs() < 1e-10);
    }

    /// The quadrature matches a brute-force Monte-Carlo evaluation of the
    /// same expectation.
    #[test]
    fn quadrature_matches_monte_carlo_oracle() {
        let q = GaussHermite::new(101).unwrap();
        let mut rng = crate::rng::stream(11, "se-mc");
        for m in [0.3f64, 0.9, 2.0] {
            let quad = q.expect_tanh(m);
            let samples = 10_000_000usize;
            let mut acc = 0.0;
            let s = m.sqrt();
            for _ in 0..samples {
                let w: f64 = StandardNormal.sample(&mut rng);
                acc += (m + s * w).tanh();
            }
            let mc = acc / samples as f64;
            assert!((quad - mc).abs() < 1e-3, "m={m}: quad {quad} vs mc {mc}");
        }
    }

    #[test]
    fn se_trivial_fixed_points() {
        // rho = 0: the uninformative point is exactly stationary
        let t = state_evolution(2.0, 10.0, 0.81, 0.0, &SeOptions::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.fixed_point.m_u, 0.0);
        assert_eq!(t.fixed_point.m_v, 0.0);
        assert_eq!(t.fixed_point.m, 0.0);

        // rho = 1: m_u = 1 at every step, m_v = mu/(1+mu)
        let t = state_evolution(2.0, 10.0, 0.81, 1.0, &SeOptions::default()).unwrap();
        assert!(t.converged);
        assert!((t.fixed_point.m_u - 1.0).abs() < 1e-14);
        assert!((t.fixed_point.m_v - 2.0 / 3.0).abs() < 1e-14);
        for s in &t.states {
            assert!((s.m_u - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn se_monotone_from_informative_init_and_consistent() {
        let opts = SeOptions {
            informative_init: true,
            ..Default::default()
        };
        let t = state_evolution(2.0, 10.0, 0.81, 0.1, &opts).unwrap();
        assert!(t.converged);
        for w in t.states.windows(2) {
            assert!(w[1].m_u <= w[0].m_u + 1e-12, "m_u not non-increasing");
        }
        // plugging the fixed point back changes components by < 1e-9
        let fp = t.fixed_point;
        let q = GaussHermite::new(101).unwrap();
        let m_v = 2.0 * fp.m_u / (1.0 + 2.0 * fp.m_u);
        let m = 2.0 / 10.0 * m_v + 0.81 * fp.m_u;
        let m_u = 0.1 + 0.9 * q.expect_tanh(m);
        assert!((m_v - fp.m_v).abs() < 1e-9);
        assert!((m - fp.m).abs() < 1e-9);
        assert!((m_u - fp.m_u).abs() < 1e-9);
    }

    #[test]
    fn se_uninformative_and_informative_agree_with_supervision() {
        let a = state_evolution(2.0, 10.0, 0.81, 0.1, &SeOptions::default()).unwrap();
        let b = state_evolution(
            2.0,
            10.0,
            0.81,
            0.1,
            &SeOptions {
                informative_init: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.fixed_point.m_u - b.fixed_point.m_u).abs() < 1e-8);
    }

    #[test]
    fn predicted_overlap_limits() {
        assert_eq!(se_predicted_overlap(0.0), 0.0);
        assert!(se_predicted_overlap(1e4) > 0.999999);
        let q = se_predicted_overlap(1.0);
        assert!((q - (2.0 * normal_cdf(1.0) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn amp_amp_uninformative_point_is_stationary() {
        // mu = 0, nu = 0, rho = 0, no init noise: u_hat stays zero
        let params = ModelParams::new(60, 20, 10.0, 0.0, 0.0);
        let inst = sample_instance(&params, 80).unwrap();
        let sup = Supervision::unsupervised(60);
        let prob = transform_adjacency(&inst.graph, 10.0 / 60.0, 0.0, 1000).unwrap();
        let opts = DenseRunOptions {
            init_noise: 0.0,
            max_iters: 5,
            ..Default::default()
        };
        let fp = run_amp_amp(&prob, &inst.features, &sup, 0.0, &opts).unwrap();
        assert!(fp.converged);
        assert!(fp.u_hat.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn amp_amp_pins_fully_revealed_nodes() {
        let mut params = ModelParams::new(80, 20, 16.0, 0.8, 1.0);
        params.train_fraction = 1.0;
        let inst = sample_instance(&params, 81).unwrap();
        let sup = make_supervision(&inst, 1.0, 1.0, 82).unwrap();
        let d_tilde = 16.0f64 / 80.0;
        let nu = 2.0 * 0.8 * d_tilde.sqrt();
        let prob = transform_adjacency(&inst.graph, d_tilde, nu, 1000).unwrap();
        let fp =
            run_amp_amp(&prob, &inst.features, &sup, 1.0, &DenseRunOptions::default()).unwrap();
        for i in 0..80 {
            assert_eq!(fp.u_hat[i], inst.truth_labels[i] as f64);
        }
    }

    #[test]
    fn amp_amp_matches_se_on_surrogate() {
        // pure surrogate data at moderate size: empirical m_u tracks the SE
        // fixed point
        let n = 3000usize;
        let p = 300usize;
        let mu = 2.0;
        let lambda = 0.9f64;
        let d_tilde = 0.02f64;
        let nu = 2.0 * lambda * d_tilde.sqrt();
        let mut params = ModelParams::new(n, p, d_tilde * n as f64, 0.0, mu);
        params.train_fraction = 0.1;
        let inst = sample_instance(&params, 83).unwrap();
        let sup = make_supervision(&inst, 0.1, 1.0, 84).unwrap();
        let prob = surrogate_problem(&inst.truth_labels, d_tilde, nu, 85, n).unwrap();
        let fp =
            run_amp_amp(&prob, &inst.features, &sup, mu, &DenseRunOptions::default()).unwrap();
        assert!(fp.converged);
        let m_u_emp: f64 = fp
            .u_hat
            .iter()
            .zip(&inst.truth_labels)
            .map(|(u, &t)| u * t as f64)
            .sum::<f64>()
            / n as f64;
        let se = state_evolution(
            mu,
            n as f64 / p as f64,
            inverse_noise(nu, d_tilde),
            0.1,
            &SeOptions::default(),
        )
        .unwrap();
        assert!(
            (m_u_emp - se.fixed_point.m_u).abs() < 0.05,
            "empirical {m_u_emp} vs SE {}",
            se.fixed_point.m_u
        );
    }
}
