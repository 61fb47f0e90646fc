//! Command-line front end: generate instances, run solvers, sweep parameter
//! grids to CSV, estimate parameters, and cross-check against the oracles.
//! All heavy lifting lives in the library; this binary only parses arguments
//! and prints results.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use csbm::amp_bp::{self, Criterion, RunOptions};
use csbm::cli::{self, Algorithm, SweepConfig};
use csbm::dense;
use csbm::free_energy::{self, EmOptions};
use csbm::model::{self, ModelParams};
use csbm::oracles;
use csbm::rng;

#[derive(Parser)]
#[command(
    name = "csbm",
    version,
    about = "Bayes-optimal inference for the contextual stochastic block model"
)]
struct Cli {
    /// Master seed for all derived random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Force bit-reproducible output: per-run arithmetic is always sequential
    /// and deterministic, this additionally pins sweep dispatch to one thread.
    #[arg(long, global = true, default_value_t = false)]
    deterministic: bool,
    /// Output file (CSV) or directory (generate).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Aspect ratio alpha = N / P (ignored if --p is given).
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Feature dimension (overrides --alpha).
    #[arg(long)]
    p: Option<usize>,
    /// Average degree.
    #[arg(long, default_value_t = 5.0)]
    d: f64,
    /// Graph snr.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Feature snr (the reference figures use mu^2 = 4, i.e. --mu 2).
    #[arg(long, default_value_t = 2.0)]
    mu: f64,
    /// Revealed fraction.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Probability a revealed label is true (1 = noiseless).
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Number of groups (2 = binary model).
    #[arg(long, default_value_t = 2)]
    groups: usize,
}

impl ModelArgs {
    fn params(&self) -> ModelParams {
        let p = self
            .p
            .unwrap_or(((self.n as f64 / self.alpha).round() as usize).max(1));
        ModelParams {
            n_nodes: self.n,
            feature_dim: p,
            avg_degree: self.d,
            snr_lambda: self.lambda,
            snr_mu: self.mu,
            train_fraction: self.rho,
            label_flip_keep_prob: self.q,
            num_groups: self.groups,
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 5)]
    min_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    msg_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    overlap_tol: f64,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = 1e-2)]
    init_noise: f64,
    /// Convergence criterion: message | overlap.
    #[arg(long, default_value = "message")]
    criterion: String,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> Result<RunOptions, csbm::Error> {
        let criterion = match self.criterion.to_ascii_lowercase().as_str() {
            "message" | "msg" => Criterion::MessageChange,
            "overlap" => Criterion::OverlapChange,
            other => return Err(csbm::Error::Parse(format!("unknown criterion '{other}'"))),
        };
        Ok(RunOptions {
            max_iters: self.max_iters,
            min_iters: self.min_iters,
            msg_tol: self.msg_tol,
            overlap_tol: self.overlap_tol,
            damping: self.damping,
            init_noise: self.init_noise,
            seed,
            criterion,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance and write it to a directory.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run AMP-BP on a freshly sampled (or loaded) instance.
    Infer {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Load an instance directory instead of sampling.
        #[arg(long)]
        load: Option<PathBuf>,
        /// Also report the Bethe free entropy.
        #[arg(long, default_value_t = false)]
        phi: bool,
    },
    /// Sweep a parameter grid to CSV (config file and/or flags).
    Sweep {
        /// Config file path.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Algorithm: amp_bp | multi | amp_amp | se | mcmc | logistic.
        #[arg(long, default_value = "amp_bp")]
        algorithm: String,
        /// Comma-separated lambda grid.
        #[arg(long)]
        lambda_grid: Option<String>,
        /// Comma-separated rho grid.
        #[arg(long)]
        rho_grid: Option<String>,
        /// Comma-separated alpha grid.
        #[arg(long)]
        alpha_grid: Option<String>,
        /// Comma-separated N grid.
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        /// Record the Bethe free entropy per row.
        #[arg(long, default_value_t = false)]
        phi: bool,
    },
    /// Expectation-maximization estimation of (c_in, c_out, mu).
    Em {
        #[command(flatten)]
        model: ModelArgs,
        /// Initial c_in (defaults to the generative value).
        #[arg(long)]
        init_ci: Option<f64>,
        /// Initial c_out.
        #[arg(long)]
        init_co: Option<f64>,
        /// Initial mu.
        #[arg(long)]
        init_mu: Option<f64>,
        #[arg(long, default_value_t = 50)]
        max_outer: usize,
    },
    /// State-evolution fixed point for the dense limit.
    Se {
        /// Feature snr mu.
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
        /// Inverse noise Delta_I (overrides --lambda).
        #[arg(long)]
        delta_i: Option<f64>,
        /// Sparse-style lambda, mapped through Delta_I = lambda^2.
        #[arg(long, default_value_t = 0.9)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        /// Start from the informative initialization.
        #[arg(long, default_value_t = false)]
        informative: bool,
    },
    /// Metropolis-within-Gibbs sampling of the posterior.
    Mcmc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2000)]
        sweeps: usize,
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        #[arg(long, default_value_t = 1)]
        v_resample_every: usize,
    },
    /// Exact enumeration marginals vs AMP-BP on a small instance (N <= 16).
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Logistic-regression baseline on the revealed features.
    Logistic {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated L2 grid.
        #[arg(long, default_value = "1e-4,1e-3,1e-2,1e-1,1")]
        l2_grid: String,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, csbm::Error> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| csbm::Error::Parse(format!("bad grid value '{x}': {e}")))
        })
        .collect()
}

fn sampled(
    model: &ModelArgs,
    seed: u64,
) -> Result<(model::Instance, model::Supervision), csbm::Error> {
    let params = model.params();
    let instance = model::sample_instance(&params, rng::derive_seed(seed, "instance"))?;
    let supervision = model::make_supervision(
        &instance,
        params.train_fraction,
        params.label_flip_keep_prob,
        rng::derive_seed(seed, "supervision"),
    )?;
    Ok((instance, supervision))
}

fn run(cli: Cli) -> Result<(), csbm::Error> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate { model } => {
            let (instance, _) = sampled(&model, seed)?;
            let dir = cli.out.unwrap_or_else(|| PathBuf::from("instance"));
            model::io::save_instance(&instance, &dir)?;
            println!(
                "wrote N={} P={} |E|={} to {}",
                instance.n(),
                instance.p(),
                instance.graph.n_edges(),
                dir.display()
            );
        }
        Command::Infer {
            model,
            solver,
            load,
            phi,
        } => {
            let (instance, supervision) = match load {
                Some(dir) => {
                    let instance = model::io::load_instance(&dir)?;
                    let sup = model::make_supervision(
                        &instance,
                        instance.params.train_fraction,
                        instance.params.label_flip_keep_prob,
                        rng::derive_seed(seed, "supervision"),
                    )?;
                    (instance, sup)
                }
                None => sampled(&model, seed)?,
            };
            let options = solver.options(rng::derive_seed(seed, "solver"))?;
            let start = Instant::now();
            let fp = amp_bp::run(&instance, &supervision, &options)?;
            let elapsed = start.elapsed().as_secs_f64();
            let q = amp_bp::overlap(
                &fp.hard_labels,
                &instance.truth_labels,
                &supervision.revealed,
            )?;
            println!(
                "q_u = {q:.4}  iterations = {}  converged = {}  ({elapsed:.2}s)",
                fp.iters_used, fp.converged
            );
            if phi {
                let affinity = instance.params.affinity();
                let value = free_energy::bethe_free_entropy(
                    &fp,
                    &instance,
                    &affinity,
                    instance.params.snr_mu,
                );
                println!("bethe_phi = {:.6}", value.phi);
            }
        }
        Command::Sweep {
            config,
            model,
            solver,
            algorithm,
            lambda_grid,
            rho_grid,
            alpha_grid,
            n_grid,
            repeats,
            phi,
        } => {
            let mut sweep = match config {
                Some(path) => cli::parse_config(&std::fs::read_to_string(path)?)?,
                None => {
                    let mut c = SweepConfig::new(model.params(), Algorithm::parse(&algorithm)?);
                    c.run = solver.options(0)?;
                    c.repeats = repeats;
                    c.compute_phi = phi;
                    c.master_seed = seed;
                    c
                }
            };
            if let Some(g) = lambda_grid {
                sweep.grid.push((cli::GridParam::Lambda, parse_grid(&g)?));
            }
            if let Some(g) = rho_grid {
                sweep.grid.push((cli::GridParam::Rho, parse_grid(&g)?));
            }
            if let Some(g) = alpha_grid {
                sweep.grid.push((cli::GridParam::Alpha, parse_grid(&g)?));
            }
            if let Some(g) = n_grid {
                sweep.grid.push((cli::GridParam::N, parse_grid(&g)?));
            }
            if seed != 0 {
                sweep.master_seed = seed;
            }
            sweep.threads = if cli.deterministic { 1 } else { cli.threads };
            let rows = cli::run_sweep(&sweep)?;
            match cli.out {
                Some(path) => {
                    cli::write_csv(&rows, sweep.master_seed, BufWriter::new(File::create(&path)?))?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => {
                    let stdout = std::io::stdout();
                    cli::write_csv(&rows, sweep.master_seed, stdout.lock())?;
                }
            }
        }
        Command::Em {
            model,
            init_ci,
            init_co,
            init_mu,
            max_outer,
        } => {
            let (instance, supervision) = sampled(&model, seed)?;
            let truth = instance.params.affinity();
            let init = (
                init_ci.unwrap_or(truth.c_in),
                init_co.unwrap_or(truth.c_out),
                init_mu.unwrap_or(instance.params.snr_mu),
            );
            let options = EmOptions {
                max_outer,
                ..Default::default()
            };
            let est = free_energy::em_fit(&instance, &supervision, init, &options)?;
            println!("# iter c_in c_out mu bethe_phi");
            for row in &est.trace {
                println!(
                    "{} {:.4} {:.4} {:.4} {:.6}",
                    row.iter, row.c_in, row.c_out, row.mu, row.bethe_phi
                );
            }
            println!(
                "estimate: c_in = {:.4}, c_out = {:.4}, mu = {:.4} (converged = {}, generative = ({:.4}, {:.4}, {:.4}))",
                est.c_in,
                est.c_out,
                est.mu,
                est.converged,
                truth.c_in,
                truth.c_out,
                instance.params.snr_mu
            );
        }
        Command::Se {
            mu,
            alpha,
            delta_i,
            lambda,
            rho,
            informative,
        } => {
            let delta_i = delta_i.unwrap_or(lambda * lambda);
            let options = dense::SeOptions {
                informative_init: informative,
                ..Default::default()
            };
            let traj = dense::state_evolution(mu, alpha, delta_i, rho, &options)?;
            let fp = traj.fixed_point;
            println!(
                "m = {:.6}  m_u = {:.6}  m_v = {:.6}  steps = {}  predicted q_u = {:.4}",
                fp.m,
                fp.m_u,
                fp.m_v,
                traj.states.len(),
                dense::se_predicted_overlap(fp.m)
            );
        }
        Command::Mcmc {
            model,
            sweeps,
            burn_in,
            v_resample_every,
        } => {
            let (instance, supervision) = sampled(&model, seed)?;
            let options = oracles::McmcOptions {
                sweeps,
                burn_in,
                v_resample_every,
                seed: rng::derive_seed(seed, "solver"),
            };
            let start = Instant::now();
            let res = oracles::mcmc_marginals(&instance, &supervision, &options)?;
            let q = amp_bp::overlap(
                &res.hard_labels,
                &instance.truth_labels,
                &supervision.revealed,
            )?;
            println!(
                "q_u = {q:.4}  acceptance = {:.3}  ({:.2}s)",
                res.acceptance_rate,
                start.elapsed().as_secs_f64()
            );
        }
        Command::Oracle { model, solver } => {
            let (instance, supervision) = sampled(&model, seed)?;
            let exact = oracles::exact_marginals(&instance, &supervision)?;
            let options = solver.options(rng::derive_seed(seed, "solver"))?;
            let fp = amp_bp::run(&instance, &supervision, &options)?;
            println!("# node exact amp_bp |diff|");
            let mut worst = 0.0f64;
            for i in 0..instance.n() {
                let diff = (exact.prob_plus[i] - fp.state.chi_node[i]).abs();
                worst = worst.max(diff);
                println!(
                    "{i} {:.6} {:.6} {:.2e}",
                    exact.prob_plus[i], fp.state.chi_node[i], diff
                );
            }
            println!("max |diff| = {worst:.3e}");
        }
        Command::Logistic { model, l2_grid } => {
            let (instance, supervision) = sampled(&model, seed)?;
            let grid = parse_grid(&l2_grid)?;
            let q = oracles::logistic_baseline(&instance, &supervision, &grid)?;
            println!("q_u = {q:.4}");
        }
    }
    Ok(())
}
