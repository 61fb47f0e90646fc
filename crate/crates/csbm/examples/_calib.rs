use csbm::amp_bp::{run, Criterion, RunOptions};
use csbm::model::{make_supervision, sample_instance, ModelParams};
use csbm::oracles::{mcmc_marginals, McmcOptions};
use std::time::Instant;

fn main() {
    // (a) criterion 1 with the guarded overlap criterion
    println!("== criterion 1 (overlap criterion, min_iters 10) ==");
    let opts = RunOptions { criterion: Criterion::OverlapChange, min_iters: 10, max_iters: 150, ..Default::default() };
    for lambda in [0.5f64, 0.7, 0.85, 1.0] {
        let mut qs = Vec::new();
        let t = Instant::now();
        for seed in 0..5u64 {
            let params = ModelParams::new(30_000, 3_000, 5.0, lambda, 2.0);
            let inst = sample_instance(&params, seed).unwrap();
            let sup = make_supervision(&inst, 0.0, 1.0, seed).unwrap();
            let fp = run(&inst, &sup, &opts).unwrap();
            let q = csbm::amp_bp::overlap(&fp.hard_labels, &inst.truth_labels, &sup.revealed).unwrap();
            qs.push((q, fp.iters_used, fp.converged));
        }
        let mean: f64 = qs.iter().map(|x| x.0).sum::<f64>() / qs.len() as f64;
        println!("lambda={lambda}: mean q={mean:.4} detail={qs:?} ({:.0}s)", t.elapsed().as_secs_f64());
    }

    // (b) criterion 2: iteration counts, rho = 0.1
    println!("== criterion 2 (iters to overlap-convergence, rho=0.1) ==");
    let opts2 = RunOptions { criterion: Criterion::OverlapChange, min_iters: 2, max_iters: 150, ..Default::default() };
    for n in [3_000usize, 10_000, 30_000] {
        for lambda in [0.8f64, 1.2, 1.6, 2.0] {
            let mut iters = Vec::new();
            for seed in 0..3u64 {
                let mut params = ModelParams::new(n, n / 10, 5.0, lambda, 2.0);
                params.train_fraction = 0.1;
                let inst = sample_instance(&params, seed).unwrap();
                let sup = make_supervision(&inst, 0.1, 1.0, seed).unwrap();
                let fp = run(&inst, &sup, &opts2).unwrap();
                iters.push(fp.iters_used);
            }
            println!("N={n} lambda={lambda}: iters={iters:?}");
        }
    }

    // (c) criterion 4: MCMC at N=1e4 vs AMP-BP
    println!("== criterion 4 (MCMC vs AMP-BP at N=1e4, rho=0) ==");
    for lambda in [1.0f64, 1.5, 2.0] {
        for seed in 0..2u64 {
            let params = ModelParams::new(10_000, 1_000, 5.0, lambda, 2.0);
            let inst = sample_instance(&params, seed).unwrap();
            let sup = make_supervision(&inst, 0.0, 1.0, seed).unwrap();
            let fp = run(&inst, &sup, &RunOptions { criterion: Criterion::OverlapChange, min_iters: 10, max_iters: 200, ..Default::default() }).unwrap();
            let q_amp = csbm::amp_bp::overlap(&fp.hard_labels, &inst.truth_labels, &sup.revealed).unwrap();
            let t = Instant::now();
            let res = mcmc_marginals(&inst, &sup, &McmcOptions { sweeps: 2400, burn_in: 600, v_resample_every: 5, seed: seed + 7 }).unwrap();
            let q_mcmc = csbm::amp_bp::overlap(&res.hard_labels, &inst.truth_labels, &sup.revealed).unwrap();
            println!("lambda={lambda} seed={seed}: amp={q_amp:.4} mcmc={q_mcmc:.4} diff={:.4} acc={:.3} ({:.0}s)",
                     (q_amp - q_mcmc).abs(), res.acceptance_rate, t.elapsed().as_secs_f64());
        }
    }
}
