//! L2-regularized logistic regression on the revealed nodes' features.
//!
//! Training protocol: full-batch gradient descent, 2000 steps, step size
//! `0.1 / (1 + l2)`. The regularization strength is selected from the grid
//! on a held-out 20% split of the revealed set, then the winner is retrained
//! on all revealed nodes. The graph is ignored; the returned value is the
//! test overlap of the sign predictions on the hidden nodes.

use rand::Rng;

use crate::amp_bp::overlap;
use crate::error::{Error, Result};
use crate::model::{Instance, Supervision};
use crate::rng;
use crate::util::{dot_f32_f64, sigmoid};

const GD_STEPS: usize = 2000;

/// Default regularization grid.
pub const DEFAULT_L2_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

pub fn logistic_baseline(
    instance: &Instance,
    supervision: &Supervision,
    l2_grid: &[f64],
) -> Result<f64> {
    let n = instance.n();
    let revealed: Vec<usize> = (0..n).filter(|&i| supervision.revealed[i]).collect();
    if revealed.is_empty() {
        return Err(Error::InvalidParameter(
            "logistic baseline requires a nonempty revealed set".into(),
        ));
    }
    if l2_grid.is_empty() {
        return Err(Error::InvalidParameter("empty l2 grid".into()));
    }
    if revealed.len() == n {
        return Err(Error::EmptyTestSet);
    }
    // observed labels decoded from the priors (majority side of the prior)
    let obs: Vec<i8> = revealed
        .iter()
        .map(|&i| if supervision.node_prior_plus[i] >= 0.5 { 1 } else { -1 })
        .collect();

    // held-out split of the revealed set, deterministic in the instance seed
    let mut split_rng = rng::stream(instance.seed, "logistic-split");
    let mut order: Vec<usize> = (0..revealed.len()).collect();
    for i in (1..order.len()).rev() {
        let j = split_rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_val = (revealed.len() / 5).max(1).min(revealed.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);

    let best_l2 = if l2_grid.len() == 1 {
        l2_grid[0]
    } else {
        let mut best = (l2_grid[0], -1.0f64);
        for &l2 in l2_grid {
            let w = train(instance, &revealed, &obs, train_idx, l2);
            let mut agree = 0usize;
            for &k in val_idx {
                let x = instance.features.node(revealed[k]);
                let pred: i8 = if dot_f32_f64(x, &w) >= 0.0 { 1 } else { -1 };
                if pred == obs[k] {
                    agree += 1;
                }
            }
            let acc = agree as f64 / val_idx.len() as f64;
            if acc > best.1 {
                best = (l2, acc);
            }
        }
        best.0
    };

    // retrain on the full revealed set, predict the hidden nodes
    let all: Vec<usize> = (0..revealed.len()).collect();
    let w = train(instance, &revealed, &obs, &all, best_l2);
    let hard: Vec<i8> = (0..n)
        .map(|i| {
            if supervision.revealed[i] {
                if supervision.node_prior_plus[i] >= 0.5 {
                    1
                } else {
                    -1
                }
            } else if dot_f32_f64(instance.features.node(i), &w) >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    overlap(&hard, &instance.truth_labels, &supervision.revealed)
}

/// Full-batch gradient descent on the L2-regularized logistic loss.
fn train(
    instance: &Instance,
    revealed: &[usize],
    obs: &[i8],
    subset: &[usize],
    l2: f64,
) -> Vec<f64> {
    let p = instance.p();
    let m = subset.len() as f64;
    let step = 0.1 / (1.0 + l2);
    let mut w = vec![0f64; p];
    let mut grad = vec![0f64; p];
    for _ in 0..GD_STEPS {
        grad.iter_mut().for_each(|x| *x = 0.0);
        for &k in subset {
            let x = instance.features.node(revealed[k]);
            let y = obs[k] as f64;
            let margin = y * dot_f32_f64(x, &w);
            let coef = -y * sigmoid(-margin) / m;
            for (acc, &xv) in grad.iter_mut().zip(x) {
                *acc += coef * xv as f64;
            }
        }
        for (wv, gv) in w.iter_mut().zip(&grad) {
            *wv -= step * (gv + 2.0 * l2 * *wv);
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_supervision, sample_instance, ModelParams, Supervision};

    #[test]
    fn requires_revealed_nodes() {
        let params = ModelParams::new(50, 10, 2.0, 0.0, 1.0);
        let inst = sample_instance(&params, 50).unwrap();
        let sup = Supervision::unsupervised(50);
        assert!(logistic_baseline(&inst, &sup, &DEFAULT_L2_GRID).is_err());
    }

    #[test]
    fn no_feature_signal_gives_zero_overlap() {
        let mut params = ModelParams::new(3000, 300, 3.0, 0.0, 0.0);
        params.train_fraction = 0.2;
        let inst = sample_instance(&params, 51).unwrap();
        let sup = make_supervision(&inst, 0.2, 1.0, 52).unwrap();
        let q = logistic_baseline(&inst, &sup, &[1e-2]).unwrap();
        assert!(q < 3.0 / (3000.0f64 * 0.8).sqrt() + 0.02, "q = {q}");
    }

    #[test]
    fn separable_features_recover_nearly_perfectly() {
        // huge mu: the two groups are far apart in feature space
        let mut params = ModelParams::new(400, 40, 2.0, 0.0, 400.0);
        params.train_fraction = 0.3;
        let inst = sample_instance(&params, 53).unwrap();
        let sup = make_supervision(&inst, 0.3, 1.0, 54).unwrap();
        let q = logistic_baseline(&inst, &sup, &DEFAULT_L2_GRID).unwrap();
        assert!(q > 0.99, "q = {q}");
    }
}
