//! Small numeric helpers shared across modules.

/// Numerically stable logistic sigmoid. `sigmoid(+inf) = 1`, `sigmoid(-inf) = 0`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(exp(a) + exp(b)) without overflow; tolerates -inf arguments.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Standard normal CDF via the complementary error function.
///
/// The erfc core is the Numerical Recipes rational approximation
/// (absolute error below 1.2e-7), ample for overlap predictions.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Hard label from a posterior mean, with sign(0) = +1.
#[inline]
pub fn hard_label(u_hat: f64) -> i8 {
    if u_hat >= 0.0 {
        1
    } else {
        -1
    }
}

/// Dot product of an f32 slice with an f64 slice, accumulated in f64.
/// Four partial sums break the serial dependency chain of the reduction,
/// which otherwise halves throughput on the `O(NP)` passes.
#[inline]
pub fn dot_f32_f64(x: &[f32], v: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), v.len());
    let mut s = [0f64; 4];
    let mut cx = x.chunks_exact(4);
    let mut cv = v.chunks_exact(4);
    for (a, b) in (&mut cx).zip(&mut cv) {
        s[0] += a[0] as f64 * b[0];
        s[1] += a[1] as f64 * b[1];
        s[2] += a[2] as f64 * b[2];
        s[3] += a[3] as f64 * b[3];
    }
    let mut tail = 0.0;
    for (&a, &b) in cx.remainder().iter().zip(cv.remainder()) {
        tail += a as f64 * b;
    }
    s[0] + s[1] + s[2] + s[3] + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_extremes() {
        assert_eq!(sigmoid(f64::INFINITY), 1.0);
        assert_eq!(sigmoid(f64::NEG_INFINITY), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        // no overflow far out
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
    }

    #[test]
    fn log_add_exp_matches_direct() {
        let v = log_add_exp(1.0f64.ln(), 3.0f64.ln());
        assert!((v - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 0.0), 0.0);
        assert_eq!(
            log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn normal_cdf_reference_values() {
        // Reference values from standard tables.
        assert!((normal_cdf(0.0) - 0.5).abs() < 3e-8);
        assert!((normal_cdf(1.0) - 0.841344746).abs() < 3e-7);
        assert!((normal_cdf(-1.0) - 0.158655254).abs() < 3e-7);
        assert!((normal_cdf(2.0) - 0.977249868).abs() < 3e-7);
        assert!((normal_cdf(4.0) - 0.999968329).abs() < 3e-7);
    }
}
