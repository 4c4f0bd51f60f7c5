//! Normal draws truncated to `(lower, ∞)`, used to impute censored log-times.
//!
//! Below five standard deviations the inverse CDF of the upper tail is used;
//! beyond that, exponential-proposal rejection (Robert 1995), which stays
//! exact arbitrarily far into the tail.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::stats::{std_normal_quantile, std_normal_sf};

/// Standardized truncation point above which the rejection sampler is used.
pub const TAIL_SWITCH: f64 = 5.0;

/// Draws `Z ~ N(0, 1)` conditioned on `Z > alpha`.
pub fn truncated_std_normal<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == f64::NEG_INFINITY {
        return rng.sample(StandardNormal);
    }
    if alpha < TAIL_SWITCH {
        let tail = std_normal_sf(alpha);
        loop {
            // u in (0, 1]; P(Z > x) = u·tail
            let u = 1.0 - rng.random::<f64>();
            let x = -std_normal_quantile(u * tail);
            if x > alpha && x.is_finite() {
                return x;
            }
        }
    }
    let rate = 0.5 * (alpha + (alpha * alpha + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let z = alpha + exp.sample(rng);
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() <= accept && z > alpha {
            return z;
        }
    }
}

/// Draws from `N(mean, sd²)` truncated to `(log_censor_time, ∞)`. The result
/// is always strictly greater than `log_censor_time`.
pub fn impute_censored<R: Rng + ?Sized>(mean: f64, sd: f64, log_censor_time: f64, rng: &mut R) -> f64 {
    debug_assert!(sd > 0.0);
    let alpha = (log_censor_time - mean) / sd;
    for _ in 0..16 {
        let y = mean + sd * truncated_std_normal(alpha, rng);
        if y > log_censor_time {
            return y;
        }
    }
    // Only reachable when sd is below the float spacing at log_censor_time.
    log_censor_time.next_up()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::task_rng;

    #[test]
    fn output_always_exceeds_the_bound() {
        let mut rng = task_rng(11, &[]);
        for &(mean, sd, lower) in &[
            (0.0, 1.0, 0.0),
            (0.0, 1.0, 4.999),
            (0.0, 1.0, 5.0),
            (0.0, 1.0, 40.0),
            (10.0, 0.01, -3.0),
            (-2.0, 3.0, 1e3),
            (1e6, 1e-12, 1e6),
        ] {
            for _ in 0..2000 {
                let y = impute_censored(mean, sd, lower, &mut rng);
                assert!(y > lower, "{y} <= {lower}");
            }
        }
    }

    #[test]
    fn unbounded_is_plain_normal() {
        let mut rng = task_rng(12, &[]);
        let n = 50_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| impute_censored(2.0, 0.5, f64::NEG_INFINITY, &mut rng))
            .collect();
        let m = crate::stats::mean(&draws);
        assert!((m - 2.0).abs() < 3.0 * 0.5 / (n as f64).sqrt() * 1.5);
    }
}
