//! Closed-form full conditional draws for every parameter block.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::normal_ln_pdf;

/// Diagonal increment added per retry when the coefficient precision matrix
/// fails to factor.
pub const CHOLESKY_JITTER: f64 = 1e-10;
/// Retries before giving up on the factorization.
pub const CHOLESKY_RETRIES: usize = 3;

/// Draws from `Inverse-Gamma(shape, rate)` as the reciprocal of a Gamma draw.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / rate)
        .expect("inverse-gamma parameters are positive")
        .sample(rng);
    1.0 / g
}

/// Inclusion probability `π_ℓ` given `included` of `available` indicators:
/// `Beta(alpha + included, beta + available - included)`.
pub fn sample_pi<R: Rng + ?Sized>(
    included: usize,
    available: usize,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> f64 {
    debug_assert!(included <= available);
    Beta::new(alpha + included as f64, beta + (available - included) as f64)
        .expect("beta parameters are positive")
        .sample(rng)
}

/// `P(γ = 1 | β, β̃, λ², π)` for the spike-and-slab mixture, evaluated in
/// log space.
pub fn inclusion_probability(beta: f64, beta_tilde: f64, lambda2: f64, pi: f64, z2: f64) -> f64 {
    if pi >= 1.0 {
        return 1.0;
    }
    if pi <= 0.0 {
        return 0.0;
    }
    let slab = pi.ln() + normal_ln_pdf(beta, beta_tilde, lambda2);
    let spike = (-pi).ln_1p() + normal_ln_pdf(beta, 0.0, z2);
    // 1 / (1 + exp(spike - slab)), stable for either sign of the difference.
    let d = spike - slab;
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(
    beta: f64,
    beta_tilde: f64,
    lambda2: f64,
    pi: f64,
    z2: f64,
    rng: &mut R,
) -> bool {
    let p = inclusion_probability(beta, beta_tilde, lambda2, pi, z2);
    rng.random::<f64>() < p
}

/// Prior mean and variance of a group's coefficient vector
/// `(intercept, covariates...)`. The intercept is `N(β̃₀, λ²₀)`; a covariate
/// in the slab is `N(β̃_ℓ, λ²_ℓ)` and in the spike `N(0, z²)`.
///
/// `beta_tilde` and `lambda2` are indexed like the coefficient vector.
pub fn coefficient_prior(
    gamma: &[bool],
    beta_tilde: &[f64],
    lambda2: &[f64],
    z2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let p = gamma.len() + 1;
    let mut mean = Vec::with_capacity(p);
    let mut var = Vec::with_capacity(p);
    mean.push(beta_tilde[0]);
    var.push(lambda2[0]);
    for (k, &g) in gamma.iter().enumerate() {
        if g {
            mean.push(beta_tilde[k + 1]);
            var.push(lambda2[k + 1]);
        } else {
            mean.push(0.0);
            var.push(z2);
        }
    }
    (mean, var)
}

/// Moments of the conditional `N(Bb, B)` with
/// `B = (XᵀX/σ² + Σ⁻¹)⁻¹` and `b = Xᵀy/σ² + Σ⁻¹m`.
pub fn coefficient_posterior(
    xtx: &DMatrix<f64>,
    xty: &DVector<f64>,
    prior_mean: &[f64],
    prior_var: &[f64],
    sigma2: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = factor_precision(xtx, prior_var, sigma2, "posterior")?;
    let rhs = precision_rhs(xty, prior_mean, prior_var, sigma2);
    Ok((chol.solve(&rhs), chol.inverse()))
}

fn precision_rhs(xty: &DVector<f64>, prior_mean: &[f64], prior_var: &[f64], sigma2: f64) -> DVector<f64> {
    DVector::from_fn(xty.len(), |k, _| xty[k] / sigma2 + prior_mean[k] / prior_var[k])
}

fn factor_precision(
    xtx: &DMatrix<f64>,
    prior_var: &[f64],
    sigma2: f64,
    group: &str,
) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let p = prior_var.len();
    let mut q = xtx / sigma2;
    for k in 0..p {
        q[(k, k)] += 1.0 / prior_var[k];
    }
    for retry in 0..=CHOLESKY_RETRIES {
        if retry > 0 {
            for k in 0..p {
                q[(k, k)] += CHOLESKY_JITTER;
            }
        }
        if let Some(chol) = Cholesky::new(q.clone()) {
            return Ok(chol);
        }
    }
    Err(Error::NotPositiveDefinite {
        group: group.to_string(),
        retries: CHOLESKY_RETRIES,
    })
}

/// Joint draw of one group's coefficients from sufficient statistics.
pub(crate) fn draw_coefficients<R: Rng + ?Sized>(
    xtx: &DMatrix<f64>,
    xty: &DVector<f64>,
    prior_mean: &[f64],
    prior_var: &[f64],
    sigma2: f64,
    group: &str,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = factor_precision(xtx, prior_var, sigma2, group)?;
    let rhs = precision_rhs(xty, prior_mean, prior_var, sigma2);
    let mean = chol.solve(&rhs);
    let z = DVector::from_fn(prior_var.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    // Q = LLᵀ, so Lᵀx = z gives x ~ N(0, Q⁻¹).
    let noise = chol
        .l_dirty()
        .tr_solve_lower_triangular(&z)
        .expect("cholesky factor has a positive diagonal");
    Ok(mean + noise)
}

/// Draws a group's coefficient vector given its design `x` (first column the
/// intercept), complete log-times `y`, and inclusion indicators.
#[allow(clippy::too_many_arguments)]
pub fn sample_beta_group<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    gamma: &[bool],
    beta_tilde: &[f64],
    lambda2: &[f64],
    sigma2: f64,
    z2: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let (mean, var) = coefficient_prior(gamma, beta_tilde, lambda2, z2);
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    draw_coefficients(&xtx, &xty, &mean, &var, sigma2, "group", rng)
}

/// Slab location `β̃_ℓ` given the `K` slab members:
/// `N(Kτ²β̄ / (λ² + Kτ²), λ²τ² / (λ² + Kτ²))`; `K = 0` draws from `N(0, τ²)`.
pub fn sample_beta_tilde<R: Rng + ?Sized>(slab: &[f64], lambda2: f64, tau2: f64, rng: &mut R) -> f64 {
    let (mean, var) = beta_tilde_moments(slab, lambda2, tau2);
    mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
}

pub fn beta_tilde_moments(slab: &[f64], lambda2: f64, tau2: f64) -> (f64, f64) {
    let k = slab.len() as f64;
    let sum: f64 = slab.iter().sum();
    let denom = lambda2 + k * tau2;
    // Kτ²β̄ = τ² Σβ
    (tau2 * sum / denom, lambda2 * tau2 / denom)
}

/// Slab variance `λ²_ℓ ~ IG(shape + K/2, rate + W/2)` with
/// `W = Σ (β - β̃)²` over slab members.
pub fn sample_lambda2<R: Rng + ?Sized>(
    slab: &[f64],
    beta_tilde: f64,
    shape: f64,
    rate: f64,
    rng: &mut R,
) -> f64 {
    let (a, b) = lambda2_params(slab, beta_tilde, shape, rate);
    sample_inverse_gamma(a, b, rng)
}

pub fn lambda2_params(slab: &[f64], beta_tilde: f64, shape: f64, rate: f64) -> (f64, f64) {
    let w: f64 = slab.iter().map(|b| (b - beta_tilde).powi(2)).sum();
    (shape + 0.5 * slab.len() as f64, rate + 0.5 * w)
}

/// Residual variance `σ² ~ IG(shape + N/2, rate + RSS/2)`.
pub fn sample_sigma2<R: Rng + ?Sized>(residuals: &[f64], shape: f64, rate: f64, rng: &mut R) -> f64 {
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    sample_sigma2_from_rss(residuals.len(), rss, shape, rate, rng)
}

pub(crate) fn sample_sigma2_from_rss<R: Rng + ?Sized>(
    n: usize,
    rss: f64,
    shape: f64,
    rate: f64,
    rng: &mut R,
) -> f64 {
    sample_inverse_gamma(shape + 0.5 * n as f64, rate + 0.5 * rss, rng)
}

/// Draws `N(mean, sd²)`; shared by the simulators.
pub fn sample_normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    Normal::new(mean, sd).expect("finite normal parameters").sample(rng)
}
