//! Gibbs sampler for the hierarchical spike-and-slab censored log-normal model.
//!
//! For group `i`, subject `j`:
//!
//! ```text
//! log T_ij ~ N(β_i0 + Σ_{ℓ∈S_i} β_iℓ X_ijℓ, σ²)
//! β_i0     ~ N(β̃_0, λ²_0)
//! β_iℓ     ~ (1 - γ_iℓ) N(0, z²) + γ_iℓ N(β̃_ℓ, λ²_ℓ)
//! γ_iℓ     ~ Bernoulli(π_ℓ),   π_ℓ ~ Beta(a, b)
//! β̃_ℓ ~ N(0, τ²),   λ²_ℓ ~ IG(α₁, α₂),   σ² ~ IG(a_σ, b_σ)
//! ```
//!
//! Censored log-times are imputed each sweep from their truncated normal
//! conditionals, after which every block has a closed-form conditional.
//! A sweep updates, in order: latent log-times, each group's coefficient
//! vector, the inclusion indicators, the inclusion probabilities, the slab
//! location and scale (intercept included), and finally `σ²`.

mod conditionals;
mod io;
mod summary;
mod truncnorm;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::seed::{task_rng, TaskRng};

pub use conditionals::{
    beta_tilde_moments, coefficient_posterior, coefficient_prior, inclusion_probability,
    lambda2_params, sample_beta_group, sample_beta_tilde, sample_gamma, sample_inverse_gamma,
    sample_lambda2, sample_normal, sample_pi, sample_sigma2, CHOLESKY_JITTER, CHOLESKY_RETRIES,
};
pub use io::{read_posterior, write_posterior};
pub use summary::{
    inclusion_estimates, summarize, summarize_with_level, CoefficientSummary, HyperSummary,
    IntervalSummary, PosteriorSummary,
};
pub use truncnorm::{impute_censored, truncated_std_normal, TAIL_SWITCH};

/// Hyperparameters of every prior in the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Spike variance `z²`.
    pub spike_variance: f64,
    /// Prior variance of the intercept slab location `β̃₀`.
    pub tau2_intercept: f64,
    /// Prior variance of each covariate's slab location `β̃_ℓ`.
    pub tau2_coef: f64,
    pub lambda0_shape: f64,
    pub lambda0_rate: f64,
    pub lambda_shape: f64,
    pub lambda_rate: f64,
    pub sigma2_shape: f64,
    pub sigma2_rate: f64,
    pub pi_alpha: f64,
    pub pi_beta: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            spike_variance: 1.0 / 10_000.0,
            tau2_intercept: 100.0,
            tau2_coef: 1.0,
            lambda0_shape: 1.0,
            lambda0_rate: 1.0,
            lambda_shape: 5.0,
            lambda_rate: 1.0,
            sigma2_shape: 0.01,
            sigma2_rate: 0.01,
            pi_alpha: 1.0,
            pi_beta: 1.0,
        }
    }
}

impl PriorConfig {
    /// Priors of the sampler validation studies: identical to the default
    /// except `σ² ~ IG(1, 1)`.
    pub fn validation() -> Self {
        Self {
            sigma2_shape: 1.0,
            sigma2_rate: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("spike_variance", self.spike_variance),
            ("tau2_intercept", self.tau2_intercept),
            ("tau2_coef", self.tau2_coef),
            ("lambda0_shape", self.lambda0_shape),
            ("lambda0_rate", self.lambda0_rate),
            ("lambda_shape", self.lambda_shape),
            ("lambda_rate", self.lambda_rate),
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_rate", self.sigma2_rate),
            ("pi_alpha", self.pi_alpha),
            ("pi_beta", self.pi_beta),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("prior `{name}` must be positive, got {v}")));
            }
        }
        if self.spike_variance >= self.tau2_coef {
            return Err(Error::Config(format!(
                "spike variance {} must be far below tau2_coef {}",
                self.spike_variance, self.tau2_coef
            )));
        }
        Ok(())
    }

    /// Stable short fingerprint of the configuration.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("prior serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Which prior structure the sampler runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Per-covariate inclusion probabilities shared across groups.
    Hierarchical,
    /// One inclusion probability for every covariate and group.
    SharedPi,
    /// Inclusion probabilities fixed at 0.5.
    FixedHalf,
    /// Every available covariate always in the slab.
    FullNoSS,
    /// Group intercepts only.
    NullInterceptOnly,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 5] = [
        ModelVariant::Hierarchical,
        ModelVariant::SharedPi,
        ModelVariant::FixedHalf,
        ModelVariant::FullNoSS,
        ModelVariant::NullInterceptOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Hierarchical => "hierarchical",
            ModelVariant::SharedPi => "shared_pi",
            ModelVariant::FixedHalf => "fixed_half",
            ModelVariant::FullNoSS => "full_no_ss",
            ModelVariant::NullInterceptOnly => "null_intercept_only",
        }
    }

    /// Stable index used when deriving per-task seeds.
    pub fn code(self) -> u64 {
        Self::ALL.iter().position(|&v| v == self).expect("listed") as u64
    }

    pub fn has_covariates(self) -> bool {
        self != ModelVariant::NullInterceptOnly
    }

    /// Whether inclusion indicators are sampled (rather than pinned).
    pub fn samples_indicators(self) -> bool {
        matches!(
            self,
            ModelVariant::Hierarchical | ModelVariant::SharedPi | ModelVariant::FixedHalf
        )
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!("unknown variant `{s}`; expected one of {names:?}"))
            })
    }
}

/// Iteration plan: `total` sweeps, the first `burn_in` discarded, every
/// `thin`-th of the rest kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub total: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Schedule {
    pub fn new(total: usize, burn_in: usize, thin: usize) -> Result<Self> {
        let s = Self { total, burn_in, thin };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.total <= self.burn_in {
            return Err(Error::Config(format!(
                "total iterations {} must exceed burn-in {}",
                self.total, self.burn_in
            )));
        }
        Ok(())
    }

    /// `floor((total - burn_in) / thin)`.
    pub fn stored_draws(&self) -> usize {
        (self.total - self.burn_in) / self.thin
    }

    fn keeps(&self, iteration: usize) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in) % self.thin == 0
    }
}

/// Full parameter state of one Gibbs iteration.
///
/// Hyperparameter vectors are indexed with the intercept at 0 and registry
/// covariate `c` at `c + 1`; `pi[c]` belongs to covariate `c`. Coefficient
/// vectors are per group, intercept first, then the group's active
/// covariates in [`ModelLayout::group_covariates`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub beta: Vec<Vec<f64>>,
    pub beta_tilde: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub gamma: Vec<Vec<bool>>,
    pub pi: Vec<f64>,
    pub sigma2: f64,
    /// Per group, one entry per censored subject in row order. Empty in
    /// stored draws unless latent times were requested.
    pub latent_log_times: Vec<Vec<f64>>,
}

/// Structure of the fitted model: groups, covariates and availability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLayout {
    pub group_ids: Vec<String>,
    pub covariate_ids: Vec<String>,
    /// Registry indices of each group's available covariates.
    pub group_covariates: Vec<Vec<usize>>,
    /// Subject ids of each group's censored subjects, in row order.
    pub censored_subjects: Vec<Vec<String>>,
}

impl ModelLayout {
    pub fn from_dataset(ds: &GroupedDataset) -> Self {
        let groups = ds.groups();
        Self {
            group_ids: groups.iter().map(|g| g.id().to_string()).collect(),
            covariate_ids: ds.registry().to_vec(),
            group_covariates: groups
                .iter()
                .map(|g| {
                    g.covariate_ids()
                        .iter()
                        .map(|c| ds.covariate_index(c).expect("registry covers groups"))
                        .collect()
                })
                .collect(),
            censored_subjects: groups
                .iter()
                .map(|g| {
                    g.outcomes()
                        .iter()
                        .zip(g.subject_ids())
                        .filter(|(o, _)| o.is_censored())
                        .map(|(_, s)| s.clone())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn group_index(&self, id: &str) -> Option<usize> {
        self.group_ids.iter().position(|g| g == id)
    }
}

/// Provenance of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    /// Chain index when several chains share a seed; `None` for a single run.
    pub chain: Option<u64>,
    pub schedule: Schedule,
    pub variant: ModelVariant,
    pub prior: PriorConfig,
    pub prior_hash: String,
    pub keep_latent: bool,
}

/// Thinned post-burn-in draws of one chain (or several pooled chains).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub layout: ModelLayout,
    pub meta: RunMeta,
    pub draws: Vec<ChainState>,
}

impl PosteriorSamples {
    pub fn variant(&self) -> ModelVariant {
        self.meta.variant
    }

    /// Registry indices of group `g`'s covariates that are in the model.
    pub fn active_covariates(&self, g: usize) -> &[usize] {
        if self.meta.variant.has_covariates() {
            &self.layout.group_covariates[g]
        } else {
            &[]
        }
    }

    /// Concatenates the draws of chains fitted to the same data and model.
    pub fn pool(chains: &[PosteriorSamples]) -> Result<PosteriorSamples> {
        let first = chains
            .first()
            .ok_or_else(|| Error::Validation("no chains to pool".into()))?;
        if chains
            .iter()
            .any(|c| c.layout != first.layout || c.meta.variant != first.meta.variant)
        {
            return Err(Error::Validation("chains disagree on model layout".into()));
        }
        let mut meta = first.meta.clone();
        meta.chain = None;
        Ok(PosteriorSamples {
            layout: first.layout.clone(),
            meta,
            draws: chains.iter().flat_map(|c| c.draws.iter().cloned()).collect(),
        })
    }
}

/// Knobs that do not change the target distribution.
#[derive(Debug, Clone, Copy, Default)]
pub struct GibbsOptions {
    /// Store censored log-time draws alongside each kept state.
    pub keep_latent: bool,
    /// Log progress every 1000 iterations.
    pub progress: bool,
}

/// Precomputed sufficient statistics for one group.
#[derive(Debug, Clone)]
struct GroupBlock {
    id: String,
    n: usize,
    /// 1 + number of active covariates
    p: usize,
    /// registry index of each active covariate column
    covariates: Vec<usize>,
    xtx: DMatrix<f64>,
    xty_events: DVector<f64>,
    yty_events: f64,
    /// Row-major `(1, x)` rows of censored subjects.
    censored_rows: Vec<f64>,
    log_censor: Vec<f64>,
}

/// A compiled model ready to run sweeps.
#[derive(Debug, Clone)]
pub struct Sampler {
    blocks: Vec<GroupBlock>,
    /// Per registry covariate: (group, coefficient position) pairs.
    availability: Vec<Vec<(usize, usize)>>,
    n_subjects: usize,
    variant: ModelVariant,
    prior: PriorConfig,
    layout: ModelLayout,
}

impl Sampler {
    pub fn new(ds: &GroupedDataset, variant: ModelVariant, prior: PriorConfig) -> Result<Self> {
        prior.validate()?;
        let layout = ModelLayout::from_dataset(ds);
        let n_cov = if variant.has_covariates() {
            layout.covariate_ids.len()
        } else {
            0
        };
        let mut availability = vec![Vec::new(); n_cov];
        let mut blocks = Vec::with_capacity(ds.groups().len());
        for (gi, g) in ds.groups().iter().enumerate() {
            let covariates: Vec<usize> = if variant.has_covariates() {
                layout.group_covariates[gi].clone()
            } else {
                Vec::new()
            };
            for (k, &c) in covariates.iter().enumerate() {
                availability[c].push((gi, k + 1));
            }
            let p = covariates.len() + 1;
            let x = DMatrix::from_fn(g.len(), p, |r, c| if c == 0 { 1.0 } else { g.design()[(r, c - 1)] });
            let mut xty_events = DVector::zeros(p);
            let mut yty_events = 0.0;
            let mut censored_rows = Vec::new();
            let mut log_censor = Vec::new();
            for (r, o) in g.outcomes().iter().enumerate() {
                if o.event() {
                    let y = o.log_time();
                    for c in 0..p {
                        xty_events[c] += x[(r, c)] * y;
                    }
                    yty_events += y * y;
                } else {
                    censored_rows.extend((0..p).map(|c| x[(r, c)]));
                    log_censor.push(o.log_time());
                }
            }
            blocks.push(GroupBlock {
                id: g.id().to_string(),
                n: g.len(),
                p,
                covariates,
                xtx: x.transpose() * &x,
                xty_events,
                yty_events,
                censored_rows,
                log_censor,
            });
        }
        Ok(Self {
            n_subjects: blocks.iter().map(|b| b.n).sum(),
            blocks,
            availability,
            variant,
            prior,
            layout,
        })
    }

    pub fn layout(&self) -> &ModelLayout {
        &self.layout
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    /// Starting state: β = 0, β̃ = 0, λ² at its prior mean (prior mode when the
    /// mean does not exist), γ = 1, π = 0.5, σ² = 1, latent log-times 0.1
    /// above their censoring points.
    pub fn initial_state(&self) -> ChainState {
        let n_cov = self.availability.len();
        let prior_center = |shape: f64, rate: f64| {
            if shape > 1.0 {
                rate / (shape - 1.0)
            } else {
                rate / (shape + 1.0)
            }
        };
        let mut lambda2 = vec![prior_center(self.prior.lambda_shape, self.prior.lambda_rate); n_cov + 1];
        lambda2[0] = prior_center(self.prior.lambda0_shape, self.prior.lambda0_rate);
        ChainState {
            beta: self.blocks.iter().map(|b| vec![0.0; b.p]).collect(),
            beta_tilde: vec![0.0; n_cov + 1],
            lambda2,
            gamma: self.blocks.iter().map(|b| vec![true; b.p - 1]).collect(),
            pi: vec![0.5; n_cov],
            sigma2: 1.0,
            latent_log_times: self
                .blocks
                .iter()
                .map(|b| b.log_censor.iter().map(|c| c + 0.1).collect())
                .collect(),
        }
    }

    /// One full Gibbs sweep, updating `state` in place.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        let prior = &self.prior;
        let z2 = prior.spike_variance;

        // Latent log-times of censored subjects.
        let sd = state.sigma2.sqrt();
        for (g, b) in self.blocks.iter().enumerate() {
            let beta = &state.beta[g];
            for (k, row) in b.censored_rows.chunks_exact(b.p).enumerate() {
                let mu: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
                state.latent_log_times[g][k] = impute_censored(mu, sd, b.log_censor[k], rng);
            }
        }

        // Group coefficient vectors; keep complete-data statistics for σ².
        let mut rss = 0.0;
        for (g, b) in self.blocks.iter().enumerate() {
            let mut xty = b.xty_events.clone();
            let mut yty = b.yty_events;
            for (row, &y) in b.censored_rows.chunks_exact(b.p).zip(&state.latent_log_times[g]) {
                for c in 0..b.p {
                    xty[c] += row[c] * y;
                }
                yty += y * y;
            }
            let (tilde, lam) = self.group_hyper(state, b);
            let (mean, var) = coefficient_prior(&state.gamma[g], &tilde, &lam, z2);
            let beta = conditionals::draw_coefficients(&b.xtx, &xty, &mean, &var, state.sigma2, &b.id, rng)?;
            let fitted = (&b.xtx * &beta).dot(&beta);
            rss += (yty - 2.0 * beta.dot(&xty) + fitted).max(0.0);
            state.beta[g].copy_from_slice(beta.as_slice());
        }

        // Inclusion indicators.
        if self.variant.samples_indicators() {
            for (g, b) in self.blocks.iter().enumerate() {
                for (k, &c) in b.covariates.iter().enumerate() {
                    state.gamma[g][k] = sample_gamma(
                        state.beta[g][k + 1],
                        state.beta_tilde[c + 1],
                        state.lambda2[c + 1],
                        state.pi[c],
                        z2,
                        rng,
                    );
                }
            }
        }

        // Inclusion probabilities.
        match self.variant {
            ModelVariant::Hierarchical => {
                for (c, members) in self.availability.iter().enumerate() {
                    let included = members.iter().filter(|&&(g, k)| state.gamma[g][k - 1]).count();
                    state.pi[c] = sample_pi(included, members.len(), prior.pi_alpha, prior.pi_beta, rng);
                }
            }
            ModelVariant::SharedPi => {
                let available: usize = state.gamma.iter().map(Vec::len).sum();
                let included = state.gamma.iter().flatten().filter(|&&g| g).count();
                let pi = sample_pi(included, available, prior.pi_alpha, prior.pi_beta, rng);
                state.pi.iter_mut().for_each(|p| *p = pi);
            }
            _ => {}
        }

        // Slab location and scale: intercept, then each covariate.
        let intercepts: Vec<f64> = state.beta.iter().map(|b| b[0]).collect();
        state.beta_tilde[0] = sample_beta_tilde(&intercepts, state.lambda2[0], prior.tau2_intercept, rng);
        state.lambda2[0] = sample_lambda2(
            &intercepts,
            state.beta_tilde[0],
            prior.lambda0_shape,
            prior.lambda0_rate,
            rng,
        );
        let mut slab = Vec::new();
        for (c, members) in self.availability.iter().enumerate() {
            slab.clear();
            slab.extend(
                members
                    .iter()
                    .filter(|&&(g, k)| state.gamma[g][k - 1])
                    .map(|&(g, k)| state.beta[g][k]),
            );
            state.beta_tilde[c + 1] = sample_beta_tilde(&slab, state.lambda2[c + 1], prior.tau2_coef, rng);
            state.lambda2[c + 1] = sample_lambda2(
                &slab,
                state.beta_tilde[c + 1],
                prior.lambda_shape,
                prior.lambda_rate,
                rng,
            );
        }

        state.sigma2 = conditionals::sample_sigma2_from_rss(
            self.n_subjects,
            rss,
            prior.sigma2_shape,
            prior.sigma2_rate,
            rng,
        );
        Ok(())
    }

    /// β̃ and λ² arranged like group `b`'s coefficient vector.
    fn group_hyper(&self, state: &ChainState, b: &GroupBlock) -> (Vec<f64>, Vec<f64>) {
        let mut tilde = Vec::with_capacity(b.p);
        let mut lam = Vec::with_capacity(b.p);
        tilde.push(state.beta_tilde[0]);
        lam.push(state.lambda2[0]);
        for &c in &b.covariates {
            tilde.push(state.beta_tilde[c + 1]);
            lam.push(state.lambda2[c + 1]);
        }
        (tilde, lam)
    }

    fn check_finite(&self, state: &ChainState, iteration: usize) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::NonFinite {
                iteration,
                what: what.to_string(),
            })
        };
        if !(state.sigma2.is_finite() && state.sigma2 > 0.0) {
            return bad("sigma2");
        }
        if state.beta.iter().flatten().any(|b| !b.is_finite()) {
            return bad("coefficient");
        }
        if state.beta_tilde.iter().any(|b| !b.is_finite())
            || state.lambda2.iter().any(|l| !(l.is_finite() && *l > 0.0))
        {
            return bad("slab hyperparameter");
        }
        if state.latent_log_times.iter().flatten().any(|y| !y.is_finite()) {
            return bad("latent log-time");
        }
        Ok(())
    }

    /// Runs a chain from [`Sampler::initial_state`] with the given generator.
    pub fn run<R: Rng + ?Sized>(
        &self,
        schedule: Schedule,
        options: GibbsOptions,
        rng: &mut R,
    ) -> Result<Vec<ChainState>> {
        schedule.validate()?;
        let mut state = self.initial_state();
        let mut draws = Vec::with_capacity(schedule.stored_draws());
        for iteration in 1..=schedule.total {
            self.sweep(&mut state, rng).map_err(|e| match e {
                Error::NotPositiveDefinite { .. } => e,
                other => other,
            })?;
            self.check_finite(&state, iteration)?;
            if schedule.keeps(iteration) {
                let mut kept = state.clone();
                if !options.keep_latent {
                    kept.latent_log_times = Vec::new();
                }
                draws.push(kept);
            }
            if options.progress && iteration % 1000 == 0 {
                log::info!(
                    "{}: iteration {iteration}/{} (sigma2 = {:.4})",
                    self.variant,
                    schedule.total,
                    state.sigma2
                );
            }
        }
        Ok(draws)
    }

    fn meta(&self, seed: u64, chain: Option<u64>, schedule: Schedule, options: GibbsOptions) -> RunMeta {
        RunMeta {
            seed,
            chain,
            schedule,
            variant: self.variant,
            prior: self.prior,
            prior_hash: self.prior.fingerprint(),
            keep_latent: options.keep_latent,
        }
    }
}

/// Fits `variant` to `ds`. Output depends only on the arguments.
pub fn gibbs_run(
    ds: &GroupedDataset,
    variant: ModelVariant,
    prior: PriorConfig,
    schedule: Schedule,
    seed: u64,
) -> Result<PosteriorSamples> {
    gibbs_run_with(ds, variant, prior, schedule, seed, GibbsOptions::default())
}

pub fn gibbs_run_with(
    ds: &GroupedDataset,
    variant: ModelVariant,
    prior: PriorConfig,
    schedule: Schedule,
    seed: u64,
    options: GibbsOptions,
) -> Result<PosteriorSamples> {
    schedule.validate()?;
    let sampler = Sampler::new(ds, variant, prior)?;
    let mut rng: TaskRng = task_rng(seed, &[]);
    let draws = sampler.run(schedule, options, &mut rng)?;
    Ok(PosteriorSamples {
        layout: sampler.layout.clone(),
        meta: sampler.meta(seed, None, schedule, options),
        draws,
    })
}

/// Runs `n_chains` independent chains in parallel; chain `c` uses the stream
/// derived from `(seed, c)`.
pub fn gibbs_chains(
    ds: &GroupedDataset,
    variant: ModelVariant,
    prior: PriorConfig,
    schedule: Schedule,
    seed: u64,
    n_chains: usize,
    options: GibbsOptions,
) -> Result<Vec<PosteriorSamples>> {
    schedule.validate()?;
    let sampler = Sampler::new(ds, variant, prior)?;
    (0..n_chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = task_rng(seed, &[c]);
            let draws = sampler.run(schedule, options, &mut rng)?;
            Ok(PosteriorSamples {
                layout: sampler.layout.clone(),
                meta: sampler.meta(seed, Some(c), schedule, options),
                draws,
            })
        })
        .collect()
}
