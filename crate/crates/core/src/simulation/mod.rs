//! Synthetic data from the model's own generative process, plus the
//! variant-comparison and sampler-validation studies built on it.

mod study;
mod validation;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Group, GroupedDataset, SurvivalOutcome};
use crate::error::{Error, Result};
use crate::evaluation::PairKey;
use crate::sampler::{sample_inverse_gamma, PriorConfig};
use crate::stats::std_normal_quantile;

pub use study::{paired_t_test, run_study, CellOutcome, Metric, StudyConfig, StudyResult, TTest};
pub use validation::{
    getting_it_right, validation_study, GirConfig, GirResult, ValidationConfig, ValidationResult,
};

/// How the true inclusion indicators are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum InclusionPattern {
    /// Each covariate is in for every group that has it with probability `p`,
    /// otherwise out for all of them.
    AllOrNone(f64),
    /// Each available (group, covariate) pair is in independently with probability `p`.
    Independent(f64),
    AllIncluded,
    NoneIncluded,
    /// `π_ℓ` drawn from its Beta prior, then pairs drawn independently.
    FromPrior,
}

impl InclusionPattern {
    /// The six conditions of the variant-comparison study.
    pub const STUDY: [InclusionPattern; 6] = [
        InclusionPattern::AllOrNone(0.5),
        InclusionPattern::AllOrNone(0.1),
        InclusionPattern::Independent(0.5),
        InclusionPattern::Independent(0.1),
        InclusionPattern::AllIncluded,
        InclusionPattern::NoneIncluded,
    ];

    pub fn validate(&self) -> Result<()> {
        match *self {
            InclusionPattern::AllOrNone(p) | InclusionPattern::Independent(p) if !(p > 0.0 && p < 1.0) => {
                Err(Error::Config(format!("inclusion probability must be in (0, 1), got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for InclusionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InclusionPattern::AllOrNone(p) => write!(f, "all_or_none_{p}"),
            InclusionPattern::Independent(p) => write!(f, "independent_{p}"),
            InclusionPattern::AllIncluded => f.write_str("all_included"),
            InclusionPattern::NoneIncluded => f.write_str("none_included"),
            InclusionPattern::FromPrior => f.write_str("from_prior"),
        }
    }
}

/// Per-group sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSizes {
    Fixed(Vec<usize>),
    /// Drawn uniformly from `min..=max` for every group, each generation.
    Uniform { min: usize, max: usize },
}

/// Groups, their sizes and which covariates each group has.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub group_ids: Vec<String>,
    pub covariate_ids: Vec<String>,
    /// Per group, indices into `covariate_ids`.
    pub availability: Vec<Vec<usize>>,
    pub sizes: GroupSizes,
}

fn group_labels(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("G{i:0width$}")).collect()
}

fn covariate_labels(n: usize) -> Vec<String> {
    (1..=n).map(|l| format!("X{l}")).collect()
}

impl Structure {
    /// Ten groups of `n` subjects and twelve covariates: X1–X4 in every
    /// group, X5–X9 each shared by a different subset, X10–X12 each in one
    /// group only.
    pub fn desk(n: usize) -> Self {
        let shared: [&[usize]; 5] = [
            &[0, 1, 2, 3, 4],
            &[3, 4, 5, 6, 7],
            &[5, 6, 7, 8, 9],
            &[0, 2, 4, 6, 8],
            &[1, 3, 5, 7, 9],
        ];
        let singletons = [2usize, 5, 8];
        let availability = (0..10)
            .map(|g| {
                let mut covs: Vec<usize> = (0..4).collect();
                covs.extend((0..5).filter(|&k| shared[k].contains(&g)).map(|k| 4 + k));
                covs.extend((0..3).filter(|&k| singletons[k] == g).map(|k| 9 + k));
                covs
            })
            .collect();
        Self {
            group_ids: group_labels(10),
            covariate_ids: covariate_labels(12),
            availability,
            sizes: GroupSizes::Fixed(vec![n; 10]),
        }
    }

    /// Twelve clusters of 50–500 subjects over three covariates with a fixed
    /// partial-overlap pattern.
    pub fn validation() -> Self {
        let sets: [&[usize]; 12] = [
            &[0, 2],
            &[0, 1, 2],
            &[1],
            &[0, 1],
            &[2],
            &[0, 2],
            &[1],
            &[0],
            &[0, 1],
            &[0, 1, 2],
            &[0],
            &[1],
        ];
        Self {
            group_ids: group_labels(12),
            covariate_ids: covariate_labels(3),
            availability: sets.iter().map(|s| s.to_vec()).collect(),
            sizes: GroupSizes::Uniform { min: 50, max: 500 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.group_ids.len();
        if n == 0 || self.availability.len() != n {
            return Err(Error::Config("structure needs one availability set per group".into()));
        }
        for (g, set) in self.availability.iter().enumerate() {
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != set.len() || set.iter().any(|&c| c >= self.covariate_ids.len()) {
                return Err(Error::Config(format!(
                    "invalid covariate set for group `{}`",
                    self.group_ids[g]
                )));
            }
        }
        match &self.sizes {
            GroupSizes::Fixed(s) if s.len() != n || s.contains(&0) => {
                Err(Error::Config("fixed sizes must be positive, one per group".into()))
            }
            GroupSizes::Uniform { min, max } if *min == 0 || min > max => {
                Err(Error::Config(format!("invalid size range {min}..={max}")))
            }
            _ => Ok(()),
        }
    }

    fn draw_sizes<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match &self.sizes {
            GroupSizes::Fixed(s) => s.clone(),
            GroupSizes::Uniform { min, max } => {
                (0..self.group_ids.len()).map(|_| rng.random_range(*min..=*max)).collect()
            }
        }
    }
}

/// How censoring times are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Censoring {
    /// Censor log-times from the subject's own outcome distribution, shifted so
    /// the expected censored fraction is `fraction`.
    SameDistribution { fraction: f64 },
    /// Censor log-times `N(mean, sd²)` independent of all parameters.
    Independent { mean: f64, sd: f64 },
}

impl Censoring {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Censoring::SameDistribution { fraction } if !(0.0..1.0).contains(&fraction) => Err(Error::Config(
                format!("censor fraction must be in [0, 1), got {fraction}"),
            )),
            Censoring::Independent { sd, .. } if !(sd > 0.0) => {
                Err(Error::Config("independent censoring needs a positive sd".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenCondition {
    pub pattern: InclusionPattern,
    pub censoring: Censoring,
    pub structure: Structure,
    /// Generate a held-out set of the same sizes from the same parameters.
    pub with_test: bool,
}

impl GenCondition {
    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        self.censoring.validate()?;
        self.structure.validate()
    }
}

/// Generating parameter values, laid out like a sampler state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueParameters {
    /// Per group: intercept then the group's covariates in availability order.
    pub beta: Vec<Vec<f64>>,
    /// Index 0 is the intercept.
    pub beta_tilde: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub gamma: Vec<Vec<bool>>,
    pub pi: Vec<f64>,
    pub sigma2: f64,
}

impl TrueParameters {
    /// Draws every parameter from the prior. `pi` is drawn from its Beta prior
    /// only for [`InclusionPattern::FromPrior`]; other patterns record their
    /// own rate (1 or 0 for the degenerate ones).
    pub fn draw<R: Rng + ?Sized>(
        structure: &Structure,
        pattern: InclusionPattern,
        prior: &PriorConfig,
        rng: &mut R,
    ) -> Self {
        let n_cov = structure.covariate_ids.len();
        let mut beta_tilde = vec![rng.sample::<f64, _>(StandardNormal) * prior.tau2_intercept.sqrt()];
        let mut lambda2 = vec![sample_inverse_gamma(prior.lambda0_shape, prior.lambda0_rate, rng)];
        for _ in 0..n_cov {
            beta_tilde.push(rng.sample::<f64, _>(StandardNormal) * prior.tau2_coef.sqrt());
            lambda2.push(sample_inverse_gamma(prior.lambda_shape, prior.lambda_rate, rng));
        }
        let pi: Vec<f64> = match pattern {
            InclusionPattern::FromPrior => {
                let beta = Beta::new(prior.pi_alpha, prior.pi_beta).expect("validated prior");
                (0..n_cov).map(|_| beta.sample(rng)).collect()
            }
            InclusionPattern::AllOrNone(p) | InclusionPattern::Independent(p) => vec![p; n_cov],
            InclusionPattern::AllIncluded => vec![1.0; n_cov],
            InclusionPattern::NoneIncluded => vec![0.0; n_cov],
        };
        let shared: Vec<bool> = match pattern {
            InclusionPattern::AllOrNone(p) => (0..n_cov).map(|_| rng.random::<f64>() < p).collect(),
            _ => Vec::new(),
        };
        let gamma: Vec<Vec<bool>> = structure
            .availability
            .iter()
            .map(|covs| {
                covs.iter()
                    .map(|&c| match pattern {
                        InclusionPattern::AllOrNone(_) => shared[c],
                        InclusionPattern::AllIncluded => true,
                        InclusionPattern::NoneIncluded => false,
                        _ => rng.random::<f64>() < pi[c],
                    })
                    .collect()
            })
            .collect();
        let beta = structure
            .availability
            .iter()
            .zip(&gamma)
            .map(|(covs, gam)| {
                let mut b = vec![beta_tilde[0] + lambda2[0].sqrt() * rng.sample::<f64, _>(StandardNormal)];
                for (&c, &g) in covs.iter().zip(gam) {
                    let z: f64 = rng.sample(StandardNormal);
                    b.push(if g {
                        beta_tilde[c + 1] + lambda2[c + 1].sqrt() * z
                    } else {
                        prior.spike_variance.sqrt() * z
                    });
                }
                b
            })
            .collect();
        let sigma2 = sample_inverse_gamma(prior.sigma2_shape, prior.sigma2_rate, rng);
        Self {
            beta,
            beta_tilde,
            lambda2,
            gamma,
            pi,
            sigma2,
        }
    }

    /// True indicator for each available (group, covariate) pair.
    pub fn inclusion_map(&self, structure: &Structure) -> BTreeMap<PairKey, bool> {
        let mut out = BTreeMap::new();
        for (g, covs) in structure.availability.iter().enumerate() {
            for (k, &c) in covs.iter().enumerate() {
                out.insert(
                    (structure.group_ids[g].clone(), structure.covariate_ids[c].clone()),
                    self.gamma[g][k],
                );
            }
        }
        out
    }
}

/// One synthetic draw: parameters, a training set and an optional test set.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub truth: TrueParameters,
    pub train: GroupedDataset,
    pub test: Option<GroupedDataset>,
    /// Group sizes actually used.
    pub sizes: Vec<usize>,
}

/// Latent (uncensored) data for one dataset before censoring is applied.
struct Latent {
    designs: Vec<DMatrix<f64>>,
    means: Vec<Vec<f64>>,
    log_times: Vec<Vec<f64>>,
}

fn draw_latent<R: Rng + ?Sized>(
    structure: &Structure,
    truth: &TrueParameters,
    sizes: &[usize],
    rng: &mut R,
) -> Latent {
    let sd = truth.sigma2.sqrt();
    let mut out = Latent {
        designs: Vec::new(),
        means: Vec::new(),
        log_times: Vec::new(),
    };
    for (g, &n) in sizes.iter().enumerate() {
        let p = structure.availability[g].len();
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta = &truth.beta[g];
        let mu: Vec<f64> = (0..n)
            .map(|r| beta[0] + (0..p).map(|k| beta[k + 1] * x[(r, k)]).sum::<f64>())
            .collect();
        let y = mu.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect();
        out.designs.push(x);
        out.means.push(mu);
        out.log_times.push(y);
    }
    out
}

/// Censor log-times for every subject.
fn draw_censor_times<R: Rng + ?Sized>(
    censoring: Censoring,
    latent: &Latent,
    sigma2: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    match censoring {
        Censoring::SameDistribution { fraction } => {
            // T - C ~ N(-shift·sd, 2σ²) so P(T > C) = fraction.
            let shift = if fraction == 0.0 {
                f64::INFINITY
            } else {
                -std::f64::consts::SQRT_2 * std_normal_quantile(fraction)
            };
            let sd = sigma2.sqrt();
            latent
                .means
                .iter()
                .map(|mu| {
                    mu.iter()
                        .map(|m| m + sd * (rng.sample::<f64, _>(StandardNormal) + shift))
                        .collect()
                })
                .collect()
        }
        Censoring::Independent { mean, sd } => latent
            .means
            .iter()
            .map(|mu| mu.iter().map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect(),
    }
}

fn censored_count(latent: &Latent, censor: &[Vec<f64>]) -> usize {
    latent
        .log_times
        .iter()
        .flatten()
        .zip(censor.iter().flatten())
        .filter(|(y, c)| y > c)
        .count()
}

fn assemble(
    structure: &Structure,
    latent: Latent,
    censor: &[Vec<f64>],
    tag: &str,
) -> Result<GroupedDataset> {
    let groups = latent
        .designs
        .into_iter()
        .zip(latent.log_times)
        .zip(censor)
        .enumerate()
        .map(|(g, ((x, y), c))| {
            let id = &structure.group_ids[g];
            let outcomes = y
                .iter()
                .zip(c)
                .map(|(&y, &c)| {
                    if y <= c {
                        SurvivalOutcome::from_log_time(y, true)
                    } else {
                        SurvivalOutcome::from_log_time(c, false)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let subjects = (0..outcomes.len()).map(|r| format!("{id}-{tag}{r}")).collect();
            let covs = structure.availability[g]
                .iter()
                .map(|&c| structure.covariate_ids[c].clone())
                .collect();
            Group::new(id.clone(), subjects, outcomes, x, covs)
        })
        .collect::<Result<Vec<_>>>()?;
    GroupedDataset::new(groups, structure.covariate_ids.clone())
}

/// Tolerance on the realized censored fraction before censor times are
/// redrawn.
pub const CENSOR_TOLERANCE: f64 = 0.15;

fn simulate_dataset<R: Rng + ?Sized>(
    cond: &GenCondition,
    truth: &TrueParameters,
    sizes: &[usize],
    tag: &str,
    rng: &mut R,
) -> Result<GroupedDataset> {
    let latent = draw_latent(&cond.structure, truth, sizes, rng);
    let mut censor = draw_censor_times(cond.censoring, &latent, truth.sigma2, rng);
    if let Censoring::SameDistribution { fraction } = cond.censoring {
        let n: usize = sizes.iter().sum();
        let off = |c: &[Vec<f64>]| (censored_count(&latent, c) as f64 / n as f64 - fraction).abs() > CENSOR_TOLERANCE;
        if off(&censor) {
            censor = draw_censor_times(cond.censoring, &latent, truth.sigma2, rng);
            if off(&censor) {
                log::warn!(
                    "realized censored fraction {:.3} is outside {fraction} ± {CENSOR_TOLERANCE}",
                    censored_count(&latent, &censor) as f64 / n as f64
                );
            }
        }
    }
    assemble(&cond.structure, latent, &censor, tag)
}

/// Draws parameters from `prior` (inclusion per `cond.pattern`), then a
/// training set and, if requested, a test set from the same parameters.
pub fn generate_truth<R: Rng + ?Sized>(cond: &GenCondition, prior: &PriorConfig, rng: &mut R) -> Result<SimulatedData> {
    cond.validate()?;
    prior.validate()?;
    let sizes = cond.structure.draw_sizes(rng);
    let truth = TrueParameters::draw(&cond.structure, cond.pattern, prior, rng);
    let train = simulate_dataset(cond, &truth, &sizes, "", rng)?;
    let test = if cond.with_test {
        Some(simulate_dataset(cond, &truth, &sizes, "t", rng)?)
    } else {
        None
    };
    Ok(SimulatedData {
        truth,
        train,
        test,
        sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::task_rng;

    fn condition(pattern: InclusionPattern, fraction: f64) -> GenCondition {
        GenCondition {
            pattern,
            censoring: Censoring::SameDistribution { fraction },
            structure: Structure::desk(30),
            with_test: true,
        }
    }

    #[test]
    fn desk_template_shape() {
        let s = Structure::desk(150);
        s.validate().unwrap();
        let counts: Vec<usize> = (0..12)
            .map(|c| s.availability.iter().filter(|a| a.contains(&c)).count())
            .collect();
        assert_eq!(&counts[..4], &[10; 4]);
        assert!(counts[4..9].iter().all(|&k| k > 1 && k < 10));
        assert_eq!(&counts[9..], &[1; 3]);
        assert_eq!(s.group_ids[0], "G01");
    }

    #[test]
    fn validation_template_matches_pattern() {
        let s = Structure::validation();
        s.validate().unwrap();
        assert_eq!(s.availability[1], [0, 1, 2]);
        assert_eq!(s.availability[11], [1]);
    }

    #[test]
    fn all_or_none_is_constant_per_covariate() {
        let mut rng = task_rng(1, &[]);
        let s = Structure::desk(10);
        for _ in 0..50 {
            let t = TrueParameters::draw(&s, InclusionPattern::AllOrNone(0.5), &PriorConfig::validation(), &mut rng);
            for c in 0..12 {
                let vals: Vec<bool> = s
                    .availability
                    .iter()
                    .zip(&t.gamma)
                    .filter_map(|(a, g)| a.iter().position(|&x| x == c).map(|k| g[k]))
                    .collect();
                assert!(vals.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }

    #[test]
    fn degenerate_patterns() {
        let mut rng = task_rng(2, &[]);
        let s = Structure::desk(10);
        let all = TrueParameters::draw(&s, InclusionPattern::AllIncluded, &PriorConfig::validation(), &mut rng);
        assert!(all.gamma.iter().flatten().all(|&g| g));
        let none = TrueParameters::draw(&s, InclusionPattern::NoneIncluded, &PriorConfig::validation(), &mut rng);
        assert!(none.gamma.iter().flatten().all(|&g| !g));
    }

    #[test]
    fn zero_censoring_observes_everyone() {
        let mut rng = task_rng(3, &[]);
        let sim = generate_truth(&condition(InclusionPattern::AllIncluded, 0.0), &PriorConfig::validation(), &mut rng).unwrap();
        assert_eq!(sim.train.censored_fraction(), 0.0);
        assert_eq!(sim.test.unwrap().censored_fraction(), 0.0);
    }

    #[test]
    fn test_set_mirrors_training_shape() {
        let mut rng = task_rng(4, &[]);
        let sim = generate_truth(&condition(InclusionPattern::Independent(0.5), 0.5), &PriorConfig::validation(), &mut rng).unwrap();
        let test = sim.test.unwrap();
        assert_eq!(test.n_subjects(), sim.train.n_subjects());
        assert_eq!(test.registry(), sim.train.registry());
        assert_eq!(sim.truth.inclusion_map(&Structure::desk(30)).len(), sim.train.n_pairs());
    }

    #[test]
    fn invalid_conditions_rejected() {
        assert!(InclusionPattern::AllOrNone(1.0).validate().is_err());
        assert!(Censoring::SameDistribution { fraction: 1.0 }.validate().is_err());
        let mut s = Structure::desk(10);
        s.availability[0].push(0);
        assert!(s.validate().is_err());
    }
}
