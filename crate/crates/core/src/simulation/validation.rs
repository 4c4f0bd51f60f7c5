use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::report::{ensure_dir, fmt6, write_csv};
use crate::sampler::{
    gibbs_run, summarize_with_level, ChainState, ModelVariant, PosteriorSamples, PriorConfig, Sampler, Schedule,
};
use crate::seed::{derive_seed, task_rng};
use crate::stats::{inverse_gamma_cdf, ks_test, KsResult};

use super::{generate_truth, Censoring, GenCondition, InclusionPattern, Structure, TrueParameters};

/// Coverage and selection-accuracy study: parameters drawn from the prior,
/// data simulated, the hierarchical model fitted, intervals and thresholded
/// inclusion compared with the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub outer: usize,
    pub schedule: Schedule,
    pub structure: Structure,
    pub censor_fraction: f64,
    pub prior: PriorConfig,
    pub level: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            outer: 1000,
            schedule: Schedule {
                total: 2000,
                burn_in: 1000,
                thin: 1,
            },
            structure: Structure::validation(),
            censor_fraction: 0.5,
            prior: PriorConfig::validation(),
            level: 0.95,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer == 0 {
            return Err(Error::Config("validation needs at least one outer iteration".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level must be in (0, 1), got {}", self.level)));
        }
        self.schedule.validate()?;
        self.prior.validate()?;
        self.condition().validate()
    }

    fn condition(&self) -> GenCondition {
        GenCondition {
            pattern: InclusionPattern::FromPrior,
            censoring: Censoring::SameDistribution {
                fraction: self.censor_fraction,
            },
            structure: self.structure.clone(),
            with_test: false,
        }
    }
}

/// Which parameter a coverage cell tracks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverageParam {
    BetaTilde,
    Lambda2,
    Pi,
    /// Coefficient of the indexed group.
    Beta(usize),
    Sigma2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCell {
    pub param: CoverageParam,
    /// Covariate index, `None` for the intercept (or σ²).
    pub covariate: Option<usize>,
    pub covered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCell {
    pub group: usize,
    pub covariate: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationResult {
    pub config: ValidationConfig,
    pub coverage: Vec<CoverageCell>,
    pub accuracy: Vec<AccuracyCell>,
    /// Mean realized censored fraction over outer iterations.
    pub mean_censored_fraction: f64,
}

/// Cells in a fixed order so per-iteration flags can be summed positionally.
fn coverage_cells(s: &Structure) -> Vec<CoverageCell> {
    let cell = |param, covariate| CoverageCell {
        param,
        covariate,
        covered: 0,
    };
    let n_cov = s.covariate_ids.len();
    let mut cells = Vec::new();
    for param in [CoverageParam::BetaTilde, CoverageParam::Lambda2] {
        cells.push(cell(param.clone(), None));
        cells.extend((0..n_cov).map(|c| cell(param.clone(), Some(c))));
    }
    cells.extend((0..n_cov).map(|c| cell(CoverageParam::Pi, Some(c))));
    for (g, covs) in s.availability.iter().enumerate() {
        cells.push(cell(CoverageParam::Beta(g), None));
        cells.extend(covs.iter().map(|&c| cell(CoverageParam::Beta(g), Some(c))));
    }
    cells.push(cell(CoverageParam::Sigma2, None));
    cells
}

fn accuracy_cells(s: &Structure) -> Vec<AccuracyCell> {
    s.availability
        .iter()
        .enumerate()
        .flat_map(|(group, covs)| {
            covs.iter().map(move |&covariate| AccuracyCell {
                group,
                covariate,
                correct: 0,
            })
        })
        .collect()
}

/// Checks that the fitted layout lines up with the structure so truth and
/// posterior can be compared positionally.
fn check_layout(ps: &PosteriorSamples, s: &Structure) -> Result<()> {
    let l = &ps.layout;
    if l.group_ids != s.group_ids || l.covariate_ids != s.covariate_ids || l.group_covariates != s.availability {
        return Err(Error::Validation("simulated layout differs from the structure".into()));
    }
    Ok(())
}

struct OuterFlags {
    covered: Vec<bool>,
    correct: Vec<bool>,
    censored_fraction: f64,
}

fn outer_iteration(config: &ValidationConfig, seed: u64, i: usize) -> Result<OuterFlags> {
    let mut rng = task_rng(seed, &[i as u64, 0]);
    let sim = generate_truth(&config.condition(), &config.prior, &mut rng)?;
    let fit_seed = derive_seed(seed, &[i as u64, 1]);
    let ps = gibbs_run(&sim.train, ModelVariant::Hierarchical, config.prior, config.schedule, fit_seed)?;
    check_layout(&ps, &config.structure)?;
    let summary = summarize_with_level(&ps, config.level)?;
    let truth: &TrueParameters = &sim.truth;
    let hyper = |c: Option<usize>| &summary.hyper[c.map_or(0, |c| c + 1)];
    let mut coef = summary.coefficients.iter();
    let mut covered = Vec::new();
    for cell in coverage_cells(&config.structure) {
        let idx = cell.covariate.map_or(0, |c| c + 1);
        let ok = match cell.param {
            CoverageParam::BetaTilde => hyper(cell.covariate).beta_tilde.contains(truth.beta_tilde[idx]),
            CoverageParam::Lambda2 => hyper(cell.covariate).lambda2.contains(truth.lambda2[idx]),
            CoverageParam::Pi => hyper(cell.covariate)
                .pi
                .expect("hierarchical fit tracks pi")
                .contains(truth.pi[idx - 1]),
            CoverageParam::Beta(g) => {
                // Coefficients are summarized in the same group/covariate order.
                let k = match cell.covariate {
                    None => 0,
                    Some(c) => 1 + config.structure.availability[g].iter().position(|&x| x == c).expect("available"),
                };
                coef.next().expect("one summary per coefficient").effect.contains(truth.beta[g][k])
            }
            CoverageParam::Sigma2 => summary.sigma2.contains(truth.sigma2),
        };
        covered.push(ok);
    }
    let correct = summary
        .coefficients
        .iter()
        .filter(|c| c.covariate.is_some())
        .zip(truth.gamma.iter().flatten())
        .map(|(c, &g)| c.is_selected() == g)
        .collect();
    Ok(OuterFlags {
        covered,
        correct,
        censored_fraction: sim.train.censored_fraction(),
    })
}

/// Outer iteration `i` draws data from stream `(seed, i, 0)` and fits with
/// seed `derive(seed, i, 1)`; tallies are order-independent sums.
pub fn validation_study(config: &ValidationConfig, seed: u64) -> Result<ValidationResult> {
    config.validate()?;
    let flags = (0..config.outer)
        .into_par_iter()
        .map(|i| outer_iteration(config, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut coverage = coverage_cells(&config.structure);
    let mut accuracy = accuracy_cells(&config.structure);
    for f in &flags {
        for (cell, &ok) in coverage.iter_mut().zip(&f.covered) {
            cell.covered += usize::from(ok);
        }
        for (cell, &ok) in accuracy.iter_mut().zip(&f.correct) {
            cell.correct += usize::from(ok);
        }
    }
    Ok(ValidationResult {
        config: config.clone(),
        coverage,
        accuracy,
        mean_censored_fraction: flags.iter().map(|f| f.censored_fraction).sum::<f64>() / flags.len() as f64,
    })
}

impl ValidationResult {
    pub fn coverage_rate(&self, cell: &CoverageCell) -> f64 {
        cell.covered as f64 / self.config.outer as f64
    }

    pub fn accuracy_rate(&self, cell: &AccuracyCell) -> f64 {
        cell.correct as f64 / self.config.outer as f64
    }

    pub fn overall_accuracy(&self) -> f64 {
        let correct: usize = self.accuracy.iter().map(|c| c.correct).sum();
        correct as f64 / (self.accuracy.len() * self.config.outer) as f64
    }

    fn row_label(&self, p: &CoverageParam) -> String {
        match p {
            CoverageParam::BetaTilde => "beta_tilde".into(),
            CoverageParam::Lambda2 => "lambda2".into(),
            CoverageParam::Pi => "pi".into(),
            CoverageParam::Beta(g) => format!("beta_{}", self.config.structure.group_ids[*g]),
            CoverageParam::Sigma2 => "sigma2".into(),
        }
    }

    /// Parameter rows × (intercept, covariates) columns; blank where a cell
    /// does not exist.
    pub fn write_coverage_csv(&self, path: &Path) -> Result<()> {
        let covs = &self.config.structure.covariate_ids;
        let mut header = vec!["parameter", "intercept"];
        header.extend(covs.iter().map(String::as_str));
        let mut rows: Vec<(CoverageParam, Vec<String>)> = Vec::new();
        for cell in &self.coverage {
            if rows.last().is_none_or(|(p, _)| *p != cell.param) {
                let mut row = vec![String::new(); covs.len() + 2];
                row[0] = self.row_label(&cell.param);
                rows.push((cell.param.clone(), row));
            }
            let row = &mut rows.last_mut().expect("pushed").1;
            row[cell.covariate.map_or(1, |c| c + 2)] = fmt6(self.coverage_rate(cell));
        }
        write_csv(path, &header, rows.into_iter().map(|(_, r)| r))
    }

    /// Groups × covariates accuracy table; blank where unavailable.
    pub fn write_accuracy_csv(&self, path: &Path) -> Result<()> {
        let s = &self.config.structure;
        let mut header = vec!["group"];
        header.extend(s.covariate_ids.iter().map(String::as_str));
        let rows = s.group_ids.iter().enumerate().map(|(g, id)| {
            let mut row = vec![id.clone()];
            row.extend((0..s.covariate_ids.len()).map(|c| {
                self.accuracy
                    .iter()
                    .find(|a| a.group == g && a.covariate == c)
                    .map(|a| fmt6(self.accuracy_rate(a)))
                    .unwrap_or_default()
            }));
            row
        });
        write_csv(path, &header, rows)
    }

    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.write_coverage_csv(&dir.join("coverage.csv"))?;
        self.write_accuracy_csv(&dir.join("selection_accuracy.csv"))?;
        write_csv(
            &dir.join("validation_overview.csv"),
            &["outer", "level", "overall_accuracy", "mean_censored_fraction"],
            [vec![
                self.config.outer.to_string(),
                fmt6(self.config.level),
                fmt6(self.overall_accuracy()),
                fmt6(self.mean_censored_fraction),
            ]],
        )
    }
}

/// Getting-it-right check: each cycle draws parameters from the prior and
/// data from the likelihood, then applies one Gibbs sweep started at the
/// true parameters. If every conditional is correct the swept parameters
/// are again distributed as the prior.
///
/// Censoring must not depend on the parameters for this to hold, so censor
/// log-times are drawn from a fixed normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GirConfig {
    pub cycles: usize,
    pub structure: Structure,
    pub prior: PriorConfig,
    pub censor_mean: f64,
    pub censor_sd: f64,
}

impl Default for GirConfig {
    fn default() -> Self {
        Self {
            cycles: 10_000,
            structure: Structure::validation(),
            prior: PriorConfig::validation(),
            censor_mean: 0.0,
            censor_sd: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirResult {
    /// `(parameter name, KS test against its prior marginal)`.
    pub tests: Vec<(String, KsResult)>,
    pub mean_censored_fraction: f64,
}

pub fn getting_it_right(config: &GirConfig, seed: u64) -> Result<GirResult> {
    if config.cycles < 2 {
        return Err(Error::Config("getting-it-right needs at least 2 cycles".into()));
    }
    let cond = GenCondition {
        pattern: InclusionPattern::FromPrior,
        censoring: Censoring::Independent {
            mean: config.censor_mean,
            sd: config.censor_sd,
        },
        structure: config.structure.clone(),
        with_test: false,
    };
    cond.validate()?;
    let prior = config.prior;
    let swept = (0..config.cycles)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, &[i as u64]);
            let sim = generate_truth(&cond, &prior, &mut rng)?;
            let sampler = Sampler::new(&sim.train, ModelVariant::Hierarchical, prior)?;
            let t = sim.truth;
            let mut state = ChainState {
                beta: t.beta,
                beta_tilde: t.beta_tilde,
                lambda2: t.lambda2,
                gamma: t.gamma,
                pi: t.pi,
                sigma2: t.sigma2,
                ..sampler.initial_state()
            };
            sampler.sweep(&mut state, &mut rng)?;
            Ok((state, sim.train.censored_fraction()))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_cov = config.structure.covariate_ids.len();
    let column = |f: &dyn Fn(&ChainState) -> f64| -> Vec<f64> { swept.iter().map(|(s, _)| f(s)).collect() };
    let normal_cdf = |var: f64| {
        let n = Normal::new(0.0, var.sqrt()).expect("positive variance");
        move |x: f64| n.cdf(x)
    };
    let mut tests = vec![
        (
            "beta_tilde_0".to_string(),
            ks_test(&column(&|s| s.beta_tilde[0]), normal_cdf(prior.tau2_intercept)),
        ),
        (
            "lambda2_0".to_string(),
            ks_test(&column(&|s| s.lambda2[0]), |x| {
                inverse_gamma_cdf(x, prior.lambda0_shape, prior.lambda0_rate)
            }),
        ),
    ];
    for c in 0..n_cov {
        let id = &config.structure.covariate_ids[c];
        tests.push((
            format!("beta_tilde_{id}"),
            ks_test(&column(&|s| s.beta_tilde[c + 1]), normal_cdf(prior.tau2_coef)),
        ));
        tests.push((
            format!("lambda2_{id}"),
            ks_test(&column(&|s| s.lambda2[c + 1]), |x| {
                inverse_gamma_cdf(x, prior.lambda_shape, prior.lambda_rate)
            }),
        ));
        let beta = statrs::distribution::Beta::new(prior.pi_alpha, prior.pi_beta).expect("validated prior");
        tests.push((format!("pi_{id}"), ks_test(&column(&|s| s.pi[c]), |x| beta.cdf(x))));
    }
    tests.push((
        "sigma2".to_string(),
        ks_test(&column(&|s| s.sigma2), |x| {
            inverse_gamma_cdf(x, prior.sigma2_shape, prior.sigma2_rate)
        }),
    ));
    Ok(GirResult {
        tests,
        mean_censored_fraction: swept.iter().map(|(_, f)| f).sum::<f64>() / swept.len() as f64,
    })
}
