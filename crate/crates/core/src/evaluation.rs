//! Held-out predictive scoring, K-fold cross-validation and selection error.
//!
//! Predictive densities are on the time scale: an observed subject contributes
//! the log-normal density of its event time (the normal density of `log t`
//! minus `log t`), a censored subject the log survival probability at its
//! censoring time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::GroupedDataset;
use crate::error::{Error, Result};
use crate::report::{fmt_ll, write_csv};
use crate::sampler::{gibbs_run, ModelVariant, PosteriorSamples, PriorConfig, Schedule};
use crate::seed::{derive_seed, task_rng};
use crate::stats::{log_mean_exp, normal_ln_pdf, std_normal_ln_sf};

/// Assignment of every subject to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    fold_count: usize,
    /// Per group (dataset order), the fold of each row.
    assignment: Vec<Vec<usize>>,
}

impl FoldSplit {
    /// Shuffles each group's rows and deals them round-robin into folds, so
    /// every group is spread as evenly as possible across folds.
    pub fn stratified(ds: &GroupedDataset, fold_count: usize, seed: u64) -> Result<Self> {
        if fold_count < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {fold_count}")));
        }
        let assignment = ds
            .groups()
            .iter()
            .enumerate()
            .map(|(gi, g)| {
                let mut rows: Vec<usize> = (0..g.len()).collect();
                rows.shuffle(&mut task_rng(seed, &[gi as u64]));
                let mut fold = vec![0; g.len()];
                for (k, r) in rows.into_iter().enumerate() {
                    fold[r] = k % fold_count;
                }
                fold
            })
            .collect();
        let split = Self { fold_count, assignment };
        split.check(ds)?;
        Ok(split)
    }

    pub fn from_assignment(ds: &GroupedDataset, fold_count: usize, assignment: Vec<Vec<usize>>) -> Result<Self> {
        if fold_count < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {fold_count}")));
        }
        let shape_ok = assignment.len() == ds.groups().len()
            && assignment.iter().zip(ds.groups()).all(|(a, g)| a.len() == g.len())
            && assignment.iter().flatten().all(|&f| f < fold_count);
        if !shape_ok {
            return Err(Error::Validation("fold assignment does not match the dataset".into()));
        }
        let split = Self { fold_count, assignment };
        split.check(ds)?;
        Ok(split)
    }

    fn check(&self, ds: &GroupedDataset) -> Result<()> {
        for fold in 0..self.fold_count {
            for (g, a) in ds.groups().iter().zip(&self.assignment) {
                if a.iter().all(|&f| f == fold) {
                    return Err(Error::EmptyTrainingGroup {
                        fold,
                        group: g.id().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn fold_of(&self, group: usize, row: usize) -> usize {
        self.assignment[group][row]
    }

    /// `(training, held-out)` datasets for `fold`.
    pub fn split(&self, ds: &GroupedDataset, fold: usize) -> Result<(GroupedDataset, GroupedDataset)> {
        let train = ds.filter_rows(|g, r| self.assignment[g][r] != fold)?;
        let test = ds.filter_rows(|g, r| self.assignment[g][r] == fold)?;
        Ok((train, test))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveScore {
    pub log_ppl: f64,
    pub per_draw_log_likelihoods: Vec<f64>,
    pub n_test: usize,
}

/// Log-density contribution of one subject with linear predictor `mu`.
pub fn subject_log_likelihood(log_time: f64, event: bool, mu: f64, sigma2: f64) -> f64 {
    if event {
        normal_ln_pdf(log_time, mu, sigma2) - log_time
    } else {
        std_normal_ln_sf((log_time - mu) / sigma2.sqrt())
    }
}

/// Log of the posterior-averaged likelihood of `test`.
pub fn log_ppl(test: &GroupedDataset, ps: &PosteriorSamples) -> Result<PredictiveScore> {
    let layout = &ps.layout;
    struct Block<'a> {
        group: &'a crate::data::Group,
        post: usize,
        /// test design column for each active posterior covariate
        columns: Vec<usize>,
    }
    let mut blocks = Vec::with_capacity(test.groups().len());
    for g in test.groups() {
        let post = layout
            .group_index(g.id())
            .ok_or_else(|| Error::UnknownGroup(g.id().to_string()))?;
        for c in g.covariate_ids() {
            if !layout.covariate_ids.contains(c) {
                return Err(Error::Validation(format!(
                    "test covariate `{c}` is not in the fitted model"
                )));
            }
        }
        let columns = ps
            .active_covariates(post)
            .iter()
            .map(|&c| {
                let id = &layout.covariate_ids[c];
                g.covariate_column(id).ok_or_else(|| {
                    Error::Validation(format!("test group `{}` lacks covariate `{id}`", g.id()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        blocks.push(Block { group: g, post, columns });
    }

    let n_test = test.n_subjects();
    if n_test == 0 {
        return Ok(PredictiveScore {
            log_ppl: 0.0,
            per_draw_log_likelihoods: Vec::new(),
            n_test,
        });
    }
    if ps.draws.is_empty() {
        return Err(Error::Validation("cannot score against an empty posterior".into()));
    }
    let per_draw: Vec<f64> = ps
        .draws
        .iter()
        .map(|d| {
            let mut ll = 0.0;
            for b in &blocks {
                let beta = &d.beta[b.post];
                let x = b.group.design();
                for (r, o) in b.group.outcomes().iter().enumerate() {
                    let mu = beta[0]
                        + b.columns
                            .iter()
                            .enumerate()
                            .map(|(k, &col)| beta[k + 1] * x[(r, col)])
                            .sum::<f64>();
                    ll += subject_log_likelihood(o.log_time(), o.event(), mu, d.sigma2);
                }
            }
            ll
        })
        .collect();
    Ok(PredictiveScore {
        log_ppl: log_mean_exp(&per_draw),
        per_draw_log_likelihoods: per_draw,
        n_test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub variant: ModelVariant,
    pub fold: usize,
    pub log_ppl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvTable {
    pub rows: Vec<CvRow>,
    /// Per variant, in request order.
    pub means: Vec<(ModelVariant, f64)>,
}

impl CvTable {
    pub fn mean_of(&self, variant: ModelVariant) -> Option<f64> {
        self.means.iter().find(|(v, _)| *v == variant).map(|&(_, m)| m)
    }

    /// One row per (variant, fold) then one `mean` row per variant.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let fold_rows = self.rows.iter().map(|r| {
            let mean = self.mean_of(r.variant).expect("variant has a mean");
            vec![r.variant.to_string(), r.fold.to_string(), fmt_ll(r.log_ppl), fmt_ll(mean)]
        });
        let mean_rows = self
            .means
            .iter()
            .map(|(v, m)| vec![v.to_string(), "mean".to_string(), String::new(), fmt_ll(*m)]);
        write_csv(
            path,
            &["variant", "fold", "log_ppl", "mean_log_ppl"],
            fold_rows.chain(mean_rows).collect::<Vec<_>>(),
        )
    }
}

/// Fits every variant on every training fold and scores the held-out fold.
/// Task `(variant, fold)` uses seed `derive_seed(seed, [variant code, fold])`.
pub fn cross_validate(
    ds: &GroupedDataset,
    variants: &[ModelVariant],
    folds: &FoldSplit,
    prior: PriorConfig,
    schedule: Schedule,
    seed: u64,
) -> Result<CvTable> {
    if variants.is_empty() {
        return Err(Error::Config("no variants requested".into()));
    }
    schedule.validate()?;
    let splits = (0..folds.fold_count())
        .map(|f| folds.split(ds, f))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(ModelVariant, usize)> = variants
        .iter()
        .flat_map(|&v| (0..folds.fold_count()).map(move |f| (v, f)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(variant, fold)| {
            let (train, test) = &splits[fold];
            let task_seed = derive_seed(seed, &[variant.code(), fold as u64]);
            let ps = gibbs_run(train, variant, prior, schedule, task_seed)?;
            Ok(CvRow {
                variant,
                fold,
                log_ppl: log_ppl(test, &ps)?.log_ppl,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let means = variants
        .iter()
        .map(|&v| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.variant == v).map(|r| r.log_ppl).collect();
            (v, crate::stats::mean(&vals))
        })
        .collect();
    Ok(CvTable { rows, means })
}

pub type PairKey = (String, String);

/// Mean squared difference between true indicators and estimated inclusion
/// probabilities over all (group, covariate) pairs.
pub fn mean_ssd(truth: &BTreeMap<PairKey, bool>, estimate: &BTreeMap<PairKey, f64>) -> Result<f64> {
    let a: BTreeSet<&PairKey> = truth.keys().collect();
    let b: BTreeSet<&PairKey> = estimate.keys().collect();
    if a != b {
        return Err(Error::KeyMismatch(
            a.symmetric_difference(&b).map(|(g, c)| format!("{g}:{c}")).collect(),
        ));
    }
    if truth.is_empty() {
        return Err(Error::Validation("mean SSD over an empty pair set".into()));
    }
    let total: f64 = truth
        .iter()
        .map(|(k, &t)| {
            let d = f64::from(u8::from(t)) - estimate[k];
            d * d
        })
        .sum();
    Ok(total / truth.len() as f64)
}
