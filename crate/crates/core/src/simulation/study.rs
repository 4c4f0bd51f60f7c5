use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::evaluation::{log_ppl, mean_ssd};
use crate::report::{ensure_dir, fmt6, fmt_ll, write_csv, write_text};
use crate::sampler::{gibbs_run, inclusion_estimates, ModelVariant, PriorConfig, Schedule};
use crate::seed::{derive_seed, task_rng};
use crate::stats::{mean, sample_variance};

use super::{generate_truth, Censoring, GenCondition, InclusionPattern, SimulatedData, Structure};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Two-sided paired t-test of `a` against `b`. When the differences have
/// zero variance the p-value is 0 for a nonzero mean difference and 1
/// otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Validation(format!(
            "paired t-test needs two equal-length samples of size >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let m = mean(&d);
    let var = sample_variance(&d);
    let (statistic, p_value) = if var == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (m.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = m / (var / n).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("positive degrees of freedom");
        (t, (2.0 * dist.cdf(-t.abs())).min(1.0))
    };
    Ok(TTest {
        statistic,
        p_value,
        significant: p_value < alpha,
    })
}

/// Configuration of the variant-comparison study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub conditions: Vec<InclusionPattern>,
    pub structure: Structure,
    pub censor_fraction: f64,
    pub variants: Vec<ModelVariant>,
    pub replications: usize,
    pub schedule: Schedule,
    /// Prior the variants are fitted with.
    pub fit_prior: PriorConfig,
    /// Prior the true parameters are drawn from.
    pub generating_prior: PriorConfig,
    pub alpha: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            conditions: InclusionPattern::STUDY.to_vec(),
            structure: Structure::desk(150),
            censor_fraction: 0.5,
            variants: ModelVariant::ALL.to_vec(),
            replications: 10,
            schedule: Schedule {
                total: 10_000,
                burn_in: 5_000,
                thin: 10,
            },
            fit_prior: PriorConfig::default(),
            generating_prior: PriorConfig::validation(),
            alpha: 0.01,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config(format!(
                "at least 2 replications are needed for paired t-tests, got {}",
                self.replications
            )));
        }
        if self.conditions.is_empty() || self.variants.is_empty() {
            return Err(Error::Config("study needs at least one condition and one variant".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        self.schedule.validate()?;
        self.fit_prior.validate()?;
        self.generating_prior.validate()?;
        for &pattern in &self.conditions {
            self.condition(pattern).validate()?;
        }
        Ok(())
    }

    fn condition(&self, pattern: InclusionPattern) -> GenCondition {
        GenCondition {
            pattern,
            censoring: Censoring::SameDistribution {
                fraction: self.censor_fraction,
            },
            structure: self.structure.clone(),
            with_test: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MeanSsd,
    LogPpl,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanSsd => "mean_ssd",
            Metric::LogPpl => "log_ppl",
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::MeanSsd => a < b,
            Metric::LogPpl => a > b,
        }
    }
}

/// Result of one (condition, variant, replication) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub condition: usize,
    pub variant: ModelVariant,
    pub replication: usize,
    /// `(mean SSD, held-out log-PPL)` or the failure message.
    pub result: std::result::Result<(f64, f64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub config: StudyConfig,
    /// Ordered by condition, then variant (config order), then replication.
    pub cells: Vec<CellOutcome>,
}

/// Replication `r` of condition `c` draws its data from the stream
/// `(seed, c, r)`; variant `v` is fitted with seed `derive(seed, c, r, v)`.
pub fn run_study(config: &StudyConfig, seed: u64) -> Result<StudyResult> {
    config.validate()?;
    let data_tasks: Vec<(usize, usize)> = (0..config.conditions.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();
    let data: Vec<SimulatedData> = data_tasks
        .par_iter()
        .map(|&(c, r)| {
            let mut rng = task_rng(seed, &[c as u64, r as u64]);
            generate_truth(&config.condition(config.conditions[c]), &config.generating_prior, &mut rng)
        })
        .collect::<Result<_>>()?;

    let fit_tasks: Vec<(usize, ModelVariant, usize)> = (0..config.conditions.len())
        .flat_map(|c| {
            config
                .variants
                .iter()
                .flat_map(move |&v| (0..config.replications).map(move |r| (c, v, r)))
        })
        .collect();
    let cells = fit_tasks
        .par_iter()
        .map(|&(c, variant, r)| {
            let sim = &data[c * config.replications + r];
            let fit_seed = derive_seed(seed, &[c as u64, r as u64, 1 + variant.code()]);
            let result = fit_cell(config, sim, variant, fit_seed).map_err(|e| e.to_string());
            if let Err(msg) = &result {
                log::warn!(
                    "condition {} variant {variant} replication {r} failed: {msg}",
                    config.conditions[c]
                );
            }
            CellOutcome {
                condition: c,
                variant,
                replication: r,
                result,
            }
        })
        .collect();
    Ok(StudyResult {
        config: config.clone(),
        cells,
    })
}

fn fit_cell(config: &StudyConfig, sim: &SimulatedData, variant: ModelVariant, seed: u64) -> Result<(f64, f64)> {
    let ps = gibbs_run(&sim.train, variant, config.fit_prior, config.schedule, seed)?;
    let ssd = mean_ssd(&sim.truth.inclusion_map(&config.structure), &inclusion_estimates(&ps))?;
    let test = sim.test.as_ref().expect("study conditions generate a test set");
    Ok((ssd, log_ppl(test, &ps)?.log_ppl))
}

impl StudyResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    fn values(&self, condition: usize, variant: ModelVariant, metric: Metric) -> Vec<Option<f64>> {
        let mut out = vec![None; self.config.replications];
        for cell in self
            .cells
            .iter()
            .filter(|c| c.condition == condition && c.variant == variant)
        {
            out[cell.replication] = cell.result.as_ref().ok().map(|&(ssd, lppl)| match metric {
                Metric::MeanSsd => ssd,
                Metric::LogPpl => lppl,
            });
        }
        out
    }

    /// Mean over the replications that succeeded.
    pub fn mean(&self, condition: usize, variant: ModelVariant, metric: Metric) -> Option<f64> {
        let ok: Vec<f64> = self.values(condition, variant, metric).into_iter().flatten().collect();
        (!ok.is_empty()).then(|| mean(&ok))
    }

    /// Paired test over replications where both variants succeeded.
    pub fn t_test(&self, condition: usize, a: ModelVariant, b: ModelVariant, metric: Metric) -> Option<TTest> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .values(condition, a, metric)
            .into_iter()
            .zip(self.values(condition, b, metric))
            .filter_map(|(x, y)| Some((x?, y?)))
            .unzip();
        paired_t_test(&xs, &ys, self.config.alpha).ok()
    }

    /// Symmetric matrix of p-values over the configured variants, unit diagonal.
    pub fn p_matrix(&self, condition: usize, metric: Metric) -> Vec<Vec<Option<f64>>> {
        let vs = &self.config.variants;
        vs.iter()
            .map(|&a| {
                vs.iter()
                    .map(|&b| {
                        if a == b {
                            Some(1.0)
                        } else {
                            self.t_test(condition, a, b, metric).map(|t| t.p_value)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// The variant with the best mean plus every variant not significantly
    /// different from it.
    pub fn best_set(&self, condition: usize, metric: Metric) -> Vec<ModelVariant> {
        let means: Vec<(ModelVariant, f64)> = self
            .config
            .variants
            .iter()
            .filter_map(|&v| Some((v, self.mean(condition, v, metric)?)))
            .collect();
        let Some(&(best, best_mean)) = means
            .iter()
            .reduce(|acc, x| if metric.better(x.1, acc.1) { x } else { acc })
        else {
            return Vec::new();
        };
        means
            .iter()
            .filter(|&&(v, m)| {
                v == best
                    || m == best_mean
                    || self
                        .t_test(condition, best, v, metric)
                        .is_some_and(|t| !t.significant)
            })
            .map(|&(v, _)| v)
            .collect()
    }

    /// Writes `replications.csv`, `mean_ssd.csv`, `log_ppl.csv`,
    /// `p_values.csv` and `significance.txt` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        let conds = &self.config.conditions;
        write_csv(
            &dir.join("replications.csv"),
            &["condition", "variant", "replication", "mean_ssd", "log_ppl", "status"],
            self.cells.iter().map(|c| {
                let (ssd, lppl, status) = match &c.result {
                    Ok((s, l)) => (fmt6(*s), fmt_ll(*l), "ok".to_string()),
                    Err(e) => (String::new(), String::new(), format!("failed: {e}")),
                };
                vec![
                    conds[c.condition].to_string(),
                    c.variant.to_string(),
                    c.replication.to_string(),
                    ssd,
                    lppl,
                    status,
                ]
            }),
        )?;
        for metric in [Metric::MeanSsd, Metric::LogPpl] {
            let fmt = |x: f64| if metric == Metric::LogPpl { fmt_ll(x) } else { fmt6(x) };
            let mut rows = Vec::new();
            for c in 0..conds.len() {
                let best = self.best_set(c, metric);
                for &v in &self.config.variants {
                    let n_ok = self.values(c, v, metric).iter().flatten().count();
                    rows.push(vec![
                        conds[c].to_string(),
                        v.to_string(),
                        self.mean(c, v, metric).map(fmt).unwrap_or_default(),
                        n_ok.to_string(),
                        u8::from(best.contains(&v)).to_string(),
                    ]);
                }
            }
            write_csv(
                &dir.join(format!("{}.csv", metric.name())),
                &["condition", "variant", metric.name(), "replications_ok", "best"],
                rows,
            )?;
        }
        let mut p_rows = Vec::new();
        let mut report = String::new();
        for (c, cond) in conds.iter().enumerate() {
            for metric in [Metric::MeanSsd, Metric::LogPpl] {
                let best = self.best_set(c, metric);
                let names: Vec<String> = best.iter().map(ToString::to_string).collect();
                writeln!(report, "{cond} {}: best = {}", metric.name(), names.join(", ")).unwrap();
                let vs = &self.config.variants;
                for (i, &a) in vs.iter().enumerate() {
                    for &b in &vs[i + 1..] {
                        let t = self.t_test(c, a, b, metric);
                        let p = t.map(|t| fmt6(t.p_value)).unwrap_or_default();
                        let sig = t.map(|t| u8::from(t.significant).to_string()).unwrap_or_default();
                        writeln!(report, "  {a} vs {b}: p = {}", if p.is_empty() { "n/a" } else { &p }).unwrap();
                        p_rows.push(vec![cond.to_string(), metric.name().to_string(), a.to_string(), b.to_string(), p, sig]);
                    }
                }
            }
        }
        let failures = self.failures();
        if failures > 0 {
            writeln!(report, "FAILED CELLS: {failures}").unwrap();
        }
        write_csv(
            &dir.join("p_values.csv"),
            &["condition", "metric", "variant_a", "variant_b", "p_value", "significant"],
            p_rows,
        )?;
        write_text(&dir.join("significance.txt"), &report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_give_unit_p() {
        let a = [1.0, 2.0, 3.0];
        let t = paired_t_test(&a, &a, 0.01).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(!t.significant);
    }

    #[test]
    fn constant_nonzero_difference_is_significant() {
        let a = [2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = paired_t_test(&a, &b, 1e-12).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(t.significant);
    }

    #[test]
    fn known_t_statistic() {
        // differences (1, 2, 3): mean 2, sd 1, t = 2·√3
        let t = paired_t_test(&[1.0, 2.0, 3.0], &[0.0; 3], 0.05).unwrap();
        assert!((t.statistic - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // two-sided p for t = 3.4641 on 2 df
        assert!((t.p_value - 0.074_179_900_2).abs() < 1e-8, "{}", t.p_value);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(paired_t_test(&[1.0], &[1.0], 0.01).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0], 0.01).is_err());
    }

    #[test]
    fn zero_replications_is_a_config_error() {
        let cfg = StudyConfig {
            replications: 0,
            ..StudyConfig::default()
        };
        assert!(matches!(run_study(&cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn tiny_study_is_deterministic_and_well_formed() {
        let cfg = StudyConfig {
            conditions: vec![InclusionPattern::AllIncluded, InclusionPattern::NoneIncluded],
            structure: Structure::desk(20),
            variants: vec![ModelVariant::Hierarchical, ModelVariant::FullNoSS],
            replications: 2,
            schedule: Schedule::new(60, 30, 3).unwrap(),
            ..StudyConfig::default()
        };
        let a = run_study(&cfg, 7).unwrap();
        assert_eq!(a, run_study(&cfg, 7).unwrap());
        assert_eq!(a.cells.len(), 8);
        assert_eq!(a.failures(), 0);
        for c in 0..2 {
            for v in &cfg.variants {
                let m = a.mean(c, *v, Metric::MeanSsd).unwrap();
                assert!((0.0..=1.0).contains(&m));
            }
            let p = a.p_matrix(c, Metric::MeanSsd);
            for i in 0..2 {
                assert_eq!(p[i][i], Some(1.0));
                for j in 0..2 {
                    assert_eq!(p[i][j], p[j][i]);
                }
            }
        }
        // Full model pins every indicator at 1.
        assert_eq!(a.mean(0, ModelVariant::FullNoSS, Metric::MeanSsd), Some(0.0));
        assert_eq!(a.mean(1, ModelVariant::FullNoSS, Metric::MeanSsd), Some(1.0));
    }
}
