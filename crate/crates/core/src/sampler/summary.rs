use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::report::{fmt6, fmt_opt, write_csv};
use crate::stats::{equal_tailed_interval, mean};

use super::{ModelVariant, PosteriorSamples};

/// Label used for the intercept in summaries.
pub const INTERCEPT: &str = "(intercept)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSummary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalSummary {
    fn of(values: &[f64], level: f64) -> Self {
        let (lower, upper) = equal_tailed_interval(values, level);
        Self {
            mean: mean(values),
            lower,
            upper,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// One group-level coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSummary {
    pub group: String,
    /// `None` for the intercept.
    pub covariate: Option<String>,
    pub effect: IntervalSummary,
    /// Posterior inclusion probability; `None` for the intercept.
    pub inclusion: Option<f64>,
}

impl CoefficientSummary {
    pub fn covariate_label(&self) -> &str {
        self.covariate.as_deref().unwrap_or(INTERCEPT)
    }

    /// Inclusion probability strictly above one half.
    pub fn is_selected(&self) -> bool {
        self.inclusion.is_some_and(|p| p > 0.5)
    }
}

/// Covariate-level (or intercept) hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSummary {
    /// `None` for the intercept.
    pub covariate: Option<String>,
    pub beta_tilde: IntervalSummary,
    pub lambda2: IntervalSummary,
    /// Absent for the intercept and for variants that never update π.
    pub pi: Option<IntervalSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub variant: ModelVariant,
    pub level: f64,
    pub n_draws: usize,
    pub coefficients: Vec<CoefficientSummary>,
    pub hyper: Vec<HyperSummary>,
    pub sigma2: IntervalSummary,
    /// Group ids and covariate ids in layout order, for matrix exports.
    pub group_ids: Vec<String>,
    pub covariate_ids: Vec<String>,
}

pub fn summarize(ps: &PosteriorSamples) -> Result<PosteriorSummary> {
    summarize_with_level(ps, 0.95)
}

/// Posterior means, equal-tailed `level` intervals and inclusion probabilities.
pub fn summarize_with_level(ps: &PosteriorSamples, level: f64) -> Result<PosteriorSummary> {
    if ps.draws.is_empty() {
        return Err(Error::Validation("cannot summarize an empty posterior".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("credible level must be in (0, 1), got {level}")));
    }
    let layout = &ps.layout;
    let variant = ps.variant();
    let t = ps.draws.len() as f64;
    let column = |f: &dyn Fn(&super::ChainState) -> f64| -> Vec<f64> { ps.draws.iter().map(f).collect() };

    let mut coefficients = Vec::new();
    for (g, gid) in layout.group_ids.iter().enumerate() {
        coefficients.push(CoefficientSummary {
            group: gid.clone(),
            covariate: None,
            effect: IntervalSummary::of(&column(&|d| d.beta[g][0]), level),
            inclusion: None,
        });
        for (k, &c) in ps.active_covariates(g).iter().enumerate() {
            let included = ps.draws.iter().filter(|d| d.gamma[g][k]).count() as f64;
            coefficients.push(CoefficientSummary {
                group: gid.clone(),
                covariate: Some(layout.covariate_ids[c].clone()),
                effect: IntervalSummary::of(&column(&|d| d.beta[g][k + 1]), level),
                inclusion: Some(included / t),
            });
        }
    }

    let mut hyper = vec![HyperSummary {
        covariate: None,
        beta_tilde: IntervalSummary::of(&column(&|d| d.beta_tilde[0]), level),
        lambda2: IntervalSummary::of(&column(&|d| d.lambda2[0]), level),
        pi: None,
    }];
    if variant.has_covariates() {
        let pi_tracked = variant != ModelVariant::FullNoSS;
        for (c, cid) in layout.covariate_ids.iter().enumerate() {
            hyper.push(HyperSummary {
                covariate: Some(cid.clone()),
                beta_tilde: IntervalSummary::of(&column(&|d| d.beta_tilde[c + 1]), level),
                lambda2: IntervalSummary::of(&column(&|d| d.lambda2[c + 1]), level),
                pi: pi_tracked.then(|| IntervalSummary::of(&column(&|d| d.pi[c]), level)),
            });
        }
    }

    Ok(PosteriorSummary {
        variant,
        level,
        n_draws: ps.draws.len(),
        coefficients,
        hyper,
        sigma2: IntervalSummary::of(&column(&|d| d.sigma2), level),
        group_ids: layout.group_ids.clone(),
        covariate_ids: layout.covariate_ids.clone(),
    })
}

/// Posterior inclusion probability for every available (group, covariate)
/// pair. Variants without covariates report 0 for every pair.
pub fn inclusion_estimates(ps: &PosteriorSamples) -> BTreeMap<(String, String), f64> {
    let layout = &ps.layout;
    let t = ps.draws.len().max(1) as f64;
    let mut out = BTreeMap::new();
    for (g, gid) in layout.group_ids.iter().enumerate() {
        for (k, &c) in layout.group_covariates[g].iter().enumerate() {
            let p = if ps.variant().has_covariates() {
                ps.draws.iter().filter(|d| d.gamma[g][k]).count() as f64 / t
            } else {
                0.0
            };
            out.insert((gid.clone(), layout.covariate_ids[c].clone()), p);
        }
    }
    out
}

impl PosteriorSummary {
    /// Coefficients with inclusion probability above 0.5, most probable
    /// first; ties keep group then covariate order.
    pub fn selected(&self) -> Vec<&CoefficientSummary> {
        let mut sel: Vec<&CoefficientSummary> = self.coefficients.iter().filter(|c| c.is_selected()).collect();
        sel.sort_by(|a, b| b.inclusion.partial_cmp(&a.inclusion).expect("finite probabilities"));
        sel
    }

    fn coefficient_rows<'a>(rows: impl IntoIterator<Item = &'a CoefficientSummary>) -> Vec<Vec<String>> {
        rows.into_iter()
            .map(|c| {
                vec![
                    c.group.clone(),
                    c.covariate_label().to_string(),
                    fmt6(c.effect.mean),
                    fmt6(c.effect.lower),
                    fmt6(c.effect.upper),
                    fmt_opt(c.inclusion),
                ]
            })
            .collect()
    }

    const COEF_HEADER: [&'static str; 6] = ["group", "covariate", "mean_effect", "lower", "upper", "inclusion_probability"];

    /// Every coefficient, plus one `sigma2` row.
    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut rows = Self::coefficient_rows(&self.coefficients);
        rows.push(vec![
            String::new(),
            "sigma2".into(),
            fmt6(self.sigma2.mean),
            fmt6(self.sigma2.lower),
            fmt6(self.sigma2.upper),
            String::new(),
        ]);
        write_csv(path, &Self::COEF_HEADER, rows)
    }

    pub fn write_selected_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &Self::COEF_HEADER, Self::coefficient_rows(self.selected()))
    }

    pub fn write_hyper_csv(&self, path: &Path) -> Result<()> {
        let header = [
            "covariate",
            "beta_tilde_mean",
            "beta_tilde_lower",
            "beta_tilde_upper",
            "lambda2_mean",
            "lambda2_lower",
            "lambda2_upper",
            "pi_mean",
            "pi_lower",
            "pi_upper",
        ];
        let rows = self.hyper.iter().map(|h| {
            vec![
                h.covariate.clone().unwrap_or_else(|| INTERCEPT.to_string()),
                fmt6(h.beta_tilde.mean),
                fmt6(h.beta_tilde.lower),
                fmt6(h.beta_tilde.upper),
                fmt6(h.lambda2.mean),
                fmt6(h.lambda2.lower),
                fmt6(h.lambda2.upper),
                fmt_opt(h.pi.map(|p| p.mean)),
                fmt_opt(h.pi.map(|p| p.lower)),
                fmt_opt(h.pi.map(|p| p.upper)),
            ]
        });
        write_csv(path, &header, rows)
    }

    /// Covariates × groups matrix of inclusion probabilities; blank where the
    /// covariate is unavailable for the group (or not in the model).
    pub fn write_inclusion_matrix_csv(&self, path: &Path) -> Result<()> {
        let mut header = vec!["covariate"];
        header.extend(self.group_ids.iter().map(String::as_str));
        let lookup: BTreeMap<(&str, &str), f64> = self
            .coefficients
            .iter()
            .filter_map(|c| Some(((c.group.as_str(), c.covariate.as_deref()?), c.inclusion?)))
            .collect();
        let rows = self.covariate_ids.iter().map(|cid| {
            let mut row = vec![cid.clone()];
            row.extend(
                self.group_ids
                    .iter()
                    .map(|g| fmt_opt(lookup.get(&(g.as_str(), cid.as_str())).copied())),
            );
            row
        });
        write_csv(path, &header, rows)
    }
}
