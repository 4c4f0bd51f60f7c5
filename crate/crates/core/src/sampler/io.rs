//! Posterior persistence: `meta.json` plus one CSV per parameter family, one
//! row per stored draw. Values are written in shortest round-trip form so a
//! read-back posterior is bit-identical to the one written.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{ensure_dir, read_text, write_csv, write_text};

use super::summary::INTERCEPT;
use super::{ChainState, ModelLayout, PosteriorSamples, RunMeta};

#[derive(Serialize, Deserialize)]
struct MetaFile {
    meta: RunMeta,
    layout: ModelLayout,
    n_draws: usize,
}

fn columns_of(ps: &PosteriorSamples) -> Columns {
    let layout = &ps.layout;
    let mut beta = Vec::new();
    let mut gamma = Vec::new();
    for (g, gid) in layout.group_ids.iter().enumerate() {
        beta.push(format!("{gid}:{INTERCEPT}"));
        for &c in ps.active_covariates(g) {
            beta.push(format!("{gid}:{}", layout.covariate_ids[c]));
            gamma.push(format!("{gid}:{}", layout.covariate_ids[c]));
        }
    }
    let covs: Vec<String> = if ps.variant().has_covariates() {
        layout.covariate_ids.clone()
    } else {
        Vec::new()
    };
    let mut hyper = vec![INTERCEPT.to_string()];
    hyper.extend(covs.iter().cloned());
    let latent = layout
        .group_ids
        .iter()
        .zip(&layout.censored_subjects)
        .flat_map(|(g, subjects)| subjects.iter().map(move |s| format!("{g}:{s}")))
        .collect();
    Columns {
        beta,
        gamma,
        hyper,
        pi: covs,
        latent,
    }
}

struct Columns {
    beta: Vec<String>,
    gamma: Vec<String>,
    hyper: Vec<String>,
    pi: Vec<String>,
    latent: Vec<String>,
}

fn header(cols: &[String]) -> Vec<&str> {
    cols.iter().map(String::as_str).collect()
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_posterior(dir: &Path, ps: &PosteriorSamples) -> Result<()> {
    ensure_dir(dir)?;
    let meta = MetaFile {
        meta: ps.meta.clone(),
        layout: ps.layout.clone(),
        n_draws: ps.draws.len(),
    };
    write_text(&dir.join("meta.json"), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    let cols = columns_of(ps);
    let d = &ps.draws;
    write_csv(
        &dir.join("beta.csv"),
        &header(&cols.beta),
        d.iter().map(|s| s.beta.iter().flatten().map(|&b| num(b)).collect::<Vec<_>>()),
    )?;
    write_csv(
        &dir.join("gamma.csv"),
        &header(&cols.gamma),
        d.iter().map(|s| {
            s.gamma
                .iter()
                .flatten()
                .map(|&g| if g { "1" } else { "0" }.to_string())
                .collect::<Vec<_>>()
        }),
    )?;
    write_csv(
        &dir.join("beta_tilde.csv"),
        &header(&cols.hyper),
        d.iter().map(|s| s.beta_tilde.iter().map(|&b| num(b)).collect::<Vec<_>>()),
    )?;
    write_csv(
        &dir.join("lambda2.csv"),
        &header(&cols.hyper),
        d.iter().map(|s| s.lambda2.iter().map(|&b| num(b)).collect::<Vec<_>>()),
    )?;
    write_csv(
        &dir.join("pi.csv"),
        &header(&cols.pi),
        d.iter().map(|s| s.pi.iter().map(|&b| num(b)).collect::<Vec<_>>()),
    )?;
    write_csv(&dir.join("sigma2.csv"), &["sigma2"], d.iter().map(|s| vec![num(s.sigma2)]))?;
    if ps.meta.keep_latent {
        write_csv(
            &dir.join("latent.csv"),
            &header(&cols.latent),
            d.iter().map(|s| s.latent_log_times.iter().flatten().map(|&y| num(y)).collect::<Vec<_>>()),
        )?;
    }
    Ok(())
}

fn read_matrix(path: &Path, expected: &[String], n_draws: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let found = if found.len() == 1 && found[0].is_empty() { Vec::new() } else { found };
    if found != expected {
        return Err(Error::Validation(format!(
            "{}: columns do not match meta.json layout",
            path.display()
        )));
    }
    let mut rows = Vec::with_capacity(n_draws);
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row: Vec<f64> = if expected.is_empty() {
            Vec::new()
        } else {
            rec.iter()
                .map(|v| {
                    v.parse::<f64>().map_err(|e| Error::Parse {
                        row: i + 2,
                        message: format!("{}: {e}", path.display()),
                    })
                })
                .collect::<Result<_>>()?
        };
        if row.len() != expected.len() {
            return Err(Error::Parse {
                row: i + 2,
                message: format!("{}: wrong field count", path.display()),
            });
        }
        rows.push(row);
    }
    if rows.len() != n_draws {
        return Err(Error::Validation(format!(
            "{}: expected {n_draws} draws, found {}",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows)
}

/// Splits a flat row into per-group chunks of the given sizes.
fn split<T: Copy>(row: &[T], sizes: &[usize]) -> Vec<Vec<T>> {
    let mut at = 0;
    sizes
        .iter()
        .map(|&n| {
            let chunk = row[at..at + n].to_vec();
            at += n;
            chunk
        })
        .collect()
}

pub fn read_posterior(dir: &Path) -> Result<PosteriorSamples> {
    let meta: MetaFile = serde_json::from_str(&read_text(&dir.join("meta.json"))?)?;
    let mut ps = PosteriorSamples {
        layout: meta.layout,
        meta: meta.meta,
        draws: Vec::new(),
    };
    let n = meta.n_draws;
    let cols = columns_of(&ps);
    let n_groups = ps.layout.group_ids.len();
    let active: Vec<usize> = (0..n_groups).map(|g| ps.active_covariates(g).len()).collect();
    let beta_sizes: Vec<usize> = active.iter().map(|k| k + 1).collect();
    let latent_sizes: Vec<usize> = ps.layout.censored_subjects.iter().map(Vec::len).collect();

    let beta = read_matrix(&dir.join("beta.csv"), &cols.beta, n)?;
    let gamma = read_matrix(&dir.join("gamma.csv"), &cols.gamma, n)?;
    let beta_tilde = read_matrix(&dir.join("beta_tilde.csv"), &cols.hyper, n)?;
    let lambda2 = read_matrix(&dir.join("lambda2.csv"), &cols.hyper, n)?;
    let pi = read_matrix(&dir.join("pi.csv"), &cols.pi, n)?;
    let sigma2 = read_matrix(&dir.join("sigma2.csv"), &["sigma2".to_string()], n)?;
    let latent = if ps.meta.keep_latent {
        Some(read_matrix(&dir.join("latent.csv"), &cols.latent, n)?)
    } else {
        None
    };

    for t in 0..n {
        let gamma_flat: Vec<bool> = gamma[t].iter().map(|&g| g != 0.0).collect();
        ps.draws.push(ChainState {
            beta: split(&beta[t], &beta_sizes),
            beta_tilde: beta_tilde[t].clone(),
            lambda2: lambda2[t].clone(),
            gamma: split(&gamma_flat, &active),
            pi: pi[t].clone(),
            sigma2: sigma2[t][0],
            latent_log_times: latent.as_ref().map(|l| split(&l[t], &latent_sizes)).unwrap_or_default(),
        });
    }
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Group, GroupedDataset, SurvivalOutcome};
    use crate::sampler::{gibbs_run_with, GibbsOptions, ModelVariant, PriorConfig, Schedule};
    use nalgebra::DMatrix;

    fn dataset() -> GroupedDataset {
        let mk = |id: &str, covs: &[&str]| {
            let n = 12;
            let design = DMatrix::from_fn(n, covs.len(), |r, c| ((r + 2 * c) as f64).sin());
            let outcomes = (0..n)
                .map(|r| SurvivalOutcome::from_log_time((r as f64 * 0.7).cos(), r % 2 == 0).unwrap())
                .collect();
            Group::new(
                id,
                (0..n).map(|r| format!("s{r}")).collect(),
                outcomes,
                design,
                covs.iter().map(|s| s.to_string()).collect(),
            )
            .unwrap()
        };
        GroupedDataset::from_groups(vec![mk("A", &["x1", "x2"]), mk("B", &["x2"])]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for variant in ModelVariant::ALL {
            let opts = GibbsOptions {
                keep_latent: true,
                progress: false,
            };
            let ps = gibbs_run_with(&dataset(), variant, PriorConfig::default(), Schedule::new(20, 10, 2).unwrap(), 3, opts)
                .unwrap();
            let path = dir.path().join(variant.name());
            write_posterior(&path, &ps).unwrap();
            assert_eq!(read_posterior(&path).unwrap(), ps, "{variant}");
        }
    }
}
