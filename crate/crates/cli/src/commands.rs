use std::path::Path;

use hierss::components::{
    assemble_design, filter_components, read_module_csv, svd_scores, write_component_scores, Manifest,
};
use hierss::data::{load_dataset, standardize, write_dataset, GroupedDataset};
use hierss::evaluation::{cross_validate, FoldSplit};
use hierss::report::{ensure_dir, write_text};
use hierss::sampler::{
    gibbs_chains, read_posterior, summarize_with_level, write_posterior, GibbsOptions, PosteriorSamples,
    PosteriorSummary,
};
use hierss::seed::derive_seed;
use hierss::simulation::{getting_it_right, run_study, validation_study};
use hierss::{Error, Result};
use serde_json::json;

use crate::config::RunConfig;

/// Whether every requested output was produced without failed cells.
pub enum Outcome {
    Complete,
    /// Outputs written, but some cells failed.
    Partial(String),
}

/// Seed stream tags so commands never share random streams.
const FOLD_STREAM: u64 = 0xF01D;

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Loads `data.path` and applies the configured standardization, writing the
/// record next to the other outputs.
fn prepared_dataset(cfg: &RunConfig, out: &Path) -> Result<GroupedDataset> {
    let report = load_dataset(cfg.data_path()?, &cfg.data.schema)?;
    if report.dropped_missing_outcome + report.dropped_nonpositive_time > 0 {
        log::warn!(
            "dropped {} rows with missing outcome and {} with non-positive time",
            report.dropped_missing_outcome,
            report.dropped_nonpositive_time
        );
    }
    match cfg.data.standardize.scope() {
        Some(scope) => {
            let (ds, record) = standardize(&report.dataset, scope)?;
            write_text(&out.join("standardization.txt"), &record.to_text())?;
            Ok(ds)
        }
        None => Ok(report.dataset),
    }
}

pub fn extract(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out()?;
    ensure_dir(out)?;
    let manifest_path = cfg
        .extract
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Config("extract needs `extract.manifest`".into()))?;
    let manifest = Manifest::load(manifest_path)?;
    if manifest.modules.is_empty() {
        log::warn!("manifest lists no modules; the design keeps only existing covariates");
    }
    let mut candidates = Vec::new();
    let mut degenerate = Vec::new();
    for entry in &manifest.modules {
        let module = read_module_csv(&entry.path, entry.id)?;
        let max = cfg.extract.max_components.min(module.default_max_components());
        match svd_scores(&module, max, manifest.total_variance) {
            Ok(scores) => candidates.extend(scores),
            Err(Error::DegenerateModule(id)) => {
                log::warn!("module {id} is degenerate (all zero) and contributes no components");
                degenerate.push(id);
            }
            Err(e) => return Err(e),
        }
    }
    let selected = filter_components(&candidates, cfg.extract.threshold);
    write_component_scores(&out.join("component_scores.csv"), &selected)?;

    let base = load_dataset(cfg.data_path()?, &cfg.data.schema)?;
    let assembled = assemble_design(&selected, &base.dataset)?;
    if assembled.unmatched_subjects > 0 {
        log::warn!("{} scored subjects are not in the dataset", assembled.unmatched_subjects);
    }
    let design = match cfg.data.standardize.scope() {
        Some(scope) if !assembled.dataset.registry().is_empty() => {
            let (ds, record) = standardize(&assembled.dataset, scope)?;
            write_text(&out.join("standardization.txt"), &record.to_text())?;
            ds
        }
        _ => assembled.dataset,
    };
    write_dataset(&out.join("design.csv"), &design)?;
    write_json(
        &out.join("extract_provenance.json"),
        &json!({
            "threshold": cfg.extract.threshold,
            "max_components": cfg.extract.max_components,
            "total_variance": manifest.total_variance,
            "modules": manifest.modules.len(),
            "degenerate_modules": degenerate,
            "candidate_components": candidates.len(),
            "selected_components": selected.iter().map(|c| c.name()).collect::<Vec<_>>(),
            "unmatched_subjects": assembled.unmatched_subjects,
            "dropped_missing_outcome": base.dropped_missing_outcome,
            "dropped_nonpositive_time": base.dropped_nonpositive_time,
        }),
    )?;
    Ok(Outcome::Complete)
}

fn write_summary(summary: &PosteriorSummary, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    summary.write_summary_csv(&dir.join("summary.csv"))?;
    summary.write_selected_csv(&dir.join("selected.csv"))?;
    summary.write_hyper_csv(&dir.join("hyper.csv"))?;
    summary.write_inclusion_matrix_csv(&dir.join("inclusion_matrix.csv"))
}

pub fn fit(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out()?;
    ensure_dir(out)?;
    let seed = cfg.seed()?;
    if cfg.fit.chains == 0 {
        return Err(Error::Config("fit.chains must be at least 1".into()));
    }
    let ds = prepared_dataset(cfg, out)?;
    let options = GibbsOptions {
        keep_latent: cfg.fit.keep_latent,
        progress: true,
    };
    let level = cfg.fit.level;
    if cfg.fit.chains == 1 {
        let mut chains = gibbs_chains(&ds, cfg.variant, cfg.prior, cfg.schedule, seed, 1, options)?;
        let ps = chains.pop().expect("one chain");
        write_posterior(&out.join("posterior"), &ps)?;
        write_summary(&summarize_with_level(&ps, level)?, out)?;
    } else {
        let chains = gibbs_chains(&ds, cfg.variant, cfg.prior, cfg.schedule, seed, cfg.fit.chains, options)?;
        for (c, ps) in chains.iter().enumerate() {
            let dir = out.join(format!("chain_{c}"));
            write_posterior(&dir.join("posterior"), ps)?;
            write_summary(&summarize_with_level(ps, level)?, &dir)?;
        }
        let pooled: PosteriorSamples = PosteriorSamples::pool(&chains)?;
        write_summary(&summarize_with_level(&pooled, level)?, out)?;
    }
    Ok(Outcome::Complete)
}

pub fn cv(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out()?;
    ensure_dir(out)?;
    let seed = cfg.seed()?;
    let ds = prepared_dataset(cfg, out)?;
    let folds = FoldSplit::stratified(&ds, cfg.cv.folds, derive_seed(seed, &[FOLD_STREAM]))?;
    let table = cross_validate(&ds, &cfg.cv.variants, &folds, cfg.prior, cfg.schedule, seed)?;
    table.write_csv(&out.join("cv.csv"))?;
    Ok(Outcome::Complete)
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out()?;
    let seed = cfg.seed()?;
    cfg.simulate.validate()?;
    ensure_dir(out)?;
    let result = run_study(&cfg.simulate, seed)?;
    result.write_outputs(out)?;
    Ok(match result.failures() {
        0 => Outcome::Complete,
        n => Outcome::Partial(format!("{n} study cells failed; see replications.csv")),
    })
}

pub fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out()?;
    let seed = cfg.seed()?;
    cfg.validate.study.validate()?;
    ensure_dir(out)?;
    let result = validation_study(&cfg.validate.study, seed)?;
    result.write_outputs(out)?;
    if cfg.validate.getting_it_right {
        let gir = getting_it_right(&cfg.validate.gir, derive_seed(seed, &[1]))?;
        hierss::report::write_csv(
            &out.join("getting_it_right.csv"),
            &["parameter", "ks_statistic", "p_value"],
            gir.tests.iter().map(|(name, ks)| {
                vec![
                    name.clone(),
                    hierss::report::fmt6(ks.statistic),
                    hierss::report::fmt6(ks.p_value),
                ]
            }),
        )?;
    }
    Ok(Outcome::Complete)
}

pub fn summarize(cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out()?;
    let dir = cfg
        .summarize
        .posterior
        .as_deref()
        .ok_or_else(|| Error::Config("summarize needs `summarize.posterior`".into()))?;
    let ps = read_posterior(dir)?;
    write_summary(&summarize_with_level(&ps, cfg.summarize.level)?, out)?;
    Ok(Outcome::Complete)
}

/// Worker threads worth starting for a command: the grid size, capped.
pub fn task_grid(cfg: &RunConfig, command: &str) -> usize {
    match command {
        "fit" => cfg.fit.chains,
        "cv" => cfg.cv.variants.len() * cfg.cv.folds,
        "simulate" => cfg.simulate.conditions.len() * cfg.simulate.variants.len() * cfg.simulate.replications,
        "validate" => cfg.validate.study.outer,
        _ => 1,
    }
    .max(1)
}
