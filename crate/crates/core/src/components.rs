//! Component-score predictors from pre-factorized low-rank modules.
//!
//! Each module is a features × samples block. Its SVD gives component scores
//! `σ_k v_k` per subject; the first component of every module is kept, and
//! further components are kept when `σ_k² / total_variance` exceeds a
//! threshold. Kept components become covariates named `module.index`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Group, GroupedDataset};
use crate::error::{Error, Result};
use crate::report;

/// Default cap on the number of components extracted per module.
pub const DEFAULT_MAX_COMPONENTS: usize = 20;

/// Default variance-ratio threshold for components beyond the first.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// A low-rank block of structured variation (features × samples).
#[derive(Debug, Clone)]
pub struct LowRankModule {
    module_id: u32,
    data_block: DMatrix<f64>,
    sample_ids: Vec<String>,
}

impl LowRankModule {
    pub fn new(module_id: u32, data_block: DMatrix<f64>, sample_ids: Vec<String>) -> Result<Self> {
        if data_block.ncols() != sample_ids.len() {
            return Err(Error::Validation(format!(
                "module {module_id}: {} columns but {} sample ids",
                data_block.ncols(),
                sample_ids.len()
            )));
        }
        if data_block.is_empty() {
            return Err(Error::Validation(format!("module {module_id} is empty")));
        }
        if data_block.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "module {module_id} contains non-finite values"
            )));
        }
        Ok(Self {
            module_id,
            data_block,
            sample_ids,
        })
    }

    pub fn module_id(&self) -> u32 {
        self.module_id
    }

    pub fn data_block(&self) -> &DMatrix<f64> {
        &self.data_block
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// `min(rows, cols, 20)`.
    pub fn default_max_components(&self) -> usize {
        self.data_block
            .nrows()
            .min(self.data_block.ncols())
            .min(DEFAULT_MAX_COMPONENTS)
    }
}

/// One component's per-subject scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentScores {
    pub module_id: u32,
    /// 1-based rank of the singular value within its module.
    pub component_index: usize,
    pub singular_value: f64,
    /// Squared singular value over the total variance of the source data.
    pub variance_ratio: f64,
    pub subjects: Vec<String>,
    pub scores: Vec<f64>,
}

impl ComponentScores {
    /// Predictor name, e.g. `16.1`.
    pub fn name(&self) -> String {
        format!("{}.{}", self.module_id, self.component_index)
    }

    pub fn score_of(&self, subject: &str) -> Option<f64> {
        self.subjects
            .iter()
            .position(|s| s == subject)
            .map(|i| self.scores[i])
    }
}

/// Rank-`k` SVD of a module with singular values in descending order and each
/// right singular vector's largest-magnitude entry made positive.
#[derive(Debug, Clone)]
pub struct ModuleSvd {
    pub singular_values: Vec<f64>,
    /// features × k
    pub left: DMatrix<f64>,
    /// samples × k
    pub right: DMatrix<f64>,
}

impl ModuleSvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            &self.singular_values,
        ));
        &self.left * sigma * self.right.transpose()
    }
}

/// Thin SVD restricted to the numerical rank. A column-pivoted QR reduces the
/// block to a full-row-rank factor first, since bidiagonal SVD can lose
/// accuracy on exactly rank-deficient input.
pub fn decompose(module: &LowRankModule) -> Result<ModuleSvd> {
    let a = module.data_block();
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateModule(module.module_id));
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..a.nrows().min(a.ncols())).map(|i| r[(i, i)].abs()).collect();
    let tol = diag[0] * a.nrows().max(a.ncols()) as f64 * f64::EPSILON;
    let rank = diag.iter().take_while(|&&d| d > tol).count().max(1);
    let mut reduced = r.rows(0, rank).into_owned();
    qr.p().inv_permute_columns(&mut reduced);
    let svd = reduced.svd(true, true);
    let u = qr.q().columns(0, rank) * svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let k = order.len();
    let mut left = DMatrix::zeros(a.nrows(), k);
    let mut right = DMatrix::zeros(a.ncols(), k);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = v_t.row(src).transpose();
        let mut u_col = u.column(src).into_owned();
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, x)| {
                if x.abs() > best.1 {
                    (i, x.abs())
                } else {
                    best
                }
            })
            .0;
        if v[pivot] < 0.0 {
            v.neg_mut();
            u_col.neg_mut();
        }
        right.set_column(dst, &v);
        left.set_column(dst, &u_col);
        singular_values.push(svd.singular_values[src]);
    }
    Ok(ModuleSvd {
        singular_values,
        left,
        right,
    })
}

/// Component scores `σ_k v_k` for the leading `max_components` components.
/// Components beyond the block's numerical rank carry no variation and are
/// not returned.
/// `total_variance` is the squared Frobenius norm of the full unfactorized
/// data and sets each component's variance ratio.
pub fn svd_scores(
    module: &LowRankModule,
    max_components: usize,
    total_variance: f64,
) -> Result<Vec<ComponentScores>> {
    let limit = module.data_block().nrows().min(module.data_block().ncols());
    if max_components == 0 || max_components > limit {
        return Err(Error::Config(format!(
            "module {}: max_components must be in 1..={limit}, got {max_components}",
            module.module_id()
        )));
    }
    if !(total_variance > 0.0) {
        return Err(Error::Config(format!(
            "total variance must be positive, got {total_variance}"
        )));
    }
    let svd = decompose(module)?;
    Ok((0..max_components.min(svd.singular_values.len()))
        .map(|k| {
            let sigma = svd.singular_values[k];
            ComponentScores {
                module_id: module.module_id(),
                component_index: k + 1,
                singular_value: sigma,
                variance_ratio: sigma * sigma / total_variance,
                subjects: module.sample_ids().to_vec(),
                scores: svd.right.column(k).iter().map(|v| sigma * v).collect(),
            }
        })
        .collect())
}

/// Keeps every module's first component plus any component whose variance
/// ratio is strictly above `threshold`. Output is ordered by module, then index.
pub fn filter_components(all: &[ComponentScores], threshold: f64) -> Vec<ComponentScores> {
    let mut kept: Vec<ComponentScores> = all
        .iter()
        .filter(|c| c.component_index == 1 || c.variance_ratio > threshold)
        .cloned()
        .collect();
    kept.sort_by_key(|c| (c.module_id, c.component_index));
    kept
}

/// Result of [`assemble_design`].
#[derive(Debug, Clone)]
pub struct AssembledDesign {
    pub dataset: GroupedDataset,
    /// Distinct scored subjects that do not appear in the dataset.
    pub unmatched_subjects: usize,
}

/// Adds each selected component as a covariate. A component enters group
/// `i`'s covariate set only when every subject of the group has a score.
pub fn assemble_design(selected: &[ComponentScores], ds: &GroupedDataset) -> Result<AssembledDesign> {
    let known: HashSet<&str> = ds
        .groups()
        .iter()
        .flat_map(|g| g.subject_ids().iter().map(String::as_str))
        .collect();
    let unmatched: BTreeSet<&str> = selected
        .iter()
        .flat_map(|c| c.subjects.iter().map(String::as_str))
        .filter(|s| !known.contains(s))
        .collect();

    let mut registry = ds.registry().to_vec();
    for c in selected {
        let name = c.name();
        if registry.contains(&name) {
            return Err(Error::Validation(format!(
                "component `{name}` collides with an existing covariate"
            )));
        }
        registry.push(name);
    }

    let lookups: Vec<HashMap<&str, f64>> = selected
        .iter()
        .map(|c| {
            c.subjects
                .iter()
                .map(String::as_str)
                .zip(c.scores.iter().copied())
                .collect()
        })
        .collect();

    let groups = ds
        .groups()
        .iter()
        .map(|g| {
            let covering: Vec<usize> = (0..selected.len())
                .filter(|&k| g.subject_ids().iter().all(|s| lookups[k].contains_key(s.as_str())))
                .collect();
            let p_old = g.design().ncols();
            let design = DMatrix::from_fn(g.len(), p_old + covering.len(), |r, c| {
                if c < p_old {
                    g.design()[(r, c)]
                } else {
                    lookups[covering[c - p_old]][g.subject_ids()[r].as_str()]
                }
            });
            let mut covariate_ids = g.covariate_ids().to_vec();
            covariate_ids.extend(covering.iter().map(|&k| selected[k].name()));
            Group::new(
                g.id(),
                g.subject_ids().to_vec(),
                g.outcomes().to_vec(),
                design,
                covariate_ids,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AssembledDesign {
        dataset: GroupedDataset::new(groups, registry)?,
        unmatched_subjects: unmatched.len(),
    })
}

/// One entry of a module manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u32,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    /// Sample sets the module spans; informational.
    #[serde(default)]
    pub groups: Vec<String>,
}

/// TOML manifest listing the modules of a factorization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Squared Frobenius norm of the full multi-source data.
    pub total_variance: f64,
    #[serde(default, rename = "module")]
    pub modules: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = report::read_text(path)?;
        let mut manifest: Manifest = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for m in &mut manifest.modules {
            if m.path.is_relative() {
                m.path = base.join(&m.path);
            }
        }
        Ok(manifest)
    }
}

/// Reads a module CSV: header row of sample ids, one row per feature. A
/// leading header cell named `feature` marks a label column, which is skipped.
pub fn read_module_csv(path: &Path, module_id: u32) -> Result<LowRankModule> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            row: 0,
            message: format!("{}: {e}", path.display()),
        })?;
    let headers = rdr.headers()?.clone();
    let skip = usize::from(headers.get(0).map(str::trim) == Some("feature"));
    let sample_ids: Vec<String> = headers.iter().skip(skip).map(|h| h.trim().to_string()).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        for cell in rec.iter().skip(skip) {
            values.push(cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                row: i + 1,
                message: format!("{}: `{cell}` is not a number", path.display()),
            })?);
        }
        rows += 1;
    }
    let data = DMatrix::from_row_slice(rows, sample_ids.len(), &values);
    LowRankModule::new(module_id, data, sample_ids)
}

/// Writes a subjects × components score table. Subjects appear in order of
/// first appearance; a blank cell means the component does not cover the
/// subject.
pub fn write_component_scores(path: &Path, selected: &[ComponentScores]) -> Result<()> {
    let mut subjects: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for c in selected {
        for s in &c.subjects {
            if seen.insert(s.as_str()) {
                subjects.push(s);
            }
        }
    }
    let names: Vec<String> = selected.iter().map(ComponentScores::name).collect();
    let mut header = vec!["subject"];
    header.extend(names.iter().map(String::as_str));
    let lookups: Vec<HashMap<&str, f64>> = selected
        .iter()
        .map(|c| c.subjects.iter().map(String::as_str).zip(c.scores.iter().copied()).collect())
        .collect();
    let rows = subjects.iter().map(|s| {
        let mut row = vec![s.to_string()];
        row.extend(lookups.iter().map(|l| l.get(s).map(|v| report::fmt6(*v)).unwrap_or_default()));
        row
    });
    report::write_csv(path, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn module(id: u32, a: DMatrix<f64>) -> LowRankModule {
        let ids = (0..a.ncols()).map(|j| format!("s{j}")).collect();
        LowRankModule::new(id, a, ids).unwrap()
    }

    #[test]
    fn rank_one_scores_are_sigma_times_v() {
        // A = 2 · u vᵀ with u = (1, 0, 0), v = (0.6, 0.8)
        let a = DMatrix::from_row_slice(3, 2, &[1.2, 1.6, 0.0, 0.0, 0.0, 0.0]);
        let scores = svd_scores(&module(1, a), 1, 10.0).unwrap();
        assert_eq!(scores.len(), 1);
        let s = &scores[0];
        assert!((s.singular_value - 2.0).abs() < 1e-12);
        assert!((s.scores[0] - 1.2).abs() < 1e-12);
        assert!((s.scores[1] - 1.6).abs() < 1e-12);
        assert!((s.variance_ratio - 0.4).abs() < 1e-12);
        assert_eq!(s.name(), "1.1");
    }

    #[test]
    fn negated_module_gives_identical_scores() {
        let a = DMatrix::from_row_slice(3, 4, &[
            1.0, -2.0, 0.5, 3.0, //
            0.2, 0.1, -1.0, 2.0, //
            -0.7, 0.4, 0.9, -1.1,
        ]);
        let pos = svd_scores(&module(2, a.clone()), 3, 1.0).unwrap();
        let neg = svd_scores(&module(2, -a), 3, 1.0).unwrap();
        for (p, n) in pos.iter().zip(&neg) {
            for (x, y) in p.scores.iter().zip(&n.scores) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_module_is_degenerate() {
        let a = DMatrix::zeros(3, 3);
        assert!(matches!(
            svd_scores(&module(9, a), 1, 1.0),
            Err(Error::DegenerateModule(9))
        ));
    }

    #[test]
    fn too_many_components_is_a_config_error() {
        let a = DMatrix::from_element(2, 5, 1.0);
        assert!(matches!(svd_scores(&module(1, a), 3, 1.0), Err(Error::Config(_))));
    }

    fn fixture(module_id: u32, ratios: &[f64]) -> Vec<ComponentScores> {
        ratios
            .iter()
            .enumerate()
            .map(|(k, &r)| ComponentScores {
                module_id,
                component_index: k + 1,
                singular_value: r.sqrt(),
                variance_ratio: r,
                subjects: vec![],
                scores: vec![],
            })
            .collect()
    }

    #[test]
    fn filter_keeps_first_and_large_components() {
        let kept = filter_components(&fixture(1, &[0.030, 0.012, 0.004]), 0.01);
        let idx: Vec<usize> = kept.iter().map(|c| c.component_index).collect();
        assert_eq!(idx, [1, 2]);

        let kept = filter_components(&fixture(2, &[0.002]), 0.01);
        assert_eq!(kept.len(), 1);

        let all = fixture(3, &[0.5, 0.001, 0.0001]);
        assert_eq!(filter_components(&all, 0.0).len(), 3);
    }

    #[test]
    fn filter_threshold_is_strict() {
        let kept = filter_components(&fixture(1, &[0.5, 0.01]), 0.01);
        assert_eq!(kept.len(), 1);
    }
}
