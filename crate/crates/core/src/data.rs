//! Grouped, right-censored survival data with per-group covariate availability.
//!
//! A [`GroupedDataset`] holds one [`Group`] per sample set (e.g. cancer type).
//! Each group carries its own design matrix over the subset of the global
//! covariate registry that was measured for it.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report;

/// One subject's (possibly right-censored) event time.
///
/// Times are held on the log scale, which is where the model lives; the
/// natural-scale time is `exp(log_time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalOutcome {
    log_time: f64,
    event: bool,
}

impl SurvivalOutcome {
    /// `event = false` means the subject was censored at `time`.
    pub fn new(time: f64, event: bool) -> Result<Self> {
        if !(time > 0.0) || !time.is_finite() {
            return Err(Error::Validation(format!(
                "survival time must be positive and finite, got {time}"
            )));
        }
        Self::from_log_time(time.ln(), event)
    }

    pub fn from_log_time(log_time: f64, event: bool) -> Result<Self> {
        if !log_time.is_finite() {
            return Err(Error::Validation(format!(
                "log survival time must be finite, got {log_time}"
            )));
        }
        Ok(Self { log_time, event })
    }

    pub fn time(&self) -> f64 {
        self.log_time.exp()
    }

    pub fn log_time(&self) -> f64 {
        self.log_time
    }

    pub fn event(&self) -> bool {
        self.event
    }

    pub fn is_censored(&self) -> bool {
        !self.event
    }
}

/// One sample set: its subjects, outcomes and the covariates measured on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    id: String,
    subject_ids: Vec<String>,
    outcomes: Vec<SurvivalOutcome>,
    design: DMatrix<f64>,
    covariate_ids: Vec<String>,
}

impl Group {
    pub fn new(
        id: impl Into<String>,
        subject_ids: Vec<String>,
        outcomes: Vec<SurvivalOutcome>,
        design: DMatrix<f64>,
        covariate_ids: Vec<String>,
    ) -> Result<Self> {
        let id = id.into();
        if outcomes.is_empty() {
            return Err(Error::Validation(format!("group `{id}` has no subjects")));
        }
        if subject_ids.len() != outcomes.len() || design.nrows() != outcomes.len() {
            return Err(Error::Validation(format!(
                "group `{id}`: {} subject ids, {} outcomes, {} design rows",
                subject_ids.len(),
                outcomes.len(),
                design.nrows()
            )));
        }
        if design.ncols() != covariate_ids.len() {
            return Err(Error::Validation(format!(
                "group `{id}`: design has {} columns for {} covariates",
                design.ncols(),
                covariate_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = covariate_ids.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Validation(format!(
                "group `{id}` lists covariate `{dup}` twice"
            )));
        }
        if design.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "group `{id}` has non-finite covariate values"
            )));
        }
        Ok(Self {
            id,
            subject_ids,
            outcomes,
            design,
            covariate_ids,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn outcomes(&self) -> &[SurvivalOutcome] {
        &self.outcomes
    }

    /// `n_i × |S_i|` covariate values, columns ordered as [`Group::covariate_ids`].
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn covariate_ids(&self) -> &[String] {
        &self.covariate_ids
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn covariate_column(&self, covariate: &str) -> Option<usize> {
        self.covariate_ids.iter().position(|c| c == covariate)
    }

    /// Keeps the listed rows, in the given order. Returns `None` if no rows remain.
    pub fn select_rows(&self, rows: &[usize]) -> Option<Group> {
        if rows.is_empty() {
            return None;
        }
        let design = DMatrix::from_fn(rows.len(), self.design.ncols(), |r, c| {
            self.design[(rows[r], c)]
        });
        Some(Group {
            id: self.id.clone(),
            subject_ids: rows.iter().map(|&r| self.subject_ids[r].clone()).collect(),
            outcomes: rows.iter().map(|&r| self.outcomes[r]).collect(),
            design,
            covariate_ids: self.covariate_ids.clone(),
        })
    }
}

/// All groups plus the ordered global covariate registry.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    groups: Vec<Group>,
    registry: Vec<String>,
}

impl GroupedDataset {
    /// Groups are reordered lexicographically by id. `registry` fixes the
    /// global covariate order; entries no group uses are dropped.
    pub fn new(mut groups: Vec<Group>, registry: Vec<String>) -> Result<Self> {
        groups.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = groups.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Validation(format!("duplicate group `{}`", w[0].id)));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = registry.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Validation(format!(
                "covariate `{dup}` appears twice in the registry"
            )));
        }
        let used: HashSet<&str> = groups
            .iter()
            .flat_map(|g| g.covariate_ids.iter().map(String::as_str))
            .collect();
        if let Some(missing) = used.iter().find(|c| !seen.contains(*c)) {
            return Err(Error::Validation(format!(
                "covariate `{missing}` is not in the registry"
            )));
        }
        let registry = registry
            .into_iter()
            .filter(|c| used.contains(c.as_str()))
            .collect();
        Ok(Self { groups, registry })
    }

    /// Builds the registry from covariates in order of first appearance.
    pub fn from_groups(groups: Vec<Group>) -> Result<Self> {
        let mut registry: Vec<String> = Vec::new();
        for g in &groups {
            for c in &g.covariate_ids {
                if !registry.contains(c) {
                    registry.push(c.clone());
                }
            }
        }
        Self::new(groups, registry)
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn registry(&self) -> &[String] {
        &self.registry
    }

    pub fn group(&self, id: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.id == id)
    }

    pub fn covariate_index(&self, id: &str) -> Option<usize> {
        self.registry.iter().position(|c| c == id)
    }

    /// Total subject count `N = Σ n_i`.
    pub fn n_subjects(&self) -> usize {
        self.groups.iter().map(Group::len).sum()
    }

    /// `M = Σ |S_i|`, the number of group-covariate coefficients.
    pub fn n_pairs(&self) -> usize {
        self.groups.iter().map(|g| g.covariate_ids.len()).sum()
    }

    /// Every available (group, covariate) pair, in group then column order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.groups.iter().flat_map(|g| {
            g.covariate_ids
                .iter()
                .map(move |c| (g.id.as_str(), c.as_str()))
        })
    }

    pub fn censored_fraction(&self) -> f64 {
        let censored = self
            .groups
            .iter()
            .flat_map(|g| g.outcomes.iter())
            .filter(|o| o.is_censored())
            .count();
        censored as f64 / self.n_subjects().max(1) as f64
    }

    /// Keeps rows for which `keep(group_index, row)` holds; groups left with
    /// no rows are dropped.
    pub fn filter_rows(&self, keep: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let groups = self
            .groups
            .iter()
            .enumerate()
            .filter_map(|(gi, g)| {
                let rows: Vec<usize> = (0..g.len()).filter(|&r| keep(gi, r)).collect();
                g.select_rows(&rows)
            })
            .collect();
        Self::new(groups, self.registry.clone())
    }

    /// Replaces the registry and group designs wholesale; used by transforms
    /// that keep structure but change values.
    fn map_designs(&self, f: impl Fn(&Group) -> Result<DMatrix<f64>>) -> Result<Self> {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                Ok(Group {
                    design: f(g)?,
                    ..g.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            groups,
            registry: self.registry.clone(),
        })
    }
}

/// Column names for [`load_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub group: String,
    pub time: String,
    pub event: String,
    /// Subject identifier column. When the column is absent from the file,
    /// ids of the form `<group>#<row>` are synthesized.
    pub subject: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            group: "group".into(),
            time: "time".into(),
            event: "event".into(),
            subject: "subject".into(),
        }
    }
}

/// A loaded dataset together with the rows filtered out on the way in.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: GroupedDataset,
    /// Rows with an empty time or event cell.
    pub dropped_missing_outcome: usize,
    /// Rows with time ≤ 0.
    pub dropped_nonpositive_time: usize,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

/// Reads a one-row-per-subject CSV. Covariate cells equal to `""` or `NA`
/// mark a covariate as unavailable; a covariate enters a group's set iff it
/// is present on every retained row of that group.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<LoadReport> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(file, schema)
}

pub fn parse_dataset<R: Read>(reader: R, schema: &Schema) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| Error::Parse {
            row: 0,
            message: format!("missing required column `{name}`"),
        })
    };
    let group_col = required(&schema.group)?;
    let time_col = required(&schema.time)?;
    let event_col = required(&schema.event)?;
    let subject_col = col(&schema.subject);
    let covariate_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != group_col && i != time_col && i != event_col && Some(i) != subject_col)
        .collect();
    let covariate_names: Vec<String> = covariate_cols
        .iter()
        .map(|&i| headers[i].trim().to_string())
        .collect();

    struct Row {
        subject: String,
        outcome: SurvivalOutcome,
        cells: Vec<Option<f64>>,
    }
    let mut by_group: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut dropped_missing_outcome = 0;
    let mut dropped_nonpositive_time = 0;

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::Parse { row, message };
        let field = |i: usize| record.get(i).unwrap_or("");
        let group = field(group_col).trim().to_string();
        if group.is_empty() {
            return Err(parse_err("empty group id".into()));
        }
        let (time_cell, event_cell) = (field(time_col), field(event_col));
        if is_missing(time_cell) || is_missing(event_cell) {
            dropped_missing_outcome += 1;
            continue;
        }
        let time: f64 = time_cell
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("time `{time_cell}` is not a number")))?;
        let event = match event_cell.trim() {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(format!("event flag `{other}` is not 0 or 1"))),
        };
        if !(time > 0.0) {
            dropped_nonpositive_time += 1;
            continue;
        }
        let outcome = SurvivalOutcome::new(time, event).map_err(|e| parse_err(e.to_string()))?;
        let cells = covariate_cols
            .iter()
            .zip(&covariate_names)
            .map(|(&i, name)| {
                let cell = field(i);
                if is_missing(cell) {
                    return Ok(None);
                }
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| parse_err(format!("covariate `{name}` value `{cell}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = by_group.entry(group.clone()).or_default();
        let subject = match subject_col {
            Some(i) if !is_missing(field(i)) => field(i).trim().to_string(),
            _ => format!("{group}#{}", rows.len() + 1),
        };
        rows.push(Row {
            subject,
            outcome,
            cells,
        });
    }

    let mut groups = Vec::with_capacity(by_group.len());
    for (gid, rows) in by_group {
        let mut available = Vec::new();
        for (k, name) in covariate_names.iter().enumerate() {
            let present = rows.iter().filter(|r| r.cells[k].is_some()).count();
            if present == rows.len() {
                available.push(k);
            } else if present > 0 {
                return Err(Error::PartialCovariate {
                    group: gid,
                    covariate: name.clone(),
                });
            }
        }
        let design = DMatrix::from_fn(rows.len(), available.len(), |r, c| {
            rows[r].cells[available[c]].expect("availability checked")
        });
        let covariate_ids = available.iter().map(|&k| covariate_names[k].clone()).collect();
        let (subjects, outcomes) = rows.into_iter().map(|r| (r.subject, r.outcome)).unzip();
        groups.push(Group::new(gid, subjects, outcomes, design, covariate_ids)?);
    }
    let dataset = GroupedDataset::new(groups, covariate_names)?;
    Ok(LoadReport {
        dataset,
        dropped_missing_outcome,
        dropped_nonpositive_time,
    })
}

/// Writes a dataset in the same layout [`load_dataset`] reads, with `NA`
/// for covariates a group does not have.
pub fn write_dataset(path: &Path, ds: &GroupedDataset) -> Result<()> {
    let mut header = vec!["subject", "group", "time", "event"];
    header.extend(ds.registry().iter().map(String::as_str));
    let rows = ds.groups().iter().flat_map(|g| {
        let cols: Vec<Option<usize>> = ds
            .registry()
            .iter()
            .map(|c| g.covariate_column(c))
            .collect();
        (0..g.len()).map(move |r| {
            let o = g.outcomes()[r];
            let mut row = vec![
                g.subject_ids()[r].clone(),
                g.id().to_string(),
                report::fmt6(o.time()),
                if o.event() { "1" } else { "0" }.to_string(),
            ];
            row.extend(cols.iter().map(|c| match c {
                Some(c) => report::fmt6(g.design()[(r, *c)]),
                None => "NA".to_string(),
            }));
            row
        })
    });
    report::write_csv(path, &header, rows)
}

/// Whether covariates are scaled over all groups together or within each group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizationScope {
    PerGroup,
    #[default]
    Pooled,
}

/// Location and scale removed from one covariate column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScale {
    /// `None` for pooled scaling.
    pub group: Option<String>,
    pub covariate: String,
    pub mean: f64,
    pub sd: f64,
}

/// Everything needed to undo [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationRecord {
    pub scope: StandardizationScope,
    pub columns: Vec<ColumnScale>,
}

impl StandardizationRecord {
    fn lookup(&self, group: &str, covariate: &str) -> Option<&ColumnScale> {
        self.columns.iter().find(|c| {
            c.covariate == covariate
                && match (&c.group, self.scope) {
                    (None, StandardizationScope::Pooled) => true,
                    (Some(g), StandardizationScope::PerGroup) => g == group,
                    _ => false,
                }
        })
    }

    /// Maps standardized values back to the original scale.
    pub fn back_transform(&self, ds: &GroupedDataset) -> Result<GroupedDataset> {
        ds.map_designs(|g| {
            let mut design = g.design().clone();
            for (c, cov) in g.covariate_ids().iter().enumerate() {
                let scale = self.lookup(g.id(), cov).ok_or_else(|| {
                    Error::Validation(format!(
                        "no standardization entry for `{cov}` in group `{}`",
                        g.id()
                    ))
                })?;
                design
                    .column_mut(c)
                    .apply(|x| *x = *x * scale.sd + scale.mean);
            }
            Ok(design)
        })
    }

    /// Flat text form: a scope line, then one tab-separated line per column
    /// (`covariate mean sd`, prefixed by the group id for per-group scaling).
    pub fn to_text(&self) -> String {
        let mut out = match self.scope {
            StandardizationScope::Pooled => "# scope: pooled\n".to_string(),
            StandardizationScope::PerGroup => "# scope: per_group\n".to_string(),
        };
        for c in &self.columns {
            if let Some(g) = &c.group {
                out.push_str(g);
                out.push('\t');
            }
            out.push_str(&format!("{}\t{}\t{}\n", c.covariate, c.mean, c.sd));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let scope = match lines.next().map(str::trim) {
            Some("# scope: pooled") => StandardizationScope::Pooled,
            Some("# scope: per_group") => StandardizationScope::PerGroup,
            other => {
                return Err(Error::Parse {
                    row: 1,
                    message: format!("expected scope line, found {other:?}"),
                })
            }
        };
        let columns = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                let err = || Error::Parse {
                    row: i + 2,
                    message: format!("malformed standardization line `{line}`"),
                };
                let parts: Vec<&str> = line.split('\t').collect();
                let (group, rest) = match (scope, parts.len()) {
                    (StandardizationScope::Pooled, 3) => (None, &parts[..]),
                    (StandardizationScope::PerGroup, 4) => (Some(parts[0].to_string()), &parts[1..]),
                    _ => return Err(err()),
                };
                Ok(ColumnScale {
                    group,
                    covariate: rest[0].to_string(),
                    mean: rest[1].parse().map_err(|_| err())?,
                    sd: rest[2].parse().map_err(|_| err())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { scope, columns })
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Centers each covariate to mean 0 and scales it to sample standard
/// deviation 1 (n − 1 denominator) within `scope`.
pub fn standardize(
    ds: &GroupedDataset,
    scope: StandardizationScope,
) -> Result<(GroupedDataset, StandardizationRecord)> {
    let mut columns = Vec::new();
    match scope {
        StandardizationScope::Pooled => {
            for cov in ds.registry() {
                let values: Vec<f64> = ds
                    .groups()
                    .iter()
                    .filter_map(|g| g.covariate_column(cov).map(|c| (g, c)))
                    .flat_map(|(g, c)| g.design().column(c).iter().copied().collect::<Vec<_>>())
                    .collect();
                let (mean, sd) = mean_sd(&values);
                if !(sd > 0.0) {
                    return Err(Error::ZeroVariance {
                        covariate: cov.clone(),
                        scope: "pooled scope".into(),
                    });
                }
                columns.push(ColumnScale {
                    group: None,
                    covariate: cov.clone(),
                    mean,
                    sd,
                });
            }
        }
        StandardizationScope::PerGroup => {
            for g in ds.groups() {
                for (c, cov) in g.covariate_ids().iter().enumerate() {
                    let values: Vec<f64> = g.design().column(c).iter().copied().collect();
                    let (mean, sd) = mean_sd(&values);
                    if !(sd > 0.0) {
                        return Err(Error::ZeroVariance {
                            covariate: cov.clone(),
                            scope: format!("group `{}`", g.id()),
                        });
                    }
                    columns.push(ColumnScale {
                        group: Some(g.id().to_string()),
                        covariate: cov.clone(),
                        mean,
                        sd,
                    });
                }
            }
        }
    }
    let record = StandardizationRecord { scope, columns };
    let scaled = ds.map_designs(|g| {
        let mut design = g.design().clone();
        for (c, cov) in g.covariate_ids().iter().enumerate() {
            let s = record.lookup(g.id(), cov).expect("entry computed above");
            design.column_mut(c).apply(|x| *x = (*x - s.mean) / s.sd);
        }
        Ok(design)
    })?;
    Ok((scaled, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadReport> {
        parse_dataset(text.as_bytes(), &Schema::default())
    }

    const TOY: &str = "\
group,time,event,C1,C2,C3
A,10,1,0.5,1.0,2.0
A,20,0,1.5,2.0,3.0
B,5,1,0.1,0.2,NA
B,7,0,0.3,0.9,
A,0,1,1.0,1.0,1.0
B,,1,1.0,1.0,NA
";

    #[test]
    fn availability_follows_missing_columns() {
        let rep = parse(TOY).unwrap();
        let ds = &rep.dataset;
        assert_eq!(ds.groups().len(), 2);
        assert_eq!(ds.group("A").unwrap().covariate_ids(), ["C1", "C2", "C3"]);
        assert_eq!(ds.group("B").unwrap().covariate_ids(), ["C1", "C2"]);
        assert_eq!(ds.registry(), ["C1", "C2", "C3"]);
        assert_eq!(rep.dropped_nonpositive_time, 1);
        assert_eq!(rep.dropped_missing_outcome, 1);
        assert_eq!(ds.n_subjects(), 4);
        assert_eq!(ds.group("B").unwrap().subject_ids(), ["B#1", "B#2"]);
        assert!(ds.group("B").unwrap().outcomes()[1].is_censored());
    }

    #[test]
    fn partially_missing_covariate_is_rejected() {
        let text = "group,time,event,C1,C2\nA,1,1,1,1\nA,2,1,2,NA\nA,3,1,3,2\nA,4,0,4,5\nA,5,1,5,1\n";
        match parse(text) {
            Err(Error::PartialCovariate { group, covariate }) => {
                assert_eq!(group, "A");
                assert_eq!(covariate, "C2");
            }
            other => panic!("expected partial-covariate error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_their_index() {
        let text = "group,time,event,C1\nA,1,1,1\nA,abc,1,2\n";
        match parse(text) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse("group,event,C1\nA,1,1\n"),
            Err(Error::Parse { row: 0, .. })
        ));
    }

    #[test]
    fn groups_are_ordered_lexicographically() {
        let text = "group,time,event,x\nZ,1,1,1\nA,1,1,2\nM,1,0,3\n";
        let ds = parse(text).unwrap().dataset;
        let ids: Vec<&str> = ds.groups().iter().map(Group::id).collect();
        assert_eq!(ids, ["A", "M", "Z"]);
    }

    fn single_column(values: &[f64]) -> GroupedDataset {
        let n = values.len();
        let g = Group::new(
            "G",
            (0..n).map(|i| i.to_string()).collect(),
            vec![SurvivalOutcome::new(1.0, true).unwrap(); n],
            DMatrix::from_column_slice(n, 1, values),
            vec!["x".into()],
        )
        .unwrap();
        GroupedDataset::from_groups(vec![g]).unwrap()
    }

    #[test]
    fn standardize_centers_and_scales() {
        let (ds, rec) = standardize(&single_column(&[1.0, 2.0, 3.0]), StandardizationScope::Pooled).unwrap();
        let col: Vec<f64> = ds.groups()[0].design().column(0).iter().copied().collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
        assert_eq!(rec.columns[0].mean, 2.0);
        assert_eq!(rec.columns[0].sd, 1.0);
    }

    #[test]
    fn standardize_is_idempotent() {
        let (once, _) = standardize(&single_column(&[0.3, -1.2, 4.4, 2.0]), StandardizationScope::Pooled).unwrap();
        let (twice, _) = standardize(&once, StandardizationScope::Pooled).unwrap();
        let a = once.groups()[0].design();
        let b = twice.groups()[0].design();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn constant_column_is_rejected() {
        assert!(matches!(
            standardize(&single_column(&[5.0, 5.0, 5.0]), StandardizationScope::Pooled),
            Err(Error::ZeroVariance { .. })
        ));
        assert!(matches!(
            standardize(&single_column(&[5.0, 5.0, 5.0]), StandardizationScope::PerGroup),
            Err(Error::ZeroVariance { .. })
        ));
    }

    #[test]
    fn record_text_round_trip() {
        let ds = parse(TOY).unwrap().dataset;
        for scope in [StandardizationScope::Pooled, StandardizationScope::PerGroup] {
            let (_, rec) = standardize(&ds, scope).unwrap();
            let back = StandardizationRecord::from_text(&rec.to_text()).unwrap();
            assert_eq!(back, rec);
        }
    }

    #[test]
    fn outcome_rejects_non_positive_time() {
        assert!(SurvivalOutcome::new(0.0, true).is_err());
        assert!(SurvivalOutcome::new(-3.0, false).is_err());
        assert!(SurvivalOutcome::new(f64::INFINITY, false).is_err());
        assert!(SurvivalOutcome::from_log_time(f64::NAN, false).is_err());
    }
}
