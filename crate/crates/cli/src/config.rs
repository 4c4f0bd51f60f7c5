use std::path::{Path, PathBuf};

use hierss::components::{DEFAULT_MAX_COMPONENTS, DEFAULT_THRESHOLD};
use hierss::data::{Schema, StandardizationScope};
use hierss::sampler::{ModelVariant, PriorConfig, Schedule};
use hierss::simulation::{GirConfig, StudyConfig, ValidationConfig};
use hierss::{Error, Result};
use serde::{Deserialize, Serialize};

/// Environment variable holding the default worker-thread cap.
pub const THREADS_ENV: &str = "HIERSS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardize {
    Pooled,
    PerGroup,
    None,
}

impl Standardize {
    pub fn scope(self) -> Option<StandardizationScope> {
        match self {
            Standardize::Pooled => Some(StandardizationScope::Pooled),
            Standardize::PerGroup => Some(StandardizationScope::PerGroup),
            Standardize::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub schema: Schema,
    pub standardize: Standardize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            schema: Schema::default(),
            standardize: Standardize::Pooled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub manifest: Option<PathBuf>,
    pub threshold: f64,
    pub max_components: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            threshold: DEFAULT_THRESHOLD,
            max_components: DEFAULT_MAX_COMPONENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub chains: usize,
    pub keep_latent: bool,
    pub level: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            chains: 1,
            keep_latent: false,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub variants: Vec<ModelVariant>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            variants: ModelVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub study: ValidationConfig,
    /// Also run the getting-it-right check.
    pub getting_it_right: bool,
    pub gir: GirConfig,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            study: ValidationConfig::default(),
            getting_it_right: false,
            gir: GirConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarizeConfig {
    pub posterior: Option<PathBuf>,
    pub level: f64,
}

impl Default for SummarizeConfig {
    fn default() -> Self {
        Self {
            posterior: None,
            level: 0.95,
        }
    }
}

/// Everything a run needs; loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub variant: ModelVariant,
    pub schedule: Schedule,
    pub prior: PriorConfig,
    pub data: DataConfig,
    pub extract: ExtractConfig,
    pub fit: FitConfig,
    pub cv: CvConfig,
    pub simulate: StudyConfig,
    pub validate: ValidateConfig,
    pub summarize: SummarizeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            threads: None,
            out: None,
            variant: ModelVariant::Hierarchical,
            schedule: Schedule {
                total: 100_000,
                burn_in: 50_000,
                thin: 10,
            },
            prior: PriorConfig::default(),
            data: DataConfig::default(),
            extract: ExtractConfig::default(),
            fit: FitConfig::default(),
            cv: CvConfig::default(),
            simulate: StudyConfig::default(),
            validate: ValidateConfig::default(),
            summarize: SummarizeConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.out);
        rebase(&mut cfg.data.path);
        rebase(&mut cfg.extract.manifest);
        rebase(&mut cfg.summarize.posterior);
        Ok(cfg)
    }

    /// Anchors relative paths at the working directory so the echoed config
    /// reproduces the run from anywhere.
    pub fn make_paths_absolute(&mut self) -> Result<()> {
        for p in [
            &mut self.out,
            &mut self.data.path,
            &mut self.extract.manifest,
            &mut self.summarize.posterior,
        ]
        .into_iter()
        .flatten()
        {
            *p = std::path::absolute(&*p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (`seed` in the config or --seed)".into()))
    }

    pub fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("an output directory is required (`out` or --out)".into()))
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .path
            .as_deref()
            .ok_or_else(|| Error::Config("a dataset is required (`data.path`)".into()))
    }

    /// The effective configuration as TOML, with absolute paths so it can be
    /// re-run from anywhere.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }
}
