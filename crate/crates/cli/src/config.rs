//! Run configuration: a JSON file whose keys can be overridden by flags,
//! resolved against an optional named preset.

use std::path::{Path, PathBuf};

use erlmix::mcmc::Schedule;
use erlmix::presets::{preset, ModelPriors};
use erlmix::sim::GeneratorSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Where the survival data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// A CSV file with columns `time,status[,group]`.
    Csv(PathBuf),
    /// Synthetic data, one generator per group.
    Generate(Vec<GeneratorSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Upper end of the grid; defaults to 110% of the 99.5th percentile of
    /// the observed times.
    #[serde(default)]
    pub max: Option<f64>,
    pub points: usize,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub censoring: Option<f64>,
    pub priors: Option<ModelPriors>,
    pub data: Option<DataSource>,
    pub schedule: Option<Schedule>,
    pub seed: Option<u64>,
    pub grid: Option<GridSpec>,
    pub level: Option<f64>,
    pub contrast_times: Option<Vec<f64>>,
    pub chains: Option<usize>,
    pub out: Option<PathBuf>,
    pub prior_study: Option<String>,
    pub realizations: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub censoring: Option<f64>,
    pub data: Option<PathBuf>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub burn_in: Option<f64>,
    pub thin: Option<usize>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub level: Option<f64>,
    pub chains: Option<usize>,
    pub out: Option<PathBuf>,
    pub prior_study: Option<String>,
    pub realizations: Option<usize>,
}

pub const DEFAULT_GRID_POINTS: usize = 200;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_OUT: &str = "erlmix-out";

/// Fully resolved settings. This is what the manifest records and hashes;
/// the output directory is left out so that it does not change the hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub priors: Option<ModelPriors>,
    pub data: Option<DataSource>,
    pub schedule: Schedule,
    pub seed: u64,
    pub grid: GridSpec,
    pub level: f64,
    pub contrast_times: Vec<f64>,
    pub chains: usize,
    pub prior_study: String,
    pub realizations: usize,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, ov: Overrides) -> Result<Self, CliError> {
        let preset_name = ov.preset.or(file.preset);
        let censoring = ov.censoring.or(file.censoring);
        let base = match &preset_name {
            Some(name) => Some(preset(name, censoring)?),
            None => {
                if censoring.is_some() {
                    return Err(CliError::Config("--censoring needs a preset".into()));
                }
                None
            }
        };

        let priors = file.priors.or(base.as_ref().map(|p| p.priors));
        let data = match ov.data {
            Some(path) => Some(DataSource::Csv(path)),
            None => file.data.or_else(|| {
                base.as_ref()
                    .filter(|p| !p.generators.is_empty())
                    .map(|p| DataSource::Generate(p.generators.clone()))
            }),
        };
        let contrast_times = file
            .contrast_times
            .or(base.as_ref().map(|p| p.contrast_times.clone()))
            .unwrap_or_default();

        let mut schedule = file.schedule.unwrap_or_else(Schedule::desk);
        if let Some(n) = ov.iterations {
            schedule.iterations = n;
        }
        if let Some(b) = ov.burn_in {
            schedule.burn_in_fraction = b;
        }
        if let Some(t) = ov.thin {
            schedule.thin = t;
        }

        let mut grid = file.grid.unwrap_or(GridSpec {
            max: None,
            points: DEFAULT_GRID_POINTS,
        });
        if ov.grid_max.is_some() {
            grid.max = ov.grid_max;
        }
        if let Some(p) = ov.grid_points {
            grid.points = p;
        }

        let cfg = Self {
            preset: preset_name,
            priors,
            data,
            schedule,
            seed: ov.seed.or(file.seed).unwrap_or(0),
            grid,
            level: ov.level.or(file.level).unwrap_or(DEFAULT_LEVEL),
            contrast_times,
            chains: ov.chains.or(file.chains).unwrap_or(1),
            prior_study: ov
                .prior_study
                .or(file.prior_study)
                .unwrap_or_else(|| "alpha".into()),
            realizations: ov.realizations.or(file.realizations).unwrap_or(50),
            out: ov.out.or(file.out).unwrap_or_else(|| DEFAULT_OUT.into()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.schedule.validate()?;
        if self.schedule.retained() == 0 {
            return Err(CliError::Config(
                "schedule retains no draws; raise --iterations or lower --thin".into(),
            ));
        }
        if self.grid.points == 0 {
            return Err(CliError::Config("grid needs at least one point".into()));
        }
        if let Some(m) = self.grid.max {
            if !(m > 0.0 && m.is_finite()) {
                return Err(CliError::Config(format!("grid maximum must be positive, got {m}")));
            }
        }
        if !(0.0..1.0).contains(&self.level) {
            return Err(CliError::Config(format!(
                "credible level must lie in [0, 1), got {}",
                self.level
            )));
        }
        if self.chains == 0 {
            return Err(CliError::Config("--chains must be at least 1".into()));
        }
        if self.realizations == 0 {
            return Err(CliError::Config("--realizations must be at least 1".into()));
        }
        match self.priors {
            Some(ModelPriors::Dp(h)) => h.validate()?,
            Some(ModelPriors::Ddp(h)) => h.validate()?,
            None => {}
        }
        if let Some(DataSource::Generate(specs)) = &self.data {
            if specs.is_empty() {
                return Err(CliError::Config("data generator list is empty".into()));
            }
            for s in specs {
                s.validate()?;
            }
        }
        Ok(())
    }

    pub fn priors(&self) -> Result<ModelPriors, CliError> {
        self.priors
            .ok_or_else(|| CliError::Config("no priors given; use --preset or a config file".into()))
    }

    pub fn data_source(&self) -> Result<&DataSource, CliError> {
        self.data.as_ref().ok_or_else(|| {
            CliError::Config("no data source; use --data, a config file or a simulated preset".into())
        })
    }
}
