use std::path::{Path, PathBuf};

use qga::analysis::Padding;
use qga::ga::{GaConfig, DEFAULT_MAX_GENERATIONS};
use qga::genome::CodecConfig;
use qga::tasks::{builtin_task, TaskFile, TaskSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Flat key-value experiment configuration. Every field is echoed into the
/// output metadata; `out` and `workers` go to `effective_config.toml` only,
/// since they must not change result bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in task name (`deutsch`, `deutsch-all`) or path to a task file.
    pub task: String,
    pub npop: usize,
    /// Depth constant `L`.
    pub depth: u32,
    /// Codec half-range `R` in radians.
    pub half_range: f64,
    /// Termination threshold `h`; required.
    pub threshold: Option<f64>,
    pub mutation: f64,
    pub elitism: usize,
    pub max_gen: usize,
    /// Ensemble size for `sweep`.
    pub seeds: usize,
    pub base_seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    /// Equal-count bins for the run-time/accuracy fit.
    pub bins: usize,
    /// Runs with a larger `epsilon_opt` are left out of the alpha statistics.
    pub alpha_max_error: f64,
    pub padding: Padding,
    /// Minimum number of generations in the stats table (hold-final padding).
    pub horizon: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: "deutsch".into(),
            npop: 100,
            depth: 15,
            half_range: std::f64::consts::PI,
            threshold: None,
            mutation: 0.0,
            elitism: 0,
            max_gen: DEFAULT_MAX_GENERATIONS,
            seeds: 1,
            base_seed: 0,
            out: PathBuf::from("out"),
            workers: 1,
            bins: 20,
            alpha_max_error: 1e-3,
            padding: Padding::HoldFinal,
            horizon: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn threshold(&self) -> Result<f64> {
        self.threshold
            .ok_or_else(|| CliError::Config("threshold (h) is required: pass --threshold".into()))
    }

    pub fn load_task(&self) -> Result<TaskSpec> {
        if let Some(task) = builtin_task(&self.task) {
            return Ok(task);
        }
        let path = Path::new(&self.task);
        if !path.is_file() {
            return Err(CliError::Config(format!(
                "task `{}` is neither a built-in task nor an existing file",
                self.task
            )));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: TaskFile = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(file.into_spec()?)
    }

    pub fn ga_config(&self, dim: usize) -> Result<GaConfig> {
        let codec = CodecConfig::new(self.depth, self.half_range, dim)?;
        let cfg = GaConfig {
            population: self.npop,
            threshold: self.threshold()?,
            mutation_rate: self.mutation,
            crossover: Default::default(),
            elitism: self.elitism,
            max_generations: self.max_gen,
            codec,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        self.threshold()?;
        Ok(())
    }

    /// Metadata lines for result files (without `out` and `workers`).
    pub fn metadata(&self) -> Vec<(String, String)> {
        let threshold = self
            .threshold
            .map_or("unset".to_string(), |h| format!("{h:e}"));
        vec![
            ("task".into(), self.task.clone()),
            ("npop".into(), self.npop.to_string()),
            ("depth".into(), self.depth.to_string()),
            ("half_range".into(), format!("{:.16e}", self.half_range)),
            ("threshold".into(), threshold),
            ("mutation".into(), format!("{:e}", self.mutation)),
            ("elitism".into(), self.elitism.to_string()),
            ("max_gen".into(), self.max_gen.to_string()),
            ("crossover".into(), "two-point-segment".into()),
            ("seeds".into(), self.seeds.to_string()),
            ("base_seed".into(), self.base_seed.to_string()),
            ("bins".into(), self.bins.to_string()),
            (
                "alpha_max_error".into(),
                format!("{:e}", self.alpha_max_error),
            ),
            (
                "padding".into(),
                match self.padding {
                    Padding::DropOut => "drop-out",
                    Padding::HoldFinal => "hold-final",
                }
                .into(),
            ),
            ("horizon".into(), self.horizon.to_string()),
            (
                "rng".into(),
                "chacha8 seed_from_u64(run_seed) streams init=0 selection=1 crossover=2 mutation=3"
                    .into(),
            ),
            ("run_seed".into(), "base_seed + run_index".into()),
            ("slot_convention".into(), qga::tasks::SLOT_CONVENTION.into()),
        ]
    }
}

/// Command-line overrides; `None` leaves the file/default value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<String>,
    pub npop: Option<usize>,
    pub depth: Option<u32>,
    pub half_range: Option<f64>,
    pub threshold: Option<f64>,
    pub mutation: Option<f64>,
    pub elitism: Option<usize>,
    pub max_gen: Option<usize>,
    pub seeds: Option<usize>,
    pub base_seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub bins: Option<usize>,
    pub horizon: Option<usize>,
}

impl Overrides {
    pub fn apply(self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            task, npop, depth, half_range, mutation, elitism, max_gen, seeds, base_seed, out,
            workers, bins, horizon
        );
        if let Some(h) = self.threshold {
            cfg.threshold = Some(h);
        }
    }
}
