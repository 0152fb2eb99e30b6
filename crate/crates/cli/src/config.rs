use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wittenrate::ratescan::GridPolicy;
use wittenrate::{build_grid, Grid, PotentialSpec, Region, WellPartition};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Quadratic {
        alpha: f64,
    },
    QuarticDoubleWell {
        h: f64,
        a: f64,
    },
    GaussianBarrierWell {
        delta_u: f64,
        a: f64,
        kappa: f64,
    },
    /// Two-column CSV `x, U`; a relative path is taken from the config's directory.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: Option<usize>,
    #[serde(default = "one")]
    pub d: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: None,
            hi: None,
            n: None,
            d: 1,
        }
    }
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionConfig {
    Keyword(String),
    Explicit {
        barrier_x: f64,
        left_min: f64,
        right_min: f64,
        well: [f64; 2],
    },
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig::Keyword("auto".into())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Gibbs density restricted to the partition's well.
    #[default]
    LeftWell,
    /// Full Gibbs state.
    Gibbs,
    Gaussian {
        center: f64,
        width: f64,
    },
    /// One column `f` or two columns `x, f`, one row per grid node.
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default = "two")]
    pub k: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "one")]
    pub sample_every: usize,
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

/// A validated config: potential built, grid and partition resolved.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: RunConfig,
    pub spec: PotentialSpec,
    pub grid: Grid,
    /// `Some` when the partition resolved; `auto` on a single well leaves it
    /// empty together with the reason.
    pub partition: std::result::Result<WellPartition, String>,
    base: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn read_columns(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::Config(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}

impl Problem {
    pub fn new(mut config: RunConfig, base: &Path) -> Result<Self, CliError> {
        let spec = match &config.potential {
            PotentialConfig::Quadratic { alpha } => PotentialSpec::quadratic(*alpha, 1)?,
            PotentialConfig::QuarticDoubleWell { h, a } => PotentialSpec::quartic_double_well(*h, *a)?,
            PotentialConfig::GaussianBarrierWell { delta_u, a, kappa } => {
                PotentialSpec::gaussian_barrier_well(*delta_u, *a, *kappa)?
            }
            PotentialConfig::Tabulated { path } => {
                let rows = read_columns(&base.join(path))?;
                if rows.iter().any(|r| r.len() != 2) {
                    return Err(CliError::Config(
                        "tabulated potential needs exactly two columns x, U".into(),
                    ));
                }
                PotentialSpec::tabulated(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())?
            }
        }
        .with_dim(config.grid.d)?;
        if let Some(b) = config.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(CliError::Config(format!("beta must be positive, got {b}")));
            }
        }
        if config.sample_every == 0 || config.snapshot_every == Some(0) {
            return Err(CliError::Config(
                "sample_every and snapshot_every must be positive".into(),
            ));
        }
        let half = 8.0 * spec.well_scale();
        let lo = *config.grid.lo.get_or_insert(-half);
        let hi = *config.grid.hi.get_or_insert(half);
        let n = config.grid.n.unwrap_or(if config.grid.d == 1 { 1599 } else { 199 });
        let grid = build_grid(lo, hi, n, config.grid.d)?;
        let partition = match &config.partition {
            PartitionConfig::Keyword(k) if k == "auto" => {
                if config.grid.d == 1 {
                    WellPartition::auto(&spec, Region::new(lo, hi)?).map_err(|e| e.to_string())
                } else {
                    Err("partitions are one-dimensional".to_string())
                }
            }
            PartitionConfig::Keyword(k) => {
                return Err(CliError::Config(format!(
                    "partition must be \"auto\" or an object, got \"{k}\""
                )))
            }
            PartitionConfig::Explicit {
                barrier_x,
                left_min,
                right_min,
                well,
            } => Ok(WellPartition::new(
                *barrier_x,
                *left_min,
                *right_min,
                Region::new(well[0], well[1])?,
            )?),
        };
        if let Ok(p) = &partition {
            config.partition = PartitionConfig::Explicit {
                barrier_x: p.barrier_x,
                left_min: p.left_min,
                right_min: p.right_min,
                well: [p.well_region.lo, p.well_region.hi],
            };
        }
        Ok(Self {
            config,
            spec,
            grid,
            partition,
            base: base.to_path_buf(),
        })
    }

    pub fn beta(&self) -> Result<f64, CliError> {
        self.config
            .beta
            .ok_or_else(|| CliError::Config("this command needs beta (config or --beta)".into()))
    }

    pub fn partition(&self) -> Result<&WellPartition, CliError> {
        self.partition
            .as_ref()
            .map_err(|e| CliError::Config(format!("no well partition: {e}")))
    }

    pub fn require_1d(&self, what: &str) -> Result<(), CliError> {
        if self.grid.dim() != 1 {
            return Err(CliError::Config(format!("{what} needs a one-dimensional grid")));
        }
        Ok(())
    }

    /// Fixed grid when `n` is given, otherwise `n` grows with `βΔU`.
    pub fn grid_policy(&self) -> GridPolicy {
        let (lo, hi) = (self.grid.lo(), self.grid.hi());
        match self.config.grid.n {
            Some(n) => GridPolicy::Fixed { lo, hi, n },
            None => match GridPolicy::default_for(&self.spec) {
                GridPolicy::Scaled { min_n, per_unit, .. } => GridPolicy::Scaled {
                    lo,
                    hi,
                    min_n,
                    per_unit,
                },
                fixed => fixed,
            },
        }
    }

    pub fn initial_condition(&self, ctx: &wittenrate::WittenContext) -> Result<Vec<f64>, CliError> {
        use wittenrate::evolution::{gaussian_bump, gibbs_limit, left_well_gibbs};
        Ok(match &self.config.initial {
            InitialConfig::LeftWell => left_well_gibbs(ctx, &self.grid, self.partition()?)?,
            InitialConfig::Gibbs => {
                let uniform = vec![1.0 / (self.grid.spacing() * self.grid.len() as f64); self.grid.len()];
                gibbs_limit(ctx, &self.grid, &uniform)?
            }
            InitialConfig::Gaussian { center, width } => gaussian_bump(&self.grid, *center, *width)?,
            InitialConfig::Csv { path } => {
                let rows = read_columns(&self.base.join(path))?;
                let f: Vec<f64> = rows.iter().filter_map(|r| r.last().copied()).collect();
                if f.len() != self.grid.len() || rows.iter().any(|r| r.is_empty() || r.len() > 2) {
                    return Err(CliError::Config(format!(
                        "initial CSV needs {} rows of `f` or `x, f`, got {}",
                        self.grid.len(),
                        rows.len()
                    )));
                }
                f
            }
        })
    }
}
