use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encode::Representation;
use crate::error::{Error, Result};
use crate::ingest::{AreaEffect, BalanceSpec, TargetColumn, TripSchema};
use crate::models::{ForestGrid, MlpGrid, DEFAULT_AREA_RADII};

pub const DEFAULT_FOLDS: usize = 20;

/// One representation-comparison experiment, read from TOML.
///
/// ```toml
/// seed = 7
/// folds = 5
/// representations = [{ kind = "static" }, { kind = "three_steps_kn", k = 2 }]
///
/// [synthetic]
/// width = 15
/// height = 15
/// spacing_m = 150.0
/// trips = 2000
/// per_meter_rate = 0.0015
/// noise_sd = 0.5
///
/// [balance]
/// bin_width = 0.5
/// lo = 0.0
/// hi = 8.0
///
/// [forest]
/// n_trees = [50]
/// max_depth = [16]
/// min_samples_leaf = [1, 5]
/// ```
///
/// Exactly one of `[data]` (files) and `[synthetic]` must be present.
/// `workers` and `output` only steer the run and are left out of reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub representations: Vec<Representation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceSpec>,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forest: Option<ForestGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpGrid>,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

/// Graph and trip files. Give `trips` (raw, snapped during the run) or
/// `paths` (already snapped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trips: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<PathBuf>,
    #[serde(default)]
    pub target: TargetColumn,
    /// Column names; defaults to the NYC taxi columns for `target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<TripSchema>,
}

/// Planar grid city with synthetic trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub width: usize,
    pub height: usize,
    pub spacing_m: f64,
    pub trips: usize,
    pub per_meter_rate: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub areas: Vec<AreaEffect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub overall: bool,
    pub area: bool,
    /// Candidate radii for the area baseline, meters.
    pub area_radii: Vec<f64>,
    /// Share of each training fold held out to pick the area radius.
    pub tuning_fraction: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            overall: true,
            area: true,
            area_radii: DEFAULT_AREA_RADII.to_vec(),
            tuning_fraction: 0.2,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths resolve against its directory.
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(FsPath::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = cfg.data.as_mut() {
            resolve(&mut d.nodes);
            resolve(&mut d.edges);
            d.trips.as_mut().map(resolve);
            d.paths.as_mut().map(resolve);
        }
        cfg.output.as_mut().map(resolve);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match (&self.data, &self.synthetic) {
            (Some(_), Some(_)) => return bad("give either [data] or [synthetic], not both"),
            (None, None) => return bad("missing [data] or [synthetic] section"),
            (Some(d), None) if d.trips.is_some() == d.paths.is_some() => {
                return bad("[data] needs exactly one of `trips` and `paths`")
            }
            _ => {}
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        for r in &self.representations {
            r.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let has_models = self.forest.is_some() || self.mlp.is_some();
        if has_models && self.representations.is_empty() {
            return bad("models are configured but no representations");
        }
        if !self.representations.is_empty() && !has_models {
            return bad("representations are configured but no [forest] or [mlp] grid");
        }
        if !has_models && !self.baselines.overall && !self.baselines.area {
            return bad("nothing to evaluate");
        }
        if let Some(f) = &self.forest {
            if f.cells().is_empty() {
                return bad("[forest] grid has no cells");
            }
        }
        if let Some(m) = &self.mlp {
            if m.cells().is_empty() {
                return bad("[mlp] grid has no cells");
            }
        }
        if self.baselines.area {
            if self.baselines.area_radii.is_empty() {
                return bad("area baseline needs at least one radius");
            }
            if !(self.baselines.tuning_fraction > 0.0 && self.baselines.tuning_fraction < 1.0) {
                return bad("tuning_fraction must be in (0, 1)");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[synthetic]\nwidth = 4\nheight = 4\nspacing_m = 100.0\ntrips = 50\nper_meter_rate = 0.001\n";

    #[test]
    fn minimal_baseline_config() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.folds, DEFAULT_FOLDS);
        assert!(cfg.baselines.overall && cfg.baselines.area);
        assert!(cfg.representations.is_empty());
    }

    #[test]
    fn full_config() {
        let text = r#"
seed = 3
folds = 5
workers = 2
representations = [
  { kind = "static" },
  { kind = "temporal_subpaths", S = 3, NS = 2 },
  { kind = "three_steps_kn", k = 2 },
]

[synthetic]
width = 5
height = 5
spacing_m = 100.0
trips = 300
per_meter_rate = 0.0015
noise_sd = 0.5
seed = 9
areas = [{ center = { x = 0.0, y = 0.0 }, radius_m = 150.0, bonus = 2.0 }]

[balance]
bin_width = 0.5
lo = 0.0
hi = 6.0

[baselines]
area_radii = [100.0, 500.0]

[forest]
n_trees = [10]
max_depth = [4, 8]
min_samples_leaf = [1]

[mlp]
hidden_layers = [1]
ndr = [4]
dropout = [0.0]
epochs = 5
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.representations.len(), 3);
        assert_eq!(cfg.representations[1], Representation::TemporalSubpaths { subpaths: 3, nodes_per_subpath: 2 });
        assert_eq!(cfg.forest.as_ref().unwrap().cells().len(), 2);
        assert_eq!(cfg.synthetic.as_ref().unwrap().areas.len(), 1);
        assert_eq!(cfg.workers, Some(2));
        // The echo drops run-steering fields and parses back.
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(!json.contains("workers"));
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ExperimentConfig { workers: None, ..cfg });
    }

    #[test]
    fn rejects_inconsistent_configs() {
        for text in [
            "folds = 5\n",
            &format!("folds = 1\n{MINIMAL}"),
            &format!("bogus = 1\n{MINIMAL}"),
            &format!("representations = [{{ kind = \"static\" }}]\n{MINIMAL}"),
            &format!("representations = [{{ kind = \"k_neighbors\", k = 0 }}]\n{MINIMAL}\n[forest]\nn_trees=[1]\n"),
            &format!("{MINIMAL}\n[forest]\nn_trees = [5]\n"),
            &format!("{MINIMAL}\n[baselines]\noverall = false\narea = false\n"),
            &format!("{MINIMAL}\n[data]\nnodes = \"n\"\nedges = \"e\"\ntrips = \"t\"\n"),
            "[data]\nnodes = \"n\"\nedges = \"e\"\n",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.toml");
        fs::write(&p, "[data]\nnodes = \"g/nodes.csv\"\nedges = \"/abs/edges.csv\"\npaths = \"paths.csv\"\ntarget = \"fare\"\n").unwrap();
        let cfg = ExperimentConfig::load(&p).unwrap();
        let d = cfg.data.unwrap();
        assert_eq!(d.nodes, dir.path().join("g/nodes.csv"));
        assert_eq!(d.edges, PathBuf::from("/abs/edges.csv"));
        assert_eq!(d.paths.unwrap(), dir.path().join("paths.csv"));
        assert_eq!(d.target, TargetColumn::Fare);
    }
}
