//! Baselines, random forest and MLP regressors, persistence and grid search.

mod baseline;
mod forest;
mod mlp;

use std::fs;
use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{FeatureMatrix, FeatureVector};
use crate::error::{Error, Result};
use crate::eval::{kfold_split, mean, rmse, FoldPlan};
use crate::ingest::TripRecord;

pub use baseline::{
    train_baseline_area, train_baseline_overall, tune_area_radius, BaselineKind, BaselineModel, DEFAULT_AREA_RADII,
};
pub use forest::{train_forest, Forest, ForestHyperparams, Tree, TreeNode};
pub use mlp::{layer_widths, train_mlp, Mlp, MlpHyperparams, MAX_HIDDEN_LAYERS};

/// An untrained model choice: algorithm plus hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ModelSpec {
    Forest(ForestHyperparams),
    Mlp(MlpHyperparams),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Forest(_) => "forest",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Forest(hp) => hp.validate(),
            ModelSpec::Mlp(hp) => hp.validate(),
        }
    }

    pub fn train(&self, x: &FeatureMatrix) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Forest(hp) => TrainedModel::Forest(train_forest(x, hp)?),
            ModelSpec::Mlp(hp) => TrainedModel::Mlp(train_mlp(x, hp)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainedModel {
    Forest(Forest),
    Mlp(Mlp),
    Baseline(BaselineModel),
}

const MODEL_FORMAT: &str = "urbanpath-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    n_features: Option<usize>,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Forest(_) => "forest",
            TrainedModel::Mlp(_) => "mlp",
            TrainedModel::Baseline(b) => match b.kind() {
                BaselineKind::Overall => "baseline-overall",
                BaselineKind::Area => "baseline-area",
            },
        }
    }

    /// Feature length the model reads; `None` for coordinate baselines.
    pub fn n_features(&self) -> Option<usize> {
        match self {
            TrainedModel::Forest(f) => Some(f.n_features()),
            TrainedModel::Mlp(m) => Some(m.n_features()),
            TrainedModel::Baseline(_) => None,
        }
    }

    pub fn predict_row(&self, row: &FeatureVector) -> Result<f64> {
        let expected = self
            .n_features()
            .ok_or_else(|| Error::InvalidArgument("baselines predict from trip coordinates, not features".into()))?;
        if row.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: row.len(),
            });
        }
        Ok(match self {
            TrainedModel::Forest(f) => f.predict_row(row),
            TrainedModel::Mlp(m) => m.predict_row(row),
            TrainedModel::Baseline(_) => unreachable!(),
        })
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if let Some(expected) = self.n_features() {
            if x.n_features() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: x.n_features(),
                });
            }
        }
        x.rows().par_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn predict_trips(&self, trips: &[TripRecord]) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Baseline(b) => Ok(b.predict_trips(trips)),
            _ => Err(Error::InvalidArgument(format!("{} models predict from encoded features", self.kind()))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            n_features: self.n_features(),
            model: self.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        let mut model = file.model;
        if model.n_features() != file.n_features {
            return Err(Error::InvalidArgument("model header does not match its parameters".into()));
        }
        match &mut model {
            TrainedModel::Baseline(b) => b.reindex(),
            TrainedModel::Forest(f) => {
                *f = Forest::from_trees(f.n_features(), f.trees().to_vec())?;
            }
            TrainedModel::Mlp(_) => {}
        }
        Ok(model)
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Validation RMSE of `spec` on each fold of `plan`, in fold order.
pub fn cross_validate(spec: &ModelSpec, x: &FeatureMatrix, plan: &FoldPlan) -> Result<Vec<f64>> {
    spec.validate()?;
    if plan.n_samples() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: plan.n_samples(),
        });
    }
    (0..plan.k())
        .into_par_iter()
        .map(|f| fold_rmse(spec, x, plan, f))
        .collect()
}

fn fold_rmse(spec: &ModelSpec, x: &FeatureMatrix, plan: &FoldPlan, fold: usize) -> Result<f64> {
    let train = x.subset(&plan.training(fold));
    let val = x.subset(&plan.validation(fold));
    let model = spec.train(&train)?;
    rmse(&model.predict(&val)?, val.targets())
}

/// Forest grid; cells enumerate `n_trees`, then `max_depth`, then
/// `min_samples_leaf`, with the last varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: usize,
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            n_trees: vec![50, 100, 200],
            max_depth: vec![8, 16, 32],
            min_samples_leaf: vec![1, 5, 10],
            min_samples_split: 2,
            feature_fraction: 1.0 / 3.0,
            seed: 0,
        }
    }
}

impl ForestGrid {
    pub fn cells(&self) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &min_samples_leaf in &self.min_samples_leaf {
                    out.push(ModelSpec::Forest(ForestHyperparams {
                        n_trees,
                        max_depth,
                        min_samples_split: self.min_samples_split,
                        min_samples_leaf,
                        feature_fraction: self.feature_fraction,
                        seed: self.seed,
                    }));
                }
            }
        }
        out
    }
}

/// MLP grid; cells enumerate `hidden_layers`, then `ndr`, then `dropout`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpGrid {
    pub hidden_layers: Vec<usize>,
    pub ndr: Vec<usize>,
    pub dropout: Vec<f64>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpGrid {
    fn default() -> Self {
        let base = MlpHyperparams::default();
        MlpGrid {
            hidden_layers: (1..=MAX_HIDDEN_LAYERS).collect(),
            ndr: vec![4, 8, 16, 32, 64],
            dropout: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            learning_rate: base.learning_rate,
            momentum: base.momentum,
            epochs: base.epochs,
            batch_size: base.batch_size,
            seed: base.seed,
        }
    }
}

impl MlpGrid {
    pub fn cells(&self) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for &hidden_layers in &self.hidden_layers {
            for &ndr in &self.ndr {
                for &dropout in &self.dropout {
                    out.push(ModelSpec::Mlp(MlpHyperparams {
                        hidden_layers,
                        ndr,
                        dropout,
                        learning_rate: self.learning_rate,
                        momentum: self.momentum,
                        epochs: self.epochs,
                        batch_size: self.batch_size,
                        seed: self.seed,
                    }));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_index: usize,
    pub best: ModelSpec,
    pub mean_rmse: f64,
    pub fold_rmse: Vec<f64>,
    /// Per cell: mean fold RMSE, or the training error message.
    pub cells: Vec<std::result::Result<f64, String>>,
}

pub fn grid_search(grid: &[ModelSpec], x: &FeatureMatrix, k_folds: usize, seed: u64) -> Result<GridResult> {
    grid_search_with_plan(grid, x, &kfold_split(x.len(), k_folds, seed)?)
}

/// Cross-validates every cell on the same folds and returns the lowest mean
/// RMSE; ties go to the earlier cell. Cells that fail to train are recorded
/// and skipped; if all fail, the first failure is returned.
pub fn grid_search_with_plan(grid: &[ModelSpec], x: &FeatureMatrix, plan: &FoldPlan) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyper-parameter grid".into()));
    }
    for cell in grid {
        cell.validate()?;
    }
    let runs: Vec<Result<Vec<f64>>> = grid.par_iter().map(|cell| cross_validate(cell, x, plan)).collect();

    let mut best: Option<(usize, f64)> = None;
    let mut cells = Vec::with_capacity(grid.len());
    for (i, run) in runs.iter().enumerate() {
        match run {
            Ok(folds) => {
                let m = mean(folds);
                if best.is_none_or(|(_, b)| m < b) {
                    best = Some((i, m));
                }
                cells.push(Ok(m));
            }
            Err(e) => cells.push(Err(e.to_string())),
        }
    }
    let Some((best_index, mean_rmse)) = best else {
        let first = runs.into_iter().find_map(|r| r.err()).expect("every cell failed");
        return Err(first);
    };
    Ok(GridResult {
        best_index,
        best: grid[best_index].clone(),
        mean_rmse,
        fold_rmse: runs[best_index].as_ref().expect("best cell succeeded").clone(),
        cells,
    })
}
