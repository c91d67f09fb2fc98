use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde_json::json;

use super::config::{DataConfig, ExperimentConfig, SyntheticConfig};
use super::folds::{kfold_split, mean, rmse, std_dev, FoldPlan};
use super::report::{DatasetSummary, EvalReport, ReportRow, Timing, NO_REPRESENTATION, REPORT_VERSION};
use crate::encode::encode_dataset;
use crate::error::Result;
use crate::graph::{Graph, Metric};
use crate::ingest::{
    balance_dataset, generate_grid_graph, generate_synthetic_trips, load_graph, load_paths, load_trips, snap_and_route,
    PathDataset, SyntheticTipModel, TripRecord, TripSchema,
};
use crate::models::{grid_search_with_plan, train_baseline_area, train_baseline_overall, tune_area_radius, ModelSpec};
use crate::rng;

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub timings: Vec<Timing>,
}

/// Graph, routed dataset (balanced if configured) and how it was obtained.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(Graph, PathDataset, DatasetSummary)> {
    cfg.validate()?;
    let (graph, dataset, mut summary) = match (&cfg.data, &cfg.synthetic) {
        (Some(d), _) => from_files(d)?,
        (None, Some(s)) => from_synthetic(s)?,
        (None, None) => unreachable!("validated"),
    };
    let dataset = match &cfg.balance {
        Some(spec) => {
            let before = dataset.len();
            let out = balance_dataset(&dataset, spec)?;
            summary.removed_by_balancing = before - out.dataset.len();
            out.dataset
        }
        None => dataset,
    };
    summary.samples = dataset.len();
    summary.target_mean = if dataset.is_empty() { 0.0 } else { mean(&dataset.targets()) };
    Ok((graph, dataset, summary))
}

fn summary(source: &str, graph: &Graph) -> DatasetSummary {
    DatasetSummary {
        source: source.into(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        trips_read: 0,
        dropped_rows: 0,
        degenerate: 0,
        unreachable: 0,
        removed_by_balancing: 0,
        samples: 0,
        target_mean: 0.0,
    }
}

fn from_files(d: &DataConfig) -> Result<(Graph, PathDataset, DatasetSummary)> {
    let graph = load_graph(&d.nodes, &d.edges)?;
    let mut s = summary("files", &graph);
    if let Some(paths) = &d.paths {
        let dataset = load_paths(paths)?;
        let dataset = PathDataset::new(&graph, dataset.entries().to_vec())?;
        return Ok((graph, dataset, s));
    }
    let trips_path = d.trips.as_ref().expect("validated");
    let schema = d.schema.clone().unwrap_or_else(|| TripSchema::nyc(d.target));
    let loaded = load_trips(trips_path, &schema, graph.metric())?;
    s.trips_read = loaded.records.len() + loaded.dropped;
    s.dropped_rows = loaded.dropped;
    let snapped = snap_and_route(&graph, &loaded.records)?;
    s.degenerate = snapped.degenerate;
    s.unreachable = snapped.unreachable;
    Ok((graph, snapped.dataset, s))
}

fn from_synthetic(c: &SyntheticConfig) -> Result<(Graph, PathDataset, DatasetSummary)> {
    let graph = generate_grid_graph(c.width, c.height, c.spacing_m)?;
    let model = SyntheticTipModel {
        per_meter_rate: c.per_meter_rate,
        areas: c.areas.clone(),
        noise_sd: c.noise_sd,
        seed: c.seed,
    };
    let trips = generate_synthetic_trips(&graph, c.trips, &model)?;
    let mut s = summary("synthetic", &graph);
    s.trips_read = trips.len();
    let snapped = snap_and_route(&graph, &trips)?;
    s.degenerate = snapped.degenerate;
    s.unreachable = snapped.unreachable;
    Ok((graph, snapped.dataset, s))
}

/// Loads the data named by `cfg` and runs [`run_on_dataset`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let (graph, dataset, summary) = prepare_data(cfg)?;
    run_on_dataset(cfg, &graph, &dataset, summary)
}

/// Baselines first (overall, then area), then for every representation in
/// config order a forest row and an MLP row. All rows share one fold plan.
/// A model family that fails on every grid cell yields a row with an error
/// instead of aborting the run.
pub fn run_on_dataset(cfg: &ExperimentConfig, graph: &Graph, dataset: &PathDataset, summary: DatasetSummary) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let plan = kfold_split(dataset.len(), cfg.folds, cfg.seed)?;
    let trips: Vec<TripRecord> = dataset
        .entries()
        .iter()
        .map(|e| TripRecord {
            pickup: e.pickup,
            dropoff: e.dropoff,
            target: e.target,
        })
        .collect();

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut timed = |row: ReportRow, encode_seconds: f64, start: Instant, rows: &mut Vec<ReportRow>| {
        timings.push(Timing {
            representation: row.representation.clone(),
            model: row.model.clone(),
            encode_seconds,
            train_seconds: start.elapsed().as_secs_f64(),
        });
        rows.push(row);
    };

    if cfg.baselines.overall {
        let start = Instant::now();
        let folds = baseline_folds(&plan, &trips, |train, _| {
            let targets: Vec<f64> = train.iter().map(|t| t.target).collect();
            Ok((train_baseline_overall(&targets)?, json!(null)))
        })?;
        timed(baseline_row("baseline-overall", folds, serde_json::Value::Object(Default::default())), 0.0, start, &mut rows);
        info!("baseline-overall done");
    }
    if cfg.baselines.area {
        let start = Instant::now();
        let metric = graph.metric();
        let folds = baseline_folds(&plan, &trips, |train, fold| {
            let r = pick_radius(metric, train, cfg, fold)?;
            Ok((train_baseline_area(metric, train, r)?, json!(r)))
        })?;
        let radii: Vec<serde_json::Value> = folds.iter().map(|f| f.1.clone()).collect();
        timed(baseline_row("baseline-area", folds, json!({ "radius_m_per_fold": radii })), 0.0, start, &mut rows);
        info!("baseline-area done");
    }

    let families: Vec<(&str, Vec<ModelSpec>)> = [
        cfg.forest.as_ref().map(|g| ("forest", g.cells())),
        cfg.mlp.as_ref().map(|g| ("mlp", g.cells())),
    ]
    .into_iter()
    .flatten()
    .collect();

    for repr in &cfg.representations {
        let start = Instant::now();
        let matrix = encode_dataset(graph, dataset, repr)?;
        let encode_seconds = start.elapsed().as_secs_f64();
        let cost = matrix.cost();
        for (name, cells) in &families {
            let start = Instant::now();
            let mut row = ReportRow {
                representation: repr.to_string(),
                model: name.to_string(),
                mean_rmse: None,
                std_rmse: None,
                fold_rmse: Vec::new(),
                hyperparams: serde_json::Value::Null,
                grid_cells: cells.len(),
                cost: Some(cost.clone()),
                error: None,
            };
            match grid_search_with_plan(cells, &matrix, &plan) {
                Ok(res) => {
                    row.mean_rmse = Some(mean(&res.fold_rmse));
                    row.std_rmse = Some(std_dev(&res.fold_rmse));
                    row.fold_rmse = res.fold_rmse;
                    row.hyperparams = serde_json::to_value(&res.best)?;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            info!("{} / {}: {:?}", row.representation, row.model, row.mean_rmse);
            timed(row, encode_seconds, start, &mut rows);
        }
    }

    let report = EvalReport {
        version: REPORT_VERSION,
        config: cfg.clone(),
        dataset: summary,
        rows,
    };
    report.validate()?;
    Ok(ExperimentOutcome { report, timings })
}

type BaselineFold = (f64, serde_json::Value);

fn baseline_folds<F>(plan: &FoldPlan, trips: &[TripRecord], train: F) -> Result<Vec<BaselineFold>>
where
    F: Fn(&[TripRecord], usize) -> Result<(crate::models::BaselineModel, serde_json::Value)> + Sync,
{
    (0..plan.k())
        .into_par_iter()
        .map(|fold| {
            let tr: Vec<TripRecord> = plan.training(fold).into_iter().map(|i| trips[i]).collect();
            let va: Vec<TripRecord> = plan.validation(fold).into_iter().map(|i| trips[i]).collect();
            let (model, info) = train(&tr, fold)?;
            let actual: Vec<f64> = va.iter().map(|t| t.target).collect();
            Ok((rmse(&model.predict_trips(&va), &actual)?, info))
        })
        .collect()
}

/// Tunes the area radius on a seeded hold-out taken from the training fold.
fn pick_radius(metric: Metric, train: &[TripRecord], cfg: &ExperimentConfig, fold: usize) -> Result<f64> {
    if train.len() < 2 {
        return Ok(cfg.baselines.area_radii[0]);
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng::seeded(rng::derive_seed(cfg.seed, 0x5ad1_0000 + fold as u64)));
    let n_val = ((train.len() as f64 * cfg.baselines.tuning_fraction).round() as usize).clamp(1, train.len() - 1);
    let (val_idx, fit_idx) = order.split_at(n_val);
    let fit: Vec<TripRecord> = fit_idx.iter().map(|&i| train[i]).collect();
    let val: Vec<TripRecord> = val_idx.iter().map(|&i| train[i]).collect();
    tune_area_radius(metric, &fit, &val, &cfg.baselines.area_radii)
}

fn baseline_row(model: &str, folds: Vec<BaselineFold>, hyperparams: serde_json::Value) -> ReportRow {
    let fold_rmse: Vec<f64> = folds.into_iter().map(|f| f.0).collect();
    ReportRow {
        representation: NO_REPRESENTATION.into(),
        model: model.into(),
        mean_rmse: Some(mean(&fold_rmse)),
        std_rmse: Some(std_dev(&fold_rmse)),
        fold_rmse,
        hyperparams,
        grid_cells: 1,
        cost: None,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::Representation;

    fn base_cfg(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            "seed = 3\nfolds = 4\n{extra}\n[synthetic]\nwidth = 6\nheight = 6\nspacing_m = 100.0\ntrips = 240\nper_meter_rate = 0.002\nnoise_sd = 0.2\nseed = 5\n"
        ))
        .unwrap()
    }

    #[test]
    fn baselines_only() {
        let out = run_experiment(&base_cfg("")).unwrap();
        let r = &out.report;
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].model, "baseline-overall");
        assert_eq!(r.rows[1].model, "baseline-area");
        for row in &r.rows {
            assert_eq!(row.fold_rmse.len(), 4);
            assert!((mean(&row.fold_rmse) - row.mean_rmse.unwrap()).abs() < 1e-12);
        }
        assert_eq!(r.dataset.samples, 240);
        assert_eq!(out.timings.len(), 2);
    }

    #[test]
    fn model_rows_and_costs() {
        let cfg = base_cfg(
            "representations = [{ kind = \"origin_destination\" }, { kind = \"three_steps\" }]\n\
             [baselines]\noverall = true\narea = false\n\
             [forest]\nn_trees = [8]\nmax_depth = [0, 8]\nmin_samples_leaf = [1]\nfeature_fraction = 0.5\n\
             [mlp]\nhidden_layers = [1]\nndr = [4]\ndropout = [0.0]\nepochs = 10\n",
        );
        let out = run_experiment(&cfg).unwrap();
        let r = &out.report;
        let models: Vec<(&str, &str)> = r.rows.iter().map(|x| (x.representation.as_str(), x.model.as_str())).collect();
        assert_eq!(
            models,
            [
                ("-", "baseline-overall"),
                ("origin_destination", "forest"),
                ("origin_destination", "mlp"),
                ("three_steps", "forest"),
                ("three_steps", "mlp"),
            ]
        );
        let ts = r.row("three_steps", "forest").unwrap();
        assert_eq!(ts.cost.as_ref().unwrap().n_features, Representation::ThreeSteps.n_features(36));
        assert_eq!(ts.hyperparams["max_depth"], 8);
        assert!(ts.mean_rmse.unwrap() < r.rows[0].mean_rmse.unwrap());
    }

    #[test]
    fn repeatable() {
        let cfg = base_cfg(
            "representations = [{ kind = \"static\" }]\n[forest]\nn_trees = [6]\nmax_depth = [6]\nmin_samples_leaf = [2]\n",
        );
        let a = run_experiment(&cfg).unwrap().report.to_json().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_experiment(&cfg).unwrap()).report.to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_failure_is_recorded() {
        let cfg = base_cfg(
            "representations = [{ kind = \"static\" }]\n[baselines]\narea = false\n\
             [mlp]\nhidden_layers = [1]\nndr = [1]\ndropout = [0.0]\nlearning_rate = 100.0\nepochs = 5\nbatch_size = 1\n",
        );
        let out = run_experiment(&cfg).unwrap();
        let row = out.report.row("static", "mlp").unwrap();
        assert!(row.error.as_ref().unwrap().contains("diverged"));
        assert!(row.mean_rmse.is_none());
    }
}
