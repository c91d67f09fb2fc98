use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;

use urbanpath::encode::{encode_dataset, CostReport, FeatureMatrix, Representation};
use urbanpath::eval::{
    emit_report, prepare_data, read_report, run_on_dataset, write_timings, BaselineConfig, DataConfig, EvalReport,
    ExperimentConfig, DEFAULT_FOLDS,
};
use urbanpath::graph::{Coordinate, Graph, Path};
use urbanpath::ingest::{
    balance_dataset, generate_grid_graph, generate_synthetic_trips, load_graph, load_paths, load_trips, snap_and_route,
    write_graph, write_paths, write_trips, AreaEffect, BalanceSpec, PathDataset, SyntheticTipModel, TargetColumn,
    TripRecord, TripSchema,
};
use urbanpath::models::{
    train_baseline_area, train_baseline_overall, tune_area_radius, ForestGrid, ForestHyperparams, MlpGrid,
    MlpHyperparams, ModelSpec, TrainedModel, DEFAULT_AREA_RADII,
};
use urbanpath::{rng, Error};

#[derive(Parser, Debug)]
#[command(name = "urbanpath", version, about = "Encode road-network paths and compare regressors on them")]
pub struct Cli {
    /// More progress output on stderr (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a node/edge file pair and write it back normalized.
    GraphBuild {
        #[command(flatten)]
        graph: GraphArgs,
        /// Output directory for nodes.csv and edges.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a planar grid graph.
    SynthGraph {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        /// Distance between neighboring nodes, meters.
        #[arg(long, default_value_t = 100.0)]
        spacing: f64,
        /// Output directory for nodes.csv and edges.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw synthetic trips on a graph.
    SynthTrips {
        #[command(flatten)]
        graph: GraphArgs,
        /// Number of trips.
        #[arg(long)]
        n: usize,
        /// Dollars per meter of route.
        #[arg(long, default_value_t = 0.0015)]
        rate: f64,
        #[arg(long, default_value_t = 0.5)]
        noise_sd: f64,
        /// Bonus zone `x,y,radius_m,bonus`; repeatable.
        #[arg(long = "area", value_parser = parse_area)]
        areas: Vec<AreaEffect>,
        /// Column the target is written to.
        #[arg(long, value_enum, default_value_t = Target::Tip)]
        target: Target,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Snap trips to the graph and route them into a paths file.
    Snap {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        trips: PathBuf,
        #[arg(long, value_enum, default_value_t = Target::Tip)]
        target: Target,
        #[arg(long)]
        out: PathBuf,
    },
    /// Down-sample a paths file to equal counts per target bin.
    Balance {
        #[arg(long)]
        paths: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        bin_width: f64,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode paths into the sparse feature format.
    Encode {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        repr: ReprArgs,
        /// Paths file to encode.
        #[arg(long, conflicts_with = "path", required_unless_present = "path")]
        paths: Option<PathBuf>,
        /// A single path as comma-separated node ids.
        #[arg(long)]
        path: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model on a paths file and save it as JSON.
    Train {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        paths: PathBuf,
        #[command(flatten)]
        repr: OptReprArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate one model on a paths file.
    Evaluate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        paths: PathBuf,
        #[command(flatten)]
        repr: OptReprArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        /// Directory for report.json, summary.txt and plot.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full comparison experiment from a TOML config.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Report directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feature count and sparsity of each representation on a paths file.
    Cost {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        paths: PathBuf,
        /// Profile one representation; all six when omitted.
        #[arg(long)]
        repr: Option<String>,
        #[arg(long = "S", default_value_t = 3)]
        s: usize,
        #[arg(long = "NS", default_value_t = 1)]
        ns: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Also write the profile as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a saved report and optionally re-emit its files.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[arg(long = "graph-nodes")]
    nodes: PathBuf,
    #[arg(long = "graph-edges")]
    edges: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReprArgs {
    /// static, temporal_subpaths, origin_destination, three_steps, k_neighbors or three_steps_kn.
    #[arg(long)]
    repr: String,
    /// Maximum sub-paths (temporal_subpaths).
    #[arg(long = "S")]
    s: Option<usize>,
    /// Nodes per sub-path (temporal_subpaths).
    #[arg(long = "NS")]
    ns: Option<usize>,
    /// Neighborhood hops (k_neighbors, three_steps_kn).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OptReprArgs {
    /// Representation; required for forest and mlp.
    #[arg(long)]
    repr: Option<String>,
    #[arg(long = "S")]
    s: Option<usize>,
    #[arg(long = "NS")]
    ns: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Tip,
    Fare,
}

impl From<Target> for TargetColumn {
    fn from(t: Target) -> Self {
        match t {
            Target::Tip => TargetColumn::Tip,
            Target::Fare => TargetColumn::Fare,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Forest,
    Mlp,
    BaselineOverall,
    BaselineArea,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, help_heading = "Forest")]
    n_trees: Option<usize>,
    #[arg(long, help_heading = "Forest")]
    max_depth: Option<usize>,
    #[arg(long, help_heading = "Forest")]
    min_samples_split: Option<usize>,
    #[arg(long, help_heading = "Forest")]
    min_samples_leaf: Option<usize>,
    #[arg(long, help_heading = "Forest")]
    feature_fraction: Option<f64>,
    #[arg(long, help_heading = "MLP")]
    hidden_layers: Option<usize>,
    #[arg(long, help_heading = "MLP")]
    ndr: Option<usize>,
    #[arg(long, help_heading = "MLP")]
    dropout: Option<f64>,
    #[arg(long, help_heading = "MLP")]
    learning_rate: Option<f64>,
    #[arg(long, help_heading = "MLP")]
    momentum: Option<f64>,
    #[arg(long, help_heading = "MLP")]
    epochs: Option<usize>,
    #[arg(long, help_heading = "MLP")]
    batch_size: Option<usize>,
    /// Area baseline radius in meters; tuned on a hold-out when omitted.
    #[arg(long, help_heading = "Area baseline")]
    radius: Option<f64>,
}

impl ModelArgs {
    fn forest(&self) -> ForestHyperparams {
        let d = ForestHyperparams::default();
        ForestHyperparams {
            n_trees: self.n_trees.unwrap_or(d.n_trees),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            min_samples_split: self.min_samples_split.unwrap_or(d.min_samples_split),
            min_samples_leaf: self.min_samples_leaf.unwrap_or(d.min_samples_leaf),
            feature_fraction: self.feature_fraction.unwrap_or(d.feature_fraction),
            seed: self.seed,
        }
    }

    fn mlp(&self) -> MlpHyperparams {
        let d = MlpHyperparams::default();
        MlpHyperparams {
            hidden_layers: self.hidden_layers.unwrap_or(d.hidden_layers),
            ndr: self.ndr.unwrap_or(d.ndr),
            dropout: self.dropout.unwrap_or(d.dropout),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            momentum: self.momentum.unwrap_or(d.momentum),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed,
        }
    }

    fn spec(&self) -> Result<Option<ModelSpec>, Failure> {
        let spec = match self.model {
            ModelKind::Forest => ModelSpec::Forest(self.forest()),
            ModelKind::Mlp => ModelSpec::Mlp(self.mlp()),
            ModelKind::BaselineOverall | ModelKind::BaselineArea => return Ok(None),
        };
        spec.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(Some(spec))
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn training(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_training_failure() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn io_failure(path: &FsPath, e: std::io::Error) -> Failure {
    Failure::from(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &FsPath) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn parse_area(s: &str) -> Result<AreaEffect, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("invalid number `{p}`")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, radius_m, bonus] => Ok(AreaEffect {
            center: Coordinate::new(x, y),
            radius_m,
            bonus,
        }),
        _ => Err("expected x,y,radius_m,bonus".into()),
    }
}

fn representation(kind: &str, s: Option<usize>, ns: Option<usize>, k: Option<usize>) -> Result<Representation, Failure> {
    Representation::from_parts(kind, s, ns, k).map_err(|e| Failure::usage(e.to_string()))
}

impl ReprArgs {
    fn get(&self) -> Result<Representation, Failure> {
        representation(&self.repr, self.s, self.ns, self.k)
    }
}

impl OptReprArgs {
    fn get(&self) -> Result<Option<Representation>, Failure> {
        self.repr.as_deref().map(|r| representation(r, self.s, self.ns, self.k)).transpose()
    }
}

fn load(graph: &GraphArgs) -> Result<Graph, Failure> {
    Ok(load_graph(&graph.nodes, &graph.edges)?)
}

fn dataset_for(graph: &Graph, paths: &FsPath) -> Result<PathDataset, Failure> {
    let d = load_paths(paths)?;
    if d.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            actual: d.node_count(),
        }
        .into());
    }
    Ok(d)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn run(cli: Cli) -> CmdResult {
    let workers = cli.workers.map(usize::from);
    match cli.command {
        Command::Compare { config, out } => compare(&config, out, workers),
        other => with_workers(workers, move || dispatch(other))?,
    }
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::GraphBuild { graph, out } => {
            let g = load(&graph)?;
            create_dir(&out)?;
            write_graph(&g, &out.join("nodes.csv"), &out.join("edges.csv"))?;
            println!("nodes {} edges {} metric {:?}", g.node_count(), g.edge_count(), g.metric());
            Ok(())
        }
        Command::SynthGraph { width, height, spacing, out } => {
            let g = generate_grid_graph(width, height, spacing).map_err(|e| Failure::usage(e.to_string()))?;
            create_dir(&out)?;
            write_graph(&g, &out.join("nodes.csv"), &out.join("edges.csv"))?;
            println!("nodes {} edges {}", g.node_count(), g.edge_count());
            Ok(())
        }
        Command::SynthTrips {
            graph,
            n,
            rate,
            noise_sd,
            areas,
            target,
            seed,
            out,
        } => {
            let g = load(&graph)?;
            let model = SyntheticTipModel {
                per_meter_rate: rate,
                areas,
                noise_sd,
                seed,
            };
            let trips = generate_synthetic_trips(&g, n, &model)?;
            write_trips(&out, &trips, &TripSchema::nyc(target.into()))?;
            println!("trips {}", trips.len());
            Ok(())
        }
        Command::Snap { graph, trips, target, out } => {
            let g = load(&graph)?;
            let loaded = load_trips(&trips, &TripSchema::nyc(target.into()), g.metric())?;
            let snapped = snap_and_route(&g, &loaded.records)?;
            write_paths(&out, &snapped.dataset)?;
            println!(
                "kept {} dropped {} degenerate {} unreachable {}",
                snapped.dataset.len(),
                loaded.dropped,
                snapped.degenerate,
                snapped.unreachable
            );
            Ok(())
        }
        Command::Balance {
            paths,
            bin_width,
            lo,
            hi,
            seed,
            out,
        } => {
            let d = load_paths(&paths)?;
            let spec = BalanceSpec { bin_width, lo, hi, seed };
            let b = balance_dataset(&d, &spec)?;
            write_paths(&out, &b.dataset)?;
            println!(
                "kept {} out_of_range {} bins {} per_bin {}",
                b.dataset.len(),
                b.out_of_range,
                b.non_empty_bins,
                b.per_bin
            );
            Ok(())
        }
        Command::Encode {
            graph,
            repr,
            paths,
            path,
            out,
        } => encode(&graph, &repr, paths.as_deref(), path.as_deref(), out.as_deref()),
        Command::Train {
            graph,
            paths,
            repr,
            model,
            out,
        } => train(&graph, &paths, &repr, &model, &out),
        Command::Evaluate {
            graph,
            paths,
            repr,
            model,
            folds,
            out,
        } => evaluate(graph, paths, &repr, &model, folds, out),
        Command::Cost {
            graph,
            paths,
            repr,
            s,
            ns,
            k,
            out,
        } => cost(&graph, &paths, repr.as_deref(), s, ns, k, out.as_deref()),
        Command::Report { input, out } => {
            let report = read_report(&input)?;
            print!("{}", report.summary_table());
            if let Some(dir) = out {
                emit_report(&report, &dir)?;
            }
            Ok(())
        }
        Command::Compare { .. } => unreachable!("handled in run"),
    }
}

fn write_or_print(out: Option<&FsPath>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| io_failure(FsPath::new("<stdout>"), e))
        }
    }
}

fn encode(graph: &GraphArgs, repr: &ReprArgs, paths: Option<&FsPath>, path: Option<&str>, out: Option<&FsPath>) -> CmdResult {
    let repr = repr.get()?;
    let g = load(graph)?;
    let matrix = match (paths, path) {
        (Some(p), _) => encode_dataset(&g, &dataset_for(&g, p)?, &repr)?,
        (None, Some(ids)) => {
            let nodes = ids
                .split(',')
                .map(|id| {
                    let id = id.trim();
                    g.index_of(id).ok_or_else(|| Failure::from(Error::UnknownNode(id.to_string())))
                })
                .collect::<Result<Vec<usize>, Failure>>()?;
            let p = Path::new(nodes)?;
            let row = repr.encode(&g, &p)?;
            FeatureMatrix::new(repr, repr.n_features(g.node_count()), vec![row], vec![0.0])?
        }
        (None, None) => return Err(Failure::usage("give --paths or --path")),
    };
    write_or_print(out, &matrix.to_text())
}

fn trips_of(d: &PathDataset) -> Vec<TripRecord> {
    d.entries()
        .iter()
        .map(|e| TripRecord {
            pickup: e.pickup,
            dropoff: e.dropoff,
            target: e.target,
        })
        .collect()
}

fn train(graph: &GraphArgs, paths: &FsPath, repr: &OptReprArgs, model: &ModelArgs, out: &FsPath) -> CmdResult {
    let repr = repr.get()?;
    let spec = model.spec()?;
    let g = load(graph)?;
    let d = dataset_for(&g, paths)?;
    let trained = match (spec, model.model) {
        (Some(spec), _) => {
            let repr = repr.ok_or_else(|| Failure::usage(format!("--model {} needs --repr", spec.name())))?;
            let matrix = encode_dataset(&g, &d, &repr)?;
            spec.train(&matrix)?
        }
        (None, ModelKind::BaselineOverall) => TrainedModel::Baseline(train_baseline_overall(&d.targets())?),
        (None, _) => {
            let trips = trips_of(&d);
            let radius = match model.radius {
                Some(r) => r,
                None => {
                    if trips.len() < 2 {
                        return Err(Error::InvalidArgument("radius tuning needs at least two trips".into()).into());
                    }
                    let mut order: Vec<usize> = (0..trips.len()).collect();
                    order.shuffle(&mut rng::seeded(model.seed));
                    let n_val = (trips.len() / 5).max(1);
                    let val: Vec<TripRecord> = order[..n_val].iter().map(|&i| trips[i]).collect();
                    let fit: Vec<TripRecord> = order[n_val..].iter().map(|&i| trips[i]).collect();
                    tune_area_radius(g.metric(), &fit, &val, &DEFAULT_AREA_RADII)?
                }
            };
            TrainedModel::Baseline(train_baseline_area(g.metric(), &trips, radius)?)
        }
    };
    trained.save(out)?;
    println!("trained {} on {} samples", trained.kind(), d.len());
    Ok(())
}

fn evaluate(graph: GraphArgs, paths: PathBuf, repr: &OptReprArgs, model: &ModelArgs, folds: usize, out: Option<PathBuf>) -> CmdResult {
    let repr = repr.get()?;
    let spec = model.spec()?;
    let (forest, mlp) = match &spec {
        Some(ModelSpec::Forest(hp)) => (Some(single_forest(hp)), None),
        Some(ModelSpec::Mlp(hp)) => (None, Some(single_mlp(hp))),
        None => (None, None),
    };
    let representations = match (&spec, repr) {
        (Some(_), Some(r)) => vec![r],
        (Some(s), None) => return Err(Failure::usage(format!("--model {} needs --repr", s.name()))),
        (None, _) => vec![],
    };
    let baselines = BaselineConfig {
        overall: model.model == ModelKind::BaselineOverall,
        area: model.model == ModelKind::BaselineArea,
        area_radii: model.radius.map_or_else(|| DEFAULT_AREA_RADII.to_vec(), |r| vec![r]),
        ..BaselineConfig::default()
    };
    let cfg = ExperimentConfig {
        folds,
        seed: model.seed,
        workers: None,
        output: None,
        representations,
        data: Some(DataConfig {
            nodes: graph.nodes,
            edges: graph.edges,
            trips: None,
            paths: Some(paths),
            target: TargetColumn::default(),
            schema: None,
        }),
        synthetic: None,
        balance: None,
        baselines,
        forest,
        mlp,
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let (g, d, summary) = prepare_data(&cfg)?;
    let outcome = run_on_dataset(&cfg, &g, &d, summary)?;
    finish(&outcome.report, out.as_deref())?;
    Ok(())
}

fn single_forest(hp: &ForestHyperparams) -> ForestGrid {
    ForestGrid {
        n_trees: vec![hp.n_trees],
        max_depth: vec![hp.max_depth],
        min_samples_leaf: vec![hp.min_samples_leaf],
        min_samples_split: hp.min_samples_split,
        feature_fraction: hp.feature_fraction,
        seed: hp.seed,
    }
}

fn single_mlp(hp: &MlpHyperparams) -> MlpGrid {
    MlpGrid {
        hidden_layers: vec![hp.hidden_layers],
        ndr: vec![hp.ndr],
        dropout: vec![hp.dropout],
        learning_rate: hp.learning_rate,
        momentum: hp.momentum,
        epochs: hp.epochs,
        batch_size: hp.batch_size,
        seed: hp.seed,
    }
}

/// Prints the summary, writes the report files, and turns failed rows into a
/// training-failure exit.
fn finish(report: &EvalReport, out: Option<&FsPath>) -> CmdResult {
    print!("{}", report.summary_table());
    if let Some(dir) = out {
        emit_report(report, dir)?;
    }
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| format!("{} / {}", r.representation, r.model))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::training(format!("training failed for {}", failed.join(", "))))
    }
}

fn compare(config: &FsPath, out: Option<PathBuf>, workers: Option<usize>) -> CmdResult {
    let cfg = ExperimentConfig::load(config)?;
    let out = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("report"));
    let outcome = with_workers(workers.or(cfg.workers), || urbanpath::eval::run_experiment(&cfg))??;
    create_dir(&out)?;
    write_timings(&outcome.timings, &out.join("timings.tsv"))?;
    finish(&outcome.report, Some(&out))
}

fn cost(graph: &GraphArgs, paths: &FsPath, repr: Option<&str>, s: usize, ns: usize, k: usize, out: Option<&FsPath>) -> CmdResult {
    let reprs: Vec<Representation> = match repr {
        Some(kind) => vec![representation(kind, Some(s), Some(ns), Some(k))?],
        None => Representation::KINDS
            .iter()
            .map(|kind| representation(kind, Some(s), Some(ns), Some(k)))
            .collect::<Result<_, _>>()?,
    };
    let g = load(graph)?;
    let d = dataset_for(&g, paths)?;
    let reports: Vec<CostReport> = reprs
        .iter()
        .map(|r| encode_dataset(&g, &d, r).map(|m| m.cost()))
        .collect::<Result<_, _>>()?;
    let width = reports.iter().map(|c| c.representation.len()).max().unwrap_or(0).max("representation".len());
    println!("{:<width$}  {:>10}  {:>6}  {:>12}  {:>8}  {:>8}", "representation", "n_features", "rows", "nonzeros", "mean_nnz", "max_nnz");
    for c in &reports {
        println!(
            "{:<width$}  {:>10}  {:>6}  {:>12}  {:>8.2}  {:>8}",
            c.representation, c.n_features, c.rows, c.total_nonzeros, c.mean_nonzeros, c.max_nonzeros
        );
    }
    if let Some(p) = out {
        let json = serde_json::to_string_pretty(&reports).map_err(Error::from)?;
        fs::write(p, json + "\n").map_err(|e| io_failure(p, e))?;
    }
    Ok(())
}
