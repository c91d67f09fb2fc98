use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{encode_path, FeatureVector, Representation};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ingest::PathDataset;

/// Encoded rows with their targets. All rows share `n_features`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    repr: Representation,
    n_features: usize,
    rows: Vec<FeatureVector>,
    targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(repr: Representation, n_features: usize, rows: Vec<FeatureVector>, targets: Vec<f64>) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::InvalidArgument(format!("{} rows but {} targets", rows.len(), targets.len())));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n_features) {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: r.len(),
            });
        }
        Ok(FeatureMatrix {
            repr,
            n_features,
            rows,
            targets,
        })
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            repr: self.repr,
            n_features: self.n_features,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    pub fn cost(&self) -> CostReport {
        let nnz: Vec<usize> = self.rows.iter().map(FeatureVector::nnz).collect();
        let total: usize = nnz.iter().sum();
        CostReport {
            representation: self.repr.to_string(),
            n_features: self.n_features,
            rows: self.rows.len(),
            total_nonzeros: total,
            mean_nonzeros: if nnz.is_empty() { 0.0 } else { total as f64 / nnz.len() as f64 },
            max_nonzeros: nnz.iter().copied().max().unwrap_or(0),
        }
    }

    /// Sparse text form: `#n_features=<int> repr=<kind> [params]`, then one
    /// `target idx:1 idx:1 ...` line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("#n_features={} repr={}", self.n_features, self.repr.kind());
        match self.repr {
            Representation::TemporalSubpaths {
                subpaths,
                nodes_per_subpath,
            } => write!(out, " S={subpaths} NS={nodes_per_subpath}").unwrap(),
            Representation::KNeighbors { k } | Representation::ThreeStepsKn { k } => write!(out, " k={k}").unwrap(),
            _ => {}
        }
        out.push('\n');
        for (row, target) in self.rows.iter().zip(&self.targets) {
            write!(out, "{target}").unwrap();
            for i in row.indices() {
                write!(out, " {i}:1").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let origin = FsPath::new("<matrix>");
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, 1, "empty matrix"))?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::parse(origin, 1, "missing `#n_features=` header"))?;
        let mut params: HashMap<&str, &str> = HashMap::new();
        for token in header.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, 1, format!("malformed header token `{token}`")))?;
            params.insert(k, v);
        }
        let num = |key: &str| -> Result<Option<usize>> {
            params
                .get(key)
                .map(|v| v.parse::<usize>().map_err(|_| Error::parse(origin, 1, format!("invalid {key} `{v}`"))))
                .transpose()
        };
        let n_features = num("n_features")?.ok_or_else(|| Error::parse(origin, 1, "missing n_features"))?;
        let kind = params.get("repr").ok_or_else(|| Error::parse(origin, 1, "missing repr"))?;
        let repr = Representation::from_parts(kind, num("S")?, num("NS")?, num("k")?)?;

        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let target: f64 = fields
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(origin, line_no, "invalid target"))?;
            let mut indices = Vec::new();
            for f in fields {
                let idx = f
                    .strip_suffix(":1")
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(origin, line_no, format!("invalid entry `{f}`")))?;
                if indices.last().is_some_and(|&prev| prev >= idx) {
                    return Err(Error::parse(origin, line_no, "indices must be strictly increasing"));
                }
                indices.push(idx);
            }
            rows.push(FeatureVector::from_indices(n_features, indices).map_err(|e| Error::parse(origin, line_no, e.to_string()))?);
            targets.push(target);
        }
        FeatureMatrix::new(repr, n_features, rows, targets)
    }

    pub fn write(&self, path: &FsPath) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }
}

/// Encodes every entry of `dataset`; row `i` is entry `i`. Runs on the current
/// rayon pool.
pub fn encode_dataset(graph: &Graph, dataset: &PathDataset, repr: &Representation) -> Result<FeatureMatrix> {
    repr.validate()?;
    if dataset.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            actual: dataset.node_count(),
        });
    }
    for e in dataset.entries() {
        graph.check_path(&e.path)?;
    }

    let mut cache = HashMap::new();
    if let Representation::KNeighbors { k } | Representation::ThreeStepsKn { k } = *repr {
        let mut bases: Vec<usize> = dataset
            .entries()
            .iter()
            .flat_map(|e| [e.path.origin(), e.path.destination()])
            .collect();
        bases.sort_unstable();
        bases.dedup();
        let balls: Vec<Vec<usize>> = bases
            .par_iter()
            .map(|&b| graph.k_neighborhood(b, k))
            .collect::<Result<_>>()?;
        cache = bases.into_iter().zip(balls).collect();
    }

    let rows: Vec<FeatureVector> = dataset
        .entries()
        .par_iter()
        .map(|e| encode_path(repr, graph, &e.path, &cache))
        .collect();
    FeatureMatrix::new(*repr, repr.n_features(graph.node_count()), rows, dataset.targets())
}

/// Size and sparsity of a dataset under one representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub representation: String,
    pub n_features: usize,
    pub rows: usize,
    pub total_nonzeros: usize,
    pub mean_nonzeros: f64,
    pub max_nonzeros: usize,
}

pub fn repr_cost(repr: &Representation, graph: &Graph, dataset: &PathDataset) -> Result<CostReport> {
    Ok(encode_dataset(graph, dataset, repr)?.cost())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::encode_static;
    use crate::graph::{Coordinate, Path};
    use crate::ingest::{generate_grid_graph, generate_synthetic_trips, snap_and_route, PathEntry, SyntheticTipModel};
    use proptest::prelude::*;

    fn grid_dataset(n_trips: usize, seed: u64) -> (Graph, PathDataset) {
        let g = generate_grid_graph(8, 8, 100.0).unwrap();
        let model = SyntheticTipModel { per_meter_rate: 0.001, areas: vec![], noise_sd: 0.2, seed };
        let trips = generate_synthetic_trips(&g, n_trips, &model).unwrap();
        let d = snap_and_route(&g, &trips).unwrap().dataset;
        (g, d)
    }

    #[test]
    fn rows_match_single_path_encoders() {
        let (g, d) = grid_dataset(60, 1);
        for repr in [
            Representation::Static,
            Representation::TemporalSubpaths { subpaths: 3, nodes_per_subpath: 2 },
            Representation::OriginDestination,
            Representation::ThreeSteps,
            Representation::KNeighbors { k: 2 },
            Representation::ThreeStepsKn { k: 1 },
        ] {
            let m = encode_dataset(&g, &d, &repr).unwrap();
            assert_eq!(m.len(), d.len());
            assert_eq!(m.n_features(), repr.blocks() * 64);
            for (row, e) in m.rows().iter().zip(d.entries()) {
                assert_eq!(row, &repr.encode(&g, &e.path).unwrap());
            }
            assert_eq!(m.targets(), d.targets().as_slice());
        }
    }

    #[test]
    fn small_static_dataset() {
        let g = generate_grid_graph(3, 1, 1.0).unwrap();
        let entry = |nodes: Vec<usize>, t: f64| PathEntry {
            path: Path::new(nodes).unwrap(),
            target: t,
            pickup: Coordinate::new(0.0, 0.0),
            dropoff: Coordinate::new(0.0, 0.0),
        };
        let d = PathDataset::new(&g, vec![entry(vec![0, 1], 1.0), entry(vec![1, 2], 2.0), entry(vec![2, 1, 0], 3.0)]).unwrap();
        let m = encode_dataset(&g, &d, &Representation::Static).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.rows().iter().all(|r| r.len() == 3));
        let t = encode_dataset(&g, &d, &Representation::TemporalSubpaths { subpaths: 3, nodes_per_subpath: 1 }).unwrap();
        assert_eq!(t.n_features(), 9);
        assert_eq!(m.rows()[0], encode_static(&g, &d.entries()[0].path));
    }

    #[test]
    fn cost_laws() {
        let (g, d) = grid_dataset(200, 2);
        let od = repr_cost(&Representation::OriginDestination, &g, &d).unwrap();
        assert_eq!(od.mean_nonzeros, 2.0);
        assert_eq!(od.n_features, 128);
        let st = repr_cost(&Representation::Static, &g, &d).unwrap();
        let mean_len = d.entries().iter().map(|e| e.path.len()).sum::<usize>() as f64 / d.len() as f64;
        assert!(st.mean_nonzeros <= mean_len);
        let kn: Vec<usize> = (1..=3)
            .map(|k| repr_cost(&Representation::KNeighbors { k }, &g, &d).unwrap().total_nonzeros)
            .collect();
        assert!(kn.windows(2).all(|w| w[0] <= w[1]), "{kn:?}");
        assert_eq!(od.rows, d.len());
        assert_eq!(od.total_nonzeros, 2 * d.len());
    }

    #[test]
    fn text_header_and_errors() {
        let (g, d) = grid_dataset(5, 3);
        let m = encode_dataset(&g, &d, &Representation::ThreeStepsKn { k: 1 }).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("#n_features=192 repr=three_steps_kn k=1\n"));
        assert!(FeatureMatrix::from_text("").is_err());
        assert!(FeatureMatrix::from_text("#n_features=4 repr=static\n1.0 3:1 2:1\n").is_err());
        assert!(FeatureMatrix::from_text("#n_features=4 repr=static\n1.0 4:1\n").is_err());
        assert!(FeatureMatrix::from_text("#n_features=4 repr=static\n1.0 2:0\n").is_err());
        assert!(FeatureMatrix::from_text("#n_features=4 repr=nope\n").is_err());
        let ok = FeatureMatrix::from_text("#n_features=4 repr=static\r\n0.5 0:1 3:1\r\n").unwrap();
        assert_eq!(ok.rows()[0].indices(), &[0, 3]);
    }

    #[test]
    fn mismatched_dataset_rejected() {
        let (g, d) = grid_dataset(5, 4);
        let other = generate_grid_graph(3, 3, 100.0).unwrap();
        assert!(encode_dataset(&other, &d, &Representation::Static).is_err());
        assert!(encode_dataset(&g, &d, &Representation::KNeighbors { k: 0 }).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn text_round_trip(seed in 0u64..500, kind in 0usize..6, targets in prop::collection::vec(0.0f64..1e4, 1..5)) {
            let (g, d) = grid_dataset(targets.len() + 3, seed);
            let repr = [
                Representation::Static,
                Representation::TemporalSubpaths { subpaths: 4, nodes_per_subpath: 3 },
                Representation::OriginDestination,
                Representation::ThreeSteps,
                Representation::KNeighbors { k: 3 },
                Representation::ThreeStepsKn { k: 2 },
            ][kind];
            let m = encode_dataset(&g, &d, &repr).unwrap();
            let mut t = m.targets().to_vec();
            for (slot, v) in t.iter_mut().zip(&targets) { *slot = *v; }
            let m = FeatureMatrix::new(repr, m.n_features(), m.rows().to_vec(), t).unwrap();
            let text = m.to_text();
            let back = FeatureMatrix::from_text(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert!(back.targets().iter().zip(m.targets()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
