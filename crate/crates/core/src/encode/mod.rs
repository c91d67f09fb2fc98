//! Path encoders.
//!
//! Every representation is built from *node vectors*: binary vectors of length
//! `N` (the graph's node count) where position `j` stands for node `j`. A
//! representation concatenates one or more node vectors into a
//! [`FeatureVector`], stored sparsely as the sorted positions set to 1.
//!
//! | representation        | blocks                                   | length |
//! |-----------------------|------------------------------------------|--------|
//! | `static`              | all path nodes                           | N      |
//! | `temporal_subpaths`   | first run, last run, interior runs       | S·N    |
//! | `origin_destination`  | origin, destination                      | 2N     |
//! | `three_steps`         | origin, destination, all path nodes      | 3N     |
//! | `k_neighbors`         | k-hop ball of origin, of destination     | 2N     |
//! | `three_steps_kn`      | the two k-hop balls, all path nodes      | 3N     |

mod matrix;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Path};

pub use matrix::{encode_dataset, repr_cost, CostReport, FeatureMatrix};

/// Sparse binary vector: `len` slots, `indices` strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    len: usize,
    indices: Vec<usize>,
}

impl FeatureVector {
    /// Sorts and de-duplicates `indices`; fails if any is `>= len`.
    pub fn from_indices(len: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= len {
                return Err(Error::NodeOutOfRange { index: last, len });
            }
        }
        Ok(FeatureVector { len, indices })
    }

    pub fn from_dense(bits: &[u8]) -> Self {
        FeatureVector {
            len: bits.len(),
            indices: bits.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn density(&self) -> f64 {
        self.indices.len() as f64 / self.len as f64
    }

    pub fn contains(&self, position: usize) -> bool {
        self.indices.binary_search(&position).is_ok()
    }

    pub fn to_dense(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len];
        for &i in &self.indices {
            out[i] = 1;
        }
        out
    }

    /// Positions set inside block `b` of width `width`, relative to the block start.
    pub fn block(&self, b: usize, width: usize) -> Vec<usize> {
        let (lo, hi) = (b * width, (b + 1) * width);
        self.indices.iter().filter(|&&i| i >= lo && i < hi).map(|&i| i - lo).collect()
    }
}

/// Which encoder to apply, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    Static,
    TemporalSubpaths {
        /// Maximum number of sub-paths, `S >= 2`.
        #[serde(alias = "S")]
        subpaths: usize,
        /// Path nodes per sub-path, `N_S >= 1`.
        #[serde(alias = "NS")]
        nodes_per_subpath: usize,
    },
    OriginDestination,
    ThreeSteps,
    KNeighbors {
        k: usize,
    },
    ThreeStepsKn {
        k: usize,
    },
}

impl Representation {
    pub const KINDS: [&'static str; 6] = [
        "static",
        "temporal_subpaths",
        "origin_destination",
        "three_steps",
        "k_neighbors",
        "three_steps_kn",
    ];

    /// Builds and validates a representation from its kind name and the
    /// parameters that kind needs.
    pub fn from_parts(kind: &str, subpaths: Option<usize>, nodes_per_subpath: Option<usize>, k: Option<usize>) -> Result<Self> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::InvalidArgument(format!("representation `{kind}` needs {name}")))
        };
        let repr = match kind {
            "static" => Representation::Static,
            "temporal_subpaths" => Representation::TemporalSubpaths {
                subpaths: need(subpaths, "S")?,
                nodes_per_subpath: need(nodes_per_subpath, "NS")?,
            },
            "origin_destination" => Representation::OriginDestination,
            "three_steps" => Representation::ThreeSteps,
            "k_neighbors" => Representation::KNeighbors { k: need(k, "k")? },
            "three_steps_kn" => Representation::ThreeStepsKn { k: need(k, "k")? },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown representation `{other}`, expected one of {}",
                    Self::KINDS.join(", ")
                )))
            }
        };
        repr.validate()?;
        Ok(repr)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Representation::Static => "static",
            Representation::TemporalSubpaths { .. } => "temporal_subpaths",
            Representation::OriginDestination => "origin_destination",
            Representation::ThreeSteps => "three_steps",
            Representation::KNeighbors { .. } => "k_neighbors",
            Representation::ThreeStepsKn { .. } => "three_steps_kn",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Representation::TemporalSubpaths { subpaths, .. } if subpaths < 2 => {
                Err(Error::InvalidArgument(format!("S must be at least 2, got {subpaths}")))
            }
            Representation::TemporalSubpaths { nodes_per_subpath: 0, .. } => {
                Err(Error::InvalidArgument("NS must be at least 1".into()))
            }
            Representation::KNeighbors { k: 0 } | Representation::ThreeStepsKn { k: 0 } => {
                Err(Error::InvalidArgument("k must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of node vectors concatenated.
    pub fn blocks(&self) -> usize {
        match *self {
            Representation::Static => 1,
            Representation::OriginDestination | Representation::KNeighbors { .. } => 2,
            Representation::ThreeSteps | Representation::ThreeStepsKn { .. } => 3,
            Representation::TemporalSubpaths { subpaths, .. } => subpaths,
        }
    }

    pub fn n_features(&self, node_count: usize) -> usize {
        self.blocks() * node_count
    }

    fn k(&self) -> Option<usize> {
        match *self {
            Representation::KNeighbors { k } | Representation::ThreeStepsKn { k } => Some(k),
            _ => None,
        }
    }

    /// Encodes one path after checking the representation and the path indices.
    pub fn encode(&self, graph: &Graph, path: &Path) -> Result<FeatureVector> {
        self.validate()?;
        graph.check_path(path)?;
        Ok(encode_path(self, graph, path, &HashMap::new()))
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Representation::TemporalSubpaths {
                subpaths,
                nodes_per_subpath,
            } => write!(f, "temporal_subpaths(S={subpaths},NS={nodes_per_subpath})"),
            Representation::KNeighbors { k } => write!(f, "k_neighbors(k={k})"),
            Representation::ThreeStepsKn { k } => write!(f, "three_steps_kn(k={k})"),
            other => f.write_str(other.kind()),
        }
    }
}

// The encoders below assume `path` indexes into `graph`.

/// Position `j` set iff node `j` is on the path.
pub fn encode_static(graph: &Graph, path: &Path) -> FeatureVector {
    let n = graph.node_count();
    FeatureVector::from_indices(n, path.nodes().to_vec()).expect("path indexes into graph")
}

/// Splits the path into consecutive runs of `nodes_per_subpath` nodes (the
/// last run takes the remainder). When there are more than `subpaths` runs the
/// central ones are dropped, keeping the first `ceil(S/2)` and the last
/// `floor(S/2)`. Blocks are laid out as first run, last run, then the interior
/// runs in temporal order; unused blocks at the end stay zero.
pub fn encode_temporal_subpaths(graph: &Graph, path: &Path, subpaths: usize, nodes_per_subpath: usize) -> FeatureVector {
    let n = graph.node_count();
    let runs: Vec<&[usize]> = path.nodes().chunks(nodes_per_subpath.max(1)).collect();
    let kept: Vec<&[usize]> = if runs.len() > subpaths {
        let head = subpaths.div_ceil(2);
        let tail = subpaths / 2;
        runs[..head].iter().chain(&runs[runs.len() - tail..]).copied().collect()
    } else {
        runs
    };

    let mut order: Vec<&[usize]> = Vec::with_capacity(kept.len());
    order.push(kept[0]);
    if kept.len() > 1 {
        order.push(kept[kept.len() - 1]);
        order.extend_from_slice(&kept[1..kept.len() - 1]);
    }

    let indices = order
        .iter()
        .enumerate()
        .flat_map(|(b, run)| run.iter().map(move |&v| b * n + v))
        .collect();
    FeatureVector::from_indices(subpaths * n, indices).expect("path indexes into graph")
}

/// Origin in block 0, destination in block 1.
pub fn encode_od(graph: &Graph, path: &Path) -> FeatureVector {
    let n = graph.node_count();
    FeatureVector::from_indices(2 * n, vec![path.origin(), n + path.destination()]).expect("path indexes into graph")
}

/// Origin/destination blocks followed by the static block.
pub fn encode_three_steps(graph: &Graph, path: &Path) -> FeatureVector {
    let n = graph.node_count();
    let mut indices = vec![path.origin(), n + path.destination()];
    indices.extend(path.nodes().iter().map(|&v| 2 * n + v));
    FeatureVector::from_indices(3 * n, indices).expect("path indexes into graph")
}

/// k-hop neighborhoods (base included) of the origin and of the destination.
pub fn encode_k_neighbors(graph: &Graph, path: &Path, k: usize) -> FeatureVector {
    kn_vector(graph, path, &neighborhood(graph, path.origin(), k), &neighborhood(graph, path.destination(), k), false)
}

/// k-neighbor blocks followed by the static block.
pub fn encode_three_steps_kn(graph: &Graph, path: &Path, k: usize) -> FeatureVector {
    kn_vector(graph, path, &neighborhood(graph, path.origin(), k), &neighborhood(graph, path.destination(), k), true)
}

fn neighborhood(graph: &Graph, base: usize, k: usize) -> Vec<usize> {
    graph.k_neighborhood(base, k).expect("path indexes into graph")
}

fn kn_vector(graph: &Graph, path: &Path, start: &[usize], end: &[usize], with_static: bool) -> FeatureVector {
    let n = graph.node_count();
    let mut indices: Vec<usize> = start.iter().copied().chain(end.iter().map(|&v| n + v)).collect();
    let blocks = if with_static {
        indices.extend(path.nodes().iter().map(|&v| 2 * n + v));
        3
    } else {
        2
    };
    FeatureVector::from_indices(blocks * n, indices).expect("path indexes into graph")
}

/// Shared by single-path and dataset encoding; `cache` may hold precomputed
/// k-neighborhoods keyed by base node.
pub(crate) fn encode_path(repr: &Representation, graph: &Graph, path: &Path, cache: &HashMap<usize, Vec<usize>>) -> FeatureVector {
    match *repr {
        Representation::Static => encode_static(graph, path),
        Representation::TemporalSubpaths {
            subpaths,
            nodes_per_subpath,
        } => encode_temporal_subpaths(graph, path, subpaths, nodes_per_subpath),
        Representation::OriginDestination => encode_od(graph, path),
        Representation::ThreeSteps => encode_three_steps(graph, path),
        Representation::KNeighbors { .. } | Representation::ThreeStepsKn { .. } => {
            let k = repr.k().expect("k-neighbor kinds carry k");
            let lookup = |base: usize| match cache.get(&base) {
                Some(v) => std::borrow::Cow::Borrowed(v.as_slice()),
                None => std::borrow::Cow::Owned(neighborhood(graph, base, k)),
            };
            let with_static = matches!(repr, Representation::ThreeStepsKn { .. });
            kn_vector(graph, path, &lookup(path.origin()), &lookup(path.destination()), with_static)
        }
    }
}
