//! From raw trips to labeled network paths.

mod files;
mod synthetic;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Coordinate, Graph, Path};
use crate::rng;

pub use files::{
    load_graph, load_paths, load_trips, read_nodes_and_edges, write_graph, write_paths, write_trips, LoadedTrips,
    TargetColumn, TripSchema,
};
pub use synthetic::{generate_grid_graph, generate_synthetic_trips, AreaEffect, SyntheticTipModel};

/// One trip: where it started and ended and the label to predict (dollars).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pickup: Coordinate,
    pub dropoff: Coordinate,
    pub target: f64,
}

/// A routed trip. The raw coordinates are kept for the area baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEntry {
    pub path: Path,
    pub target: f64,
    pub pickup: Coordinate,
    pub dropoff: Coordinate,
}

/// Labeled paths over a graph of `node_count` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDataset {
    node_count: usize,
    entries: Vec<PathEntry>,
}

impl PathDataset {
    pub fn new(graph: &Graph, entries: Vec<PathEntry>) -> Result<Self> {
        Self::with_node_count(graph.node_count(), entries)
    }

    pub fn with_node_count(node_count: usize, entries: Vec<PathEntry>) -> Result<Self> {
        for e in &entries {
            if let Some(&bad) = e.path.nodes().iter().find(|&&i| i >= node_count) {
                return Err(Error::NodeOutOfRange {
                    index: bad,
                    len: node_count,
                });
            }
            if !(e.target.is_finite() && e.target >= 0.0) {
                return Err(Error::InvalidArgument(format!("invalid target {}", e.target)));
            }
        }
        Ok(PathDataset { node_count, entries })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn entries(&self) -> &[PathEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.target).collect()
    }

    /// Entries at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> PathDataset {
        PathDataset {
            node_count: self.node_count,
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapOutcome {
    pub dataset: PathDataset,
    /// Trips whose pickup and dropoff snapped to the same node.
    pub degenerate: usize,
    pub unreachable: usize,
}

/// Snaps both ends of every trip to the nearest node and routes between them.
///
/// Runs on the current rayon pool; output order follows input order.
pub fn snap_and_route(graph: &Graph, trips: &[TripRecord]) -> Result<SnapOutcome> {
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    enum Routed {
        Ok(PathEntry),
        Degenerate,
        Unreachable,
    }
    let routed: Vec<Routed> = trips
        .par_iter()
        .map(|t| -> Result<Routed> {
            let from = graph.nearest_node(t.pickup)?;
            let to = graph.nearest_node(t.dropoff)?;
            if from == to {
                return Ok(Routed::Degenerate);
            }
            match graph.shortest_path(from, to) {
                Ok(route) => Ok(Routed::Ok(PathEntry {
                    path: route.path,
                    target: t.target,
                    pickup: t.pickup,
                    dropoff: t.dropoff,
                })),
                Err(Error::NoRoute { .. }) => Ok(Routed::Unreachable),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let (mut degenerate, mut unreachable) = (0, 0);
    let mut entries = Vec::with_capacity(routed.len());
    for r in routed {
        match r {
            Routed::Ok(e) => entries.push(e),
            Routed::Degenerate => degenerate += 1,
            Routed::Unreachable => unreachable += 1,
        }
    }
    Ok(SnapOutcome {
        dataset: PathDataset {
            node_count: graph.node_count(),
            entries,
        },
        degenerate,
        unreachable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub bin_width: f64,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceOutcome {
    pub dataset: PathDataset,
    pub out_of_range: usize,
    /// Entries kept per non-empty bin.
    pub per_bin: usize,
    pub non_empty_bins: usize,
}

/// Bin index of `target` in `[lo, hi]`; the upper edge joins the last bin.
fn bin_of(target: f64, spec: &BalanceSpec, bins: usize) -> Option<usize> {
    if !(spec.lo..=spec.hi).contains(&target) {
        return None;
    }
    Some((((target - spec.lo) / spec.bin_width).floor() as usize).min(bins - 1))
}

/// Flattens the target distribution: drops targets outside `[lo, hi]`, then
/// downsamples every non-empty bin to the size of the smallest one. Kept
/// entries retain their input order.
pub fn balance_dataset(d: &PathDataset, spec: &BalanceSpec) -> Result<BalanceOutcome> {
    if !(spec.bin_width > 0.0 && spec.bin_width.is_finite()) {
        return Err(Error::InvalidArgument(format!("bin width must be positive, got {}", spec.bin_width)));
    }
    if spec.lo.is_nan() || spec.hi.is_nan() || spec.lo >= spec.hi {
        return Err(Error::InvalidArgument(format!("empty range [{}, {}]", spec.lo, spec.hi)));
    }
    let bins = (((spec.hi - spec.lo) / spec.bin_width).ceil() as usize).max(1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bins];
    let mut out_of_range = 0;
    for (i, e) in d.entries.iter().enumerate() {
        match bin_of(e.target, spec, bins) {
            Some(b) => members[b].push(i),
            None => out_of_range += 1,
        }
    }
    let per_bin = members
        .iter()
        .map(Vec::len)
        .filter(|&n| n > 0)
        .min()
        .ok_or_else(|| Error::InvalidArgument("every balancing bin is empty".into()))?;

    let mut rng = rng::seeded(spec.seed);
    let mut keep = Vec::with_capacity(per_bin * bins);
    let mut non_empty_bins = 0;
    for m in members.iter().filter(|m| !m.is_empty()) {
        non_empty_bins += 1;
        keep.extend(index::sample(&mut rng, m.len(), per_bin).into_iter().map(|j| m[j]));
    }
    keep.sort_unstable();
    Ok(BalanceOutcome {
        dataset: d.subset(&keep),
        out_of_range,
        per_bin,
        non_empty_bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, Metric};
    use rand::Rng;

    fn dataset(targets: &[f64]) -> PathDataset {
        let entries = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| PathEntry {
                path: Path::new(vec![i % 3, (i + 1) % 3]).unwrap(),
                target: t,
                pickup: Coordinate::new(i as f64, 0.0),
                dropoff: Coordinate::new(0.0, i as f64),
            })
            .collect();
        PathDataset::with_node_count(3, entries).unwrap()
    }

    fn bin_counts(d: &PathDataset, spec: &BalanceSpec) -> Vec<usize> {
        let bins = ((spec.hi - spec.lo) / spec.bin_width).ceil() as usize;
        let mut counts = vec![0; bins];
        for e in d.entries() {
            counts[bin_of(e.target, spec, bins).unwrap()] += 1;
        }
        counts
    }

    #[test]
    fn balances_to_smallest_bin() {
        let mut targets = vec![0.5; 10];
        targets.extend([1.5; 4]);
        targets.extend([2.5; 7]);
        let d = dataset(&targets);
        let spec = BalanceSpec { bin_width: 1.0, lo: 0.0, hi: 3.0, seed: 1 };
        let out = balance_dataset(&d, &spec).unwrap();
        assert_eq!(bin_counts(&out.dataset, &spec), [4, 4, 4]);
        assert_eq!(out.per_bin, 4);
        assert_eq!(out.out_of_range, 0);
    }

    #[test]
    fn uniform_input_is_a_fixed_point() {
        let targets: Vec<f64> = (0..15).map(|i| 0.5 + (i % 3) as f64).collect();
        let d = dataset(&targets);
        let spec = BalanceSpec { bin_width: 1.0, lo: 0.0, hi: 3.0, seed: 9 };
        let out = balance_dataset(&d, &spec).unwrap();
        assert_eq!(out.dataset, d);
    }

    #[test]
    fn balanced_output_passes_chi_square() {
        let mut r = rng::seeded(3);
        let targets: Vec<f64> = (0..1000).map(|_| (r.random::<f64>() * 6.0 + r.random::<f64>() * 6.0).min(12.0)).collect();
        let d = dataset(&targets);
        let spec = BalanceSpec { bin_width: 0.5, lo: 0.0, hi: 10.0, seed: 4 };
        let out = balance_dataset(&d, &spec).unwrap();
        let counts: Vec<usize> = bin_counts(&out.dataset, &spec).into_iter().filter(|&c| c > 0).collect();
        let n: usize = counts.iter().sum();
        let expected = n as f64 / counts.len() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99% critical value of chi-square with 19 degrees of freedom.
        assert_eq!(counts.len(), 20);
        assert!(chi2 < 36.191, "chi2 = {chi2}");
        // Subset of the input, order preserved.
        let mut pos = 0;
        for e in out.dataset.entries() {
            pos += d.entries()[pos..].iter().position(|x| x == e).unwrap() + 1;
        }
    }

    #[test]
    fn balance_errors() {
        let d = dataset(&[5.0, 6.0]);
        let spec = |bw, lo, hi| BalanceSpec { bin_width: bw, lo, hi, seed: 0 };
        assert!(balance_dataset(&d, &spec(0.0, 0.0, 1.0)).is_err());
        assert!(balance_dataset(&d, &spec(1.0, 2.0, 2.0)).is_err());
        assert!(balance_dataset(&d, &spec(1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn upper_edge_is_kept() {
        let d = dataset(&[0.0, 1.0, 2.0]);
        let spec = BalanceSpec { bin_width: 1.0, lo: 0.0, hi: 2.0, seed: 0 };
        let out = balance_dataset(&d, &spec).unwrap();
        assert_eq!(out.out_of_range, 0);
        assert_eq!(out.non_empty_bins, 2);
        assert_eq!(out.per_bin, 1);
    }

    #[test]
    fn degenerate_trips_are_dropped() {
        let g = generate_grid_graph(3, 3, 100.0).unwrap();
        let c = g.coordinate(4);
        let trips = [TripRecord { pickup: c, dropoff: c, target: 1.0 }];
        let out = snap_and_route(&g, &trips).unwrap();
        assert!(out.dataset.is_empty());
        assert_eq!(out.degenerate, 1);
    }

    #[test]
    fn two_node_route() {
        let nodes = vec![("a".into(), Coordinate::new(0.0, 0.0)), ("b".into(), Coordinate::new(50.0, 0.0))];
        let g = Graph::build(Metric::Planar, nodes, &[EdgeSpec::new("a", "b", None)]).unwrap();
        let trips = [TripRecord { pickup: g.coordinate(0), dropoff: g.coordinate(1), target: 0.1 + 0.2 }];
        let out = snap_and_route(&g, &trips).unwrap();
        assert_eq!(out.dataset.entries()[0].path.nodes(), &[0, 1]);
        assert_eq!(out.dataset.entries()[0].target.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn unreachable_trips_are_counted() {
        let nodes = vec![("a".into(), Coordinate::new(0.0, 0.0)), ("b".into(), Coordinate::new(50.0, 0.0))];
        let g = Graph::build(Metric::Planar, nodes, &[]).unwrap();
        let trips = [TripRecord { pickup: g.coordinate(0), dropoff: g.coordinate(1), target: 1.0 }];
        let out = snap_and_route(&g, &trips).unwrap();
        assert_eq!((out.dataset.len(), out.unreachable, out.degenerate), (0, 1, 0));
    }

    #[test]
    fn snapped_endpoints_match_nearest_node() {
        let g = generate_grid_graph(10, 10, 100.0).unwrap();
        let mut r = rng::seeded(8);
        let trips: Vec<TripRecord> = (0..100)
            .map(|_| TripRecord {
                pickup: Coordinate::new(r.random_range(-50.0..950.0), r.random_range(-50.0..950.0)),
                dropoff: Coordinate::new(r.random_range(-50.0..950.0), r.random_range(-50.0..950.0)),
                target: r.random_range(0.0..10.0),
            })
            .collect();
        let out = snap_and_route(&g, &trips).unwrap();
        let mut kept = out.dataset.entries().iter();
        for t in &trips {
            let (a, b) = (g.nearest_node_linear(t.pickup).unwrap(), g.nearest_node_linear(t.dropoff).unwrap());
            if a == b {
                continue;
            }
            let e = kept.next().unwrap();
            assert_eq!((e.path.origin(), e.path.destination()), (a, b));
            assert_eq!(e.target.to_bits(), t.target.to_bits());
        }
        assert!(kept.next().is_none());
    }
}
