//! Road network model.
//!
//! A [`Graph`] is an ordered list of nodes plus an undirected, length-weighted
//! adjacency. Node order is significant: position `j` of every node vector the
//! encoders produce refers to the `j`-th node supplied to [`Graph::build`].
//! The graph is immutable once built and is safe to query from many threads.

mod spatial;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use spatial::SpatialGrid;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A location. `x`/`y` are longitude/latitude in degrees for geographic
/// graphs and meters for planar ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub x: f64,
    pub y: f64,
}

impl Coordinate {
    pub const fn new(x: f64, y: f64) -> Self {
        Coordinate { x, y }
    }
}

/// How distances between coordinates are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Longitude/latitude in degrees, great-circle distance.
    #[default]
    Geographic,
    /// Cartesian meters, Euclidean distance.
    Planar,
}

impl Metric {
    /// Distance in meters.
    pub fn distance(self, a: Coordinate, b: Coordinate) -> f64 {
        match self {
            Metric::Planar => (a.x - b.x).hypot(a.y - b.y),
            Metric::Geographic => {
                let (lat1, lat2) = (a.y.to_radians(), b.y.to_radians());
                let dlat = lat2 - lat1;
                let dlon = (b.x - a.x).to_radians();
                let h = (dlat / 2.0).sin().powi(2)
                    + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
            }
        }
    }

    pub fn validate(self, c: Coordinate) -> Result<()> {
        let ok = c.x.is_finite()
            && c.y.is_finite()
            && match self {
                Metric::Planar => true,
                Metric::Geographic => (-180.0..=180.0).contains(&c.x) && (-90.0..=90.0).contains(&c.y),
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCoordinate { x: c.x, y: c.y })
        }
    }

    /// Moves `c` by `(dx, dy)` meters.
    pub fn offset(self, c: Coordinate, dx: f64, dy: f64) -> Coordinate {
        match self {
            Metric::Planar => Coordinate::new(c.x + dx, c.y + dy),
            Metric::Geographic => {
                let m_per_deg = EARTH_RADIUS_M.to_radians();
                let lat = (c.y + dy / m_per_deg).clamp(-90.0, 90.0);
                let coslat = c.y.to_radians().cos().max(1e-9);
                let lon = (c.x + dx / (m_per_deg * coslat)).clamp(-180.0, 180.0);
                Coordinate::new(lon, lat)
            }
        }
    }
}

/// Ordered sequence of node indices, origin first and destination last.
///
/// Consecutive nodes need not be adjacent: encoders treat a path as a plain
/// node sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path(Vec<usize>);

impl Path {
    pub fn new(nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyPath);
        }
        Ok(Path(nodes))
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn origin(&self) -> usize {
        self.0[0]
    }

    pub fn destination(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn reversed(&self) -> Path {
        let mut nodes = self.0.clone();
        nodes.reverse();
        Path(nodes)
    }
}

/// An edge as read from input; `length` is computed from the endpoint
/// coordinates when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub length: Option<f64>,
}

impl EdgeSpec {
    pub fn new(from: impl Into<String>, to: impl Into<String>, length: Option<f64>) -> Self {
        EdgeSpec {
            from: from.into(),
            to: to.into(),
            length,
        }
    }
}

/// Shortest route between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub path: Path,
    pub length_m: f64,
}

// Distinct nodes sharing a coordinate would otherwise get a zero-length edge.
const MIN_COMPUTED_LENGTH_M: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Graph {
    metric: Metric,
    ids: Vec<String>,
    coords: Vec<Coordinate>,
    adjacency: Vec<Vec<(usize, f64)>>,
    index: HashMap<String, usize>,
    spatial: Option<SpatialGrid>,
}

impl Graph {
    /// Builds an undirected graph. Node order is preserved; repeated edges keep
    /// the shortest length and self-loops are ignored.
    pub fn build(metric: Metric, nodes: Vec<(String, Coordinate)>, edges: &[EdgeSpec]) -> Result<Graph> {
        let mut index = HashMap::with_capacity(nodes.len());
        let mut ids = Vec::with_capacity(nodes.len());
        let mut coords = Vec::with_capacity(nodes.len());
        for (i, (id, c)) in nodes.into_iter().enumerate() {
            metric.validate(c)?;
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateNode(id));
            }
            ids.push(id);
            coords.push(c);
        }

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
        for e in edges {
            let a = *index.get(&e.from).ok_or_else(|| Error::UnknownNode(e.from.clone()))?;
            let b = *index.get(&e.to).ok_or_else(|| Error::UnknownNode(e.to.clone()))?;
            let length = match e.length {
                Some(l) if l.is_finite() && l > 0.0 => l,
                Some(l) => {
                    return Err(Error::InvalidEdgeLength {
                        from: e.from.clone(),
                        to: e.to.clone(),
                        length: l,
                    })
                }
                None => metric.distance(coords[a], coords[b]).max(MIN_COMPUTED_LENGTH_M),
            };
            if a == b {
                log::debug!("ignoring self-loop on `{}`", e.from);
                continue;
            }
            add_undirected(&mut adjacency, a, b, length);
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }

        let spatial = SpatialGrid::build(metric, &coords, &adjacency);
        Ok(Graph {
            metric,
            ids,
            coords,
            adjacency,
            index,
            spatial,
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn coordinate(&self, index: usize) -> Coordinate {
        self.coords[index]
    }

    /// Neighbors of `index` with edge lengths, sorted by neighbor index.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    /// Iterates every undirected edge once as `(a, b, length)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            list.iter().filter(move |&&(b, _)| a < b).map(move |&(b, l)| (a, b, l))
        })
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index,
                len: self.node_count(),
            })
        }
    }

    pub fn check_path(&self, path: &Path) -> Result<()> {
        path.nodes().iter().try_for_each(|&i| self.check_index(i))
    }

    /// Total edge length along `path`, or `None` when two consecutive nodes are
    /// not adjacent.
    pub fn path_length(&self, path: &Path) -> Option<f64> {
        path.nodes()
            .windows(2)
            .map(|w| self.edge_length(w[0], w[1]))
            .sum()
    }

    /// Nodes within `k` unweighted hops of `base`, including `base`, sorted.
    pub fn k_neighborhood(&self, base: usize, k: usize) -> Result<Vec<usize>> {
        self.check_index(base)?;
        let mut hops = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::from([base]);
        hops[base] = 0;
        let mut found = vec![base];
        while let Some(u) = queue.pop_front() {
            if hops[u] == k {
                continue;
            }
            for &(v, _) in &self.adjacency[u] {
                if hops[v] == usize::MAX {
                    hops[v] = hops[u] + 1;
                    found.push(v);
                    queue.push_back(v);
                }
            }
        }
        found.sort_unstable();
        Ok(found)
    }

    /// Dijkstra's algorithm. Among equal tentative distances the lower node
    /// index is settled first and preferred as predecessor, so the returned
    /// route is deterministic.
    pub fn shortest_path(&self, origin: usize, dest: usize) -> Result<Route> {
        self.check_index(origin)?;
        self.check_index(dest)?;
        if origin == dest {
            return Ok(Route {
                path: Path(vec![origin]),
                length_m: 0.0,
            });
        }

        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[origin] = 0.0;
        heap.push(Frontier {
            dist: 0.0,
            node: origin,
        });

        while let Some(Frontier { dist: d, node: u }) = heap.pop() {
            if settled[u] {
                continue;
            }
            settled[u] = true;
            if u == dest {
                break;
            }
            for &(v, w) in &self.adjacency[u] {
                if settled[v] {
                    continue;
                }
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = u;
                    heap.push(Frontier { dist: nd, node: v });
                } else if nd == dist[v] && u < pred[v] {
                    pred[v] = u;
                }
            }
        }

        if !settled[dest] {
            return Err(Error::NoRoute {
                from: origin,
                to: dest,
            });
        }
        let mut nodes = vec![dest];
        let mut cur = dest;
        while cur != origin {
            cur = pred[cur];
            nodes.push(cur);
        }
        nodes.reverse();
        Ok(Route {
            path: Path(nodes),
            length_m: dist[dest],
        })
    }

    /// Index of the node closest to `c`, lower index on ties.
    pub fn nearest_node(&self, c: Coordinate) -> Result<usize> {
        match &self.spatial {
            Some(grid) => Ok(grid.nearest(self.metric, &self.coords, c)),
            None => self.nearest_node_linear(c),
        }
    }

    /// Exhaustive scan over all nodes; same contract as [`Graph::nearest_node`].
    pub fn nearest_node_linear(&self, c: Coordinate) -> Result<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, &p) in self.coords.iter().enumerate() {
            let d = self.metric.distance(c, p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i).ok_or(Error::EmptyGraph)
    }
}

fn add_undirected(adjacency: &mut [Vec<(usize, f64)>], a: usize, b: usize, length: f64) {
    for (u, v) in [(a, b), (b, a)] {
        match adjacency[u].iter_mut().find(|(n, _)| *n == v) {
            Some(entry) => entry.1 = entry.1.min(length),
            None => adjacency[u].push((v, length)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

// Min-heap on (dist, node).
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// v1..v5 with v2-v1, v2-v3, v2-v4, v5-v4.
    fn five_node() -> Graph {
        let nodes = (1..=5)
            .map(|i| (format!("v{i}"), Coordinate::new(i as f64, 0.0)))
            .collect();
        let edges = [("v2", "v1"), ("v2", "v3"), ("v2", "v4"), ("v5", "v4")]
            .map(|(a, b)| EdgeSpec::new(a, b, Some(1.0)));
        Graph::build(Metric::Planar, nodes, &edges).unwrap()
    }

    fn ids(g: &Graph, set: &[usize]) -> Vec<String> {
        set.iter().map(|&i| g.node_id(i).to_string()).collect()
    }

    #[test]
    fn builds_symmetric_adjacency() {
        let g = five_node();
        let nbrs = |id: &str| {
            let i = g.index_of(id).unwrap();
            let mut v: Vec<_> = g.neighbors(i).iter().map(|&(n, _)| g.node_id(n).to_string()).collect();
            v.sort();
            v
        };
        assert_eq!(nbrs("v2"), ["v1", "v3", "v4"]);
        assert_eq!(nbrs("v5"), ["v4"]);
        assert_eq!(nbrs("v4"), ["v2", "v5"]);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn single_node_graph() {
        let g = Graph::build(Metric::Planar, vec![("a".into(), Coordinate::new(0.0, 0.0))], &[]).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.neighbors(0).is_empty());
        assert_eq!(g.nearest_node(Coordinate::new(5.0, 5.0)).unwrap(), 0);
    }

    #[test]
    fn computes_missing_lengths() {
        let nodes = vec![
            ("a".into(), Coordinate::new(0.0, 0.0)),
            ("b".into(), Coordinate::new(100.0, 0.0)),
            ("c".into(), Coordinate::new(0.0, 100.0)),
            ("d".into(), Coordinate::new(100.0, 100.0)),
        ];
        let edges = [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")].map(|(a, b)| EdgeSpec::new(a, b, None));
        let g = Graph::build(Metric::Planar, nodes, &edges).unwrap();
        for (_, _, l) in g.edges() {
            assert!((l - 100.0).abs() < 0.1);
        }
    }

    #[test]
    fn great_circle_distance() {
        // One degree of latitude on the mean-radius sphere.
        let d = Metric::Geographic.distance(Coordinate::new(-74.0, 40.0), Coordinate::new(-74.0, 41.0));
        assert!((d - 111_194.93).abs() < 0.01, "{d}");
        let d = Metric::Geographic.distance(Coordinate::new(0.0, 0.0), Coordinate::new(180.0, 0.0));
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 1e-6);
    }

    #[test]
    fn build_errors() {
        let nodes = || vec![("a".to_string(), Coordinate::new(0.0, 0.0)), ("b".to_string(), Coordinate::new(1.0, 0.0))];
        let err = Graph::build(Metric::Planar, nodes(), &[EdgeSpec::new("a", "zz", None)]).unwrap_err();
        assert!(matches!(err, Error::UnknownNode(id) if id == "zz"));
        let err = Graph::build(Metric::Planar, nodes(), &[EdgeSpec::new("a", "b", Some(0.0))]).unwrap_err();
        assert!(matches!(err, Error::InvalidEdgeLength { .. }));
        let err = Graph::build(Metric::Planar, nodes(), &[EdgeSpec::new("a", "b", Some(-3.0))]).unwrap_err();
        assert!(matches!(err, Error::InvalidEdgeLength { .. }));
        let mut dup = nodes();
        dup.push(("a".into(), Coordinate::new(2.0, 2.0)));
        assert!(matches!(Graph::build(Metric::Planar, dup, &[]).unwrap_err(), Error::DuplicateNode(_)));
        let bad = vec![("a".to_string(), Coordinate::new(200.0, 0.0))];
        assert!(matches!(Graph::build(Metric::Geographic, bad, &[]).unwrap_err(), Error::InvalidCoordinate { .. }));
    }

    #[test]
    fn duplicate_edges_keep_shortest() {
        let g = Graph::build(
            Metric::Planar,
            vec![("a".into(), Coordinate::new(0.0, 0.0)), ("b".into(), Coordinate::new(1.0, 0.0))],
            &[EdgeSpec::new("a", "b", Some(5.0)), EdgeSpec::new("b", "a", Some(2.0)), EdgeSpec::new("a", "a", Some(1.0))],
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_length(0, 1), Some(2.0));
        assert_eq!(g.edge_length(1, 0), Some(2.0));
    }

    #[test]
    fn k_neighborhood_examples() {
        let g = five_node();
        let v = |id: &str| g.index_of(id).unwrap();
        assert_eq!(ids(&g, &g.k_neighborhood(v("v2"), 1).unwrap()), ["v1", "v2", "v3", "v4"]);
        assert_eq!(ids(&g, &g.k_neighborhood(v("v5"), 2).unwrap()), ["v2", "v4", "v5"]);
        for i in 0..5 {
            assert_eq!(g.k_neighborhood(i, 0).unwrap(), vec![i]);
        }
        assert!(matches!(g.k_neighborhood(5, 1), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn shortest_path_examples() {
        let g = five_node();
        let r = g.shortest_path(2, 2).unwrap();
        assert_eq!(r.path.nodes(), &[2]);
        assert_eq!(r.length_m, 0.0);

        // Cycle a-b-c-d-a with lengths 1, 1, 1, 10.
        let nodes = ["a", "b", "c", "d"].map(|s| (s.to_string(), Coordinate::new(0.0, 0.0))).to_vec();
        let edges = [("a", "b", 1.0), ("b", "c", 1.0), ("c", "d", 1.0), ("d", "a", 10.0)]
            .map(|(a, b, l)| EdgeSpec::new(a, b, Some(l)));
        let g = Graph::build(Metric::Planar, nodes, &edges).unwrap();
        let r = g.shortest_path(0, 3).unwrap();
        assert_eq!(r.length_m, 3.0);
        assert_eq!(r.path.nodes(), &[0, 1, 2, 3]);
    }

    #[test]
    fn unreachable_is_an_error() {
        let nodes = vec![("a".into(), Coordinate::new(0.0, 0.0)), ("b".into(), Coordinate::new(1.0, 0.0))];
        let g = Graph::build(Metric::Planar, nodes, &[]).unwrap();
        assert!(matches!(g.shortest_path(0, 1), Err(Error::NoRoute { from: 0, to: 1 })));
    }

    #[test]
    fn equal_cost_routes_are_deterministic() {
        // Diamond 0-{1,2}-3 with equal lengths: predecessor of 3 is the lower index.
        let nodes = ["s", "x", "y", "t"].map(|s| (s.to_string(), Coordinate::new(0.0, 0.0))).to_vec();
        let edges = [("s", "y"), ("s", "x"), ("y", "t"), ("x", "t")].map(|(a, b)| EdgeSpec::new(a, b, Some(1.0)));
        let g = Graph::build(Metric::Planar, nodes, &edges).unwrap();
        assert_eq!(g.shortest_path(0, 3).unwrap().path.nodes(), &[0, 1, 3]);
    }

    #[test]
    fn nearest_node_examples() {
        let g = five_node();
        assert_eq!(g.nearest_node(g.coordinate(2)).unwrap(), 2);
        let nodes = vec![("p".into(), Coordinate::new(0.0, 0.0)), ("q".into(), Coordinate::new(0.0, 0.001))];
        let g = Graph::build(Metric::Geographic, nodes, &[]).unwrap();
        assert_eq!(g.nearest_node(Coordinate::new(0.0, 0.0004)).unwrap(), 0);
        // Exact tie goes to the lower index.
        assert_eq!(g.nearest_node(Coordinate::new(0.0, 0.0005)).unwrap(), 0);
        let empty = Graph::build(Metric::Planar, vec![], &[]).unwrap();
        assert!(matches!(empty.nearest_node(Coordinate::new(0.0, 0.0)), Err(Error::EmptyGraph)));
    }

    fn random_graph(seed: u64, n: usize, metric: Metric) -> Graph {
        let mut rng = crate::rng::seeded(seed);
        let nodes: Vec<_> = (0..n)
            .map(|i| {
                let c = match metric {
                    Metric::Planar => Coordinate::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)),
                    Metric::Geographic => Coordinate::new(rng.random_range(-74.05..-73.9), rng.random_range(40.6..40.85)),
                };
                (format!("n{i}"), c)
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for _ in 0..2 {
                let j = rng.random_range(0..n);
                edges.push(EdgeSpec::new(format!("n{i}"), format!("n{j}"), None));
            }
        }
        Graph::build(metric, nodes, &edges).unwrap()
    }

    #[test]
    fn grid_index_matches_linear_scan() {
        for metric in [Metric::Planar, Metric::Geographic] {
            let g = random_graph(11, 100, metric);
            let mut rng = crate::rng::seeded(5);
            for _ in 0..100 {
                let q = match metric {
                    Metric::Planar => Coordinate::new(rng.random_range(-200.0..1200.0), rng.random_range(-200.0..1200.0)),
                    Metric::Geographic => Coordinate::new(rng.random_range(-74.1..-73.8), rng.random_range(40.5..40.9)),
                };
                assert_eq!(g.nearest_node(q).unwrap(), g.nearest_node_linear(q).unwrap(), "{q:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn neighborhoods_grow_with_k(seed in 0u64..1000, base in 0usize..30, k in 0usize..6) {
            let g = random_graph(seed, 30, Metric::Planar);
            let small = g.k_neighborhood(base, k).unwrap();
            let large = g.k_neighborhood(base, k + 1).unwrap();
            prop_assert!(small.iter().all(|i| large.binary_search(i).is_ok()));
            prop_assert!(small.binary_search(&base).is_ok());
        }

        #[test]
        fn closure_is_connected_component(seed in 0u64..1000, base in 0usize..30) {
            let g = random_graph(seed, 30, Metric::Planar);
            let closure = g.k_neighborhood(base, g.node_count()).unwrap();
            let reachable: Vec<usize> = (0..30).filter(|&j| g.shortest_path(base, j).is_ok()).collect();
            prop_assert_eq!(closure, reachable);
        }

        #[test]
        fn route_length_is_symmetric(seed in 0u64..1000, a in 0usize..30, b in 0usize..30) {
            let g = random_graph(seed, 30, Metric::Planar);
            match (g.shortest_path(a, b), g.shortest_path(b, a)) {
                (Ok(x), Ok(y)) => {
                    prop_assert!((x.length_m - y.length_m).abs() <= 1e-9 * x.length_m.max(1.0));
                    prop_assert_eq!(x.path.origin(), a);
                    prop_assert_eq!(x.path.destination(), b);
                    let walked = g.path_length(&x.path).unwrap();
                    prop_assert!((walked - x.length_m).abs() <= 1e-9 * walked.max(1.0));
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "reachability must be symmetric"),
            }
        }

        #[test]
        fn dijkstra_beats_random_walks(seed in 0u64..1000, a in 0usize..30) {
            let g = random_graph(seed, 30, Metric::Planar);
            let mut rng = crate::rng::seeded(seed ^ 0xABCD);
            let mut cur = a;
            let mut walked = 0.0;
            for _ in 0..60 {
                let nbrs = g.neighbors(cur);
                if nbrs.is_empty() { break; }
                let (next, l) = nbrs[rng.random_range(0..nbrs.len())];
                walked += l;
                cur = next;
                let best = g.shortest_path(a, cur).unwrap().length_m;
                prop_assert!(best <= walked + 1e-9);
            }
        }

        #[test]
        fn grid_index_equals_scan(seed in 0u64..1000, qx in -100.0f64..1100.0, qy in -100.0f64..1100.0) {
            let g = random_graph(seed, 60, Metric::Planar);
            let q = Coordinate::new(qx, qy);
            prop_assert_eq!(g.nearest_node(q).unwrap(), g.nearest_node_linear(q).unwrap());
        }
    }
}
