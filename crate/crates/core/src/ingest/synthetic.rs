//! Desk-scale stand-ins for a city network and its trips.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TripRecord;
use crate::error::{Error, Result};
use crate::graph::{Coordinate, EdgeSpec, Graph, Metric};
use crate::rng;

/// `width` x `height` planar lattice, 4-connected, `spacing_m` between
/// neighbors. Node `r{row}c{col}` has index `row * width + col` and sits at
/// `(col * spacing_m, row * spacing_m)`.
pub fn generate_grid_graph(width: usize, height: usize, spacing_m: f64) -> Result<Graph> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    if !(spacing_m > 0.0 && spacing_m.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {spacing_m}")));
    }
    let id = |r: usize, c: usize| format!("r{r}c{c}");
    let mut nodes = Vec::with_capacity(width * height);
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width {
            nodes.push((id(r, c), Coordinate::new(c as f64 * spacing_m, r as f64 * spacing_m)));
            if c + 1 < width {
                edges.push(EdgeSpec::new(id(r, c), id(r, c + 1), Some(spacing_m)));
            }
            if r + 1 < height {
                edges.push(EdgeSpec::new(id(r, c), id(r + 1, c), Some(spacing_m)));
            }
        }
    }
    Graph::build(Metric::Planar, nodes, &edges)
}

/// A circular zone adding `bonus` dollars to trips that start or end in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEffect {
    pub center: Coordinate,
    pub radius_m: f64,
    pub bonus: f64,
}

/// Target = `per_meter_rate` x route length + area bonuses + N(0, noise_sd),
/// clamped at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTipModel {
    pub per_meter_rate: f64,
    #[serde(default)]
    pub areas: Vec<AreaEffect>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticTipModel {
    fn validate(&self) -> Result<()> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise sd must be >= 0, got {}", self.noise_sd)));
        }
        if let Some(a) = self.areas.iter().find(|a| a.radius_m.is_nan() || a.radius_m <= 0.0) {
            return Err(Error::InvalidArgument(format!("area radius must be positive, got {}", a.radius_m)));
        }
        Ok(())
    }

    /// Sum of bonuses of areas containing either endpoint; each area counts once.
    pub fn area_bonus(&self, metric: Metric, pickup: Coordinate, dropoff: Coordinate) -> f64 {
        self.areas
            .iter()
            .filter(|a| metric.distance(a.center, pickup) <= a.radius_m || metric.distance(a.center, dropoff) <= a.radius_m)
            .map(|a| a.bonus)
            .sum()
    }
}

const MAX_ATTEMPTS: usize = 1000;

/// Draws `n` trips between uniformly chosen distinct nodes. Each endpoint is
/// jittered by less than half its shortest incident edge, so it still snaps to
/// the node it was drawn from. Deterministic in `model.seed`.
pub fn generate_synthetic_trips(graph: &Graph, n: usize, model: &SyntheticTipModel) -> Result<Vec<TripRecord>> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("trip count must be at least 1".into()));
    }
    let nodes = graph.node_count();
    if nodes < 2 {
        return Err(Error::InvalidArgument("synthetic trips need at least 2 nodes".into()));
    }
    let metric = graph.metric();
    let jitter_radius: Vec<f64> = (0..nodes)
        .map(|i| 0.5 * graph.neighbors(i).iter().map(|&(_, l)| l).fold(f64::INFINITY, f64::min))
        .map(|r| if r.is_finite() { r } else { 0.0 })
        .collect();

    let mut rng = rng::seeded(model.seed);
    let jitter = |rng: &mut rng::ChaCha8Rng, node: usize| {
        let r = jitter_radius[node] * rng.random::<f64>().sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        metric.offset(graph.coordinate(node), r * theta.cos(), r * theta.sin())
    };

    let mut trips = Vec::with_capacity(n);
    for _ in 0..n {
        let mut attempts = 0;
        let route = loop {
            attempts += 1;
            let a = rng.random_range(0..nodes);
            let mut b = rng.random_range(0..nodes - 1);
            if b >= a {
                b += 1;
            }
            match graph.shortest_path(a, b) {
                Ok(route) => break route,
                Err(Error::NoRoute { .. }) if attempts < MAX_ATTEMPTS => continue,
                Err(Error::NoRoute { .. }) => {
                    return Err(Error::InvalidArgument("graph too disconnected to draw routable trips".into()))
                }
                Err(e) => return Err(e),
            }
        };
        let pickup = jitter(&mut rng, route.path.origin());
        let dropoff = jitter(&mut rng, route.path.destination());
        let noise: f64 = rng.sample(StandardNormal);
        let target = model.per_meter_rate * route.length_m
            + model.area_bonus(metric, pickup, dropoff)
            + model.noise_sd * noise;
        trips.push(TripRecord {
            pickup,
            dropoff,
            target: target.max(0.0),
        });
    }
    Ok(trips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Path;

    #[test]
    fn grid_counts() {
        let g = generate_grid_graph(2, 2, 100.0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 4));
        let g = generate_grid_graph(1, 5, 100.0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (5, 4));
        assert!(generate_grid_graph(0, 5, 100.0).is_err());
        assert!(generate_grid_graph(3, 0, 100.0).is_err());
    }

    #[test]
    fn grid_degrees() {
        let g = generate_grid_graph(10, 10, 50.0).unwrap();
        let degrees: Vec<usize> = (0..100).map(|i| g.neighbors(i).len()).collect();
        assert!(degrees.iter().all(|d| (2..=4).contains(d)));
        assert_eq!(degrees.iter().filter(|&&d| d == 2).count(), 4);
        assert_eq!(degrees.iter().filter(|&&d| d == 3).count(), 32);
        assert!(g.edges().all(|(_, _, l)| l == 50.0));
    }

    fn model(rate: f64, noise: f64, seed: u64) -> SyntheticTipModel {
        SyntheticTipModel { per_meter_rate: rate, areas: vec![], noise_sd: noise, seed }
    }

    #[test]
    fn noiseless_target_is_rate_times_length() {
        let g = generate_grid_graph(16, 1, 100.0).unwrap();
        let trips = generate_synthetic_trips(&g, 200, &model(0.001, 0.0, 5)).unwrap();
        for t in &trips {
            let a = g.nearest_node(t.pickup).unwrap();
            let b = g.nearest_node(t.dropoff).unwrap();
            let len = g.shortest_path(a, b).unwrap().length_m;
            assert!((t.target - 0.001 * len).abs() < 1e-12);
        }
        // A 15-edge route along the line is 1,500 m.
        let route = g.shortest_path(0, 15).unwrap();
        assert_eq!(route.length_m, 1500.0);
        assert!((0.001 * route.length_m - 1.50).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_trips() {
        let g = generate_grid_graph(6, 6, 100.0).unwrap();
        let m = model(0.002, 0.7, 77);
        assert_eq!(generate_synthetic_trips(&g, 300, &m).unwrap(), generate_synthetic_trips(&g, 300, &m).unwrap());
        let other = SyntheticTipModel { seed: 78, ..m.clone() };
        assert_ne!(generate_synthetic_trips(&g, 300, &m).unwrap(), generate_synthetic_trips(&g, 300, &other).unwrap());
    }

    #[test]
    fn jitter_keeps_snapping() {
        let g = generate_grid_graph(8, 5, 100.0).unwrap();
        let trips = generate_synthetic_trips(&g, 300, &model(0.001, 0.0, 1)).unwrap();
        for t in trips {
            let a = g.nearest_node(t.pickup).unwrap();
            let b = g.nearest_node(t.dropoff).unwrap();
            assert_ne!(a, b);
            assert!(g.metric().distance(t.pickup, g.coordinate(a)) < 50.0);
            let p = Path::new(vec![a, b]).unwrap();
            assert_ne!(p.origin(), p.destination());
        }
    }

    #[test]
    fn area_bonus_shifts_mean() {
        let g = generate_grid_graph(10, 10, 100.0).unwrap();
        let area = AreaEffect { center: Coordinate::new(0.0, 0.0), radius_m: 250.0, bonus: 2.0 };
        let m = SyntheticTipModel { per_meter_rate: 0.0, areas: vec![area], noise_sd: 0.3, seed: 12 };
        let trips = generate_synthetic_trips(&g, 1000, &m).unwrap();
        let (mut inside, mut outside) = (vec![], vec![]);
        for t in &trips {
            if m.area_bonus(g.metric(), t.pickup, t.dropoff) > 0.0 {
                inside.push(t.target);
            } else {
                outside.push(t.target);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(inside.len() > 30);
        let diff = mean(&inside) - mean(&outside);
        assert!((diff - 2.0).abs() < 0.15, "{diff}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let one = generate_grid_graph(1, 1, 100.0).unwrap();
        assert!(generate_synthetic_trips(&one, 5, &model(0.001, 0.0, 1)).is_err());
        let g = generate_grid_graph(3, 3, 100.0).unwrap();
        assert!(generate_synthetic_trips(&g, 0, &model(0.001, 0.0, 1)).is_err());
        assert!(generate_synthetic_trips(&g, 5, &model(0.001, -1.0, 1)).is_err());
        let mut m = model(0.001, 0.0, 1);
        m.areas.push(AreaEffect { center: Coordinate::new(0.0, 0.0), radius_m: 0.0, bonus: 1.0 });
        assert!(generate_synthetic_trips(&g, 5, &m).is_err());
    }
}
