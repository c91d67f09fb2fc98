use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::rmse;
use crate::graph::{Coordinate, Metric, EARTH_RADIUS_M};
use crate::ingest::TripRecord;

/// Radii tried when tuning the area baseline, in meters.
pub const DEFAULT_AREA_RADII: [f64; 8] = [100.0, 250.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Overall,
    Area,
}

/// Predicts from trip coordinates only.
///
/// `Overall` always returns the training mean. `Area` returns the mean target
/// of training trips whose pickup lies within `radius_m` of the query pickup
/// and whose dropoff lies within `radius_m` of the query dropoff, or the
/// training mean when no trip qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    kind: BaselineKind,
    overall_mean: f64,
    radius_m: Option<f64>,
    metric: Metric,
    trips: Vec<TripRecord>,
    /// Training trip indices ordered by pickup `y`, for the band prefilter.
    #[serde(skip)]
    by_y: Vec<usize>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

pub fn train_baseline_overall(targets: &[f64]) -> Result<BaselineModel> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("baseline needs at least one target".into()));
    }
    Ok(BaselineModel {
        kind: BaselineKind::Overall,
        overall_mean: mean_of(targets.iter().copied()),
        radius_m: None,
        metric: Metric::default(),
        trips: Vec::new(),
        by_y: Vec::new(),
    })
}

pub fn train_baseline_area(metric: Metric, trips: &[TripRecord], radius_m: f64) -> Result<BaselineModel> {
    if trips.is_empty() {
        return Err(Error::InvalidArgument("baseline needs at least one trip".into()));
    }
    if radius_m.is_nan() || radius_m <= 0.0 {
        return Err(Error::InvalidArgument(format!("area radius must be positive, got {radius_m}")));
    }
    let mut m = BaselineModel {
        kind: BaselineKind::Area,
        overall_mean: mean_of(trips.iter().map(|t| t.target)),
        radius_m: Some(radius_m),
        metric,
        trips: trips.to_vec(),
        by_y: Vec::new(),
    };
    m.index();
    Ok(m)
}

impl BaselineModel {
    fn index(&mut self) {
        let mut by_y: Vec<usize> = (0..self.trips.len()).collect();
        by_y.sort_by(|&a, &b| self.trips[a].pickup.y.total_cmp(&self.trips[b].pickup.y).then(a.cmp(&b)));
        self.by_y = by_y;
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn overall_mean(&self) -> f64 {
        self.overall_mean
    }

    pub fn radius_m(&self) -> Option<f64> {
        self.radius_m
    }

    pub fn predict(&self, pickup: Coordinate, dropoff: Coordinate) -> f64 {
        let r = match (self.kind, self.radius_m) {
            (BaselineKind::Area, Some(r)) => r,
            _ => return self.overall_mean,
        };
        // Both metrics bound |dy| by the distance (for geographic coordinates
        // the meridian arc), so only a band of pickups can match.
        let half_band = match self.metric {
            Metric::Planar => r,
            Metric::Geographic => (r / EARTH_RADIUS_M).to_degrees(),
        };
        let y = |i: usize| self.trips[i].pickup.y;
        let lo = self.by_y.partition_point(|&i| y(i) < pickup.y - half_band);
        let hi = self.by_y.partition_point(|&i| y(i) <= pickup.y + half_band);
        let mut hits: Vec<usize> = self.by_y[lo..hi]
            .iter()
            .copied()
            .filter(|&i| {
                let t = &self.trips[i];
                self.metric.distance(t.pickup, pickup) <= r && self.metric.distance(t.dropoff, dropoff) <= r
            })
            .collect();
        if hits.is_empty() {
            return self.overall_mean;
        }
        // Sum in training order so a radius covering every trip reproduces the
        // overall mean bit for bit.
        hits.sort_unstable();
        mean_of(hits.into_iter().map(|i| self.trips[i].target))
    }

    pub fn predict_trips(&self, trips: &[TripRecord]) -> Vec<f64> {
        use rayon::prelude::*;
        trips.par_iter().map(|t| self.predict(t.pickup, t.dropoff)).collect()
    }

    pub(crate) fn reindex(&mut self) {
        if self.kind == BaselineKind::Area {
            self.index();
        }
    }
}

/// Picks the candidate radius with the lowest validation RMSE; ties go to the
/// smaller radius.
pub fn tune_area_radius(metric: Metric, train: &[TripRecord], validation: &[TripRecord], candidates: &[f64]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate radii".into()));
    }
    if validation.is_empty() {
        return Err(Error::InvalidArgument("radius tuning needs validation trips".into()));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let actual: Vec<f64> = validation.iter().map(|t| t.target).collect();
    let mut best: Option<(f64, f64)> = None;
    for r in sorted {
        let model = train_baseline_area(metric, train, r)?;
        let score = rmse(&model.predict_trips(validation), &actual)?;
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((r, score));
        }
    }
    Ok(best.expect("candidates are non-empty").0)
}
