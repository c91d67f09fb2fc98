//! Uniform bucket grid for nearest-node queries.
//!
//! Cells are laid out in coordinate units (degrees or meters) with a side close
//! to the median edge length. A query scans rings of cells around its own cell
//! and stops once no unscanned cell can hold a closer node, so results always
//! equal an exhaustive scan.

use super::{Coordinate, Metric, EARTH_RADIUS_M};

const METERS_PER_DEGREE: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone)]
pub(super) struct SpatialGrid {
    min_x: f64,
    min_y: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    starts: Vec<usize>,
    items: Vec<usize>,
    // Largest |latitude| among nodes, radians; bounds longitude gaps.
    max_abs_lat: f64,
    wraps_longitude: bool,
}

impl SpatialGrid {
    pub(super) fn build(metric: Metric, coords: &[Coordinate], adjacency: &[Vec<(usize, f64)>]) -> Option<Self> {
        if coords.is_empty() {
            return None;
        }
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in coords {
            min_x = min_x.min(c.x);
            min_y = min_y.min(c.y);
            max_x = max_x.max(c.x);
            max_y = max_y.max(c.y);
        }
        let (w, h) = (max_x - min_x, max_y - min_y);

        let mut lengths: Vec<f64> = adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, l)| l.iter().filter(move |(b, _)| a < *b).map(|&(_, len)| len))
            .collect();
        let median_m = if lengths.is_empty() {
            None
        } else {
            let mid = lengths.len() / 2;
            let (_, m, _) = lengths.select_nth_unstable_by(mid, f64::total_cmp);
            Some(*m)
        };
        let mut cell = match (metric, median_m) {
            (Metric::Planar, Some(m)) => m,
            (Metric::Geographic, Some(m)) => m / METERS_PER_DEGREE,
            (_, None) => w.max(h) / (coords.len() as f64).sqrt(),
        };
        if !(cell.is_finite() && cell > 0.0) {
            cell = if w.max(h) > 0.0 { w.max(h) } else { 1.0 };
        }

        // Keep the cell count proportional to the node count.
        let cap = 4 * coords.len() + 16;
        let dims = |cell: f64| ((w / cell).floor() as usize + 1, (h / cell).floor() as usize + 1);
        let (mut cols, mut rows) = dims(cell);
        while cols.saturating_mul(rows) > cap {
            cell *= ((cols * rows) as f64 / cap as f64).sqrt().max(1.01);
            (cols, rows) = dims(cell);
        }

        let cell_of = |c: &Coordinate| {
            let cx = (((c.x - min_x) / cell).floor() as usize).min(cols - 1);
            let cy = (((c.y - min_y) / cell).floor() as usize).min(rows - 1);
            cy * cols + cx
        };
        let mut counts = vec![0usize; cols * rows + 1];
        for c in coords {
            counts[cell_of(c) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; coords.len()];
        for (i, c) in coords.iter().enumerate() {
            let slot = &mut fill[cell_of(c)];
            items[*slot] = i;
            *slot += 1;
        }

        let max_abs_lat = coords.iter().map(|c| c.y.abs()).fold(0.0, f64::max).min(90.0).to_radians();
        Some(SpatialGrid {
            min_x,
            min_y,
            cell,
            cols,
            rows,
            starts,
            items,
            max_abs_lat,
            wraps_longitude: metric == Metric::Geographic && w > 180.0,
        })
    }

    pub(super) fn nearest(&self, metric: Metric, coords: &[Coordinate], q: Coordinate) -> usize {
        let clamp_cell = |v: f64, n: usize| {
            let f = v.floor();
            if f < 0.0 || f.is_nan() {
                0
            } else {
                (f as usize).min(n - 1)
            }
        };
        let cx = clamp_cell((q.x - self.min_x) / self.cell, self.cols);
        let cy = clamp_cell((q.y - self.min_y) / self.cell, self.rows);

        let mut best: Option<(f64, usize)> = None;
        let max_ring = self.cols.max(self.rows);
        for r in 0..=max_ring {
            self.scan_ring(cx, cy, r, |i| {
                let d = metric.distance(q, coords[i]);
                let better = match best {
                    None => true,
                    Some((bd, bi)) => d < bd || (d == bd && i < bi),
                };
                if better {
                    best = Some((d, i));
                }
            });
            if let Some((bd, _)) = best {
                match self.unscanned_lower_bound(metric, q, cx, cy, r) {
                    None => break,
                    Some(lb) if bd < lb => break,
                    Some(_) => {}
                }
            }
        }
        best.expect("grid holds at least one node").1
    }

    fn scan_ring(&self, cx: usize, cy: usize, r: usize, mut visit: impl FnMut(usize)) {
        let (cx, cy, r) = (cx as isize, cy as isize, r as isize);
        let mut cell = |x: isize, y: isize| {
            if x < 0 || y < 0 || x >= self.cols as isize || y >= self.rows as isize {
                return;
            }
            let id = y as usize * self.cols + x as usize;
            for &i in &self.items[self.starts[id]..self.starts[id + 1]] {
                visit(i);
            }
        };
        if r == 0 {
            cell(cx, cy);
            return;
        }
        for dy in -r..=r {
            if dy.abs() == r {
                for dx in -r..=r {
                    cell(cx + dx, cy + dy);
                }
            } else {
                cell(cx - r, cy + dy);
                cell(cx + r, cy + dy);
            }
        }
    }

    /// Lower bound in meters on the distance from `q` to any node outside the
    /// scanned box of radius `r`; `None` when the box covers the whole grid.
    fn unscanned_lower_bound(&self, metric: Metric, q: Coordinate, cx: usize, cy: usize, r: usize) -> Option<f64> {
        let gap = |c: usize, n: usize, origin: f64, v: f64| -> f64 {
            let lo = if c <= r {
                f64::INFINITY
            } else {
                v - (origin + (c - r) as f64 * self.cell)
            };
            let hi = if c + r >= n - 1 {
                f64::INFINITY
            } else {
                (origin + (c + r + 1) as f64 * self.cell) - v
            };
            lo.min(hi).max(0.0)
        };
        let gx = gap(cx, self.cols, self.min_x, q.x);
        let gy = gap(cy, self.rows, self.min_y, q.y);
        if gx.is_infinite() && gy.is_infinite() {
            return None;
        }
        let bound = match metric {
            Metric::Planar => gx.min(gy),
            Metric::Geographic => {
                let from_lat = if gy.is_infinite() {
                    f64::INFINITY
                } else {
                    EARTH_RADIUS_M * gy.min(180.0).to_radians()
                };
                let from_lon = if gx.is_infinite() {
                    f64::INFINITY
                } else if self.wraps_longitude {
                    0.0
                } else {
                    // hav(d/R) >= cos^2(lat_max) * hav(dlon)
                    let lat_max = self.max_abs_lat.max(q.y.abs().min(90.0).to_radians());
                    let half = gx.min(180.0).to_radians() / 2.0;
                    2.0 * EARTH_RADIUS_M * (lat_max.cos() * half.sin()).min(1.0).asin()
                };
                from_lat.min(from_lon)
            }
        };
        Some(bound * (1.0 - 1e-9))
    }
}
