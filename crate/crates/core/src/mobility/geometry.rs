use serde::{Deserialize, Serialize};

use crate::proto::Position;

/// Axis-aligned rectangle, e.g. a building footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min: [min_x, min_y],
            max: [max_x, max_y],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.min.iter().chain(&self.max).all(|v| v.is_finite())
            && self.min[0] < self.max[0]
            && self.min[1] < self.max[1]
    }

    fn corners(&self) -> [Position; 4] {
        [
            Position::new(self.min[0], self.min[1]),
            Position::new(self.max[0], self.min[1]),
            Position::new(self.max[0], self.max[1]),
            Position::new(self.min[0], self.max[1]),
        ]
    }

    /// Liang-Barsky clip of segment `a`-`b` against the closed rectangle.
    pub fn intersects_segment(&self, a: Position, b: Position) -> bool {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-dx, a.x - self.min[0]),
            (dx, self.max[0] - a.x),
            (-dy, a.y - self.min[1]),
            (dy, self.max[1] - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    /// Positive-area overlap with a convex polygon (separating axis test).
    pub fn overlaps_convex(&self, poly: &[Position]) -> bool {
        let rect = self.corners();
        let mut axes: Vec<(f64, f64)> = vec![(1.0, 0.0), (0.0, 1.0)];
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            axes.push((-(q.y - p.y), q.x - p.x));
        }
        let project = |pts: &[Position], (ax, ay): (f64, f64)| {
            pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let v = p.x * ax + p.y * ay;
                (lo.min(v), hi.max(v))
            })
        };
        axes.into_iter().all(|axis| {
            let (a0, a1) = project(&rect, axis);
            let (b0, b1) = project(poly, axis);
            a0 < b1 && b0 < a1
        })
    }
}

/// True iff the straight path between `a` and `b` crosses no obstacle.
pub fn line_of_sight(a: Position, b: Position, obstacles: &[Rect]) -> bool {
    if a == b {
        return true;
    }
    !obstacles.iter().any(|r| r.intersects_segment(a, b))
}
