use serde::{Deserialize, Serialize};

/// A point (or vector) in the horizontal plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Axis-aligned zone `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zone {
    pub width: f64,
    pub height: f64,
}

impl Zone {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }
}

/// Line `a*x + b*y + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineCoeffs {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.a * self.a + self.b * self.b > 0.0)
    }

    /// Perpendicular distance from `p` to the line.
    pub fn distance(&self, p: Point) -> f64 {
        (self.a * p.x + self.b * p.y + self.c).abs() / self.a.hypot(self.b)
    }

    /// Orthogonal projection of `p` onto the (unbounded) line.
    pub fn project(&self, p: Point) -> Point {
        let n2 = self.a * self.a + self.b * self.b;
        let r = (self.a * p.x + self.b * p.y + self.c) / n2;
        Point::new(p.x - self.a * r, p.y - self.b * r)
    }

    /// The portion of the line inside `zone`, as its two endpoints.
    ///
    /// Returns `None` when the line misses the zone.
    pub fn clip_to(&self, zone: Zone) -> Option<(Point, Point)> {
        // Parametrize as origin + t * dir with dir a unit vector along the line.
        let n = self.a.hypot(self.b);
        let dir = Point::new(-self.b / n, self.a / n);
        let origin = self.project(Point::new(0.0, 0.0));

        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for (o, d, hi) in [(origin.x, dir.x, zone.width), (origin.y, dir.y, zone.height)] {
            if d.abs() < 1e-15 {
                if o < -1e-9 || o > hi + 1e-9 {
                    return None;
                }
                continue;
            }
            let (t0, t1) = ((0.0 - o) / d, (hi - o) / d);
            t_lo = t_lo.max(t0.min(t1));
            t_hi = t_hi.min(t0.max(t1));
        }
        if t_lo > t_hi {
            return None;
        }
        let at = |t: f64| Point::new(origin.x + t * dir.x, origin.y + t * dir.y);
        Some((at(t_lo), at(t_hi)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn road_clips_to_the_upper_right_corner() {
        let road = LineCoeffs::new(3.0, 2.0, -180.0);
        let zone = Zone { width: 50.0, height: 50.0 };
        let (p, q) = road.clip_to(zone).unwrap();
        let mut ends = [p, q];
        ends.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        assert!((ends[0].x - 80.0 / 3.0).abs() < 1e-9 && (ends[0].y - 50.0).abs() < 1e-9);
        assert!((ends[1].x - 50.0).abs() < 1e-9 && (ends[1].y - 15.0).abs() < 1e-9);
    }

    #[test]
    fn line_missing_the_zone() {
        let road = LineCoeffs::new(1.0, 1.0, 500.0);
        assert!(road.clip_to(Zone { width: 50.0, height: 50.0 }).is_none());
    }

    #[test]
    fn axis_parallel_line() {
        let road = LineCoeffs::new(0.0, 1.0, -10.0);
        let (p, q) = road.clip_to(Zone { width: 50.0, height: 50.0 }).unwrap();
        assert!((p.y - 10.0).abs() < 1e-12 && (q.y - 10.0).abs() < 1e-12);
        assert!((p.x - q.x).abs() > 49.9);
    }
}
