//! Planar geometry used by the simulator and pool validation.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Planar robot pose in meters and radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Expresses `other` in the frame of `self`.
    pub fn relative(&self, other: &Pose) -> Pose {
        let (s, c) = self.yaw.sin_cos();
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        Pose::new(
            c * dx + s * dy,
            -s * dx + c * dy,
            normalize_angle(other.yaw - self.yaw),
        )
    }

    /// Applies a pose expressed in the frame of `self`.
    pub fn compose(&self, local: &Pose) -> Pose {
        let (s, c) = self.yaw.sin_cos();
        Pose::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
            normalize_angle(self.yaw + local.yaw),
        )
    }

    /// Maps a world point into the frame obtained by replacing `self` with `to`.
    pub fn transfer_point(&self, to: &Pose, point: [f64; 2]) -> [f64; 2] {
        let local = self.relative(&Pose::new(point[0], point[1], 0.0));
        let mapped = to.compose(&local);
        [mapped.x, mapped.y]
    }
}

/// Wraps an angle into `(-π, π]`. Angles already in range are returned unchanged.
pub fn normalize_angle(mut a: f64) -> f64 {
    if !a.is_finite() {
        return a;
    }
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// A wall segment between two planar points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub const fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { a, b }
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (self.b[0] - self.a[0], self.b[1] - self.a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p[0] - self.a[0]) * dx + (p[1] - self.a[1]) * dy) / len2).clamp(0.0, 1.0)
        };
        let cx = self.a[0] + t * dx;
        let cy = self.a[1] + t * dy;
        ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
    }

    /// Distance along the ray `origin + t * (cos θ, sin θ)` to the segment, if hit.
    ///
    /// Rays parallel to the segment never report a hit.
    pub fn ray_hit(&self, origin: [f64; 2], heading: f64) -> Option<f64> {
        let (dir_y, dir_x) = heading.sin_cos();
        let (ex, ey) = (self.b[0] - self.a[0], self.b[1] - self.a[1]);
        let denom = dir_x * ey - dir_y * ex;
        if denom.abs() < 1e-12 {
            return None;
        }
        let (wx, wy) = (self.a[0] - origin[0], self.a[1] - origin[1]);
        let t = (wx * ey - wy * ex) / denom;
        let u = (wx * dir_y - wy * dir_x) / denom;
        if t >= 0.0 && (0.0..=1.0).contains(&u) {
            Some(t)
        } else {
            None
        }
    }
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn is_well_formed(&self) -> bool {
        self.min.iter().chain(&self.max).all(|v| v.is_finite())
            && self.min[0] < self.max[0]
            && self.min[1] < self.max[1]
    }
}

/// Minimum distance from `p` to any of `walls`, infinite when there are none.
pub fn clearance(walls: &[Segment], p: [f64; 2]) -> f64 {
    walls
        .iter()
        .map(|w| w.distance_to(p))
        .fold(f64::INFINITY, f64::min)
}
