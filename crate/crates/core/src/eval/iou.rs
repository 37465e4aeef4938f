use serde::{Deserialize, Serialize};

/// Axis-aligned 3D box given by its centroid and full side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub centroid: [f64; 3],
    pub extent: [f64; 3],
}

impl Box3 {
    pub const fn new(centroid: [f64; 3], extent: [f64; 3]) -> Self {
        Self { centroid, extent }
    }

    pub fn is_valid(&self) -> bool {
        self.centroid.iter().all(|c| c.is_finite())
            && self.extent.iter().all(|e| e.is_finite() && *e > 0.0)
    }

    /// Lower and upper corners.
    pub fn corners(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for k in 0..3 {
            lo[k] = self.centroid[k] - self.extent[k] / 2.0;
            hi[k] = self.centroid[k] + self.extent[k] / 2.0;
        }
        (lo, hi)
    }

    // Computed from the corners so that a box's self-intersection equals its volume bit-for-bit.
    pub fn volume(&self) -> f64 {
        let (lo, hi) = self.corners();
        (0..3).map(|k| hi[k] - lo[k]).product()
    }

    pub fn translated(&self, by: [f64; 3]) -> Self {
        Self::new(
            [self.centroid[0] + by[0], self.centroid[1] + by[1], self.centroid[2] + by[2]],
            self.extent,
        )
    }
}

/// Intersection over union of two axis-aligned boxes.
pub fn iou3d(a: &Box3, b: &Box3) -> f64 {
    let (alo, ahi) = a.corners();
    let (blo, bhi) = b.corners();
    let mut inter = 1.0;
    for k in 0..3 {
        let overlap = ahi[k].min(bhi[k]) - alo[k].max(blo[k]);
        if overlap <= 0.0 {
            return 0.0;
        }
        inter *= overlap;
    }
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
