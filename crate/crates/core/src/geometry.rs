//! Cone-beam scan geometry and per-pixel ray generation.
//!
//! Conventions shared by every other module:
//!
//! * world coordinates are millimetres, `z` is the rotation (axial) axis;
//! * at angle `θ` the source sits at `dso·(cos θ, sin θ, 0)` and the detector
//!   plane is perpendicular to the source–axis line, `dsd` away from the source
//!   on the opposite side of the axis;
//! * the detector `u` axis is `(−sin θ, cos θ, 0)` and its `v` axis is `+z`;
//! * voxel `(i, j, k)` is centred at `offset + (i − (n_x − 1)/2)·d_x` (etc.),
//!   and volumes are stored x-fastest, then y, then z.

use std::ops::Range;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// The image-side voxel lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub n: [usize; 3],
    pub voxel_size: Vec3,
    /// Displacement of the grid centre from the rotation axis.
    pub origin_offset: Vec3,
}

impl VoxelGrid {
    pub fn new(n: [usize; 3], voxel_size: Vec3, origin_offset: Vec3) -> Result<Self> {
        if n.iter().any(|&c| c == 0) {
            return Err(Error::InvalidGeometry(format!("voxel counts must be >= 1, got {n:?}")));
        }
        if voxel_size.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidGeometry(format!(
                "voxel sizes must be positive, got {voxel_size:?}"
            )));
        }
        if origin_offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite origin offset".into()));
        }
        n[0].checked_mul(n[1])
            .and_then(|p| p.checked_mul(n[2]))
            .filter(|&p| (p as u64) < u64::MAX / 4)
            .ok_or_else(|| Error::InvalidGeometry("voxel count overflows a 64-bit index".into()))?;
        Ok(Self { n, voxel_size, origin_offset })
    }

    /// Cubic grid of `n³` voxels of side `voxel_mm`, centred on the axis.
    pub fn cube(n: usize, voxel_mm: f64) -> Result<Self> {
        Self::new([n; 3], [voxel_mm; 3], [0.0; 3])
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice_len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn extent(&self) -> Vec3 {
        [
            self.n[0] as f64 * self.voxel_size[0],
            self.n[1] as f64 * self.voxel_size[1],
            self.n[2] as f64 * self.voxel_size[2],
        ]
    }

    /// Lower corner of the bounding box.
    pub fn lower(&self) -> Vec3 {
        let e = self.extent();
        [
            self.origin_offset[0] - 0.5 * e[0],
            self.origin_offset[1] - 0.5 * e[1],
            self.origin_offset[2] - 0.5 * e[2],
        ]
    }

    pub fn upper(&self) -> Vec3 {
        let e = self.extent();
        [
            self.origin_offset[0] + 0.5 * e[0],
            self.origin_offset[1] + 0.5 * e[1],
            self.origin_offset[2] + 0.5 * e[2],
        ]
    }

    /// World coordinate of the centre of voxel index `i` along `axis`.
    #[inline]
    pub fn center_coord(&self, axis: usize, i: usize) -> f64 {
        self.origin_offset[axis] + (i as f64 - 0.5 * (self.n[axis] as f64 - 1.0)) * self.voxel_size[axis]
    }

    pub fn voxel_center(&self, ijk: [usize; 3]) -> Vec3 {
        [self.center_coord(0, ijk[0]), self.center_coord(1, ijk[1]), self.center_coord(2, ijk[2])]
    }

    /// Radius of the sphere circumscribing the bounding box, about the grid centre.
    pub fn circumradius(&self) -> f64 {
        0.5 * norm(self.extent())
    }

    #[inline]
    pub fn linear_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.n[0] * (ijk[1] + self.n[1] * ijk[2])
    }
}

/// Flat-panel detector description.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorGrid {
    pub n_u: usize,
    pub n_v: usize,
    pub pixel_size: [f64; 2],
    pub offset: [f64; 2],
}

impl DetectorGrid {
    pub fn new(n_u: usize, n_v: usize, pixel_size: [f64; 2], offset: [f64; 2]) -> Result<Self> {
        if n_u == 0 || n_v == 0 {
            return Err(Error::InvalidGeometry(format!("detector counts must be >= 1, got {n_u}x{n_v}")));
        }
        if pixel_size.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidGeometry(format!(
                "pixel sizes must be positive, got {pixel_size:?}"
            )));
        }
        if offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite detector offset".into()));
        }
        Ok(Self { n_u, n_v, pixel_size, offset })
    }

    pub fn frame_len(&self) -> usize {
        self.n_u * self.n_v
    }

    /// In-plane coordinates (mm) of the centre of pixel `(u, v)`.
    #[inline]
    pub fn pixel_coords(&self, u: usize, v: usize) -> (f64, f64) {
        (
            (u as f64 - 0.5 * (self.n_u as f64 - 1.0)) * self.pixel_size[0] + self.offset[0],
            (v as f64 - 0.5 * (self.n_v as f64 - 1.0)) * self.pixel_size[1] + self.offset[1],
        )
    }

    /// Continuous pixel index of an in-plane coordinate; inverse of [`Self::pixel_coords`].
    #[inline]
    pub fn fractional_index(&self, cu: f64, cv: f64) -> (f64, f64) {
        (
            (cu - self.offset[0]) / self.pixel_size[0] + 0.5 * (self.n_u as f64 - 1.0),
            (cv - self.offset[1]) / self.pixel_size[1] + 0.5 * (self.n_v as f64 - 1.0),
        )
    }
}

/// A source-to-pixel ray, parametrised by arc length from the source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_entry: f64,
    pub t_exit: f64,
}

impl Ray {
    /// Builds a ray and clips it against an axis-aligned box with the slab method.
    pub fn through_box(origin: Vec3, direction: Vec3, lower: Vec3, upper: Vec3) -> Self {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for a in 0..3 {
            let d = direction[a];
            if d == 0.0 {
                if origin[a] < lower[a] || origin[a] > upper[a] {
                    t0 = f64::INFINITY;
                    t1 = f64::NEG_INFINITY;
                    break;
                }
                continue;
            }
            let ta = (lower[a] - origin[a]) / d;
            let tb = (upper[a] - origin[a]) / d;
            let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
        }
        Ray { origin, direction, t_entry: t0, t_exit: t1 }
    }

    pub fn is_miss(&self) -> bool {
        !(self.t_entry <= self.t_exit)
    }

    pub fn chord(&self) -> f64 {
        if self.is_miss() {
            0.0
        } else {
            self.t_exit - self.t_entry
        }
    }

    #[inline]
    pub fn point_at(&self, t: f64) -> Vec3 {
        [
            self.origin[0] + t * self.direction[0],
            self.origin[1] + t * self.direction[1],
            self.origin[2] + t * self.direction[2],
        ]
    }
}

/// Complete description of a circular cone-beam scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanGeometry {
    pub dso: f64,
    pub dsd: f64,
    pub angles: Vec<f64>,
    pub voxel_grid: VoxelGrid,
    pub detector: DetectorGrid,
}

impl ScanGeometry {
    pub fn new(dso: f64, dsd: f64, angles: Vec<f64>, voxel_grid: VoxelGrid, detector: DetectorGrid) -> Result<Self> {
        if !(dso > 0.0 && dsd > dso && dsd.is_finite()) {
            return Err(Error::InvalidGeometry(format!("need dsd > dso > 0, got dso={dso}, dsd={dsd}")));
        }
        if angles.is_empty() {
            return Err(Error::InvalidGeometry("angle list is empty".into()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite angle".into()));
        }
        let r = voxel_grid.circumradius();
        let c = voxel_grid.origin_offset;
        for &theta in &angles {
            let along = c[0] * theta.cos() + c[1] * theta.sin();
            if along + r >= dso {
                return Err(Error::InvalidGeometry(format!(
                    "voxel grid reaches the source at angle {theta} (needs {} < dso={dso})",
                    along + r
                )));
            }
            if along - r <= dso - dsd {
                return Err(Error::InvalidGeometry(format!(
                    "voxel grid crosses the detector plane at angle {theta}"
                )));
            }
        }
        Ok(Self { dso, dsd, angles, voxel_grid, detector })
    }

    /// A scan whose detector just covers the grid's shadow from every angle.
    ///
    /// Source distance is four circumradii, magnification at the axis is two, and
    /// the outermost pixel centres sit 5% beyond the shadow edge.
    pub fn fitted(voxel_grid: VoxelGrid, n_u: usize, n_v: usize, angles: Vec<f64>) -> Result<Self> {
        let c = voxel_grid.origin_offset;
        let e = voxel_grid.extent();
        let reach = voxel_grid.circumradius() + norm(c);
        let dso = 4.0 * reach;
        let dsd = 2.0 * dso;
        let r_xy = 0.5 * (e[0] * e[0] + e[1] * e[1]).sqrt() + (c[0] * c[0] + c[1] * c[1]).sqrt();
        let half_u = r_xy * dsd / (dso * dso - r_xy * r_xy).sqrt();
        let half_v = (0.5 * e[2] + c[2].abs()) * dsd / (dso - r_xy);
        let detector = DetectorGrid::new(
            n_u,
            n_v,
            [2.1 * half_u / (n_u.max(2) - 1) as f64, 2.1 * half_v / (n_v.max(2) - 1) as f64],
            [0.0, 0.0],
        )?;
        Self::new(dso, dsd, angles, voxel_grid, detector)
    }

    /// `count` angles uniformly spaced over `[0, 2π)`.
    pub fn full_circle(count: usize) -> Vec<f64> {
        (0..count).map(|i| i as f64 * std::f64::consts::TAU / count as f64).collect()
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    /// A copy restricted to a contiguous subset of angles.
    pub fn with_angles(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.angles.len() {
            return Err(Error::RangeMismatch { expected: 0..self.angles.len(), got: range });
        }
        Ok(Self { angles: self.angles[range].to_vec(), ..self.clone() })
    }

    fn angle(&self, angle_index: usize) -> Result<f64> {
        self.angles.get(angle_index).copied().ok_or(Error::IndexOutOfRange {
            what: "angle",
            index: angle_index,
            len: self.angles.len(),
        })
    }

    pub fn source_position(&self, angle_index: usize) -> Result<Vec3> {
        let theta = self.angle(angle_index)?;
        Ok([self.dso * theta.cos(), self.dso * theta.sin(), 0.0])
    }

    pub fn pixel_ray(&self, angle_index: usize, u: usize, v: usize) -> Result<Ray> {
        let theta = self.angle(angle_index)?;
        if u >= self.detector.n_u {
            return Err(Error::IndexOutOfRange { what: "detector u", index: u, len: self.detector.n_u });
        }
        if v >= self.detector.n_v {
            return Err(Error::IndexOutOfRange { what: "detector v", index: v, len: self.detector.n_v });
        }
        Ok(self.ray_unchecked(theta.cos(), theta.sin(), u, v))
    }

    /// Ray construction without bounds checks, for the projector inner loops.
    #[inline]
    pub(crate) fn ray_unchecked(&self, cos_t: f64, sin_t: f64, u: usize, v: usize) -> Ray {
        let source = [self.dso * cos_t, self.dso * sin_t, 0.0];
        let (cu, cv) = self.detector.pixel_coords(u, v);
        // Source-to-pixel vector: −dsd along the source axis, plus in-plane offsets.
        let d = [
            -self.dsd * cos_t - cu * sin_t,
            -self.dsd * sin_t + cu * cos_t,
            cv,
        ];
        let len = norm(d);
        let dir = [d[0] / len, d[1] / len, d[2] / len];
        Ray::through_box(source, dir, self.voxel_grid.lower(), self.voxel_grid.upper())
    }

    /// Arc covered by the angle list (`max − min`).
    pub fn angular_span(&self) -> f64 {
        let (lo, hi) = self
            .angles
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        hi - lo
    }
}
