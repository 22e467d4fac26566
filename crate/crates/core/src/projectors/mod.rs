//! The operator pair `A` / `Aᵀ` on a single in-memory slab.
//!
//! Forward projection is ray driven (Siddon intersection lengths or
//! trilinear sampling); backprojection is voxel driven with FDK distance
//! weights, or the exact adjoint of the sampling projector. Both dispatch
//! work over disjoint output tiles so any number of workers may run a launch.

mod backward;
mod forward;
mod interp;
mod siddon;

use std::ops::Range;

pub use backward::backproject_slab;
pub use forward::forward_project_slab;
pub use siddon::siddon_trace;

pub(crate) use interp::SampledRay;
pub(crate) use siddon::visit_segments;

use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, VoxelGrid};

/// Attenuation values (1/mm) over an axial slab `[z_begin, z_end)` of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    grid: VoxelGrid,
    slab: Range<usize>,
    data: Vec<f32>,
}

impl Volume {
    pub fn zeros(grid: &VoxelGrid) -> Self {
        Self::zeros_slab(grid, 0..grid.n[2]).expect("full range is always valid")
    }

    pub fn filled(grid: &VoxelGrid, value: f32) -> Self {
        Self { grid: grid.clone(), slab: 0..grid.n[2], data: vec![value; grid.len()] }
    }

    pub fn zeros_slab(grid: &VoxelGrid, slab: Range<usize>) -> Result<Self> {
        check_slab(grid, &slab)?;
        let len = grid.slice_len() * slab.len();
        Ok(Self { grid: grid.clone(), slab, data: vec![0.0; len] })
    }

    pub fn from_data(grid: &VoxelGrid, slab: Range<usize>, data: Vec<f32>) -> Result<Self> {
        check_slab(grid, &slab)?;
        let expected = grid.slice_len() * slab.len();
        if data.len() != expected {
            return Err(Error::GridMismatch(format!(
                "volume data holds {} values, slab {:?} needs {expected}",
                data.len(),
                slab
            )));
        }
        Ok(Self { grid: grid.clone(), slab, data })
    }

    /// Evaluates `f` at every voxel centre of the full grid.
    pub fn from_fn(grid: &VoxelGrid, mut f: impl FnMut([f64; 3]) -> f32) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..grid.n[2] {
            for j in 0..grid.n[1] {
                for i in 0..grid.n[0] {
                    data.push(f(grid.voxel_center([i, j, k])));
                }
            }
        }
        Self { grid: grid.clone(), slab: 0..grid.n[2], data }
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn slab_range(&self) -> Range<usize> {
        self.slab.clone()
    }

    pub fn is_full(&self) -> bool {
        self.slab == (0..self.grid.n[2])
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Value at a global voxel index; `k` must fall inside the slab.
    pub fn get(&self, ijk: [usize; 3]) -> f32 {
        self.data[self.local_index(ijk)]
    }

    pub fn set(&mut self, ijk: [usize; 3], value: f32) {
        let idx = self.local_index(ijk);
        self.data[idx] = value;
    }

    #[inline]
    fn local_index(&self, [i, j, k]: [usize; 3]) -> usize {
        debug_assert!(self.slab.contains(&k));
        i + self.grid.n[0] * (j + self.grid.n[1] * (k - self.slab.start))
    }

    /// Copies out a sub-slab.
    pub fn extract_slab(&self, range: Range<usize>) -> Result<Self> {
        if range.start < self.slab.start || range.end > self.slab.end || range.is_empty() {
            return Err(Error::RangeMismatch { expected: self.slab.clone(), got: range });
        }
        let s = self.grid.slice_len();
        let lo = (range.start - self.slab.start) * s;
        let hi = (range.end - self.slab.start) * s;
        Self::from_data(&self.grid, range, self.data[lo..hi].to_vec())
    }

    pub fn scale(&mut self, alpha: f32) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn dot(&self, other: &Volume) -> f64 {
        dot_f32(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

fn check_slab(grid: &VoxelGrid, slab: &Range<usize>) -> Result<()> {
    if slab.start >= slab.end || slab.end > grid.n[2] {
        return Err(Error::RangeMismatch { expected: 0..grid.n[2], got: slab.clone() });
    }
    Ok(())
}

pub(crate) fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Detector frames for the scan angles `[a_begin, a_end)`, u-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionStack {
    detector: DetectorGrid,
    angles: Range<usize>,
    data: Vec<f32>,
}

impl ProjectionStack {
    pub fn zeros(detector: &DetectorGrid, angles: Range<usize>) -> Self {
        let len = detector.frame_len() * angles.len();
        Self { detector: detector.clone(), angles, data: vec![0.0; len] }
    }

    pub fn from_data(detector: &DetectorGrid, angles: Range<usize>, data: Vec<f32>) -> Result<Self> {
        let expected = detector.frame_len() * angles.len();
        if data.len() != expected || angles.is_empty() {
            return Err(Error::GridMismatch(format!(
                "projection data holds {} values, {} angles of {}x{} need {expected}",
                data.len(),
                angles.len(),
                detector.n_u,
                detector.n_v
            )));
        }
        Ok(Self { detector: detector.clone(), angles, data })
    }

    pub fn detector(&self) -> &DetectorGrid {
        &self.detector
    }

    pub fn angle_range(&self) -> Range<usize> {
        self.angles.clone()
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Frame of global angle index `a`.
    pub fn frame(&self, a: usize) -> &[f32] {
        let f = self.detector.frame_len();
        let i = a - self.angles.start;
        &self.data[i * f..(i + 1) * f]
    }

    pub fn get(&self, a: usize, u: usize, v: usize) -> f32 {
        self.frame(a)[u + self.detector.n_u * v]
    }

    /// Copies out a sub-range of angles, re-based to the same global indices.
    pub fn extract(&self, range: Range<usize>) -> Result<Self> {
        if range.start < self.angles.start || range.end > self.angles.end || range.is_empty() {
            return Err(Error::RangeMismatch { expected: self.angles.clone(), got: range });
        }
        let f = self.detector.frame_len();
        let lo = (range.start - self.angles.start) * f;
        let hi = (range.end - self.angles.start) * f;
        Self::from_data(&self.detector, range, self.data[lo..hi].to_vec())
    }

    /// The same data relabelled as angles starting at `start`.
    pub fn rebased(mut self, start: usize) -> Self {
        self.angles = start..start + self.angles.len();
        self
    }

    pub fn dot(&self, other: &ProjectionStack) -> f64 {
        dot_f32(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Line-integral model of the forward projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardMethod {
    /// Exact ray/voxel intersection lengths.
    Siddon,
    /// Trilinear samples at half-voxel spacing.
    Interpolated,
}

/// Backprojection weighting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// `(dso/U)²` distance weights of the FDK algorithm.
    Fdk,
    /// Exact adjoint of [`ForwardMethod::Interpolated`].
    Matched,
}

/// Forward launch shape: pixel tiles of `tile_u × tile_v` over `chunk_angles` projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForwardTileSpec {
    pub tile_u: usize,
    pub tile_v: usize,
    pub chunk_angles: usize,
}

impl Default for ForwardTileSpec {
    fn default() -> Self {
        Self { tile_u: 9, tile_v: 9, chunk_angles: 9 }
    }
}

impl ForwardTileSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tile_u == 0 || self.tile_v == 0 || self.chunk_angles == 0 {
            return Err(Error::InvalidParameter(format!("forward tile sizes must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

/// Backward launch shape: `tile_x × tile_y` voxel columns, each lane updating
/// `voxels_per_unit` voxels along z, over `chunk_angles` projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackwardTileSpec {
    pub tile_x: usize,
    pub tile_y: usize,
    pub chunk_angles: usize,
    pub voxels_per_unit: usize,
}

impl Default for BackwardTileSpec {
    fn default() -> Self {
        Self { tile_x: 16, tile_y: 32, chunk_angles: 32, voxels_per_unit: 8 }
    }
}

impl BackwardTileSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tile_x == 0 || self.tile_y == 0 || self.chunk_angles == 0 || self.voxels_per_unit == 0 {
            return Err(Error::InvalidParameter(format!("backward tile sizes must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

/// Splits `range` into consecutive chunks of at most `chunk` elements.
pub fn chunks_of(range: Range<usize>, chunk: usize) -> impl Iterator<Item = Range<usize>> {
    let chunk = chunk.max(1);
    (range.start..range.end)
        .step_by(chunk)
        .map(move |s| s..(s + chunk).min(range.end))
}
