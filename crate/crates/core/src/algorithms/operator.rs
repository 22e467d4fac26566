use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projectors::{BackwardTileSpec, ForwardMethod, ForwardTileSpec, ProjectionStack, Volume, WeightMode};
use crate::scheduler::{
    execute_backward, execute_forward, plan_backward, plan_backward_with_splits, plan_forward,
    plan_forward_with_splits, DevicePool, SplitPlan,
};

/// `A` and `Aᵀ` for one scan, always executed through split plans on a pool.
#[derive(Clone, Debug)]
pub struct Operator<'a> {
    pub geometry: &'a ScanGeometry,
    pub pool: &'a DevicePool,
    pub method: ForwardMethod,
    pub forward_tiles: ForwardTileSpec,
    pub backward_tiles: BackwardTileSpec,
    /// Overrides the planner's slab count.
    pub forced_splits: Option<usize>,
}

impl<'a> Operator<'a> {
    pub fn new(geometry: &'a ScanGeometry, pool: &'a DevicePool) -> Self {
        Self {
            geometry,
            pool,
            method: ForwardMethod::Interpolated,
            forward_tiles: ForwardTileSpec::default(),
            backward_tiles: BackwardTileSpec::default(),
            forced_splits: None,
        }
    }

    fn subset(&self, angles: &Range<usize>) -> Result<ScanGeometry> {
        self.geometry.with_angles(angles.clone())
    }

    pub fn forward_plan(&self, angles: Range<usize>) -> Result<SplitPlan> {
        let g = self.subset(&angles)?;
        match self.forced_splits {
            Some(s) => plan_forward_with_splits(&g, self.pool, &self.forward_tiles, s),
            None => plan_forward(&g, self.pool, &self.forward_tiles),
        }
    }

    pub fn backward_plan(&self, angles: Range<usize>) -> Result<SplitPlan> {
        let g = self.subset(&angles)?;
        match self.forced_splits {
            Some(s) => plan_backward_with_splits(&g, self.pool, &self.backward_tiles, s),
            None => plan_backward(&g, self.pool, &self.backward_tiles),
        }
    }

    /// Projections of `x` for the scan angles `angles`, labelled with their global indices.
    pub fn forward(&self, x: &Volume, angles: Range<usize>) -> Result<ProjectionStack> {
        let g = self.subset(&angles)?;
        let plan = self.forward_plan(angles.clone())?;
        Ok(execute_forward(x, &g, self.pool, &plan, self.method)?.rebased(angles.start))
    }

    pub fn forward_all(&self, x: &Volume) -> Result<ProjectionStack> {
        self.forward(x, 0..self.geometry.n_angles())
    }

    /// Backprojection of a stack covering any contiguous range of scan angles.
    pub fn backward(&self, y: &ProjectionStack, mode: WeightMode) -> Result<Volume> {
        let angles = y.angle_range();
        if angles.is_empty() {
            return Err(Error::EmptyProjections);
        }
        let g = self.subset(&angles)?;
        let plan = self.backward_plan(angles)?;
        let local = y.clone().rebased(0);
        execute_backward(&local, &g, self.pool, &plan, mode)
    }
}

/// `y ← y + α·x`, evaluated in `f64`.
pub(crate) fn axpy(alpha: f64, x: &[f32], y: &mut [f32]) {
    for (b, &a) in y.iter_mut().zip(x) {
        *b = (*b as f64 + alpha * a as f64) as f32;
    }
}

/// `y ← x + β·y`.
pub(crate) fn xpby(x: &[f32], beta: f64, y: &mut [f32]) {
    for (b, &a) in y.iter_mut().zip(x) {
        *b = (a as f64 + beta * *b as f64) as f32;
    }
}

/// Elementwise inverse, with values below `1e-8` in magnitude mapped to zero.
pub(crate) fn guarded_inverse(v: &mut [f32]) {
    for x in v.iter_mut() {
        *x = if x.abs() < 1e-8 { 0.0 } else { 1.0 / *x };
    }
}
