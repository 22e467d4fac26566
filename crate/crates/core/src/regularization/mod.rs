//! Total-variation regularizers and their halo-split multi-device driver.
//!
//! One iteration of either minimizer reads only the immediate neighbours of a
//! voxel, so a slab carrying `d` ghost layers on each interior face can run
//! `d` iterations on its own before the ghosts need refreshing.

mod rof;
mod split;
mod tv;

pub use rof::{minimize_rof, minimize_rof_with_dual_peak};
pub use split::{split_minimize, split_minimize_report, HaloSlab, SplitReport};
pub use tv::{minimize_tv_gradient, tv_norm};

use crate::error::{Error, Result};

/// Smoothing added under the square root of the TV gradient.
pub const TV_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Minimizer {
    /// Normalised subgradient steps of length `step`.
    GradientDescent { step: f64 },
    /// Dual projection for `argmin ½‖u − f‖² + λ·TV(u)`.
    Rof { lambda: f64 },
}

/// How each device obtains the gradient norm that scales a descent step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// Exact norm over the whole volume, reduced across devices every iteration.
    ExactGlobal,
    /// Local slab norm scaled by `sqrt(total voxels / slab voxels)`.
    LocalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvParams {
    pub minimizer: Minimizer,
    pub outer_syncs: usize,
    pub inner_iters: usize,
    pub halo_depth: usize,
    pub norm_mode: NormMode,
}

impl TvParams {
    pub fn gradient_descent(step: f64) -> Self {
        Self::new(Minimizer::GradientDescent { step })
    }

    pub fn rof(lambda: f64) -> Self {
        Self::new(Minimizer::Rof { lambda })
    }

    fn new(minimizer: Minimizer) -> Self {
        Self { minimizer, outer_syncs: 1, inner_iters: 60, halo_depth: 60, norm_mode: NormMode::ExactGlobal }
    }

    /// `inner_iters` and `halo_depth` both set to `depth`.
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.inner_iters = depth;
        self.halo_depth = depth;
        self
    }

    pub fn with_syncs(mut self, outer_syncs: usize) -> Self {
        self.outer_syncs = outer_syncs;
        self
    }

    pub fn with_norm(mut self, norm_mode: NormMode) -> Self {
        self.norm_mode = norm_mode;
        self
    }

    /// Iterations of a run without splitting.
    pub fn total_iters(&self) -> usize {
        self.outer_syncs * self.inner_iters
    }

    pub fn validate(&self) -> Result<()> {
        match self.minimizer {
            Minimizer::GradientDescent { step } if !(step > 0.0 && step.is_finite()) => {
                return Err(Error::InvalidParameter(format!("TV step must be > 0, got {step}")));
            }
            Minimizer::Rof { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                return Err(Error::InvalidParameter(format!("ROF lambda must be > 0, got {lambda}")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Working copies a device holds besides the image itself.
    pub fn aux_copies(&self) -> usize {
        match self.minimizer {
            Minimizer::GradientDescent { .. } => 1,
            Minimizer::Rof { .. } => 5,
        }
    }
}

/// Local index helper for an `n[0] × n[1] × n[2]` block.
#[inline]
pub(crate) fn idx(n: [usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + n[0] * (j + n[1] * k)
}
