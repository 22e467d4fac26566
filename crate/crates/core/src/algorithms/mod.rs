//! Reconstruction algorithms. Every operator application goes through a
//! split plan on the configured device pool.

mod cgls;
mod fdk;
mod operator;
mod ossart;

pub use cgls::cgls;
pub use fdk::{fdk, fdk_with};
pub use operator::Operator;
pub use ossart::{os_sart, os_sart_from, OsSartParams};

use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projectors::{BackwardTileSpec, ForwardMethod, ForwardTileSpec, ProjectionStack, Volume};
use crate::regularization::TvParams;
use crate::scheduler::DevicePool;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Fdk,
    Cgls,
    OsSart,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub volume: Volume,
    /// Relative data residual after each iteration; empty for FDK.
    pub residuals: Vec<f64>,
    /// CGLS stopped on a vanishing denominator.
    pub breakdown: bool,
}

impl Reconstruction {
    /// `iter=<n> residual=<r>` lines.
    pub fn residual_records(&self) -> String {
        self.residuals.iter().enumerate().map(|(i, r)| format!("iter={} residual={r:.9e}\n", i + 1)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ReconConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub block_size: usize,
    pub relaxation: f64,
    pub tv: Option<TvParams>,
    pub pool: DevicePool,
    pub method: ForwardMethod,
    pub forward_tiles: ForwardTileSpec,
    pub backward_tiles: BackwardTileSpec,
    /// Overrides the planner's slab count for every operator pass.
    pub forced_splits: Option<usize>,
}

impl ReconConfig {
    pub fn new(algorithm: Algorithm, pool: DevicePool) -> Self {
        Self {
            algorithm,
            iterations: 10,
            block_size: 20,
            relaxation: 1.0,
            tv: None,
            pool,
            method: ForwardMethod::Interpolated,
            forward_tiles: ForwardTileSpec::default(),
            backward_tiles: BackwardTileSpec::default(),
            forced_splits: None,
        }
    }

    pub fn operator<'a>(&'a self, geometry: &'a ScanGeometry) -> Operator<'a> {
        Operator {
            method: self.method,
            forward_tiles: self.forward_tiles,
            backward_tiles: self.backward_tiles,
            forced_splits: self.forced_splits,
            ..Operator::new(geometry, &self.pool)
        }
    }
}

pub fn reconstruct(projections: &ProjectionStack, geometry: &ScanGeometry, config: &ReconConfig) -> Result<Reconstruction> {
    if config.iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    let op = config.operator(geometry);
    match config.algorithm {
        Algorithm::Fdk => {
            let volume = fdk_with(projections, &op)?;
            Ok(Reconstruction { volume, residuals: Vec::new(), breakdown: false })
        }
        Algorithm::Cgls => cgls(projections, &op, config.iterations),
        Algorithm::OsSart => {
            let params = OsSartParams {
                iterations: config.iterations,
                block_size: config.block_size.min(geometry.n_angles()),
                relaxation: config.relaxation,
                tv: config.tv,
            };
            os_sart(projections, &op, &params)
        }
    }
}
