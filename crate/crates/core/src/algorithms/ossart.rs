use std::ops::Range;

use super::operator::guarded_inverse;
use super::{Operator, Reconstruction};
use crate::error::{Error, Result};
use crate::projectors::{chunks_of, ProjectionStack, Volume, WeightMode};
use crate::regularization::{split_minimize, TvParams};

#[derive(Clone, Debug, PartialEq)]
pub struct OsSartParams {
    pub iterations: usize,
    pub block_size: usize,
    pub relaxation: f64,
    /// TV minimisation applied after every full iteration.
    pub tv: Option<TvParams>,
}

impl Default for OsSartParams {
    fn default() -> Self {
        Self { iterations: 10, block_size: 20, relaxation: 1.0, tv: None }
    }
}

/// Ordered-subsets SART from zero.
pub fn os_sart(projections: &ProjectionStack, op: &Operator<'_>, params: &OsSartParams) -> Result<Reconstruction> {
    os_sart_from(projections, op, params, Volume::zeros(&op.geometry.voxel_grid))
}

/// Ordered-subsets SART from `initial`.
///
/// For each block `S`: `x ← x + λ·V_S ∘ Aᵀ_S W_S (b_S − A_S x)` where `W_S`
/// and `V_S` invert the row and column sums of `A_S`. `residuals[i]` is
/// `‖b − A x‖ / ‖b‖` after iteration `i + 1`.
pub fn os_sart_from(
    projections: &ProjectionStack,
    op: &Operator<'_>,
    params: &OsSartParams,
    initial: Volume,
) -> Result<Reconstruction> {
    let geometry = op.geometry;
    let n = geometry.n_angles();
    if !(params.relaxation > 0.0 && params.relaxation < 2.0) {
        return Err(Error::InvalidParameter(format!("relaxation must be in (0, 2), got {}", params.relaxation)));
    }
    if params.iterations == 0 || params.block_size == 0 || params.block_size > n {
        return Err(Error::InvalidParameter(format!(
            "need iterations >= 1 and 1 <= block_size <= {n}, got {} and {}",
            params.iterations, params.block_size
        )));
    }
    if projections.angle_range() != (0..n) || projections.detector() != &geometry.detector {
        return Err(Error::GridMismatch("OS-SART needs the full scan on the scan detector".into()));
    }
    if initial.grid() != &geometry.voxel_grid || !initial.is_full() {
        return Err(Error::GridMismatch("initial volume does not match the scan grid".into()));
    }

    let blocks: Vec<Range<usize>> = chunks_of(0..n, params.block_size).collect();
    let ones = Volume::filled(&geometry.voxel_grid, 1.0);
    let mut row_weights = op.forward_all(&ones)?;
    guarded_inverse(row_weights.data_mut());
    let mut col_weights = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let ones_b = ProjectionStack::from_data(
            &geometry.detector,
            block.clone(),
            vec![1.0; geometry.detector.frame_len() * block.len()],
        )?;
        let mut v = op.backward(&ones_b, WeightMode::Matched)?;
        guarded_inverse(v.data_mut());
        col_weights.push(v);
    }

    let b_norm = projections.norm();
    let mut x = initial;
    let mut residuals = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        for (block, v) in blocks.iter().zip(&col_weights) {
            let mut r = op.forward(&x, block.clone())?;
            let b = projections.extract(block.clone())?;
            let w = row_weights.extract(block.clone())?;
            for ((ri, &bi), &wi) in r.data_mut().iter_mut().zip(b.data()).zip(w.data()) {
                *ri = ((bi as f64 - *ri as f64) * wi as f64) as f32;
            }
            let c = op.backward(&r, WeightMode::Matched)?;
            for ((xi, &ci), &vi) in x.data_mut().iter_mut().zip(c.data()).zip(v.data()) {
                *xi = (*xi as f64 + params.relaxation * vi as f64 * ci as f64) as f32;
            }
        }
        if let Some(tv) = &params.tv {
            x = split_minimize(&x, op.pool, tv)?;
        }
        let ax = op.forward_all(&x)?;
        let res: f64 = ax
            .data()
            .iter()
            .zip(projections.data())
            .map(|(&a, &b)| (b as f64 - a as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        residuals.push(if b_norm > 0.0 { res / b_norm } else { 0.0 });
    }
    Ok(Reconstruction { volume: x, residuals, breakdown: false })
}
