use super::operator::{axpy, xpby};
use super::{Operator, Reconstruction};
use crate::error::{Error, Result};
use crate::projectors::{ForwardMethod, ProjectionStack, Volume, WeightMode};

/// Conjugate gradients on the normal equations from `x = 0`, with the
/// sampling projector and its exact adjoint.
///
/// `residuals[i]` is `‖b − A x‖ / ‖b‖` after iteration `i + 1`. Iteration
/// stops early, with `breakdown` set, once a recurrence denominator drops
/// below `1e-30`.
pub fn cgls(projections: &ProjectionStack, op: &Operator<'_>, iterations: usize) -> Result<Reconstruction> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("CGLS needs at least one iteration".into()));
    }
    let geometry = op.geometry;
    if projections.angle_range() != (0..geometry.n_angles()) || projections.detector() != &geometry.detector {
        return Err(Error::GridMismatch("CGLS needs the full scan on the scan detector".into()));
    }
    let op = Operator { method: ForwardMethod::Interpolated, ..op.clone() };
    let b_norm = projections.norm();
    let mut x = Volume::zeros(&geometry.voxel_grid);
    let mut r = projections.clone();
    let mut s = op.backward(&r, WeightMode::Matched)?;
    let mut p = s.clone();
    let mut gamma = s.dot(&s);
    let mut residuals = Vec::with_capacity(iterations);
    let mut breakdown = false;

    for _ in 0..iterations {
        let q = op.forward_all(&p)?;
        let delta = q.dot(&q);
        if delta < 1e-30 || gamma < 1e-30 {
            breakdown = true;
            break;
        }
        let alpha = gamma / delta;
        axpy(alpha, p.data(), x.data_mut());
        axpy(-alpha, q.data(), r.data_mut());
        residuals.push(if b_norm > 0.0 { r.norm() / b_norm } else { 0.0 });

        s = op.backward(&r, WeightMode::Matched)?;
        let gamma_next = s.dot(&s);
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        xpby(s.data(), beta, p.data_mut());
    }
    Ok(Reconstruction { volume: x, residuals, breakdown })
}
