use rayon::prelude::*;

use super::tv::forward_diffs;
use super::{idx, Minimizer, TvParams};
use crate::error::{Error, Result};
use crate::projectors::Volume;

/// Dual step size; `‖∇‖² ≤ 12` for 3D forward differences.
pub(crate) const TAU: f64 = 1.0 / 12.0;

/// Dual field, one component per axis.
#[derive(Clone, Debug)]
pub(crate) struct Dual {
    pub p: [Vec<f32>; 3],
}

impl Dual {
    pub fn zeros(len: usize) -> Self {
        Self { p: [vec![0.0; len], vec![0.0; len], vec![0.0; len]] }
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.p[0].len())
            .map(|w| {
                let [a, b, c] = [self.p[0][w] as f64, self.p[1][w] as f64, self.p[2][w] as f64];
                (a * a + b * b + c * c).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Negative adjoint of the forward difference, at one voxel. With `open_top`
/// the block's last layer is treated as interior, as it is for a slab whose
/// upper neighbour lives elsewhere.
#[inline]
fn divergence(p: &Dual, n: [usize; 3], i: usize, j: usize, k: usize, open_top: bool) -> f64 {
    let w = idx(n, i, j, k);
    let mut d = 0.0;
    if i + 1 < n[0] {
        d += p.p[0][w] as f64;
    }
    if i > 0 {
        d -= p.p[0][idx(n, i - 1, j, k)] as f64;
    }
    if j + 1 < n[1] {
        d += p.p[1][w] as f64;
    }
    if j > 0 {
        d -= p.p[1][idx(n, i, j - 1, k)] as f64;
    }
    if k + 1 < n[2] || open_top {
        d += p.p[2][w] as f64;
    }
    if k > 0 {
        d -= p.p[2][idx(n, i, j, k - 1)] as f64;
    }
    d
}

/// `out ← div p − f/λ`.
fn dual_residual(f: &[f32], p: &Dual, n: [usize; 3], lambda: f64, open_top: bool, out: &mut [f32]) {
    let slice = n[0] * n[1];
    out.par_chunks_mut(slice).enumerate().for_each(|(k, layer)| {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let w = idx(n, i, j, k);
                layer[i + n[0] * j] = (divergence(p, n, i, j, k, open_top) - f[w] as f64 / lambda) as f32;
            }
        }
    });
}

/// One projected gradient step on the dual; `scratch` holds `div p − f/λ`.
pub(crate) fn dual_step(f: &[f32], p: &mut Dual, n: [usize; 3], lambda: f64, open_top: bool, scratch: &mut [f32]) {
    dual_residual(f, p, n, lambda, open_top, scratch);
    let z: &[f32] = scratch;
    let slice = n[0] * n[1];
    let [px, py, pz] = &mut p.p;
    px.par_chunks_mut(slice)
        .zip(py.par_chunks_mut(slice))
        .zip(pz.par_chunks_mut(slice))
        .enumerate()
        .for_each(|(k, ((lx, ly), lz))| {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let l = i + n[0] * j;
                    let g = forward_diffs(z, n, i, j, k);
                    let a = lx[l] as f64 + TAU * g[0];
                    let b = ly[l] as f64 + TAU * g[1];
                    let c = lz[l] as f64 + TAU * g[2];
                    let m = (a * a + b * b + c * c).sqrt().max(1.0);
                    lx[l] = (a / m) as f32;
                    ly[l] = (b / m) as f32;
                    lz[l] = (c / m) as f32;
                }
            }
        });
}

/// `u = f − λ div p` for the layers of the block starting at `k0`, as many as `out` holds.
pub(crate) fn primal_layers(f: &[f32], p: &Dual, n: [usize; 3], lambda: f64, k0: usize, out: &mut [f32]) {
    let slice = n[0] * n[1];
    out.par_chunks_mut(slice).enumerate().for_each(|(dk, layer)| {
        let k = k0 + dk;
        for j in 0..n[1] {
            for i in 0..n[0] {
                let w = idx(n, i, j, k);
                layer[i + n[0] * j] = (f[w] as f64 - lambda * divergence(p, n, i, j, k, false)) as f32;
            }
        }
    });
}

/// Approximate `argmin_u ½‖u − f‖² + λ·TV(u)` after `outer_syncs · inner_iters`
/// dual steps from `p = 0`.
pub fn minimize_rof(volume: &Volume, params: &TvParams) -> Result<Volume> {
    rof(volume, params, false).map(|(u, _)| u)
}

/// [`minimize_rof`], also returning the largest dual magnitude seen after any step.
pub fn minimize_rof_with_dual_peak(volume: &Volume, params: &TvParams) -> Result<(Volume, f64)> {
    rof(volume, params, true)
}

fn rof(volume: &Volume, params: &TvParams, track: bool) -> Result<(Volume, f64)> {
    params.validate()?;
    let Minimizer::Rof { lambda } = params.minimizer else {
        return Err(Error::InvalidParameter("minimize_rof needs the Rof minimizer".into()));
    };
    if !volume.is_full() {
        return Err(Error::InvalidParameter("minimize_rof needs a full volume".into()));
    }
    let n = volume.grid().n;
    let f = volume.data();
    let mut p = Dual::zeros(f.len());
    let mut scratch = vec![0.0f32; f.len()];
    let mut peak = 0.0f64;
    for _ in 0..params.total_iters() {
        dual_step(f, &mut p, n, lambda, false, &mut scratch);
        if track {
            peak = peak.max(p.max_magnitude());
        }
    }
    primal_layers(f, &p, n, lambda, 0, &mut scratch);
    Ok((Volume::from_data(volume.grid(), 0..n[2], scratch)?, peak))
}
