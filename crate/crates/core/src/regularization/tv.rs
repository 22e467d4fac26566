use std::ops::Range;

use rayon::prelude::*;

use super::{idx, Minimizer, TvParams, TV_EPSILON};
use crate::error::{Error, Result};
use crate::projectors::Volume;

/// Forward differences at `(i, j, k)`, zero across the upper faces of the block.
#[inline]
pub(crate) fn forward_diffs(u: &[f32], n: [usize; 3], i: usize, j: usize, k: usize) -> [f64; 3] {
    let c = u[idx(n, i, j, k)] as f64;
    let dx = if i + 1 < n[0] { u[idx(n, i + 1, j, k)] as f64 - c } else { 0.0 };
    let dy = if j + 1 < n[1] { u[idx(n, i, j + 1, k)] as f64 - c } else { 0.0 };
    let dz = if k + 1 < n[2] { u[idx(n, i, j, k + 1)] as f64 - c } else { 0.0 };
    [dx, dy, dz]
}

/// Isotropic TV of the full volume.
pub fn tv_norm(volume: &Volume) -> Result<f64> {
    let n = volume.grid().n;
    if n.iter().any(|&c| c < 2) || !volume.is_full() {
        return Err(Error::DegenerateGrid(format!("TV needs at least 2 voxels per axis of a full volume, got {n:?}")));
    }
    Ok(tv_field(volume.data(), n))
}

pub(crate) fn tv_field(u: &[f32], n: [usize; 3]) -> f64 {
    (0..n[2])
        .into_par_iter()
        .map(|k| {
            let mut s = 0.0;
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let [dx, dy, dz] = forward_diffs(u, n, i, j, k);
                    s += (dx * dx + dy * dy + dz * dz).sqrt();
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

#[inline]
fn smoothed(u: &[f32], n: [usize; 3], i: usize, j: usize, k: usize) -> ([f64; 3], f64) {
    let d = forward_diffs(u, n, i, j, k);
    (d, (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + TV_EPSILON).sqrt())
}

/// Gradient of the smoothed TV of `u` into `g`.
pub(crate) fn tv_gradient(u: &[f32], n: [usize; 3], g: &mut [f32]) {
    let slice = n[0] * n[1];
    g.par_chunks_mut(slice).enumerate().for_each(|(k, layer)| {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let (d, m) = smoothed(u, n, i, j, k);
                let mut v = -(d[0] + d[1] + d[2]) / m;
                if i > 0 {
                    let (d, m) = smoothed(u, n, i - 1, j, k);
                    v += d[0] / m;
                }
                if j > 0 {
                    let (d, m) = smoothed(u, n, i, j - 1, k);
                    v += d[1] / m;
                }
                if k > 0 {
                    let (d, m) = smoothed(u, n, i, j, k - 1);
                    v += d[2] / m;
                }
                layer[i + n[0] * j] = v as f32;
            }
        }
    });
}

/// `Σ g²` of each layer in `layers`, each summed in a fixed order.
pub(crate) fn layer_sq_sums(g: &[f32], n: [usize; 3], layers: Range<usize>) -> Vec<f64> {
    let slice = n[0] * n[1];
    layers
        .into_par_iter()
        .map(|k| g[k * slice..(k + 1) * slice].iter().map(|&x| x as f64 * x as f64).sum())
        .collect()
}

pub(crate) fn descend(u: &mut [f32], g: &[f32], step: f64, norm: f64) {
    if !(norm > 0.0) {
        return;
    }
    let scale = step / norm;
    u.par_iter_mut().zip(g.par_iter()).for_each(|(x, &d)| *x = (*x as f64 - scale * d as f64) as f32);
}

/// `outer_syncs · inner_iters` steps of `v ← v − step·g/‖g‖` on the whole volume.
pub fn minimize_tv_gradient(volume: &Volume, params: &TvParams) -> Result<Volume> {
    params.validate()?;
    let Minimizer::GradientDescent { step } = params.minimizer else {
        return Err(Error::InvalidParameter("minimize_tv_gradient needs the GradientDescent minimizer".into()));
    };
    if !volume.is_full() {
        return Err(Error::InvalidParameter("minimize_tv_gradient needs a full volume".into()));
    }
    let n = volume.grid().n;
    let mut out = volume.clone();
    let mut g = vec![0.0f32; out.len()];
    for _ in 0..params.total_iters() {
        tv_gradient(out.data(), n, &mut g);
        let norm = layer_sq_sums(&g, n, 0..n[2]).iter().sum::<f64>().sqrt();
        descend(out.data_mut(), &g, step, norm);
    }
    Ok(out)
}
