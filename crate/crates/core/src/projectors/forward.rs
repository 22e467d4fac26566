use std::ops::Range;

use rayon::prelude::*;

use super::siddon::slab_interval;
use super::{chunks_of, visit_segments, ForwardMethod, ForwardTileSpec, ProjectionStack, SampledRay, Volume};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;

/// Line integrals through the slab held by `volume` for the scan angles in `angles`.
///
/// Voxels outside the slab count as zero, so projections of a partition of
/// the volume sum to the projection of the whole. Each pixel is reduced in a
/// fixed order in `f64`, which makes the output independent of `tiles`.
pub fn forward_project_slab(
    volume: &Volume,
    geometry: &ScanGeometry,
    angles: Range<usize>,
    method: ForwardMethod,
    tiles: &ForwardTileSpec,
) -> Result<ProjectionStack> {
    tiles.validate()?;
    if volume.grid() != &geometry.voxel_grid {
        return Err(Error::GridMismatch("volume grid differs from the scan's voxel grid".into()));
    }
    if angles.is_empty() || angles.end > geometry.n_angles() {
        return Err(Error::RangeMismatch { expected: 0..geometry.n_angles(), got: angles });
    }
    let det = &geometry.detector;
    let frame = det.frame_len();
    let mut out = ProjectionStack::zeros(det, angles.clone());

    for launch in chunks_of(angles.clone(), tiles.chunk_angles) {
        let trig: Vec<(f64, f64)> = launch.clone().map(|a| (geometry.angles[a].cos(), geometry.angles[a].sin())).collect();
        let tile_list: Vec<(usize, usize)> = (0..det.n_v)
            .step_by(tiles.tile_v)
            .flat_map(|v0| (0..det.n_u).step_by(tiles.tile_u).map(move |u0| (u0, v0)))
            .collect();
        let computed: Vec<Vec<f32>> = tile_list
            .par_iter()
            .map(|&(u0, v0)| {
                let u1 = (u0 + tiles.tile_u).min(det.n_u);
                let v1 = (v0 + tiles.tile_v).min(det.n_v);
                let mut vals = Vec::with_capacity(trig.len() * (u1 - u0) * (v1 - v0));
                for &(c, s) in &trig {
                    for v in v0..v1 {
                        for u in u0..u1 {
                            vals.push(pixel_integral(volume, geometry, c, s, u, v, method) as f32);
                        }
                    }
                }
                vals
            })
            .collect();
        let base = launch.start - angles.start;
        let data = out.data_mut();
        for (&(u0, v0), vals) in tile_list.iter().zip(&computed) {
            let u1 = (u0 + tiles.tile_u).min(det.n_u);
            let v1 = (v0 + tiles.tile_v).min(det.n_v);
            let mut it = vals.iter();
            for a in 0..launch.len() {
                for v in v0..v1 {
                    let row = (base + a) * frame + v * det.n_u;
                    for u in u0..u1 {
                        data[row + u] = *it.next().expect("tile value count");
                    }
                }
            }
        }
    }
    Ok(out)
}

#[inline]
fn pixel_integral(
    volume: &Volume,
    geometry: &ScanGeometry,
    cos_t: f64,
    sin_t: f64,
    u: usize,
    v: usize,
    method: ForwardMethod,
) -> f64 {
    let ray = geometry.ray_unchecked(cos_t, sin_t, u, v);
    if ray.is_miss() {
        return 0.0;
    }
    let grid = volume.grid();
    let slab = volume.slab_range();
    let data = volume.data();
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let mut acc = 0.0f64;
    match method {
        ForwardMethod::Siddon => {
            let (t0, t1) = slab_interval(&ray, grid, slab.start, slab.end);
            visit_segments(&ray, grid, t0, t1, |[i, j, k], len| {
                if slab.contains(&k) {
                    acc += len * data[i + nx * (j + ny * (k - slab.start))] as f64;
                }
            });
        }
        ForwardMethod::Interpolated => {
            if let Some(samples) = SampledRay::new(&ray, grid) {
                samples.for_each_weight(slab.start, slab.end, |i, j, k, w| {
                    acc += w * data[i + nx * (j + ny * (k - slab.start))] as f64;
                });
            }
        }
    }
    acc
}
