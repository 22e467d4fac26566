use std::ops::Range;

use rayon::prelude::*;

use super::{chunks_of, BackwardTileSpec, ProjectionStack, SampledRay, Volume, WeightMode};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;

/// Adds the backprojection of `projections` onto the axial layers `slab_range`
/// of `accumulate_into`.
///
/// Angles are consumed in launches of `tiles.chunk_angles`; within a launch
/// every voxel sums its angle contributions in `f64`, and the launch total is
/// added to the stored `f32` value. Streaming the same angle chunks in order
/// through repeated calls therefore gives bit-identical results to one call.
pub fn backproject_slab(
    projections: &ProjectionStack,
    geometry: &ScanGeometry,
    slab_range: Range<usize>,
    mode: WeightMode,
    tiles: &BackwardTileSpec,
    accumulate_into: &mut Volume,
) -> Result<()> {
    tiles.validate()?;
    if accumulate_into.grid() != &geometry.voxel_grid {
        return Err(Error::GridMismatch("target volume grid differs from the scan's voxel grid".into()));
    }
    if projections.detector() != &geometry.detector {
        return Err(Error::GridMismatch("projection detector differs from the scan's detector".into()));
    }
    let held = accumulate_into.slab_range();
    if slab_range.is_empty() || slab_range.start < held.start || slab_range.end > held.end {
        return Err(Error::RangeMismatch { expected: held, got: slab_range });
    }
    let angles = projections.angle_range();
    if angles.end > geometry.n_angles() {
        return Err(Error::RangeMismatch { expected: 0..geometry.n_angles(), got: angles });
    }

    let slice = geometry.voxel_grid.slice_len();
    let offset = (slab_range.start - held.start) * slice;
    let target = &mut accumulate_into.data_mut()[offset..offset + slab_range.len() * slice];
    let unit = tiles.voxels_per_unit;

    for launch in chunks_of(angles, tiles.chunk_angles) {
        target.par_chunks_mut(unit * slice).enumerate().for_each(|(n, chunk)| {
            let k0 = slab_range.start + n * unit;
            let k1 = k0 + chunk.len() / slice;
            match mode {
                WeightMode::Fdk => fdk_unit(projections, geometry, launch.clone(), k0..k1, tiles, chunk),
                WeightMode::Matched => matched_unit(projections, geometry, launch.clone(), k0..k1, chunk),
            }
        });
    }
    Ok(())
}

/// Voxel-driven update of layers `layers` with `(dso/U)²` weights.
fn fdk_unit(
    projections: &ProjectionStack,
    geometry: &ScanGeometry,
    launch: Range<usize>,
    layers: Range<usize>,
    tiles: &BackwardTileSpec,
    out: &mut [f32],
) {
    let grid = &geometry.voxel_grid;
    let det = &geometry.detector;
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let per_angle: Vec<(f64, f64, &[f32])> = launch
        .map(|a| (geometry.angles[a].cos(), geometry.angles[a].sin(), projections.frame(a)))
        .collect();
    let mut acc = vec![0.0f64; layers.len()];
    for y0 in (0..ny).step_by(tiles.tile_y) {
        for x0 in (0..nx).step_by(tiles.tile_x) {
            for j in y0..(y0 + tiles.tile_y).min(ny) {
                let y = grid.center_coord(1, j);
                for i in x0..(x0 + tiles.tile_x).min(nx) {
                    let x = grid.center_coord(0, i);
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    for &(c, s, frame) in &per_angle {
                        let along = x * c + y * s;
                        let across = -x * s + y * c;
                        let depth = geometry.dso - along;
                        let mag = geometry.dsd / depth;
                        let weight = (geometry.dso / depth).powi(2);
                        let cu = across * mag;
                        for (n, k) in layers.clone().enumerate() {
                            let cv = grid.center_coord(2, k) * mag;
                            let (fu, fv) = det.fractional_index(cu, cv);
                            acc[n] += weight * bilinear(frame, det.n_u, det.n_v, fu, fv);
                        }
                    }
                    for (n, a) in acc.iter().enumerate() {
                        out[i + nx * (j + ny * n)] += *a as f32;
                    }
                }
            }
        }
    }
}

/// Scatter with the interpolating projector's weights, restricted to `layers`.
fn matched_unit(
    projections: &ProjectionStack,
    geometry: &ScanGeometry,
    launch: Range<usize>,
    layers: Range<usize>,
    out: &mut [f32],
) {
    let grid = &geometry.voxel_grid;
    let det = &geometry.detector;
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let mut acc = vec![0.0f64; out.len()];
    for a in launch {
        let (c, s) = (geometry.angles[a].cos(), geometry.angles[a].sin());
        let frame = projections.frame(a);
        for v in 0..det.n_v {
            for u in 0..det.n_u {
                let b = frame[u + det.n_u * v] as f64;
                if b == 0.0 {
                    continue;
                }
                let ray = geometry.ray_unchecked(c, s, u, v);
                if let Some(samples) = SampledRay::new(&ray, grid) {
                    samples.for_each_weight(layers.start, layers.end, |i, j, k, w| {
                        acc[i + nx * (j + ny * (k - layers.start))] += w * b;
                    });
                }
            }
        }
    }
    for (o, a) in out.iter_mut().zip(&acc) {
        *o += *a as f32;
    }
}

/// Bilinear detector lookup at a fractional pixel index; zero outside the panel.
#[inline]
fn bilinear(frame: &[f32], n_u: usize, n_v: usize, fu: f64, fv: f64) -> f64 {
    let u0 = fu.floor();
    let v0 = fv.floor();
    let (wu, wv) = (fu - u0, fv - v0);
    let (u0, v0) = (u0 as i64, v0 as i64);
    let at = |u: i64, v: i64| -> f64 {
        if u < 0 || v < 0 || u >= n_u as i64 || v >= n_v as i64 {
            0.0
        } else {
            frame[u as usize + n_u * v as usize] as f64
        }
    };
    (1.0 - wv) * ((1.0 - wu) * at(u0, v0) + wu * at(u0 + 1, v0)) + wv * ((1.0 - wu) * at(u0, v0 + 1) + wu * at(u0 + 1, v0 + 1))
}
