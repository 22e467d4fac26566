//! Trilinear sampling along a ray.
//!
//! Samples sit at the midpoints of `n` equal steps covering the chord, with the
//! nominal step set to half the smallest voxel dimension. Interpolation clamps
//! to the edge voxel at the global grid boundary, so a uniform object
//! integrates to `μ·chord`. The forward projector gathers with these weights
//! and the matched backprojector scatters with the very same weights.

use crate::geometry::{Ray, Vec3, VoxelGrid};

pub(crate) struct SampledRay<'a> {
    ray: &'a Ray,
    grid: &'a VoxelGrid,
    lower: Vec3,
    step: f64,
    n: usize,
}

impl<'a> SampledRay<'a> {
    pub(crate) fn new(ray: &'a Ray, grid: &'a VoxelGrid) -> Option<Self> {
        let chord = ray.chord();
        if chord <= 0.0 {
            return None;
        }
        let nominal = 0.5 * grid.voxel_size.iter().cloned().fold(f64::INFINITY, f64::min);
        let n = (chord / nominal).ceil().max(1.0) as usize;
        Some(Self { ray, grid, lower: grid.lower(), step: chord / n as f64, n })
    }

    /// Sample index range whose interpolation stencils may touch layers `[k_begin, k_end)`.
    fn sample_range(&self, k_begin: usize, k_end: usize) -> (usize, usize) {
        let dz_dir = self.ray.direction[2];
        let nz = self.grid.n[2];
        if (k_begin == 0 && k_end == nz) || dz_dir == 0.0 {
            return (0, self.n);
        }
        let dz = self.grid.voxel_size[2];
        let z_lo = if k_begin == 0 { f64::NEG_INFINITY } else { self.lower[2] + (k_begin as f64 - 0.5) * dz };
        let z_hi = if k_end == nz { f64::INFINITY } else { self.lower[2] + (k_end as f64 + 0.5) * dz };
        let ta = (z_lo - self.ray.origin[2]) / dz_dir;
        let tb = (z_hi - self.ray.origin[2]) / dz_dir;
        let (t_lo, t_hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
        let to_index = |t: f64| (t - self.ray.t_entry) / self.step - 0.5;
        let lo = to_index(t_lo).floor() - 1.0;
        let hi = to_index(t_hi).ceil() + 2.0;
        let clamp = |x: f64| x.max(0.0).min(self.n as f64) as usize;
        (clamp(lo), clamp(hi))
    }

    /// Calls `f(i, j, k, weight)` for every (sample, stencil corner) pair whose
    /// voxel lies in layers `[k_begin, k_end)`. Weights include the step length.
    #[inline]
    pub(crate) fn for_each_weight(&self, k_begin: usize, k_end: usize, mut f: impl FnMut(usize, usize, usize, f64)) {
        let (s0, s1) = self.sample_range(k_begin, k_end);
        let g = self.grid;
        for s in s0..s1 {
            let t = self.ray.t_entry + (s as f64 + 0.5) * self.step;
            let p = self.ray.point_at(t);
            let mut idx = [[0usize; 2]; 3];
            let mut w = [[0.0f64; 2]; 3];
            for a in 0..3 {
                let x = (p[a] - self.lower[a]) / g.voxel_size[a] - 0.5;
                let x0 = x.floor();
                let frac = x - x0;
                let last = g.n[a] as i64 - 1;
                let i0 = x0 as i64;
                idx[a] = [i0.clamp(0, last) as usize, (i0 + 1).clamp(0, last) as usize];
                w[a] = [1.0 - frac, frac];
            }
            for cz in 0..2 {
                let k = idx[2][cz];
                if k < k_begin || k >= k_end || w[2][cz] == 0.0 {
                    continue;
                }
                for cy in 0..2 {
                    let wyz = w[2][cz] * w[1][cy];
                    for cx in 0..2 {
                        let weight = self.step * wyz * w[0][cx];
                        if weight != 0.0 {
                            f(idx[0][cx], idx[1][cy], k, weight);
                        }
                    }
                }
            }
        }
    }
}
