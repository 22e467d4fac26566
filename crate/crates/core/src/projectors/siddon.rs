//! Siddon ray/voxel intersection.
//!
//! Crossing parameters for the x, y and z plane families are merged in
//! increasing `t`; each gap between consecutive crossings is one voxel, found
//! from the gap midpoint with half-open `[low, high)` voxel intervals. Plane
//! positions always come from [`plane`], so a trace clipped to an axial slab
//! reproduces exactly the segments of the full trace that fall in the slab.

use crate::geometry::{Ray, VoxelGrid};

#[inline]
fn plane(grid: &VoxelGrid, lower: f64, axis: usize, m: usize) -> f64 {
    lower + m as f64 * grid.voxel_size[axis]
}

/// Visits the voxels crossed by `ray` for `t ∈ [t0, t1]`, in traversal order,
/// with their intersection lengths. Zero-length crossings are skipped.
pub(crate) fn visit_segments(
    ray: &Ray,
    grid: &VoxelGrid,
    t0: f64,
    t1: f64,
    mut visit: impl FnMut([usize; 3], f64),
) {
    if !(t0 < t1) {
        return;
    }
    let lower = grid.lower();
    let o = ray.origin;
    let d = ray.direction;

    // Per axis: next plane index to cross and the index step.
    let mut next_m = [0i64; 3];
    let mut step = [0i64; 3];
    let mut next_t = [f64::INFINITY; 3];
    let plane_t = |a: usize, m: i64| (plane(grid, lower[a], a, m as usize) - o[a]) / d[a];
    for a in 0..3 {
        if d[a] == 0.0 {
            continue;
        }
        let n = grid.n[a] as i64;
        let x0 = (o[a] + t0 * d[a] - lower[a]) / grid.voxel_size[a];
        let (mut m, s) = if d[a] > 0.0 {
            (x0.floor() as i64 + 1, 1)
        } else {
            (x0.ceil() as i64 - 1, -1)
        };
        m = m.clamp(-1, n + 1);
        // Settle on the first plane strictly after t0.
        while (0..=n).contains(&(m - s)) && plane_t(a, m - s) > t0 {
            m -= s;
        }
        while (0..=n).contains(&m) && plane_t(a, m) <= t0 {
            m += s;
        }
        next_m[a] = m;
        step[a] = s;
        if (0..=n).contains(&m) {
            next_t[a] = plane_t(a, m);
        }
    }

    let mut t = t0;
    while t < t1 {
        let t_next = next_t[0].min(next_t[1]).min(next_t[2]).min(t1);
        if t_next > t {
            let mid = 0.5 * (t + t_next);
            let mut ijk = [0usize; 3];
            for a in 0..3 {
                let x = (o[a] + mid * d[a] - lower[a]) / grid.voxel_size[a];
                ijk[a] = (x.floor().max(0.0) as usize).min(grid.n[a] - 1);
            }
            visit(ijk, t_next - t);
        }
        for a in 0..3 {
            if next_t[a] <= t_next {
                next_m[a] += step[a];
                next_t[a] = if (0..=grid.n[a] as i64).contains(&next_m[a]) {
                    plane_t(a, next_m[a])
                } else {
                    f64::INFINITY
                };
            }
        }
        t = t_next;
    }
}

/// Voxels crossed by `ray` inside `grid`, in traversal order, with intersection
/// lengths in millimetres. A miss yields an empty list.
pub fn siddon_trace(ray: &Ray, grid: &VoxelGrid) -> Vec<([usize; 3], f64)> {
    let mut out = Vec::new();
    if !ray.is_miss() {
        visit_segments(ray, grid, ray.t_entry, ray.t_exit, |ijk, len| out.push((ijk, len)));
    }
    out
}

/// Parameter interval of the ray inside the axial band of layers `[k_begin, k_end)`.
///
/// Outer grid faces are left to the ray's own entry/exit parameters.
pub(crate) fn slab_interval(ray: &Ray, grid: &VoxelGrid, k_begin: usize, k_end: usize) -> (f64, f64) {
    let lower = grid.lower()[2];
    let dz = ray.direction[2];
    let mut t0 = ray.t_entry;
    let mut t1 = ray.t_exit;
    let bounds = [(k_begin > 0, k_begin, true), (k_end < grid.n[2], k_end, false)];
    for (interior, k, is_low) in bounds {
        if !interior {
            continue;
        }
        let z = plane(grid, lower, 2, k);
        if dz == 0.0 {
            let above = ray.origin[2] >= z;
            if above != is_low {
                return (1.0, 0.0);
            }
            continue;
        }
        let t = (z - ray.origin[2]) / dz;
        // Rising rays enter the band through its low face.
        if (dz > 0.0) == is_low {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
    }
    (t0, t1)
}
