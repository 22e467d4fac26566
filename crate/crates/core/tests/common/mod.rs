#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tomosplit::geometry::VoxelGrid;
use tomosplit::io::{phantom, PhantomKind};
use tomosplit::projectors::Volume;
use tomosplit::scheduler::{DevicePool, DeviceSpec};

pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;

/// `max|a − b| / max|b|`.
pub fn max_rel_err(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0f64, |m, &x| m.max((x as f64).abs()));
    let diff = a.iter().zip(b).fold(0f64, |m, (&x, &y)| m.max((x as f64 - y as f64).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn pool(devices: usize, budget: u64) -> DevicePool {
    DevicePool::with_usable_fraction(vec![DeviceSpec::new(budget); devices], 1.0).unwrap()
}

pub fn big_pool(devices: usize) -> DevicePool {
    pool(devices, 8 * GIB)
}

pub fn random_volume(grid: &VoxelGrid, seed: u64) -> Volume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Volume::from_fn(grid, |_| rng.gen_range(0.0..1.0))
}

pub fn noisy_blocks(n: usize, amplitude: f32, seed: u64) -> Volume {
    let mut v = phantom(PhantomKind::Blocks, &VoxelGrid::cube(n, 1.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    v.data_mut().iter_mut().for_each(|x| *x += amplitude * rng.gen_range(-1.0f32..1.0));
    v
}

/// Exact 1D TV denoising, `argmin_x ½‖x − y‖² + λ Σ|x[i+1] − x[i]|`, by
/// Condat's direct taut-string algorithm.
pub fn taut_string(input: &[f64], lambda: f64) -> Vec<f64> {
    let width = input.len();
    let mut output = vec![0.0; width];
    if width == 0 {
        return output;
    }
    let (mut k, mut k0) = (0usize, 0usize);
    let (mut umin, mut umax) = (lambda, -lambda);
    let (mut vmin, mut vmax) = (input[0] - lambda, input[0] + lambda);
    let (mut kplus, mut kminus) = (0usize, 0usize);
    let twolambda = 2.0 * lambda;
    let minlambda = -lambda;
    loop {
        while k == width - 1 {
            if umin < 0.0 {
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k;
                vmin = input[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    output[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k;
                vmax = input[k];
                umax = minlambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    output[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return output;
            }
        }
        umin += input[k + 1] - vmin;
        if umin < minlambda {
            loop {
                output[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kplus = k;
            kminus = k;
            vmin = input[k];
            vmax = vmin + twolambda;
            umin = lambda;
            umax = minlambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                output[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kplus = k;
            kminus = k;
            vmax = input[k];
            vmin = vmax - twolambda;
            umin = lambda;
            umax = minlambda;
        } else {
            k += 1;
            if umin >= lambda {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                umin = lambda;
            }
            if umax <= minlambda {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                umax = minlambda;
            }
        }
    }
}

/// Same problem through its dual, `min ½‖y − Dᵀz‖²` over `|z| ≤ λ`, by
/// cyclic coordinate descent. Slow but independent of the taut string.
pub fn tv1d_dual_descent(y: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let n = y.len();
    let mut z = vec![0.0; n.saturating_sub(1)];
    // x = y − Dᵀz with (Dx)_i = x[i+1] − x[i], so (Dᵀz)_i = z[i−1] − z[i].
    let mut x = y.to_vec();
    for _ in 0..sweeps {
        for i in 0..z.len() {
            // Exact minimisation over z_i: x[i] = … + z_i, x[i+1] = … − z_i.
            let grad = x[i + 1] - x[i];
            let new = (z[i] + grad / 2.0).clamp(-lambda, lambda);
            let d = new - z[i];
            x[i] += d;
            x[i + 1] -= d;
            z[i] = new;
        }
    }
    x
}

use tomosplit::geometry::{DetectorGrid, ScanGeometry};
use tomosplit::projectors::{BackwardTileSpec, ForwardTileSpec};
use tomosplit::scheduler::{plan_backward, plan_forward, OpKind};

/// A scan whose geometry is irrelevant beyond its array sizes.
pub fn sized_scan(n: [usize; 3], det: [usize; 2], angles: usize) -> ScanGeometry {
    let grid = VoxelGrid::new(n, [1.0; 3], [0.0; 3]).unwrap();
    let det = DetectorGrid::new(det[0], det[1], [1.0, 1.0], [0.0, 0.0]).unwrap();
    let r = grid.circumradius();
    ScanGeometry::new(4.0 * r, 8.0 * r, ScanGeometry::full_circle(angles), grid, det).unwrap()
}

/// Peak device bytes of an `s`-slab pass, recomputed from first principles:
/// the deepest slab plus the staging buffers.
pub fn oracle_peak(g: &ScanGeometry, op: OpKind, chunk: usize, s: usize) -> u64 {
    let nz = g.voxel_grid.n[2];
    let depth = nz.div_ceil(s) as u64;
    let slab = depth * (g.voxel_grid.n[0] * g.voxel_grid.n[1]) as u64 * 4;
    let chunk_bytes = (chunk.min(g.n_angles()) * g.detector.frame_len()) as u64 * 4;
    let buffers = match op {
        OpKind::Forward if s == 1 => 2,
        OpKind::Forward => 3,
        OpKind::Backward => 2,
    };
    slab + buffers * chunk_bytes
}

/// Feasibility and minimality of the planner's choice for one scenario.
pub fn check_planner(g: &ScanGeometry, pool: &DevicePool, op: OpKind) -> Result<Option<usize>, String> {
    let usable = pool.usable_budget();
    let (plan, chunk) = match op {
        OpKind::Forward => {
            let t = ForwardTileSpec::default();
            (plan_forward(g, pool, &t), t.chunk_angles)
        }
        OpKind::Backward => {
            let t = BackwardTileSpec::default();
            (plan_backward(g, pool, &t), t.chunk_angles)
        }
    };
    let nz = g.voxel_grid.n[2];
    let feasible = |s: usize| oracle_peak(g, op, chunk, s) <= usable;
    match plan {
        Err(_) => {
            if (1..=nz).any(feasible) {
                return Err("planner gave up on a feasible scenario".into());
            }
            Ok(None)
        }
        Ok(p) => {
            p.check(g, pool).map_err(|e| e.to_string())?;
            if p.per_device_bytes_peak > usable || !feasible(p.n_splits) {
                return Err(format!("{} slabs exceed the budget", p.n_splits));
            }
            if p.per_device_bytes_peak != oracle_peak(g, op, chunk, p.n_splits) {
                return Err("peak bytes disagree with the oracle".into());
            }
            if let Some(s) = (1..p.n_splits).find(|&s| feasible(s)) {
                return Err(format!("{s} slabs would fit but the planner chose {}", p.n_splits));
            }
            Ok(Some(p.n_splits))
        }
    }
}
