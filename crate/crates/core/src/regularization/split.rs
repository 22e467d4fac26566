use std::ops::Range;

use rayon::prelude::*;

use super::rof::{dual_step, primal_layers, Dual};
use super::tv::{descend, layer_sq_sums, tv_gradient};
use super::{Minimizer, NormMode, TvParams};
use crate::error::{Error, Result};
use crate::projectors::Volume;
use crate::scheduler::{slab_partition, DevicePool};

/// An axial slab plus up to `halo_depth` ghost layers on each interior face.
#[derive(Clone, Debug, PartialEq)]
pub struct HaloSlab {
    pub core: Range<usize>,
    pub halo_depth: usize,
    extended: Range<usize>,
    slice: usize,
    pub data: Vec<f32>,
}

impl HaloSlab {
    /// Cuts `core` and its ghosts out of a full `nz`-layer field.
    pub fn new(global: &[f32], slice: usize, nz: usize, core: Range<usize>, halo_depth: usize) -> Self {
        let extended = core.start.saturating_sub(halo_depth)..(core.end + halo_depth).min(nz);
        let data = global[extended.start * slice..extended.end * slice].to_vec();
        Self { core, halo_depth, extended, slice, data }
    }

    pub fn extended(&self) -> Range<usize> {
        self.extended.clone()
    }

    /// Position of the first core layer inside `data`.
    pub fn core_offset(&self) -> usize {
        self.core.start - self.extended.start
    }

    pub fn core_data(&self) -> &[f32] {
        let o = self.core_offset() * self.slice;
        &self.data[o..o + self.core.len() * self.slice]
    }

    pub fn write_core(&self, global: &mut [f32]) {
        global[self.core.start * self.slice..self.core.end * self.slice].copy_from_slice(self.core_data());
    }

    /// Reloads core and ghosts from the assembled global field.
    pub fn refill(&mut self, global: &[f32]) {
        self.data.copy_from_slice(&global[self.extended.start * self.slice..self.extended.end * self.slice]);
    }

    /// Whether every ghost layer equals the global field.
    pub fn ghosts_match(&self, global: &[f32]) -> bool {
        self.extended.clone().filter(|k| !self.core.contains(k)).all(|k| {
            let local = (k - self.extended.start) * self.slice;
            self.data[local..local + self.slice] == global[k * self.slice..(k + 1) * self.slice]
        })
    }
}

/// How a split run was laid out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitReport {
    pub n_slabs: usize,
    pub n_devices: usize,
    /// Working set of the largest slab including the minimizer's copies.
    pub bytes_per_slab: u64,
    /// Slab uploads to devices beyond the initial placement; non-zero only
    /// when slabs outnumber devices.
    pub host_round_trips: usize,
}

pub fn split_minimize(volume: &Volume, pool: &DevicePool, params: &TvParams) -> Result<Volume> {
    split_minimize_report(volume, pool, params).map(|(v, _)| v)
}

/// Runs `outer_syncs` epochs of `inner_iters` local iterations per slab with a
/// halo exchange after each epoch.
pub fn split_minimize_report(volume: &Volume, pool: &DevicePool, params: &TvParams) -> Result<(Volume, SplitReport)> {
    params.validate()?;
    if params.halo_depth < params.inner_iters {
        return Err(Error::HaloTooShallow { halo_depth: params.halo_depth, inner_iters: params.inner_iters });
    }
    if !volume.is_full() {
        return Err(Error::InvalidParameter("split_minimize needs a full volume".into()));
    }
    let n = volume.grid().n;
    let slice = n[0] * n[1];
    let copies = 1 + params.aux_copies() as u64;
    let bytes = |s: usize| -> u64 {
        let depth = slab_partition(n[2], s)
            .iter()
            .map(|r| (r.end + params.halo_depth).min(n[2]) - r.start.saturating_sub(params.halo_depth))
            .max()
            .unwrap_or(0);
        depth as u64 * slice as u64 * 4 * copies
    };
    let usable = pool.usable_budget();
    let first = pool.len().min(n[2]);
    let s = (first..=n[2])
        .filter(|&s| slab_partition(n[2], s).len() == s)
        .find(|&s| bytes(s) <= usable)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "a single slice with {} ghost layers and {copies} copies needs {} bytes, usable budget is {usable}",
                params.halo_depth,
                bytes(n[2])
            ))
        })?;
    let ranges = slab_partition(n[2], s);
    let round_trips_per_epoch = if s > pool.len() {
        let passes = match (params.minimizer, params.norm_mode) {
            (Minimizer::GradientDescent { .. }, NormMode::ExactGlobal) => params.inner_iters,
            _ => 1,
        };
        s * passes
    } else {
        0
    };
    let report = SplitReport {
        n_slabs: s,
        n_devices: pool.len(),
        bytes_per_slab: bytes(s),
        host_round_trips: round_trips_per_epoch * params.outer_syncs,
    };
    let data = match params.minimizer {
        Minimizer::GradientDescent { step } => run_gradient(volume.data(), n, &ranges, params, step),
        Minimizer::Rof { lambda } => run_rof(volume.data(), n, &ranges, params, lambda),
    };
    Ok((Volume::from_data(volume.grid(), 0..n[2], data)?, report))
}

fn run_gradient(input: &[f32], n: [usize; 3], ranges: &[Range<usize>], params: &TvParams, step: f64) -> Vec<f32> {
    let slice = n[0] * n[1];
    let total = (slice * n[2]) as f64;
    let mut global = input.to_vec();
    let mut slabs: Vec<(HaloSlab, Vec<f32>)> = ranges
        .iter()
        .map(|r| {
            let h = HaloSlab::new(&global, slice, n[2], r.clone(), params.halo_depth);
            let g = vec![0.0f32; h.data.len()];
            (h, g)
        })
        .collect();
    for _ in 0..params.outer_syncs {
        for _ in 0..params.inner_iters {
            let sums: Vec<Vec<f64>> = slabs
                .par_iter_mut()
                .map(|(h, g)| {
                    let dims = [n[0], n[1], h.extended().len()];
                    tv_gradient(&h.data, dims, g);
                    let o = h.core_offset();
                    layer_sq_sums(g, dims, o..o + h.core.len())
                })
                .collect();
            let global_norm = sums.iter().flatten().sum::<f64>().sqrt();
            slabs.par_iter_mut().zip(&sums).for_each(|((h, g), local)| {
                let norm = match params.norm_mode {
                    NormMode::ExactGlobal => global_norm,
                    NormMode::LocalApprox => {
                        local.iter().sum::<f64>().sqrt() * (total / (h.core.len() * slice) as f64).sqrt()
                    }
                };
                descend(&mut h.data, g, step, norm);
            });
        }
        for (h, _) in &slabs {
            h.write_core(&mut global);
        }
        for (h, _) in &mut slabs {
            h.refill(&global);
        }
    }
    global
}

fn run_rof(input: &[f32], n: [usize; 3], ranges: &[Range<usize>], params: &TvParams, lambda: f64) -> Vec<f32> {
    let slice = n[0] * n[1];
    struct State {
        f: HaloSlab,
        p: [HaloSlab; 3],
        scratch: Vec<f32>,
    }
    let zeros = vec![0.0f32; input.len()];
    let mut slabs: Vec<State> = ranges
        .iter()
        .map(|r| {
            let mk = |src: &[f32]| HaloSlab::new(src, slice, n[2], r.clone(), params.halo_depth);
            let f = mk(input);
            let scratch = vec![0.0; f.data.len()];
            State { f, p: [mk(&zeros), mk(&zeros), mk(&zeros)], scratch }
        })
        .collect();
    let mut global_p = [zeros.clone(), zeros.clone(), zeros];
    for _ in 0..params.outer_syncs {
        slabs.par_iter_mut().for_each(|st| {
            let dims = [n[0], n[1], st.f.extended().len()];
            let open_top = st.f.extended().end < n[2];
            let mut dual = Dual { p: st.p.each_mut().map(|h| std::mem::take(&mut h.data)) };
            for _ in 0..params.inner_iters {
                dual_step(&st.f.data, &mut dual, dims, lambda, open_top, &mut st.scratch);
            }
            for (h, d) in st.p.iter_mut().zip(dual.p) {
                h.data = d;
            }
        });
        for st in &slabs {
            for (h, g) in st.p.iter().zip(global_p.iter_mut()) {
                h.write_core(g);
            }
        }
        for st in &mut slabs {
            for (h, g) in st.p.iter_mut().zip(&global_p) {
                h.refill(g);
            }
        }
    }
    let mut out = vec![0.0f32; input.len()];
    for st in &mut slabs {
        let dims = [n[0], n[1], st.f.extended().len()];
        let dual = Dual { p: st.p.each_ref().map(|h| h.data.clone()) };
        let core = st.f.core.clone();
        primal_layers(&st.f.data, &dual, dims, lambda, st.f.core_offset(), &mut out[core.start * slice..core.end * slice]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VoxelGrid;
    use crate::regularization::{minimize_rof, minimize_tv_gradient};
    use crate::scheduler::DeviceSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(n: usize, seed: u64) -> Volume {
        let grid = VoxelGrid::new([n, n - 1, 2 * n], [1.0; 3], [0.0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Volume::from_fn(&grid, |p| (p[2] > 0.0) as u8 as f32 + rng.gen_range(-0.2..0.2))
    }

    fn big_pool(devices: usize) -> DevicePool {
        DevicePool::uniform(devices, DeviceSpec::new(1 << 30)).unwrap()
    }

    #[test]
    fn halo_slab_roundtrip() {
        let global: Vec<f32> = (0..40).map(|x| x as f32).collect();
        let mut h = HaloSlab::new(&global, 4, 10, 3..6, 2);
        assert_eq!(h.extended(), 1..8);
        assert_eq!(h.core_data(), &global[12..24]);
        h.data.iter_mut().for_each(|x| *x += 100.0);
        assert!(!h.ghosts_match(&global));
        let mut g2 = global.clone();
        h.write_core(&mut g2);
        h.refill(&g2);
        assert!(h.ghosts_match(&g2));
        assert_eq!(HaloSlab::new(&global, 4, 10, 0..4, 3).extended(), 0..7);
    }

    #[test]
    fn single_device_is_bit_identical() {
        let v = noisy(8, 1);
        let gd = TvParams::gradient_descent(0.3).with_depth(5).with_syncs(2);
        assert_eq!(split_minimize(&v, &big_pool(1), &gd).unwrap(), minimize_tv_gradient(&v, &gd).unwrap());
        let rof = TvParams::rof(0.1).with_depth(5).with_syncs(2);
        assert_eq!(split_minimize(&v, &big_pool(1), &rof).unwrap(), minimize_rof(&v, &rof).unwrap());
    }

    #[test]
    fn split_matches_monolithic() {
        let v = noisy(8, 2);
        for devices in [2, 3] {
            let gd = TvParams::gradient_descent(0.3).with_depth(4).with_syncs(3);
            let a = split_minimize(&v, &big_pool(devices), &gd).unwrap();
            assert_eq!(a, minimize_tv_gradient(&v, &gd).unwrap());
            let rof = TvParams::rof(0.1).with_depth(4).with_syncs(3);
            let b = split_minimize(&v, &big_pool(devices), &rof).unwrap();
            assert_eq!(b, minimize_rof(&v, &rof).unwrap());
        }
    }

    #[test]
    fn shallow_halo_is_rejected() {
        let v = noisy(6, 3);
        let mut p = TvParams::gradient_descent(0.1).with_depth(4);
        p.halo_depth = 3;
        assert!(matches!(split_minimize(&v, &big_pool(2), &p), Err(Error::HaloTooShallow { .. })));
    }

    #[test]
    fn overflow_uses_more_slabs_than_devices() {
        let v = noisy(8, 4);
        let p = TvParams::rof(0.1).with_depth(2).with_syncs(2);
        // Room for 6 layers of 56 voxels with 6 copies.
        let pool = DevicePool::with_usable_fraction(vec![DeviceSpec::new(6 * 56 * 4 * 6); 2], 1.0).unwrap();
        let (out, report) = split_minimize_report(&v, &pool, &p).unwrap();
        assert!(report.n_slabs > 2);
        assert!(report.bytes_per_slab <= pool.usable_budget());
        assert_eq!(report.host_round_trips, report.n_slabs * 2);
        assert_eq!(out, minimize_rof(&v, &p).unwrap());

        let tiny = DevicePool::with_usable_fraction(vec![DeviceSpec::new(56 * 4 * 6 * 4); 2], 1.0).unwrap();
        assert!(matches!(split_minimize(&v, &tiny, &p), Err(Error::Infeasible(_))));
    }
}
