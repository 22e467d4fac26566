//! Per-device command lists for one operator pass.
//!
//! Simulation and real execution walk the same lists. Each command names the
//! earlier commands of its own device it must wait for; commands are issued
//! in list order.

use std::ops::Range;

use super::plan::{OpKind, SplitPlan};
use super::trace::EventKind;
use crate::geometry::ScanGeometry;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Op {
    Alloc(u64),
    Free(u64),
    /// Forward: copy slab `slab` of the image to the device.
    LoadSlab { slab: usize },
    /// Forward: project the resident slab for `angles` into buffer `buf`.
    Project { slab: usize, angles: Range<usize>, buf: usize },
    /// Forward: stage the host's partial sum for `angles` in the extra buffer.
    LoadPartial { slab: usize, angles: Range<usize> },
    Accumulate { slab: usize, angles: Range<usize>, buf: usize },
    Drain { slab: usize, angles: Range<usize>, buf: usize },
    /// Backward: copy projections `angles` into buffer `buf`.
    LoadChunk { slab: usize, angles: Range<usize>, buf: usize },
    /// Backward: add buffer `buf` onto the resident slab.
    Backproject { slab: usize, angles: Range<usize>, buf: usize },
    DrainSlab { slab: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Command {
    pub op: Op,
    pub deps: Vec<usize>,
    pub payload: String,
}

impl Command {
    pub fn kind(&self) -> Option<EventKind> {
        Some(match self.op {
            Op::Alloc(_) | Op::Free(_) => return None,
            Op::LoadSlab { .. } | Op::LoadPartial { .. } | Op::LoadChunk { .. } => EventKind::TransferIn,
            Op::Drain { .. } | Op::DrainSlab { .. } => EventKind::TransferOut,
            Op::Project { .. } | Op::Backproject { .. } => EventKind::Kernel,
            Op::Accumulate { .. } => EventKind::Accumulate,
        })
    }

    /// Bytes moved across the host link.
    pub fn bytes(&self, plan: &SplitPlan, geometry: &ScanGeometry) -> u64 {
        let slice = geometry.voxel_grid.slice_len() as u64 * 4;
        let frame = geometry.detector.frame_len() as u64 * 4;
        match &self.op {
            Op::LoadSlab { slab } | Op::DrainSlab { slab } => plan.slab_ranges[*slab].len() as u64 * slice,
            Op::LoadPartial { angles, .. } | Op::Drain { angles, .. } | Op::LoadChunk { angles, .. } => {
                angles.len() as u64 * frame
            }
            _ => 0,
        }
    }
}

struct Builder {
    cmds: Vec<Command>,
}

impl Builder {
    fn push(&mut self, op: Op, deps: impl IntoIterator<Item = Option<usize>>, payload: String) -> usize {
        let deps = deps.into_iter().flatten().collect();
        self.cmds.push(Command { op, deps, payload });
        self.cmds.len() - 1
    }
}

pub(crate) fn device_program(plan: &SplitPlan, geometry: &ScanGeometry, device: usize) -> Vec<Command> {
    match plan.op_kind() {
        OpKind::Forward => forward_program(plan, geometry, device),
        OpKind::Backward => backward_program(plan, geometry, device),
    }
}

/// Resident slab, then per chunk: project into the free buffer, fold in the
/// partial sum of earlier slabs, and drain the previous chunk while the next
/// one computes.
fn forward_program(plan: &SplitPlan, geometry: &ScanGeometry, device: usize) -> Vec<Command> {
    let chunks = plan.chunks(device);
    let mut b = Builder { cmds: Vec::new() };
    if chunks.is_empty() {
        return b.cmds;
    }
    let slab_bytes = plan.max_slab_depth() as u64 * geometry.voxel_grid.slice_len() as u64 * 4;
    let buf_bytes = plan.chunk_angles as u64 * geometry.detector.frame_len() as u64 * 4;
    let extra = plan.n_splits > 1;
    b.push(Op::Alloc(slab_bytes), [], String::new());
    b.push(Op::Alloc(2 * buf_bytes), [], String::new());
    if extra {
        b.push(Op::Alloc(buf_bytes), [], String::new());
    }

    let m = chunks.len();
    // Drain index of each chunk for the previous slab; partial loads wait on them.
    let mut prev_drains: Vec<Option<usize>> = vec![None; m];
    for &slab in &plan.device_slabs[device] {
        let load = b.push(Op::LoadSlab { slab }, [prev_drains[m - 1]], format!("slab{slab}"));
        let mut drains: Vec<Option<usize>> = vec![None; m];
        let mut last: Vec<usize> = Vec::with_capacity(m);
        let mut acc_prev = None;
        for (c, angles) in chunks.iter().enumerate() {
            let buf = c % 2;
            let id = format!("s{slab}.c{c}");
            let reuse = if c >= 2 { drains[c - 2] } else { None };
            let kernel = b.push(
                Op::Project { slab, angles: angles.clone(), buf },
                [Some(load), reuse],
                id.clone(),
            );
            let mut done = kernel;
            if slab > 0 && extra {
                let partial = b.push(
                    Op::LoadPartial { slab, angles: angles.clone() },
                    [prev_drains[c], acc_prev],
                    id.clone(),
                );
                done = b.push(
                    Op::Accumulate { slab, angles: angles.clone(), buf },
                    [Some(kernel), Some(partial)],
                    id,
                );
                acc_prev = Some(done);
            }
            last.push(done);
            if c > 0 {
                let p = c - 1;
                drains[p] = Some(b.push(
                    Op::Drain { slab, angles: chunks[p].clone(), buf: p % 2 },
                    [Some(last[p])],
                    format!("s{slab}.c{p}"),
                ));
            }
        }
        let p = m - 1;
        drains[p] = Some(b.push(
            Op::Drain { slab, angles: chunks[p].clone(), buf: p % 2 },
            [Some(last[p])],
            format!("s{slab}.c{p}"),
        ));
        prev_drains = drains;
    }
    b.push(Op::Free(2 * buf_bytes + if extra { buf_bytes } else { 0 }), [], String::new());
    b.push(Op::Free(slab_bytes), [], String::new());
    b.cmds
}

/// Per owned slab: stream every angle chunk through two buffers into the
/// resident slab, then drain the slab.
fn backward_program(plan: &SplitPlan, geometry: &ScanGeometry, device: usize) -> Vec<Command> {
    let mut b = Builder { cmds: Vec::new() };
    let owned = &plan.device_slabs[device];
    if owned.is_empty() {
        return b.cmds;
    }
    let chunks = plan.chunks(device);
    let slab_bytes = plan.max_slab_depth() as u64 * geometry.voxel_grid.slice_len() as u64 * 4;
    let buf_bytes = plan.chunk_angles as u64 * geometry.detector.frame_len() as u64 * 4;
    b.push(Op::Alloc(slab_bytes), [], String::new());
    b.push(Op::Alloc(2 * buf_bytes), [], String::new());

    // Kernels in issue order; the buffer a load fills was last read two kernels back.
    let mut kernels: Vec<usize> = Vec::new();
    let mut prev_drain = None;
    for &slab in owned {
        for (c, angles) in chunks.iter().enumerate() {
            let buf = kernels.len() % 2;
            let id = format!("slab{slab}.c{c}");
            let reuse = kernels.len().checked_sub(2).map(|k| kernels[k]);
            let load = b.push(Op::LoadChunk { slab, angles: angles.clone(), buf }, [reuse], id.clone());
            let slab_free = if c == 0 { prev_drain } else { None };
            let k = b.push(
                Op::Backproject { slab, angles: angles.clone(), buf },
                [Some(load), slab_free],
                id,
            );
            kernels.push(k);
        }
        let last = *kernels.last().expect("at least one chunk");
        prev_drain = Some(b.push(Op::DrainSlab { slab }, [Some(last)], format!("slab{slab}")));
    }
    b.push(Op::Free(2 * buf_bytes), [], String::new());
    b.push(Op::Free(slab_bytes), [], String::new());
    b.cmds
}
