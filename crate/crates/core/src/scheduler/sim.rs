//! Discrete-event replay of the device programs under the cost model.
//!
//! Every device has one compute engine and one copy engine per direction.
//! Page-locked transfers run on the device's own copy engine and overlap its
//! kernels. Pageable transfers are staged by the host thread: they wait for
//! everything already issued to that device, hold the host until done, and
//! block later work on the device until they finish.

use super::device::{DevicePool, MemoryLedger};
use super::plan::{OpKind, SplitPlan};
use super::program::{device_program, Command, Op};
use super::trace::{EventKind, ExecutionTrace, TraceEvent};
use crate::geometry::ScanGeometry;

#[derive(Default, Clone, Copy)]
struct Engines {
    compute: f64,
    h2d: f64,
    d2h: f64,
    /// Nothing on the device may start before this.
    barrier: f64,
    /// End of the latest work issued so far.
    issued_end: f64,
}

/// Simulated execution of `plan` on `pool`.
pub fn simulate(plan: &SplitPlan, geometry: &ScanGeometry, pool: &DevicePool) -> ExecutionTrace {
    let n_dev = plan.n_devices().min(pool.len());
    let programs: Vec<Vec<Command>> = (0..n_dev).map(|d| device_program(plan, geometry, d)).collect();
    let mut ledgers: Vec<MemoryLedger> =
        (0..n_dev).map(|d| MemoryLedger::new(d, pool.devices[d].memory_budget)).collect();
    let mut ends: Vec<Vec<f64>> = programs.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut next = vec![0usize; n_dev];
    let mut engines = vec![Engines::default(); n_dev];
    let mut host_free = 0.0f64;
    let mut events = Vec::new();

    let pinned = plan.pin_host_image;
    let host_bytes = host_image_bytes(plan, geometry);
    let mut ready = 0.0;
    if pinned {
        let dur = pool.devices[0].pin_cost_rate * host_bytes as f64;
        events.push(TraceEvent {
            device: 0,
            kind: EventKind::Pin,
            payload: "host".into(),
            start: 0.0,
            end: dur,
            bytes: host_bytes,
        });
        ready = dur;
        host_free = dur;
    }
    for e in engines.iter_mut() {
        e.h2d = ready;
        e.d2h = ready;
    }

    loop {
        // Allocation steps take no time; apply them as they come up.
        for d in 0..n_dev {
            while let Some(c) = programs[d].get(next[d]) {
                match c.op {
                    // Overruns are left for the invariant checker to report.
                    Op::Alloc(bytes) => ledgers[d].force_alloc(bytes),
                    Op::Free(bytes) => ledgers[d].free(bytes),
                    _ => break,
                }
                next[d] += 1;
            }
        }
        let mut best: Option<(f64, usize)> = None;
        for d in 0..n_dev {
            if let Some(c) = programs[d].get(next[d]) {
                let start = earliest_start(c, &ends[d], &engines[d], host_free, pinned);
                if best.map_or(true, |(t, _)| start < t) {
                    best = Some((start, d));
                }
            }
        }
        let Some((start, d)) = best else { break };
        let c = &programs[d][next[d]];
        let spec = &pool.devices[d];
        let kind = c.kind().expect("allocation steps handled above");
        let bytes = c.bytes(plan, geometry);
        let dur = match kind {
            EventKind::Kernel => kernel_rate(plan, spec) * work_units(c, plan, geometry),
            EventKind::Accumulate => spec.compute.accumulate * work_units(c, plan, geometry),
            _ => bytes as f64 / spec.bandwidth(pinned),
        };
        let end = start + dur;
        let e = &mut engines[d];
        match kind {
            EventKind::Kernel | EventKind::Accumulate => e.compute = end,
            EventKind::TransferIn => e.h2d = end,
            _ => e.d2h = end,
        }
        e.issued_end = e.issued_end.max(end);
        if !pinned && matches!(kind, EventKind::TransferIn | EventKind::TransferOut) {
            e.barrier = end;
            host_free = end;
        }
        ends[d][next[d]] = end;
        events.push(TraceEvent { device: d, kind, payload: c.payload.clone(), start, end, bytes });
        next[d] += 1;
    }

    let mut makespan = events.iter().map(|e| e.end).fold(0.0, f64::max);
    if pinned {
        events.push(TraceEvent {
            device: 0,
            kind: EventKind::Unpin,
            payload: "host".into(),
            start: makespan,
            end: makespan,
            bytes: host_bytes,
        });
        makespan = makespan.max(ready);
    }
    ExecutionTrace {
        events,
        high_water: ledgers.iter().map(|l| l.high_water()).collect(),
        budgets: pool.devices[..n_dev].iter().map(|d| d.memory_budget).collect(),
        makespan,
    }
}

fn earliest_start(c: &Command, ends: &[f64], e: &Engines, host_free: f64, pinned: bool) -> f64 {
    let deps = c.deps.iter().map(|&j| ends[j]).fold(0.0, f64::max);
    let base = deps.max(e.barrier);
    match c.kind() {
        Some(EventKind::Kernel) | Some(EventKind::Accumulate) => base.max(e.compute),
        Some(kind) if !pinned => {
            let engine = if kind == EventKind::TransferIn { e.h2d } else { e.d2h };
            base.max(engine).max(e.issued_end).max(host_free)
        }
        Some(EventKind::TransferIn) => base.max(e.h2d),
        _ => base.max(e.d2h),
    }
}

fn kernel_rate(plan: &SplitPlan, spec: &super::DeviceSpec) -> f64 {
    match plan.op_kind() {
        OpKind::Forward => spec.compute.forward,
        OpKind::Backward => spec.compute.backward,
    }
}

/// Kernels: slab voxels times angles. Accumulation: projection values.
fn work_units(c: &Command, plan: &SplitPlan, geometry: &ScanGeometry) -> f64 {
    let slice = geometry.voxel_grid.slice_len() as f64;
    match &c.op {
        Op::Project { slab, angles, .. } | Op::Backproject { slab, angles, .. } => {
            plan.slab_ranges[*slab].len() as f64 * slice * angles.len() as f64
        }
        Op::Accumulate { angles, .. } => angles.len() as f64 * geometry.detector.frame_len() as f64,
        _ => 0.0,
    }
}

/// Host data page-locked for the pass: the image for forward, the
/// projections for backward.
fn host_image_bytes(plan: &SplitPlan, geometry: &ScanGeometry) -> u64 {
    match plan.op_kind() {
        OpKind::Forward => geometry.voxel_grid.len() as u64 * 4,
        OpKind::Backward => geometry.detector.frame_len() as u64 * geometry.n_angles() as u64 * 4,
    }
}
