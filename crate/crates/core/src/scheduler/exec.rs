//! Real execution: one worker thread per device, driven by an orchestrator
//! that hands out commands one at a time and reacts to completion messages.
//!
//! Device memory is host memory behind an allocation ledger, and each worker
//! writes only to the disjoint part of the host output it was handed.

use std::collections::HashMap;
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use super::device::{DevicePool, MemoryLedger};
use super::plan::{OpKind, SplitPlan, Tiles};
use super::program::{device_program, Command, Op};
use super::trace::{EventKind, ExecutionTrace, TraceEvent};
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projectors::{backproject_slab, forward_project_slab, ForwardMethod, ProjectionStack, Volume, WeightMode};

pub fn execute_forward(
    volume: &Volume,
    geometry: &ScanGeometry,
    pool: &DevicePool,
    plan: &SplitPlan,
    method: ForwardMethod,
) -> Result<ProjectionStack> {
    execute_forward_traced(volume, geometry, pool, plan, method).map(|(p, _)| p)
}

/// Forward projection of the full `volume` following `plan`, with the
/// wall-clock trace of the run.
pub fn execute_forward_traced(
    volume: &Volume,
    geometry: &ScanGeometry,
    pool: &DevicePool,
    plan: &SplitPlan,
    method: ForwardMethod,
) -> Result<(ProjectionStack, ExecutionTrace)> {
    let Tiles::Forward(tiles) = plan.tiles else {
        return Err(Error::PlanMismatch("a backward plan was passed to execute_forward".into()));
    };
    plan.check(geometry, pool)?;
    if volume.grid() != &geometry.voxel_grid || !volume.is_full() {
        return Err(Error::GridMismatch("execute_forward needs the full volume on the scan grid".into()));
    }
    let frame = geometry.detector.frame_len();
    let mut out = vec![0.0f32; frame * geometry.n_angles()];

    let mut rest = out.as_mut_slice();
    let mut workers = Vec::with_capacity(pool.len());
    for angles in &plan.device_angles {
        let (mine, tail) = rest.split_at_mut(angles.len() * frame);
        rest = tail;
        let base = angles.start;
        let mut slab: Option<Volume> = None;
        let mut bufs: [Vec<f32>; 2] = [Vec::new(), Vec::new()];
        let mut extra: Vec<f32> = Vec::new();
        workers.push(move |op: &Op| -> Result<()> {
            let local = |a: &std::ops::Range<usize>| (a.start - base) * frame..(a.end - base) * frame;
            match op {
                Op::LoadSlab { slab: s } => slab = Some(volume.extract_slab(plan.slab_ranges[*s].clone())?),
                Op::Project { angles, buf, .. } => {
                    let resident = slab.as_ref().ok_or_else(|| Error::Worker("no resident slab".into()))?;
                    let p = forward_project_slab(resident, geometry, angles.clone(), method, &tiles)?;
                    bufs[*buf] = p.into_data();
                }
                Op::LoadPartial { angles, .. } => extra = mine[local(angles)].to_vec(),
                Op::Accumulate { buf, .. } => {
                    for (b, e) in bufs[*buf].iter_mut().zip(&extra) {
                        *b = *e + *b;
                    }
                }
                Op::Drain { angles, buf, .. } => mine[local(angles)].copy_from_slice(&bufs[*buf]),
                other => return Err(Error::Worker(format!("unexpected forward command {other:?}"))),
            }
            Ok(())
        });
    }
    let trace = orchestrate(plan, geometry, pool, workers)?;
    Ok((ProjectionStack::from_data(&geometry.detector, 0..geometry.n_angles(), out)?, trace))
}

pub fn execute_backward(
    projections: &ProjectionStack,
    geometry: &ScanGeometry,
    pool: &DevicePool,
    plan: &SplitPlan,
    mode: WeightMode,
) -> Result<Volume> {
    execute_backward_traced(projections, geometry, pool, plan, mode).map(|(v, _)| v)
}

/// Backprojection of all of `projections` into a fresh volume following `plan`.
pub fn execute_backward_traced(
    projections: &ProjectionStack,
    geometry: &ScanGeometry,
    pool: &DevicePool,
    plan: &SplitPlan,
    mode: WeightMode,
) -> Result<(Volume, ExecutionTrace)> {
    let Tiles::Backward(tiles) = plan.tiles else {
        return Err(Error::PlanMismatch("a forward plan was passed to execute_backward".into()));
    };
    plan.check(geometry, pool)?;
    if projections.detector() != &geometry.detector || projections.angle_range() != (0..geometry.n_angles()) {
        return Err(Error::GridMismatch("execute_backward needs every scan angle on the scan detector".into()));
    }
    let grid = &geometry.voxel_grid;
    let slice = grid.slice_len();
    let mut out = vec![0.0f32; grid.len()];

    let mut parts: Vec<Option<&mut [f32]>> = Vec::with_capacity(plan.n_splits);
    let mut rest = out.as_mut_slice();
    for r in &plan.slab_ranges {
        let (mine, tail) = rest.split_at_mut(r.len() * slice);
        rest = tail;
        parts.push(Some(mine));
    }
    let mut workers = Vec::with_capacity(pool.len());
    for owned in &plan.device_slabs {
        let mut targets: HashMap<usize, &mut [f32]> =
            owned.iter().map(|&s| (s, parts[s].take().expect("slab owned twice"))).collect();
        let mut resident: Option<(usize, Volume)> = None;
        let mut bufs: [Option<ProjectionStack>; 2] = [None, None];
        workers.push(move |op: &Op| -> Result<()> {
            match op {
                Op::LoadChunk { angles, buf, .. } => bufs[*buf] = Some(projections.extract(angles.clone())?),
                Op::Backproject { slab, buf, .. } => {
                    let range = plan.slab_ranges[*slab].clone();
                    if resident.as_ref().map(|r| r.0) != Some(*slab) {
                        resident = Some((*slab, Volume::zeros_slab(grid, range.clone())?));
                    }
                    let chunk = bufs[*buf].as_ref().ok_or_else(|| Error::Worker("empty projection buffer".into()))?;
                    let (_, vol) = resident.as_mut().expect("set above");
                    backproject_slab(chunk, geometry, range, mode, &tiles, vol)?;
                }
                Op::DrainSlab { slab } => {
                    let (s, vol) = resident.take().ok_or_else(|| Error::Worker("no resident slab".into()))?;
                    if s != *slab {
                        return Err(Error::Worker(format!("drain of slab {slab} while {s} is resident")));
                    }
                    let target = targets.get_mut(slab).ok_or_else(|| Error::Worker(format!("slab {slab} not owned")))?;
                    target.copy_from_slice(vol.data());
                }
                other => return Err(Error::Worker(format!("unexpected backward command {other:?}"))),
            }
            Ok(())
        });
    }
    let trace = orchestrate(plan, geometry, pool, workers)?;
    Ok((Volume::from_data(grid, 0..grid.n[2], out)?, trace))
}

type Completion = (usize, Result<Option<TraceEvent>>);

fn orchestrate<W>(plan: &SplitPlan, geometry: &ScanGeometry, pool: &DevicePool, workers: Vec<W>) -> Result<ExecutionTrace>
where
    W: FnMut(&Op) -> Result<()> + Send,
{
    let programs: Vec<Vec<Command>> = (0..workers.len()).map(|d| device_program(plan, geometry, d)).collect();
    let clock = Instant::now();
    let mut events = Vec::new();
    let host_bytes = match plan.op_kind() {
        OpKind::Forward => geometry.voxel_grid.len() as u64 * 4,
        OpKind::Backward => (geometry.detector.frame_len() * geometry.n_angles()) as u64 * 4,
    };
    // Page-locking is not performed; its modelled cost is charged in the trace.
    if plan.pin_host_image {
        let cost = pool.devices[0].pin_cost_rate * host_bytes as f64;
        events.push(TraceEvent { device: 0, kind: EventKind::Pin, payload: "host".into(), start: 0.0, end: cost, bytes: host_bytes });
    }

    let (done_tx, done_rx) = mpsc::channel::<Completion>();
    let (first_err, high_water) = thread::scope(|scope| {
        let mut senders = Vec::new();
        let mut handles = Vec::new();
        for (d, mut work) in workers.into_iter().enumerate() {
            let (tx, rx) = mpsc::channel::<Command>();
            let done = done_tx.clone();
            let budget = pool.devices[d].memory_budget;
            handles.push(scope.spawn(move || {
                let mut ledger = MemoryLedger::new(d, budget);
                for cmd in rx {
                    let start = clock.elapsed().as_secs_f64();
                    let result = match cmd.op {
                        Op::Alloc(bytes) => ledger.alloc(bytes),
                        Op::Free(bytes) => {
                            ledger.free(bytes);
                            Ok(())
                        }
                        ref op => work(op),
                    };
                    let end = clock.elapsed().as_secs_f64();
                    let event = cmd.kind().map(|kind| TraceEvent {
                        device: d,
                        kind,
                        payload: cmd.payload.clone(),
                        start,
                        end,
                        bytes: cmd.bytes(plan, geometry),
                    });
                    if done.send((d, result.map(|_| event))).is_err() {
                        break;
                    }
                }
                ledger.high_water()
            }));
            senders.push(tx);
        }
        drop(done_tx);

        let mut next = vec![0usize; programs.len()];
        let mut in_flight = 0usize;
        for (d, prog) in programs.iter().enumerate() {
            if let Some(c) = prog.first() {
                senders[d].send(c.clone()).ok();
                next[d] = 1;
                in_flight += 1;
            }
        }
        let mut first_err: Option<Error> = None;
        while in_flight > 0 {
            let Ok((d, result)) = done_rx.recv() else {
                first_err.get_or_insert(Error::Worker("a device worker stopped unexpectedly".into()));
                break;
            };
            in_flight -= 1;
            match result {
                Ok(event) => {
                    events.extend(event);
                    if first_err.is_none() {
                        if let Some(c) = programs[d].get(next[d]) {
                            senders[d].send(c.clone()).ok();
                            next[d] += 1;
                            in_flight += 1;
                        }
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        drop(senders);
        let high_water: Vec<Result<u64>> = handles
            .into_iter()
            .map(|h| h.join().map_err(|_| Error::Worker("a device worker panicked".into())))
            .collect();
        (first_err, high_water)
    });
    if let Some(e) = first_err {
        return Err(e);
    }
    let high_water = high_water.into_iter().collect::<Result<Vec<u64>>>()?;
    let mut makespan = events.iter().map(|e| e.end).fold(0.0, f64::max);
    if plan.pin_host_image {
        events.push(TraceEvent { device: 0, kind: EventKind::Unpin, payload: "host".into(), start: makespan, end: makespan, bytes: host_bytes });
        makespan = makespan.max(clock.elapsed().as_secs_f64());
    }
    Ok(ExecutionTrace {
        events,
        high_water,
        budgets: pool.devices.iter().map(|d| d.memory_budget).collect(),
        makespan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VoxelGrid;
    use crate::projectors::{BackwardTileSpec, ForwardTileSpec};
    use crate::scheduler::{
        plan_backward, plan_backward_with_splits, plan_forward, plan_forward_with_splits, DeviceSpec,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize, angles: usize) -> (ScanGeometry, Volume) {
        let grid = VoxelGrid::new([n, n - 2, n + 2], [1.0, 1.0, 0.9], [0.3, 0.0, -0.2]).unwrap();
        let g = ScanGeometry::fitted(grid.clone(), n + 4, n, ScanGeometry::full_circle(angles)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let v = Volume::from_fn(&grid, |_| rng.gen_range(0.0..1.0));
        (g, v)
    }

    fn max_rel(a: &[f32], b: &[f32]) -> f64 {
        let scale = b.iter().fold(0f64, |m, &x| m.max(x.abs() as f64)).max(1e-30);
        a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn single_device_single_split_is_bit_identical() {
        let (g, v) = problem(12, 14);
        let pool = DevicePool::uniform(1, DeviceSpec::new(1 << 30)).unwrap();
        let tiles = ForwardTileSpec { chunk_angles: 4, ..Default::default() };
        let plan = plan_forward(&g, &pool, &tiles).unwrap();
        assert_eq!(plan.n_splits, 1);
        for method in [ForwardMethod::Siddon, ForwardMethod::Interpolated] {
            let a = execute_forward(&v, &g, &pool, &plan, method).unwrap();
            let b = forward_project_slab(&v, &g, 0..14, method, &tiles).unwrap();
            assert_eq!(a, b);
        }
        let bt = BackwardTileSpec { chunk_angles: 5, ..Default::default() };
        let bplan = plan_backward(&g, &pool, &bt).unwrap();
        let p = forward_project_slab(&v, &g, 0..14, ForwardMethod::Interpolated, &tiles).unwrap();
        for mode in [WeightMode::Fdk, WeightMode::Matched] {
            let a = execute_backward(&p, &g, &pool, &bplan, mode).unwrap();
            let mut b = Volume::zeros(&g.voxel_grid);
            backproject_slab(&p, &g, 0..g.voxel_grid.n[2], mode, &bt, &mut b).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn splits_and_devices_match_monolithic() {
        let (g, v) = problem(14, 11);
        let ft = ForwardTileSpec { chunk_angles: 3, ..Default::default() };
        let bt = BackwardTileSpec { chunk_angles: 4, ..Default::default() };
        let mono = forward_project_slab(&v, &g, 0..11, ForwardMethod::Siddon, &ft).unwrap();
        let mut mono_b = Volume::zeros(&g.voxel_grid);
        backproject_slab(&mono, &g, 0..16, WeightMode::Fdk, &bt, &mut mono_b).unwrap();
        for devices in 1..=3 {
            let pool = DevicePool::uniform(devices, DeviceSpec::new(1 << 30)).unwrap();
            for s in [1, 2, 4] {
                let fp = plan_forward_with_splits(&g, &pool, &ft, s).unwrap();
                let (p, trace) = execute_forward_traced(&v, &g, &pool, &fp, ForwardMethod::Siddon).unwrap();
                assert!(max_rel(p.data(), mono.data()) < 1e-5);
                trace.check_invariants().unwrap();
                let bp = plan_backward_with_splits(&g, &pool, &bt, s).unwrap();
                let (b, trace) = execute_backward_traced(&mono, &g, &pool, &bp, WeightMode::Fdk).unwrap();
                assert!(max_rel(b.data(), mono_b.data()) < 1e-5);
                trace.check_budgets().unwrap();
            }
        }
    }

    #[test]
    fn zero_projections_give_zero_volume() {
        let (g, _) = problem(10, 6);
        let pool = DevicePool::uniform(2, DeviceSpec::new(1 << 30)).unwrap();
        let plan = plan_backward_with_splits(&g, &pool, &BackwardTileSpec::default(), 4).unwrap();
        let p = ProjectionStack::zeros(&g.detector, 0..6);
        let v = execute_backward(&p, &g, &pool, &plan, WeightMode::Matched).unwrap();
        assert!(v.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn runtime_budget_check_fires() {
        let (g, v) = problem(10, 6);
        let pool = DevicePool::uniform(1, DeviceSpec::new(1 << 30)).unwrap();
        let plan = plan_forward(&g, &pool, &ForwardTileSpec::default()).unwrap();
        let tight = DevicePool::uniform(1, DeviceSpec::new(plan.per_device_bytes_peak - 1)).unwrap();
        let err = execute_forward(&v, &g, &tight, &plan, ForwardMethod::Siddon).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }), "{err}");
    }

    #[test]
    fn plan_kind_and_shape_are_checked() {
        let (g, v) = problem(10, 6);
        let pool = DevicePool::uniform(2, DeviceSpec::new(1 << 30)).unwrap();
        let bplan = plan_backward(&g, &pool, &BackwardTileSpec::default()).unwrap();
        assert!(matches!(execute_forward(&v, &g, &pool, &bplan, ForwardMethod::Siddon), Err(Error::PlanMismatch(_))));
        let one = DevicePool::uniform(1, DeviceSpec::new(1 << 30)).unwrap();
        let fplan = plan_forward(&g, &one, &ForwardTileSpec::default()).unwrap();
        assert!(matches!(execute_forward(&v, &g, &pool, &fplan, ForwardMethod::Siddon), Err(Error::PlanMismatch(_))));
    }
}
