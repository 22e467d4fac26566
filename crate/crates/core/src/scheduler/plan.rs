use std::fmt;
use std::ops::Range;

use super::device::DevicePool;
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projectors::{BackwardTileSpec, ForwardTileSpec};

const F32: u64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Forward,
    Backward,
}

/// Launch shape the plan was made for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tiles {
    Forward(ForwardTileSpec),
    Backward(BackwardTileSpec),
}

/// How one operator pass is cut into axial slabs and angle chunks, and which
/// device handles what.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    pub tiles: Tiles,
    pub n_splits: usize,
    pub slab_ranges: Vec<Range<usize>>,
    /// Forward: a disjoint contiguous block per device. Backward: every
    /// device sees all angles.
    pub device_angles: Vec<Range<usize>>,
    /// Indices into `slab_ranges` that each device processes, in order.
    pub device_slabs: Vec<Vec<usize>>,
    pub chunk_angles: usize,
    pub buffer_count: usize,
    pub pin_host_image: bool,
    pub per_device_bytes_peak: u64,
    pub usable_budget: u64,
}

impl SplitPlan {
    pub fn op_kind(&self) -> OpKind {
        match self.tiles {
            Tiles::Forward(_) => OpKind::Forward,
            Tiles::Backward(_) => OpKind::Backward,
        }
    }

    pub fn n_devices(&self) -> usize {
        self.device_slabs.len()
    }

    /// Angle chunks device `d` streams, in order.
    pub fn chunks(&self, device: usize) -> Vec<Range<usize>> {
        crate::projectors::chunks_of(self.device_angles[device].clone(), self.chunk_angles).collect()
    }

    pub fn max_slab_depth(&self) -> usize {
        self.slab_ranges.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    /// Checks the plan against the problem it is about to run on.
    pub fn check(&self, geometry: &ScanGeometry, pool: &DevicePool) -> Result<()> {
        let nz = geometry.voxel_grid.n[2];
        let na = geometry.n_angles();
        if self.n_devices() != pool.len() || self.device_angles.len() != pool.len() {
            return Err(Error::PlanMismatch(format!(
                "plan is for {} devices, pool has {}",
                self.n_devices(),
                pool.len()
            )));
        }
        let mut z = 0;
        for r in &self.slab_ranges {
            if r.start != z || r.is_empty() {
                return Err(Error::PlanMismatch(format!("slab ranges do not partition 0..{nz}")));
            }
            z = r.end;
        }
        if z != nz || self.n_splits != self.slab_ranges.len() {
            return Err(Error::PlanMismatch(format!("slab ranges do not partition 0..{nz}")));
        }
        let mut owned: Vec<usize> = self.device_slabs.iter().flatten().copied().collect();
        match self.op_kind() {
            OpKind::Forward => {
                let mut a = 0;
                for r in &self.device_angles {
                    if r.start != a {
                        return Err(Error::PlanMismatch("device angle blocks are not contiguous".into()));
                    }
                    a = r.end;
                }
                if a != na {
                    return Err(Error::PlanMismatch(format!("angle blocks cover 0..{a}, scan has {na}")));
                }
                if self.device_slabs.iter().any(|q| *q != (0..self.n_splits).collect::<Vec<_>>()) {
                    return Err(Error::PlanMismatch("forward devices must visit every slab in order".into()));
                }
            }
            OpKind::Backward => {
                if self.device_angles.iter().any(|r| *r != (0..na)) {
                    return Err(Error::PlanMismatch("backward devices must stream every angle".into()));
                }
                owned.sort_unstable();
                if owned != (0..self.n_splits).collect::<Vec<_>>() {
                    return Err(Error::PlanMismatch("each slab must be owned by exactly one device".into()));
                }
            }
        }
        if self.chunk_angles == 0 {
            return Err(Error::PlanMismatch("chunk_angles is zero".into()));
        }
        Ok(())
    }
}

impl fmt::Display for SplitPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "op={:?}", self.op_kind())?;
        writeln!(f, "n_splits={}", self.n_splits)?;
        writeln!(f, "chunk_angles={}", self.chunk_angles)?;
        writeln!(f, "buffer_count={}", self.buffer_count)?;
        writeln!(f, "pin_host_image={}", self.pin_host_image)?;
        writeln!(f, "per_device_bytes_peak={}", self.per_device_bytes_peak)?;
        writeln!(f, "usable_budget={}", self.usable_budget)?;
        let slabs: Vec<String> = self.slab_ranges.iter().map(|r| format!("{}..{}", r.start, r.end)).collect();
        writeln!(f, "slabs={}", slabs.join(","))?;
        for (d, (angles, q)) in self.device_angles.iter().zip(&self.device_slabs).enumerate() {
            let q: Vec<String> = q.iter().map(|s| s.to_string()).collect();
            writeln!(f, "device={d} angles={}..{} slabs={}", angles.start, angles.end, q.join(","))?;
        }
        Ok(())
    }
}

/// `[0, n)` cut into slabs of `ceil(n / s)` layers; the last one may be thinner.
pub fn slab_partition(n: usize, s: usize) -> Vec<Range<usize>> {
    let h = n.div_ceil(s.max(1));
    (0..n).step_by(h.max(1)).map(|z| z..(z + h).min(n)).collect()
}

fn even_blocks(n: usize, parts: usize) -> Vec<Range<usize>> {
    let (q, r) = (n / parts, n % parts);
    let mut start = 0;
    (0..parts)
        .map(|d| {
            let len = q + usize::from(d < r);
            let b = start..start + len;
            start += len;
            b
        })
        .collect()
}

fn slab_bytes(geometry: &ScanGeometry, depth: usize) -> u64 {
    geometry.voxel_grid.slice_len() as u64 * depth as u64 * F32
}

fn chunk_bytes(geometry: &ScanGeometry, chunk: usize) -> u64 {
    geometry.detector.frame_len() as u64 * chunk as u64 * F32
}

fn forward_buffers(s: usize) -> usize {
    if s == 1 {
        2
    } else {
        3
    }
}

fn forward_peak(geometry: &ScanGeometry, chunk: usize, s: usize) -> u64 {
    let depth = geometry.voxel_grid.n[2].div_ceil(s);
    slab_bytes(geometry, depth) + forward_buffers(s) as u64 * chunk_bytes(geometry, chunk)
}

fn backward_peak(geometry: &ScanGeometry, chunk: usize, s: usize) -> u64 {
    let depth = geometry.voxel_grid.n[2].div_ceil(s);
    slab_bytes(geometry, depth) + 2 * chunk_bytes(geometry, chunk)
}

fn smallest_split(geometry: &ScanGeometry, usable: u64, peak: impl Fn(usize) -> u64) -> Result<usize> {
    let nz = geometry.voxel_grid.n[2];
    if peak(1) <= usable {
        return Ok(1);
    }
    // From s = 2 on the buffer count is fixed and peak bytes only fall as s
    // grows, so bisect for the first feasible s.
    if peak(nz) > usable {
        return Err(Error::Infeasible(format!(
            "one slice plus buffers needs {} bytes, usable budget is {usable}",
            peak(nz)
        )));
    }
    let (mut lo, mut hi) = (2.min(nz), nz);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if peak(mid) <= usable {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Forward plan with the fewest slabs that fit the usable budget.
pub fn plan_forward(geometry: &ScanGeometry, pool: &DevicePool, tiles: &ForwardTileSpec) -> Result<SplitPlan> {
    tiles.validate()?;
    let chunk = tiles.chunk_angles.min(geometry.n_angles());
    let s = smallest_split(geometry, pool.usable_budget(), |s| forward_peak(geometry, chunk, s))?;
    build_forward(geometry, pool, tiles, s)
}

/// Forward plan with a caller-chosen slab count; still checked against the budget.
pub fn plan_forward_with_splits(
    geometry: &ScanGeometry,
    pool: &DevicePool,
    tiles: &ForwardTileSpec,
    n_splits: usize,
) -> Result<SplitPlan> {
    tiles.validate()?;
    check_split_count(geometry, n_splits)?;
    let plan = build_forward(geometry, pool, tiles, n_splits)?;
    check_budget(&plan)?;
    Ok(plan)
}

fn build_forward(geometry: &ScanGeometry, pool: &DevicePool, tiles: &ForwardTileSpec, s: usize) -> Result<SplitPlan> {
    let chunk = tiles.chunk_angles.min(geometry.n_angles());
    let slab_ranges = slab_partition(geometry.voxel_grid.n[2], s);
    let n_splits = slab_ranges.len();
    let devices = pool.len();
    Ok(SplitPlan {
        tiles: Tiles::Forward(ForwardTileSpec { chunk_angles: chunk, ..*tiles }),
        n_splits,
        device_angles: even_blocks(geometry.n_angles(), devices),
        device_slabs: vec![(0..n_splits).collect(); devices],
        chunk_angles: chunk,
        buffer_count: forward_buffers(n_splits),
        pin_host_image: n_splits > 1 || devices > 2,
        per_device_bytes_peak: forward_peak(geometry, chunk, n_splits),
        usable_budget: pool.usable_budget(),
        slab_ranges,
    })
}

/// Backward plan with the fewest slabs that fit the usable budget.
pub fn plan_backward(geometry: &ScanGeometry, pool: &DevicePool, tiles: &BackwardTileSpec) -> Result<SplitPlan> {
    tiles.validate()?;
    let chunk = tiles.chunk_angles.min(geometry.n_angles());
    let s = smallest_split(geometry, pool.usable_budget(), |s| backward_peak(geometry, chunk, s))?;
    build_backward(geometry, pool, tiles, s)
}

pub fn plan_backward_with_splits(
    geometry: &ScanGeometry,
    pool: &DevicePool,
    tiles: &BackwardTileSpec,
    n_splits: usize,
) -> Result<SplitPlan> {
    tiles.validate()?;
    check_split_count(geometry, n_splits)?;
    let plan = build_backward(geometry, pool, tiles, n_splits)?;
    check_budget(&plan)?;
    Ok(plan)
}

fn build_backward(geometry: &ScanGeometry, pool: &DevicePool, tiles: &BackwardTileSpec, s: usize) -> Result<SplitPlan> {
    let chunk = tiles.chunk_angles.min(geometry.n_angles());
    let slab_ranges = slab_partition(geometry.voxel_grid.n[2], s);
    let n_splits = slab_ranges.len();
    let devices = pool.len();
    let mut device_slabs = vec![Vec::new(); devices];
    for i in 0..n_splits {
        device_slabs[i % devices].push(i);
    }
    Ok(SplitPlan {
        tiles: Tiles::Backward(BackwardTileSpec { chunk_angles: chunk, ..*tiles }),
        n_splits,
        device_angles: vec![0..geometry.n_angles(); devices],
        device_slabs,
        chunk_angles: chunk,
        buffer_count: 2,
        // Projections are re-sent once per owned slab, so pinning pays off
        // as soon as some device owns more than one.
        pin_host_image: n_splits > devices || devices > 2,
        per_device_bytes_peak: backward_peak(geometry, chunk, n_splits),
        usable_budget: pool.usable_budget(),
        slab_ranges,
    })
}

fn check_split_count(geometry: &ScanGeometry, n_splits: usize) -> Result<()> {
    let nz = geometry.voxel_grid.n[2];
    if n_splits == 0 || n_splits > nz {
        return Err(Error::InvalidParameter(format!("n_splits must be in 1..={nz}, got {n_splits}")));
    }
    if slab_partition(nz, n_splits).len() != n_splits {
        return Err(Error::InvalidParameter(format!(
            "{nz} slices cannot be cut into {n_splits} slabs of ceil({nz}/{n_splits}) layers"
        )));
    }
    Ok(())
}

fn check_budget(plan: &SplitPlan) -> Result<()> {
    if plan.per_device_bytes_peak > plan.usable_budget {
        return Err(Error::Infeasible(format!(
            "{} slabs need {} bytes per device, usable budget is {}",
            plan.n_splits, plan.per_device_bytes_peak, plan.usable_budget
        )));
    }
    Ok(())
}
