//! A forward projection that does not fit one device, run slab by slab on a
//! pool of small devices and checked against the in-memory result.

use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::io::{phantom, PhantomKind};
use tomosplit::projectors::{forward_project_slab, ForwardMethod, ForwardTileSpec};
use tomosplit::scheduler::{execute_forward_traced, plan_forward, DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(48, 1.0)?;
    let g = ScanGeometry::fitted(grid.clone(), 64, 64, ScanGeometry::full_circle(36))?;
    let volume = phantom(PhantomKind::SheppLogan3D, &grid);

    // 48³ floats are 442 KB; give each device about half of that.
    let pool = DevicePool::with_usable_fraction(vec![DeviceSpec::new(400_000); 3], 1.0)?;
    let tiles = ForwardTileSpec { chunk_angles: 4, ..Default::default() };
    let plan = plan_forward(&g, &pool, &tiles)?;
    println!("{plan}");

    let (split, trace) = execute_forward_traced(&volume, &g, &pool, &plan, ForwardMethod::Interpolated)?;
    trace.check_invariants()?;
    for (d, hw) in trace.high_water.iter().enumerate() {
        println!("device {d}: peak {hw} of {} bytes", trace.budgets[d]);
    }

    let whole = forward_project_slab(&volume, &g, 0..36, ForwardMethod::Interpolated, &tiles)?;
    let err = split.data().iter().zip(whole.data()).map(|(a, b)| (a - b).abs()).fold(0f32, f32::max);
    println!("max abs difference to the in-memory projection: {err:.2e}");
    Ok(())
}
