//! How the planner splits a volume as the device budget shrinks.

use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::projectors::{BackwardTileSpec, ForwardTileSpec};
use tomosplit::scheduler::{plan_backward, plan_forward, DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(512, 1.0)?;
    let g = ScanGeometry::fitted(grid, 512, 512, ScanGeometry::full_circle(360))?;

    println!("{:>8} {:>8} {:>9}", "budget", "forward", "backward");
    for mib in [2048u64, 1024, 512, 256, 128, 64] {
        let pool = DevicePool::with_usable_fraction(vec![DeviceSpec::new(mib << 20); 2], 1.0)?;
        let f = plan_forward(&g, &pool, &ForwardTileSpec::default());
        let b = plan_backward(&g, &pool, &BackwardTileSpec::default());
        let show = |r: Result<usize, _>| r.map(|s: usize| s.to_string()).unwrap_or_else(|_: tomosplit::Error| "-".into());
        println!("{:>5}MiB {:>8} {:>9}", mib, show(f.map(|p| p.n_splits)), show(b.map(|p| p.n_splits)));
    }

    let pool = DevicePool::with_usable_fraction(vec![DeviceSpec::new(256 << 20); 2], 1.0)?;
    println!("\n{}", plan_backward(&g, &pool, &BackwardTileSpec::default())?);
    Ok(())
}
