//! Simulated makespans for one to four devices, and the start of a trace.

use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::projectors::ForwardTileSpec;
use tomosplit::scheduler::{plan_forward, simulate, DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(2048, 1.0)?;
    let g = ScanGeometry::fitted(grid, 2048, 2048, ScanGeometry::full_circle(1024))?;
    let spec = DeviceSpec::new(11 << 30);

    let mut base = 0.0;
    for d in 1..=4 {
        let pool = DevicePool::new(vec![spec; d])?;
        let plan = plan_forward(&g, &pool, &ForwardTileSpec::default())?;
        let trace = simulate(&plan, &g, &pool);
        trace.check_invariants()?;
        if d == 1 {
            base = trace.makespan;
        }
        println!(
            "devices={d} splits={} events={} makespan={:.2}s ratio={:.3}",
            plan.n_splits,
            trace.events.len(),
            trace.makespan,
            trace.makespan / base
        );
    }

    let pool = DevicePool::new(vec![spec; 2])?;
    let trace = simulate(&plan_forward(&g, &pool, &ForwardTileSpec::default())?, &g, &pool);
    print!("{}", trace.to_records().lines().take(8).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}
