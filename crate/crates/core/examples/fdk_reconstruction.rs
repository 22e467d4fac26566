//! FDK reconstruction of a uniform cylinder from simulated projections.

use tomosplit::algorithms::{fdk, Operator};
use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::io::{phantom, PhantomKind, CYLINDER_VALUE};
use tomosplit::scheduler::{DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(48, 1.0)?;
    let g = ScanGeometry::fitted(grid.clone(), 72, 72, ScanGeometry::full_circle(120))?;
    let pool = DevicePool::uniform(2, DeviceSpec::new(1 << 30))?;
    let truth = phantom(PhantomKind::UniformCylinder, &grid);

    let projections = Operator::new(&g, &pool).forward_all(&truth)?;
    let rec = fdk(&projections, &g, &pool)?;

    // Profile along x through the centre.
    let profile: Vec<String> = (0..48).step_by(3).map(|i| format!("{:.4}", rec.get([i, 24, 24]))).collect();
    println!("x profile: {}", profile.join(" "));
    println!("centre {:.5}, expected {CYLINDER_VALUE}", rec.get([24, 24, 24]));
    Ok(())
}
