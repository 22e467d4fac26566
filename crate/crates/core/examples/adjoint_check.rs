//! Dot-product test of the matched projector pair through the scheduler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tomosplit::algorithms::Operator;
use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::projectors::{ProjectionStack, Volume, WeightMode};
use tomosplit::scheduler::{DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(16, 1.0)?;
    let g = ScanGeometry::fitted(grid.clone(), 24, 24, ScanGeometry::full_circle(8))?;
    let pool = DevicePool::uniform(2, DeviceSpec::new(1 << 30))?;
    let op = Operator { forced_splits: Some(3), ..Operator::new(&g, &pool) };

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..5 {
        let x = Volume::from_fn(&grid, |_| rng.gen_range(-1.0..1.0));
        let n = g.detector.frame_len() * g.n_angles();
        let y = ProjectionStack::from_data(&g.detector, 0..8, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let lhs = op.forward_all(&x)?.dot(&y);
        let rhs = x.dot(&op.backward(&y, WeightMode::Matched)?);
        println!("trial {trial}: <Ax,y>={lhs:.6} <x,A'y>={rhs:.6} rel gap {:.2e}", (lhs - rhs).abs() / lhs.abs());
    }
    Ok(())
}
