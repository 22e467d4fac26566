//! CGLS where every operator pass is split to fit small devices.

use tomosplit::algorithms::{reconstruct, Algorithm, Operator, ReconConfig};
use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::io::{phantom, PhantomKind};
use tomosplit::projectors::{BackwardTileSpec, ForwardTileSpec};
use tomosplit::scheduler::{DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(32, 1.0)?;
    let g = ScanGeometry::fitted(grid.clone(), 48, 48, ScanGeometry::full_circle(40))?;
    let truth = phantom(PhantomKind::SheppLogan3D, &grid);

    let small = DevicePool::with_usable_fraction(vec![DeviceSpec::new(160_000); 2], 1.0)?;
    let b = Operator::new(&g, &DevicePool::uniform(1, DeviceSpec::new(1 << 30))?).forward_all(&truth)?;

    let mut config = ReconConfig::new(Algorithm::Cgls, small);
    config.iterations = 8;
    config.forward_tiles = ForwardTileSpec { chunk_angles: 4, ..Default::default() };
    config.backward_tiles = BackwardTileSpec { chunk_angles: 4, ..Default::default() };
    let op = config.operator(&g);
    println!("forward pass uses {} slabs", op.forward_plan(0..40)?.n_splits);
    println!("backward pass uses {} slabs", op.backward_plan(0..40)?.n_splits);

    let r = reconstruct(&b, &g, &config)?;
    print!("{}", r.residual_records());
    Ok(())
}
