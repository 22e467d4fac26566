//! Raw volumes and projections with their text sidecars.

use tomosplit::algorithms::Operator;
use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::io::{phantom, read_projections, read_volume, sidecar_path, write_projections, write_volume, PhantomKind};
use tomosplit::scheduler::{DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("tomosplit-io-example");
    std::fs::create_dir_all(&dir)?;
    let grid = VoxelGrid::cube(24, 0.5)?;
    let g = ScanGeometry::fitted(grid.clone(), 36, 36, ScanGeometry::full_circle(12))?;
    let v = phantom(PhantomKind::SheppLogan3D, &grid);
    let pool = DevicePool::uniform(1, DeviceSpec::new(1 << 30))?;
    let p = Operator::new(&g, &pool).forward_all(&v)?;

    let (vp, pp) = (dir.join("phantom.raw"), dir.join("proj.raw"));
    write_volume(&vp, &v)?;
    write_projections(&pp, &p, &g)?;
    println!("{}", std::fs::read_to_string(sidecar_path(&pp))?);

    assert_eq!(read_volume(&vp)?, v);
    let (p2, g2) = read_projections(&pp)?;
    assert_eq!(p2, p);
    assert_eq!(g2, g);
    println!("round trip ok in {}", dir.display());
    Ok(())
}
