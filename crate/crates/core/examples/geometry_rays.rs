//! Cone-beam geometry basics: source positions, pixel rays and Siddon
//! intersection lengths.

use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::projectors::siddon_trace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(16, 1.0)?;
    let g = ScanGeometry::fitted(grid.clone(), 24, 24, ScanGeometry::full_circle(8))?;
    println!("dso={:.2} dsd={:.2} pixel={:?}", g.dso, g.dsd, g.detector.pixel_size);

    for a in [0, 2, 4] {
        let s = g.source_position(a)?;
        println!("angle {a}: source at ({:.2}, {:.2}, {:.2})", s[0], s[1], s[2]);
    }

    // The central pixel ray passes through the rotation axis.
    let ray = g.pixel_ray(0, 12, 12)?;
    let segments = siddon_trace(&ray, &grid);
    let total: f64 = segments.iter().map(|(_, l)| l).sum();
    println!("central ray: {} voxels, length {total:.4} mm, chord {:.4} mm", segments.len(), ray.chord());
    for (ijk, len) in segments.iter().take(4) {
        println!("  voxel {ijk:?} length {len:.4}");
    }
    Ok(())
}
