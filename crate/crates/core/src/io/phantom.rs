//! Synthetic test objects.

use crate::geometry::VoxelGrid;
use crate::projectors::Volume;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhantomKind {
    SheppLogan3D,
    /// Axis-aligned cylinder of 0.02 /mm.
    UniformCylinder,
    /// 4×4×4 checkerboard of 0.01 and 0.02.
    Blocks,
}

impl std::str::FromStr for PhantomKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "shepplogan" | "shepplogan3d" => Ok(Self::SheppLogan3D),
            "cylinder" | "uniformcylinder" => Ok(Self::UniformCylinder),
            "blocks" => Ok(Self::Blocks),
            _ => Err(format!("unknown phantom '{s}' (expected shepp-logan, cylinder or blocks)")),
        }
    }
}

pub const CYLINDER_VALUE: f32 = 0.02;

/// One ellipsoid, in coordinates normalised to the half-extent of the grid.
#[derive(Clone, Copy, Debug)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub axes: [f64; 3],
    /// Rotation about z, degrees, counter-clockwise from +x.
    pub rotation_deg: f64,
    pub value: f64,
}

impl Ellipsoid {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let dz = p[2] - self.center[2];
        let xr = dx * c + dy * s;
        let yr = -dx * s + dy * c;
        (xr / self.axes[0]).powi(2) + (yr / self.axes[1]).powi(2) + (dz / self.axes[2]).powi(2) <= 1.0
    }
}

const fn ell(center: [f64; 3], axes: [f64; 3], rotation_deg: f64, value: f64) -> Ellipsoid {
    Ellipsoid { center, axes, rotation_deg, value }
}

/// Three-dimensional Shepp-Logan head, as tabulated in Kak & Slaney,
/// *Principles of Computerized Tomographic Imaging* (IEEE Press, 1988), ch. 3:
///
/// | | centre (x, y, z) | axes (A, B, C) | β (deg) | value |
/// |---|---|---|---|---|
/// | a | (0, 0, 0) | (0.69, 0.92, 0.9) | 0 | 2.0 |
/// | b | (0, 0, 0) | (0.6624, 0.874, 0.88) | 0 | −0.98 |
/// | c | (−0.22, 0, −0.25) | (0.41, 0.16, 0.21) | 108 | −0.02 |
/// | d | (0.22, 0, −0.25) | (0.31, 0.11, 0.22) | 72 | −0.02 |
/// | e | (0, 0.35, −0.25) | (0.21, 0.25, 0.5) | 0 | 0.01 |
/// | f | (0, 0.1, −0.25) | (0.046, 0.046, 0.046) | 0 | 0.01 |
/// | g | (−0.08, −0.65, −0.25) | (0.046, 0.023, 0.02) | 0 | 0.01 |
/// | h | (0.06, −0.65, −0.25) | (0.046, 0.023, 0.02) | 90 | 0.01 |
/// | i | (0.06, −0.105, 0.625) | (0.056, 0.04, 0.1) | 90 | 0.02 |
/// | j | (0, 0.1, 0.625) | (0.056, 0.056, 0.1) | 0 | −0.02 |
///
/// Values add where ellipsoids overlap.
pub const SHEPP_LOGAN_3D: [Ellipsoid; 10] = [
    ell([0.0, 0.0, 0.0], [0.69, 0.92, 0.9], 0.0, 2.0),
    ell([0.0, 0.0, 0.0], [0.6624, 0.874, 0.88], 0.0, -0.98),
    ell([-0.22, 0.0, -0.25], [0.41, 0.16, 0.21], 108.0, -0.02),
    ell([0.22, 0.0, -0.25], [0.31, 0.11, 0.22], 72.0, -0.02),
    ell([0.0, 0.35, -0.25], [0.21, 0.25, 0.5], 0.0, 0.01),
    ell([0.0, 0.1, -0.25], [0.046, 0.046, 0.046], 0.0, 0.01),
    ell([-0.08, -0.65, -0.25], [0.046, 0.023, 0.02], 0.0, 0.01),
    ell([0.06, -0.65, -0.25], [0.046, 0.023, 0.02], 90.0, 0.01),
    ell([0.06, -0.105, 0.625], [0.056, 0.04, 0.1], 90.0, 0.02),
    ell([0.0, 0.1, 0.625], [0.056, 0.056, 0.1], 0.0, -0.02),
];

/// Shepp-Logan value at a point given in normalised coordinates.
pub fn shepp_logan_at(p: [f64; 3]) -> f64 {
    SHEPP_LOGAN_3D.iter().filter(|e| e.contains(p)).map(|e| e.value).sum()
}

/// Samples `kind` at the voxel centres of `grid`. Coordinates are taken
/// relative to the grid centre.
pub fn phantom(kind: PhantomKind, grid: &VoxelGrid) -> Volume {
    let half = grid.extent().map(|e| 0.5 * e);
    let o = grid.origin_offset;
    match kind {
        PhantomKind::SheppLogan3D => Volume::from_fn(grid, |c| {
            shepp_logan_at([(c[0] - o[0]) / half[0], (c[1] - o[1]) / half[1], (c[2] - o[2]) / half[2]]) as f32
        }),
        PhantomKind::UniformCylinder => {
            let e = grid.extent();
            // Capped at 0.8 of the z extent so cone-beam scans see both ends.
            let r = 0.4 * e[0].min(e[1]);
            let h = 0.4 * e[2];
            Volume::from_fn(grid, |c| {
                let (x, y, z) = (c[0] - o[0], c[1] - o[1], c[2] - o[2]);
                if x * x + y * y <= r * r && z.abs() <= h {
                    CYLINDER_VALUE
                } else {
                    0.0
                }
            })
        }
        PhantomKind::Blocks => {
            let mut v = Volume::zeros(grid);
            let n = grid.n;
            for k in 0..n[2] {
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        let parity = (i * 4 / n[0] + j * 4 / n[1] + k * 4 / n[2]) % 2;
                        v.set([i, j, k], 0.01 * (1 + parity) as f32);
                    }
                }
            }
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularization::tv_norm;

    #[test]
    fn cylinder_center_and_corner() {
        let grid = VoxelGrid::cube(33, 1.0).unwrap();
        let v = phantom(PhantomKind::UniformCylinder, &grid);
        assert_eq!(v.get([16, 16, 16]), 0.02);
        assert_eq!(v.get([0, 0, 0]), 0.0);
        assert_eq!(v.get([32, 32, 16]), 0.0);
    }

    /// Independent 2D oracle: each ellipsoid's z = 0 section is an ellipse
    /// with axes scaled by sqrt(1 − (z0/C)²).
    fn section_2d(x: f64, y: f64) -> f64 {
        let rows: [(f64, f64, f64, f64, f64, f64, f64, f64); 10] = [
            (0.0, 0.0, 0.0, 0.69, 0.92, 0.9, 0.0, 2.0),
            (0.0, 0.0, 0.0, 0.6624, 0.874, 0.88, 0.0, -0.98),
            (-0.22, 0.0, -0.25, 0.41, 0.16, 0.21, 108.0, -0.02),
            (0.22, 0.0, -0.25, 0.31, 0.11, 0.22, 72.0, -0.02),
            (0.0, 0.35, -0.25, 0.21, 0.25, 0.5, 0.0, 0.01),
            (0.0, 0.1, -0.25, 0.046, 0.046, 0.046, 0.0, 0.01),
            (-0.08, -0.65, -0.25, 0.046, 0.023, 0.02, 0.0, 0.01),
            (0.06, -0.65, -0.25, 0.046, 0.023, 0.02, 90.0, 0.01),
            (0.06, -0.105, 0.625, 0.056, 0.04, 0.1, 90.0, 0.02),
            (0.0, 0.1, 0.625, 0.056, 0.056, 0.1, 0.0, -0.02),
        ];
        let mut acc = 0.0;
        for (x0, y0, z0, a, b, c, beta, rho) in rows {
            let q = 1.0 - (z0 / c) * (z0 / c);
            if q <= 0.0 {
                continue;
            }
            let (a2, b2) = (a * q.sqrt(), b * q.sqrt());
            let t = beta.to_radians();
            let xr = (x - x0) * t.cos() + (y - y0) * t.sin();
            let yr = -(x - x0) * t.sin() + (y - y0) * t.cos();
            if (xr / a2).powi(2) + (yr / b2).powi(2) <= 1.0 {
                acc += rho;
            }
        }
        acc
    }

    #[test]
    fn shepp_logan_central_slice_matches_2d_section() {
        let grid = VoxelGrid::cube(65, 1.0).unwrap();
        let v = phantom(PhantomKind::SheppLogan3D, &grid);
        let half = 32.5;
        let mut mismatches = 0;
        for j in 0..65 {
            for i in 0..65 {
                let c = grid.voxel_center([i, j, 32]);
                let want = section_2d(c[0] / half, c[1] / half);
                let got = v.get([i, j, 32]) as f64;
                // Points within rounding of an ellipse boundary may land either side.
                if (got - want).abs() > 1e-6 {
                    mismatches += 1;
                }
            }
        }
        assert_eq!(mismatches, 0);
        assert!((v.get([32, 32, 32]) as f64 - 1.02).abs() < 1e-6);
    }

    #[test]
    fn blocks_tv_closed_form() {
        // 16³: four blocks of 4 per axis, interfaces after indices 3, 7 and 11.
        let grid = VoxelGrid::cube(16, 1.0).unwrap();
        let v = phantom(PhantomKind::Blocks, &grid);
        // Per axis 3 of 16 indices carry a jump of 0.01; the flags are independent.
        let (p, q) = (3.0, 13.0);
        let mut want = 0.0;
        for k in 0..=3u32 {
            let count = [1.0, 3.0, 3.0, 1.0][k as usize] * f64::powi(p, k as i32) * f64::powi(q, 3 - k as i32);
            want += count * (k as f64).sqrt() * 0.01;
        }
        let got = tv_norm(&v).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn parses_names() {
        assert_eq!("shepp-logan".parse::<PhantomKind>().unwrap(), PhantomKind::SheppLogan3D);
        assert_eq!("Cylinder".parse::<PhantomKind>().unwrap(), PhantomKind::UniformCylinder);
        assert!("sphere".parse::<PhantomKind>().is_err());
    }
}
