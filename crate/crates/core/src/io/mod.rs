//! Raw `f32` payloads with plain-text `key = value` sidecars.
//!
//! A payload at `data.raw` is described by `data.raw.meta`. Payloads are
//! little-endian IEEE-754 singles, x-fastest for volumes and u-fastest for
//! projections. Both files are written to temporaries and renamed into place.

mod phantom;

pub use phantom::{phantom, shepp_logan_at, Ellipsoid, PhantomKind, CYLINDER_VALUE, SHEPP_LOGAN_3D};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, ScanGeometry, VoxelGrid};
use crate::projectors::{ProjectionStack, Volume};

const DTYPE: &str = "f32";
const BYTE_ORDER: &str = "little";
const VOLUME_LAYOUT: &str = "x-fastest";
const PROJECTION_LAYOUT: &str = "u-fastest";

#[derive(Clone, Debug, PartialEq)]
pub enum SidecarMeta {
    Volume { grid: VoxelGrid },
    /// `angles` is the slice of the scan held in the payload.
    Projections { geometry: ScanGeometry, angles: Range<usize> },
    /// A scan description without payload.
    Geometry { geometry: ScanGeometry },
}

impl SidecarMeta {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Volume { .. } => "volume",
            Self::Projections { .. } => "projections",
            Self::Geometry { .. } => "geometry",
        }
    }

    /// Payload dimensions, fastest axis first.
    pub fn dims(&self) -> [usize; 3] {
        match self {
            Self::Volume { grid } => grid.n,
            Self::Projections { geometry, angles } => [geometry.detector.n_u, geometry.detector.n_v, angles.len()],
            Self::Geometry { .. } => [0; 3],
        }
    }

    pub fn payload_len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
        line("kind", self.kind().into());
        if !matches!(self, Self::Geometry { .. }) {
            line("dims", join(self.dims()));
            line("dtype", DTYPE.into());
            line("byte_order", BYTE_ORDER.into());
        }
        match self {
            Self::Volume { grid } => {
                line("layout", VOLUME_LAYOUT.into());
                write_grid(&mut line, grid);
            }
            Self::Projections { geometry, angles } => {
                line("layout", PROJECTION_LAYOUT.into());
                line("angle_range", format!("{} {}", angles.start, angles.end));
                write_scan(&mut line, geometry);
            }
            Self::Geometry { geometry } => write_scan(&mut line, geometry),
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("sidecar line {}: expected 'key = value'", n + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Format(format!("sidecar key '{}' repeated", k.trim())));
            }
        }
        let mut f = Fields(map);
        let kind = f.take("kind")?;
        let meta = match kind.as_str() {
            "volume" => {
                f.expect_payload_tags(VOLUME_LAYOUT)?;
                let grid = VoxelGrid::new(f.array("dims")?, f.array("spacing")?, f.array("offset")?)?;
                Self::Volume { grid }
            }
            "projections" => {
                f.expect_payload_tags(PROJECTION_LAYOUT)?;
                let dims: [usize; 3] = f.array("dims")?;
                let [a0, a1]: [usize; 2] = f.array("angle_range")?;
                let geometry = read_scan(&mut f)?;
                if a0 >= a1 || a1 > geometry.n_angles() {
                    return Err(Error::Format(format!("angle_range {a0}..{a1} outside 0..{}", geometry.n_angles())));
                }
                let meta = Self::Projections { geometry, angles: a0..a1 };
                if meta.dims() != dims {
                    return Err(Error::Format(format!("dims {dims:?} disagree with geometry {:?}", meta.dims())));
                }
                meta
            }
            "geometry" => Self::Geometry { geometry: read_scan(&mut f)? },
            other => return Err(Error::Format(format!("unknown kind tag '{other}'"))),
        };
        f.finish()?;
        Ok(meta)
    }
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_grid(line: &mut impl FnMut(&str, String), grid: &VoxelGrid) {
    line("spacing", join(grid.voxel_size));
    line("offset", join(grid.origin_offset));
}

fn write_scan(line: &mut impl FnMut(&str, String), g: &ScanGeometry) {
    line("dso", g.dso.to_string());
    line("dsd", g.dsd.to_string());
    line("grid_dims", join(g.voxel_grid.n));
    line("grid_spacing", join(g.voxel_grid.voxel_size));
    line("grid_offset", join(g.voxel_grid.origin_offset));
    line("detector_dims", format!("{} {}", g.detector.n_u, g.detector.n_v));
    line("pixel_size", join(g.detector.pixel_size));
    line("detector_offset", join(g.detector.offset));
    line("angles", join(g.angles.iter()));
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn take(&mut self, key: &str) -> Result<String> {
        self.0.remove(key).ok_or_else(|| Error::Format(format!("sidecar is missing '{key}'")))
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        self.take(key)?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Format(format!("bad value '{t}' for '{key}'"))))
            .collect()
    }

    fn array<T: std::str::FromStr + std::fmt::Debug, const N: usize>(&mut self, key: &str) -> Result<[T; N]> {
        let v = self.list(key)?;
        let got = v.len();
        v.try_into().map_err(|_| Error::Format(format!("'{key}' needs {N} values, got {got}")))
    }

    fn scalar(&mut self, key: &str) -> Result<f64> {
        let [x] = self.array(key)?;
        Ok(x)
    }

    fn expect_tag(&mut self, key: &str, want: &str) -> Result<()> {
        let got = self.take(key)?;
        if got != want {
            return Err(Error::Format(format!("unsupported {key} tag '{got}' (expected '{want}')")));
        }
        Ok(())
    }

    fn expect_payload_tags(&mut self, layout: &str) -> Result<()> {
        self.expect_tag("dtype", DTYPE)?;
        self.expect_tag("byte_order", BYTE_ORDER)?;
        self.expect_tag("layout", layout)
    }

    fn finish(self) -> Result<()> {
        match self.0.keys().next() {
            Some(k) => Err(Error::Format(format!("unknown sidecar tag '{k}'"))),
            None => Ok(()),
        }
    }
}

fn read_scan(f: &mut Fields) -> Result<ScanGeometry> {
    let dso = f.scalar("dso")?;
    let dsd = f.scalar("dsd")?;
    let grid = VoxelGrid::new(f.array("grid_dims")?, f.array("grid_spacing")?, f.array("grid_offset")?)?;
    let [n_u, n_v] = f.array("detector_dims")?;
    let det = DetectorGrid::new(n_u, n_v, f.array("pixel_size")?, f.array("detector_offset")?)?;
    ScanGeometry::new(dso, dsd, f.list("angles")?, grid, det)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn temp_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(format!(".tmp{}", std::process::id()));
    PathBuf::from(s)
}

/// Writes payload and sidecar so that neither appears without the other.
fn write_pair(path: &Path, meta: &SidecarMeta, data: &[f32]) -> Result<()> {
    debug_assert_eq!(meta.payload_len(), data.len());
    let side = sidecar_path(path);
    let (tmp_data, tmp_side) = (temp_path(path), temp_path(&side));
    let result = (|| -> Result<()> {
        let mut bytes = Vec::with_capacity(data.len() * 4);
        for x in data {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        fs::write(&tmp_data, bytes)?;
        fs::write(&tmp_side, meta.to_text())?;
        fs::rename(&tmp_data, path)?;
        if let Err(e) = fs::rename(&tmp_side, &side) {
            let _ = fs::remove_file(path);
            return Err(e.into());
        }
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp_data);
        let _ = fs::remove_file(&tmp_side);
    }
    result
}

pub fn read_meta(path: &Path) -> Result<SidecarMeta> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)
        .map_err(|e| Error::Format(format!("cannot read sidecar {}: {e}", side.display())))?;
    SidecarMeta::parse(&text)
}

fn read_payload(path: &Path, meta: &SidecarMeta) -> Result<Vec<f32>> {
    let bytes = fs::read(path)?;
    let want = meta.payload_len() * 4;
    if bytes.len() < want {
        return Err(Error::Format(format!("payload truncated: {} bytes, dims need {want}", bytes.len())));
    }
    if bytes.len() > want {
        return Err(Error::Format(format!("payload has {} bytes, dims need {want}", bytes.len())));
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

pub fn write_volume(path: &Path, volume: &Volume) -> Result<()> {
    if !volume.is_full() {
        return Err(Error::InvalidParameter("only full volumes can be written".into()));
    }
    write_pair(path, &SidecarMeta::Volume { grid: volume.grid().clone() }, volume.data())
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    match read_meta(path)? {
        meta @ SidecarMeta::Volume { .. } => {
            let data = read_payload(path, &meta)?;
            let SidecarMeta::Volume { grid } = meta else { unreachable!() };
            let nz = grid.n[2];
            Volume::from_data(&grid, 0..nz, data)
        }
        other => Err(Error::Format(format!("expected a volume sidecar, found kind '{}'", other.kind()))),
    }
}

pub fn write_projections(path: &Path, projections: &ProjectionStack, geometry: &ScanGeometry) -> Result<()> {
    let angles = projections.angle_range();
    if projections.detector() != &geometry.detector || angles.end > geometry.n_angles() {
        return Err(Error::GridMismatch("projections do not belong to the given geometry".into()));
    }
    write_pair(path, &SidecarMeta::Projections { geometry: geometry.clone(), angles }, projections.data())
}

pub fn read_projections(path: &Path) -> Result<(ProjectionStack, ScanGeometry)> {
    match read_meta(path)? {
        meta @ SidecarMeta::Projections { .. } => {
            let data = read_payload(path, &meta)?;
            let SidecarMeta::Projections { geometry, angles } = meta else { unreachable!() };
            Ok((ProjectionStack::from_data(&geometry.detector, angles, data)?, geometry))
        }
        other => Err(Error::Format(format!("expected a projections sidecar, found kind '{}'", other.kind()))),
    }
}

/// Writes a geometry-only sidecar at `path` (no payload).
pub fn write_geometry(path: &Path, geometry: &ScanGeometry) -> Result<()> {
    let tmp = temp_path(path);
    fs::write(&tmp, SidecarMeta::Geometry { geometry: geometry.clone() }.to_text())?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        e.into()
    })
}

/// Reads a scan description from a geometry file or from any projections sidecar.
pub fn read_geometry(path: &Path) -> Result<ScanGeometry> {
    let text = fs::read_to_string(path)?;
    match SidecarMeta::parse(&text)? {
        SidecarMeta::Geometry { geometry } | SidecarMeta::Projections { geometry, .. } => Ok(geometry),
        SidecarMeta::Volume { .. } => Err(Error::Format("a volume sidecar carries no scan geometry".into())),
    }
}
