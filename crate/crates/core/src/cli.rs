//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithms::{reconstruct, Algorithm, Operator, ReconConfig};
use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, ScanGeometry, VoxelGrid};
use crate::io::{phantom, read_geometry, read_projections, read_volume, write_projections, write_volume, PhantomKind};
use crate::projectors::{BackwardTileSpec, ForwardMethod, ForwardTileSpec, WeightMode};
use crate::regularization::{Minimizer, NormMode, TvParams};
use crate::scheduler::{simulate, DevicePool, DeviceSpec, SplitPlan};

#[derive(Parser, Debug)]
#[command(name = "tomosplit", version, about = "Out-of-core cone-beam CT projection and reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a phantom volume.
    Phantom(PhantomArgs),
    /// Forward-project a volume.
    Project(ProjectArgs),
    /// Backproject a projection file.
    Backproject(BackprojectArgs),
    /// Reconstruct a volume from projections.
    Recon(ReconArgs),
    /// Print the split plan for one operator pass.
    Plan(PlanArgs),
    /// Simulate one operator pass and print its trace.
    Simulate(PlanArgs),
    /// Compare simulated makespans across device counts.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PoolArgs {
    /// Device description, repeatable: `mem=<bytes>,bwpage=<B/s>,bwpin=<B/s>`.
    #[arg(long = "device", value_parser = parse_device)]
    pub devices: Vec<DeviceSpec>,
    #[arg(long, default_value_t = 0.95)]
    pub usable_fraction: f64,
    /// Projections per kernel launch, for both operators.
    #[arg(long)]
    pub chunk_angles: Option<usize>,
    /// Force this many slabs instead of the planner's minimum.
    #[arg(long)]
    pub splits: Option<usize>,
}

impl PoolArgs {
    fn pool(&self) -> Result<DevicePool> {
        let devices = if self.devices.is_empty() { vec![DeviceSpec::new(4 << 30)] } else { self.devices.clone() };
        DevicePool::with_usable_fraction(devices, self.usable_fraction)
    }

    fn tiles(&self) -> (ForwardTileSpec, BackwardTileSpec) {
        let mut f = ForwardTileSpec::default();
        let mut b = BackwardTileSpec::default();
        if let Some(c) = self.chunk_angles {
            f.chunk_angles = c;
            b.chunk_angles = c;
        }
        (f, b)
    }

    fn operator<'a>(&self, geometry: &'a ScanGeometry, pool: &'a DevicePool, method: ForwardMethod) -> Operator<'a> {
        let (forward_tiles, backward_tiles) = self.tiles();
        Operator { method, forward_tiles, backward_tiles, forced_splits: self.splits, ..Operator::new(geometry, pool) }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Voxels per axis of a cubic grid.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Non-cubic grid as `X,Y,Z`; overrides `--size`.
    #[arg(long, value_parser = parse_triple)]
    pub dims: Option<[usize; 3]>,
    /// Voxel edge in mm.
    #[arg(long, default_value_t = 1.0)]
    pub voxel: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<VoxelGrid> {
        VoxelGrid::new(self.dims.unwrap_or([self.size; 3]), [self.voxel; 3], [0.0; 3])
    }
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    /// Read the scan from a geometry or projections sidecar instead.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    /// Number of projections over a full circle.
    #[arg(long, default_value_t = 180)]
    pub angles: usize,
    /// Detector pixels as `U` or `UxV`; defaults to 1.5× the grid width.
    #[arg(long, value_parser = parse_detector)]
    pub detector: Option<[usize; 2]>,
    /// Detector pixel pitch in mm; needs `--dso` and `--dsd`.
    #[arg(long)]
    pub pixel: Option<f64>,
    #[arg(long)]
    pub dso: Option<f64>,
    #[arg(long)]
    pub dsd: Option<f64>,
}

impl ScanArgs {
    fn scan(&self, grid: &VoxelGrid) -> Result<ScanGeometry> {
        if let Some(path) = &self.geometry {
            let g = read_geometry(path)?;
            if &g.voxel_grid != grid {
                return Err(Error::GridMismatch(format!("{} describes a different voxel grid", path.display())));
            }
            return Ok(g);
        }
        let [nu, nv] = self.detector.unwrap_or_else(|| {
            let w = grid.n[0].max(grid.n[1]);
            [w + w / 2, grid.n[2] + grid.n[2] / 2]
        });
        let angles = ScanGeometry::full_circle(self.angles);
        match (self.dso, self.dsd, self.pixel) {
            (None, None, None) => ScanGeometry::fitted(grid.clone(), nu, nv, angles),
            (Some(dso), Some(dsd), Some(px)) => {
                ScanGeometry::new(dso, dsd, angles, grid.clone(), DetectorGrid::new(nu, nv, [px, px], [0.0, 0.0])?)
            }
            _ => Err(Error::InvalidParameter("--dso, --dsd and --pixel must be given together".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhantomName {
    SheppLogan,
    Cylinder,
    Blocks,
}

impl From<PhantomName> for PhantomKind {
    fn from(p: PhantomName) -> Self {
        match p {
            PhantomName::SheppLogan => PhantomKind::SheppLogan3D,
            PhantomName::Cylinder => PhantomKind::UniformCylinder,
            PhantomName::Blocks => PhantomKind::Blocks,
        }
    }
}

#[derive(Args, Debug)]
pub struct PhantomArgs {
    #[arg(long, value_enum, default_value_t = PhantomName::SheppLogan)]
    pub kind: PhantomName,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Amplitude of additive uniform noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Interpolated,
    Siddon,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long)]
    pub volume: PathBuf,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_enum, default_value_t = MethodName::Interpolated)]
    pub method: MethodName,
    /// Amplitude of additive uniform noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightName {
    Matched,
    Fdk,
}

#[derive(Args, Debug)]
pub struct BackprojectArgs {
    #[arg(long)]
    pub projections: PathBuf,
    #[arg(long, value_enum, default_value_t = WeightName::Matched)]
    pub weights: WeightName,
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    Fdk,
    Cgls,
    Ossart,
}

#[derive(Args, Debug)]
pub struct ReconArgs {
    #[arg(long)]
    pub projections: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmName::Fdk)]
    pub algorithm: AlgorithmName,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 20)]
    pub block_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub relaxation: f64,
    /// TV step after each OS-SART iteration: `gd:<step>` or `rof:<lambda>`.
    #[arg(long, value_parser = parse_tv)]
    pub tv: Option<TvParams>,
    /// Inner TV iterations per halo exchange (also the halo depth).
    #[arg(long, default_value_t = 8)]
    pub tv_iters: usize,
    #[arg(long, default_value_t = 1)]
    pub tv_syncs: usize,
    /// Use the per-slab norm estimate in TV gradient descent.
    #[arg(long)]
    pub tv_local_norm: bool,
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OpName {
    Forward,
    Backward,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_enum, default_value_t = OpName::Forward)]
    pub op: OpName,
}

impl PlanArgs {
    fn build(&self) -> Result<(ScanGeometry, DevicePool, SplitPlan)> {
        let geometry = self.scan.scan(&self.grid.grid()?)?;
        let pool = self.pool.pool()?;
        let plan = {
            let op = self.pool.operator(&geometry, &pool, ForwardMethod::Interpolated);
            let all = 0..geometry.n_angles();
            match self.op {
                OpName::Forward => op.forward_plan(all)?,
                OpName::Backward => op.backward_plan(all)?,
            }
        };
        Ok((geometry, pool, plan))
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// One device description; the pool is this device replicated.
    #[arg(long = "device", value_parser = parse_device)]
    pub device: Option<DeviceSpec>,
    #[arg(long, default_value_t = 0.95)]
    pub usable_fraction: f64,
    #[arg(long, default_value_t = 4)]
    pub max_devices: usize,
    #[arg(long, value_enum, default_value_t = OpName::Forward)]
    pub op: OpName,
    /// Also time the real operator on this machine.
    #[arg(long)]
    pub wall: bool,
}

/// Parses `args` (program name first) and runs the command, writing
/// human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Phantom(a) => {
            let grid = a.grid.grid()?;
            let mut v = phantom(a.kind.into(), &grid);
            add_noise(v.data_mut(), a.noise, a.seed)?;
            write_volume(&a.out, &v)?;
            writeln!(out, "wrote {} ({:?})", a.out.display(), grid.n)?;
        }
        Command::Project(a) => {
            let vol = read_volume(&a.volume)?;
            let geometry = a.scan.scan(vol.grid())?;
            let pool = a.pool.pool()?;
            let method = match a.method {
                MethodName::Interpolated => ForwardMethod::Interpolated,
                MethodName::Siddon => ForwardMethod::Siddon,
            };
            let op = a.pool.operator(&geometry, &pool, method);
            let mut p = op.forward_all(&vol)?;
            add_noise(p.data_mut(), a.noise, a.seed)?;
            write_projections(&a.out, &p, &geometry)?;
            writeln!(out, "wrote {} ({} projections)", a.out.display(), geometry.n_angles())?;
        }
        Command::Backproject(a) => {
            let (p, geometry) = read_projections(&a.projections)?;
            let pool = a.pool.pool()?;
            let op = a.pool.operator(&geometry, &pool, ForwardMethod::Interpolated);
            let mode = match a.weights {
                WeightName::Matched => WeightMode::Matched,
                WeightName::Fdk => WeightMode::Fdk,
            };
            let v = op.backward(&p, mode)?;
            write_volume(&a.out, &v)?;
            writeln!(out, "wrote {}", a.out.display())?;
        }
        Command::Recon(a) => {
            let (p, geometry) = read_projections(&a.projections)?;
            let mut config = ReconConfig::new(
                match a.algorithm {
                    AlgorithmName::Fdk => Algorithm::Fdk,
                    AlgorithmName::Cgls => Algorithm::Cgls,
                    AlgorithmName::Ossart => Algorithm::OsSart,
                },
                a.pool.pool()?,
            );
            config.iterations = a.iterations;
            config.block_size = a.block_size;
            config.relaxation = a.relaxation;
            config.forced_splits = a.pool.splits;
            (config.forward_tiles, config.backward_tiles) = a.pool.tiles();
            config.tv = a.tv.map(|tv| {
                let norm = if a.tv_local_norm { NormMode::LocalApprox } else { NormMode::ExactGlobal };
                tv.with_depth(a.tv_iters).with_syncs(a.tv_syncs).with_norm(norm)
            });
            if config.tv.is_some() && config.algorithm != Algorithm::OsSart {
                return Err(Error::InvalidParameter("--tv is only applied with --algorithm ossart".into()));
            }
            let r = reconstruct(&p, &geometry, &config)?;
            write_volume(&a.out, &r.volume)?;
            write!(out, "{}", r.residual_records())?;
            if r.breakdown {
                writeln!(out, "breakdown after {} iterations", r.residuals.len())?;
            }
        }
        Command::Plan(a) => {
            let (_, _, plan) = a.build()?;
            write!(out, "{plan}")?;
        }
        Command::Simulate(a) => {
            let (geometry, pool, plan) = a.build()?;
            let trace = simulate(&plan, &geometry, &pool);
            write!(out, "{}", trace.to_records())?;
        }
        Command::Bench(a) => bench(&a, out)?,
    }
    Ok(())
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let geometry = a.scan.scan(&a.grid.grid()?)?;
    let spec = a.device.unwrap_or_else(|| DeviceSpec::new(4 << 30));
    let volume = if a.wall { Some(phantom(PhantomKind::SheppLogan3D, &geometry.voxel_grid)) } else { None };
    let mut base = None;
    for d in 1..=a.max_devices.max(1) {
        let pool = DevicePool::with_usable_fraction(vec![spec; d], a.usable_fraction)?;
        let op = Operator::new(&geometry, &pool);
        let all = 0..geometry.n_angles();
        let plan = match a.op {
            OpName::Forward => op.forward_plan(all)?,
            OpName::Backward => op.backward_plan(all)?,
        };
        let makespan = simulate(&plan, &geometry, &pool).makespan;
        let base = *base.get_or_insert(makespan);
        write!(out, "devices={d} n_splits={} makespan={makespan:.6} ratio={:.3}", plan.n_splits, makespan / base)?;
        if let Some(v) = &volume {
            let t = Instant::now();
            match a.op {
                OpName::Forward => drop(op.forward_all(v)?),
                OpName::Backward => {
                    let p = op.forward_all(v)?;
                    let t = Instant::now();
                    drop(op.backward(&p, WeightMode::Matched)?);
                    write!(out, " wall={:.3}", t.elapsed().as_secs_f64())?;
                }
            }
            if a.op == OpName::Forward {
                write!(out, " wall={:.3}", t.elapsed().as_secs_f64())?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

fn add_noise(data: &mut [f32], amplitude: f64, seed: u64) -> Result<()> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise amplitude must be >= 0, got {amplitude}")));
    }
    if amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in data {
            *x += (amplitude * rng.gen_range(-1.0..1.0)) as f32;
        }
    }
    Ok(())
}

/// Parses `256MiB`, `4.5MB`, `1e9` and similar into a number of bytes.
pub fn parse_size(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let x: f64 = num.trim().parse().map_err(|_| format!("bad number '{num}'"))?;
    let scale = match unit.trim().trim_end_matches("/s") {
        "" | "B" => 1.0,
        "K" | "KB" | "k" | "kB" => 1e3,
        "M" | "MB" => 1e6,
        "G" | "GB" => 1e9,
        "T" | "TB" => 1e12,
        "KiB" => 1024.0,
        "MiB" => 1024.0 * 1024.0,
        "GiB" => 1024.0 * 1024.0 * 1024.0,
        "TiB" => 1024f64.powi(4),
        u => return Err(format!("unknown unit '{u}'")),
    };
    if !(x >= 0.0 && x.is_finite()) {
        return Err(format!("'{s}' is not a non-negative size"));
    }
    Ok(x * scale)
}

pub fn parse_device(s: &str) -> std::result::Result<DeviceSpec, String> {
    let mut spec = DeviceSpec::new(4 << 30);
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got '{part}'"))?;
        let x = parse_size(v)?;
        match k.trim() {
            "mem" => spec.memory_budget = x.round() as u64,
            "bwpage" => spec.bw_pageable = x,
            "bwpin" => spec.bw_pinned = x,
            other => return Err(format!("unknown device key '{other}' (expected mem, bwpage or bwpin)")),
        }
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_triple(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s.split([',', 'x']).map(|t| t.trim().parse().map_err(|_| format!("bad count '{t}'"))).collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected three counts, got '{s}'"))
}

fn parse_detector(s: &str) -> std::result::Result<[usize; 2], String> {
    let v: Vec<usize> = s.split(['x', ',']).map(|t| t.trim().parse().map_err(|_| format!("bad count '{t}'"))).collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [n] => Ok([n, n]),
        [u, v] => Ok([u, v]),
        _ => Err(format!("expected U or UxV, got '{s}'")),
    }
}

fn parse_tv(s: &str) -> std::result::Result<TvParams, String> {
    let (kind, value) = s.split_once(':').ok_or_else(|| format!("expected gd:<step> or rof:<lambda>, got '{s}'"))?;
    let x: f64 = value.parse().map_err(|_| format!("bad TV parameter '{value}'"))?;
    let tv = match kind {
        "gd" => TvParams::gradient_descent(x),
        "rof" => TvParams::rof(x),
        _ => return Err(format!("unknown TV minimiser '{kind}'")),
    };
    match tv.minimizer {
        Minimizer::GradientDescent { step } if !(step > 0.0) => Err("TV step must be positive".into()),
        Minimizer::Rof { lambda } if !(lambda > 0.0) => Err("ROF lambda must be positive".into()),
        _ => Ok(tv),
    }
}

/// Process entry point: one-line diagnostics and a non-zero status on failure.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn main() -> ExitCode {
    main_with_args(std::env::args_os())
}
