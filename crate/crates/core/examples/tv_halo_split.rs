//! TV denoising split across devices with halo slabs, compared with the
//! single-volume minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tomosplit::geometry::VoxelGrid;
use tomosplit::io::{phantom, PhantomKind};
use tomosplit::regularization::{minimize_rof, split_minimize_report, tv_norm, TvParams};
use tomosplit::scheduler::{DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut v = phantom(PhantomKind::Blocks, &VoxelGrid::cube(32, 1.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    v.data_mut().iter_mut().for_each(|x| *x += rng.gen_range(-0.004..0.004));

    let params = TvParams::rof(0.01).with_depth(8).with_syncs(4);
    let pool = DevicePool::uniform(2, DeviceSpec::new(1 << 30))?;
    let (split, report) = split_minimize_report(&v, &pool, &params)?;
    let whole = minimize_rof(&v, &params)?;

    println!("{report:?}");
    println!("TV before {:.3}, after {:.3}", tv_norm(&v)?, tv_norm(&split)?);
    let diff = split.data().iter().zip(whole.data()).map(|(a, b)| (a - b).abs()).fold(0f32, f32::max);
    println!("max difference split vs whole: {diff:.2e}");
    Ok(())
}
