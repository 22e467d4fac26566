//! OS-SART on noisy data, with and without a TV step after each iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tomosplit::algorithms::{reconstruct, Algorithm, Operator, ReconConfig};
use tomosplit::geometry::{ScanGeometry, VoxelGrid};
use tomosplit::io::{phantom, PhantomKind};
use tomosplit::regularization::TvParams;
use tomosplit::scheduler::{DevicePool, DeviceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = VoxelGrid::cube(32, 1.0)?;
    let g = ScanGeometry::fitted(grid.clone(), 48, 48, ScanGeometry::full_circle(45))?;
    let pool = DevicePool::uniform(2, DeviceSpec::new(1 << 30))?;
    let truth = phantom(PhantomKind::SheppLogan3D, &grid);

    let mut b = Operator::new(&g, &pool).forward_all(&truth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    b.data_mut().iter_mut().for_each(|x| *x += rng.gen_range(-2.0..2.0));

    for tv in [None, Some(TvParams::rof(0.05).with_depth(10))] {
        let mut config = ReconConfig::new(Algorithm::OsSart, pool.clone());
        config.iterations = 6;
        config.block_size = 9;
        config.tv = tv;
        let r = reconstruct(&b, &g, &config)?;
        let se: f64 = r.volume.data().iter().zip(truth.data()).map(|(&a, &t)| (a as f64 - t as f64).powi(2)).sum();
        println!(
            "tv={}: final residual {:.4}, rmse to truth {:.5}",
            tv.is_some(),
            r.residuals.last().unwrap(),
            (se / truth.len() as f64).sqrt()
        );
    }
    Ok(())
}
