use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::Operator;
use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::projectors::{ProjectionStack, Volume, WeightMode};
use crate::scheduler::DevicePool;

/// Feldkamp reconstruction: cosine weighting, row-wise ramp filtering and a
/// distance-weighted backprojection through the scheduler.
pub fn fdk(projections: &ProjectionStack, geometry: &ScanGeometry, pool: &DevicePool) -> Result<Volume> {
    fdk_with(projections, &Operator::new(geometry, pool))
}

pub fn fdk_with(projections: &ProjectionStack, op: &Operator<'_>) -> Result<Volume> {
    let geometry = op.geometry;
    if projections.n_angles() == 0 || projections.data().is_empty() {
        return Err(Error::EmptyProjections);
    }
    if projections.angle_range() != (0..geometry.n_angles()) || projections.detector() != &geometry.detector {
        return Err(Error::GridMismatch("FDK needs the full scan on the scan detector".into()));
    }
    let n = geometry.n_angles();
    let det = &geometry.detector;
    let half_fan = ((0.5 * det.n_u as f64 * det.pixel_size[0] + det.offset[0].abs()) / geometry.dsd).atan();
    let span = geometry.angular_span();
    let d_beta = if n > 1 { span / (n - 1) as f64 } else { 2.0 * PI };
    if span + d_beta < PI + 2.0 * half_fan {
        log::warn!(
            "angular coverage {:.3} rad is shorter than a short scan ({:.3} rad); expect artefacts",
            span + d_beta,
            PI + 2.0 * half_fan
        );
    }

    let filter = RampFilter::new(det.n_u, det.pixel_size[0] * geometry.dso / geometry.dsd);
    let scale = 0.5 * d_beta;
    let mut data = projections.data().to_vec();
    let frame = det.frame_len();
    data.par_chunks_mut(frame).for_each(|f| {
        let mut buf = vec![Complex::new(0.0, 0.0); filter.padded];
        for v in 0..det.n_v {
            let row = &mut f[v * det.n_u..(v + 1) * det.n_u];
            for (u, x) in row.iter_mut().enumerate() {
                let (cu, cv) = det.pixel_coords(u, v);
                let w = geometry.dsd / (geometry.dsd * geometry.dsd + cu * cu + cv * cv).sqrt();
                *x = (*x as f64 * w) as f32;
            }
            filter.apply(row, &mut buf, scale);
        }
    });
    let filtered = ProjectionStack::from_data(det, 0..n, data)?;
    op.backward(&filtered, WeightMode::Fdk)
}

/// Band-limited ramp filter sampled in space, applied by zero-padded FFT convolution.
struct RampFilter {
    padded: usize,
    n: usize,
    kernel: Vec<Complex<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl RampFilter {
    /// `tau` is the sample spacing at the rotation axis.
    fn new(n: usize, tau: f64) -> Self {
        let padded = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(padded);
        let inv = planner.plan_fft_inverse(padded);
        let mut kernel = vec![Complex::new(0.0, 0.0); padded];
        for (i, k) in kernel.iter_mut().enumerate() {
            // Signed lag, wrapped around the padded length.
            let lag = if i <= padded / 2 { i as i64 } else { i as i64 - padded as i64 };
            let h = if lag == 0 {
                1.0 / (4.0 * tau * tau)
            } else if lag % 2 != 0 {
                -1.0 / (PI * PI * (lag * lag) as f64 * tau * tau)
            } else {
                0.0
            };
            // The convolution integral contributes one factor of tau.
            *k = Complex::new(h * tau, 0.0);
        }
        fwd.process(&mut kernel);
        Self { padded, n, kernel, fwd, inv }
    }

    fn apply(&self, row: &mut [f32], buf: &mut [Complex<f64>], scale: f64) {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (b, &x) in buf.iter_mut().zip(row.iter()) {
            b.re = x as f64;
        }
        self.fwd.process(buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inv.process(buf);
        let norm = scale / self.padded as f64;
        for (x, b) in row.iter_mut().zip(&buf[..self.n]) {
            *x = (b.re * norm) as f32;
        }
    }
}
