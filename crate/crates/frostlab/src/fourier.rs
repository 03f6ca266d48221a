//! In-place 2D FFT over x-major buffers, shared by the convolution and
//! spectrum paths.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Transforms rows (contiguous `ny` runs) then columns. Inverse transforms
/// are unnormalized; callers divide by `nx * ny` once.
pub(crate) fn fft2(
    data: &mut [Complex64],
    nx: usize,
    ny: usize,
    planner: &mut FftPlanner<f64>,
    inverse: bool,
) {
    let plan_y = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    for row in data.chunks_exact_mut(ny) {
        plan_y.process(row);
    }
    let plan_x = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    let mut col = vec![Complex64::default(); nx];
    for iy in 0..ny {
        for (ix, slot) in col.iter_mut().enumerate() {
            *slot = data[ix * ny + iy];
        }
        plan_x.process(&mut col);
        for (ix, slot) in col.iter().enumerate() {
            data[ix * ny + iy] = *slot;
        }
    }
}
