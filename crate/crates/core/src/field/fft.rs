//! Three-dimensional complex FFT on row-major arrays.
//!
//! Lines are transformed independently, so the result does not depend on
//! how they are distributed over threads.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn lines_contiguous(data: &mut [Complex64], len: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::default(); fft.get_inplace_scratch_len()],
        |scratch, line| fft.process_with_scratch(line, scratch),
    );
}

/// In-place 3D transform. The inverse is normalized by the total size.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    let [n0, n1, n2] = dims;
    assert_eq!(data.len(), n0 * n1 * n2);
    // Axis 2 is contiguous.
    lines_contiguous(data, n2, inverse);
    // Axis 1: within each axis-0 plane gather the n2 lines of length n1.
    let mut planner = FftPlanner::new();
    let f1 = if inverse { planner.plan_fft_inverse(n1) } else { planner.plan_fft_forward(n1) };
    data.par_chunks_mut(n1 * n2).for_each(|plane| {
        let mut buf = vec![Complex64::default(); n1 * n2];
        for j in 0..n1 {
            for k in 0..n2 {
                buf[k * n1 + j] = plane[j * n2 + k];
            }
        }
        let mut scratch = vec![Complex64::default(); f1.get_inplace_scratch_len()];
        for line in buf.chunks_mut(n1) {
            f1.process_with_scratch(line, &mut scratch);
        }
        for j in 0..n1 {
            for k in 0..n2 {
                plane[j * n2 + k] = buf[k * n1 + j];
            }
        }
    });
    // Axis 0: one axis-1 slab at a time, lines transformed in parallel.
    let mut buf = vec![Complex64::default(); n0 * n2];
    for j in 0..n1 {
        for i in 0..n0 {
            let row = &data[(i * n1 + j) * n2..(i * n1 + j + 1) * n2];
            for (k, v) in row.iter().enumerate() {
                buf[k * n0 + i] = *v;
            }
        }
        lines_contiguous(&mut buf, n0, inverse);
        for i in 0..n0 {
            let row = &mut data[(i * n1 + j) * n2..(i * n1 + j + 1) * n2];
            for (k, v) in row.iter_mut().enumerate() {
                *v = buf[k * n0 + i];
            }
        }
    }
    if inverse {
        let scale = 1.0 / (n0 * n1 * n2) as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

/// Signed integer frequency of FFT bin `i` on an axis of length `n`.
#[inline]
pub fn frequency_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
