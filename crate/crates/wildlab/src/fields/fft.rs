//! In-place multidimensional FFT over flat row-major buffers.

use rustfft::num_complex::Complex;

use crate::scalar::Real;

/// Transform along every axis of a row-major hypercube with `m` points per
/// axis. Forward leaves the result unnormalised; callers divide by the total
/// point count to obtain Fourier coefficients.
pub fn fft_nd<T: Real>(data: &mut [Complex<T>], n_dim: usize, m: usize, inverse: bool) {
    debug_assert_eq!(data.len(), m.pow(n_dim as u32));
    let fft = T::plan_fft(m, inverse);
    let mut line = vec![Complex::new(T::zero(), T::zero()); m];
    for axis in 0..n_dim {
        let stride = m.pow((n_dim - 1 - axis) as u32);
        let block = stride * m;
        let outer = data.len() / block;
        for o in 0..outer {
            for s in 0..stride {
                let base = o * block + s;
                if stride == 1 {
                    fft.process(&mut data[base..base + m]);
                } else {
                    for k in 0..m {
                        line[k] = data[base + k * stride];
                    }
                    fft.process(&mut line);
                    for k in 0..m {
                        data[base + k * stride] = line[k];
                    }
                }
            }
        }
    }
}
