//! Iterative radix-2 FFT over `num_complex::Complex64`.

use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let w_len = Complex64::new(libm::cos(ang), libm::sin(ang));
        for chunk in buf.chunks_mut(len) {
            let mut w = Complex64::new(1.0, 0.0);
            let (lo, hi) = chunk.split_at_mut(len / 2);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
                w *= w_len;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }
}

pub fn fft(buf: &mut [Complex64]) {
    transform(buf, false);
}

/// Inverse transform, scaled by 1/n.
pub fn ifft(buf: &mut [Complex64]) {
    transform(buf, true);
}

/// Forward transform of a real signal zero-padded to `n` (a power of two).
pub fn rfft_padded(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft(&mut buf);
    buf
}
