//! Colored Gaussian noise for candidate sampling.
//!
//! White Gaussian noise is shaped in the frequency domain with power
//! spectral density proportional to `f^-exponent` along the horizon axis,
//! then normalized to unit variance. Exponent 0 recovers white noise;
//! larger exponents give temporally smoother sequences, which is what makes
//! sampled action sequences excite slow system modes.

use rand::Rng;
use rand_distr::StandardNormal;

/// One noise sequence of length `len` with PSD `~ f^-exponent` and unit
/// variance. The horizon is short (tens of steps) so the inverse transform
/// is evaluated directly rather than through an FFT.
pub fn colored_noise<R: Rng>(exponent: f64, len: usize, rng: &mut R) -> Vec<f64> {
    assert!(len > 0, "noise length must be positive");
    if len == 1 {
        return vec![rng.sample(StandardNormal)];
    }

    let n = len;
    let bins = n / 2 + 1;

    // per-bin scale f^(-exponent/2), with the zero bin clamped to the
    // lowest nonzero frequency
    let f_min = 1.0 / n as f64;
    let mut scale = Vec::with_capacity(bins);
    for k in 0..bins {
        let f = (k as f64 / n as f64).max(f_min);
        scale.push(f.powf(-exponent / 2.0));
    }

    // exact time-domain variance of the inverse transform below:
    // DC and (even n) Nyquist are real with doubled power, interior bins
    // contribute 4 * scale^2 each
    let mut var = 2.0 * scale[0] * scale[0];
    let interior_end = if n % 2 == 0 { bins - 1 } else { bins };
    for s in &scale[1..interior_end] {
        var += 4.0 * s * s;
    }
    if n % 2 == 0 {
        var += 2.0 * scale[bins - 1] * scale[bins - 1];
    }
    let sigma = var.sqrt() / n as f64;

    // sample spectrum: real and imaginary parts, special-casing the purely
    // real DC and (for even n) Nyquist bins
    let mut re = Vec::with_capacity(bins);
    let mut im = Vec::with_capacity(bins);
    for s in &scale {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        re.push(a * s);
        im.push(b * s);
    }
    im[0] = 0.0;
    re[0] *= std::f64::consts::SQRT_2;
    if n % 2 == 0 {
        im[bins - 1] = 0.0;
        re[bins - 1] *= std::f64::consts::SQRT_2;
    }

    // inverse real DFT (Hermitian-symmetric spectrum)
    let mut out = Vec::with_capacity(n);
    let base = 2.0 * std::f64::consts::PI / n as f64;
    for t in 0..n {
        let mut acc = re[0];
        for k in 1..interior_end {
            let theta = base * (k * t) as f64;
            acc += 2.0 * (re[k] * theta.cos() - im[k] * theta.sin());
        }
        if n % 2 == 0 {
            let theta = std::f64::consts::PI * t as f64;
            acc += re[bins - 1] * theta.cos();
        }
        out.push(acc / (n as f64 * sigma));
    }
    out
}
