//! Sign-preserving logarithmic observation transforms.
//!
//! `symlog` compresses large magnitudes while staying approximately linear
//! near zero; `symexp` is its exact inverse. These are applied to states
//! before regression so that occasional large observations do not dominate
//! training.

use crate::scalar::Scalar;

/// `sign(x) * ln(1 + |x|)`, elementwise odd and monotone.
#[inline]
pub fn symlog<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        x.ln_1p()
    } else {
        -(-x).ln_1p()
    }
}

/// `sign(y) * (exp(|y|) - 1)`, the exact inverse of [`symlog`].
#[inline]
pub fn symexp<T: Scalar>(y: T) -> T {
    if y >= T::zero() {
        y.exp_m1()
    } else {
        -(-y).exp_m1()
    }
}

/// Applies `symlog` over a slice into `out`.
pub fn symlog_into<T: Scalar>(x: &[T], out: &mut [T]) {
    debug_assert_eq!(x.len(), out.len());
    for (o, &v) in out.iter_mut().zip(x) {
        *o = symlog(v);
    }
}

/// Applies `symexp` over a slice into `out`.
pub fn symexp_into<T: Scalar>(y: &[T], out: &mut [T]) {
    debug_assert_eq!(y.len(), out.len());
    for (o, &v) in out.iter_mut().zip(y) {
        *o = symexp(v);
    }
}

/// Allocating convenience wrapper over [`symlog_into`].
pub fn symlog_vec<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| symlog(v)).collect()
}

/// Allocating convenience wrapper over [`symexp_into`].
pub fn symexp_vec<T: Scalar>(y: &[T]) -> Vec<T> {
    y.iter().map(|&v| symexp(v)).collect()
}
