//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the simulator can run on.
///
/// Everything in the crate is written against this trait; `f64` is the
/// production type (see the aliases at the crate root), `f32` is supported
/// for quick low-precision sweeps.
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Smallest tolerance that still makes sense for normalization checks at
    /// this precision.
    fn norm_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {
    fn norm_tol() -> Self {
        1e-5
    }
}

impl Real for f64 {
    fn norm_tol() -> Self {
        1e-12
    }
}

/// Neumaier-compensated sum, independent of the order rayon hands back chunks.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// `n` points spaced evenly in log between `lo` and `hi`, both included.
pub fn log_space<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + step * T::from_usize_lossy(i)).exp()
                    }
                })
                .collect()
        }
    }
}

/// Bisection on a sign change of `f` in `[lo, hi]`.
pub fn bisect<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> Option<T> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Some(lo);
    }
    if f_hi == T::zero() {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        let f_mid = f(mid);
        if f_mid == T::zero() || (hi - lo).abs() < tol {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1.0f64];
        v.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(v.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn log_space_endpoints() {
        let g = log_space(0.02f64, 0.5, 50);
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.02);
        assert_eq!(g[49], 0.5);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x: f64| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
