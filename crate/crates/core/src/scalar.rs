use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. Frequencies are carried in MHz unless a
/// name says otherwise.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossless for every literal this crate uses.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    if x == T::infinity() {
        return T::one();
    }
    if x == T::neg_infinity() {
        return T::zero();
    }
    T::lit(0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2))
}

/// Sample median. Caller guarantees a non-empty slice.
pub(crate) fn median<T: Real>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Ordinary least squares for `y = intercept + slope * x`.
///
/// Returns `None` when every `x` is identical.
pub(crate) fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Option<(T, T)> {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if sxx <= T::epsilon() * T::epsilon() * (mx * mx).max(T::one()) {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}
