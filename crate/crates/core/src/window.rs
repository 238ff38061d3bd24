//! Fixed-window yield model.
//!
//! A lattice of `N` qubits is taken to be collision-free when every qubit
//! lands within `±Δf` of its set-point, giving yield `Φ(Δf/σ_f)^N` with `Φ`
//! the standard normal CDF. `Δf` is fitted per lattice from Monte Carlo
//! yield curves, and its drift with `N` is fitted as `A + B·ln N`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::scalar::{linear_fit, normal_cdf, Real};

/// `Φ(Δf/σ_f)^N`; `σ_f = 0` gives 1.
pub fn window_yield<T: Real>(delta_f_mhz: T, sigma_f_mhz: T, n_qubits: usize) -> T {
    if sigma_f_mhz == T::zero() {
        return T::one();
    }
    normal_cdf(delta_f_mhz / sigma_f_mhz).powf(T::from_usize_lossy(n_qubits))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFit<T> {
    pub delta_f_mhz: T,
    pub n_qubits: usize,
    /// RMS yield error over the points used.
    pub residual: T,
    pub points_used: usize,
}

fn sse<T: Real>(delta: T, pts: &[(T, T)], n: usize) -> T {
    pts.iter()
        .map(|&(s, y)| {
            let e = window_yield(delta, s, n) - y;
            e * e
        })
        .sum()
}

/// Least-squares `Δf` for a `(σ_f, yield)` curve.
///
/// Points with yield exactly 0 or 1 (and σ_f = 0) are dropped; at least three
/// must remain. A coarse scan out to ten times the largest σ_f brackets the
/// minimum and golden-section search refines it well below 0.01 MHz.
pub fn fit_window<T: Real>(curve: &[(T, T)], n_qubits: usize) -> Result<WindowFit<T>> {
    if n_qubits == 0 {
        return Err(invalid_param("qubit count must be at least 1"));
    }
    let pts: Vec<(T, T)> = curve
        .iter()
        .copied()
        .filter(|&(s, y)| s > T::zero() && y > T::zero() && y < T::one())
        .collect();
    if pts.len() < 3 {
        return Err(Error::Unfittable(format!(
            "need at least 3 points with 0 < yield < 1, found {}",
            pts.len()
        )));
    }
    if pts.iter().any(|&(s, y)| !s.is_finite() || !y.is_finite()) {
        return Err(invalid_input("yield curve contains non-finite values"));
    }
    let max_sigma = pts.iter().map(|p| p.0).fold(T::zero(), T::max);
    let steps = 2000;
    let h = max_sigma * T::lit(10.0) / T::from_usize_lossy(steps);
    let (mut best_k, mut best) = (1, T::infinity());
    for k in 1..=steps {
        let v = sse(T::from_usize_lossy(k) * h, &pts, n_qubits);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut lo = T::from_usize_lossy(best_k - 1) * h;
    let mut hi = T::from_usize_lossy(best_k + 1) * h;
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (sse(c, &pts, n_qubits), sse(d, &pts, n_qubits));
    let tol = T::lit(1e-6) * max_sigma.max(T::one());
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = sse(c, &pts, n_qubits);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = sse(d, &pts, n_qubits);
        }
    }
    let delta = (lo + hi) / T::lit(2.0);
    let residual = (sse(delta, &pts, n_qubits) / T::from_usize_lossy(pts.len())).sqrt();
    Ok(WindowFit {
        delta_f_mhz: delta,
        n_qubits,
        residual,
        points_used: pts.len(),
    })
}

/// `Δf = A + B·ln N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTrend<T> {
    pub coeff_a: T,
    /// Per natural-log unit.
    pub coeff_b: T,
    /// Per decade, for `A + B₁₀·log₁₀ N`.
    pub coeff_b_log10: T,
    pub fitted_points: Vec<(usize, T)>,
}

impl<T: Real> WindowTrend<T> {
    pub fn delta_f(&self, n_qubits: usize) -> T {
        self.coeff_a + self.coeff_b * T::from_usize_lossy(n_qubits).ln()
    }

    /// Fit minus data at each fitted point.
    pub fn residuals(&self) -> Vec<T> {
        self.fitted_points.iter().map(|&(n, d)| self.delta_f(n) - d).collect()
    }
}

pub fn fit_trend<T: Real>(points: &[(usize, T)]) -> Result<WindowTrend<T>> {
    if points.len() < 2 {
        return Err(invalid_input(format!("need at least 2 points, got {}", points.len())));
    }
    if points.iter().any(|&(n, d)| n == 0 || !d.is_finite()) {
        return Err(invalid_input("qubit counts must be positive and window sizes finite"));
    }
    let xs: Vec<T> = points.iter().map(|&(n, _)| T::from_usize_lossy(n).ln()).collect();
    let ys: Vec<T> = points.iter().map(|&(_, d)| d).collect();
    let (a, b) = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::SingularFit("all points share one qubit count".into()))?;
    Ok(WindowTrend {
        coeff_a: a,
        coeff_b: b,
        coeff_b_log10: b * T::lit(std::f64::consts::LN_10),
        fitted_points: points.to_vec(),
    })
}

/// σ_f at which `window_yield` equals `target_yield`, by bisection.
pub fn required_sigma<T: Real>(delta_f_mhz: T, n_qubits: usize, target_yield: T) -> Result<T> {
    if !(target_yield > T::zero() && target_yield < T::one()) {
        return Err(invalid_param(format!("target yield must lie in (0, 1), got {target_yield}")));
    }
    if !(delta_f_mhz > T::zero()) || !delta_f_mhz.is_finite() {
        return Err(invalid_param(format!("window must be positive, got {delta_f_mhz}")));
    }
    if n_qubits == 0 {
        return Err(invalid_param("qubit count must be at least 1"));
    }
    let mut lo = T::zero();
    let mut hi = delta_f_mhz;
    while window_yield(delta_f_mhz, hi, n_qubits) > target_yield {
        lo = hi;
        hi = hi + hi;
        if !hi.is_finite() {
            return Err(invalid_param("target yield unreachable"));
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if window_yield(delta_f_mhz, mid, n_qubits) > target_yield {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}
