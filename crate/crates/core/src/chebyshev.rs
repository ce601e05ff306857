//! Dolph–Chebyshev uniform linear array baseline.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;

fn check(n: usize, sll_db: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("Chebyshev array needs at least 2 elements, got {n}")));
    }
    if !(sll_db < 0.0) {
        return Err(Error::InvalidInput(format!("sidelobe level {sll_db} dB must be negative")));
    }
    let r = 10f64.powf(-sll_db / 20.0);
    Ok((r.acosh() / (n - 1) as f64).cosh())
}

/// `T_m(x)` for any real `x`.
pub fn chebyshev_t(m: usize, x: f64) -> f64 {
    let m_f = m as f64;
    if x.abs() <= 1.0 {
        (m_f * x.acos()).cos()
    } else if x > 1.0 {
        (m_f * x.acosh()).cosh()
    } else {
        let s = if m % 2 == 0 { 1.0 } else { -1.0 };
        s * (m_f * (-x).acosh()).cosh()
    }
}

/// Real, symmetric Dolph–Chebyshev weights with peak weight 1.
pub fn weights(n: usize, sll_db: f64) -> Result<Vec<f64>> {
    let x0 = check(n, sll_db)?;
    let nf = n as f64;
    // AF(ψ) = Σ w_k e^{jkψ} = e^{jψ(n−1)/2} T_{n−1}(x0 cos(ψ/2)), sampled at ψ_m = 2πm/n.
    let samples: Vec<C64> = (0..n)
        .map(|m| {
            let psi = 2.0 * PI * m as f64 / nf;
            C64::from_polar(1.0, psi * (nf - 1.0) / 2.0) * chebyshev_t(n - 1, x0 * (psi / 2.0).cos())
        })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|k| {
            samples
                .iter()
                .enumerate()
                .map(|(m, a)| a * C64::from_polar(1.0, -2.0 * PI * (k * m) as f64 / nf))
                .sum::<C64>()
                .re
                / nf
        })
        .collect();
    let peak = w.iter().cloned().fold(0.0, f64::max);
    Ok(w.iter().map(|v| v / peak).collect())
}

/// Weights steered to `theta0_deg` for spacing `d` (wavelengths).
pub fn steered_weights(n: usize, sll_db: f64, d: f64, theta0_deg: f64) -> Result<Vec<C64>> {
    let u0 = theta0_deg.to_radians().sin();
    Ok(weights(n, sll_db)?
        .into_iter()
        .enumerate()
        .map(|(k, w)| C64::from_polar(w, -2.0 * PI * d * k as f64 * u0))
        .collect())
}

pub fn array_factor(w: &[C64], d: f64, theta_deg: f64) -> C64 {
    let u = theta_deg.to_radians().sin();
    w.iter()
        .enumerate()
        .map(|(k, wk)| wk * C64::from_polar(1.0, 2.0 * PI * d * k as f64 * u))
        .sum()
}

/// Half width in `u = sin θ` from the beam peak to the first null.
pub fn null_to_null_half_width_u(n: usize, sll_db: f64, d: f64) -> Result<f64> {
    let x0 = check(n, sll_db)?;
    let edge = (PI / (2.0 * (n - 1) as f64)).cos();
    let psi = 2.0 * (edge / x0).acos();
    Ok(psi / (2.0 * PI * d))
}

/// Peak sidelobe level (dB below the main beam) of `w` over
/// `θ ∈ [−90°, 90°]` sampled every `step_deg`. The main lobe is the region
/// around the global peak bounded by the first local minima.
pub fn measured_sidelobe_db(w: &[C64], d: f64, step_deg: f64) -> f64 {
    let n = (180.0 / step_deg).round() as usize;
    let mag: Vec<f64> = (0..=n)
        .map(|i| array_factor(w, d, -90.0 + i as f64 * step_deg).norm())
        .collect();
    let (peak_i, peak) = mag
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut lo = peak_i;
    while lo > 0 && mag[lo - 1] <= mag[lo] {
        lo -= 1;
    }
    let mut hi = peak_i;
    while hi < n && mag[hi + 1] <= mag[hi] {
        hi += 1;
    }
    let side = mag[..lo]
        .iter()
        .chain(mag[hi + 1..].iter())
        .cloned()
        .fold(0.0, f64::max);
    20.0 * (side / peak).log10()
}
