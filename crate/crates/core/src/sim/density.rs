//! Per-symbol information density of the Gaussian channel y = √ω·x + z̃.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::{derive_key, stream_rng};
use crate::error::{Error, Result};
use crate::fbl::{gaussian_capacity, Snr};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Precomputed coefficients of U_j for one (ω, P).
#[derive(Debug, Clone, Copy)]
pub(crate) struct DensityKernel {
    capacity: f64,
    sqrt_omega: f64,
    quad: f64,
    cross: f64,
    p: f64,
}

impl DensityKernel {
    pub(crate) fn new(omega: f64, p: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::domain("omega", omega, "must be > 0"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::domain("power", p, "must be > 0"));
        }
        let s = omega * p;
        Ok(DensityKernel {
            capacity: gaussian_capacity(Snr::new(s)?),
            sqrt_omega: omega.sqrt(),
            quad: LOG2_E * omega / (2.0 * (1.0 + s)),
            cross: LOG2_E * omega.sqrt() / (1.0 + s),
            p,
        })
    }

    #[inline]
    pub(crate) fn symbol(&self, x: f64, y: f64) -> f64 {
        let z = y - self.sqrt_omega * x;
        self.capacity + self.quad * (x * x - self.p * z * z) + self.cross * x * z
    }

    /// Σ U_j over `x`, `y`, where `y_j` is scaled by `y_scale` first.
    #[inline]
    pub(crate) fn sum_scaled(&self, x: &[f64], y: &[f64], y_scale: f64) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.symbol(a, b * y_scale)).sum()
    }
}

/// Σ_j U_j in bits, with U_j the information density of symbol j for the
/// channel y = √ω·x + z̃, z̃ ~ N(0, 1), and i.i.d. N(0, p) inputs.
pub fn information_density(x: &[f64], y: &[f64], omega: f64, p: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "x and y lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    Ok(DensityKernel::new(omega, p)?.sum_scaled(x, y, 1.0))
}

/// Lower bound (log e·ωP / (√2(1+ωP)))² on the per-symbol variance of U_j.
pub fn density_variance_lower_bound(omega: f64, p: f64) -> f64 {
    let s = omega * p;
    (LOG2_E * s / (std::f64::consts::SQRT_2 * (1.0 + s))).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMoments {
    pub draws: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
}

/// Sample moments of U_j at the true input over `draws` independent symbols
/// with x ~ N(0, p), z̃ ~ N(0, 1).
pub fn density_moments(omega: f64, p: f64, draws: u64, seed: u64) -> Result<DensityMoments> {
    if draws < 2 {
        return Err(Error::Argument("need at least 2 draws".into()));
    }
    let k = DensityKernel::new(omega, p)?;
    let mut rng = stream_rng(derive_key(seed, None), 0, 0);
    let sp = p.sqrt();
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..draws {
        let g: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = sp * g;
        let u = k.symbol(x, k.sqrt_omega * x + z);
        let d = u - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (u - mean);
    }
    let variance = m2 / (draws - 1) as f64;
    Ok(DensityMoments {
        draws,
        mean,
        variance,
        std_error: (variance / draws as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_input_zero_noise() {
        let x = vec![0.0; 7];
        let y = vec![0.0; 7];
        let got = information_density(&x, &y, 3.0, 10.0).unwrap();
        assert_relative_eq!(got, 7.0 * gaussian_capacity(Snr::new(30.0).unwrap()), max_relative = 1e-14);
    }

    #[test]
    fn matches_log_likelihood_ratio() {
        // log₂ p(y|x)/p(y) with p(y|x) = N(√ω x, 1), p(y) = N(0, 1+ωP).
        let (omega, p) = (0.7_f64, 4.0);
        let x = [1.3, -0.4, 2.2];
        let y = [0.9, 0.1, -1.0];
        let mut llr = 0.0;
        for (&a, &b) in x.iter().zip(&y) {
            let v = 1.0 + omega * p;
            let num = -(b - omega.sqrt() * a).powi(2) / 2.0;
            let den = -0.5 * v.ln() - b * b / (2.0 * v);
            llr += (num - den) / std::f64::consts::LN_2;
        }
        assert_relative_eq!(information_density(&x, &y, omega, p).unwrap(), llr, max_relative = 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(information_density(&[1.0], &[1.0, 2.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn monte_carlo_mean_and_variance() {
        let (omega, p) = (0.5, 4.0);
        let m = density_moments(omega, p, 100_000, 17).unwrap();
        let c = gaussian_capacity(Snr::new(omega * p).unwrap());
        assert!((m.mean - c).abs() <= 3.0 * m.std_error, "{m:?} vs {c}");
        assert!(m.variance >= density_variance_lower_bound(omega, p));
        // The exact variance for i.i.d. Gaussian inputs is log²e·s/(1+s).
        let exact = crate::fbl::gaussian_dispersion(Snr::new(omega * p).unwrap());
        assert!((m.variance - exact).abs() < 0.03 * exact);
    }
}
