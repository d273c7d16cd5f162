//! Closed-form finite-blocklength primitives for the real AWGN channel with
//! i.i.d. Gaussian input.
//!
//! All rates are in bits per channel use and all dispersions in bits² per
//! channel use. Nothing here clamps: a negative normal-approximation rate is
//! returned as-is so that callers can tell an infeasible operating point from
//! a zero-rate one.

use std::f64::consts::{FRAC_1_SQRT_2, LOG2_E, PI};

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

/// (log₂ e)², the high-SNR limit of the Gaussian dispersion.
pub const LOG2_E_SQUARED: f64 = LOG2_E * LOG2_E;

/// Linear-scale signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Snr(f64);

impl Snr {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::domain("snr", value, "must be finite"));
        }
        if value < 0.0 {
            return Err(Error::domain("snr", value, "must be >= 0"));
        }
        Ok(Snr(value))
    }

    /// Converts a decibel figure to a linear SNR.
    pub fn from_db(db: f64) -> Result<Self> {
        Snr::new(10f64.powf(db / 10.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Snr {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Snr::new(value)
    }
}

impl From<Snr> for f64 {
    fn from(s: Snr) -> f64 {
        s.0
    }
}

/// A probability strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(Error::domain("probability", value, "must lie in (0, 1)"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// C(x) = ½·log₂(1 + x).
pub fn gaussian_capacity(snr: Snr) -> f64 {
    0.5 * snr.0.ln_1p() * LOG2_E
}

/// V_G(x) = (log₂ e)²·x/(1 + x), the dispersion induced by i.i.d. Gaussian input.
pub fn gaussian_dispersion(snr: Snr) -> f64 {
    LOG2_E_SQUARED * snr.0 / (1.0 + snr.0)
}

/// Standard-normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper-tail probability Q(x) = Pr(N(0,1) > x).
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`q_func`] on (0, 1).
///
/// A rational initial guess (Acklam) is polished with Halley steps against
/// the erfc-based Q; if the iteration misbehaves a bracketing bisection
/// takes over.
pub fn q_inv(p: Probability) -> f64 {
    let p = p.0;
    if p == 0.5 {
        return 0.0;
    }
    // Work in the lower tail of Φ so the guess is accurate where it matters:
    // Q⁻¹(p) = −Φ⁻¹(p).
    let mut x = acklam_phi_inv(p);
    let mut converged = false;
    for _ in 0..10 {
        let e = q_func(-x) - p;
        let u = e / normal_pdf(x);
        let step = u / (1.0 + 0.5 * x * u);
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged || !x.is_finite() {
        x = -bisect_q_inv(p);
    }
    -x
}

fn bisect_q_inv(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // Q is decreasing.
        if q_func(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn acklam_phi_inv(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Normal approximation of the maximal P2P rate at blocklength `n`:
/// C(snr) − sqrt(V_G(snr)/n)·Q⁻¹(eps). The O(log n / n) term is dropped.
pub fn normal_approx_rate(n: u64, snr: Snr, eps: Probability) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, "blocklength must be >= 1"));
    }
    let rate = gaussian_capacity(snr) - (gaussian_dispersion(snr) / n as f64).sqrt() * q_inv(eps);
    if rate.is_finite() {
        Ok(rate)
    } else {
        Err(Error::Numeric(format!("non-finite rate for n={n}")))
    }
}
