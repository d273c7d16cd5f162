//! Two-step SIC threshold decoders.
//!
//! Each step scans codewords from index 0 upward and returns the first one
//! whose information density exceeds log₂ M; `None` means no codeword crossed.
//! The metric at a step treats everything not yet decoded as Gaussian noise,
//! so the received samples are rescaled to the equivalent unit-noise channel
//! y/√(1+P) = √ω·x + z̃ before the density is evaluated.

use super::codebook::Codewords;
use super::density::DensityKernel;
use crate::error::{Error, Result};
use crate::model::ChannelParams;

/// How much of y₂ the first SIC step at user 2 may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step1Window {
    /// Early decoding from the first ñ₁ symbols.
    Early(usize),
    /// Wait for the whole n₁-symbol codeword of user 1.
    Full,
}

fn first_crossing<C: Codewords>(cb: &mut C, threshold: f64, mut density: impl FnMut(&[f64]) -> f64) -> Option<usize> {
    (0..cb.size()).find(|&i| density(cb.codeword(i)) > threshold)
}

/// Decodes (m̂₁, m̂₂) at the stronger user with early decoding over the first
/// `n1_tilde` symbols. `y2` needs at least n₂ samples.
pub fn sic_decode_user2<C1: Codewords, C2: Codewords>(
    y2: &[f64],
    cb1: &mut C1,
    cb2: &mut C2,
    params: &ChannelParams,
    n1_tilde: usize,
    log_m1: f64,
    log_m2: f64,
) -> Result<(Option<usize>, Option<usize>)> {
    sic_decode_user2_window(y2, cb1, cb2, params, Step1Window::Early(n1_tilde), log_m1, log_m2)
}

pub fn sic_decode_user2_window<C1: Codewords, C2: Codewords>(
    y2: &[f64],
    cb1: &mut C1,
    cb2: &mut C2,
    params: &ChannelParams,
    window: Step1Window,
    log_m1: f64,
    log_m2: f64,
) -> Result<(Option<usize>, Option<usize>)> {
    let n1 = cb1.blocklength();
    let n2 = cb2.blocklength();
    if n2 > n1 {
        return Err(Error::Argument(format!("n2 = {n2} exceeds n1 = {n1}")));
    }
    let needed = match window {
        Step1Window::Early(t) => {
            if t == 0 || t > n2 {
                return Err(Error::Argument(format!("n1_tilde = {t} must lie in [1, n2 = {n2}]")));
            }
            n2
        }
        Step1Window::Full => n1,
    };
    if y2.len() < needed {
        return Err(Error::Argument(format!("y2 has {} samples, need {needed}", y2.len())));
    }

    // Step 1: user 1's message, with X₂ + Z₂ as noise of variance 1 + P₂.
    let scale = 1.0 / (1.0 + params.p2).sqrt();
    let shared = DensityKernel::new(params.omega2(), params.p1)?;
    let m1_hat = match window {
        Step1Window::Early(t) => first_crossing(cb1, log_m1, |x| shared.sum_scaled(&x[..t], &y2[..t], scale)),
        Step1Window::Full => {
            // Past n₂ only user 1 is on the air.
            let tail = DensityKernel::new(params.a21, params.p1)?;
            first_crossing(cb1, log_m1, |x| {
                shared.sum_scaled(&x[..n2], &y2[..n2], scale) + tail.sum_scaled(&x[n2..n1], &y2[n2..n1], 1.0)
            })
        }
    };
    let Some(m1_hat) = m1_hat else {
        return Ok((None, None));
    };

    // Step 2: cancel √a₂₁·x₁(m̂₁) and decode user 2 on its own link.
    let g = params.a21.sqrt();
    let x1 = cb1.codeword(m1_hat);
    let residual: Vec<f64> = y2[..n2].iter().zip(&x1[..n2]).map(|(y, x)| y - g * x).collect();
    let direct = DensityKernel::new(1.0, params.p2)?;
    let m2_hat = first_crossing(cb2, log_m2, |x| direct.sum_scaled(x, &residual, 1.0));
    Ok((Some(m1_hat), m2_hat))
}

/// Decodes (m̂₁, m̂₂) at the weaker user: m₂ first over the n₂ symbols where
/// X₂ is present, then m₁ over all n₁ symbols after cancellation.
pub fn sic_decode_user1<C1: Codewords, C2: Codewords>(
    y1: &[f64],
    cb1: &mut C1,
    cb2: &mut C2,
    params: &ChannelParams,
    log_m1: f64,
    log_m2: f64,
) -> Result<(Option<usize>, Option<usize>)> {
    let n1 = cb1.blocklength();
    let n2 = cb2.blocklength();
    if n2 > n1 {
        return Err(Error::Argument(format!("n2 = {n2} exceeds n1 = {n1}")));
    }
    if y1.len() != n1 {
        return Err(Error::Argument(format!("y1 has {} samples, expected n1 = {n1}", y1.len())));
    }

    let scale = 1.0 / (1.0 + params.p1).sqrt();
    let shared = DensityKernel::new(params.omega1(), params.p2)?;
    let Some(m2_hat) = first_crossing(cb2, log_m2, |x| shared.sum_scaled(x, &y1[..n2], scale)) else {
        return Ok((None, None));
    };

    let g = params.a12.sqrt();
    let x2 = cb2.codeword(m2_hat);
    let mut residual = y1.to_vec();
    for (r, x) in residual.iter_mut().zip(x2) {
        *r -= g * x;
    }
    let direct = DensityKernel::new(1.0, params.p1)?;
    let m1_hat = first_crossing(cb1, log_m1, |x| direct.sum_scaled(x, &residual, 1.0));
    Ok((m1_hat, Some(m2_hat)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::transmit;
    use crate::sim::codebook::{generate_codebook, Codebook};

    fn params() -> ChannelParams {
        ChannelParams::new(11.0, 35.0, 10.0, 10.0)
    }

    fn antipodal(n: usize, p: f64) -> Codebook {
        let a = p.sqrt();
        Codebook {
            entries: vec![vec![a; n], vec![-a; n]],
            power_limit: p,
            violation_flags: vec![false, false],
        }
    }

    #[test]
    fn noiseless_recovery() {
        let p = params();
        let (n1, n2) = (40, 30);
        for (m1, m2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let mut cb1 = antipodal(n1, p.p1);
            let mut cb2 = antipodal(n2, p.p2);
            let x1 = cb1.entries[m1].clone();
            let x2 = cb2.entries[m2].clone();
            let zero = vec![0.0; n1];
            let (y1, y2) = transmit(&p, &x1, &x2, &zero, &zero).unwrap();
            let at2 = sic_decode_user2(&y2, &mut cb1, &mut cb2, &p, 20, 1.0, 1.0).unwrap();
            assert_eq!(at2, (Some(m1), Some(m2)));
            let full = sic_decode_user2_window(&y2, &mut cb1, &mut cb2, &p, Step1Window::Full, 1.0, 1.0).unwrap();
            assert_eq!(full, (Some(m1), Some(m2)));
            let at1 = sic_decode_user1(&y1, &mut cb1, &mut cb2, &p, 1.0, 1.0).unwrap();
            assert_eq!(at1, (Some(m1), Some(m2)));
        }
    }

    #[test]
    fn smallest_index_wins() {
        let p = params();
        let n = 30;
        // Two identical codewords: both cross, index 0 is reported.
        let a = p.p1.sqrt();
        let mut cb1 = Codebook {
            entries: vec![vec![a; n], vec![a; n]],
            power_limit: p.p1,
            violation_flags: vec![false; 2],
        };
        let mut cb2 = antipodal(n, p.p2);
        let x1 = cb1.entries[0].clone();
        let x2 = cb2.entries[1].clone();
        let zero = vec![0.0; n];
        let (_, y2) = transmit(&p, &x1, &x2, &zero, &zero).unwrap();
        let (m1, _) = sic_decode_user2(&y2, &mut cb1, &mut cb2, &p, n, 1.0, 1.0).unwrap();
        assert_eq!(m1, Some(0));
    }

    #[test]
    fn no_crossing_is_sentinel() {
        let p = params();
        let mut cb1 = generate_codebook(4, 20, p.p1, 1).unwrap();
        let mut cb2 = generate_codebook(4, 10, p.p2, 2).unwrap();
        let y2 = vec![0.0; 20];
        let out = sic_decode_user2(&y2, &mut cb1, &mut cb2, &p, 10, 1e6, 2.0).unwrap();
        assert_eq!(out, (None, None));
        let out = sic_decode_user1(&y2, &mut cb1, &mut cb2, &p, 2.0, 1e6).unwrap();
        assert_eq!(out, (None, None));
    }

    #[test]
    fn user1_ignores_x2_after_n2() {
        let p = params();
        let (n1, n2) = (24, 16);
        let mut cb1 = generate_codebook(8, n1 as u64, p.p1, 3).unwrap();
        let mut cb2 = generate_codebook(8, n2 as u64, p.p2, 4).unwrap();
        let x1 = cb1.entries[5].clone();
        let x2 = cb2.entries[2].clone();
        let z: Vec<f64> = (0..n1).map(|j| 0.3 * ((j as f64) * 1.7).sin()).collect();
        let (y1, _) = transmit(&p, &x1, &x2, &z, &z).unwrap();
        let base = sic_decode_user1(&y1, &mut cb1, &mut cb2, &p, 3.0, 3.0).unwrap();
        for j in n2..n1 {
            assert_eq!(y1[j], x1[j] + z[j]);
        }
        assert_eq!(base, (Some(5), Some(2)));
    }

    #[test]
    fn argument_checks() {
        let p = params();
        let mut cb1 = generate_codebook(2, 10, p.p1, 1).unwrap();
        let mut cb2 = generate_codebook(2, 8, p.p2, 2).unwrap();
        let y = vec![0.0; 10];
        assert!(sic_decode_user2(&y, &mut cb1, &mut cb2, &p, 9, 1.0, 1.0).is_err());
        assert!(sic_decode_user2(&y, &mut cb1, &mut cb2, &p, 0, 1.0, 1.0).is_err());
        assert!(sic_decode_user2(&y[..7], &mut cb1, &mut cb2, &p, 5, 1.0, 1.0).is_err());
        assert!(sic_decode_user1(&y[..9], &mut cb1, &mut cb2, &p, 1.0, 1.0).is_err());
    }
}
