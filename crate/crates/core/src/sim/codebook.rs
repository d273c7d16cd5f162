//! I.i.d. Gaussian codebooks, eager and lazily generated.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::{derive_key, stream_rng};
use crate::error::{Error, Result};

/// Largest codebook the simulator will index.
pub const MAX_CODEBOOK_SIZE: u64 = 1 << 24;

/// Read access to codewords by zero-based index.
pub trait Codewords {
    fn size(&self) -> usize;
    fn blocklength(&self) -> usize;
    fn power_limit(&self) -> f64;
    fn codeword(&mut self, index: usize) -> &[f64];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub entries: Vec<Vec<f64>>,
    pub power_limit: f64,
    /// `true` where ‖x‖² > nP.
    pub violation_flags: Vec<bool>,
}

impl Codebook {
    pub fn violation_rate(&self) -> f64 {
        let v = self.violation_flags.iter().filter(|&&f| f).count();
        v as f64 / self.violation_flags.len() as f64
    }
}

impl Codewords for Codebook {
    fn size(&self) -> usize {
        self.entries.len()
    }
    fn blocklength(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }
    fn power_limit(&self) -> f64 {
        self.power_limit
    }
    fn codeword(&mut self, index: usize) -> &[f64] {
        &self.entries[index]
    }
}

pub fn violates_power(x: &[f64], p: f64) -> bool {
    x.iter().map(|v| v * v).sum::<f64>() > x.len() as f64 * p
}

fn draw_codeword(key: [u8; 32], role: u64, index: usize, n: usize, p: f64) -> Vec<f64> {
    let mut rng = stream_rng(key, role, index as u64);
    let s = p.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        })
        .collect()
}

fn check_shape(m: u64, n: u64, p: f64) -> Result<()> {
    if !(2..=MAX_CODEBOOK_SIZE).contains(&m) {
        return Err(Error::Argument(format!(
            "codebook size {m} outside [2, {MAX_CODEBOOK_SIZE}]"
        )));
    }
    if n == 0 {
        return Err(Error::Argument("codeword length must be >= 1".into()));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::domain("power", p, "must be > 0"));
    }
    Ok(())
}

/// `m` codewords of length `n` with i.i.d. N(0, p) symbols.
pub fn generate_codebook(m: u64, n: u64, p: f64, seed: u64) -> Result<Codebook> {
    check_shape(m, n, p)?;
    let key = derive_key(seed, None);
    let entries: Vec<Vec<f64>> = (0..m as usize)
        .map(|i| draw_codeword(key, 0, i, n as usize, p))
        .collect();
    let violation_flags = entries.iter().map(|x| violates_power(x, p)).collect();
    Ok(Codebook {
        entries,
        power_limit: p,
        violation_flags,
    })
}

/// Codebook whose codewords are drawn the first time they are read.
#[derive(Debug, Clone)]
pub struct LazyCodebook {
    key: [u8; 32],
    role: u64,
    n: usize,
    p: f64,
    cache: Vec<Option<Box<[f64]>>>,
}

impl LazyCodebook {
    pub fn new(key: [u8; 32], role: u64, m: u64, n: u64, p: f64) -> Result<Self> {
        check_shape(m, n, p)?;
        Ok(LazyCodebook {
            key,
            role,
            n: n as usize,
            p,
            cache: vec![None; m as usize],
        })
    }

    /// Number of codewords drawn so far.
    pub fn materialized(&self) -> usize {
        self.cache.iter().filter(|c| c.is_some()).count()
    }
}

impl Codewords for LazyCodebook {
    fn size(&self) -> usize {
        self.cache.len()
    }
    fn blocklength(&self) -> usize {
        self.n
    }
    fn power_limit(&self) -> f64 {
        self.p
    }
    fn codeword(&mut self, index: usize) -> &[f64] {
        let (key, role, n, p) = (self.key, self.role, self.n, self.p);
        self.cache[index].get_or_insert_with(|| draw_codeword(key, role, index, n, p).into_boxed_slice())
    }
}
