//! Exact samplers for the `alpha/2`-stable subordinator `S_t` and for the
//! subordinated Brownian increments `W_{S_t}`.
//!
//! The subordinator is normalised by `E exp(-g S_t) = exp(-t g^(alpha/2))`.
//! Unit-time variates use Kanter's representation of the one-sided stable law
//! with index `a = alpha/2`:
//!
//! ```text
//! S_1 = sin(a U) / sin(U)^(1/a) * (sin((1-a) U) / E)^((1-a)/a),
//! U ~ Uniform(0, pi),  E ~ Exp(1),
//! ```
//!
//! and `S_t` is `t^(2/alpha) S_1` by self-similarity. An increment of the
//! driving noise over a step of length `dt` is `sqrt(S_dt) G` with `G`
//! standard Gaussian in `R^d`, whose characteristic function is
//! `exp(-dt (|xi|^2/2)^(alpha/2))`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::params::StableParams;

/// Uniform variate in the open interval (0, 1).
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// One draw of `S_1` for the one-sided stable law of index `a` in `(0, 1)`.
#[inline]
pub fn kanter_unit<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = PI * open_unit(rng);
    let e: f64 = Exp1.sample(rng);
    let head = (a * u).sin() / u.sin().powf(1.0 / a);
    let tail = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
    head * tail
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        invalid(format!("time step must be positive and finite, got {dt}"))
    }
}

/// Pre-validated sampler; the hot loops of the experiments go through this.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSampler {
    params: StableParams,
    index: f64,
}

impl NoiseSampler {
    pub fn new(params: StableParams) -> Self {
        Self {
            params,
            index: params.subordinator_index(),
        }
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    /// `S_dt`, assuming `dt > 0`.
    #[inline]
    pub fn subordinator<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        dt.powf(1.0 / self.index) * kanter_unit(self.index, rng)
    }

    /// Writes `W_{S_dt}` into `out` (length `dim`).
    #[inline]
    pub fn increment_into<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        let scale = self.subordinator(dt, rng).sqrt();
        for o in out.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *o = scale * g;
        }
    }
}

pub fn sample_subordinator_increment<R: Rng + ?Sized>(
    params: &StableParams,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    check_dt(dt)?;
    Ok(NoiseSampler::new(*params).subordinator(dt, rng))
}

pub fn sample_stable_increment<R: Rng + ?Sized>(
    params: &StableParams,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dt(dt)?;
    let mut out = vec![0.0; params.dim()];
    NoiseSampler::new(*params).increment_into(dt, rng, &mut out);
    Ok(out)
}

/// A sequence of i.i.d. noise increments of equal span, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    dim: usize,
    dt: f64,
    data: Vec<f64>,
}

impl NoisePath {
    pub fn from_flat(dim: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return invalid("flat increment buffer is not a whole number of vectors");
        }
        Ok(Self { dim, dt, data })
    }

    pub fn zeros(dim: usize, dt: f64, n_steps: usize) -> Self {
        Self {
            dim,
            dt,
            data: vec![0.0; dim * n_steps],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn increment(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Increments of span `block * dt`: each is the left-to-right sum of
    /// `block` consecutive increments. Every caller that needs coarse noise
    /// goes through here so the floating-point summation order is fixed.
    pub fn block_sums(&self, block: usize) -> Result<NoisePath> {
        if block == 0 || !self.len().is_multiple_of(block) {
            return invalid(format!(
                "{} increments cannot be grouped in blocks of {block}",
                self.len()
            ));
        }
        let n = self.len() / block;
        let mut data = vec![0.0; n * self.dim];
        for k in 0..n {
            let out = &mut data[k * self.dim..(k + 1) * self.dim];
            for i in 0..block {
                for (o, v) in out.iter_mut().zip(self.increment(k * block + i)) {
                    *o += v;
                }
            }
        }
        Ok(NoisePath {
            dim: self.dim,
            dt: self.dt * block as f64,
            data,
        })
    }

    /// Tail of the path starting at increment `k`.
    pub fn tail(&self, k: usize) -> NoisePath {
        NoisePath {
            dim: self.dim,
            dt: self.dt,
            data: self.data[k * self.dim..].to_vec(),
        }
    }
}

pub fn sample_noise_path<R: Rng + ?Sized>(
    params: &StableParams,
    dt_fine: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<NoisePath> {
    check_dt(dt_fine)?;
    if n_steps == 0 {
        return invalid("a noise path needs at least one step");
    }
    let sampler = NoiseSampler::new(*params);
    let dim = params.dim();
    let mut data = vec![0.0; dim * n_steps];
    for chunk in data.chunks_mut(dim) {
        sampler.increment_into(dt_fine, rng, chunk);
    }
    Ok(NoisePath {
        dim,
        dt: dt_fine,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::stats::{ks_two_sample, median};

    fn p15() -> StableParams {
        StableParams::new(1.5, 1).unwrap()
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let mut g = RngStream::new(1, 0).generator();
        assert!(sample_subordinator_increment(&p15(), 0.0, &mut g).is_err());
        assert!(sample_subordinator_increment(&p15(), -1.0, &mut g).is_err());
        assert!(sample_stable_increment(&p15(), f64::NAN, &mut g).is_err());
        assert!(sample_noise_path(&p15(), 0.1, 0, &mut g).is_err());
    }

    #[test]
    fn subordinator_is_positive() {
        let mut g = RngStream::new(2, 0).generator();
        for _ in 0..10_000 {
            let s = sample_subordinator_increment(&p15(), 0.3, &mut g).unwrap();
            assert!(s > 0.0 && s.is_finite());
        }
    }

    #[test]
    fn median_scales_with_dt() {
        let n = 40_000;
        let dt = 1e-3;
        let mut g = RngStream::new(3, 0).generator();
        let a: Vec<f64> = (0..n)
            .map(|_| sample_subordinator_increment(&p15(), dt, &mut g).unwrap())
            .collect();
        let mut g = RngStream::new(3, 1).generator();
        let b: Vec<f64> = (0..n)
            .map(|_| sample_subordinator_increment(&p15(), 1.0, &mut g).unwrap())
            .collect();
        let ratio = median(&a) / (dt.powf(2.0 / 1.5) * median(&b));
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
        assert!(median(&a) < 1e-3);
    }

    #[test]
    fn single_step_path_equals_single_increment() {
        let p = StableParams::new(1.5, 3).unwrap();
        let s = RngStream::new(9, 4);
        let path = sample_noise_path(&p, 0.25, 1, &mut s.generator()).unwrap();
        let inc = sample_stable_increment(&p, 0.25, &mut s.generator()).unwrap();
        assert_eq!(path.increment(0), inc.as_slice());
    }

    #[test]
    fn paths_are_reproducible() {
        let p = StableParams::new(1.7, 2).unwrap();
        let s = RngStream::new(11, 5);
        let a = sample_noise_path(&p, 0.01, 100, &mut s.generator()).unwrap();
        let b = sample_noise_path(&p, 0.01, 100, &mut s.generator()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn block_sums_match_one_long_increment_in_law() {
        let p = p15();
        let n = 20_000;
        let mut summed = Vec::with_capacity(n);
        let mut single = Vec::with_capacity(n);
        for i in 0..n as u64 {
            let path = sample_noise_path(&p, 0.1, 4, &mut RngStream::new(21, i).generator())
                .unwrap();
            summed.push(path.block_sums(4).unwrap().increment(0)[0]);
            let mut g = RngStream::new(22, i).generator();
            single.push(sample_stable_increment(&p, 0.4, &mut g).unwrap()[0]);
        }
        assert!(ks_two_sample(&summed, &single).p_value > 0.01);
    }

    #[test]
    fn block_sums_reject_ragged_blocks() {
        let path = NoisePath::zeros(1, 0.1, 6);
        assert!(path.block_sums(4).is_err());
        assert_eq!(path.block_sums(3).unwrap().len(), 2);
        assert!((path.block_sums(3).unwrap().dt() - 0.3).abs() < 1e-15);
    }
}
