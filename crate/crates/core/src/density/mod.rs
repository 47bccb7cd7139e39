//! Heat kernel `p(t, x)` of the subordinated noise `W_{S_t}`.
//!
//! In one dimension the kernel is computed by Fourier inversion,
//!
//! ```text
//! p(t, x) = (1/pi) * Integral_0^inf cos(x r) exp(-t 2^(-alpha/2) r^alpha) dr,
//! ```
//!
//! which agrees with the subordination formula
//! `p(t, x) = E[(2 pi S_t)^(-d/2) exp(-|x|^2 / (2 S_t))]` used by the Monte
//! Carlo estimators in any dimension. The subordinator density itself is never
//! evaluated.

mod bounds;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

pub use bounds::{check_kernel_bounds, BoundGrid, BoundReport, KernelBound};

use crate::error::{invalid, Error, Result};
use crate::levy::NoiseSampler;
use crate::params::StableParams;
use crate::quad;
use crate::rng::{par_samples, RngStream};
use crate::stats::{ratio_estimate, MeanEstimate};

/// Exponent `s r^alpha` at which the Fourier integrand is cut off.
const FOURIER_CUTOFF: f64 = 40.0;
const QUAD_TOL: f64 = 1e-12;

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        invalid(format!("time must be positive and finite, got {t}"))
    }
}

/// Splits `[0, r_max]` into panels no longer than half an oscillation of
/// `cos(x r)` and integrates each adaptively.
fn fourier_integral(params: &StableParams, t: f64, x: f64, derivative: bool) -> Result<f64> {
    let alpha = params.alpha();
    let s = t * params.exponent_scale();
    let r_max = (FOURIER_CUTOFF / s).powf(1.0 / alpha);
    let ax = x.abs();
    let n_panels = if ax * r_max > std::f64::consts::PI {
        (ax * r_max / std::f64::consts::PI).ceil() as usize
    } else {
        4
    };
    let width = r_max / n_panels as f64;
    let tol = QUAD_TOL / n_panels as f64;
    let mut total = 0.0;
    for k in 0..n_panels {
        let a = k as f64 * width;
        let b = a + width;
        let r = if derivative {
            quad::integrate(
                |r: f64| -r * (x * r).sin() * (-s * r.powf(alpha)).exp(),
                a,
                b,
                tol * r_max,
                200,
            )
        } else {
            quad::integrate(
                |r: f64| (x * r).cos() * (-s * r.powf(alpha)).exp(),
                a,
                b,
                tol,
                200,
            )
        };
        match r {
            Ok(v) => total += v.value,
            Err(Error::Quadrature {
                error_estimate,
                evaluations,
                ..
            }) => {
                return Err(Error::Quadrature {
                    what: format!("p(t={t}, x={x}) for alpha={alpha}"),
                    error_estimate,
                    evaluations,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(total / std::f64::consts::PI)
}

/// `p(t, x)` in one dimension by Fourier inversion.
pub fn density_1d(params: &StableParams, t: f64, x: f64) -> Result<f64> {
    params.require_dim(1)?;
    check_t(t)?;
    fourier_integral(params, t, x, false)
}

/// `d/dx p(t, x)` in one dimension.
pub fn density_1d_dx(params: &StableParams, t: f64, x: f64) -> Result<f64> {
    params.require_dim(1)?;
    check_t(t)?;
    fourier_integral(params, t, x, true)
}

/// `p(t, 0) = Gamma(1 + 1/alpha) / (pi * (t 2^(-alpha/2))^(1/alpha))`, the mode of the 1-d kernel.
pub fn density_1d_at_origin(params: &StableParams, t: f64) -> f64 {
    let s = t * params.exponent_scale();
    gamma(1.0 + 1.0 / params.alpha()) * s.powf(-1.0 / params.alpha()) / std::f64::consts::PI
}

/// Large-`|x|` expansion of the 1-d kernel,
/// `(1/pi) sum_k (-1)^(k+1) Gamma(k alpha + 1)/k! sin(k pi alpha / 2) c^k |x|^(-k alpha - 1)`
/// with `c = t 2^(-alpha/2)`.
pub fn density_1d_tail(params: &StableParams, t: f64, x: f64, terms: usize) -> f64 {
    let alpha = params.alpha();
    let c = t * params.exponent_scale();
    let ax = x.abs();
    let mut sum = 0.0;
    let mut k_fact = 1.0;
    for k in 1..=terms {
        let kf = k as f64;
        k_fact *= kf;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * gamma(kf * alpha + 1.0) / k_fact
            * (kf * std::f64::consts::PI * alpha / 2.0).sin()
            * c.powf(kf)
            * ax.powf(-kf * alpha - 1.0);
    }
    sum / std::f64::consts::PI
}

/// Tabulated unit-time kernel `g(u) = p(1, u)` with cubic Hermite
/// interpolation, switching to the tail expansion beyond the table. Evaluates
/// `p(t, y) = t^(-1/alpha) g(|y| t^(-1/alpha))` in constant time.
#[derive(Debug, Clone)]
pub struct DensityTable {
    params: StableParams,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Coefficients of `u^(-k alpha - 1)` in the unit-time tail expansion.
    tail: Vec<f64>,
}

impl DensityTable {
    pub const DEFAULT_STEP: f64 = 0.01;
    pub const DEFAULT_EXTENT: f64 = 30.0;

    pub fn new(params: &StableParams) -> Result<Self> {
        Self::with_resolution(params, Self::DEFAULT_STEP, Self::DEFAULT_EXTENT)
    }

    pub fn with_resolution(params: &StableParams, step: f64, extent: f64) -> Result<Self> {
        use rayon::prelude::*;
        params.require_dim(1)?;
        if !(step > 0.0 && extent > step) {
            return invalid("table step and extent must be positive with extent > step");
        }
        let n = (extent / step).round() as usize + 1;
        let nodes: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let u = i as f64 * step;
                Ok((
                    fourier_integral(params, 1.0, u, false)?,
                    fourier_integral(params, 1.0, u, true)?,
                ))
            })
            .collect::<Result<_>>()?;
        let (values, slopes) = nodes.into_iter().unzip();
        let alpha = params.alpha();
        let c = params.exponent_scale();
        let mut k_fact = 1.0;
        let tail = (1..=16)
            .map(|k| {
                let kf = k as f64;
                k_fact *= kf;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * gamma(kf * alpha + 1.0) / k_fact
                    * (kf * std::f64::consts::PI * alpha / 2.0).sin()
                    * c.powf(kf)
                    / std::f64::consts::PI
            })
            .collect();
        Ok(Self {
            params: *params,
            step,
            values,
            slopes,
            tail,
        })
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn extent(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// `p(1, u)`.
    #[inline]
    pub fn unit(&self, u: f64) -> f64 {
        let u = u.abs();
        let pos = u / self.step;
        let i = pos as usize;
        if i + 1 >= self.values.len() {
            let r = u.powf(-self.params.alpha());
            let mut pow = r / u;
            let mut sum = 0.0;
            for c in &self.tail {
                sum += c * pow;
                pow *= r;
            }
            return sum;
        }
        let s = pos - i as f64;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i]
            + h10 * self.step * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * self.step * self.slopes[i + 1]
    }

    /// `p(t, y)`.
    #[inline]
    pub fn eval(&self, t: f64, y: f64) -> f64 {
        let scale = t.powf(-1.0 / self.params.alpha());
        scale * self.unit(y * scale)
    }
}

/// Monte Carlo estimate of `p(t, x)` from the subordination formula, valid in
/// any dimension.
pub fn density_mc(
    params: &StableParams,
    t: f64,
    x: &[f64],
    n: usize,
    rng: RngStream,
) -> Result<MeanEstimate> {
    check_t(t)?;
    if x.len() != params.dim() {
        return invalid(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            params.dim()
        ));
    }
    if n < 1000 {
        return invalid(format!("density_mc needs at least 1000 samples, got {n}"));
    }
    let sampler = NoiseSampler::new(*params);
    let half_d = 0.5 * params.dim() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let two_pi = 2.0 * std::f64::consts::PI;
    let samples = par_samples(rng, n, |g| {
        let s = sampler.subordinator(t, g);
        (two_pi * s).powf(-half_d) * (-r2 / (2.0 * s)).exp()
    });
    Ok(MeanEstimate::from_samples(&samples))
}

/// Estimates of `Theta(r)` at several arguments from one common set of `S_1` draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaCurve {
    pub arguments: Vec<f64>,
    pub estimates: Vec<MeanEstimate>,
}

impl ThetaCurve {
    /// Linear interpolation between the estimated arguments.
    pub fn value(&self, r: f64) -> f64 {
        let a = &self.arguments;
        if r <= a[0] {
            return self.estimates[0].mean;
        }
        for i in 1..a.len() {
            if r <= a[i] {
                let w = (r - a[i - 1]) / (a[i] - a[i - 1]);
                return (1.0 - w) * self.estimates[i - 1].mean + w * self.estimates[i].mean;
            }
        }
        self.estimates[a.len() - 1].mean
    }
}

/// Maximum relative standard error accepted for a Theta estimate.
pub const THETA_MAX_RELATIVE_SE: f64 = 0.1;

/// `Theta(r) = E[(2 pi S_1)^(-d/2) exp(r / (2 S_1))] / E[(2 pi S_1)^(-d/2)]`
/// for every `r` in `arguments`, all from the same draws so the curve is
/// monotone sample by sample.
pub fn theta_curve(
    arguments: &[f64],
    params: &StableParams,
    n: usize,
    rng: RngStream,
) -> Result<ThetaCurve> {
    if arguments.is_empty() || arguments.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return invalid("Theta arguments must be finite and non-negative");
    }
    if arguments.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("Theta arguments must be strictly increasing");
    }
    let sampler = NoiseSampler::new(*params);
    let draws = par_samples(rng, n, |g| sampler.subordinator(1.0, g));
    let half_d = 0.5 * params.dim() as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let base: Vec<f64> = draws.iter().map(|s| (two_pi * s).powf(-half_d)).collect();
    let mut estimates = Vec::with_capacity(arguments.len());
    for &r in arguments {
        let weighted: Vec<f64> = if r == 0.0 {
            base.clone()
        } else {
            draws
                .iter()
                .zip(&base)
                .map(|(s, w)| w * (r / (2.0 * s)).exp())
                .collect()
        };
        let est = ratio_estimate(&weighted, &base);
        if !est.mean.is_finite() || est.relative_error() > THETA_MAX_RELATIVE_SE {
            return Err(Error::Unstable(format!(
                "Theta({r}) estimator has relative standard error {:.3} with {n} samples",
                est.relative_error()
            )));
        }
        estimates.push(est);
    }
    Ok(ThetaCurve {
        arguments: arguments.to_vec(),
        estimates,
    })
}

/// Single-argument form of [`theta_curve`].
pub fn theta(r: f64, params: &StableParams, n: usize, rng: RngStream) -> Result<MeanEstimate> {
    Ok(theta_curve(&[r], params, n, rng)?.estimates[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p15() -> StableParams {
        StableParams::new(1.5, 1).unwrap()
    }

    #[test]
    fn cauchy_closed_form_at_alpha_one() {
        let p = StableParams::extended(1.0, 1).unwrap();
        for &(t, x) in &[(1.0, 0.0), (1.0, 2.5), (0.3, -1.0), (4.0, 20.0)] {
            let scale = t / 2f64.sqrt();
            let exact = scale / (std::f64::consts::PI * (scale * scale + x * x));
            assert!((density_1d(&p, t, x).unwrap() - exact).abs() < 1e-9);
        }
        let v = density_1d(&p, 1.0, 0.0).unwrap();
        assert!((v - 0.450_158_158_078_553).abs() < 1e-9, "{v}");
    }

    #[test]
    fn mode_matches_gamma_closed_form() {
        // Gamma(1 + 2/3) * sqrt(2) / pi
        let v = density_1d(&p15(), 1.0, 0.0).unwrap();
        assert!((v - 0.406_378_158_288_876).abs() < 1e-9, "{v}");
        assert!((v - density_1d_at_origin(&p15(), 1.0)).abs() < 1e-10);
    }

    #[test]
    fn symmetric_in_x() {
        for &x in &[0.3, 1.7, 12.0] {
            let a = density_1d(&p15(), 0.7, x).unwrap();
            let b = density_1d(&p15(), 0.7, -x).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(density_1d(&p15(), 0.0, 1.0).is_err());
        assert!(density_1d(&StableParams::new(1.5, 2).unwrap(), 1.0, 1.0).is_err());
        let s = RngStream::new(1, 0);
        assert!(density_mc(&p15(), 1.0, &[0.0], 10, s).is_err());
        assert!(density_mc(&p15(), 1.0, &[0.0, 1.0], 5000, s).is_err());
    }

    #[test]
    fn tail_series_joins_quadrature() {
        for alpha in [1.2, 1.5, 1.8] {
            let p = StableParams::new(alpha, 1).unwrap();
            let q = density_1d(&p, 1.0, 30.0).unwrap();
            let s = density_1d_tail(&p, 1.0, 30.0, 16);
            assert!((q - s).abs() < 1e-11, "alpha {alpha}: {q} vs {s}");
        }
    }

    #[test]
    fn table_matches_quadrature() {
        let p = p15();
        let table = DensityTable::new(&p).unwrap();
        for &(t, y) in &[(1.0, 0.0), (1.0, 0.123_45), (0.1, 0.4), (0.05, 3.3), (2.0, -7.77), (0.1, 25.0)] {
            let exact = density_1d(&p, t, y).unwrap();
            assert!((table.eval(t, y) - exact).abs() < 1e-9 * (1.0 + exact), "t={t} y={y}");
        }
    }

    #[test]
    fn table_tail_matches_series() {
        let p = p15();
        let table = DensityTable::new(&p).unwrap();
        for u in [31.0, 57.5, 400.0] {
            let s = density_1d_tail(&p, 1.0, u, 16);
            assert!((table.unit(u) - s).abs() < 1e-15 * s.max(1e-300) * 1e3, "{u}");
        }
    }

    #[test]
    fn far_field_mc_vanishes() {
        let e = density_mc(&p15(), 1.0, &[1e4], 2000, RngStream::new(5, 0)).unwrap();
        assert!(e.mean < 1e-8);
    }

    #[test]
    fn theta_at_zero_is_exactly_one() {
        for d in [1, 3] {
            let p = StableParams::new(1.5, d).unwrap();
            let t = theta(0.0, &p, 5000, RngStream::new(3, 0)).unwrap();
            assert_eq!(t.mean, 1.0);
        }
    }

    #[test]
    fn theta_curve_is_monotone() {
        let c = theta_curve(&[0.0, 0.25, 0.5, 1.0], &p15(), 50_000, RngStream::new(4, 0)).unwrap();
        assert!(c.estimates.windows(2).all(|w| w[1].mean > w[0].mean));
        assert!(theta_curve(&[0.5, 0.25], &p15(), 5000, RngStream::new(4, 0)).is_err());
    }
}
