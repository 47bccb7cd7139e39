//! Monte Carlo checks of the occupation-time estimates of the EM chain:
//! Krylov's `E int_0^s |f(X_r)| dr <= C ||f||_q s^(1 - d/(alpha q))`,
//! Khasminskii's exponential bound, and the drift-increment error
//! `int_0^T E|b(X_t) - b(X_{t_delta})|^2 dt`.
//!
//! Time integrals are left-endpoint Riemann sums on a fine grid; between grid
//! points of the chain the state is `X_{t_delta} + b(X_{t_delta})(t - t_delta)`
//! plus the noise accumulated since `t_delta`.

use serde::{Deserialize, Serialize};

use crate::engine::{integer_ratio, noise_states, steps_for, walk_chain, EmConfig};
use crate::error::{invalid, Error, Result};
use crate::levy::sample_noise_path;
use crate::rng::{par_paths, RngStream};
use crate::stats::{log_log_fit, MeanEstimate};

/// Fine sub-steps per chain step in the Krylov and Khasminskii integrals.
pub const DEFAULT_SUBSTEPS: usize = 8;
/// Fine steps per smallest chain step in the drift-increment integral.
pub const DEFAULT_INCREMENT_RESOLUTION: usize = 32;
pub const KRYLOV_TOLERANCE: f64 = 0.1;
pub const DRIFT_INCREMENT_TOLERANCE: f64 = 0.12;
/// `epsilon` used when the drift is regular enough (`2 beta >= alpha`).
pub const DEFAULT_EPSILON: f64 = 0.9;
/// Lower bound asserted on the drift-increment exponent when `2 beta >= alpha`.
pub const DEFAULT_EPSILON_BOUND: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    /// `g(x) = exp(-|x|^2)`.
    GaussianBump,
    /// `g(x) = 1{max_i |x_i| <= 1}`.
    Indicator,
}

/// A test function `g` together with `q` and `||g||_q`.
///
/// With `span_scaled` set, the Krylov check integrates
/// `f_s(x) = s^(-d/(alpha q)) g(s^(-1/alpha) x)` over `[0, s]` for each span
/// `s`. Every `f_s` has the same `L^q` norm, and for a driftless chain started
/// at the origin the integral scales exactly like `s^(1 - d/(alpha q))`, so
/// this family saturates the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub name: String,
    pub kind: TestFunctionKind,
    pub dim: usize,
    pub q: f64,
    pub lq_norm: f64,
    pub sup_norm: f64,
    pub span_scaled: bool,
}

impl TestFunctionSpec {
    pub fn gaussian(q: f64, dim: usize, span_scaled: bool) -> Result<Self> {
        check_q(q)?;
        let d = dim as f64;
        Ok(Self {
            name: format!("gauss(q={q})"),
            kind: TestFunctionKind::GaussianBump,
            dim,
            q,
            lq_norm: (std::f64::consts::PI / q).powf(d / (2.0 * q)),
            sup_norm: 1.0,
            span_scaled,
        })
    }

    pub fn indicator(q: f64, dim: usize, span_scaled: bool) -> Result<Self> {
        check_q(q)?;
        Ok(Self {
            name: format!("indicator(q={q})"),
            kind: TestFunctionKind::Indicator,
            dim,
            q,
            lq_norm: 2f64.powf(dim as f64 / q),
            sup_norm: 1.0,
            span_scaled,
        })
    }

    /// `gauss` or `indicator`.
    pub fn parse(name: &str, q: f64, dim: usize, span_scaled: bool) -> Result<Self> {
        match name {
            "gauss" | "gaussian" => Self::gaussian(q, dim, span_scaled),
            "indicator" => Self::indicator(q, dim, span_scaled),
            _ => invalid(format!("unknown test function {name:?}")),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.kind {
            TestFunctionKind::GaussianBump => (-x.iter().map(|v| v * v).sum::<f64>()).exp(),
            TestFunctionKind::Indicator => {
                if x.iter().all(|v| v.abs() <= 1.0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `(amplitude, length)` such that `f_s(x) = amplitude * g(x / length)`.
    fn scaling(&self, span: f64, alpha: f64) -> (f64, f64) {
        if self.span_scaled {
            let d = self.dim as f64;
            (span.powf(-d / (alpha * self.q)), span.powf(1.0 / alpha))
        } else {
            (1.0, 1.0)
        }
    }

    fn require_integrable(&self, alpha: f64) -> Result<()> {
        let floor = (self.dim as f64 / alpha).max(1.0);
        if self.q > floor && self.lq_norm.is_finite() {
            Ok(())
        } else {
            invalid(format!("q = {} must exceed max(d/alpha, 1) = {floor}", self.q))
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 && q.is_finite() {
        Ok(())
    } else {
        invalid(format!("q must be a finite number >= 1, got {q}"))
    }
}

/// Monte Carlo values with a fitted power law, compared to the predicted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub kind: String,
    /// What `points` holds: `span`, `lambda` or `delta`.
    pub abscissa: String,
    pub points: Vec<f64>,
    pub estimates: Vec<MeanEstimate>,
    /// Upper bounds the estimates are checked against, when there are any.
    pub majorants: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    pub exponent_std_error: Option<f64>,
    pub theoretical_exponent: Option<f64>,
    pub tolerance: f64,
    pub fitted_constant: Option<f64>,
    pub regime: Option<String>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub const CSV_HEADER: [&'static str; 5] = ["abscissa", "value", "estimate", "std_error", "majorant"];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .zip(&self.estimates)
            .enumerate()
            .map(|(i, (p, e))| {
                vec![
                    self.abscissa.clone(),
                    format!("{p:.10e}"),
                    format!("{:.10e}", e.mean),
                    format!("{:.10e}", e.std_error),
                    self.majorants.get(i).map(|m| format!("{m:.10e}")).unwrap_or_default(),
                ]
            })
            .collect()
    }
}

fn check_increasing(xs: &[f64], what: &str) -> Result<()> {
    if xs.is_empty() || xs.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return invalid(format!("{what} must be positive and finite"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("{what} must be strictly increasing"));
    }
    Ok(())
}

fn column_estimates(rows: &[Vec<f64>], k: usize) -> Vec<MeanEstimate> {
    (0..k)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            MeanEstimate::from_samples(&col)
        })
        .collect()
}

/// Runs the chain of `config` on a grid `delta / substeps` up to `horizon`
/// and calls `visit(i, state)` at every fine time `i * dt` with `i < n`.
fn visit_fine_chain<F>(
    config: &EmConfig,
    substeps: usize,
    horizon: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64]),
{
    let dt = config.delta / substeps as f64;
    let n = steps_for(horizon, dt);
    let noise = sample_noise_path(&config.params, dt, n, rng)?;
    let y = noise_states(&config.x0, &noise);
    walk_chain(&config.drift, &y[..n * config.params.dim()], config.params.dim(), dt, substeps, |i, _, x, _| visit(i, x))
}

/// Krylov scaling check: `E int_0^s |f_s(X_r)| dr` for each span `s`.
pub fn krylov_check(
    config: &EmConfig,
    f: &TestFunctionSpec,
    spans: &[f64],
    n_paths: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    krylov_check_with(config, f, spans, n_paths, DEFAULT_SUBSTEPS, rng)
}

pub fn krylov_check_with(
    config: &EmConfig,
    f: &TestFunctionSpec,
    spans: &[f64],
    n_paths: usize,
    substeps: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    config.validate()?;
    let alpha = config.params.alpha();
    let d = config.params.dim() as f64;
    f.require_integrable(alpha)?;
    if f.dim != config.params.dim() {
        return invalid("test function dimension does not match the configuration");
    }
    check_increasing(spans, "spans")?;
    if let Some(s) = spans.iter().find(|s| **s < 4.0 * config.delta) {
        return invalid(format!(
            "span {s} is shorter than 4 steps of {}; the time integral is not resolved",
            config.delta
        ));
    }
    let max_span = *spans.last().unwrap();
    if max_span > config.horizon * (1.0 + 1e-12) {
        return invalid("spans must not exceed the horizon");
    }
    if n_paths < 2 || substeps == 0 {
        return invalid("need at least two paths and one sub-step");
    }
    let dt = config.delta / substeps as f64;
    let counts: Vec<usize> = spans.iter().map(|s| steps_for(*s, dt)).collect();
    let scales: Vec<(f64, f64)> = spans.iter().map(|s| f.scaling(*s, alpha)).collect();
    let rows: Vec<Result<Vec<f64>>> = par_paths(rng, n_paths, |g| {
        let mut acc = vec![0.0; spans.len()];
        let mut scaled = vec![0.0; config.params.dim()];
        visit_fine_chain(config, substeps, max_span, g, |i, x| {
            for (j, &(amp, len)) in scales.iter().enumerate() {
                if i < counts[j] {
                    for (s, v) in scaled.iter_mut().zip(x) {
                        *s = v / len;
                    }
                    acc[j] += amp * f.eval(&scaled).abs();
                }
            }
        })?;
        Ok(acc.into_iter().map(|a| a * dt).collect())
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let estimates = column_estimates(&rows, spans.len());
    let theoretical = 1.0 - d / (alpha * f.q);
    let fit = log_log_fit(spans, &estimates);
    let constant = spans
        .iter()
        .zip(&estimates)
        .map(|(s, e)| e.mean / (f.lq_norm * s.powf(theoretical)))
        .fold(0.0, f64::max);
    let resolution: f64 = spans
        .iter()
        .zip(&counts)
        .map(|(s, c)| (*c as f64 * dt - s).abs())
        .fold(0.0, f64::max);
    let pass = fit.slope.is_finite() && (fit.slope - theoretical).abs() <= KRYLOV_TOLERANCE;
    Ok(EstimateReport {
        kind: "krylov".into(),
        abscissa: "span".into(),
        points: spans.to_vec(),
        estimates,
        majorants: Vec::new(),
        fitted_exponent: Some(fit.slope),
        exponent_std_error: Some(fit.slope_se),
        theoretical_exponent: Some(theoretical),
        tolerance: KRYLOV_TOLERANCE,
        fitted_constant: Some(constant),
        regime: None,
        pass,
        notes: vec![
            format!("test function {} with ||f||_q = {:.6}", f.name, f.lq_norm),
            format!("span_scaled = {}", f.span_scaled),
            format!("chain step {} with {substeps} sub-steps (dt = {dt})", config.delta),
            format!("largest span rounding {resolution:.3e}"),
        ],
    })
}

/// `2^(1 + T (c lambda ||f||_q)^(1 / (1 - d/(alpha q))))`.
pub fn khasminskii_majorant(c: f64, lambda: f64, lq_norm: f64, horizon: f64, d: f64, alpha: f64, q: f64) -> f64 {
    let power = 1.0 / (1.0 - d / (alpha * q));
    2f64.powf(1.0 + horizon * (c * lambda * lq_norm).powf(power))
}

/// `E exp(lambda int_0^T |f(X_t)| dt)` for every `lambda`, on common paths.
///
/// `krylov_constant` is the fitted `C` of the Krylov check; the majorant uses
/// `c = 2 C`.
pub fn khasminskii_check(
    config: &EmConfig,
    f: &TestFunctionSpec,
    lambdas: &[f64],
    krylov_constant: f64,
    n_paths: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    config.validate()?;
    let alpha = config.params.alpha();
    let d = config.params.dim() as f64;
    f.require_integrable(alpha)?;
    if lambdas.is_empty()
        || lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite()))
        || lambdas.windows(2).any(|w| w[1] <= w[0])
    {
        return invalid("lambdas must be finite, non-negative and strictly increasing");
    }
    if !(krylov_constant > 0.0 && krylov_constant.is_finite()) {
        return invalid("the fitted Krylov constant must be positive and finite");
    }
    if n_paths < 2 {
        return invalid("need at least two paths");
    }
    let unscaled = TestFunctionSpec {
        span_scaled: false,
        ..f.clone()
    };
    let dt = config.delta / DEFAULT_SUBSTEPS as f64;
    let rows: Vec<Result<f64>> = par_paths(rng, n_paths, |g| {
        let mut acc = 0.0;
        visit_fine_chain(config, DEFAULT_SUBSTEPS, config.horizon, g, |_, x| {
            acc += unscaled.eval(x).abs();
        })?;
        Ok(acc * dt)
    });
    let integrals: Vec<f64> = rows.into_iter().collect::<Result<_>>()?;
    let c = 2.0 * krylov_constant;
    let mut estimates = Vec::with_capacity(lambdas.len());
    let mut majorants = Vec::with_capacity(lambdas.len());
    let mut notes = Vec::new();
    let mut pass = true;
    for &lambda in lambdas {
        let samples: Vec<f64> = integrals.iter().map(|i| (lambda * i).exp()).collect();
        let est = MeanEstimate::from_samples(&samples);
        let majorant = khasminskii_majorant(c, lambda, f.lq_norm, config.horizon, d, alpha, f.q);
        let trivial = (lambda * config.horizon * f.sup_norm).exp();
        if !est.mean.is_finite() {
            pass = false;
            notes.push(format!("lambda = {lambda}: estimate overflowed"));
        }
        if est.mean > majorant || est.mean > trivial * (1.0 + 1e-12) {
            pass = false;
            notes.push(format!(
                "lambda = {lambda}: estimate {:.6} exceeds a bound (majorant {majorant:.6}, exp(lambda T ||f||_inf) = {trivial:.6})",
                est.mean
            ));
        }
        if lambda == 0.0 && est.mean != 1.0 {
            pass = false;
            notes.push("lambda = 0 does not give exactly 1".into());
        }
        estimates.push(est);
        majorants.push(majorant);
    }
    for (i, w) in estimates.windows(2).enumerate() {
        let slack = 2.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        if w[1].mean + slack < w[0].mean {
            pass = false;
            notes.push(format!("not monotone between lambda[{i}] and lambda[{}]", i + 1));
        }
    }
    let logs: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
    for i in 1..lambdas.len().saturating_sub(1) {
        let left = (logs[i] - logs[i - 1]) / (lambdas[i] - lambdas[i - 1]);
        let right = (logs[i + 1] - logs[i]) / (lambdas[i + 1] - lambdas[i]);
        let slack = 2.0 * estimates[i].relative_error() / (lambdas[i + 1] - lambdas[i]).min(lambdas[i] - lambdas[i - 1]);
        if right + slack < left {
            pass = false;
            notes.push(format!("log-estimate not convex at lambda = {}", lambdas[i]));
        }
    }
    notes.push(format!("c = 2 * fitted Krylov constant = {c:.6}"));
    Ok(EstimateReport {
        kind: "khasminskii".into(),
        abscissa: "lambda".into(),
        points: lambdas.to_vec(),
        estimates,
        majorants,
        fitted_exponent: None,
        exponent_std_error: None,
        theoretical_exponent: None,
        tolerance: 0.0,
        fitted_constant: Some(krylov_constant),
        regime: None,
        pass,
        notes,
    })
}

/// Regime of the drift-increment and strong-rate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `2 beta < alpha`.
    Sub,
    /// `2 beta >= alpha`.
    Sup,
}

impl Regime {
    pub fn of(beta: f64, alpha: f64) -> Self {
        if 2.0 * beta < alpha {
            Regime::Sub
        } else {
            Regime::Sup
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Sub => "SUB",
            Regime::Sup => "SUP",
        }
    }
}

/// `int_0^T E|b(X_t) - b(X_{t_delta})|^2 dt` for each `delta`, all chains on one
/// fine noise path per sample.
pub fn drift_increment_error(
    config: &EmConfig,
    deltas: &[f64],
    n_paths: usize,
    rng: RngStream,
) -> Result<EstimateReport> {
    drift_increment_error_with(config, deltas, n_paths, DEFAULT_INCREMENT_RESOLUTION, DEFAULT_EPSILON, rng)
}

pub fn drift_increment_error_with(
    config: &EmConfig,
    deltas: &[f64],
    n_paths: usize,
    resolution: usize,
    epsilon: f64,
    rng: RngStream,
) -> Result<EstimateReport> {
    config.validate()?;
    let beta = config.drift.require_beta()?;
    let alpha = config.params.alpha();
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("deltas must be strictly decreasing");
    }
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return invalid("every delta must lie in (0, 1)");
    }
    if resolution == 0 || n_paths < 2 || !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid("need resolution >= 1, at least two paths and epsilon in (0, 1)");
    }
    let dt = deltas.last().unwrap() / resolution as f64;
    let ms: Vec<usize> = deltas
        .iter()
        .map(|d| {
            integer_ratio(*d, dt).ok_or_else(|| {
                Error::Grid(format!("delta {d} is not a multiple of the fine step {dt}"))
            })
        })
        .collect::<Result<_>>()?;
    let dim = config.params.dim();
    let n = steps_for(config.horizon, dt);
    let rows: Vec<Result<Vec<f64>>> = par_paths(rng, n_paths, |g| {
        let noise = sample_noise_path(&config.params, dt, n, g)?;
        let y = noise_states(&config.x0, &noise);
        let body = &y[..n * dim];
        let mut bx = vec![0.0; dim];
        ms.iter()
            .map(|&m| {
                let mut acc = 0.0;
                walk_chain(&config.drift, body, dim, dt, m, |i, _, x, bk| {
                    if i % m != 0 {
                        config.drift.eval_into(x, &mut bx);
                        acc += bx.iter().zip(bk).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    }
                })?;
                Ok(acc * dt)
            })
            .collect()
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let estimates = column_estimates(&rows, deltas.len());
    let regime = Regime::of(beta, alpha);
    let mut notes = vec![format!(
        "fine step {dt} ({resolution} per smallest delta), regime {}",
        regime.name()
    )];
    let all_zero = estimates.iter().all(|e| e.mean == 0.0);
    let (fitted, se) = if all_zero {
        notes.push("identically zero for every delta".into());
        (None, None)
    } else {
        let fit = log_log_fit(deltas, &estimates);
        (Some(fit.slope), Some(fit.slope_se))
    };
    let (theoretical, pass) = match (regime, fitted) {
        (_, None) => (None, all_zero),
        (Regime::Sub, Some(s)) => {
            let th = 2.0 * beta / alpha;
            (Some(th), (s - th).abs() <= DRIFT_INCREMENT_TOLERANCE)
        }
        (Regime::Sup, Some(s)) => {
            notes.push(format!("one-sided check: exponent >= {DEFAULT_EPSILON_BOUND}"));
            (Some(epsilon), s >= DEFAULT_EPSILON_BOUND.min(epsilon))
        }
    };
    Ok(EstimateReport {
        kind: "drift_increment".into(),
        abscissa: "delta".into(),
        points: deltas.to_vec(),
        estimates,
        majorants: Vec::new(),
        fitted_exponent: fitted,
        exponent_std_error: se,
        theoretical_exponent: theoretical,
        tolerance: DRIFT_INCREMENT_TOLERANCE,
        fitted_constant: None,
        regime: Some(regime.name().into()),
        pass,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftSpec;
    use crate::params::StableParams;

    fn cfg(drift: DriftSpec, delta: f64, horizon: f64) -> EmConfig {
        EmConfig::new(StableParams::new(1.5, 1).unwrap(), drift, vec![0.0], delta, horizon).unwrap()
    }

    #[test]
    fn lq_norms_match_closed_forms() {
        let g = TestFunctionSpec::gaussian(2.0, 1, false).unwrap();
        assert!((g.lq_norm - (std::f64::consts::PI / 2.0).powf(0.25)).abs() < 1e-15);
        let i = TestFunctionSpec::indicator(4.0, 2, false).unwrap();
        assert!((i.lq_norm - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn q_below_threshold_is_rejected() {
        let c = cfg(DriftSpec::zero(1), 0.025, 0.8);
        let f = TestFunctionSpec::gaussian(1.0, 1, true).unwrap();
        assert!(krylov_check(&c, &f, &[0.1, 0.2], 100, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn short_spans_are_flagged() {
        let c = cfg(DriftSpec::zero(1), 0.025, 0.8);
        let f = TestFunctionSpec::gaussian(2.0, 1, true).unwrap();
        assert!(krylov_check(&c, &f, &[0.05, 0.2], 100, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn bounded_integrand_is_bounded_by_span() {
        let c = cfg(DriftSpec::zero(1), 0.025, 0.8);
        let f = TestFunctionSpec::indicator(2.0, 1, false).unwrap();
        let r = krylov_check(&c, &f, &[0.1, 0.2], 2000, RngStream::new(2, 0)).unwrap();
        for (s, e) in r.points.iter().zip(&r.estimates) {
            assert!(e.mean <= s * f.sup_norm + 1e-12);
            assert!(e.mean > 0.5 * s);
        }
    }

    #[test]
    fn khasminskii_at_zero_is_one_and_bounded() {
        let c = cfg(DriftSpec::sin(1), 0.025, 1.0);
        let f = TestFunctionSpec::gaussian(2.0, 1, false).unwrap();
        let r = khasminskii_check(&c, &f, &[0.0, 0.5, 1.0, 2.0], 1.0, 2000, RngStream::new(3, 0)).unwrap();
        assert_eq!(r.estimates[0].mean, 1.0);
        assert_eq!(r.estimates[0].std_error, 0.0);
        for (l, e) in r.points.iter().zip(&r.estimates) {
            assert!(e.mean <= (l * 1.0).exp());
        }
        assert!(r.pass, "{:?}", r.notes);
    }

    #[test]
    fn constant_drift_has_no_increment_error() {
        let c = cfg(DriftSpec::constant(0.3, 1), 0.1, 1.0);
        let r = drift_increment_error_with(&c, &[0.2, 0.1], 200, 8, 0.9, RngStream::new(4, 0)).unwrap();
        assert!(r.estimates.iter().all(|e| e.mean == 0.0));
        assert!(r.fitted_exponent.is_none());
        assert!(r.pass);
    }

    #[test]
    fn non_nested_deltas_are_rejected() {
        let c = cfg(DriftSpec::sin(1), 0.1, 1.0);
        assert!(drift_increment_error_with(&c, &[0.3, 0.1], 10, 4, 0.9, RngStream::new(4, 0)).is_ok());
        assert!(drift_increment_error_with(&c, &[0.13, 0.1], 10, 4, 0.9, RngStream::new(4, 0)).is_err());
        assert!(drift_increment_error_with(&c, &[0.1, 0.2], 10, 4, 0.9, RngStream::new(4, 0)).is_err());
    }
}
