//! Strong convergence rate of the EM scheme: `E sup_t |X_t - X^(delta)_t|^eta`
//! against `delta`, with the solution proxied by the chain at a much finer step
//! `delta_ref` driven by the same noise.

use serde::{Deserialize, Serialize};

use crate::drift::{DriftKind, DriftSpec};
use crate::engine::{level_sup_errors, nesting_factor, noise_states, steps_for};
use crate::error::{invalid, Error, Result};
use crate::estimates::{Regime, DEFAULT_EPSILON};
use crate::levy::sample_noise_path;
use crate::params::StableParams;
use crate::rng::{par_paths, RngStream};
use crate::stats::{log_log_fit, MeanEstimate};

pub const RATE_TOLERANCE: f64 = 0.15;
pub const MAX_CI_WIDTH: f64 = 0.15;
/// Per-`delta` estimates with a larger relative standard error are refused.
pub const MAX_RELATIVE_SE: f64 = 0.2;
/// Two-sided normal quantile for the slope confidence interval.
pub const CI_Z: f64 = 1.959_963_984_540_054;
/// Factor `r` in the one-sided requirement `slope >= r eta` when `2 beta >= alpha`.
pub const SUP_SLOPE_FACTOR: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperiment {
    pub params: StableParams,
    pub drift: DriftSpec,
    pub x0: Vec<f64>,
    pub eta: f64,
    pub deltas: Vec<f64>,
    pub delta_ref: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub epsilon: f64,
}

impl RateExperiment {
    /// The standard setup: `x0 = 0`, `delta_ref = min(deltas) / 64`, `epsilon = 0.9`.
    pub fn new(
        params: StableParams,
        drift: DriftSpec,
        eta: f64,
        deltas: Vec<f64>,
        horizon: f64,
        n_paths: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let finest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
        let e = Self {
            x0: vec![0.0; params.dim()],
            params,
            drift,
            eta,
            deltas,
            delta_ref: finest / 64.0,
            horizon,
            n_paths,
            master_seed,
            epsilon: DEFAULT_EPSILON,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.require_scheme_range()?;
        if !(self.eta > 0.0 && self.eta < 2.0) {
            return invalid(format!("eta must lie in (0, 2), got {}", self.eta));
        }
        if self.deltas.len() < 2 || self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("need at least two strictly decreasing deltas");
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return invalid("every delta must lie in (0, 1)");
        }
        for d in &self.deltas {
            nesting_factor(*d, self.delta_ref)?;
            if crate::engine::integer_ratio(self.horizon, *d).is_none() {
                return Err(Error::Grid(format!(
                    "horizon {} is not a multiple of delta {d}",
                    self.horizon
                )));
            }
        }
        if self.x0.len() != self.params.dim() || self.drift.dim != self.params.dim() {
            return invalid("x0 and drift must match the dimension");
        }
        let beta = self.drift.require_beta()?;
        let floor = 1.0 - self.params.alpha() / 2.0;
        if !self.drift.is_constant() && beta <= floor {
            return invalid(format!(
                "beta = {beta} must exceed 1 - alpha/2 = {floor}"
            ));
        }
        if self.n_paths < 2 || !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid("need at least two paths and epsilon in (0, 1)");
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.drift.beta.unwrap_or(1.0), self.params.alpha())
    }

    pub fn theoretical_slope(&self) -> f64 {
        let beta = self.drift.beta.unwrap_or(1.0);
        match self.regime() {
            Regime::Sub => self.eta * beta / self.params.alpha(),
            Regime::Sup => self.eta * self.epsilon / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub delta: f64,
    pub error: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub drift: String,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub delta_ref: f64,
    pub per_delta: Vec<RateRow>,
    /// `None` when the error vanishes identically.
    pub slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub theoretical_slope: f64,
    pub regime: Regime,
    pub exact_zero: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl RateReport {
    pub const CSV_HEADER: [&'static str; 7] =
        ["drift", "alpha", "beta", "eta", "delta", "error", "std_error"];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.per_delta
            .iter()
            .map(|r| {
                vec![
                    self.drift.clone(),
                    self.alpha.to_string(),
                    self.beta.to_string(),
                    self.eta.to_string(),
                    format!("{:.10e}", r.delta),
                    format!("{:.10e}", r.error),
                    format!("{:.10e}", r.std_error),
                ]
            })
            .collect()
    }

    pub fn ci_width(&self) -> Option<f64> {
        self.slope_ci.map(|(a, b)| b - a)
    }
}

/// Per-path `sup_t |D^ref_t - D^delta_t|` for every delta of the experiment,
/// with noise simulated at `delta_ref / refinement` and the reference chain
/// stepping every `ref_block` noise increments.
fn sup_errors(exp: &RateExperiment, refinement: usize, ref_block: usize) -> Result<Vec<Vec<f64>>> {
    let dt = exp.delta_ref / refinement as f64;
    let ms: Vec<usize> = exp
        .deltas
        .iter()
        .map(|d| nesting_factor(*d, dt))
        .collect::<Result<_>>()?;
    let n = steps_for(exp.horizon, dt);
    let dim = exp.params.dim();
    let rows: Vec<Result<Vec<f64>>> =
        par_paths(RngStream::new(exp.master_seed, 0), exp.n_paths, |g| {
            let noise = sample_noise_path(&exp.params, dt, n, g)?;
            let y = noise_states(&exp.x0, &noise);
            level_sup_errors(&exp.drift, &y, dim, dt, ref_block, &ms)
        });
    rows.into_iter().collect()
}

fn build_report(exp: &RateExperiment, eta: f64, sups: &[Vec<f64>]) -> Result<RateReport> {
    let per_delta: Vec<RateRow> = exp
        .deltas
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let col: Vec<f64> = sups.iter().map(|r| r[j].powf(eta)).collect();
            let e = MeanEstimate::from_samples(&col);
            RateRow {
                delta: *d,
                error: e.mean,
                std_error: e.std_error,
                n_paths: e.n,
            }
        })
        .collect();
    let beta = exp.drift.beta.unwrap_or(1.0);
    let regime = exp.regime();
    let theoretical = {
        let mut e = exp.clone();
        e.eta = eta;
        e.theoretical_slope()
    };
    let mut notes = vec![format!(
        "reference step {} on the same noise; sup over the reference grid",
        exp.delta_ref
    )];
    if sups.iter().all(|r| r.iter().all(|v| *v == 0.0)) {
        notes.push("error vanishes identically: slope undefined".into());
        return Ok(RateReport {
            drift: exp.drift.name.clone(),
            alpha: exp.params.alpha(),
            beta,
            eta,
            delta_ref: exp.delta_ref,
            per_delta,
            slope: None,
            slope_ci: None,
            theoretical_slope: theoretical,
            regime,
            exact_zero: true,
            pass: true,
            notes,
        });
    }
    if let Some(r) = per_delta
        .iter()
        .find(|r| !(r.std_error <= MAX_RELATIVE_SE * r.error))
    {
        return Err(Error::Unstable(format!(
            "error estimate at delta = {} has standard error {:.3e} against mean {:.3e}; use more paths",
            r.delta, r.std_error, r.error
        )));
    }
    let ests: Vec<MeanEstimate> = per_delta
        .iter()
        .map(|r| MeanEstimate {
            mean: r.error,
            std_error: r.std_error,
            n: r.n_paths,
        })
        .collect();
    let fit = log_log_fit(&exp.deltas, &ests);
    let ci = fit.slope_ci(CI_Z);
    let width = ci.1 - ci.0;
    let pass = match regime {
        Regime::Sub => (fit.slope - theoretical).abs() <= RATE_TOLERANCE && width < MAX_CI_WIDTH,
        Regime::Sup => fit.slope >= SUP_SLOPE_FACTOR * eta && width < MAX_CI_WIDTH,
    };
    notes.push(match regime {
        Regime::Sub => format!("two-sided: |slope - eta beta/alpha| <= {RATE_TOLERANCE}, CI width < {MAX_CI_WIDTH}"),
        Regime::Sup => format!("one-sided: slope >= {SUP_SLOPE_FACTOR} eta, CI width < {MAX_CI_WIDTH}"),
    });
    Ok(RateReport {
        drift: exp.drift.name.clone(),
        alpha: exp.params.alpha(),
        beta,
        eta,
        delta_ref: exp.delta_ref,
        per_delta,
        slope: Some(fit.slope),
        slope_ci: Some(ci),
        theoretical_slope: theoretical,
        regime,
        exact_zero: false,
        pass,
        notes,
    })
}

pub fn run_rate_experiment(exp: &RateExperiment) -> Result<RateReport> {
    exp.validate()?;
    build_report(exp, exp.eta, &sup_errors(exp, 1, 1)?)
}

/// One report per moment order, all from the same simulated errors.
pub fn run_rate_experiment_etas(exp: &RateExperiment, etas: &[f64]) -> Result<Vec<RateReport>> {
    exp.validate()?;
    if etas.iter().any(|e| !(*e > 0.0 && *e < 2.0)) {
        return invalid("every eta must lie in (0, 2)");
    }
    let sups = sup_errors(exp, 1, 1)?;
    etas.iter().map(|e| build_report(exp, *e, &sups)).collect()
}

/// Effect of halving the reference step on one error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBias {
    pub delta: f64,
    /// Error against the chain at `delta_ref`.
    pub error: f64,
    pub std_error: f64,
    /// Error against the chain at `delta_ref / 2` on the same noise.
    pub error_half_ref: f64,
    /// Standard error of the paired difference.
    pub difference_std_error: f64,
}

impl ReferenceBias {
    /// `|error_half_ref - error| < std_error`.
    pub fn within_one_se(&self) -> bool {
        (self.error_half_ref - self.error).abs() < self.std_error
    }
}

/// Simulates the noise at `delta_ref / 2` and compares every coarse chain
/// against reference chains at `delta_ref` and at `delta_ref / 2`.
pub fn reference_bias(exp: &RateExperiment) -> Result<Vec<ReferenceBias>> {
    exp.validate()?;
    let coarse = sup_errors(exp, 2, 2)?;
    let fine = sup_errors(exp, 2, 1)?;
    Ok(exp
        .deltas
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let a: Vec<f64> = coarse.iter().map(|r| r[j].powf(exp.eta)).collect();
            let b: Vec<f64> = fine.iter().map(|r| r[j].powf(exp.eta)).collect();
            let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            let ea = MeanEstimate::from_samples(&a);
            let eb = MeanEstimate::from_samples(&b);
            ReferenceBias {
                delta: *d,
                error: ea.mean,
                std_error: ea.std_error,
                error_half_ref: eb.mean,
                difference_std_error: MeanEstimate::from_samples(&diff).std_error,
            }
        })
        .collect())
}

/// Outcome of one `(alpha, beta)` pair of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub alpha: f64,
    pub beta: f64,
    pub report: Option<RateReport>,
    pub skipped: Option<String>,
}

/// Runs the experiment for every `(alpha, beta)` pair, replacing the Hölder
/// exponent of the base drift. Pairs with `beta <= 1 - alpha/2` are skipped.
pub fn rate_sweep(base: &RateExperiment, alphas: &[f64], betas: &[f64]) -> Result<Vec<SweepEntry>> {
    let family = |beta: f64| -> Result<DriftSpec> {
        let dim = base.params.dim();
        match base.drift.kind {
            DriftKind::Holder { .. } => DriftSpec::holder(beta, dim),
            DriftKind::Weierstrass { .. } => DriftSpec::weierstrass(beta, dim),
            _ => invalid(format!(
                "drift {} has no Holder exponent to sweep",
                base.drift.name
            )),
        }
    };
    let mut out = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            let floor = 1.0 - alpha / 2.0;
            let skip = |reason: String| SweepEntry {
                alpha,
                beta,
                report: None,
                skipped: Some(reason),
            };
            if !(alpha > 1.0 && alpha < 2.0) {
                out.push(skip(format!("alpha = {alpha} outside (1, 2)")));
                continue;
            }
            if !(beta > floor && beta <= 1.0) {
                out.push(skip(format!("beta = {beta} not in (1 - alpha/2, 1] = ({floor}, 1]")));
                continue;
            }
            let mut exp = base.clone();
            exp.params = StableParams::new(alpha, base.params.dim())?;
            exp.drift = family(beta)?;
            match run_rate_experiment(&exp) {
                Ok(r) => out.push(SweepEntry {
                    alpha,
                    beta,
                    report: Some(r),
                    skipped: None,
                }),
                Err(e @ Error::Unstable(_)) => out.push(skip(e.to_string())),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}
