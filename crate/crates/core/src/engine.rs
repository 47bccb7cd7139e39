//! The Euler-Maruyama chain `X_{(k+1)delta} = X_{k delta} + b(X_{k delta}) delta + Delta L_k`,
//! its frozen counterpart, and the synchronous coarse/fine coupling used to
//! measure strong errors.
//!
//! Coupled chains are computed as `X = Y + D` where `Y = x0 + L` is the shared
//! running sum of the fine noise and `D` is the chain's own accumulated drift
//! displacement. Two chains driven by the same noise are compared through
//! their displacements only, so the comparison is free of rounding in the
//! noise and vanishes identically when the drift is zero.

use serde::{Deserialize, Serialize};

use crate::drift::DriftSpec;
use crate::error::{invalid, Error, Result};
use crate::levy::{sample_noise_path, NoisePath};
use crate::params::StableParams;
use crate::rng::RngStream;

/// Relative tolerance when checking that step sizes nest.
const NESTING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub params: StableParams,
    pub drift: DriftSpec,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
}

impl EmConfig {
    pub fn new(
        params: StableParams,
        drift: DriftSpec,
        x0: Vec<f64>,
        delta: f64,
        horizon: f64,
    ) -> Result<Self> {
        let c = Self {
            params,
            drift,
            x0,
            delta,
            horizon,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.require_scheme_range()?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("step must lie in (0, 1), got {}", self.delta));
        }
        if !(self.horizon >= self.delta && self.horizon.is_finite()) {
            return invalid(format!(
                "horizon {} must be finite and at least the step {}",
                self.horizon, self.delta
            ));
        }
        let d = self.params.dim();
        if self.x0.len() != d || self.drift.dim != d {
            return invalid(format!(
                "x0 has {} coordinates and the drift is {}-dimensional, expected {d}",
                self.x0.len(),
                self.drift.dim
            ));
        }
        Ok(())
    }

    /// `ceil(T / delta)`.
    pub fn n_steps(&self) -> usize {
        steps_for(self.horizon, self.delta)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut c = self.clone();
        c.delta = delta;
        c.validate()?;
        Ok(c)
    }
}

pub(crate) fn steps_for(horizon: f64, delta: f64) -> usize {
    let r = horizon / delta;
    let n = r.round();
    if (r - n).abs() <= NESTING_TOL * r.max(1.0) {
        n as usize
    } else {
        r.ceil() as usize
    }
}

/// `ratio` as an integer when it is one up to rounding.
pub(crate) fn integer_ratio(coarse: f64, fine: f64) -> Option<usize> {
    let r = coarse / fine;
    let n = r.round();
    ((r - n).abs() <= NESTING_TOL * r.max(1.0) && n >= 1.0).then_some(n as usize)
}

/// States of a chain on the grid `(start_step + i) * delta`, stored flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePath {
    pub dim: usize,
    pub delta: f64,
    pub start_step: usize,
    pub data: Vec<f64>,
}

impl StatePath {
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn time(&self, i: usize) -> f64 {
        (self.start_step + i) as f64 * self.delta
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// `time,x1,...,xd` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["time".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        out.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:.17e}", self.time(i))];
            row.extend(self.state(i).iter().map(|v| format!("{v:.17e}")));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Serialize(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialize(e.to_string())
}

fn check_increments(config: &EmConfig, incs: &NoisePath) -> Result<()> {
    if incs.dim() != config.params.dim() {
        return invalid("increment dimension does not match the configuration");
    }
    if (incs.dt() - config.delta).abs() > NESTING_TOL * config.delta {
        return invalid(format!(
            "increments have span {} but the step is {}",
            incs.dt(),
            config.delta
        ));
    }
    Ok(())
}

#[inline]
fn eval_checked(drift: &DriftSpec, x: &[f64], out: &mut [f64], step: usize) -> Result<()> {
    drift.eval_into(x, out);
    if let Some(v) = out.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDrift {
            step,
            state: x.to_vec(),
            value: *v,
        });
    }
    Ok(())
}

/// EM chain on `{0, delta, ..., n delta}` with `n = ceil(T/delta)`.
pub fn em_path(config: &EmConfig, increments: &NoisePath) -> Result<StatePath> {
    config.validate()?;
    if increments.len() != config.n_steps() {
        return invalid(format!(
            "expected {} increments, got {}",
            config.n_steps(),
            increments.len()
        ));
    }
    em_path_from(config, 0, &config.x0, increments)
}

/// Terminal states `X_T` of `n_paths` independent chains, path `i` on
/// `stream.path(i)`, flattened in path order.
pub fn em_terminal_values(config: &EmConfig, n_paths: usize, stream: RngStream) -> Result<Vec<f64>> {
    config.validate()?;
    let n = config.n_steps();
    let runs = crate::rng::par_paths(stream, n_paths, |rng| {
        let noise = sample_noise_path(&config.params, config.delta, n, rng)?;
        em_path_from(config, 0, &config.x0, &noise).map(|p| p.last().to_vec())
    });
    let mut out = Vec::with_capacity(n_paths * config.params.dim());
    for r in runs {
        out.extend(r?);
    }
    Ok(out)
}

/// EM chain restarted at `(start_step * delta, x)`, consuming every increment given.
pub fn em_path_from(
    config: &EmConfig,
    start_step: usize,
    x: &[f64],
    increments: &NoisePath,
) -> Result<StatePath> {
    check_increments(config, increments)?;
    let d = config.params.dim();
    if x.len() != d {
        return invalid("start point has the wrong dimension");
    }
    let mut data = Vec::with_capacity((increments.len() + 1) * d);
    data.extend_from_slice(x);
    let mut b = vec![0.0; d];
    for k in 0..increments.len() {
        let cur = data[k * d..(k + 1) * d].to_vec();
        eval_checked(&config.drift, &cur, &mut b, start_step + k)?;
        for ((c, bi), dl) in cur.iter().zip(&b).zip(increments.increment(k)) {
            data.push(c + bi * config.delta + dl);
        }
    }
    Ok(StatePath {
        dim: d,
        delta: config.delta,
        start_step,
        data,
    })
}

/// Frozen chain `X_{(i+1)delta} = X_{i delta} + b(x') delta + Delta L_i` started at `(j delta, x)`.
pub fn frozen_path(
    config: &EmConfig,
    freeze_point: &[f64],
    start: (usize, &[f64]),
    increments: &NoisePath,
) -> Result<StatePath> {
    check_increments(config, increments)?;
    let d = config.params.dim();
    let (j, x) = start;
    if x.len() != d || freeze_point.len() != d {
        return invalid("start or freeze point has the wrong dimension");
    }
    let mut b = vec![0.0; d];
    eval_checked(&config.drift, freeze_point, &mut b, j)?;
    let mut data = Vec::with_capacity((increments.len() + 1) * d);
    data.extend_from_slice(x);
    for k in 0..increments.len() {
        for i in 0..d {
            let c = data[k * d + i];
            data.push(c + b[i] * config.delta + increments.increment(k)[i]);
        }
    }
    Ok(StatePath {
        dim: d,
        delta: config.delta,
        start_step: j,
        data,
    })
}

/// `Y_i = x0 + sum_{l < i} increment_l`, left to right, flat with `n + 1` states.
pub fn noise_states(x0: &[f64], noise: &NoisePath) -> Vec<f64> {
    let d = x0.len();
    let mut y = Vec::with_capacity((noise.len() + 1) * d);
    y.extend_from_slice(x0);
    for k in 0..noise.len() {
        for (i, dl) in noise.increment(k).iter().enumerate() {
            let prev = y[k * d + i];
            y.push(prev + dl);
        }
    }
    y
}

/// Walks the continuous-time EM chain of step `m * dt_fine` along the fine
/// grid. At fine index `i` (in block `k = i / m`) the chain sits at
/// `Y_i + D_k + b(X_k) (i - k m) dt_fine`. `visit(i, displacement, state, b(X_k))`
/// is called for every `i` in `0..=n`.
pub(crate) fn walk_chain<F>(
    drift: &DriftSpec,
    y: &[f64],
    dim: usize,
    dt_fine: f64,
    m: usize,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64], &[f64], &[f64]),
{
    let n_states = y.len() / dim;
    let delta = m as f64 * dt_fine;
    let mut d_k = vec![0.0; dim];
    let mut b_k = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut disp = vec![0.0; dim];
    for i in 0..n_states {
        let r = i % m;
        let yi = &y[i * dim..(i + 1) * dim];
        if r == 0 {
            if i > 0 {
                for (dk, bk) in d_k.iter_mut().zip(&b_k) {
                    *dk += bk * delta;
                }
            }
            for l in 0..dim {
                x[l] = yi[l] + d_k[l];
            }
            eval_checked(drift, &x, &mut b_k, i / m)?;
            disp.copy_from_slice(&d_k);
        } else {
            let h = r as f64 * dt_fine;
            for l in 0..dim {
                disp[l] = d_k[l] + b_k[l] * h;
                x[l] = yi[l] + disp[l];
            }
        }
        visit(i, &disp, &x, &b_k);
    }
    Ok(())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `sup_i |D^ref_i - D^(m)_i|` over the fine grid for each block factor in
/// `ms`, the reference chain stepping every `m_ref` fine increments.
pub(crate) fn level_sup_errors(
    drift: &DriftSpec,
    y: &[f64],
    dim: usize,
    dt_fine: f64,
    m_ref: usize,
    ms: &[usize],
) -> Result<Vec<f64>> {
    let n_states = y.len() / dim;
    let mut reference = vec![0.0; n_states * dim];
    walk_chain(drift, y, dim, dt_fine, m_ref, |i, disp, _, _| {
        reference[i * dim..(i + 1) * dim].copy_from_slice(disp);
    })?;
    ms.iter()
        .map(|&m| {
            if m == m_ref {
                return Ok(0.0);
            }
            let mut sup: f64 = 0.0;
            walk_chain(drift, y, dim, dt_fine, m, |i, disp, _, _| {
                sup = sup.max(dist(&reference[i * dim..(i + 1) * dim], disp));
            })?;
            Ok(sup)
        })
        .collect()
}

/// A coarse chain and its fine-step reference driven by one noise path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPaths {
    pub delta_coarse: f64,
    pub delta_fine: f64,
    pub times_fine: Vec<f64>,
    /// Reference chain at every fine time.
    pub path_fine: StatePath,
    /// Coarse chain at the coarse times.
    pub path_coarse: StatePath,
    /// Coarse increments, the canonical block sums of the fine ones.
    pub increments_coarse: NoisePath,
    /// `|X^ref_t - X^coarse_t|` at every fine time, with the coarse chain
    /// interpolated by its own continuous-time scheme.
    pub error_fine: Vec<f64>,
    pub sup_error: f64,
}

/// Checks that `coarse / fine` is a power of two and returns it.
pub fn nesting_factor(coarse: f64, fine: f64) -> Result<usize> {
    match integer_ratio(coarse, fine) {
        Some(m) if m.is_power_of_two() => Ok(m),
        _ => Err(Error::Grid(format!(
            "step {coarse} is not a power-of-two multiple of {fine}"
        ))),
    }
}

pub fn coupled_em(config: &EmConfig, delta_ref: f64, rng: RngStream) -> Result<CoupledPaths> {
    config.validate()?;
    let m = nesting_factor(config.delta, delta_ref)?;
    let n_coarse = config.n_steps();
    let mut g = rng.generator();
    let noise = sample_noise_path(&config.params, delta_ref, n_coarse * m, &mut g)?;
    coupled_from_noise(config, &noise, m)
}

pub(crate) fn coupled_from_noise(
    config: &EmConfig,
    noise: &NoisePath,
    m: usize,
) -> Result<CoupledPaths> {
    let dim = config.params.dim();
    let dt = noise.dt();
    let y = noise_states(&config.x0, noise);
    let n_states = noise.len() + 1;
    let mut fine = vec![0.0; n_states * dim];
    let mut ref_disp = vec![0.0; n_states * dim];
    walk_chain(&config.drift, &y, dim, dt, 1, |i, disp, x, _| {
        fine[i * dim..(i + 1) * dim].copy_from_slice(x);
        ref_disp[i * dim..(i + 1) * dim].copy_from_slice(disp);
    })?;
    let mut coarse = Vec::with_capacity((n_states / m + 1) * dim);
    let mut error_fine = vec![0.0; n_states];
    walk_chain(&config.drift, &y, dim, dt, m, |i, disp, x, _| {
        if i % m == 0 {
            coarse.extend_from_slice(x);
        }
        error_fine[i] = dist(&ref_disp[i * dim..(i + 1) * dim], disp);
    })?;
    let sup_error = error_fine.iter().copied().fold(0.0, f64::max);
    Ok(CoupledPaths {
        delta_coarse: dt * m as f64,
        delta_fine: dt,
        times_fine: (0..n_states).map(|i| i as f64 * dt).collect(),
        path_fine: StatePath {
            dim,
            delta: dt,
            start_step: 0,
            data: fine,
        },
        path_coarse: StatePath {
            dim,
            delta: dt * m as f64,
            start_step: 0,
            data: coarse,
        },
        increments_coarse: noise.block_sums(m)?,
        error_fine,
        sup_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::sample_noise_path;

    fn params() -> StableParams {
        StableParams::new(1.5, 1).unwrap()
    }

    fn config(drift: DriftSpec, delta: f64) -> EmConfig {
        EmConfig::new(params(), drift, vec![0.3], delta, 1.0).unwrap()
    }

    fn noise(delta: f64, n: usize, seed: u64) -> NoisePath {
        sample_noise_path(&params(), delta, n, &mut RngStream::new(seed, 0).generator()).unwrap()
    }

    #[test]
    fn zero_drift_sums_increments() {
        let c = config(DriftSpec::zero(1), 0.1);
        let inc = noise(0.1, 10, 1);
        let p = em_path(&c, &inc).unwrap();
        let mut acc = 0.3;
        for k in 0..10 {
            acc += inc.increment(k)[0];
            assert!((p.state(k + 1)[0] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_drift_without_noise_is_deterministic_euler() {
        let c = config(DriftSpec::constant(0.7, 1), 0.125);
        let p = em_path(&c, &NoisePath::zeros(1, 0.125, 8)).unwrap();
        for k in 0..=8 {
            assert!((p.state(k)[0] - (0.3 + 0.7 * 0.125 * k as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(EmConfig::new(params(), DriftSpec::sin(1), vec![0.0], 1.0, 2.0).is_err());
        assert!(EmConfig::new(params(), DriftSpec::sin(1), vec![0.0], 0.5, 0.1).is_err());
        assert!(EmConfig::new(params(), DriftSpec::sin(2), vec![0.0], 0.1, 1.0).is_err());
        let c = config(DriftSpec::sin(1), 0.1);
        assert!(em_path(&c, &noise(0.1, 9, 1)).is_err());
        assert!(em_path(&c, &noise(0.05, 10, 1)).is_err());
    }

    #[test]
    fn markov_restart_reproduces_the_tail() {
        let c = config(DriftSpec::sin(1), 0.1);
        let inc = noise(0.1, 10, 4);
        let p = em_path(&c, &inc).unwrap();
        let q = em_path_from(&c, 4, p.state(4), &inc.tail(4)).unwrap();
        for i in 0..q.len() {
            assert_eq!(q.state(i), p.state(i + 4));
            assert_eq!(q.time(i), p.time(i + 4));
        }
    }

    #[test]
    fn drift_displacement_is_bounded() {
        let c = config(DriftSpec::holder(0.4, 1).unwrap(), 0.1);
        let inc = noise(0.1, 10, 5);
        let p = em_path(&c, &inc).unwrap();
        for k in 0..10 {
            let disp = p.state(k + 1)[0] - p.state(k)[0] - inc.increment(k)[0];
            assert!(disp.abs() <= c.drift.sup_norm * 0.1 + 1e-12);
        }
    }

    #[test]
    fn frozen_path_uses_the_frozen_drift() {
        let c = config(DriftSpec::sin(1), 0.1);
        let zero = frozen_path(&c, &[0.0], (2, &[1.0]), &NoisePath::zeros(1, 0.1, 1)).unwrap();
        assert_eq!(zero.state(1)[0], 1.0);
        let one = frozen_path(&c, &[1.0], (2, &[1.0]), &NoisePath::zeros(1, 0.1, 1)).unwrap();
        assert!((one.state(1)[0] - (1.0 + 1f64.sin() * 0.1)).abs() < 1e-15);
        assert_eq!(one.time(0), 0.2);
    }

    #[test]
    fn nan_drift_aborts_with_diagnostics() {
        let c = config(DriftSpec::sin(1), 0.1);
        let err = em_path_from(&c, 0, &[f64::INFINITY], &noise(0.1, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteDrift { step: 0, .. }));
    }

    #[test]
    fn zero_drift_coupling_is_exact() {
        let c = config(DriftSpec::zero(1), 0.1);
        let cp = coupled_em(&c, 0.1 / 16.0, RngStream::new(3, 0)).unwrap();
        assert_eq!(cp.sup_error, 0.0);
        for k in 0..cp.path_coarse.len() {
            assert_eq!(cp.path_coarse.state(k), cp.path_fine.state(16 * k));
        }
    }

    #[test]
    fn equal_steps_give_identical_paths() {
        let c = config(DriftSpec::sin(1), 0.1);
        let cp = coupled_em(&c, 0.1, RngStream::new(3, 0)).unwrap();
        assert_eq!(cp.path_coarse, cp.path_fine);
        assert_eq!(cp.sup_error, 0.0);
    }

    #[test]
    fn coarse_chain_follows_the_recursion() {
        let c = config(DriftSpec::sin(1), 0.1);
        let cp = coupled_em(&c, 0.1 / 8.0, RngStream::new(9, 2)).unwrap();
        let p = &cp.path_coarse;
        for k in 0..p.len() - 1 {
            let x = p.state(k)[0];
            let next = x + x.sin() * 0.1 + cp.increments_coarse.increment(k)[0];
            assert!((p.state(k + 1)[0] - next).abs() < 1e-12 * (1.0 + next.abs()));
        }
        assert!(cp.sup_error > 0.0);
    }

    #[test]
    fn non_nested_steps_are_rejected() {
        let c = config(DriftSpec::sin(1), 0.1);
        assert!(matches!(
            coupled_em(&c, 0.1 / 3.0, RngStream::new(1, 1)),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = config(DriftSpec::sin(1), 0.5);
        let p = em_path(&c, &noise(0.5, 2, 1)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("time,x1\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
