//! Discrete parametrix expansion of the one-dimensional EM transition density.
//!
//! With the frozen kernel
//! `p~(j, x; j', x') = p((j'-j) delta, x' - x - b(x') (j'-j) delta)` and the
//! correction kernel
//!
//! ```text
//! H(j, x; j', x') = delta^-1 [ p(n delta, x' - x - b(x) delta - b(x') (n-1) delta)
//!                             - p(n delta, x' - x - b(x') n delta) ],   n = j' - j,
//! ```
//!
//! the scheme's density is `p^(delta) = sum_m p~ (x)_delta H^(m)`, where
//! `(f (x)_delta g)(j, x; j', x') = delta sum_{k=j}^{j'-1} int f(j, x; k, z) g(k, z; j', x') dz`
//! and `f(j, x; j, .)` is the point mass at `x`. Term `m` vanishes after
//! `j' - j` convolutions, so the full sum reproduces the chain exactly; in
//! particular one step gives `p(delta, x' - x - b(x) delta)`.
//!
//! Both kernels depend on `j, j'` only through `n = j' - j`. Space integrals are
//! trapezoidal sums on a symmetric grid `[-L, L]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::density::{density_1d, DensityTable};
use crate::drift::DriftSpec;
use crate::error::{invalid, Error, Result};
use crate::params::StableParams;

/// Symmetric uniform grid on `[-L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub half_width: f64,
    pub spacing: f64,
    pub nodes: Vec<f64>,
}

impl SpaceGrid {
    /// Grid with `L = max(10 T^(1/alpha), 10)` and spacing at most
    /// `min(delta^(1/alpha) / 4, 0.05) / refinement`.
    pub fn standard(params: &StableParams, delta: f64, horizon: f64, refinement: usize) -> Result<Self> {
        let l = (10.0 * params.length_scale(horizon)).max(10.0);
        let h = (params.length_scale(delta) / 4.0).min(0.05) / refinement.max(1) as f64;
        Self::new(l, h)
    }

    /// Grid on `[-half_width, half_width]` with spacing at most `max_spacing`.
    pub fn new(half_width: f64, max_spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && max_spacing > 0.0 && max_spacing < half_width) {
            return invalid("grid needs 0 < spacing < half width");
        }
        let intervals = (2.0 * half_width / max_spacing).ceil() as usize;
        let spacing = 2.0 * half_width / intervals as f64;
        let nodes = (0..=intervals)
            .map(|i| -half_width + i as f64 * spacing)
            .collect();
        Ok(Self {
            half_width,
            spacing,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid weight of node `i`, including the spacing.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.nodes.len() {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i) * v)
            .sum()
    }

    /// Integral over `[a, b]` of the piecewise-linear interpolant of `values`.
    pub fn integrate_between(&self, values: &[f64], a: f64, b: f64) -> f64 {
        let lo = a.max(-self.half_width);
        let hi = b.min(self.half_width);
        if hi <= lo {
            return 0.0;
        }
        let interp = |x: f64| {
            let pos = ((x + self.half_width) / self.spacing).clamp(0.0, (self.len() - 1) as f64);
            let i = (pos as usize).min(self.len() - 2);
            let w = pos - i as f64;
            (1.0 - w) * values[i] + w * values[i + 1]
        };
        let first = ((lo + self.half_width) / self.spacing).ceil() as usize;
        let last = ((hi + self.half_width) / self.spacing).floor() as usize;
        let mut pts = vec![lo];
        pts.extend((first..=last.min(self.len() - 1)).map(|i| self.nodes[i]).filter(|x| *x > lo && *x < hi));
        pts.push(hi);
        pts.windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (interp(w[0]) + interp(w[1])))
            .sum()
    }
}

/// Values over `(x, x')` node pairs for fixed time indices `j < j'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    /// Start points `x` (rows).
    pub starts: Vec<f64>,
    /// End points `x'` (columns).
    pub x_nodes: Vec<f64>,
    pub j: usize,
    pub j_prime: usize,
    pub delta: f64,
    /// Row-major, `starts.len() * x_nodes.len()`.
    pub values: Vec<f64>,
}

impl KernelGrid {
    pub fn row(&self, start: usize) -> &[f64] {
        let n = self.x_nodes.len();
        &self.values[start * n..(start + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `p((j'-j) delta, x' - x - b(x') (j'-j) delta)` by quadrature.
pub fn frozen_density(
    j: usize,
    x: f64,
    j_prime: usize,
    x_prime: f64,
    delta: f64,
    drift: &DriftSpec,
    params: &StableParams,
) -> Result<f64> {
    let n = steps(j, j_prime)?;
    let t = n as f64 * delta;
    density_1d(params, t, x_prime - x - drift.eval_1d(x_prime) * t)
}

/// The correction kernel by quadrature.
pub fn h_kernel(
    j: usize,
    x: f64,
    j_prime: usize,
    x_prime: f64,
    delta: f64,
    drift: &DriftSpec,
    params: &StableParams,
) -> Result<f64> {
    let n = steps(j, j_prime)?;
    let t = n as f64 * delta;
    let (bx, bxp) = (drift.eval_1d(x), drift.eval_1d(x_prime));
    let frozen = x_prime - x - bxp * t;
    let a = density_1d(params, t, frozen - (bx - bxp) * delta)?;
    let b = density_1d(params, t, frozen)?;
    Ok((a - b) / delta)
}

fn steps(j: usize, j_prime: usize) -> Result<usize> {
    if j_prime > j {
        Ok(j_prime - j)
    } else {
        invalid(format!("need j' > j, got j = {j}, j' = {j_prime}"))
    }
}

#[inline]
fn h_table(table: &DensityTable, n: usize, delta: f64, z: f64, bz: f64, xp: f64, bxp: f64) -> f64 {
    let t = n as f64 * delta;
    let frozen = xp - z - bxp * t;
    let a = table.eval(t, frozen - (bz - bxp) * delta);
    let b = table.eval(t, frozen);
    (a - b) / delta
}

/// `delta sum_{k=j}^{j'-1} int f(k, z) g(k, z) dz` on `grid`, where `g`
/// already carries the end point `x'`. With `start = Some(x)` the `k = j`
/// term is the point mass at `x`, contributing `delta g(j, x)`; otherwise
/// `f(j, .)` is integrated like every other slice.
pub fn conv_delta<F, G>(f: F, g: G, j: usize, j_prime: usize, delta: f64, grid: &SpaceGrid, start: Option<f64>) -> f64
where
    F: Fn(usize, f64) -> f64,
    G: Fn(usize, f64) -> f64,
{
    let mut total = 0.0;
    for k in j..j_prime {
        if k == j {
            if let Some(x) = start {
                total += g(k, x);
                continue;
            }
        }
        total += grid
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &z)| grid.weight(i) * f(k, z) * g(k, z))
            .sum::<f64>();
    }
    delta * total
}

/// Terms `m = 0..=k_max` of the expansion of `p^(delta)(j, x; j', .)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAccumulator {
    pub alpha: f64,
    pub drift: String,
    pub drift_sup: f64,
    pub start: f64,
    pub j: usize,
    pub j_prime: usize,
    pub delta: f64,
    pub k_max: usize,
    pub grid: SpaceGrid,
    /// `terms[m]` at time `j'` as a one-row grid.
    pub terms: Vec<KernelGrid>,
    pub partial_sum: KernelGrid,
    /// Mass of `p((j'-j) delta, .)` outside `[-L, L]` after centring at `x`.
    pub truncation_mass: f64,
    /// Integral of the partial sum over the grid.
    pub mass: f64,
    /// Heat kernel `p((j'-j) delta, x' - x)` at the grid nodes.
    pub reference: Vec<f64>,
}

impl SeriesAccumulator {
    pub fn horizon(&self) -> f64 {
        (self.j_prime - self.j) as f64 * self.delta
    }

    /// `x, x', term_0, ..., term_kmax, partial_sum` rows.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["x".to_string(), "x_prime".to_string()];
        h.extend((0..=self.k_max).map(|m| format!("term_{m}")));
        h.push("partial_sum".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.grid.len())
            .map(|i| {
                let mut r = vec![format!("{:.10e}", self.start), format!("{:.10e}", self.grid.nodes[i])];
                r.extend(self.terms.iter().map(|t| format!("{:.10e}", t.values[i])));
                r.push(format!("{:.10e}", self.partial_sum.values[i]));
                r
            })
            .collect()
    }

    /// Indices of nodes with `|x' - x| <= L / 2`.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        let half = self.grid.half_width / 2.0;
        (0..self.grid.len()).filter(move |i| (self.grid.nodes[*i] - self.start).abs() <= half)
    }

    /// Probability the partial sum assigns to `[a, b]`.
    pub fn probability(&self, a: f64, b: f64) -> f64 {
        self.grid.integrate_between(&self.partial_sum.values, a, b)
    }
}

/// `(||b|| T^(1 - 1/alpha))^m Gamma(1 - 1/alpha)^m / Gamma(1 + m (1 - 1/alpha))`.
pub fn gamma_bound_factor(m: usize, drift_sup: f64, horizon: f64, alpha: f64) -> f64 {
    let e = 1.0 - 1.0 / alpha;
    let mf = m as f64;
    (drift_sup * horizon.powf(e) * gamma(e)).powf(mf) / gamma(1.0 + mf * e)
}

/// `sum_{m=0}^{m_max} x^m / Gamma(1 + m (1 - 1/alpha))`.
pub fn mittag_leffler_partial_sum(x: f64, alpha: f64, m_max: usize) -> f64 {
    let e = 1.0 - 1.0 / alpha;
    (0..=m_max)
        .map(|m| x.powi(m as i32) / gamma(1.0 + m as f64 * e))
        .sum()
}

/// Builds the expansion of `p^(delta)(j, x; j', .)` up to `k_max` terms.
#[allow(clippy::too_many_arguments)]
pub fn parametrix_series(
    j: usize,
    j_prime: usize,
    x: f64,
    delta: f64,
    drift: &DriftSpec,
    params: &StableParams,
    k_max: usize,
    grid: &SpaceGrid,
) -> Result<SeriesAccumulator> {
    let table = DensityTable::new(params)?;
    parametrix_series_with(j, j_prime, x, delta, drift, &table, k_max, grid)
}

/// [`parametrix_series`] with a precomputed kernel table.
#[allow(clippy::too_many_arguments)]
pub fn parametrix_series_with(
    j: usize,
    j_prime: usize,
    x: f64,
    delta: f64,
    drift: &DriftSpec,
    table: &DensityTable,
    k_max: usize,
    grid: &SpaceGrid,
) -> Result<SeriesAccumulator> {
    let params = *table.params();
    params.require_dim(1)?;
    params.require_scheme_range()?;
    if drift.dim != 1 {
        return invalid("the parametrix grid is one-dimensional");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("step must lie in (0, 1), got {delta}"));
    }
    let n = steps(j, j_prime)?;
    if k_max > n {
        return invalid(format!("k_max = {k_max} exceeds j' - j = {n}"));
    }
    let nodes = &grid.nodes;
    let size = nodes.len();
    let b: Vec<f64> = nodes.iter().map(|z| drift.eval_1d(*z)).collect();
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDrift {
            step: 0,
            state: vec![nodes[i]],
            value: b[i],
        });
    }
    let bx = drift.eval_1d(x);
    let weights: Vec<f64> = (0..size).map(|i| grid.weight(i)).collect();

    // h_mats[l - 1][xp * size + z] = H_l(z, x'), for l = 1..n-1.
    let h_mats: Vec<Vec<f64>> = (1..n)
        .map(|l| {
            let mut m = vec![0.0; size * size];
            m.par_chunks_mut(size).enumerate().for_each(|(ip, row)| {
                let xp = nodes[ip];
                for (iz, out) in row.iter_mut().enumerate() {
                    *out = h_table(table, l, delta, nodes[iz], b[iz], xp, b[ip]);
                }
            });
            m
        })
        .collect();

    // slices[m][k] = term_m(j, x; j + k, .) for k = 1..=n (index 0 unused).
    let frozen = |k: usize| -> Vec<f64> {
        let t = k as f64 * delta;
        nodes
            .iter()
            .zip(&b)
            .map(|(z, bz)| table.eval(t, z - x - bz * t))
            .collect()
    };
    let mut slices: Vec<Vec<Vec<f64>>> = Vec::with_capacity(k_max + 1);
    slices.push((0..=n).map(|k| if k == 0 { Vec::new() } else { frozen(k) }).collect());
    for m in 1..=k_max {
        let prev = &slices[m - 1];
        let mut cur: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
        for (k_end, slot) in cur.iter_mut().enumerate().skip(1) {
            // Only k_end >= m can be non-zero; still computed for uniformity.
            let mut out = vec![0.0; size];
            out.par_iter_mut().enumerate().for_each(|(ip, o)| {
                let xp = nodes[ip];
                let mut acc = 0.0;
                if m == 1 {
                    acc += h_table(table, k_end, delta, x, bx, xp, b[ip]);
                }
                for k in 1..k_end {
                    let h = &h_mats[k_end - k - 1][ip * size..(ip + 1) * size];
                    let f = &prev[k];
                    let mut s = 0.0;
                    for iz in 0..size {
                        s += weights[iz] * f[iz] * h[iz];
                    }
                    acc += s;
                }
                *o = delta * acc;
            });
            *slot = out;
        }
        slices.push(cur);
    }

    let one_row = |values: Vec<f64>| KernelGrid {
        starts: vec![x],
        x_nodes: nodes.clone(),
        j,
        j_prime,
        delta,
        values,
    };
    let terms: Vec<KernelGrid> = slices.iter().map(|s| one_row(s[n].clone())).collect();
    let mut partial = vec![0.0; size];
    for t in &terms {
        for (p, v) in partial.iter_mut().zip(&t.values) {
            *p += v;
        }
    }
    let horizon = n as f64 * delta;
    let reference: Vec<f64> = nodes.iter().map(|xp| table.eval(horizon, xp - x)).collect();
    let mass = grid.integrate(&partial);
    let truncation_mass = tail_mass(table, horizon, grid.half_width - x.abs() - drift.sup_norm * horizon);
    let partial_sum = one_row(partial);
    if !partial_sum.is_finite() {
        return Err(Error::Unstable("parametrix series produced non-finite values".into()));
    }
    Ok(SeriesAccumulator {
        alpha: params.alpha(),
        drift: drift.name.clone(),
        drift_sup: drift.sup_norm,
        start: x,
        j,
        j_prime,
        delta,
        k_max,
        grid: grid.clone(),
        terms,
        partial_sum,
        truncation_mass,
        mass,
        reference,
    })
}

/// `P(|L_t| > r)` from the tabulated kernel.
fn tail_mass(table: &DensityTable, t: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    let g = SpaceGrid::new(r, 1e-3 * table.params().length_scale(t)).expect("positive radius");
    let inside: Vec<f64> = g.nodes.iter().map(|y| table.eval(t, *y)).collect();
    (1.0 - g.integrate(&inside)).max(0.0)
}

/// Density of the EM chain after `n` steps from `x`, by applying the one-step
/// kernel `p(delta, x' - z - b(z) delta)` `n` times on the grid.
pub fn em_density_direct(
    n: usize,
    x: f64,
    delta: f64,
    drift: &DriftSpec,
    table: &DensityTable,
    grid: &SpaceGrid,
) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("need at least one step");
    }
    let nodes = &grid.nodes;
    let size = nodes.len();
    let b: Vec<f64> = nodes.iter().map(|z| drift.eval_1d(*z)).collect();
    let bx = drift.eval_1d(x);
    let mut q: Vec<f64> = nodes.iter().map(|xp| table.eval(delta, xp - x - bx * delta)).collect();
    for _ in 1..n {
        let wq: Vec<f64> = (0..size).map(|i| grid.weight(i) * q[i]).collect();
        q = nodes
            .par_iter()
            .map(|xp| {
                (0..size)
                    .map(|iz| wq[iz] * table.eval(delta, xp - nodes[iz] - b[iz] * delta))
                    .sum()
            })
            .collect();
    }
    Ok(q)
}

/// Per-term sup ratios against the Gamma bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRatios {
    /// `sup_{x'} |term_m(x')| / (gamma_bound_factor(m) p(T, x' - x))` over the interior.
    pub ratios: Vec<f64>,
    /// `sup_{x'} |term_{m+1}| / sup_{x'} |term_m|`.
    pub successive: Vec<f64>,
    /// `max(ratio_0, ratio_m^(1/m))`.
    pub fitted_c: f64,
}

pub fn term_ratios(series: &SeriesAccumulator) -> TermRatios {
    let t = series.horizon();
    let interior: Vec<usize> = series.interior().collect();
    let ratios: Vec<f64> = series
        .terms
        .iter()
        .enumerate()
        .map(|(m, term)| {
            let bound = gamma_bound_factor(m, series.drift_sup, t, series.alpha);
            interior
                .iter()
                .map(|&i| term.values[i].abs() / (bound * series.reference[i]))
                .fold(0.0, f64::max)
        })
        .collect();
    let sups: Vec<f64> = series
        .terms
        .iter()
        .map(|term| interior.iter().map(|&i| term.values[i].abs()).fold(0.0, f64::max))
        .collect();
    let successive = sups.windows(2).map(|w| w[1] / w[0]).collect();
    let fitted_c = ratios
        .iter()
        .enumerate()
        .map(|(m, r)| if m == 0 { *r } else { r.powf(1.0 / m as f64) })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    TermRatios {
        ratios,
        successive,
        fitted_c,
    }
}

/// Heat-kernel domination of the partial sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub name: String,
    pub grid_description: String,
    /// `sup_{|x'-x| <= L/2} partial_sum(x') / p(T, x' - x)`.
    pub observed_constant: f64,
    pub term_ratios: TermRatios,
    /// `sum_{m <= k_max} [C T^(1-1/alpha) Gamma(1-1/alpha) ||b||]^m / Gamma(1 + m(1-1/alpha))` with the fitted `C`.
    pub mittag_leffler_majorant: f64,
    pub mass: f64,
    pub truncation_mass: f64,
    pub pass: bool,
    pub tolerance_note: String,
}

/// Compares the partial sum with the heat kernel at the same horizon. The
/// denominator is evaluated by quadrature, independently of the table used
/// to build the series.
pub fn check_domination(series: &SeriesAccumulator, params: &StableParams) -> Result<DominationReport> {
    let t = series.horizon();
    let interior: Vec<usize> = series.interior().collect();
    let ratios: Vec<f64> = interior
        .par_iter()
        .map(|&i| {
            density_1d(params, t, series.grid.nodes[i] - series.start)
                .map(|p| series.partial_sum.values[i] / p)
        })
        .collect::<Result<_>>()?;
    let observed = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tr = term_ratios(series);
    let e = 1.0 - 1.0 / series.alpha;
    let ml = mittag_leffler_partial_sum(
        tr.fitted_c * t.powf(e) * gamma(e) * series.drift_sup,
        series.alpha,
        series.k_max,
    );
    let pass = observed.is_finite() && observed > 0.0 && observed <= ml * (1.0 + 1e-9);
    Ok(DominationReport {
        name: "DOMINATION".into(),
        grid_description: format!(
            "L = {}, h = {:.5}, delta = {}, steps = {}, k_max = {}, x = {}",
            series.grid.half_width,
            series.grid.spacing,
            series.delta,
            series.j_prime - series.j,
            series.k_max,
            series.start
        ),
        observed_constant: observed,
        term_ratios: tr,
        mittag_leffler_majorant: ml,
        mass: series.mass,
        truncation_mass: series.truncation_mass,
        pass,
        tolerance_note: "finite, positive and below the Mittag-Leffler majorant with the fitted constant".into(),
    })
}

/// One histogram bin compared against the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinComparison {
    pub lo: f64,
    pub hi: f64,
    pub series_probability: f64,
    pub mc_probability: f64,
    pub mc_std_error: f64,
    /// `|series - mc| / mc`; `None` below the probability floor.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub bins: Vec<BinComparison>,
    pub n_samples: usize,
    pub probability_floor: f64,
    pub tolerance: f64,
    pub max_relative_error: f64,
    pub pass: bool,
}

impl HistogramReport {
    pub const CSV_HEADER: [&'static str; 6] = [
        "lo",
        "hi",
        "series_probability",
        "mc_probability",
        "mc_std_error",
        "relative_error",
    ];

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.bins
            .iter()
            .map(|b| {
                vec![
                    format!("{}", b.lo),
                    format!("{}", b.hi),
                    format!("{:.8e}", b.series_probability),
                    format!("{:.8e}", b.mc_probability),
                    format!("{:.8e}", b.mc_std_error),
                    b.relative_error.map(|r| format!("{r:.6}")).unwrap_or_default(),
                ]
            })
            .collect()
    }
}

/// Bins `samples` into `bins` equal cells on `[lo, hi]` and compares each cell
/// with the series probability, on cells whose empirical probability exceeds
/// `probability_floor`.
pub fn compare_histogram(
    series: &SeriesAccumulator,
    samples: &[f64],
    range: (f64, f64),
    bins: usize,
    probability_floor: f64,
    tolerance: f64,
) -> Result<HistogramReport> {
    let (lo, hi) = range;
    if bins == 0 || hi <= lo || samples.is_empty() {
        return invalid("histogram needs bins, a non-empty range and samples");
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in samples {
        if *x >= lo && *x < hi {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    let n = samples.len() as f64;
    let cells: Vec<BinComparison> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let a = lo + i as f64 * width;
            let b = a + width;
            let q = *c as f64 / n;
            let sp = series.probability(a, b);
            BinComparison {
                lo: a,
                hi: b,
                series_probability: sp,
                mc_probability: q,
                mc_std_error: (q * (1.0 - q) / n).sqrt(),
                relative_error: (q > probability_floor).then(|| (sp - q).abs() / q),
            }
        })
        .collect();
    let max_relative_error = cells
        .iter()
        .filter_map(|c| c.relative_error)
        .fold(0.0, f64::max);
    Ok(HistogramReport {
        bins: cells,
        n_samples: samples.len(),
        probability_floor,
        tolerance,
        max_relative_error,
        pass: max_relative_error < tolerance,
    })
}

/// Domination constants at fixed horizon over several step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub deltas: Vec<f64>,
    pub constants: Vec<f64>,
    /// `(max - min) / min` of the constants.
    pub variation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs [`check_domination`] for each step with `T / delta` steps.
pub fn delta_uniformity(
    params: &StableParams,
    drift: &DriftSpec,
    x: f64,
    horizon: f64,
    deltas: &[f64],
    k_max: usize,
    tolerance: f64,
) -> Result<UniformityReport> {
    let table = DensityTable::new(params)?;
    let mut constants = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let n = crate::engine::steps_for(horizon, delta);
        if ((n as f64) * delta - horizon).abs() > 1e-9 * horizon {
            return invalid(format!("horizon {horizon} is not a multiple of {delta}"));
        }
        let grid = SpaceGrid::standard(params, delta, horizon, 1)?;
        let s = parametrix_series_with(0, n, x, delta, drift, &table, k_max.min(n), &grid)?;
        constants.push(check_domination(&s, params)?.observed_constant);
    }
    let max = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = (max - min) / min;
    Ok(UniformityReport {
        deltas: deltas.to_vec(),
        constants,
        variation,
        tolerance,
        pass: min > 0.0 && variation < tolerance,
    })
}

/// Relative change allowed in each term ratio when the grid is refined.
pub const RATIO_GRID_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaMajorantReport {
    pub ratios: Vec<f64>,
    pub refined_ratios: Vec<f64>,
    pub max_relative_change: f64,
    pub fitted_c: f64,
    pub mittag_leffler_majorant: f64,
    pub pass: bool,
}

/// Per-term sup ratios on the standard grid and on a grid with half the spacing.
pub fn gamma_majorant_check(
    params: &StableParams,
    drift: &DriftSpec,
    x: f64,
    delta: f64,
    n_steps: usize,
    k_max: usize,
) -> Result<GammaMajorantReport> {
    let table = DensityTable::new(params)?;
    let horizon = n_steps as f64 * delta;
    let run = |refinement: usize| -> Result<TermRatios> {
        let grid = SpaceGrid::standard(params, delta, horizon, refinement)?;
        let s = parametrix_series_with(0, n_steps, x, delta, drift, &table, k_max, &grid)?;
        Ok(term_ratios(&s))
    };
    let coarse = run(1)?;
    let fine = run(2)?;
    let max_relative_change = coarse
        .ratios
        .iter()
        .zip(&fine.ratios)
        .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) })
        .fold(0.0, f64::max);
    let e = 1.0 - 1.0 / params.alpha();
    let ml = mittag_leffler_partial_sum(
        coarse.fitted_c * horizon.powf(e) * gamma(e) * drift.sup_norm,
        params.alpha(),
        k_max,
    );
    let finite = coarse.ratios.iter().chain(&fine.ratios).all(|r| r.is_finite());
    Ok(GammaMajorantReport {
        pass: finite && ml.is_finite() && max_relative_change <= RATIO_GRID_TOLERANCE,
        ratios: coarse.ratios,
        refined_ratios: fine.ratios,
        max_relative_change,
        fitted_c: coarse.fitted_c,
        mittag_leffler_majorant: ml,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> StableParams {
        StableParams::new(1.5, 1).unwrap()
    }

    #[test]
    fn mittag_leffler_oracle() {
        let v = mittag_leffler_partial_sum(0.5, 1.5, 10);
        assert!((v - 2.047_148_269_011_468).abs() < 1e-12, "{v}");
    }

    #[test]
    fn grid_is_symmetric() {
        let g = SpaceGrid::standard(&params(), 0.1, 1.0, 1).unwrap();
        assert_eq!(g.nodes[0], -g.nodes[g.len() - 1]);
        assert!(g.spacing <= 0.05);
        assert_eq!(g.half_width, 10.0);
        let mid = g.len() / 2;
        assert!(g.nodes[mid].abs() < 1e-12);
    }

    #[test]
    fn constant_drift_has_no_correction() {
        let d = DriftSpec::constant(0.7, 1);
        for (x, xp) in [(0.0, 0.3), (1.0, -2.0)] {
            assert_eq!(h_kernel(0, x, 1, xp, 0.1, &d, &params()).unwrap(), 0.0);
            assert_eq!(h_kernel(2, x, 5, xp, 0.1, &d, &params()).unwrap(), 0.0);
        }
    }

    #[test]
    fn frozen_density_recentres_exactly() {
        let d = DriftSpec::constant(0.7, 1);
        let v = frozen_density(0, 0.2, 3, 0.2 + 0.7 * 0.3, 0.1, &d, &params()).unwrap();
        let mode = crate::density::density_1d_at_origin(&params(), 0.3);
        assert!((v - mode).abs() < 1e-9);
        let z = frozen_density(0, 0.2, 3, 1.0, 0.1, &DriftSpec::zero(1), &params()).unwrap();
        assert!((z - density_1d(&params(), 0.3, 0.8).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn convolution_with_zero_and_point_mass() {
        let g = SpaceGrid::new(5.0, 0.01).unwrap();
        let f = |k: usize, z: f64| (k as f64 + 1.0) * (-z * z).exp();
        assert_eq!(conv_delta(f, |_, _| 0.0, 0, 4, 0.1, &g, None), 0.0);
        let z0 = g.nodes[300];
        let k0 = 2;
        let dirac = |k: usize, z: f64| {
            if k == k0 && (z - z0).abs() < 1e-12 {
                1.0 / g.spacing
            } else {
                0.0
            }
        };
        let v = conv_delta(f, dirac, 0, 4, 0.1, &g, None);
        assert!((v - 0.1 * f(k0, z0)).abs() < 1e-12);
    }

    #[test]
    fn one_step_series_is_the_em_kernel() {
        let p = params();
        let d = DriftSpec::sin(1);
        let g = SpaceGrid::standard(&p, 0.1, 0.1, 1).unwrap();
        let s = parametrix_series(0, 1, 0.3, 0.1, &d, &p, 1, &g).unwrap();
        let table = DensityTable::new(&p).unwrap();
        for (i, xp) in g.nodes.iter().enumerate() {
            let direct = table.eval(0.1, xp - 0.3 - 0.3f64.sin() * 0.1);
            assert!((s.partial_sum.values[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn full_series_matches_iterated_kernel() {
        let p = params();
        let d = DriftSpec::sin(1);
        let table = DensityTable::new(&p).unwrap();
        let g = SpaceGrid::new(10.0, 0.05).unwrap();
        let s = parametrix_series_with(0, 4, 0.0, 0.1, &d, &table, 4, &g).unwrap();
        let direct = em_density_direct(4, 0.0, 0.1, &d, &table, &g).unwrap();
        let l1: f64 = g.integrate(
            &s.partial_sum
                .values
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>(),
        );
        assert!(l1 < 1e-3, "{l1}");
    }

    #[test]
    fn zero_drift_collapses_to_heat_kernel() {
        let p = params();
        let g = SpaceGrid::standard(&p, 0.1, 0.5, 1).unwrap();
        let s = parametrix_series(0, 5, 0.0, 0.1, &DriftSpec::zero(1), &p, 3, &g).unwrap();
        for t in &s.terms[1..] {
            assert!(t.values.iter().all(|v| *v == 0.0));
        }
        let r = check_domination(&s, &p).unwrap();
        assert!((r.observed_constant - 1.0).abs() < 1e-4, "{}", r.observed_constant);
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = params();
        let g = SpaceGrid::new(10.0, 0.05).unwrap();
        let d = DriftSpec::sin(1);
        assert!(parametrix_series(2, 2, 0.0, 0.1, &d, &p, 0, &g).is_err());
        assert!(parametrix_series(0, 2, 0.0, 0.1, &d, &p, 3, &g).is_err());
        assert!(h_kernel(3, 0.0, 1, 0.0, 0.1, &d, &p).is_err());
    }

    #[test]
    fn integrate_between_matches_trapezoid_on_nodes() {
        let g = SpaceGrid::new(2.0, 0.1).unwrap();
        let v: Vec<f64> = g.nodes.iter().map(|x| 1.0 + x).collect();
        assert!((g.integrate_between(&v, -2.0, 2.0) - g.integrate(&v)).abs() < 1e-12);
        assert!((g.integrate_between(&v, 0.05, 0.25) - (0.2 + 0.5 * (0.25f64.powi(2) - 0.05f64.powi(2)))).abs() < 1e-12);
    }
}
