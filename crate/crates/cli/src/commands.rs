use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::Table as TomlTable;

use stable_em::convergence::{rate_sweep, run_rate_experiment, RateExperiment, SweepEntry};
use stable_em::density::{
    check_kernel_bounds, density_1d, density_mc, theta_curve, BoundGrid, BoundReport, KernelBound,
};
use stable_em::drift::DriftSpec;
use stable_em::engine::{em_terminal_values, EmConfig};
use stable_em::estimates::{
    drift_increment_error_with, khasminskii_check, krylov_check_with, TestFunctionSpec, DEFAULT_SUBSTEPS,
};
use stable_em::levy::NoiseSampler;
use stable_em::parametrix::{
    check_domination, compare_histogram, parametrix_series, DominationReport, HistogramReport, SeriesAccumulator,
    SpaceGrid,
};
use stable_em::report::{unix_now, write_outputs, RunRecord, Table, Tabular};
use stable_em::selftest::{self, Check};
use stable_em::{RngStream, StableParams};

use crate::config::{self, *};
use crate::{Cli, Command};

struct Ctx {
    file: Option<TomlTable>,
    out: PathBuf,
    print_config: bool,
    started: f64,
}

impl Ctx {
    fn resolve<C, F>(&self, command: &str, flags: &F) -> Result<C>
    where
        C: Serialize + DeserializeOwned + Default,
        F: Serialize,
    {
        config::resolve(command, self.file.as_ref(), flags)
    }

    fn finish<C: Serialize, R: Serialize + Tabular>(
        &self,
        experiment: &str,
        seed: u64,
        config: &C,
        report: &R,
        pass: Option<bool>,
    ) -> Result<Option<bool>> {
        let run = RunRecord {
            experiment,
            master_seed: seed,
            config,
            report,
            pass,
            started_unix: self.started,
        };
        write_outputs(&self.out, &run)?;
        let verdict = match pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "done",
        };
        println!("{experiment}: {verdict} (outputs in {})", self.out.display());
        Ok(pass)
    }
}

/// Runs the selected command. `None` means the command has no pass criterion.
pub fn run(cli: &Cli) -> Result<Option<bool>> {
    let name = cli.command.name();
    let ctx = Ctx {
        file: cli.config.as_deref().map(config::read_file).transpose()?,
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name)),
        print_config: cli.print_config,
        started: unix_now(),
    };
    macro_rules! dispatch {
        ($flags:expr, $cfg:ty, $body:ident) => {{
            let cfg: $cfg = ctx.resolve(name, $flags)?;
            if ctx.print_config {
                print!("{}", config::render(name, &cfg)?);
                return Ok(None);
            }
            $body(&ctx, &cfg)
        }};
    }
    match &cli.command {
        Command::Sample(f) => dispatch!(f, SampleConfig, sample),
        Command::Density(f) => dispatch!(f, DensityConfig, density),
        Command::Theta(f) => dispatch!(f, ThetaConfig, theta),
        Command::Parametrix(f) => dispatch!(f, ParametrixConfig, parametrix),
        Command::Krylov(f) => dispatch!(f, KrylovConfig, krylov),
        Command::Khasminskii(f) => dispatch!(f, KhasminskiiConfig, khasminskii),
        Command::Driftinc(f) => dispatch!(f, DriftincConfig, driftinc),
        Command::Converge(f) => dispatch!(f, ConvergeConfig, converge),
        Command::Sweep(f) => dispatch!(f, SweepConfig, sweep),
        Command::Selftest(f) => dispatch!(f, SelftestConfig, run_selftest),
    }
}

fn sample(ctx: &Ctx, c: &SampleConfig) -> Result<Option<bool>> {
    let params = StableParams::extended(c.alpha, c.dim)?;
    let sampler = NoiseSampler::new(params);
    let mut rng = RngStream::new(c.seed, 0).generator();
    let mut table = match c.kind.as_str() {
        "increment" => Table::new(std::iter::once("index".to_string()).chain((1..=c.dim).map(|i| format!("x{i}")))),
        "subordinator" => Table::new(["index", "s"]),
        other => bail!("unknown sample kind {other:?} (expected increment or subordinator)"),
    };
    let mut buf = vec![0.0; c.dim];
    for i in 0..c.n {
        let mut row = vec![i.to_string()];
        if c.kind == "increment" {
            sampler.increment_into(c.dt, &mut rng, &mut buf);
            row.extend(buf.iter().map(|v| v.to_string()));
        } else {
            row.push(sampler.subordinator(c.dt, &mut rng).to_string());
        }
        table.push(row);
    }
    ctx.finish("sample", c.seed, c, &table, None)
}

fn density(ctx: &Ctx, c: &DensityConfig) -> Result<Option<bool>> {
    if !c.bounds.is_empty() {
        return kernel_bounds(ctx, c);
    }
    let params = StableParams::extended(c.alpha, c.dim)?;
    if c.x.is_empty() || !c.x.len().is_multiple_of(c.dim) {
        bail!("x must hold a whole number of {}-dimensional points", c.dim);
    }
    let mut table = Table::new(
        (1..=c.dim)
            .map(|i| format!("x{i}"))
            .chain(["density".to_string(), "std_error".to_string()]),
    );
    for (i, point) in c.x.chunks(c.dim).enumerate() {
        let (value, se) = match c.method.as_str() {
            "quad" => (density_1d(&params, c.t, point[0]).map_err(|e| {
                if c.dim > 1 {
                    anyhow!("quadrature is one-dimensional; use method = \"mc\" ({e})")
                } else {
                    e.into()
                }
            })?, None),
            "mc" => {
                let m = density_mc(&params, c.t, point, c.samples, RngStream::new(c.seed, i as u64))?;
                (m.mean, Some(m.std_error))
            }
            other => bail!("unknown density method {other:?} (expected quad or mc)"),
        };
        match se {
            Some(se) => println!("{value:.10} +- {se:.2e}"),
            None => println!("{value:.10}"),
        }
        let mut row: Vec<String> = point.iter().map(|v| v.to_string()).collect();
        row.push(value.to_string());
        row.push(se.map(|s| s.to_string()).unwrap_or_default());
        table.push(row);
    }
    ctx.finish("density", c.seed, c, &table, None)
}

fn kernel_bounds(ctx: &Ctx, c: &DensityConfig) -> Result<Option<bool>> {
    let params = StableParams::new(c.alpha, c.dim)?;
    let bounds: Vec<KernelBound> = if c.bounds.iter().any(|b| b.eq_ignore_ascii_case("all")) {
        KernelBound::ALL.to_vec()
    } else {
        c.bounds.iter().map(|b| KernelBound::parse(b)).collect::<Result<_, _>>()?
    };
    let grid = BoundGrid::default();
    let mut reports: Vec<BoundReport> = Vec::new();
    for b in bounds {
        let r = check_kernel_bounds(&params, b, &grid)?;
        println!(
            "{:<11} {} observed {:.4e} refined {:.4e}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.observed_constant,
            r.refined_constant
        );
        reports.push(r);
    }
    let pass = reports.iter().all(|r| r.pass);
    ctx.finish("bounds", grid.seed, c, &reports, Some(pass))
}

fn theta(ctx: &Ctx, c: &ThetaConfig) -> Result<Option<bool>> {
    let params = StableParams::extended(c.alpha, c.dim)?;
    let curve = theta_curve(&c.r, &params, c.samples, RngStream::new(c.seed, 0))?;
    let mut table = Table::new(["r", "theta", "std_error"]);
    for (r, e) in curve.arguments.iter().zip(&curve.estimates) {
        println!("Theta({r}) = {:.6} +- {:.1e}", e.mean, e.std_error);
        table.push(vec![r.to_string(), e.mean.to_string(), e.std_error.to_string()]);
    }
    ctx.finish("theta", c.seed, c, &table, None)
}

/// Series table plus the domination and histogram verdicts.
#[derive(Serialize)]
struct ParametrixOutput {
    series: SeriesAccumulator,
    domination: DominationReport,
    histogram: Option<HistogramReport>,
}

impl Tabular for ParametrixOutput {
    fn csv_header(&self) -> Vec<String> {
        self.series.csv_header()
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.series.csv_rows()
    }
}

fn parametrix(ctx: &Ctx, c: &ParametrixConfig) -> Result<Option<bool>> {
    let params = StableParams::new(c.alpha, 1)?;
    let drift = DriftSpec::parse(&c.drift, 1)?;
    let horizon = c.steps as f64 * c.delta;
    let grid = SpaceGrid::standard(&params, c.delta, horizon, c.refinement)?;
    let series = parametrix_series(0, c.steps, c.x0, c.delta, &drift, &params, c.k_max, &grid)?;
    let domination = check_domination(&series, &params)?;
    println!(
        "domination constant {:.4} (mass {:.5}, truncation {:.2e}): {}",
        domination.observed_constant,
        domination.mass,
        domination.truncation_mass,
        if domination.pass { "PASS" } else { "FAIL" }
    );
    let histogram = if c.paths > 0 {
        let range = match c.range.as_slice() {
            [lo, hi] => (*lo, *hi),
            _ => bail!("range needs exactly two values"),
        };
        let cfg = EmConfig::new(params, drift, vec![c.x0], c.delta, horizon)?;
        let xs = em_terminal_values(&cfg, c.paths, RngStream::new(c.seed, 0))?;
        let h = compare_histogram(&series, &xs, range, c.bins, c.floor, c.tolerance)?;
        println!(
            "histogram max relative error {:.4} (tolerance {}): {}",
            h.max_relative_error,
            h.tolerance,
            if h.pass { "PASS" } else { "FAIL" }
        );
        Some(h)
    } else {
        None
    };
    let pass = domination.pass && histogram.as_ref().is_none_or(|h| h.pass);
    let out = ParametrixOutput {
        series,
        domination,
        histogram,
    };
    ctx.finish("parametrix", c.seed, c, &out, Some(pass))
}

fn report_line(kind: &str, pass: bool, exponent: Option<f64>, constant: Option<f64>) {
    let mut line = format!("{kind}: {}", if pass { "PASS" } else { "FAIL" });
    if let Some(e) = exponent {
        line.push_str(&format!(", fitted exponent {e:.4}"));
    }
    if let Some(c) = constant {
        line.push_str(&format!(", fitted constant {c:.4}"));
    }
    println!("{line}");
}

fn krylov(ctx: &Ctx, c: &KrylovConfig) -> Result<Option<bool>> {
    let params = StableParams::new(c.alpha, c.x0.len())?;
    let drift = DriftSpec::parse(&c.drift, c.x0.len())?;
    let cfg = EmConfig::new(params, drift, c.x0.clone(), c.delta, c.horizon)?;
    let f = TestFunctionSpec::parse(&c.function, c.q, c.x0.len(), true)?;
    let r = krylov_check_with(&cfg, &f, &c.spans, c.paths, c.substeps, RngStream::new(c.seed, 0))?;
    report_line("krylov", r.pass, r.fitted_exponent, r.fitted_constant);
    ctx.finish("krylov", c.seed, c, &r, Some(r.pass))
}

fn khasminskii(ctx: &Ctx, c: &KhasminskiiConfig) -> Result<Option<bool>> {
    let dim = c.x0.len();
    let params = StableParams::new(c.alpha, dim)?;
    let drift = DriftSpec::parse(&c.drift, dim)?;
    let cfg = EmConfig::new(params, drift, c.x0.clone(), c.delta, c.horizon)?;
    let f = TestFunctionSpec::parse(&c.function, c.q, dim, true)?;
    let constant = match c.krylov_constant {
        Some(k) => k,
        None => {
            let k = krylov_check_with(&cfg, &f, &c.spans, c.paths, DEFAULT_SUBSTEPS, RngStream::new(c.seed, 1))?;
            k.fitted_constant
                .ok_or_else(|| anyhow!("the Krylov run produced no fitted constant"))?
        }
    };
    let r = khasminskii_check(&cfg, &f, &c.lambdas, constant, c.paths, RngStream::new(c.seed, 0))?;
    report_line("khasminskii", r.pass, None, Some(constant));
    ctx.finish("khasminskii", c.seed, c, &r, Some(r.pass))
}

fn driftinc(ctx: &Ctx, c: &DriftincConfig) -> Result<Option<bool>> {
    let dim = c.x0.len();
    let params = StableParams::new(c.alpha, dim)?;
    let drift = DriftSpec::parse(&c.drift, dim)?;
    let first = *c.deltas.first().ok_or_else(|| anyhow!("deltas must not be empty"))?;
    let cfg = EmConfig::new(params, drift, c.x0.clone(), first, c.horizon)?;
    let r = drift_increment_error_with(&cfg, &c.deltas, c.paths, c.resolution, c.epsilon, RngStream::new(c.seed, 0))?;
    report_line("driftinc", r.pass, r.fitted_exponent, None);
    ctx.finish("driftinc", c.seed, c, &r, Some(r.pass))
}

fn converge(ctx: &Ctx, c: &ConvergeConfig) -> Result<Option<bool>> {
    let dim = c.x0.len();
    let params = StableParams::new(c.alpha, dim)?;
    let drift = DriftSpec::parse(&c.drift, dim)?;
    let mut exp = RateExperiment::new(params, drift, c.eta, c.deltas.clone(), c.horizon, c.paths, c.seed)?;
    exp.x0 = c.x0.clone();
    exp.epsilon = c.epsilon;
    if let Some(d) = c.delta_ref {
        exp.delta_ref = d;
    }
    exp.validate()?;
    let r = run_rate_experiment(&exp)?;
    match (r.slope, r.slope_ci) {
        (Some(s), Some((lo, hi))) => println!(
            "slope {s:.4} CI ({lo:.4}, {hi:.4}), theoretical {:.4}: {}",
            r.theoretical_slope,
            if r.pass { "PASS" } else { "FAIL" }
        ),
        _ => println!("error vanishes identically: {}", if r.pass { "PASS" } else { "FAIL" }),
    }
    ctx.finish("converge", c.seed, c, &r, Some(r.pass))
}

#[derive(Serialize)]
struct SweepOutput {
    entries: Vec<SweepEntry>,
}

impl Tabular for SweepOutput {
    fn csv_header(&self) -> Vec<String> {
        ["alpha", "beta", "regime", "slope", "ci_lo", "ci_hi", "theoretical_slope", "pass", "skipped"]
            .map(String::from)
            .to_vec()
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        self.entries
            .iter()
            .map(|e| {
                let r = e.report.as_ref();
                vec![
                    e.alpha.to_string(),
                    e.beta.to_string(),
                    r.map(|r| r.regime.name().to_string()).unwrap_or_default(),
                    opt(r.and_then(|r| r.slope)),
                    opt(r.and_then(|r| r.slope_ci).map(|c| c.0)),
                    opt(r.and_then(|r| r.slope_ci).map(|c| c.1)),
                    opt(r.map(|r| r.theoretical_slope)),
                    r.map(|r| r.pass.to_string()).unwrap_or_default(),
                    e.skipped.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }
}

fn sweep(ctx: &Ctx, c: &SweepConfig) -> Result<Option<bool>> {
    let base_drift = match c.family.as_str() {
        "holder" => DriftSpec::holder(1.0, 1)?,
        "weierstrass" => DriftSpec::weierstrass(1.0, 1)?,
        other => bail!("unknown drift family {other:?} (expected holder or weierstrass)"),
    };
    let base = RateExperiment::new(StableParams::new(1.5, 1)?, base_drift, c.eta, c.deltas.clone(), c.horizon, c.paths, c.seed)?;
    let entries = rate_sweep(&base, &c.alphas, &c.betas)?;
    for e in &entries {
        match (&e.report, &e.skipped) {
            (Some(r), _) => println!(
                "alpha {} beta {}: slope {} (theoretical {:.4}) {}",
                e.alpha,
                e.beta,
                r.slope.map_or("-".into(), |s| format!("{s:.4}")),
                r.theoretical_slope,
                if r.pass { "PASS" } else { "FAIL" }
            ),
            (None, Some(why)) => println!("alpha {} beta {}: skipped, {why}", e.alpha, e.beta),
            (None, None) => {}
        }
    }
    let pass = entries.iter().filter_map(|e| e.report.as_ref()).all(|r| r.pass);
    ctx.finish("sweep", c.seed, c, &SweepOutput { entries }, Some(pass))
}

#[derive(Serialize)]
struct SelftestOutput {
    checks: Vec<Check>,
}

impl Tabular for SelftestOutput {
    fn csv_header(&self) -> Vec<String> {
        selftest::as_table(&self.checks).header
    }
    fn csv_rows(&self) -> Vec<Vec<String>> {
        selftest::as_table(&self.checks).rows
    }
}

fn run_selftest(ctx: &Ctx, c: &SelftestConfig) -> Result<Option<bool>> {
    let checks = selftest::run(c.seed);
    for ch in &checks {
        let verdict = if ch.pass { "PASS" } else { "FAIL" };
        if ch.detail.is_empty() {
            println!("{verdict} {:<12} {}", ch.module, ch.name);
        } else {
            println!("{verdict} {:<12} {}: {}", ch.module, ch.name, ch.detail);
        }
    }
    let pass = checks.iter().all(|ch| ch.pass);
    ctx.finish("selftest", c.seed, c, &SelftestOutput { checks }, Some(pass))
}
