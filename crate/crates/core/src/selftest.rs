//! Quick degenerate-case checks across every module, each with a known answer.

use serde::{Deserialize, Serialize};

use crate::convergence::{rate_sweep, run_rate_experiment, RateExperiment};
use crate::density::{check_kernel_bounds, density_1d, density_mc, theta, BoundGrid, DensityTable, KernelBound};
use crate::drift::DriftSpec;
use crate::engine::{coupled_em, em_path, frozen_path, noise_states, EmConfig};
use crate::error::Result;
use crate::estimates::{drift_increment_error, khasminskii_check, krylov_check, TestFunctionSpec};
use crate::levy::{sample_noise_path, sample_stable_increment, NoiseSampler, NoisePath};
use crate::params::StableParams;
use crate::parametrix::{
    check_domination, conv_delta, frozen_density, h_kernel, parametrix_series, SpaceGrid,
};
use crate::report::{csv_string, Table};
use crate::rng::{par_samples, RngStream};
use crate::stats::{chi_square_uniform, ks_two_sample, median};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub module: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(module: &str, name: &str, pass: bool, detail: String) -> Check {
    Check {
        module: module.into(),
        name: name.into(),
        pass,
        detail,
    }
}

fn p15() -> Result<StableParams> {
    StableParams::new(1.5, 1)
}

fn sampling(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let p = p15()?;
    let s = NoiseSampler::new(p);
    let dt = 1e-3f64;
    let small = par_samples(RngStream::new(seed, 1), 20_000, |g| s.subordinator(dt, g));
    let unit = par_samples(RngStream::new(seed, 2), 20_000, |g| s.subordinator(1.0, g));
    let ratio = median(&small) / (dt.powf(2.0 / 1.5) * median(&unit));
    out.push(check("levy", "median scaling", (ratio - 1.0).abs() < 0.05, format!("ratio {ratio:.4}")));

    let s2 = NoiseSampler::new(StableParams::new(1.5, 2)?);
    let angles = par_samples(RngStream::new(seed, 3), 20_000, |g| {
        let mut o = [0.0; 2];
        s2.increment_into(1.0, g, &mut o);
        o[1].atan2(o[0])
    });
    let mut counts = [0u64; 12];
    for a in angles {
        let b = ((a + std::f64::consts::PI) / std::f64::consts::TAU * 12.0) as usize;
        counts[b.min(11)] += 1;
    }
    let chi = chi_square_uniform(&counts);
    out.push(check("levy", "rotational symmetry", chi < 24.72, format!("chi-square {chi:.2} (11 df)")));

    let xs = par_samples(RngStream::new(seed, 4), 20_000, |g| {
        let mut o = [0.0];
        s.increment_into(1.0, g, &mut o);
        o[0]
    });
    let pos = xs.iter().filter(|x| **x > 0.0).count() as f64 / xs.len() as f64;
    let m = median(&xs);
    out.push(check(
        "levy",
        "sign balance",
        (pos - 0.5).abs() < 3.0 * (0.25 / xs.len() as f64).sqrt() * 1.1 && m.abs() < 0.05,
        format!("fraction positive {pos:.4}, median {m:.4}"),
    ));

    let one: Vec<f64> = (0..5000u64)
        .map(|i| sample_noise_path(&p, 0.4, 1, &mut RngStream::new(seed, 10).path(i).generator()).map(|x| x.as_flat()[0]))
        .collect::<Result<_>>()?;
    let four: Vec<f64> = (0..5000u64)
        .map(|i| {
            sample_noise_path(&p, 0.1, 4, &mut RngStream::new(seed, 11).path(i).generator())
                .and_then(|x| x.block_sums(4))
                .map(|x| x.as_flat()[0])
        })
        .collect::<Result<_>>()?;
    let ks = ks_two_sample(&one, &four);
    out.push(check("levy", "increment additivity", ks.p_value > 0.01, format!("KS p = {:.3}", ks.p_value)));

    let a = sample_noise_path(&p, 0.3, 1, &mut RngStream::new(seed, 12).generator())?;
    let b = sample_stable_increment(&p, 0.3, &mut RngStream::new(seed, 12).generator())?;
    out.push(check("levy", "one-step path", a.as_flat() == b.as_slice(), String::new()));

    let c = sample_noise_path(&p, 0.1, 50, &mut RngStream::new(seed, 13).generator())?;
    let d = sample_noise_path(&p, 0.1, 50, &mut RngStream::new(seed, 13).generator())?;
    out.push(check("levy", "determinism", c == d, String::new()));
    Ok(())
}

fn density(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let cauchy = density_1d(&StableParams::extended(1.0, 1)?, 1.0, 0.0)?;
    let exact = std::f64::consts::SQRT_2 / std::f64::consts::PI;
    out.push(check("density", "Cauchy mode", (cauchy - exact).abs() < 1e-8, format!("{cauchy:.10}")));

    let p = p15()?;
    let table = DensityTable::new(&p)?;
    let g = SpaceGrid::new(200.0, 0.005)?;
    let v: Vec<f64> = g.nodes.iter().map(|y| table.eval(1.0, *y)).collect();
    let mass = g.integrate(&v);
    out.push(check("density", "normalisation on [-200, 200]", (mass - 1.0).abs() < 1e-4, format!("{mass:.6}")));

    let far = density_mc(&p, 1.0, &[1e4], 2000, RngStream::new(seed, 20))?;
    out.push(check("density", "far field", far.mean < 1e-8, format!("{:.2e}", far.mean)));

    let grid = BoundGrid {
        points: 21,
        ..BoundGrid::default()
    };
    let chap = check_kernel_bounds(&p, KernelBound::Chapman, &grid)?;
    out.push(check("density", "Chapman-Kolmogorov", chap.pass, format!("L1 {:.2e}", chap.observed_constant)));

    let t0 = theta(0.0, &p, 10_000, RngStream::new(seed, 21))?;
    out.push(check("density", "Theta(0) = 1", t0.mean == 1.0, String::new()));
    Ok(())
}

fn engine(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let p = p15()?;
    let noise = sample_noise_path(&p, 0.1, 10, &mut RngStream::new(seed, 30).generator())?;
    let zero = EmConfig::new(p, DriftSpec::zero(1), vec![0.5], 0.1, 1.0)?;
    let path = em_path(&zero, &noise)?;
    out.push(check("engine", "zero drift", path.data == noise_states(&[0.5], &noise), String::new()));

    let cfg = EmConfig::new(p, DriftSpec::constant(0.7, 1), vec![0.5], 0.1, 1.0)?;
    let quiet = NoisePath::zeros(1, 0.1, 10);
    let det = em_path(&cfg, &quiet)?;
    let err = (0..=10)
        .map(|k| (det.state(k)[0] - (0.5 + 0.7 * k as f64 * 0.1)).abs())
        .fold(0.0, f64::max);
    out.push(check("engine", "deterministic Euler", err < 1e-12, format!("{err:.1e}")));

    let sin = EmConfig::new(p, DriftSpec::sin(1), vec![0.0], 0.1, 1.0)?;
    let a = em_path(&sin, &noise)?;
    let b = em_path(&sin, &noise)?;
    out.push(check("engine", "path determinism", a == b, String::new()));

    let fz = frozen_path(&sin, &[0.0], (0, &[0.2]), &noise)?;
    let pure = noise_states(&[0.2], &noise);
    out.push(check("engine", "frozen at a zero of b", fz.data == pure, String::new()));
    let one = NoisePath::zeros(1, 0.1, 1);
    let fz1 = frozen_path(&sin, &[1.0], (0, &[0.2]), &one)?;
    let want = 0.2 + 1f64.sin() * 0.1;
    out.push(check("engine", "frozen one step", (fz1.last()[0] - want).abs() < 1e-15, String::new()));

    let same = coupled_em(&sin, 0.1, RngStream::new(seed, 31))?;
    out.push(check(
        "engine",
        "degenerate nesting",
        same.sup_error == 0.0 && same.path_fine == same.path_coarse,
        String::new(),
    ));
    let z = coupled_em(&zero, 0.0125, RngStream::new(seed, 32))?;
    out.push(check("engine", "zero-drift coupling", z.sup_error == 0.0, String::new()));

    let h = DriftSpec::holder(0.4, 1)?;
    let mut g = RngStream::new(seed, 33).generator();
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        use rand::Rng;
        let x: f64 = g.random_range(-1.0..1.0);
        let y: f64 = g.random_range(-1.0..1.0);
        if x != y {
            worst = worst.max((h.eval_1d(x) - h.eval_1d(y)).abs() / (x - y).abs().powf(0.4));
        }
    }
    out.push(check("drift", "Holder constant", worst <= 2.0, format!("{worst:.3}")));
    out.push(check("drift", "zero sup norm", DriftSpec::zero(1).sup_norm == 0.0, String::new()));
    let s = DriftSpec::sin(1);
    let lip = (0..1000)
        .map(|i| {
            let x = -5.0 + i as f64 * 0.01;
            (s.eval_1d(x + 1e-6) - s.eval_1d(x)).abs() / 1e-6
        })
        .fold(0.0, f64::max);
    out.push(check("drift", "sin Lipschitz", s.sup_norm == 1.0 && lip <= 1.01, format!("{lip:.4}")));
    Ok(())
}

fn parametrix(out: &mut Vec<Check>) -> Result<()> {
    let p = p15()?;
    let zero = DriftSpec::zero(1);
    let c = DriftSpec::constant(0.6, 1);
    let f0 = frozen_density(0, 0.3, 4, 1.1, 0.1, &zero, &p)?;
    out.push(check(
        "parametrix",
        "frozen kernel without drift",
        (f0 - density_1d(&p, 0.4, 0.8)?).abs() < 1e-14,
        String::new(),
    ));
    let fc = frozen_density(0, 0.3, 4, 0.3 + 0.6 * 0.4, 0.1, &c, &p)?;
    let mode = crate::density::density_1d_at_origin(&p, 0.4);
    out.push(check("parametrix", "exact recentring", (fc - mode).abs() < 1e-9, String::new()));
    out.push(check("parametrix", "H vanishes for constant drift", h_kernel(1, 0.2, 4, -0.7, 0.1, &c, &p)? == 0.0, String::new()));

    let g = SpaceGrid::new(5.0, 0.05)?;
    let zero_conv = conv_delta(|_, _| 1.0, |_, _| 0.0, 0, 3, 0.1, &g, None);
    out.push(check("parametrix", "convolution with zero", zero_conv == 0.0, String::new()));
    let (k0, z0) = (1usize, g.nodes[40]);
    let dirac = |k: usize, z: f64| if k == k0 && z == z0 { 1.0 / g.spacing } else { 0.0 };
    let frozen = |k: usize, z: f64| frozen_density(0, 0.0, k.max(1), z, 0.1, &DriftSpec::sin(1), &p).unwrap_or(f64::NAN);
    let pm = conv_delta(frozen, dirac, 0, 3, 0.1, &g, None);
    out.push(check(
        "parametrix",
        "convolution with point mass",
        (pm - 0.1 * frozen(k0, z0)).abs() < 1e-12,
        format!("{pm:.6e}"),
    ));

    let grid = SpaceGrid::standard(&p, 0.1, 0.5, 1)?;
    let s = parametrix_series(0, 5, 0.0, 0.1, &zero, &p, 3, &grid)?;
    let vanish = s.terms[1..].iter().all(|t| t.values.iter().all(|v| *v == 0.0));
    out.push(check("parametrix", "zero drift series", vanish, String::new()));
    let d = check_domination(&s, &p)?;
    out.push(check(
        "parametrix",
        "zero drift domination constant",
        (d.observed_constant - 1.0).abs() < 1e-4,
        format!("{:.8}", d.observed_constant),
    ));
    Ok(())
}

fn estimates(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let p = p15()?;
    let zero = EmConfig::new(p, DriftSpec::zero(1), vec![0.0], 0.01, 0.08)?;
    let ind = TestFunctionSpec::indicator(2.0, 1, false)?;
    let k = krylov_check(&zero, &ind, &[0.04, 0.08], 2000, RngStream::new(seed, 40))?;
    let bounded = k.points.iter().zip(&k.estimates).all(|(s, e)| e.mean <= s * ind.sup_norm + 1e-12);
    out.push(check("estimates", "bounded integrand", bounded, String::new()));

    let cfg = EmConfig::new(p, DriftSpec::sin(1), vec![0.0], 0.05, 1.0)?;
    let gauss = TestFunctionSpec::gaussian(4.0, 1, false)?;
    let kh = khasminskii_check(&cfg, &gauss, &[0.0, 1.0, 2.0], 1.0, 500, RngStream::new(seed, 41))?;
    out.push(check("estimates", "Khasminskii at lambda = 0", kh.estimates[0].mean == 1.0, String::new()));
    let mono = kh.estimates.windows(2).all(|w| w[1].mean >= w[0].mean);
    let trivial = kh
        .points
        .iter()
        .zip(&kh.estimates)
        .all(|(l, e)| e.mean <= (l * 1.0 * gauss.sup_norm).exp() * (1.0 + 1e-12));
    out.push(check("estimates", "Khasminskii monotone and bounded", mono && trivial, String::new()));

    let c = EmConfig::new(p, DriftSpec::constant(0.3, 1), vec![0.0], 0.1, 1.0)?;
    let di = drift_increment_error(&c, &[0.2, 0.1], 50, RngStream::new(seed, 42))?;
    out.push(check(
        "estimates",
        "constant drift increments",
        di.estimates.iter().all(|e| e.mean == 0.0),
        String::new(),
    ));
    Ok(())
}

fn convergence(seed: u64, out: &mut Vec<Check>) -> Result<()> {
    let p = p15()?;
    let z = RateExperiment::new(p, DriftSpec::zero(1), 1.0, vec![0.2, 0.1], 1.0, 50, seed)?;
    let r = run_rate_experiment(&z)?;
    out.push(check("convergence", "zero drift exact", r.exact_zero && r.slope.is_none(), String::new()));

    let base = RateExperiment::new(p, DriftSpec::holder(0.6, 1)?, 1.0, vec![0.2, 0.1], 1.0, 200, seed)?;
    let single = rate_sweep(&base, &[1.5], &[0.6])?;
    let direct = run_rate_experiment(&base)?;
    out.push(check(
        "convergence",
        "single-pair sweep",
        single.len() == 1 && single[0].report.as_ref() == Some(&direct),
        String::new(),
    ));
    let skipped = rate_sweep(&base, &[1.5], &[0.2])?;
    out.push(check("convergence", "invalid pair skipped", skipped[0].skipped.is_some(), String::new()));
    Ok(())
}

fn report(out: &mut Vec<Check>) -> Result<()> {
    let empty = Table::new(["a", "b"]);
    out.push(check("report", "empty table", csv_string(&empty)? == "a,b\n", String::new()));
    Ok(())
}

/// Runs every check; errors in a group are reported as a failed check.
pub fn run(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let groups: [(&str, &dyn Fn(&mut Vec<Check>) -> Result<()>); 7] = [
        ("levy", &|o| sampling(seed, o)),
        ("density", &|o| density(seed, o)),
        ("engine", &|o| engine(seed, o)),
        ("parametrix", &|o| parametrix(o)),
        ("estimates", &|o| estimates(seed, o)),
        ("convergence", &|o| convergence(seed, o)),
        ("report", &|o| report(o)),
    ];
    for (module, f) in groups {
        if let Err(e) = f(&mut out) {
            out.push(check(module, "error", false, e.to_string()));
        }
    }
    out
}

pub fn as_table(checks: &[Check]) -> Table {
    let mut t = Table::new(["module", "check", "pass", "detail"]);
    for c in checks {
        t.push(vec![c.module.clone(), c.name.clone(), c.pass.to_string(), c.detail.clone()]);
    }
    t
}
