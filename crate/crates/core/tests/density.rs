use rand::Rng;
use stable_em::density::{density_1d, density_mc, theta, theta_curve, DensityTable};
use stable_em::quad::integrate;
use stable_em::{RngStream, StableParams};

// Theta(r) for alpha = 1.5, d = 1, summed from the negative moments
// E[S^-q] = Gamma(1 + q/a) / Gamma(1 + q), a = alpha / 2 (30-digit arithmetic).
const THETA_QUARTER: f64 = 1.208_025_884_145_874_9;
const THETA_HALF: f64 = 1.472_325_861_008_366;
const THETA_ONE: f64 = 2.247_576_272_457_095;

#[test]
fn cauchy_closed_form() {
    let p = StableParams::extended(1.0, 1).unwrap();
    let mut g = RngStream::new(1, 0).generator();
    for _ in 0..50 {
        let t: f64 = g.random_range(0.05..3.0);
        let x: f64 = g.random_range(-8.0..8.0);
        let scale = t / 2f64.sqrt();
        let exact = scale / (std::f64::consts::PI * (scale * scale + x * x));
        let v = density_1d(&p, t, x).unwrap();
        assert!((v - exact).abs() < 1e-6, "t {t} x {x}: {v} vs {exact}");
    }
}

#[test]
fn mode_value() {
    let p = StableParams::new(1.5, 1).unwrap();
    assert!((density_1d(&p, 1.0, 0.0).unwrap() - 0.406_378_158_3).abs() < 1e-9);
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let p = StableParams::new(1.5, 1).unwrap();
    let mut g = RngStream::new(2, 0).generator();
    for i in 0..20u64 {
        let t: f64 = g.random_range(0.1..2.0);
        let x: f64 = g.random_range(-4.0..4.0);
        let exact = density_1d(&p, t, x).unwrap();
        let est = density_mc(&p, t, &[x], 200_000, RngStream::new(3, i)).unwrap();
        assert!(est.within(exact, 4.0), "t {t} x {x}: {est:?} vs {exact}");
    }
}

fn planar_density(t: f64, r: f64, alpha: f64) -> f64 {
    // (1 / (2 pi^2)) int_0^pi int_0^inf k cos(k r sin th) exp(-t 2^(-alpha/2) k^alpha) dk dth
    let s = t * 2f64.powf(-alpha / 2.0);
    let k_max = (40.0 / s).powf(1.0 / alpha);
    let inner = |th: f64| {
        integrate(
            |k: f64| k * (k * r * th.sin()).cos() * (-s * k.powf(alpha)).exp(),
            0.0,
            k_max,
            1e-11,
            400,
        )
        .unwrap()
        .value
    };
    integrate(inner, 0.0, std::f64::consts::PI, 1e-10, 200).unwrap().value / (2.0 * std::f64::consts::PI.powi(2))
}

#[test]
fn planar_monte_carlo_agrees_with_radial_quadrature() {
    let p = StableParams::new(1.5, 2).unwrap();
    for (i, (t, x)) in [(1.0f64, [0.0f64, 0.0]), (0.5, [0.3, -0.4]), (1.0, [1.0, 1.0]), (2.0, [-2.0, 0.5])]
        .into_iter()
        .enumerate()
    {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let exact = planar_density(t, r, 1.5);
        let est = density_mc(&p, t, &x, 400_000, RngStream::new(9, i as u64)).unwrap();
        assert!(est.within(exact, 4.0), "t {t} x {x:?}: {est:?} vs {exact}");
    }
}

#[test]
fn kernel_integrates_to_one() {
    for alpha in [1.2, 1.5, 1.8] {
        let p = StableParams::new(alpha, 1).unwrap();
        let table = DensityTable::new(&p).unwrap();
        for t in [0.1, 1.0] {
            let half = integrate(|y| table.eval(t, y), 0.0, 1e4, 1e-12, 2000).unwrap().value;
            // Remaining tail: int_{1e4}^inf p ~ leading power term.
            let c = t * 2f64.powf(-alpha / 2.0);
            let tail = statrs::function::gamma::gamma(alpha + 1.0) * (std::f64::consts::PI * alpha / 2.0).sin() * c
                / std::f64::consts::PI
                * 1e4f64.powf(-alpha)
                / alpha;
            assert!((2.0 * (half + tail) - 1.0).abs() < 1e-6, "alpha {alpha} t {t}: {}", 2.0 * (half + tail));
        }
    }
}

#[test]
fn scaling_relation() {
    let p = StableParams::new(1.6, 1).unwrap();
    for (t, x) in [(0.1, 0.3), (2.5, -1.7), (0.02, 0.05)] {
        let lhs = density_1d(&p, t, x).unwrap();
        let s = t.powf(-1.0 / 1.6);
        let rhs = s * density_1d(&p, 1.0, x * s).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs));
    }
}

#[test]
fn theta_at_zero_is_exactly_one() {
    let p = StableParams::new(1.5, 1).unwrap();
    let e = theta(0.0, &p, 10_000, RngStream::new(1, 1)).unwrap();
    assert_eq!(e.mean, 1.0);
}

#[test]
fn theta_matches_moment_series() {
    let p = StableParams::new(1.5, 1).unwrap();
    let c = theta_curve(&[0.0, 0.25, 0.5, 1.0], &p, 1_000_000, RngStream::new(8, 0)).unwrap();
    for (e, exact) in c.estimates[1..].iter().zip([THETA_QUARTER, THETA_HALF, THETA_ONE]) {
        assert!(e.within(exact, 4.0), "{e:?} vs {exact}");
    }
    assert!(c.estimates.windows(2).all(|w| w[1].mean >= w[0].mean));
}
