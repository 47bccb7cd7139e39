use stable_em::levy::{sample_noise_path, NoiseSampler};
use stable_em::rng::par_samples;
use stable_em::stats::{chi_square_uniform, ks_two_sample, MeanEstimate};
use stable_em::{RngStream, StableParams};

#[test]
fn laplace_transform_of_subordinator() {
    for alpha in [1.2, 1.5, 1.8] {
        let p = StableParams::new(alpha, 1).unwrap();
        let s = NoiseSampler::new(p);
        let draws = par_samples(RngStream::new(101, alpha.to_bits()), 200_000, |g| s.subordinator(1.0, g));
        for gamma in [0.5f64, 1.0, 2.0] {
            let v: Vec<f64> = draws.iter().map(|x| (-gamma * x).exp()).collect();
            let est = MeanEstimate::from_samples(&v);
            let exact = (-gamma.powf(alpha / 2.0)).exp();
            assert!(est.within(exact, 4.0), "alpha {alpha} gamma {gamma}: {est:?} vs {exact}");
        }
    }
}

#[test]
fn characteristic_function_of_increment() {
    let alpha = 1.5;
    let p = StableParams::new(alpha, 1).unwrap();
    let s = NoiseSampler::new(p);
    let xs = par_samples(RngStream::new(7, 0), 200_000, |g| {
        let mut o = [0.0];
        s.increment_into(1.0, g, &mut o);
        o[0]
    });
    for xi in [0.1, 0.3, 0.5, 0.8, 1.0, 1.3, 1.7, 2.2, 3.0, 4.0f64] {
        let c: Vec<f64> = xs.iter().map(|x| (xi * x).cos()).collect();
        let est = MeanEstimate::from_samples(&c);
        let exact = (-(xi * xi / 2.0).powf(alpha / 2.0)).exp();
        assert!(est.within(exact, 4.0), "xi {xi}: {est:?} vs {exact}");
    }
}

#[test]
fn increments_are_infinitely_divisible() {
    let p = StableParams::new(1.5, 1).unwrap();
    let one: Vec<f64> = (0..20_000u64)
        .map(|i| sample_noise_path(&p, 0.25, 1, &mut RngStream::new(3, i).generator()).unwrap().as_flat()[0])
        .collect();
    let four: Vec<f64> = (0..20_000u64)
        .map(|i| {
            let path = sample_noise_path(&p, 0.0625, 4, &mut RngStream::new(4, i).generator()).unwrap();
            path.block_sums(4).unwrap().as_flat()[0]
        })
        .collect();
    let ks = ks_two_sample(&one, &four);
    assert!(ks.p_value > 1e-3, "{ks:?}");
}

#[test]
fn self_similarity_in_distribution() {
    let p = StableParams::new(1.3, 1).unwrap();
    let s = NoiseSampler::new(p);
    let t = 0.2f64;
    let scaled = par_samples(RngStream::new(11, 0), 20_000, |g| {
        let mut o = [0.0];
        s.increment_into(t, g, &mut o);
        o[0] / t.powf(1.0 / 1.3)
    });
    let unit = par_samples(RngStream::new(11, 1), 20_000, |g| {
        let mut o = [0.0];
        s.increment_into(1.0, g, &mut o);
        o[0]
    });
    assert!(ks_two_sample(&scaled, &unit).p_value > 1e-3);
}

#[test]
fn tail_matches_power_law() {
    let alpha = 1.5;
    let p = StableParams::new(alpha, 1).unwrap();
    let s = NoiseSampler::new(p);
    let n = 400_000;
    let xs = par_samples(RngStream::new(21, 0), n, |g| {
        let mut o = [0.0];
        s.increment_into(1.0, g, &mut o);
        o[0].abs()
    });
    // Two-sided survival from the term-by-term integrated tail expansion.
    let survival = |x: f64| {
        let c = 2f64.powf(-alpha / 2.0);
        let mut k_fact = 1.0;
        let mut sum = 0.0;
        for k in 1..=16 {
            let kf = k as f64;
            k_fact *= kf;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum += sign * statrs::function::gamma::gamma(kf * alpha + 1.0) / k_fact
                * (kf * std::f64::consts::PI * alpha / 2.0).sin()
                * c.powf(kf)
                * x.powf(-kf * alpha)
                / (kf * alpha);
        }
        2.0 * sum / std::f64::consts::PI
    };
    let mut emp = Vec::new();
    for x in [10.0, 20.0, 40.0] {
        let q = xs.iter().filter(|v| **v > x).count() as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        let exact = survival(x);
        assert!((q - exact).abs() < 4.0 * se, "x {x}: {q} vs {exact}");
        emp.push(q);
    }
    let slope = (emp[2] / emp[0]).ln() / 4f64.ln();
    assert!((slope + alpha).abs() < 0.15, "{slope}");
}

#[test]
fn planar_increments_are_isotropic() {
    let p = StableParams::new(1.5, 2).unwrap();
    let s = NoiseSampler::new(p);
    let angles = par_samples(RngStream::new(31, 0), 100_000, |g| {
        let mut o = [0.0; 2];
        s.increment_into(0.5, g, &mut o);
        o[1].atan2(o[0])
    });
    let mut counts = [0u64; 16];
    for a in angles {
        let b = ((a + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 16.0) as usize;
        counts[b.min(15)] += 1;
    }
    // chi-square with 15 degrees of freedom, p = 0.001.
    assert!(chi_square_uniform(&counts) < 37.7);
}

#[test]
fn signs_are_balanced() {
    let p = StableParams::new(1.7, 1).unwrap();
    let s = NoiseSampler::new(p);
    let n = 100_000;
    let pos = par_samples(RngStream::new(41, 0), n, |g| {
        let mut o = [0.0];
        s.increment_into(0.3, g, &mut o);
        (o[0] > 0.0) as u8 as f64
    });
    let est = MeanEstimate::from_samples(&pos);
    assert!(est.within(0.5, 4.0), "{est:?}");
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    let p = StableParams::new(1.5, 1).unwrap();
    let s = NoiseSampler::new(p);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| par_samples(RngStream::new(5, 2), 40_000, |g| s.subordinator(0.1, g)))
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(4));
}
