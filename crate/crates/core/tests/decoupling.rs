use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use vinolab_core::decoupling::*;
use vinolab_core::geometry::{frenet_frame, OrientedBox, Role};
use vinolab_core::{rng, Vec3};

fn lattice() -> MomentOptions {
    MomentOptions { sampler: Sampler::Lattice, ..Default::default() }
}

fn uniform(samples: usize, seed: u64) -> MomentOptions {
    MomentOptions { samples, seed, resonance: 0.0, ..Default::default() }
}

fn random_coeffs(n: usize, seed: u64) -> Vec<Complex64> {
    let mut g = rng::stream(seed, 3);
    (0..n).map(|_| Complex64::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_on_the_lattice(k in 1..4u32, seed in any::<u64>()) {
        // R = 2^{3k}, alpha = 1/3 .. 1
        let r = 2f64.powi(3 * k as i32);
        for j in k..=3 * k {
            let alpha = j as f64 / (3 * k) as f64;
            let n = interval_count(r, alpha).unwrap();
            let sum = ExpSum::new(r, alpha, random_coeffs(n, seed)).unwrap();
            let l2: f64 = sum.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let m = lp_moment(&sum, 2.0, r, &lattice()).unwrap();
            prop_assert!((m.estimate / l2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn modulation_leaves_moments_and_ratios_unchanged(theta in 0.0..1.0f64, seed in any::<u64>(), p in 2.0..12.0f64) {
        let sum = ExpSum::random_phases(4096.0, 0.5, seed).unwrap();
        let mut turned = sum.clone();
        for a in turned.coeffs.iter_mut() {
            *a *= e(theta);
        }
        let opts = MomentOptions { samples: 2000, seed, ..Default::default() };
        let (a, b) = (decoupling_ratio(&sum, p, &opts).unwrap(), decoupling_ratio(&turned, p, &opts).unwrap());
        prop_assert!((a.ratio / b.ratio - 1.0).abs() < 1e-12);
        prop_assert!((a.moment.estimate / b.moment.estimate - 1.0).abs() < 1e-12);
        let (ta, tb) = (trilinear_ratio(&sum, p, &opts).unwrap(), trilinear_ratio(&turned, p, &opts).unwrap());
        prop_assert!((ta.ratio / tb.ratio - 1.0).abs() < 1e-12);
    }

    /// Hoelder on the sample points: the trilinear average is at most the
    /// largest block average, and each block's right side is at most the
    /// full one.
    #[test]
    fn trilinear_ratio_is_dominated_by_block_ratios(seed in any::<u64>(), p in 3.0..12.0f64) {
        let sum = ExpSum::random_phases(4096.0, 0.5, seed).unwrap();
        let opts = uniform(2000, seed);
        let tri = trilinear_ratio(&sum, p, &opts).unwrap();
        let mut worst = 0.0f64;
        for (lo, hi) in TRILINEAR_BLOCKS {
            let keep = sum.block(lo, hi);
            let mut part = sum.clone();
            for (i, a) in part.coeffs.iter_mut().enumerate() {
                if !keep.contains(&i) {
                    *a = Complex64::new(0.0, 0.0);
                }
            }
            worst = worst.max(decoupling_ratio(&part, p, &opts).unwrap().ratio);
        }
        prop_assert!(tri.ratio <= worst * (1.0 + 1e-9), "{} > {}", tri.ratio, worst);
        let sampled = trilinear_ratio(&sum, p, &MomentOptions { samples: 2000, seed, ..Default::default() }).unwrap();
        prop_assert!(sampled.ratio <= 2.0 * worst);
    }
}

/// Solutions of `x1 + .. + xk = y1 + .. + yk` on the curve are exactly the
/// permutations (equal power sums force equal multisets), so the lattice
/// means of `|F|^4` and `|F|^6` with unit coefficients are permutation counts.
#[test]
fn lattice_energy_matches_permutation_counts() {
    for (r, alpha) in [(64.0, 0.5), (64.0, 1.0), (512.0, 1.0 / 3.0), (4096.0, 0.5)] {
        let sum = ExpSum::constant(r, alpha).unwrap();
        let n = sum.len() as f64;
        let (four, _) = spectral_mean(&sum, 4.0).unwrap();
        assert_eq!(four, 2.0 * n * n - n, "R {r}, alpha {alpha}");
        let (six, _) = spectral_mean(&sum, 6.0).unwrap();
        assert_eq!(six, 6.0 * n * (n - 1.0) * (n - 2.0) + 9.0 * n * (n - 1.0) + n, "R {r}, alpha {alpha}");
    }
}

#[test]
fn single_cap_ratio_is_the_dilation_factor() {
    let mut g = rng::stream(99, 0);
    for case in 0..20 {
        let k: i32 = g.gen_range(3..=15);
        let r = 2f64.powi(k);
        let j = g.gen_range((k + 2) / 3..=k);
        let alpha = j as f64 / k as f64;
        let p = g.gen_range(2.0..14.0);
        let n = interval_count(r, alpha).unwrap();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        coeffs[g.gen_range(0..n)] = Complex64::from_polar(g.gen_range(0.1..10.0), g.gen_range(0.0..6.0));
        let sum = ExpSum::new(r, alpha, coeffs).unwrap();
        let got = decoupling_ratio(&sum, p, &uniform(1000, case)).unwrap();
        let expect = r.powf(-alpha * (0.5 - 1.0 / p));
        assert!((got.ratio / expect - 1.0).abs() < 1e-9, "R 2^{k}, alpha {alpha}, p {p}: {} vs {expect}", got.ratio);
    }
}

#[test]
fn direct_evaluation_matches_the_sum_definition() {
    let sum = ExpSum::random_phases(4096.0, 0.5, 4).unwrap().with_jitter(5);
    let mut g = rng::stream(6, 0);
    let points: Vec<Vec3> = (0..50).map(|_| Vec3::from_fn(|_, _| g.gen_range(-4096.0..4096.0))).collect();
    for (x, v) in points.iter().zip(eval_exp_sum(&sum, &points)) {
        let mut direct = Complex64::new(0.0, 0.0);
        for (a, xi) in sum.coeffs.iter().zip(&sum.freqs) {
            let phase = std::f64::consts::TAU * x.dot(xi);
            direct += a * Complex64::new(phase.cos(), phase.sin());
        }
        assert!((v - direct).norm() < 1e-8, "{v} vs {direct}");
    }
    assert_eq!(eval_exp_sum(&sum, &[Vec3::zeros()])[0], sum.coeffs.iter().sum::<Complex64>());
}

#[test]
fn analyzer_is_idempotent() {
    for seed in 0..10 {
        let ens = random_ensemble(4096.0, seed).unwrap();
        let once = pigeonhole_analysis(&ens).unwrap();
        let again = pigeonhole_analysis(&ens).unwrap();
        assert_eq!(once.params, again.params, "seed {seed}");
        let twice = pigeonhole_analysis(&once).unwrap();
        assert_eq!(twice.params, once.params, "seed {seed}");
        let f = once.params.first.as_ref().unwrap();
        assert!(f.l * f.y <= f.m * f.x, "seed {seed}");
    }
}

#[test]
fn random_ensembles_yield_both_sequences() {
    for t in 0..200 {
        let out = pigeonhole_analysis(&random_ensemble(4096.0, rng::derive(0, t)).unwrap()).unwrap();
        assert!(out.params.first.is_some() && out.params.second.is_some(), "trial {t}");
        assert!(plank_height_check(&out, HEIGHT_CONSTANT_CAP).is_ok());
    }
}

/// Packets over one interval with constant height and disjoint boxes are
/// nearly orthogonal in `L^p`.
#[test]
fn same_interval_packets_are_nearly_orthogonal() {
    let r = 4096.0f64;
    let scale = PacketScale::Third;
    let index = 5;
    let len = scale.interval_len(r);
    let frame = frenet_frame(index as f64 * len).unwrap();
    let dims = [r.cbrt(), r.powf(2.0 / 3.0), r];
    for (trial, spacing) in [(0u64, 1.0), (1, 1.5), (2, 3.0)] {
        let mut ens = PacketEnsemble::new(r).unwrap();
        let mut g = rng::stream(trial, 0);
        let count = 4;
        for q in 0..count {
            let offset = (q as f64 - (count - 1) as f64 / 2.0) * spacing * dims[0];
            ens.push(scale, index, frame.point(&Vec3::new(offset, 0.0, 0.0)), e(g.gen::<f64>())).unwrap();
        }
        let region = OrientedBox::in_frame(
            &frame,
            Vec3::zeros(),
            [dims[0] * (count as f64 * spacing + 2.0), dims[1] * 2.0, dims[2] * 2.0],
            Role::Generic,
            None,
        )
        .unwrap();
        let window = Window::default();
        for p in [4.0, 6.0] {
            let whole = synthesize_from_packets(&ens, window).lp_integral(p, &region, 40_000, trial).unwrap().0;
            let parts: f64 = (0..count)
                .map(|i| synthesize_subset(&ens, window, &[i]).lp_integral(p, &region, 40_000, trial).unwrap().0)
                .sum();
            let ratio = (whole / parts).powf(1.0 / p);
            assert!((0.25..=4.0).contains(&ratio), "spacing {spacing}, p {p}: ratio {ratio}");
        }
    }
}

#[test]
fn exponent_tables() {
    // sigma_{p,d} as a minimum over k of 1/k + (k^2 - k - 2) / (2kp), by hand
    assert!((sigma_pd(10.0, 3).unwrap() - 0.4).abs() < 1e-12);
    assert!((sigma_pd(2.0, 2).unwrap() - 0.5).abs() < 1e-12);
    assert!((sigma_pd(12.0, 3).unwrap() - (1.0 / 3.0 + 4.0 / 72.0)).abs() < 1e-12);
    for d in 2..9 {
        for p in [2.0, 4.0, 6.0, 10.0, 22.0, 100.0] {
            let s = sigma_pd(p, d).unwrap();
            assert!(s >= 1.0 / d as f64 - 1e-12);
            assert!(sigma_pd(p, d + 1).unwrap() <= s + 1e-15);
            assert!(sigma_pd(p * 2.0, d).unwrap() <= s + 1e-15);
        }
    }
    assert_eq!(critical_p_bound(5).unwrap(), 26.0);
    assert_eq!(critical_p_bound(6).unwrap(), 22.0);
    assert_eq!(critical_p_bound(7).unwrap(), 22.0);
    assert!(critical_p_bound(4).is_err());
    assert!(sigma_pd(1.5, 3).is_err());
}
