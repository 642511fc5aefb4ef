use proptest::prelude::*;
use vinolab_core::geometry::ShearMap;
use vinolab_core::partition::*;
use vinolab_core::{Error, Vec3};

/// Point of `Theta(sigma, 0)` from unit coordinates in `[-1, 1]^3`.
fn point_in_small_plank(r: f64, sigma: f64, u: Vec3) -> Vec3 {
    Vec3::new(u.x * r.powf(-1.0 / 3.0) * sigma * sigma, u.y * r.powf(-2.0 / 3.0) * sigma, u.z / r)
}

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0, -1.0..1.0, -1.0..1.0).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

/// `(R, sigma)` with `R = 2^9` or `2^12` and a dyadic `sigma < 1`.
fn scale_and_angle() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![Just(3u32), Just(4u32)].prop_flat_map(|k| {
        let r = 2f64.powi(3 * k as i32);
        (Just(r), (0..k).prop_map(move |i| 2f64.powi(i as i32 - k as i32)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// A point of `Theta(sigma, 0)` whose first coordinate is too large for
    /// the next finer layer is moved by `T_{1,-s}`, `s` on the `CP_sigma`
    /// grid, into layer `sigma`, inside the returned plank and inside a plank
    /// near `s`.
    #[test]
    fn shear_equivariance_on_grid((r, sigma) in scale_and_angle(), u in unit(), k in 0usize..64) {
        let layer = build_cp_family(r, sigma).unwrap();
        let s = layer.centers[k % layer.len()];
        // |w1| above the half-width of the sigma/2 layer
        let a = 0.2501 + 0.7499 * u.x.abs();
        let u = Vec3::new(if u.x < 0.0 { -a } else { a }, u.y, u.z);
        let w = ShearMap::new(1.0, -s).unwrap().apply(&point_in_small_plank(r, sigma, u));
        let partition = Partition::new(r, DEFAULT_FACTOR).unwrap();
        let class = partition.classify(&w).unwrap();
        prop_assert_eq!(class.sigma, sigma);
        prop_assert!(layer.contains(&w, class.index, 1.0));
        let near = (0..layer.len())
            .any(|j| (layer.centers[j] - s).abs() <= r.powf(-1.0 / 3.0) / sigma + 1e-12 && layer.contains(&w, j, 1.0));
        prop_assert!(near);
        prop_assert_eq!(classify_point(&w, r).unwrap(), class);
    }

    /// Off the grid the nearest plank of `CP_sigma` still holds the point
    /// after an enlargement of `1 + 3/2 + 3/4`.
    #[test]
    fn shear_equivariance_off_grid((r, sigma) in scale_and_angle(), u in unit(), s in 0.0..1.0f64) {
        let layer = build_cp_family(r, sigma).unwrap();
        let w = ShearMap::new(1.0, -s).unwrap().apply(&point_in_small_plank(r, sigma, u));
        let nearest = (0..layer.len())
            .min_by(|&a, &b| (layer.centers[a] - s).abs().total_cmp(&(layer.centers[b] - s).abs()))
            .unwrap();
        let near = (layer.centers[nearest] - s).abs();
        prop_assume!(near <= layer.spacing / 2.0);
        prop_assert!(layer.needed_factor(&w, nearest) <= 3.25 + 1e-9);
    }

    #[test]
    fn covering_curve_is_the_shear_and_stays_in_nearby_planks(u in unit(), s in 0.0..=1.0f64, k in 0usize..16) {
        let r = 4096.0f64;
        let seed = point_in_small_plank(r, 1.0, u);
        let curve = covering_curve(seed, r).unwrap();
        let at = curve.eval(s).unwrap();
        let sheared = ShearMap::new(1.0, -s).unwrap().apply(&seed);
        prop_assert!((at - sheared).norm() <= 1e-15);
        let base = build_cp_family(r, 1.0).unwrap();
        let c = base.centers[k];
        if (s - c).abs() <= r.powf(-1.0 / 3.0) {
            prop_assert!(base.contains(&at, k, CURVE_FACTOR));
        }
    }
}

/// Small planks of one layer overlap, so a point can be the image of two
/// different shears; the returned plank need not be the one near `s`.
#[test]
fn one_point_from_two_shears() {
    let (r, sigma) = (512.0f64, 0.5);
    let layer = build_cp_family(r, sigma).unwrap();
    let w = point_in_small_plank(r, sigma, Vec3::new(0.44, 0.963, 0.0));
    assert!(layer.contains(&w, 0, 1.0) && layer.contains(&w, 2, 1.0));
    let w0 = ShearMap::new(1.0, 0.5).unwrap().apply(&w);
    assert!(build_cp_family(r, sigma).unwrap().contains(&w0, 0, 1.0));
    let class = classify_point(&w, r).unwrap();
    assert_eq!(class.sigma, sigma);
    assert!(class.multiplicity >= 2);
}

/// Every sampled point of the union lies in exactly one layer
/// `Omega_{<= sigma} \ Omega_{<= sigma/2}`, and the layers are nested.
#[test]
fn layers_are_disjoint_and_nested() {
    for r in [512.0, 4096.0] {
        let partition = Partition::new(r, DEFAULT_FACTOR).unwrap();
        let mut seen = 0;
        for i in 0..20_000u64 {
            let w = sample_point(&partition, 7, i);
            if !partition.in_union(&w) {
                continue;
            }
            seen += 1;
            let below: Vec<bool> = partition.layers.iter().map(|l| l.covers(&w, 1.0)).collect();
            let exact: Vec<usize> = (0..below.len()).filter(|&j| below[j] && (j == 0 || !below[j - 1])).collect();
            assert_eq!(exact.len(), 1, "R {r}, sample {i}: layers {exact:?}");
            assert_eq!(partition.layer_of(&w).unwrap(), exact[0]);
            assert!(below.windows(2).all(|p| !p[0] || p[1]), "R {r}, sample {i}: nesting");
        }
        assert!(seen > 10_000);
        let rep = verify_partition_lemmas(r, 20_000, 7).unwrap();
        assert_eq!(rep.nesting_violations, 0);
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.sigma_layers.iter().map(|l| l.count).sum::<usize>(), (rep.coverage * 20_000.0).round() as usize);
    }
}

#[test]
fn family_sizes_and_association() {
    let r = 4096.0;
    for sigma in dyadic_sigmas(r).unwrap() {
        let layer = build_cp_family(r, sigma).unwrap();
        assert_eq!(layer.len(), (sigma * 16.0).round() as usize);
        let base = build_cp_family(r, 1.0).unwrap();
        for &c in &base.centers {
            let n = layer.associated(c).len();
            assert!((1..=3).contains(&n), "sigma {sigma}, c {c}: {n} associated planks");
        }
    }
}

#[test]
fn rejects_bad_input() {
    assert!(covering_curve(Vec3::new(1.0, 0.0, 0.0), 4096.0).is_err());
    assert!(build_cp_family(4096.0, 0.3).is_err());
    assert!(Partition::new(1000.0, DEFAULT_FACTOR).is_err());
    let p = Partition::new(512.0, DEFAULT_FACTOR).unwrap();
    assert!(matches!(p.layer_of(&Vec3::new(1.0, 1.0, 1.0)), Err(Error::NotInUnion)));
}
