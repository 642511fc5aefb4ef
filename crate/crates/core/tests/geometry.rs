use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;
use vinolab_core::geometry::*;
use vinolab_core::{Mat3, Vec3};

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn rotation() -> impl Strategy<Value = Mat3> {
    (vec3(1.0), 0.0..std::f64::consts::TAU).prop_filter_map("zero axis", |(axis, angle)| {
        let axis = Unit::try_new(axis, 1e-3)?;
        Some(Rotation3::from_axis_angle(&axis, angle).into_inner())
    })
}

fn lengths() -> impl Strategy<Value = [f64; 3]> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| [10f64.powf(a), 10f64.powf(b), 10f64.powf(c)])
}

fn rect_box(rot: Mat3, lengths: [f64; 3], center: Vec3) -> OrientedBox {
    let axes = [rot.column(0).into(), rot.column(1).into(), rot.column(2).into()];
    OrientedBox::new(center, axes, lengths, Role::Generic, None).unwrap()
}

fn rel(a: &Mat3, b: &Mat3) -> f64 {
    (a - b).norm() / b.norm()
}

/// Principal normal from the second derivative, `gamma'' - (gamma'' . t) t`.
fn principal_normal(c: f64) -> Vec3 {
    let t = Vec3::new(1.0, 2.0 * c, 3.0 * c * c).normalize();
    let acc = Vec3::new(0.0, 2.0, 6.0 * c);
    (acc - t * acc.dot(&t)).normalize()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dual_of_dual_is_identity_for_rectangular_boxes(rot in rotation(), l in lengths()) {
        let b = rect_box(rot, l, Vec3::zeros());
        let back = dual_box(&dual_box(&b).unwrap()).unwrap();
        prop_assert!(rel(&back.edges(), &b.edges()) < 1e-12);
        for i in 0..3 {
            prop_assert!((back.lengths[i] / l[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_of_dual_is_identity_for_sheared_boxes(sigma in 0.05..1.0f64, s in 0.0..1.0f64, k in 6..13i32) {
        let r = 2f64.powi(k);
        let sigma = sigma.max(r.powf(-1.0 / 3.0));
        let b = small_plank(r, sigma, s).unwrap();
        let back = dual_box(&dual_box(&b).unwrap()).unwrap();
        prop_assert!(rel(&back.edges(), &b.edges()) < 1e-12);
    }

    #[test]
    fn dual_edges_pair_to_identity(rot in rotation(), l in lengths()) {
        let b = rect_box(rot, l, Vec3::zeros());
        let d = dual_box(&b).unwrap();
        let pairing = b.edges().transpose() * d.edges();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                // rounding in the axes is amplified by the length ratio
                prop_assert!((pairing[(i, j)] - expect).abs() < 1e-12 * (l[i] / l[j]).max(1.0));
            }
        }
    }

    #[test]
    fn shear_preserves_the_pairing(sigma in 0.05..1.0f64, c in -1.0..1.0f64, w in vec3(10.0), x in vec3(10.0)) {
        let m = ShearMap::new(sigma, c).unwrap();
        let (tw, ax) = (m.apply(&w), m.apply_dual(&x));
        let scale = (tw.norm() * ax.norm()).max(w.norm() * x.norm());
        prop_assert!((tw.dot(&ax) - w.dot(&x)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn shear_matches_componentwise_formula(sigma in 0.05..2.0f64, c in -1.0..1.0f64, w in vec3(5.0)) {
        let m = ShearMap::new(sigma, c).unwrap();
        let expect = Vec3::new(
            w.x / sigma,
            (w.y - 2.0 * c * w.x) / sigma.powi(2),
            (w.z - 3.0 * c * w.y + 3.0 * c * c * w.x) / sigma.powi(3),
        );
        prop_assert!((m.apply(&w) - expect).norm() <= 1e-12 * expect.norm().max(1.0));
        let dual = Vec3::new(
            sigma * (w.x + 2.0 * c * w.y + 3.0 * c * c * w.z),
            sigma.powi(2) * (w.y + 3.0 * c * w.z),
            sigma.powi(3) * w.z,
        );
        prop_assert!((m.apply_dual(&w) - dual).norm() <= 1e-12 * dual.norm().max(1.0));
        let inv_t = m.forward.try_inverse().unwrap().transpose();
        prop_assert!(rel(&m.inverse_transpose, &inv_t) < 1e-12);
        prop_assert!((m.forward.determinant() / sigma.powi(-6) - 1.0).abs() < 1e-10);
        prop_assert!((m.inverse_transpose.determinant() / sigma.powi(6) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn affine_shear_maps_the_arc_onto_the_curve(delta in 0.01..1.0f64, c in 0.0..1.0f64, u in 0.0..1.0f64) {
        let a = AffineShear::new(delta, c).unwrap();
        let image = a.apply(&gamma(c + delta * u));
        prop_assert!((image - gamma(u)).norm() < 1e-12 * delta.powi(-3));
    }

    #[test]
    fn frame_is_orthonormal_right_handed_and_exact(c in 0.0..=1.0f64) {
        let f = frenet_frame(c).unwrap();
        let [t, n, b] = f.axes();
        for (u, v) in [(t, n), (n, b), (t, b)] {
            prop_assert!(u.dot(&v).abs() < 1e-12);
        }
        for u in [t, n, b] {
            prop_assert!((u.norm() - 1.0).abs() < 1e-12);
        }
        prop_assert!((t.cross(&n) - b).norm() < 1e-12);
        prop_assert!((n - principal_normal(c)).norm() < 1e-12);
        prop_assert_eq!(f.raw_tangent, Vec3::new(1.0, 2.0 * c, 3.0 * c * c));
        prop_assert_eq!(f.raw_binormal, Vec3::new(3.0 * c * c, -3.0 * c, 1.0));
    }

    #[test]
    fn approximate_normal_has_quintic_residual(c in 0.0..=1.0f64) {
        let f = frenet_frame(c).unwrap();
        let residual = approx_normal(c).dot(&f.raw_tangent);
        prop_assert!((residual - 16.0 * c.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn frame_turns_slowly_across_an_interval(k in 2..11i32, c in 0.0..1.0f64, frac in 0.0..=1.0f64) {
        let r = 2f64.powi(3 * k);
        let step = r.powf(-1.0 / 3.0);
        let c2 = (c + frac * step).min(1.0);
        let (f, g) = (frenet_frame(c).unwrap(), frenet_frame(c2).unwrap());
        for (u, v) in f.axes().iter().zip(g.axes()) {
            prop_assert!(angle_between(u, &v) <= 10.0 * step);
        }
    }

    #[test]
    fn polytope_volume_of_aligned_intersection(lo_a in vec3(2.0), la in lengths(), lo_b in vec3(2.0), lb in lengths()) {
        let la = la.map(|v| v.min(5.0).max(0.05));
        let lb = lb.map(|v| v.min(5.0).max(0.05));
        let a = rect_box(Mat3::identity(), la, lo_a);
        let b = rect_box(Mat3::identity(), lb, lo_b);
        let mut expect = 1.0;
        for i in 0..3 {
            let lo = (lo_a[i] - la[i] / 2.0).max(lo_b[i] - lb[i] / 2.0);
            let hi = (lo_a[i] + la[i] / 2.0).min(lo_b[i] + lb[i] / 2.0);
            expect *= (hi - lo).max(0.0);
        }
        let got = polytope_volume(&intersect_boxes(&[a, b]).unwrap());
        prop_assert!((got - expect).abs() <= 1e-9 * (la.iter().product::<f64>()).max(1e-6));
    }

    #[test]
    fn sheared_box_volume_matches_clipped_polytope(sigma in 0.0..1.0f64, s in 0.0..1.0f64) {
        let r = 4096.0f64;
        let sigma = sigma.max(r.powf(-1.0 / 3.0));
        let b = small_plank(r, sigma, s).unwrap();
        let clipped = ConvexPolytope::from_box(&b).volume();
        prop_assert!((clipped / b.volume() - 1.0).abs() < 1e-9);
        prop_assert!((b.volume() - b.edges().determinant().abs()).abs() <= 1e-12 * b.volume());
    }

    #[test]
    fn clipping_never_increases_volume(rot in rotation(), l in lengths(), n in vec3(1.0), off in -1.0..1.0f64) {
        prop_assume!(n.norm() > 1e-3);
        let l = l.map(|v| v.min(10.0).max(0.1));
        let p = ConvexPolytope::from_box(&rect_box(rot, l, Vec3::zeros()));
        let before = p.volume();
        prop_assert!((before / l.iter().product::<f64>() - 1.0).abs() < 1e-9);
        let after = p.clip(&HalfSpace::new(n, off)).volume();
        prop_assert!(after >= 0.0 && after <= before * (1.0 + 1e-12));
    }
}

/// Origin-centered tubes over the intervals inside `J` fit into a bounded
/// enlargement of the union box over `J`, on both angle branches.
#[test]
fn tubes_over_an_interval_fit_in_the_union_box() {
    let r = 4096.0f64;
    let step = r.powf(-1.0 / 3.0);
    for sigma in [step, 2.0 * step, 0.25, 0.5, 1.0] {
        let jlen = step / sigma;
        let mut lo = 0.0;
        while lo + jlen <= 1.0 + 1e-12 {
            let j = Interval::new(lo, lo + jlen).unwrap();
            let u = make_box(Role::BoxU, Some(j), Scale::SmallCap { r, sigma }, Vec3::zeros()).unwrap();
            let mut c = lo;
            while c + step <= lo + jlen + 1e-12 {
                let tube = make_box(Role::Tube, Some(Interval::new(c, c + step).unwrap()), Scale::R(r), Vec3::zeros()).unwrap();
                for v in tube.vertices() {
                    assert!(u.contains_scaled(&v, 10.0), "sigma {sigma}, J [{lo}, {}], I at {c}", lo + jlen);
                }
                c += step;
            }
            lo += jlen.max(0.125);
        }
    }
}

#[test]
fn canonical_dimensions() {
    let r = 2f64.powi(12);
    let p = make_box(Role::FreqPlank, Some(Interval::new(0.25, 0.5).unwrap()), Scale::R(r), Vec3::zeros()).unwrap();
    let d = dual_box(&p).unwrap();
    for (i, want) in [16.0, 256.0, 4096.0].into_iter().enumerate() {
        assert!((p.lengths[i] * want - 1.0).abs() < 1e-14);
        assert!((d.lengths[i] / want - 1.0).abs() < 1e-14);
    }
    assert_eq!(d.role, Role::SpatialPlank);
    assert!(frenet_frame(1.5).is_err());
    assert!(ShearMap::new(0.0, 0.3).is_err());
}
