use std::f64::consts::PI;

use amplify_core::psl2::*;
use proptest::prelude::*;

fn close(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
    dist(a, b) < tol
}

fn element() -> impl Strategy<Value = GroupElement> {
    (-3.0..3.0f64, -2.0..2.0f64, 0.0..2.0 * PI).prop_map(|(x, t, th)| make_n(x) * make_a(t) * make_k(th))
}

#[test]
fn subgroup_examples() {
    let e = GroupElement::identity();
    assert!(close(&make_a(0.0), &e, 1e-15));
    assert!(close(&make_k(2.0 * PI), &e, 1e-15));
    let a = make_a(2.0 * 2f64.ln()).entries();
    assert!((a[0][0] - 2.0).abs() < 1e-15 && (a[1][1] - 0.5).abs() < 1e-15);
    let n = make_n(1.5).entries();
    assert_eq!(n, [[1.0, 1.5], [0.0, 1.0]]);
}

#[test]
fn iwasawa_examples() {
    for t in [-1.0, 0.0, 2.5] {
        assert!((iwasawa_h(&make_a(t)) - t).abs() < 1e-14);
    }
    assert!(iwasawa_h(&make_k(0.9)).abs() < 1e-15);
    let g = make_n(3.0) * make_a(1.2) * make_k(0.7);
    assert!((iwasawa_h(&g) - 1.2).abs() < 1e-13);
}

#[test]
fn cartan_examples() {
    assert_eq!(cartan_t(&GroupElement::identity()), 0.0);
    assert!((cartan_t(&make_a(-3.0)) - 3.0).abs() < 1e-13);
    assert!((cartan_t(&(make_k(0.4) * make_a(1.0) * make_k(2.2))) - 1.0).abs() < 1e-13);
}

#[test]
fn normalizer_distance_examples() {
    let axis = GeodesicDescriptor::imaginary_axis();
    assert!(dist_to_normalizer(&make_a(5.0), &axis) < 1e-9);
    let g = make_k(0.3);
    let mut best = f64::INFINITY;
    let w = make_k(PI);
    for i in 0..=400_000 {
        let t = -20.0 + 40.0 * i as f64 / 400_000.0;
        best = best.min(dist(&g, &make_a(t))).min(dist(&g, &(make_a(t) * w)));
    }
    assert!((dist_to_normalizer(&g, &axis) - best).abs() < 1e-6);
}

#[test]
fn alpha_map_examples() {
    let k = make_k(1.1);
    assert!(close(&alpha_map(&GroupElement::identity(), &k), &k, 1e-14));
    assert!(close(&alpha_map(&make_a(0.8), &GroupElement::identity()), &GroupElement::identity(), 1e-14));
}

#[test]
fn geodesic_examples() {
    assert_eq!(geodesic_of(&GroupElement::identity()).unwrap(), GeodesicDescriptor::Vertical { foot: 0.0 });
    assert_eq!(geodesic_of(&make_n(2.5)).unwrap(), GeodesicDescriptor::Vertical { foot: 2.5 });
    match geodesic_of(&make_k(PI / 2.0)).unwrap() {
        GeodesicDescriptor::HalfCircle { left, right, center, radius } => {
            // Moebius image of 0 and infinity
            let k = make_k(PI / 2.0).entries();
            let img0 = k[0][1] / k[1][1];
            let img_inf = k[0][0] / k[1][0];
            let (lo, hi) = if img0 < img_inf { (img0, img_inf) } else { (img_inf, img0) };
            assert!((left - lo).abs() < 1e-12 && (right - hi).abs() < 1e-12);
            assert!((left + 1.0).abs() < 1e-12 && (right - 1.0).abs() < 1e-12);
            assert!(center.abs() < 1e-12 && (radius - 1.0).abs() < 1e-12);
        }
        other => panic!("expected a half circle, got {other:?}"),
    }
}

#[test]
fn right_translation_metric_comparison() {
    // d(xg, yg) / d(x, y) over a compact ball stays within a fixed band
    let pts: Vec<GroupElement> = (0..12).map(|i| make_k(0.5 * i as f64) * make_a(0.1 * i as f64 - 0.5)).collect();
    let gs: Vec<GroupElement> = (0..6).map(|i| make_a(0.3 * i as f64 - 0.8) * make_k(0.9 * i as f64)).collect();
    let mut ratios = Vec::new();
    for x in &pts {
        for y in &pts {
            let d0 = dist(x, y);
            if d0 < 1e-6 {
                continue;
            }
            for g in &gs {
                ratios.push(dist(&(*x * *g), &(*y * *g)) / d0);
            }
        }
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max < 4.0 && min > 0.25, "band [{min}, {max}]");
}

proptest! {
    #[test]
    fn iwasawa_round_trip(x in -3.0..3.0f64, t in -2.5..2.5f64, th in 0.0..2.0 * PI) {
        let g = make_n(x) * make_a(t) * make_k(th);
        let h = iwasawa_h(&g);
        let z = g.act((0.0, 1.0));
        let rebuilt = make_n(z.0) * make_a(h) * make_k(iwasawa_k_angle(&g));
        prop_assert!((h - t).abs() < 1e-10);
        prop_assert!(close(&rebuilt, &g, 1e-10));
    }

    #[test]
    fn cartan_of_inverse(g in element()) {
        prop_assert!((cartan_t(&g) - cartan_t(&g.inverse())).abs() < 1e-10);
    }

    #[test]
    fn metric_axioms(x in element(), y in element(), z in element()) {
        prop_assert_eq!(dist(&x, &y), dist(&y, &x));
        prop_assert!(dist(&x, &z) <= dist(&x, &y) + dist(&y, &z) + 1e-12);
        prop_assert!(dist(&x, &x) == 0.0);
    }

    #[test]
    fn determinant_and_normalization(g in element()) {
        let [[a, b], [c, d]] = g.entries();
        prop_assert!((a * d - b * c - 1.0).abs() < 1e-12);
        let again = GroupElement::new(a, b, c, d).unwrap();
        prop_assert_eq!(again, g);
        let neg = GroupElement::new(-a, -b, -c, -d).unwrap();
        prop_assert_eq!(neg, g);
    }

    #[test]
    fn alpha_map_composes(g in element(), h in element(), th in 0.0..2.0 * PI) {
        let k = make_k(th);
        let lhs = alpha_map(&(g * h), &k);
        let rhs = alpha_map(&h, &alpha_map(&g, &k));
        prop_assert!(close(&lhs, &rhs, 1e-9));
    }

    #[test]
    fn geodesic_right_a_invariant(g in element(), s in -2.0..2.0f64) {
        let l0 = geodesic_of(&g).unwrap();
        let l1 = geodesic_of(&(g * make_a(s))).unwrap();
        match (l0, l1) {
            (GeodesicDescriptor::HalfCircle { left: a0, right: b0, .. }, GeodesicDescriptor::HalfCircle { left: a1, right: b1, .. }) => {
                let scale = 1.0 + a0.abs().max(b0.abs());
                prop_assert!((a0 - a1).abs() < 1e-8 * scale && (b0 - b1).abs() < 1e-8 * scale);
            }
            (GeodesicDescriptor::Vertical { foot: f0 }, GeodesicDescriptor::Vertical { foot: f1 }) => {
                prop_assert!((f0 - f1).abs() < 1e-8);
            }
            _ => prop_assert!(false, "kind changed"),
        }
    }

    #[test]
    fn half_circle_center_is_midpoint(g in element()) {
        if let GeodesicDescriptor::HalfCircle { left, right, center, radius } = geodesic_of(&g).unwrap() {
            prop_assert!((center - 0.5 * (left + right)).abs() < 1e-9 * (1.0 + center.abs()));
            prop_assert!((radius - 0.5 * (right - left)).abs() < 1e-8 * (1.0 + radius));
            prop_assert!(radius > 0.0);
        }
    }
}
