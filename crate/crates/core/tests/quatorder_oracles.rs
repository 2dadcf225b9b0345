use amplify_core::psl2::{self, GeodesicDescriptor, GroupElement};
use amplify_core::quadfield::count_principal_generated;
use amplify_core::quatorder::*;
use proptest::prelude::*;

fn default_order() -> BasisOrder {
    BasisOrder::standard(&classify_algebra(3, -1).unwrap()).unwrap()
}

/// The order generated by S and (1 + alpha + omega + alpha omega)/2.
fn half_order() -> BasisOrder {
    let alg = classify_algebra(3, -1).unwrap();
    BasisOrder::new(&alg, 2, [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [1, 1, 1, 1]]).unwrap()
}

fn squarefree(n: i64) -> bool {
    let n = n.unsigned_abs();
    (2..=n).take_while(|p| p * p <= n).all(|p| n % (p * p) != 0)
}

fn primes_of(n: u64) -> Vec<u64> {
    (2..=n).filter(|p| n % p == 0 && (2..*p).all(|q| p % q != 0)).collect()
}

/// Ramified iff z^2 = a x^2 + b y^2 has no solution mod p^k with x or y a unit (a, b squarefree).
fn ramified_by_search(a: i64, b: i64, p: u64) -> bool {
    let k = if p == 2 { 6 } else { 2 };
    let q = p.pow(k) as i64;
    let mut square = vec![false; q as usize];
    for z in 0..q {
        square[(z * z % q) as usize] = true;
    }
    for x in 0..q {
        for y in 0..q {
            if x % p as i64 == 0 && y % p as i64 == 0 {
                continue;
            }
            let v = (a * x % q * x + b * y % q * y).rem_euclid(q);
            if square[v as usize] {
                return false;
            }
        }
    }
    true
}

#[test]
fn ramification_matches_local_search() {
    let mut checked = 0;
    for a in 2..=23i64 {
        for b in -23..=-1i64 {
            if !squarefree(a) || !squarefree(b) {
                continue;
            }
            let mut cands = primes_of(2 * a.unsigned_abs() * b.unsigned_abs());
            cands.dedup();
            let want: Vec<u64> = cands.into_iter().filter(|&p| ramified_by_search(a, b, p)).collect();
            match classify_algebra(a, b) {
                Ok(alg) => {
                    assert_eq!(alg.ramified, want, "({a}, {b})");
                    assert_eq!(alg.ramified.len() % 2, 0, "({a}, {b})");
                }
                Err(_) => assert!(want.is_empty(), "({a}, {b}) rejected but ramified at {want:?}"),
            }
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn algebra_examples() {
    assert_eq!(classify_algebra(3, -1).unwrap().ramified, vec![2, 3]);
    assert!(classify_algebra(2, -1).is_err());
    assert!(classify_algebra(1, -7).is_err());
    assert!(classify_algebra(-3, -1).is_err());
}

#[test]
fn order_examples() {
    let s = default_order();
    assert_eq!(s.reduced_discriminant(), 12);
    assert_eq!(s.rf_conductor(), 1);
    let r = half_order();
    assert_eq!(r.reduced_discriminant(), 6);
    assert!(r.contains([1, 1, 1, 1]));
    assert!(!r.contains([1, 0, 0, 0]));
    let alg = classify_algebra(3, -1).unwrap();
    assert!(BasisOrder::new(&alg, 2, [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [1, 0, 0, 1]]).is_err());
}

#[test]
fn stratified_enumeration_equals_box_scan() {
    for order in [default_order(), half_order()] {
        for n in 1..=60u64 {
            for cprime in [2.0, 3.5] {
                let a = enumerate_norm_ball(&order, n, cprime).unwrap();
                let b = enumerate_norm_ball_box(&order, n, cprime).unwrap();
                assert_eq!(a, b, "n = {n}, C' = {cprime}");
            }
        }
    }
}

#[test]
fn ball_points_have_norm_and_radius() {
    let order = half_order();
    for n in [1u64, 6, 13, 35] {
        let ball = enumerate_norm_ball(&order, n, 4.0).unwrap();
        assert!(!ball.is_empty() || n == 35);
        for p in &ball {
            assert_eq!(order.scaled_norm(p.coords), (order.f * order.f) as i128 * n as i128);
            assert!(order.contains(p.coords));
            assert!(order.operator_norm(p.coords) <= 4.0 * (n as f64).sqrt() * (1.0 + 1e-12));
            assert!(p.coords.iter().find(|v| **v != 0).unwrap() > &0);
        }
    }
}

#[test]
fn stabilizing_points_normalize_the_axis() {
    let order = default_order();
    let axis = GeodesicDescriptor::imaginary_axis();
    for n in 1..=40u64 {
        for p in enumerate_norm_ball(&order, n, 6.0).unwrap() {
            let dn = psl2::dist_to_normalizer(&order.rho_bar(&p), &axis);
            assert_eq!(p.stabilizes(), dn < 1e-9, "{p:?} at distance {dn}");
        }
    }
}

#[test]
fn stabilizer_count_independent_of_unit_representative() {
    for order in [default_order(), half_order()] {
        let ((x, y), log) = rf_positive_unit(&order).unwrap();
        for n in 1..=300u64 {
            let a = exact_stabilizer_count_with_unit(&order, n, (x, y), log).unwrap();
            let b = exact_stabilizer_count_with_unit(&order, n, (x, -y), log).unwrap();
            assert_eq!(a, b, "n = {n}");
        }
    }
}

#[test]
fn exact_count_dominates_principal_count() {
    let order = default_order();
    let k = order.field();
    let rf = order.rf_order();
    for n in 1..=500u64 {
        assert!(exact_stabilizer_count(&order, n).unwrap() >= count_principal_generated(&k, &rf, n).unwrap(), "n = {n}");
    }
    assert_eq!(exact_stabilizer_count(&order, 1).unwrap(), 2);
}

#[test]
fn stabilizer_count_matches_ball_orbits() {
    // Every orbit under the unit meets the window |sigma| in [sqrt n, eps sqrt n), eps = 2 + sqrt 3,
    // so the ball of radius 5 sees every class.
    let order = default_order();
    let ((ux, uy), _) = rf_positive_unit(&order).unwrap();
    let unit = [ux as i64, uy as i64, 0, 0];
    let inv = [ux as i64, -uy as i64, 0, 0];
    for n in 1..=100u64 {
        let ball: Vec<[i64; 4]> = enumerate_norm_ball(&order, n, 5.0).unwrap().into_iter().filter(|p| p.stabilizes()).map(|p| p.coords).collect();
        let canon = |x: [i64; 4]| if x.iter().find(|v| **v != 0).map_or(false, |v| *v < 0) { x.map(|v| -v) } else { x };
        let mut classes: Vec<[i64; 4]> = Vec::new();
        for &x in &ball {
            let mut orbit = vec![canon(x)];
            let (mut a, mut b) = (x, x);
            for _ in 0..6 {
                a = canon(order.mul(a, unit));
                b = canon(order.mul(b, inv));
                orbit.push(a);
                orbit.push(b);
            }
            let rep = *orbit.iter().min().unwrap();
            if !classes.contains(&rep) {
                classes.push(rep);
            }
        }
        assert_eq!(classes.len() as u64, exact_stabilizer_count(&order, n).unwrap(), "n = {n}");
    }
}

#[test]
fn norm_one_units_have_norm_one() {
    for order in [default_order(), half_order()] {
        let units = norm_one_units(&order, 8);
        assert!(units.contains(&[order.f, 0, 0, 0]));
        for u in &units {
            assert_eq!(order.scaled_norm(*u), (order.f * order.f) as i128);
        }
    }
}

#[test]
fn class_invariants_survive_unit_conjugation() {
    let order = default_order();
    let units: Vec<[i64; 4]> = norm_one_units(&order, 4).into_iter().take(12).collect();
    for n in [2u64, 3, 5, 13] {
        for p in enumerate_norm_ball(&order, n, 5.0).unwrap() {
            let Ok(inv) = class_invariants(&order, &p) else { continue };
            for u in &units {
                let conj = [u[0], -u[1], -u[2], -u[3]];
                let q = order.mul(order.mul(*u, p.coords), conj);
                assert!(conjugate_by_units(&order, &units, p.coords, q));
                let qi = class_invariants(&order, &LatticePoint { coords: q, n }).unwrap();
                assert!((qi.trace.abs() - inv.trace.abs()).abs() < 1e-12);
                assert_eq!(qi.disc, inv.disc);
            }
        }
    }
}

#[test]
fn discriminant_examples() {
    let order = default_order();
    // alpha generates Z[sqrt 3] of discriminant 12; omega generates Z[i] of discriminant -4
    assert_eq!(order_discriminant(&order, [0, 1, 0, 0]).unwrap(), 12);
    assert_eq!(order_discriminant(&order, [0, 0, 1, 0]).unwrap(), -4);
    // R n Q(5 + 2 alpha) is still Z[alpha]
    assert_eq!(order_discriminant(&order, [5, 2, 0, 0]).unwrap(), 12);
    let r = half_order();
    // (1 + alpha + omega + alpha omega)/2 is a root of x^2 - x - 1
    assert_eq!(order_discriminant(&r, [1, 1, 1, 1]).unwrap(), 5);
}

fn quat() -> impl Strategy<Value = [i64; 4]> {
    prop::array::uniform4(-20i64..20)
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

proptest! {
    #[test]
    fn norm_is_multiplicative(x in quat(), y in quat()) {
        let order = default_order();
        prop_assert_eq!(order.scaled_norm(order.mul(x, y)), order.scaled_norm(x) * order.scaled_norm(y));
    }

    #[test]
    fn rho_is_a_homomorphism(x in quat(), y in quat()) {
        let order = default_order();
        let lhs = order.rho(order.mul(x, y));
        let rhs = mat_mul(order.rho(x), order.rho(y));
        let scale = 1.0 + lhs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-10 * scale);
            }
        }
        let m = order.rho(x);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        prop_assert!((det - order.scaled_norm(x) as f64).abs() < 1e-9 * (1.0 + det.abs()));
    }

    #[test]
    fn operator_norm_is_spectral(x in quat()) {
        let order = default_order();
        let m = order.rho(x);
        // largest singular value by power iteration on M^T M
        let mtm = mat_mul([[m[0][0], m[1][0]], [m[0][1], m[1][1]]], m);
        let mut v = [1.0f64, 0.3];
        for _ in 0..200 {
            let w = [mtm[0][0] * v[0] + mtm[0][1] * v[1], mtm[1][0] * v[0] + mtm[1][1] * v[1]];
            let nw = (w[0] * w[0] + w[1] * w[1]).sqrt();
            if nw == 0.0 { break; }
            v = [w[0] / nw, w[1] / nw];
        }
        let w = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        let sigma = (w[0] * w[0] + w[1] * w[1]).sqrt();
        prop_assert!((sigma - order.operator_norm(x)).abs() < 1e-6 * (1.0 + sigma));
    }

    #[test]
    fn rho_bar_distance_matches_operator_norm(n in 1u64..30) {
        let order = default_order();
        let e = GroupElement::identity();
        for p in enumerate_norm_ball(&order, n, 3.0).unwrap() {
            let t = psl2::cartan_t(&order.rho_bar(&p));
            let op = order.operator_norm(p.coords) / (n as f64).sqrt();
            prop_assert!((t - 2.0 * op.ln()).abs() < 1e-9);
            prop_assert!(psl2::dist(&order.rho_bar(&p), &e) >= 0.0);
        }
    }
}
