use std::collections::BTreeMap;

use amplify_core::amplifier::*;
use amplify_core::quadfield::QuadraticField;
use amplify_core::quatorder::{classify_algebra, BasisOrder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESONATOR_GOLDEN: &str = include_str!("golden/resonator_sums.csv");

fn factor(mut n: u64) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            *out.entry(p).or_insert(0) += 1;
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        *out.entry(n).or_insert(0) += 1;
    }
    out
}

/// T_{p^a} T_{p^b} as exponent -> coefficient, from T_p T_{p^k} = T_{p^{k+1}} + p T_{p^{k-1}}.
fn local_product(p: i128, a: u32, b: u32) -> BTreeMap<u32, i128> {
    if a == 0 {
        return BTreeMap::from([(b, 1)]);
    }
    if a > b {
        return local_product(p, b, a);
    }
    // T_{p^a} = T_p T_{p^{a-1}} - p T_{p^{a-2}}
    let mut out: BTreeMap<u32, i128> = BTreeMap::new();
    for (k, c) in local_product(p, a - 1, b) {
        *out.entry(k + 1).or_insert(0) += c;
        if k > 0 {
            *out.entry(k - 1).or_insert(0) += p * c;
        }
    }
    if a >= 2 {
        for (k, c) in local_product(p, a - 2, b) {
            *out.entry(k).or_insert(0) -= p * c;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// T_m T_n as index -> coefficient, prime by prime.
fn product(m: u64, n: u64) -> BTreeMap<u64, i128> {
    let (fm, fn_) = (factor(m), factor(n));
    let mut primes: Vec<u64> = fm.keys().chain(fn_.keys()).copied().collect();
    primes.sort_unstable();
    primes.dedup();
    let mut acc: BTreeMap<u64, i128> = BTreeMap::from([(1, 1)]);
    for p in primes {
        let local = local_product(p as i128, fm.get(&p).copied().unwrap_or(0), fn_.get(&p).copied().unwrap_or(0));
        let mut next = BTreeMap::new();
        for (l, c) in &acc {
            for (k, d) in &local {
                *next.entry(l * p.pow(*k)).or_insert(0) += c * d;
            }
        }
        acc = next;
    }
    acc
}

fn square_by_recursion(a: &BTreeMap<u64, i128>) -> BTreeMap<u64, i128> {
    let mut out: BTreeMap<u64, i128> = BTreeMap::new();
    for (&m, &am) in a {
        for (&n, &an) in a {
            for (l, c) in product(m, n) {
                *out.entry(l).or_insert(0) += am * an * c;
            }
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn random_support(rng: &mut ChaCha8Rng, excluded: &[u64]) -> BTreeMap<u64, i128> {
    let size = rng.gen_range(1..=10);
    let mut a = BTreeMap::new();
    while a.len() < size {
        let n = rng.gen_range(1..=100u64);
        if excluded.iter().any(|p| n % p == 0) {
            continue;
        }
        let mut c = rng.gen_range(-9..=9i128);
        if c == 0 {
            c = 1;
        }
        a.insert(n, c);
    }
    a
}

#[test]
fn hecke_expansion_matches_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for trial in 0..50 {
        let excluded: &[u64] = if trial % 2 == 0 { &[] } else { &[2, 3] };
        let a = random_support(&mut rng, excluded);
        let got = hecke_square_expand_generic(&a, excluded).unwrap();
        assert_eq!(got, square_by_recursion(&a), "support {a:?}");
    }
}

#[test]
fn hecke_products_examples() {
    assert_eq!(product(2, 2), BTreeMap::from([(1, 2), (4, 1)]));
    assert_eq!(product(4, 2), BTreeMap::from([(2, 2), (8, 1)]));
    assert_eq!(product(4, 4), BTreeMap::from([(1, 4), (4, 2), (16, 1)]));
    assert_eq!(product(6, 10), BTreeMap::from([(15, 2), (60, 1)]));
    let a = BTreeMap::from([(1u64, 1i128), (5, 1)]);
    assert_eq!(hecke_square_expand_generic(&a, &[]).unwrap(), BTreeMap::from([(1, 6), (5, 2), (25, 1)]));
    assert!(hecke_square_expand_generic(&BTreeMap::from([(6u64, 1i128)]), &[3]).is_err());
}

fn sigma1(n: u64) -> i128 {
    (1..=n).filter(|d| n % d == 0).map(|d| d as i128).sum()
}

fn default_order() -> BasisOrder {
    BasisOrder::standard(&classify_algebra(3, -1).unwrap()).unwrap()
}

#[test]
fn resonator_sums_match_golden() {
    let order = default_order();
    let field = QuadraticField::new(3).unwrap();
    let excluded = excluded_primes(&order).unwrap();
    assert_eq!(excluded, vec![2, 3]);
    let stab = QuaternionStabOracle::with_limit(&order, u64::MAX);
    for line in RESONATOR_GOLDEN.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let res = build_resonator(v[0], &field, &excluded).unwrap();
        let sums = compute_sums(&res.sequence, &stab, v[1]).unwrap();
        for (got, want, name) in [(sums.b, v[2], "B"), (sums.r, v[3], "R"), (sums.b_l, v[4], "B_L"), (sums.r_l, v[5], "R_L")] {
            assert!((got - want).abs() <= 1e-12 * want.abs(), "{name} at M = {}, C = {}: {got} vs {want}", v[0], v[1]);
        }
    }
}

#[test]
fn resonator_prime_window_at_a_million() {
    let field = QuadraticField::new(3).unwrap();
    let res = build_resonator(1e6, &field, &[2, 3]).unwrap();
    assert_eq!(res.primes, vec![73, 83, 97]);
    assert_eq!(res.sequence.weights.len(), 8);
    assert!(!res.truncated);
    for m in [1e3, 1e4, 1e5] {
        let r = build_resonator(m, &field, &[2, 3]).unwrap();
        assert_eq!(r.sequence, ResonatorSequence { weights: BTreeMap::from([(1, 1.0)]), excluded: vec![2, 3] });
    }
    assert!(build_resonator(3.0, &field, &[]).is_err());
}

#[test]
fn lower_bound_oracle_is_labelled() {
    let order = default_order();
    let stab = QuaternionStabOracle::with_limit(&order, 100);
    let (v, p) = stab.stab(73).unwrap();
    assert_eq!((v, p), (4.0, Provenance::Exact));
    let (v, p) = stab.stab(73 * 97).unwrap();
    assert_eq!(p, Provenance::LowerBound);
    let exact = QuaternionStabOracle::with_limit(&order, u64::MAX).stab(73 * 97).unwrap().0;
    assert!(v <= exact);
}

fn sequence() -> impl Strategy<Value = ResonatorSequence> {
    prop::collection::btree_map(prop::sample::select(vec![5u64, 7, 11, 13, 25, 35, 49, 55, 77, 91]), 0.0..2.0f64, 0..6).prop_map(|mut w| {
        w.insert(1, 1.0);
        ResonatorSequence::new(w, vec![2, 3]).unwrap()
    })
}

fn toy_stab(l: u64) -> amplify_core::Result<f64> {
    Ok((1..=l).take(400).filter(|d| l % d == 0).count() as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_is_multiplicative(support in prop::collection::btree_map(1u64..60, -5i128..6, 1..6)) {
        // T_n acts on constants by sigma_1(n)
        let sq = hecke_square_expand_generic(&support, &[]).unwrap();
        let lhs: i128 = sq.iter().map(|(l, c)| c * sigma1(*l)).sum();
        let one: i128 = support.iter().map(|(n, c)| c * sigma1(*n)).sum();
        prop_assert_eq!(lhs, one * one);
    }

    #[test]
    fn direct_and_grouped_sums_agree(a in sequence(), c in 0.5..4.0f64) {
        let x = compute_sums(&a, &toy_stab, c).unwrap();
        let y = compute_sums_grouped(&a, &toy_stab, c).unwrap();
        prop_assert!(sums_agreement(&x, &y) <= 1e-12);
    }

    #[test]
    fn diagonal_bounds(a in sequence()) {
        let x = compute_sums(&a, &toy_stab, 2.0).unwrap();
        let diag: f64 = a.weights.iter().map(|(n, w)| *n as f64 * w * w).sum();
        prop_assert!(x.b >= 1.0);
        prop_assert!(x.b >= diag * (1.0 - 1e-12));
        prop_assert!(x.b_l >= diag * (1.0 - 1e-12));
    }

    #[test]
    fn sums_monotone_in_c(a in sequence(), c1 in 0.5..4.0f64, c2 in 0.5..4.0f64) {
        let (lo, hi) = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        let x = compute_sums(&a, &toy_stab, lo).unwrap();
        let y = compute_sums(&a, &toy_stab, hi).unwrap();
        prop_assert!(x.r <= y.r && x.r_l <= y.r_l);
        prop_assert_eq!(x.b, y.b);
        prop_assert_eq!(x.b_l, y.b_l);
    }

    #[test]
    fn sums_quadratic_in_weights(a in sequence(), lam in 0.1..3.0f64) {
        let scaled = ResonatorSequence::new(a.weights.iter().map(|(n, w)| (*n, w * lam)).collect(), a.excluded.clone()).unwrap();
        let x = compute_sums(&a, &toy_stab, 2.0).unwrap();
        let y = compute_sums(&scaled, &toy_stab, 2.0).unwrap();
        let l2 = lam * lam;
        for (u, v) in [(x.b, y.b), (x.r, y.r), (x.b_l, y.b_l), (x.r_l, y.r_l)] {
            prop_assert!((u * l2 - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn budget_m_decreasing_in_a(nu in 1e4..1e9f64, a1 in 0.0..0.4f64, a2 in 0.0..0.4f64) {
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(budget_m(nu, hi) <= budget_m(nu, lo));
        prop_assert!((budget_m(nu, 0.0) - nu.powf(0.25)).abs() < 1e-9 * nu.powf(0.25));
    }
}
