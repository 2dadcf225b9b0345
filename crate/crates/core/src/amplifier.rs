//! Amplification: the square of a Hecke polynomial, the sums B, R, B_L, R_L,
//! the resonator sequence and the final budget.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_traits::{FromPrimitive, Num};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd};
use crate::error::{Error, Result};
use crate::quadfield::{self, OrderData, QuadraticField};
use crate::quatorder::{self, BasisOrder};

/// Default sieve limit for the prime window.
pub const SIEVE_LIMIT: u64 = 10_000_000;

/// Largest index for which the stabilizer oracle counts exactly.
pub const EXACT_STAB_LIMIT: u64 = 10_000;

/// Nonnegative weights a_n on a finite support coprime to the excluded primes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSequence {
    pub weights: BTreeMap<u64, f64>,
    pub excluded: Vec<u64>,
}

impl ResonatorSequence {
    pub fn new(weights: BTreeMap<u64, f64>, excluded: Vec<u64>) -> Result<Self> {
        for (&n, &w) in &weights {
            if n == 0 {
                return Err(Error::InvalidParameter("support must be positive".into()));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("weight a_{n} = {w} is not a nonnegative real")));
            }
        }
        check_coprime(weights.keys().copied(), &excluded)?;
        Ok(ResonatorSequence { weights, excluded })
    }

    /// a = delta_1.
    pub fn delta_one() -> Self {
        ResonatorSequence { weights: BTreeMap::from([(1, 1.0)]), excluded: Vec::new() }
    }

    pub fn weight(&self, n: u64) -> f64 {
        self.weights.get(&n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

fn check_coprime(support: impl Iterator<Item = u64>, excluded: &[u64]) -> Result<()> {
    for n in support {
        if let Some(&p) = excluded.iter().find(|&&p| p > 1 && n % p == 0) {
            return Err(Error::NotCoprime { n, conductor: p });
        }
    }
    Ok(())
}

/// Coefficients of (sum a_n T_n)^2 in the basis T_l, using T_m T_n = sum_{d | m, n} d T_{mn/d^2}.
pub fn hecke_square_expand_generic<W>(a: &BTreeMap<u64, W>, excluded: &[u64]) -> Result<BTreeMap<u64, W>>
where
    W: Num + Copy + FromPrimitive,
{
    check_coprime(a.keys().copied(), excluded)?;
    let mut out: BTreeMap<u64, W> = BTreeMap::new();
    for (&m, &am) in a {
        for (&n, &an) in a {
            let g = gcd(m, n);
            for d in arith::divisors(g)? {
                let l = (m / d).checked_mul(n / d).ok_or(Error::Overflow("hecke index"))?;
                let dw = W::from_u64(d).ok_or(Error::Overflow("hecke weight"))?;
                let e = out.entry(l).or_insert_with(W::zero);
                *e = *e + am * an * dw;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Coefficients of (sum a_n T_n)^2 for a resonator sequence.
pub fn hecke_square_expand(a: &ResonatorSequence) -> Result<BTreeMap<u64, f64>> {
    hecke_square_expand_generic(&a.weights, &a.excluded)
}

/// 1 if n is a perfect square, else 0.
pub fn s(n: u64) -> f64 {
    if arith::is_square(n as i128) {
        1.0
    } else {
        0.0
    }
}

/// exp(C log x / log log(1 + x)).
pub fn subpower(x: f64, c: f64) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    (c * x.ln() / (1.0 + x).ln().ln()).exp()
}

/// How a stabilizer count was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    LowerBound,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::LowerBound => "lower_bound",
        }
    }
}

/// n -> |N_{R(n)}(F) / R_F^1|.
pub trait StabOracle: Sync {
    fn stab(&self, n: u64) -> Result<(f64, Provenance)>;
}

impl<F: Fn(u64) -> Result<f64> + Sync> StabOracle for F {
    fn stab(&self, n: u64) -> Result<(f64, Provenance)> {
        Ok((self(n)?, Provenance::Exact))
    }
}

/// Exact quaternionic counts up to `exact_limit`, the principal-ideal lower bound beyond.
pub struct QuaternionStabOracle {
    order: BasisOrder,
    field: QuadraticField,
    rf: OrderData,
    exact_limit: u64,
    cache: Mutex<HashMap<u64, (f64, Provenance)>>,
}

impl QuaternionStabOracle {
    pub fn new(order: &BasisOrder) -> Self {
        Self::with_limit(order, EXACT_STAB_LIMIT)
    }

    pub fn with_limit(order: &BasisOrder, exact_limit: u64) -> Self {
        QuaternionStabOracle {
            order: order.clone(),
            field: order.field(),
            rf: order.rf_order(),
            exact_limit,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Primes dividing Delta_R f_{R_F}.
    pub fn excluded_primes(&self) -> Result<Vec<u64>> {
        excluded_primes(&self.order)
    }
}

/// Primes dividing Delta_R f_{R_F}.
pub fn excluded_primes(order: &BasisOrder) -> Result<Vec<u64>> {
    let mut ps: Vec<u64> = arith::factorize(order.reduced_discriminant())?.into_iter().map(|(p, _)| p).collect();
    for (p, _) in arith::factorize(order.rf_conductor())? {
        ps.push(p);
    }
    ps.sort_unstable();
    ps.dedup();
    Ok(ps)
}

impl StabOracle for QuaternionStabOracle {
    fn stab(&self, n: u64) -> Result<(f64, Provenance)> {
        if let Some(v) = self.cache.lock().unwrap().get(&n) {
            return Ok(*v);
        }
        let v = if n <= self.exact_limit {
            (quatorder::exact_stabilizer_count(&self.order, n)? as f64, Provenance::Exact)
        } else {
            (quadfield::count_principal_generated(&self.field, &self.rf, n)? as f64, Provenance::LowerBound)
        };
        self.cache.lock().unwrap().insert(n, v);
        Ok(v)
    }
}

/// The four sums and the constant C used in R and R_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierSums {
    pub b: f64,
    pub r: f64,
    pub b_l: f64,
    pub r_l: f64,
    pub error_c: f64,
}

#[derive(Default, Clone, Copy)]
struct Partial {
    b: f64,
    r: f64,
    b_l: f64,
    r_l: f64,
}

impl Partial {
    fn add(self, o: Partial) -> Partial {
        Partial { b: self.b + o.b, r: self.r + o.r, b_l: self.b_l + o.b_l, r_l: self.r_l + o.r_l }
    }

    fn term(w: f64, l: u64, st: f64, c: f64) -> Partial {
        let x = l as f64;
        let sp = subpower(x, c);
        Partial { b: w * s(l), r: w * x.powf(1.5) * sp, b_l: w * st, r_l: w * x * sp }
    }

    fn finish(self, c: f64) -> AmplifierSums {
        AmplifierSums { b: self.b, r: self.r, b_l: self.b_l, r_l: self.r_l, error_c: c }
    }
}

fn pairwise(mut v: Vec<Partial>) -> Partial {
    while v.len() > 1 {
        v = v.chunks(2).map(|c| if c.len() == 2 { c[0].add(c[1]) } else { c[0] }).collect();
    }
    v.pop().unwrap_or_default()
}

/// The four sums by the loop over (m, n, d).
pub fn compute_sums(a: &ResonatorSequence, stab: &dyn StabOracle, c: f64) -> Result<AmplifierSums> {
    check_coprime(a.weights.keys().copied(), &a.excluded)?;
    let support: Vec<(u64, f64)> = a.weights.iter().map(|(n, w)| (*n, *w)).collect();
    let rows: Vec<Partial> = support
        .par_iter()
        .map(|&(m, am)| -> Result<Partial> {
            let mut row = Vec::new();
            for &(n, an) in &support {
                for d in arith::divisors(gcd(m, n))? {
                    let l = (m / d) * (n / d);
                    row.push(Partial::term(am * an * d as f64, l, stab.stab(l)?.0, c));
                }
            }
            Ok(pairwise(row))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise(rows).finish(c))
}

/// The four sums through the expansion in T_l.
pub fn compute_sums_grouped(a: &ResonatorSequence, stab: &dyn StabOracle, c: f64) -> Result<AmplifierSums> {
    let coeffs: Vec<(u64, f64)> = hecke_square_expand(a)?.into_iter().collect();
    let terms: Vec<Partial> = coeffs
        .par_iter()
        .map(|&(l, w)| Ok(Partial::term(w, l, stab.stab(l)?.0, c)))
        .collect::<Result<_>>()?;
    Ok(pairwise(terms).finish(c))
}

/// The resonator sequence for one M with its construction data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonator {
    pub m: f64,
    pub l: f64,
    pub window: (f64, f64),
    pub truncated: bool,
    pub primes: Vec<u64>,
    pub sequence: ResonatorSequence,
}

/// f(p) = L / (p log p) on split primes p not dividing the excluded set, L^2 < p <= exp(log^2 L);
/// a_n = f(n) on squarefree products n <= M.
pub fn build_resonator(m: f64, field: &QuadraticField, excluded: &[u64]) -> Result<Resonator> {
    build_resonator_with_limit(m, field, excluded, SIEVE_LIMIT)
}

pub fn build_resonator_with_limit(m: f64, field: &QuadraticField, excluded: &[u64], sieve: u64) -> Result<Resonator> {
    if !(m > 3.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("M must exceed 3, got {m}")));
    }
    let l = (2.0 * m.ln() * m.ln().ln()).sqrt();
    let (lo, hi) = (l * l, (l.ln() * l.ln()).exp());
    let truncated = hi > sieve as f64;
    let top = hi.min(sieve as f64).min(m).floor() as u64;
    let primes: Vec<u64> = arith::primes_up_to(top)
        .into_iter()
        .filter(|&p| p as f64 > lo && field.chi(p) == 1 && !excluded.contains(&p))
        .collect();
    let mut weights = BTreeMap::from([(1u64, 1.0)]);
    for &p in &primes {
        let fp = l / (p as f64 * (p as f64).ln());
        let current: Vec<(u64, f64)> = weights.iter().map(|(n, w)| (*n, *w)).collect();
        for (n, w) in current {
            if let Some(np) = n.checked_mul(p) {
                if np as f64 <= m {
                    weights.insert(np, w * fp);
                }
            }
        }
    }
    let sequence = ResonatorSequence::new(weights, excluded.to_vec())?;
    Ok(Resonator { m, l, window: (lo, hi), truncated, primes, sequence })
}

/// exp(2 sqrt 2 sqrt(log M / log log M)).
pub fn ratio_predictor(m: f64) -> f64 {
    (2.0 * 2f64.sqrt() * (m.ln() / m.ln().ln()).sqrt()).exp()
}

/// One row of the resonator report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorRow {
    pub m: f64,
    pub b: f64,
    pub r: f64,
    pub b_l: f64,
    pub r_l: f64,
    pub ratio: f64,
    pub predictor: f64,
    /// log(ratio) / sqrt(log M / log log M), to set against 2 sqrt 2.
    pub scaled_log_ratio: f64,
    pub truncated: bool,
    pub support_size: usize,
    pub primes: Vec<u64>,
    pub sum_a: f64,
    /// log(sum a_n) / sqrt(log M).
    pub sum_a_exponent: f64,
    pub grouped_agreement: f64,
    /// Provenance of each stabilizer count entering B_L.
    pub stab_rows: Vec<(u64, f64, Provenance)>,
}

fn rel_diff(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        (x - y).abs() / x.abs().max(y.abs())
    }
}

/// Largest relative difference between two evaluations of the four sums.
pub fn sums_agreement(x: &AmplifierSums, y: &AmplifierSums) -> f64 {
    [rel_diff(x.b, y.b), rel_diff(x.r, y.r), rel_diff(x.b_l, y.b_l), rel_diff(x.r_l, y.r_l)]
        .into_iter()
        .fold(0.0, f64::max)
}

pub fn resonator_row(res: &Resonator, stab: &dyn StabOracle, c: f64) -> Result<ResonatorRow> {
    let a = &res.sequence;
    let direct = compute_sums(a, stab, c)?;
    let grouped = compute_sums_grouped(a, stab, c)?;
    let mut stab_rows = Vec::new();
    for &l in hecke_square_expand(a)?.keys() {
        let (v, p) = stab.stab(l)?;
        stab_rows.push((l, v, p));
    }
    let m = res.m;
    let ratio = direct.b_l / direct.b;
    let sum_a = a.total();
    Ok(ResonatorRow {
        m,
        b: direct.b,
        r: direct.r,
        b_l: direct.b_l,
        r_l: direct.r_l,
        ratio,
        predictor: ratio_predictor(m),
        scaled_log_ratio: ratio.ln() / (m.ln() / m.ln().ln()).sqrt(),
        truncated: res.truncated,
        support_size: a.weights.len(),
        primes: res.primes.clone(),
        sum_a,
        sum_a_exponent: sum_a.ln() / m.ln().sqrt(),
        grouped_agreement: sums_agreement(&direct, &grouped),
        stab_rows,
    })
}

/// One row per M.
pub fn resonator_report(
    ms: &[f64],
    field: &QuadraticField,
    excluded: &[u64],
    stab: &dyn StabOracle,
    c: f64,
) -> Result<Vec<ResonatorRow>> {
    ms.iter().map(|&m| resonator_row(&build_resonator(m, field, excluded)?, stab, c)).collect()
}

/// M = nu^{1/4} exp(-A log nu / log log nu).
pub fn budget_m(nu: f64, a: f64) -> f64 {
    let ln = nu.ln();
    (0.25 * ln - a * ln / ln.ln()).exp()
}

/// exp(1/2 sqrt(log lambda / log log lambda)) with lambda = nu^2 + 1/4.
pub fn period_lower_bound(nu: f64) -> f64 {
    let lambda = nu * nu + 0.25;
    (0.5 * (lambda.ln() / lambda.ln().ln()).sqrt()).exp()
}

/// exp(sqrt(log nu / (2 log log nu))), the same bound written in nu.
pub fn period_lower_bound_nu(nu: f64) -> f64 {
    (nu.ln() / (2.0 * nu.ln().ln())).sqrt().exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceFlags {
    /// R <= nu B.
    pub standard: bool,
    /// nu^{-1/2} R_L <= B_L.
    pub relative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub nu: f64,
    pub a: f64,
    pub cpp: f64,
    pub m: f64,
    pub sums: AmplifierSums,
    /// nu B, the size of the standard main term up to the volume and k_nu(e)/nu.
    pub main_standard: f64,
    /// B_L, the size of the relative main term up to the period length and geodesic mass.
    pub main_relative: f64,
    pub standard_error_bound: f64,
    pub relative_error_bound: f64,
    pub lower_bound_prediction: f64,
    pub lower_bound_nu_form: f64,
    pub a_admissible: bool,
    pub dominance_flags: DominanceFlags,
    pub resonator: Resonator,
}

/// The full budget at nu with M = nu^{1/4} exp(-A log nu / log log nu).
pub fn theorem_budget(
    nu: f64,
    a: f64,
    cpp: f64,
    field: &QuadraticField,
    excluded: &[u64],
    stab: &dyn StabOracle,
    c: f64,
) -> Result<Budget> {
    let m = budget_m(nu, a);
    if !(m > 3.0) {
        return Err(Error::InvalidParameter(format!("M = {m} must exceed 3; increase nu or decrease A")));
    }
    let resonator = build_resonator(m, field, excluded)?;
    let sums = compute_sums(&resonator.sequence, stab, c)?;
    let lm = m.ln();
    let dominance_flags = DominanceFlags { standard: sums.r <= nu * sums.b, relative: sums.r_l / nu.sqrt() <= sums.b_l };
    Ok(Budget {
        nu,
        a,
        cpp,
        m,
        sums,
        main_standard: nu * sums.b,
        main_relative: sums.b_l,
        standard_error_bound: m.powi(3) * (cpp * lm / lm.ln()).exp(),
        relative_error_bound: m.powi(2) * (cpp * lm / lm.ln()).exp(),
        lower_bound_prediction: period_lower_bound(nu),
        lower_bound_nu_form: period_lower_bound_nu(nu),
        a_admissible: a > cpp / 8.0,
        dominance_flags,
        resonator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_p_expansion() {
        let a = BTreeMap::from([(5u64, 1i128)]);
        let e = hecke_square_expand_generic(&a, &[]).unwrap();
        assert_eq!(e, BTreeMap::from([(1, 5), (25, 1)]));
    }

    #[test]
    fn delta_one_sums() {
        let one = |_: u64| Ok(2.0);
        let s = compute_sums(&ResonatorSequence::delta_one(), &one, 2.0).unwrap();
        assert_eq!((s.b, s.r, s.b_l, s.r_l), (1.0, 1.0, 2.0, 1.0));
    }

    #[test]
    fn delta_p_b() {
        let a = ResonatorSequence::new(BTreeMap::from([(7, 1.0)]), vec![2, 3]).unwrap();
        let one = |_: u64| Ok(1.0);
        assert_eq!(compute_sums(&a, &one, 2.0).unwrap().b, 8.0);
    }

    #[test]
    fn rejects_excluded_support() {
        let a = BTreeMap::from([(6u64, 1i128)]);
        assert!(hecke_square_expand_generic(&a, &[2, 3]).is_err());
        assert!(ResonatorSequence::new(BTreeMap::from([(9, 1.0)]), vec![3]).is_err());
    }

    #[test]
    fn empty_window() {
        let k = QuadraticField::new(3).unwrap();
        let r = build_resonator(1e3, &k, &[2, 3]).unwrap();
        assert!(r.primes.is_empty());
        assert_eq!(r.sequence.weights, BTreeMap::from([(1, 1.0)]));
    }

    #[test]
    fn m_formula() {
        let m = budget_m(1e8, 1.0);
        assert!((m - 0.1795300471324143965).abs() < 1e-15 * 0.18);
    }
}
