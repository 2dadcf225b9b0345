//! Real quadratic fields: splitting, units, ideal counts and approximate norm equations.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, exact_sqrt, factorize, gcd, isqrt};
use crate::error::{Error, Result};

/// Behaviour of a rational prime in a quadratic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

/// The field Q(alpha) with alpha^2 = D, D > 0 not a square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticField {
    d: u64,
    d0: u64,
    m: u64,
    disc: u64,
}

impl QuadraticField {
    pub fn new(d: u64) -> Result<Self> {
        if d == 0 || arith::is_square(d as i128) {
            return Err(Error::InvalidParameter(format!("D = {d} must be a positive non-square")));
        }
        let (d0, m) = arith::squarefree_part(d)?;
        let disc = if d0 % 4 == 1 { d0 } else { 4 * d0 };
        Ok(QuadraticField { d, d0, m, disc })
    }

    /// The integer D with alpha^2 = D.
    pub fn d(&self) -> u64 {
        self.d
    }

    /// Squarefree kernel of D.
    pub fn squarefree(&self) -> u64 {
        self.d0
    }

    /// D = m^2 d0.
    pub fn square_cofactor(&self) -> u64 {
        self.m
    }

    /// Field discriminant.
    pub fn discriminant(&self) -> u64 {
        self.disc
    }

    /// Kronecker character of the field at a prime.
    pub fn chi(&self, p: u64) -> i32 {
        arith::kronecker_prime(self.disc as i128, p)
    }

    pub fn splitting(&self, p: u64) -> Splitting {
        match self.chi(p) {
            1 => Splitting::Split,
            -1 => Splitting::Inert,
            _ => Splitting::Ramified,
        }
    }

    /// O_K membership of (x + y sqrt(d0)) / 2.
    pub fn is_integral_half(&self, x: i128, y: i128) -> bool {
        if self.d0 % 4 == 1 {
            (x - y).rem_euclid(2) == 0
        } else {
            x.rem_euclid(2) == 0 && y.rem_euclid(2) == 0
        }
    }

    /// Coefficient of omega for (x + y sqrt(d0)) / 2 in the basis {1, omega} of O_K.
    pub fn omega_coefficient(&self, y: i128) -> i128 {
        if self.d0 % 4 == 1 {
            y
        } else {
            y / 2
        }
    }
}

/// An order Z + f O_K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderData {
    pub conductor: u64,
    pub discriminant: u64,
}

impl OrderData {
    pub fn maximal(k: &QuadraticField) -> Self {
        OrderData { conductor: 1, discriminant: k.discriminant() }
    }

    pub fn with_conductor(k: &QuadraticField, f: u64) -> Self {
        OrderData { conductor: f, discriminant: f * f * k.discriminant() }
    }

    /// Membership of (x + y sqrt(d0)) / 2.
    pub fn contains_half(&self, k: &QuadraticField, x: i128, y: i128) -> bool {
        k.is_integral_half(x, y) && k.omega_coefficient(y).rem_euclid(self.conductor as i128) == 0
    }
}

/// Fundamental unit of an order, eps = (x + y sqrt(d0)) / 2 > 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitData {
    pub conductor: u64,
    #[serde(with = "bigint_string")]
    pub x: BigInt,
    #[serde(with = "bigint_string")]
    pub y: BigInt,
    pub norm: i32,
    pub regulator: f64,
    /// 1 if the norm is +1, 2 if it is -1.
    pub positive_generator_factor: u32,
}

mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl UnitData {
    /// (t, u) with eps = t + u alpha, each as (numerator, denominator).
    pub fn t_u(&self, k: &QuadraticField) -> ((BigInt, BigInt), (BigInt, BigInt)) {
        let two = BigInt::from(2);
        let t = reduce(self.x.clone(), two.clone());
        let u = reduce(self.y.clone(), two * BigInt::from(k.m));
        (t, u)
    }

    /// log of the smallest totally positive unit > 1.
    pub fn totally_positive_log(&self) -> f64 {
        self.positive_generator_factor as f64 * self.regulator
    }

    /// Small unit as i128 half coordinates, or an overflow error.
    pub fn small(&self) -> Result<(i128, i128)> {
        match (self.x.to_i128(), self.y.to_i128()) {
            (Some(x), Some(y)) if x.abs() < (1 << 60) && y.abs() < (1 << 60) => Ok((x, y)),
            _ => Err(Error::Overflow("fundamental unit too large for exact orbit arithmetic")),
        }
    }
}

fn reduce(n: BigInt, d: BigInt) -> (BigInt, BigInt) {
    let g = num_integer_gcd(&n, &d);
    (n / &g, d / g)
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let t = &a % &b;
        a = b;
        b = t;
    }
    if a.is_zero() {
        BigInt::one()
    } else {
        a
    }
}

/// ln of a positive big integer.
pub fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    let top: BigInt = x >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Continued-fraction solution of X^2 - D Y^2 = +-Q0^2 via the PQa recurrence.
fn pqa_unit(p0: i64, q0: i64, dd: u64) -> (BigInt, BigInt, i32) {
    let s = isqrt(dd as u128) as i64;
    let (mut a2, mut a1) = (BigInt::zero(), BigInt::one());
    let (mut b2, mut b1) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (p0, q0);
    let mut i = 0u64;
    loop {
        let a = (p + s).div_euclid(q);
        let an = BigInt::from(a) * &a1 + &a2;
        let bn = BigInt::from(a) * &b1 + &b2;
        a2 = std::mem::replace(&mut a1, an);
        b2 = std::mem::replace(&mut b1, bn);
        let pn = a * q - p;
        let qn = (dd as i64 - pn * pn) / q;
        p = pn;
        q = qn;
        if q == q0 {
            let g = BigInt::from(q0) * &a1 - BigInt::from(p0) * &b1;
            let sign = if i % 2 == 0 { -1 } else { 1 };
            return (g, b1, sign);
        }
        i += 1;
    }
}

/// Fundamental unit of the maximal order of Q(sqrt D).
pub fn fundamental_unit(d: u64) -> Result<UnitData> {
    let k = QuadraticField::new(d)?;
    Ok(maximal_unit(&k))
}

fn maximal_unit(k: &QuadraticField) -> UnitData {
    let d0 = k.d0;
    let (x, y, norm) = if d0 % 4 == 1 {
        pqa_unit(1, 2, d0)
    } else {
        let (x, y, n) = pqa_unit(0, 1, d0);
        (x * 2, y * 2, n)
    };
    let regulator = unit_log(&x, &y, d0);
    UnitData {
        conductor: 1,
        x,
        y,
        norm,
        regulator,
        positive_generator_factor: if norm == 1 { 1 } else { 2 },
    }
}

fn unit_log(x: &BigInt, y: &BigInt, d0: u64) -> f64 {
    if x.bits() < 500 {
        let xf = x.to_f64().unwrap();
        let yf = y.to_f64().unwrap();
        (0.5 * (xf + yf * (d0 as f64).sqrt())).ln()
    } else {
        big_ln(x)
    }
}

fn half_mul(k: &QuadraticField, a: (&BigInt, &BigInt), b: (&BigInt, &BigInt)) -> (BigInt, BigInt) {
    let d0 = BigInt::from(k.d0);
    let x = (a.0 * b.0 + d0 * a.1 * b.1) / 2;
    let y = (a.0 * b.1 + a.1 * b.0) / 2;
    (x, y)
}

/// Unit data of the order Z + f O_K: the least power of the fundamental unit lying in it.
pub fn order_unit(k: &QuadraticField, order: &OrderData) -> Result<UnitData> {
    let base = maximal_unit(k);
    if order.conductor == 1 {
        return Ok(base);
    }
    let (mut x, mut y) = (base.x.clone(), base.y.clone());
    for power in 1..=100_000u64 {
        let om = if k.d0 % 4 == 1 { y.clone() } else { &y / 2 };
        if (om % BigInt::from(order.conductor)).is_zero() {
            let norm = if base.norm == -1 && power % 2 == 1 { -1 } else { 1 };
            return Ok(UnitData {
                conductor: order.conductor,
                regulator: power as f64 * base.regulator,
                x,
                y,
                norm,
                positive_generator_factor: if norm == 1 { 1 } else { 2 },
            });
        }
        let next = half_mul(k, (&x, &y), (&base.x, &base.y));
        x = next.0;
        y = next.1;
    }
    Err(Error::Overflow("unit index search"))
}

/// Totally positive generator of the norm-one units of an order, in half coordinates.
pub fn positive_unit(k: &QuadraticField, order: &OrderData) -> Result<((i128, i128), f64)> {
    let u = order_unit(k, order)?;
    let (x, y) = u.small()?;
    if u.norm == 1 {
        return Ok(((x, y), u.regulator));
    }
    let d0 = k.d0 as i128;
    let x2 = (x * x + d0 * y * y) / 2;
    let y2 = x * y;
    Ok(((x2, y2), 2.0 * u.regulator))
}

/// Length of the closed geodesic attached to the unit group: 2 log of the totally positive generator.
pub fn closed_geodesic_length(u: &UnitData) -> f64 {
    2.0 * u.totally_positive_log()
}

/// Number of integral ideals of norm m.
pub fn count_ideals_of_norm(k: &QuadraticField, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let mut total = 1u64;
    for (p, e) in factorize(m)? {
        total *= match k.splitting(p) {
            Splitting::Split => e as u64 + 1,
            Splitting::Inert => u64::from(e % 2 == 0),
            Splitting::Ramified => 1,
        };
    }
    Ok(total)
}

/// Arithmetic in Z[sqrt D] scaled by s: the pair (p, q) denotes (p + q sqrt D) / s.
#[derive(Debug, Clone, Copy)]
pub struct ScaledRing {
    pub d: i128,
    pub s: i128,
}

impl ScaledRing {
    pub fn mul(&self, a: (i128, i128), b: (i128, i128)) -> Result<(i128, i128)> {
        let p = a.0.checked_mul(b.0).zip(a.1.checked_mul(b.1).and_then(|v| v.checked_mul(self.d)));
        let q = a.0.checked_mul(b.1).zip(a.1.checked_mul(b.0));
        match (p, q) {
            (Some((x1, x2)), Some((y1, y2))) => {
                let (p, q) = (x1 + x2, y1 + y2);
                if p % self.s != 0 || q % self.s != 0 {
                    return Err(Error::InvalidParameter("product left the lattice".into()));
                }
                Ok((p / self.s, q / self.s))
            }
            _ => Err(Error::Overflow("scaled ring product")),
        }
    }

    /// s^2 times the norm.
    pub fn scaled_norm(&self, a: (i128, i128)) -> i128 {
        a.0 * a.0 - self.d * a.1 * a.1
    }

    /// Sign of (p + q sqrt D).
    pub fn sign(&self, a: (i128, i128)) -> i32 {
        let (p, q) = a;
        match (p.signum(), q.signum()) {
            (0, 0) => 0,
            (x, y) if x >= 0 && y >= 0 => 1,
            (x, y) if x <= 0 && y <= 0 => -1,
            (1, _) => if p * p > self.d * q * q { 1 } else { -1 },
            _ => if self.d * q * q > p * p { 1 } else { -1 },
        }
    }

    /// Canonical representative of the orbit of a under {+-u^k}: positive, minimal |q|,
    /// ties broken by the smaller (q, p).
    pub fn canonical(&self, a: (i128, i128), unit: (i128, i128)) -> Result<(i128, i128)> {
        let mut a = if self.sign(a) < 0 { (-a.0, -a.1) } else { a };
        let inv = (unit.0, -unit.1);
        loop {
            let up = self.mul(a, unit)?;
            let down = self.mul(a, inv)?;
            if up.1.abs() < a.1.abs() {
                a = up;
            } else if down.1.abs() < a.1.abs() {
                a = down;
            } else {
                let mut best = a;
                for c in [up, down] {
                    if c.1.abs() == best.1.abs() && (c.1, c.0) < (best.1, best.0) {
                        best = c;
                    }
                }
                return Ok(best);
            }
        }
    }
}

/// Positive elements (p + q sqrt D)/s of scaled norm `target` with 0 <= q <= q_max.
pub fn solutions_with_q_bound(ring: &ScaledRing, target: i128, q_max: i128) -> Vec<(i128, i128)> {
    let mut out = Vec::new();
    for q in 0..=q_max {
        let rhs = target + ring.d * q * q;
        if let Some(p) = exact_sqrt(rhs) {
            for cand in [(p, q), (-p, q)] {
                if ring.sign(cand) > 0 && !out.contains(&cand) {
                    out.push(cand);
                }
            }
        }
    }
    out
}

/// q bound covering one fundamental window [sqrt|N|, sqrt|N| eps] for elements of norm N.
pub fn window_q_bound(ring: &ScaledRing, target: i128, eps: f64) -> i128 {
    let root = (target.unsigned_abs() as f64).sqrt();
    let span = if target > 0 { root * (eps - 1.0 / eps) } else { root * (eps + 1.0 / eps) };
    (span / (2.0 * (ring.d as f64).sqrt())).ceil() as i128 + 1
}

/// Orbit representatives of elements of norm +n in the order, under its norm-one units.
pub fn order_orbits(k: &QuadraticField, order: &OrderData, n: u64) -> Result<Vec<(i128, i128)>> {
    let ring = ScaledRing { d: k.d0 as i128, s: 2 };
    let (unit, reg) = positive_unit(k, order)?;
    let target = 4 * n as i128;
    let q_max = window_q_bound(&ring, target, reg.exp());
    let mut reps: Vec<(i128, i128)> = Vec::new();
    for (p, q) in solutions_with_q_bound(&ring, target, q_max) {
        if !order.contains_half(k, p, q) {
            continue;
        }
        let c = ring.canonical((p, q), unit)?;
        if !reps.contains(&c) {
            reps.push(c);
        }
    }
    reps.sort_unstable();
    Ok(reps)
}

/// Principal ideals of O_K of norm n having a generator of norm +n in the order.
pub fn count_principal_generated(k: &QuadraticField, order: &OrderData, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if gcd(n, order.conductor) != 1 {
        return Err(Error::NotCoprime { n, conductor: order.conductor });
    }
    let ring = ScaledRing { d: k.d0 as i128, s: 2 };
    let full = OrderData::maximal(k);
    let (unit_k, _) = positive_unit(k, &full)?;
    let mut ideals: Vec<(i128, i128)> = Vec::new();
    for z in order_orbits(k, order, n)? {
        let c = ring.canonical(z, unit_k)?;
        if !ideals.contains(&c) {
            ideals.push(c);
        }
    }
    Ok(ideals.len() as u64)
}

/// Smallest unit > 1 of norm +1 in Z[sqrt D] as (u, v) with eps = u + v sqrt D.
pub fn pell_positive_unit(d: u64) -> (i128, i128, f64) {
    let (x, y, norm) = pqa_unit(0, 1, d);
    let (x, y) = (x.to_i128().expect("unit fits"), y.to_i128().expect("unit fits"));
    let (x, y) = if norm == 1 { (x, y) } else { (x * x + d as i128 * y * y, 2 * x * y) };
    (x, y, (x as f64 + y as f64 * (d as f64).sqrt()).ln())
}

/// Number of (u, v) with |u|, |v| <= B n and 0 < |u^2 - D v^2 - n| <= delta n.
pub fn count_approx_norm_solutions(d: u64, n: u64, delta: f64, big_b: f64) -> Result<u64> {
    if d == 0 || arith::is_square(d as i128) {
        return Err(Error::InvalidParameter(format!("D = {d} must be a positive non-square")));
    }
    if !(delta > 0.0) || !(big_b > 0.0) {
        return Err(Error::InvalidParameter("delta and B must be positive".into()));
    }
    if delta > big_b {
        return Err(Error::InvalidParameter("delta must not exceed B".into()));
    }
    let bound = (big_b * n as f64).floor() as i128;
    let lo = n as f64 * (1.0 - delta);
    let hi = n as f64 * (1.0 + delta);
    let di = d as i128;
    let mut count: u64 = 0;
    for v in -bound..=bound {
        let base = di * v * v;
        // u^2 in [lo + base, hi + base]
        let umin2 = (lo + base as f64).ceil().max(0.0) as i128;
        let umax2 = (hi + base as f64).floor() as i128;
        if umax2 < umin2 {
            continue;
        }
        let mut umin = isqrt(umin2 as u128) as i128;
        if umin * umin < umin2 {
            umin += 1;
        }
        let umax = (isqrt(umax2 as u128) as i128).min(bound);
        if umax < umin {
            continue;
        }
        let mut c = 2 * (umax - umin + 1);
        if umin == 0 {
            c -= 1;
        }
        let exact = n as i128 + base;
        if let Some(r) = exact_sqrt(exact) {
            if r >= umin && r <= umax {
                c -= if r == 0 { 1 } else { 2 };
            }
        }
        count += c as u64;
    }
    Ok(count)
}

/// The same count organised by the value m = u^2 - D v^2 and unit orbits.
pub fn count_approx_norm_solutions_by_orbits(d: u64, n: u64, delta: f64, big_b: f64) -> Result<u64> {
    if d == 0 || arith::is_square(d as i128) {
        return Err(Error::InvalidParameter(format!("D = {d} must be a positive non-square")));
    }
    let bound = (big_b * n as f64).floor() as i128;
    let (eu, ev, reg) = pell_positive_unit(d);
    let ring = ScaledRing { d: d as i128, s: 1 };
    let nf = n as f64;
    let m_lo = (nf * (1.0 - delta)).ceil() as i128;
    let m_hi = (nf * (1.0 + delta)).floor() as i128;
    let mut total: u64 = 0;
    for m in m_lo..=m_hi {
        if m == n as i128 {
            continue;
        }
        if m == 0 {
            total += 1;
            continue;
        }
        let q_max = window_q_bound(&ring, m, reg.exp());
        let mut reps: Vec<(i128, i128)> = Vec::new();
        for q in 0..=q_max {
            if let Some(p) = exact_sqrt(m + ring.d * q * q) {
                for cand in [(p, q), (-p, q), (p, -q), (-p, -q)] {
                    if ring.sign(cand) > 0 {
                        let c = ring.canonical(cand, (eu, ev))?;
                        if !reps.contains(&c) {
                            reps.push(c);
                        }
                    }
                }
            }
        }
        for rep in reps {
            total += 2 * count_orbit_in_box(&ring, rep, (eu, ev), bound)?;
        }
    }
    Ok(total)
}

fn count_orbit_in_box(ring: &ScaledRing, rep: (i128, i128), unit: (i128, i128), bound: i128) -> Result<u64> {
    let inside = |a: (i128, i128)| a.0.abs() <= bound && a.1.abs() <= bound;
    let mut count = u64::from(inside(rep));
    for dir in [unit, (unit.0, -unit.1)] {
        let mut a = rep;
        loop {
            a = ring.mul(a, dir)?;
            if a.1.abs() > bound && a.1.abs() > rep.1.abs() {
                break;
            }
            count += u64::from(inside(a));
        }
    }
    Ok(count)
}
