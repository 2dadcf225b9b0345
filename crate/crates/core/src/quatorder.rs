//! Indefinite quaternion algebras (D, -E) over Q and orders inside them.
//!
//! Elements are written x0 + x1 alpha + x2 omega + x3 alpha omega with
//! alpha^2 = D, omega^2 = -E, and stored as integer coordinates X = f x.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, exact_sqrt, gcd_i, hilbert_symbol};
use crate::error::{Error, Result};
use crate::hctransform::KnuFamily;
use crate::psl2::{self, GeodesicDescriptor, GroupElement};
use crate::quadrature::{filon, GaussLegendre};
use crate::quadfield::{self, OrderData, QuadraticField, ScaledRing};

/// The quaternion algebra (a, b) with its finite ramification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuaternionAlgebra {
    pub a: i64,
    pub b: i64,
    pub ramified: Vec<u64>,
}

/// Classify (a, b): ramified primes via Hilbert symbols. Split algebras are rejected.
pub fn classify_algebra(a: i64, b: i64) -> Result<QuaternionAlgebra> {
    if a <= 0 || b == 0 {
        return Err(Error::InvalidParameter(format!("need a > 0 and b != 0, got ({a}, {b})")));
    }
    let mut candidates: Vec<u64> = vec![2];
    for x in [a.unsigned_abs(), b.unsigned_abs()] {
        for (p, _) in arith::factorize(x)? {
            if !candidates.contains(&p) {
                candidates.push(p);
            }
        }
    }
    candidates.sort_unstable();
    let ramified: Vec<u64> = candidates
        .into_iter()
        .filter(|&p| hilbert_symbol(a as i128, b as i128, p) == -1)
        .collect();
    if ramified.is_empty() {
        return Err(Error::SplitAlgebra { a, b });
    }
    Ok(QuaternionAlgebra { a, b, ramified })
}

/// Product of two quaternions in (1, alpha, omega, alpha omega) coordinates.
pub fn quat_mul(d: i128, e: i128, x: [i128; 4], y: [i128; 4]) -> [i128; 4] {
    [
        x[0] * y[0] + d * x[1] * y[1] - e * x[2] * y[2] + d * e * x[3] * y[3],
        x[0] * y[1] + x[1] * y[0] + e * (x[2] * y[3] - x[3] * y[2]),
        x[0] * y[2] + x[2] * y[0] + d * (x[1] * y[3] - x[3] * y[1]),
        x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1],
    ]
}

/// An order R with f R inside S = Z<1, alpha, omega, alpha omega>, given by a Z-basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisOrder {
    pub d: i64,
    pub e: i64,
    pub f: i64,
    /// Rows are f times the basis quaternions, in S-coordinates.
    pub basis: [[i64; 4]; 4],
    adjugate: [[i128; 4]; 4],
    det: i128,
    rf_conductor: u64,
}

/// A point of R, with integer coordinates X = f x and reduced norm n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coords: [i64; 4],
    pub n: u64,
}

impl LatticePoint {
    /// Lies in F = Q(alpha).
    pub fn in_f(&self) -> bool {
        self.coords[2] == 0 && self.coords[3] == 0
    }

    /// Lies in omega F.
    pub fn in_omega_f(&self) -> bool {
        self.coords[0] == 0 && self.coords[1] == 0
    }

    /// Normalizes F, i.e. stabilizes the geodesic of F.
    pub fn stabilizes(&self) -> bool {
        self.in_f() || self.in_omega_f()
    }
}

fn det4(m: &[[i128; 4]; 4]) -> i128 {
    let mut total = 0;
    for c in 0..4 {
        total += if c % 2 == 0 { 1 } else { -1 } * m[0][c] * minor3(m, 0, c);
    }
    total
}

fn minor3(m: &[[i128; 4]; 4], r: usize, c: usize) -> i128 {
    let mut s = [[0i128; 3]; 3];
    let mut ri = 0;
    for i in 0..4 {
        if i == r {
            continue;
        }
        let mut ci = 0;
        for j in 0..4 {
            if j == c {
                continue;
            }
            s[ri][ci] = m[i][j];
            ci += 1;
        }
        ri += 1;
    }
    s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) - s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0])
        + s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0])
}

impl BasisOrder {
    /// The order S itself.
    pub fn standard(alg: &QuaternionAlgebra) -> Result<Self> {
        let id = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]];
        Self::new(alg, 1, id)
    }

    /// An order from a basis; checks that it is a ring containing S.
    pub fn new(alg: &QuaternionAlgebra, f: i64, basis: [[i64; 4]; 4]) -> Result<Self> {
        if f < 1 {
            return Err(Error::InvalidParameter("f must be positive".into()));
        }
        let (d, e) = (alg.a, -alg.b);
        if e <= 0 {
            return Err(Error::InvalidParameter("b must be negative (E > 0)".into()));
        }
        let m: [[i128; 4]; 4] = basis.map(|r| r.map(|x| x as i128));
        let det = det4(&m);
        if det == 0 {
            return Err(Error::InvalidParameter("order basis is singular".into()));
        }
        let mut adj = [[0i128; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                adj[j][i] = sign * minor3(&m, i, j);
            }
        }
        let mut order = BasisOrder { d, e, f, basis, adjugate: adj, det, rf_conductor: 1 };
        let fi = f;
        if !order.contains([fi, 0, 0, 0]) {
            return Err(Error::InvalidParameter("order must contain 1".into()));
        }
        for i in 0..4 {
            let mut v = [0i64; 4];
            v[i] = fi;
            if !order.contains(v) {
                return Err(Error::InvalidParameter("order must contain S".into()));
            }
        }
        for x in &basis {
            for y in &basis {
                let p = order.mul(*x, *y);
                if !order.contains(p) {
                    return Err(Error::InvalidParameter("basis is not closed under multiplication".into()));
                }
            }
        }
        order.rf_conductor = order.compute_rf_conductor()?;
        Ok(order)
    }

    /// Membership of scaled coordinates X.
    pub fn contains(&self, x: [i64; 4]) -> bool {
        // x = c B  <=>  c = x adj(B) / det(B)
        (0..4).all(|j| {
            let s: i128 = (0..4).map(|i| x[i] as i128 * self.adjugate[i][j]).sum();
            s % self.det == 0
        })
    }

    /// Product of scaled coordinates, rescaled.
    pub fn mul(&self, x: [i64; 4], y: [i64; 4]) -> [i64; 4] {
        let p = quat_mul(self.d as i128, self.e as i128, x.map(|v| v as i128), y.map(|v| v as i128));
        let f = self.f as i128;
        p.map(|v| (v / f) as i64)
    }

    /// f^2 times the reduced norm.
    pub fn scaled_norm(&self, x: [i64; 4]) -> i128 {
        let (d, e) = (self.d as i128, self.e as i128);
        let [a, b, c, g] = x.map(|v| v as i128);
        a * a - d * b * b + e * c * c - d * e * g * g
    }

    /// Reduced discriminant: 4 D E / [R : S].
    pub fn reduced_discriminant(&self) -> u64 {
        let f4 = (self.f as i128).pow(4);
        (4 * self.d as i128 * self.e as i128 * self.det.abs() / f4) as u64
    }

    /// Conductor of R_F in the maximal order of F.
    pub fn rf_conductor(&self) -> u64 {
        self.rf_conductor
    }

    pub fn field(&self) -> QuadraticField {
        QuadraticField::new(self.d as u64).expect("D is a non-square")
    }

    /// R intersected with F, as an order of F.
    pub fn rf_order(&self) -> OrderData {
        OrderData::with_conductor(&self.field(), self.rf_conductor)
    }

    fn compute_rf_conductor(&self) -> Result<u64> {
        let k = QuadraticField::new(self.d as u64)?;
        let m = k.square_cofactor() as i64;
        let f = self.f;
        let mut cond = 0u64;
        // Elements (X0 + X1 alpha)/f with X1 in 0..f*m are enough to find the omega-lattice.
        for x1 in 1..=(f * m * 2) {
            for x0 in 0..f {
                if !self.contains([x0, x1, 0, 0]) {
                    continue;
                }
                let hy = 2 * m as i128 * x1 as i128;
                if hy % f as i128 != 0 || (2 * x0 as i128) % f as i128 != 0 {
                    continue;
                }
                let (hx, hy) = (2 * x0 as i128 / f as i128, hy / f as i128);
                if !k.is_integral_half(hx, hy) {
                    continue;
                }
                let om = k.omega_coefficient(hy).unsigned_abs() as u64;
                cond = arith::gcd(cond, om);
            }
        }
        if cond == 0 {
            return Err(Error::InvalidParameter("R meets F in Z only".into()));
        }
        Ok(cond)
    }

    /// rho(eta) as a real matrix (not normalized by the norm).
    pub fn rho(&self, x: [i64; 4]) -> [[f64; 2]; 2] {
        let s = (self.d as f64).sqrt();
        let f = self.f as f64;
        let e = self.e as f64;
        let [x0, x1, x2, x3] = x.map(|v| v as f64 / f);
        [[x0 + x1 * s, x2 + x3 * s], [-e * (x2 - x3 * s), x0 - x1 * s]]
    }

    /// rho(eta)/sqrt(n) in PSL2(R).
    pub fn rho_bar(&self, p: &LatticePoint) -> GroupElement {
        let m = self.rho(p.coords);
        let s = 1.0 / (p.n as f64).sqrt();
        GroupElement::from_gl2_plus(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
            .expect("positive norm")
    }

    /// Operator norm of rho(eta).
    pub fn operator_norm(&self, x: [i64; 4]) -> f64 {
        let m = self.rho(x);
        let fro2: f64 = m.iter().flatten().map(|v| v * v).sum();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = ((fro2 - 2.0 * det.abs()) * (fro2 + 2.0 * det.abs())).max(0.0);
        (0.5 * (fro2 + disc.sqrt())).sqrt()
    }

    /// Coordinate box containing every point with operator norm at most `radius`.
    pub fn coordinate_bounds(&self, radius: f64) -> [i64; 4] {
        let r = radius * self.f as f64;
        let sd = (self.d as f64).sqrt();
        let e = self.e as f64;
        let b2 = 0.5 * (r + r / e);
        [r.floor() as i64, (r / sd).floor() as i64, b2.floor() as i64, (b2 / sd).floor() as i64]
    }
}

fn canonical_sign(mut x: [i64; 4]) -> [i64; 4] {
    if let Some(first) = x.iter().find(|v| **v != 0) {
        if *first < 0 {
            x = x.map(|v| -v);
        }
    }
    x
}

/// All eta in R with nrd(eta) = n and |rho(eta)| <= cprime sqrt(n), one per +-pair,
/// sorted by coordinates.
pub fn enumerate_norm_ball(order: &BasisOrder, n: u64, cprime: f64) -> Result<Vec<LatticePoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(cprime > 0.0) {
        return Err(Error::InvalidParameter("C' must be positive".into()));
    }
    let radius = cprime * (n as f64).sqrt();
    let bounds = order.coordinate_bounds(radius * (1.0 + 1e-12));
    let (d, e, f) = (order.d as i128, order.e as i128, order.f as i128);
    let target = f * f * n as i128;
    let lim = radius * (1.0 + 1e-12);
    let mut points: Vec<LatticePoint> = (-bounds[2]..=bounds[2])
        .into_par_iter()
        .flat_map_iter(|x2| {
            let mut out = Vec::new();
            for x3 in -bounds[3]..=bounds[3] {
                let (a2, a3) = (x2 as i128, x3 as i128);
                let m = target - e * (a2 * a2 - d * a3 * a3);
                for x1 in -bounds[1]..=bounds[1] {
                    let a1 = x1 as i128;
                    let Some(x0) = exact_sqrt(m + d * a1 * a1) else { continue };
                    if x0 > bounds[0] as i128 {
                        continue;
                    }
                    for s in [1i128, -1] {
                        if x0 == 0 && s == -1 {
                            continue;
                        }
                        let x = [(s * x0) as i64, x1, x2, x3];
                        if canonical_sign(x) != x || !order.contains(x) {
                            continue;
                        }
                        if order.operator_norm(x) <= lim {
                            out.push(LatticePoint { coords: x, n });
                        }
                    }
                }
            }
            out
        })
        .collect();
    points.sort_unstable();
    Ok(points)
}

/// [`enumerate_norm_ball`] by a plain scan of the coordinate box.
pub fn enumerate_norm_ball_box(order: &BasisOrder, n: u64, cprime: f64) -> Result<Vec<LatticePoint>> {
    if n == 0 || !(cprime > 0.0) {
        return Err(Error::InvalidParameter("need n > 0 and C' > 0".into()));
    }
    let radius = cprime * (n as f64).sqrt() * (1.0 + 1e-12);
    let b = order.coordinate_bounds(radius);
    let target = (order.f * order.f) as i128 * n as i128;
    let mut out = Vec::new();
    for x3 in -b[3]..=b[3] {
        for x0 in -b[0]..=b[0] {
            for x2 in -b[2]..=b[2] {
                for x1 in -b[1]..=b[1] {
                    let x = [x0, x1, x2, x3];
                    if order.scaled_norm(x) != target || canonical_sign(x) != x {
                        continue;
                    }
                    if order.contains(x) && order.operator_norm(x) <= radius {
                        out.push(LatticePoint { coords: x, n });
                    }
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Orbit representatives of {(p + q alpha)/f of scaled norm `target`} in a sub-lattice of F,
/// under the norm-one units of R_F.
fn lattice_orbits<P: Fn(i128, i128) -> bool>(
    order: &BasisOrder,
    target: i128,
    unit: (i128, i128),
    log_unit: f64,
    member: P,
) -> Result<Vec<(i128, i128)>> {
    if target <= 0 {
        return Ok(Vec::new());
    }
    let ring = ScaledRing { d: order.d as i128, s: order.f as i128 };
    let q_max = quadfield::window_q_bound(&ring, target, log_unit.exp());
    let mut reps = Vec::new();
    for (p, q) in quadfield::solutions_with_q_bound(&ring, target, q_max) {
        if !member(p, q) {
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

/// Generator of R_F^1 modulo +-1 in scaled alpha-coordinates, with its logarithm.
pub fn rf_positive_unit(order: &BasisOrder) -> Result<((i128, i128), f64)> {
    let k = order.field();
    let ((hx, hy), log) = quadfield::positive_unit(&k, &order.rf_order())?;
    let f = order.f as i128;
    let m = k.square_cofactor() as i128;
    if (f * hx) % 2 != 0 || (f * hy) % (2 * m) != 0 {
        return Err(Error::InvalidParameter("unit of R_F not in the coordinate lattice".into()));
    }
    Ok(((f * hx / 2, f * hy / (2 * m)), log))
}

/// |N_{R(n)}(F) / R_F^1|: elements of norm n in F or in omega F, modulo norm-one units of R_F.
pub fn exact_stabilizer_count(order: &BasisOrder, n: u64) -> Result<u64> {
    let (unit, log) = rf_positive_unit(order)?;
    exact_stabilizer_count_with_unit(order, n, unit, log)
}

/// As [`exact_stabilizer_count`] with an explicit generator of R_F^1 (either eps or eps^-1).
pub fn exact_stabilizer_count_with_unit(order: &BasisOrder, n: u64, unit: (i128, i128), log: f64) -> Result<u64> {
    let f = order.f as i128;
    let target = f * f * n as i128;
    let in_f = lattice_orbits(order, target, unit, log, |p, q| {
        order.contains([p as i64, q as i64, 0, 0])
    })?;
    let e = order.e as i128;
    let in_omega = if target % e == 0 {
        lattice_orbits(order, target / e, unit, log, |p, q| order.contains([0, 0, p as i64, q as i64]))?
    } else {
        Vec::new()
    };
    Ok((in_f.len() + in_omega.len()) as u64)
}

/// Points off the normalizer at distance at most cprime from e, with their distance to the
/// normalizer of A.
pub fn normalizer_distances(order: &BasisOrder, n: u64, cprime: f64) -> Result<Vec<(LatticePoint, f64)>> {
    let ball = enumerate_norm_ball(order, n, cprime + std::f64::consts::SQRT_2)?;
    let axis = GeodesicDescriptor::imaginary_axis();
    let e = GroupElement::identity();
    Ok(ball
        .par_iter()
        .filter(|p| !p.stabilizes())
        .filter_map(|p| {
            let g = order.rho_bar(p);
            (psl2::dist(&g, &e) <= cprime).then(|| (*p, psl2::dist_to_normalizer(&g, &axis)))
        })
        .collect())
}

/// M(n, delta): points at distance at most cprime from e whose image lies within delta
/// of the normalizer of A but not in it.
pub fn approx_stabilizers(order: &BasisOrder, n: u64, cprime: f64, delta: f64) -> Result<Vec<LatticePoint>> {
    Ok(normalizer_distances(order, n, cprime)?
        .into_iter()
        .filter(|(_, dn)| *dn > 0.0 && *dn <= delta)
        .map(|(p, _)| p)
        .collect())
}

/// Points of the cprime-ball (in the metric d) off the normalizer with
/// |x0^2 - D x1^2 - n| <= kappa delta n.
pub fn coordinate_criterion_count(order: &BasisOrder, n: u64, cprime: f64, delta: f64, kappa: f64) -> Result<u64> {
    let ball = enumerate_norm_ball(order, n, cprime + std::f64::consts::SQRT_2)?;
    let e = GroupElement::identity();
    let f2 = (order.f * order.f) as f64;
    let d = order.d as i128;
    Ok(ball
        .iter()
        .filter(|p| !p.stabilizes())
        .filter(|p| psl2::dist(&order.rho_bar(p), &e) <= cprime)
        .filter(|p| {
            let [x0, x1, _, _] = p.coords.map(|v| v as i128);
            let v = (x0 * x0 - d * x1 * x1) as f64 / f2 - n as f64;
            v.abs() <= kappa * delta * n as f64
        })
        .count() as u64)
}

/// Conjugacy invariants of rho(eta)/sqrt(n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClassKind {
    /// Translation length log P with P the squared larger eigenvalue.
    Hyperbolic { p: f64 },
    /// Rotation angle theta in (0, pi/2].
    Elliptic { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassInvariants {
    pub kind: ClassKind,
    pub trace: f64,
    /// Discriminant of the order R n Q(eta).
    pub disc: i128,
}

pub fn class_invariants(order: &BasisOrder, p: &LatticePoint) -> Result<ClassInvariants> {
    let [x0, x1, x2, x3] = p.coords.map(|v| v as i128);
    let f = order.f as i128;
    let n = p.n as i128;
    if x1 == 0 && x2 == 0 && x3 == 0 {
        return Err(Error::InvalidParameter("scalar element".into()));
    }
    if x0 * x0 == f * f * n {
        return Err(Error::Parabolic);
    }
    let trace = 2.0 * x0 as f64 / (f as f64 * (n as f64).sqrt());
    let kind = if trace.abs() > 2.0 {
        let lam = 0.5 * (trace.abs() + (trace * trace - 4.0).sqrt());
        ClassKind::Hyperbolic { p: lam * lam }
    } else {
        ClassKind::Elliptic { theta: (0.5 * trace.abs()).acos() }
    };
    Ok(ClassInvariants { kind, trace, disc: order_discriminant(order, p.coords)? })
}

/// Discriminant of R n Q(eta) for a non-scalar eta.
pub fn order_discriminant(order: &BasisOrder, x: [i64; 4]) -> Result<i128> {
    let [_, x1, x2, x3] = x.map(|v| v as i128);
    let (d, e, f) = (order.d as i128, order.e as i128, order.f as i128);
    let g = gcd_i(gcd_i(x1, x2), x3);
    if g == 0 {
        return Err(Error::InvalidParameter("scalar element".into()));
    }
    let delta0 = d * x1 * x1 - e * x2 * x2 + d * e * x3 * x3;
    for j in 1..=g {
        let pure = [0, j * x1 / g, j * x2 / g, j * x3 / g];
        for p0 in 0..order.f as i128 {
            let v = [p0 as i64, pure[1] as i64, pure[2] as i64, pure[3] as i64];
            if order.contains(v) {
                let num = 4 * j * j * delta0;
                let den = g * g * f * f;
                if num % den != 0 {
                    return Err(Error::InvalidParameter("non-integral discriminant".into()));
                }
                return Ok(num / den);
            }
        }
    }
    Err(Error::InvalidParameter("element not in order".into()))
}

/// Elements of R^1 with all scaled coordinates bounded by `height`.
pub fn norm_one_units(order: &BasisOrder, height: i64) -> Vec<[i64; 4]> {
    let (d, e, f) = (order.d as i128, order.e as i128, order.f as i128);
    let target = f * f;
    let mut out = Vec::new();
    for x2 in -height..=height {
        for x3 in -height..=height {
            let m = target - e * (x2 as i128 * x2 as i128 - d * x3 as i128 * x3 as i128);
            for x1 in -height..=height {
                if let Some(x0) = exact_sqrt(m + d * x1 as i128 * x1 as i128) {
                    if x0 > height as i128 {
                        continue;
                    }
                    for s in [1i128, -1] {
                        if x0 == 0 && s == -1 {
                            continue;
                        }
                        let x = [(s * x0) as i64, x1, x2, x3];
                        if order.contains(x) {
                            out.push(x);
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// gamma eta1 = eta2 gamma for some unit gamma of bounded height.
pub fn conjugate_by_units(order: &BasisOrder, units: &[[i64; 4]], x: [i64; 4], y: [i64; 4]) -> bool {
    let (d, e) = (order.d as i128, order.e as i128);
    let xi = x.map(|v| v as i128);
    let yi = y.map(|v| v as i128);
    let neg = yi.map(|v| -v);
    units.iter().any(|g| {
        let gi = g.map(|v| v as i128);
        let left = quat_mul(d, e, gi, xi);
        left == quat_mul(d, e, yi, gi) || left == quat_mul(d, e, neg, gi)
    })
}

/// Contribution of one R^1-conjugacy class (taken up to sign) to the standard trace formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassContribution {
    pub representative: [i64; 4],
    pub invariants: ClassInvariants,
    /// Ball elements found in the class.
    pub members: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardSide {
    pub main: f64,
    pub hyperbolic_sum: f64,
    pub elliptic_sum: f64,
    pub classes: Vec<ClassContribution>,
    /// Invariant keys whose elements could not all be joined by units of bounded height.
    pub ambiguous_keys: usize,
    /// Largest |GL - Filon| seen on hyperbolic integrals, relative to max(|value|, 1e-3).
    pub filon_discrepancy: f64,
}

/// Samples of r -> hat k_nu(ir) reused by every class integral at one nu.
pub struct SpectralSamples {
    top: f64,
    gl_r: Vec<f64>,
    gl_w: Vec<f64>,
    gl_v: Vec<f64>,
    filon_v: Vec<f64>,
}

impl SpectralSamples {
    /// Gauss-Legendre nodes on panels of width 1/2 and a Filon grid of step 0.05 on [0, nu + rmax].
    pub fn new(family: &KnuFamily, nu: f64) -> Self {
        let hk = family.transform_imag(nu);
        let top = nu + family.settings.rmax;
        let gl = GaussLegendre::cached(16);
        let (gl_r, gl_w) = gl.composite(0.0, top, (2.0 * top).ceil() as usize + 8);
        let gl_v = gl_r.iter().map(|r| hk(*r)).collect();
        let m = 2 * ((top / 0.05).ceil() as usize / 2 + 1);
        let h = top / (2 * m) as f64;
        let filon_v = (0..=2 * m).map(|i| hk(i as f64 * h)).collect();
        SpectralSamples { top, gl_r, gl_w, gl_v, filon_v }
    }

    /// (2 pi)^{-1} int_R hat k_nu(ir) e^{i r u} dr by Gauss-Legendre and by Filon.
    pub fn hyperbolic(&self, u: f64) -> (f64, f64) {
        let a: f64 = self.gl_r.iter().zip(&self.gl_w).zip(&self.gl_v).map(|((r, w), v)| w * v * (r * u).cos()).sum();
        let n = self.filon_v.len() - 1;
        let h = self.top / n as f64;
        let vals = &self.filon_v;
        let b = filon(|r: f64| vals[((r / h).round() as usize).min(n)], 0.0, self.top, u, n / 2, false);
        (a / PI, b / PI)
    }

    /// (pi / 2) int_R hat k_nu(ir) cosh((pi - 2 theta) r) / cosh(pi r) dr.
    pub fn elliptic(&self, theta: f64) -> f64 {
        let a = PI - 2.0 * theta;
        let ratio = |r: f64| ((a - PI) * r).exp() * (1.0 + (-2.0 * a * r).exp()) / (1.0 + (-2.0 * PI * r).exp());
        PI * self.gl_r.iter().zip(&self.gl_w).zip(&self.gl_v).map(|((r, w), v)| w * v * ratio(*r)).sum::<f64>()
    }
}

/// (2 pi)^{-1} int_R hat k_nu(ir) e^{i r u} dr by Gauss-Legendre and by Filon.
pub fn hyperbolic_integral(family: &KnuFamily, nu: f64, u: f64) -> (f64, f64) {
    SpectralSamples::new(family, nu).hyperbolic(u)
}

/// (pi / 2) int_R hat k_nu(ir) cosh((pi - 2 theta) r) / cosh(pi r) dr.
pub fn elliptic_integral(family: &KnuFamily, nu: f64, theta: f64) -> f64 {
    SpectralSamples::new(family, nu).elliptic(theta)
}

/// log eps_+ for the order of discriminant `disc` > 0.
fn order_unit_log(disc: i128) -> Result<f64> {
    let k = QuadraticField::new(disc as u64)?;
    let fk = k.discriminant() as i128;
    let cond = arith::exact_sqrt(disc / fk).filter(|c| c * c * fk == disc);
    let cond = cond.ok_or_else(|| Error::InvalidParameter(format!("{disc} is not an order discriminant")))?;
    let order = OrderData::with_conductor(&k, cond as u64);
    Ok(quadfield::positive_unit(&k, &order)?.1)
}

/// |units(O)| / 2 for the imaginary quadratic order of discriminant `disc`.
fn torsion_mod_sign(disc: i128) -> f64 {
    match disc {
        -3 => 3.0,
        -4 => 2.0,
        _ => 1.0,
    }
}

/// s(n) vol k_nu(e) plus the class sums, over the classes met by the norm ball of radius C'.
pub fn standard_geometric_side(
    order: &BasisOrder,
    family: &KnuFamily,
    nu: f64,
    n: u64,
    vol: f64,
    cprime: f64,
    unit_height: i64,
) -> Result<StandardSide> {
    let entry = family.entry(nu)?;
    let ball = enumerate_norm_ball(order, n, cprime)?;
    let main = if arith::is_square(n as i128) { vol * entry.k_e } else { 0.0 };
    let units = norm_one_units(order, unit_height);

    let mut keyed: std::collections::BTreeMap<(i64, i128), Vec<[i64; 4]>> = Default::default();
    let mut invariants = std::collections::HashMap::new();
    for p in ball.iter().filter(|p| p.coords[1..] != [0, 0, 0]) {
        let inv = class_invariants(order, p)?;
        keyed.entry((p.coords[0].abs(), inv.disc)).or_default().push(p.coords);
        invariants.insert(p.coords, inv);
    }

    let mut classes = Vec::new();
    let mut ambiguous_keys = 0;
    for members in keyed.values() {
        let mut parent: Vec<usize> = (0..members.len()).collect();
        fn find(p: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj && conjugate_by_units(order, &units, members[i], members[j]) {
                    parent[rj] = ri;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, usize> = Default::default();
        for i in 0..members.len() {
            let r = find(&mut parent, i);
            *groups.entry(r).or_default() += 1;
        }
        if groups.len() > 1 {
            ambiguous_keys += 1;
        }
        for (root, count) in groups {
            classes.push((members[root], count));
        }
    }

    let mut hyperbolic_sum = 0.0;
    let mut elliptic_sum = 0.0;
    let mut filon_discrepancy: f64 = 0.0;
    let mut out = Vec::with_capacity(classes.len());
    let spectral = SpectralSamples::new(family, nu);
    for (rep, count) in classes {
        let inv = invariants[&rep];
        let value = match inv.kind {
            ClassKind::Hyperbolic { p } => {
                let log_p0 = 2.0 * order_unit_log(inv.disc)?;
                let (a, b) = spectral.hyperbolic(p.ln());
                filon_discrepancy = filon_discrepancy.max((a - b).abs() / a.abs().max(1e-3));
                let v = log_p0 / (p.sqrt() - 1.0 / p.sqrt()) * a;
                hyperbolic_sum += v;
                v
            }
            ClassKind::Elliptic { theta } => {
                let v = spectral.elliptic(theta) / (torsion_mod_sign(inv.disc) * theta.sin());
                elliptic_sum += v;
                v
            }
        };
        out.push(ClassContribution { representative: rep, invariants: inv, members: count, value });
    }
    Ok(StandardSide { main, hyperbolic_sum, elliptic_sum, classes: out, ambiguous_keys, filon_discrepancy })
}
