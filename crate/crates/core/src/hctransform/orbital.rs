//! Orbital integrals I(nu, g), the oscillatory integral J(r, g) and its
//! stationary-phase reduction, and the geometric side of the relative trace formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cutoff::CutoffB;
use super::knu::{KnuEntry, KnuFamily};
use super::spherical::Radial;
use crate::error::{Error, Result};
use crate::psl2::{cartan_t, make_k, GroupElement};
use crate::quadrature::{bisect, GaussLegendre};
use crate::quatorder::{enumerate_norm_ball, exact_stabilizer_count, BasisOrder};

/// Absolute error target for I(nu, g).
pub const ORBITAL_TOL: f64 = 1e-7;

/// Bounds beyond which I(nu, g) vanishes identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBound {
    /// I(nu, g) = 0 when the Cartan radius of g exceeds this.
    pub cartan: f64,
    /// I(nu, g) = 0 when d(g, e) exceeds this.
    pub dist: f64,
    /// Operator-norm radius exp(cartan / 2) of the same region.
    pub cprime: f64,
}

pub fn support_bound(b: &CutoffB, r_support: f64) -> SupportBound {
    let cartan = 2.0 * b.support() + r_support;
    SupportBound {
        cartan,
        dist: (2.0 * cartan.cosh()).sqrt() + std::f64::consts::SQRT_2,
        cprime: (0.5 * cartan).exp(),
    }
}

struct Nodes {
    x: Vec<f64>,
    w: Vec<f64>,
}

/// Composite rule on [-support, support] with the weights multiplied by b.
fn cutoff_nodes(b: &CutoffB, points: usize, panels: usize) -> Nodes {
    let gl = GaussLegendre::cached(points);
    let sb = b.support();
    let (xs, ws) = gl.composite(-sb, sb, panels);
    let mut x = Vec::with_capacity(xs.len());
    let mut w = Vec::with_capacity(xs.len());
    for (xi, wi) in xs.iter().zip(&ws) {
        let v = b.value(*xi);
        if v != 0.0 {
            x.push(*xi);
            w.push(wi * v);
        }
    }
    Nodes { x, w }
}

fn orbital_rule<K: Radial + ?Sized>(k: &K, g: &GroupElement, b: &CutoffB, points: usize, panels: usize) -> f64 {
    let [[a, bb], [c, d]] = g.entries();
    let mut nodes = cutoff_nodes(b, points, panels);
    let mut order: Vec<usize> = (0..nodes.x.len()).collect();
    order.sort_by(|i, j| nodes.x[*i].partial_cmp(&nodes.x[*j]).unwrap());
    nodes = Nodes { x: order.iter().map(|i| nodes.x[*i]).collect(), w: order.iter().map(|i| nodes.w[*i]).collect() };
    let ep: Vec<f64> = nodes.x.iter().map(|x| (0.5 * x).exp()).collect();
    let r = k.support();
    let ch = r.cosh();
    let mut total = 0.0;
    for (i, ws) in nodes.w.iter().enumerate() {
        let (es, ems) = (ep[i], 1.0 / ep[i]);
        // z = g^{-1} a(s) i; the Cartan radius of a(-s) g a(t) is d(z, e^t i)
        let e2 = es * es * es * es;
        let den = a * a + c * c * e2;
        let x = -(a * bb + c * d * e2) / den;
        let y = es * es / den;
        let disc = y * y * ch * ch - (x * x + y * y);
        if disc <= 0.0 {
            continue;
        }
        let root = disc.sqrt();
        let (lo, hi) = ((y * ch - root).ln(), (y * ch + root).ln());
        let first = nodes.x.partition_point(|t| *t <= lo);
        let mut row = 0.0;
        for j in first..nodes.x.len() {
            if nodes.x[j] >= hi {
                break;
            }
            let (et, emt) = (ep[j], 1.0 / ep[j]);
            // a(-s) g a(t)
            let m00 = a * et * ems;
            let m01 = bb * emt * ems;
            let m10 = c * et * es;
            let m11 = d * emt * es;
            let q = ((m00 - m11).powi(2) + (m01 + m10).powi(2)).sqrt();
            let t = 2.0 * (0.5 * q).asinh();
            if t < r {
                row += nodes.w[j] * k.value(t);
            }
        }
        total += ws * row;
    }
    total
}

/// I(nu, g) = int int b(s) b(t) k(a(-s) g a(t)) ds dt for a radial profile k with
/// oscillation frequency up to `freq`.
pub fn orbital_integral_profile<K: Radial + ?Sized>(k: &K, freq: f64, g: &GroupElement, b: &CutoffB) -> Result<f64> {
    let mut panels = ((2.0 * b.support() * (freq + 60.0)) / 4.0).ceil() as usize + 8;
    let mut last = f64::NAN;
    for _ in 0..3 {
        let lo = orbital_rule(k, g, b, 12, panels);
        let hi = orbital_rule(k, g, b, 16, panels);
        last = (hi - lo).abs();
        if last <= ORBITAL_TOL {
            return Ok(hi);
        }
        panels *= 2;
    }
    Err(Error::QuadratureNonConvergence { context: "orbital integral", achieved: last })
}

/// I(nu, g) using the cached profile of k_nu.
pub fn orbital_integral(entry: &KnuEntry, g: &GroupElement, b: &CutoffB) -> Result<f64> {
    orbital_integral_profile(&entry.profile, entry.nu, g, b)
}

/// H(h a(t)) = -log(c^2 e^t + d^2 e^{-t}) for the bottom row (c, d) of h.
fn h_along(c: f64, d: f64, t: f64) -> f64 {
    -(c * c * t.exp() + d * d * (-t).exp()).ln()
}

fn dh_along(c: f64, d: f64, t: f64) -> f64 {
    let (p, m) = (c * c * t.exp(), d * d * (-t).exp());
    -(p - m) / (p + m)
}

/// Bottom rows of k(theta) and k(theta) g.
fn bottom_rows(theta: f64, g: &GroupElement) -> ((f64, f64), (f64, f64)) {
    let [[a, b], [c, d]] = g.entries();
    let (sn, cs) = (0.5 * theta).sin_cos();
    ((-sn, cs), (-sn * a + cs * c, -sn * b + cs * d))
}

/// phi(s, t, theta, g) = H(k(theta) g a(t)) - H(k(theta) a(s)).
pub fn phase(s: f64, t: f64, theta: f64, g: &GroupElement) -> f64 {
    let ((c1, d1), (c2, d2)) = bottom_rows(theta, g);
    h_along(c2, d2, t) - h_along(c1, d1, s)
}

/// (d phi / ds, d phi / dt).
pub fn phase_gradient(s: f64, t: f64, theta: f64, g: &GroupElement) -> [f64; 2] {
    let ((c1, d1), (c2, d2)) = bottom_rows(theta, g);
    [-dh_along(c1, d1, s), dh_along(c2, d2, t)]
}

/// The critical point (xi1, xi2) of phi in (s, t), if neither geodesic is vertical.
pub fn critical_point(theta: f64, g: &GroupElement) -> Option<(f64, f64)> {
    let ((c1, d1), (c2, d2)) = bottom_rows(theta, g);
    if c1 == 0.0 || d1 == 0.0 || c2 == 0.0 || d2 == 0.0 {
        return None;
    }
    Some(((d1 / c1).abs().ln(), (d2 / c2).abs().ln()))
}

/// Hessian of phi in (s, t) at the critical point, by central differences.
pub fn phase_hessian(theta: f64, g: &GroupElement) -> Option<[[f64; 2]; 2]> {
    let (x1, x2) = critical_point(theta, g)?;
    let h = 1e-4;
    let f = |s: f64, t: f64| phase(s, t, theta, g);
    let fss = (f(x1 + h, x2) - 2.0 * f(x1, x2) + f(x1 - h, x2)) / (h * h);
    let ftt = (f(x1, x2 + h) - 2.0 * f(x1, x2) + f(x1, x2 - h)) / (h * h);
    let fst = (f(x1 + h, x2 + h) - f(x1 + h, x2 - h) - f(x1 - h, x2 + h) + f(x1 - h, x2 - h)) / (4.0 * h * h);
    Some([[fss, fst], [fst, ftt]])
}

/// psi(theta) = phi at the critical point: the log ratio of the radii of k(theta) A i and k(theta) g A i.
pub fn psi(theta: f64, g: &GroupElement) -> Option<f64> {
    let ((c1, d1), (c2, d2)) = bottom_rows(theta, g);
    let (p1, p2) = ((c1 * d1).abs(), (c2 * d2).abs());
    (p1 > 0.0 && p2 > 0.0).then(|| (p1 / p2).ln())
}

/// d psi / d theta.
pub fn psi_derivative(theta: f64, g: &GroupElement) -> Option<f64> {
    let [[a, b], [c, d]] = g.entries();
    let (sn, cs) = (0.5 * theta).sin_cos();
    let cp = -sn * a + cs * c;
    let dp = -sn * b + cs * d;
    let cpp = -0.5 * (cs * a + sn * c);
    let dpp = -0.5 * (cs * b + sn * d);
    let st = theta.sin();
    if st == 0.0 || cp == 0.0 || dp == 0.0 {
        return None;
    }
    Some(theta.cos() / st - cpp / cp - dpp / dp)
}

/// Amplitude c1(theta) = b(xi1) b(xi2) exp((H1 + H2) / 2) of the reduced integral; 0 on singular theta.
pub fn amplitude(theta: f64, g: &GroupElement, b: &CutoffB) -> f64 {
    let ((c1, d1), (c2, d2)) = bottom_rows(theta, g);
    let (p1, p2) = ((c1 * d1).abs(), (c2 * d2).abs());
    if p1 == 0.0 || p2 == 0.0 {
        return 0.0;
    }
    let (x1, x2) = ((d1 / c1).abs().ln(), (d2 / c2).abs().ln());
    let bb = b.value(x1) * b.value(x2);
    if bb == 0.0 {
        return 0.0;
    }
    bb / (2.0 * (p1 * p2).sqrt())
}

/// The theta in [0, 2 pi) where one of k(theta) A i, k(theta) g A i is vertical.
pub fn singular_thetas(g: &GroupElement) -> Vec<f64> {
    let [[a, b], [c, d]] = g.entries();
    let mut out = vec![0.0, PI];
    for (num, den) in [(c, a), (d, b)] {
        // -sin(theta/2) den + cos(theta/2) num = 0
        out.push(2.0 * num.atan2(den));
    }
    let mut v: Vec<f64> = out.into_iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    v
}

/// Zeros of psi' on [0, 2 pi) away from the singular set.
pub fn critical_thetas(g: &GroupElement) -> Vec<f64> {
    let sing = singular_thetas(g);
    let mut cuts = sing.clone();
    cuts.push(2.0 * PI);
    let mut roots = Vec::new();
    let mut start = 0.0;
    for &end in &cuts {
        if end - start > 1e-9 {
            let samples = 4000;
            let lo = start + 1e-9;
            let hi = end - 1e-9;
            let h = (hi - lo) / samples as f64;
            let f = |x: f64| psi_derivative(x, g).unwrap_or(f64::NAN);
            let mut prev = f(lo);
            for i in 1..=samples {
                let x = lo + i as f64 * h;
                let v = f(x);
                if prev.is_finite() && v.is_finite() && prev.signum() != v.signum() {
                    if let Some(root) = bisect(f, x - h, x, 1e-13) {
                        roots.push(root);
                    }
                }
                prev = v;
            }
        }
        start = end;
    }
    roots
}

fn theta_frequency(g: &GroupElement, b: &CutoffB) -> f64 {
    let samples = 4000;
    let mut kappa: f64 = 1.0;
    for i in 0..samples {
        let th = 2.0 * PI * (i as f64 + 0.5) / samples as f64;
        if amplitude(th, g, b) > 0.0 {
            if let Some(v) = psi_derivative(th, g) {
                kappa = kappa.max(v.abs());
            }
        }
    }
    kappa + 1.0
}

/// r^{-1} int_0^{2 pi} c1(theta) e^{i r psi(theta)} d theta.
pub fn stationary_phase_reduction(r: f64, g: &GroupElement, b: &CutoffB) -> Complex64 {
    let kappa = theta_frequency(g, b);
    let panels = ((2.0 * PI * (r * kappa + 20.0)) / 4.0).ceil() as usize;
    let gl = GaussLegendre::cached(16);
    let (xs, ws) = gl.composite(0.0, 2.0 * PI, panels);
    let mut acc = Complex64::new(0.0, 0.0);
    for (th, w) in xs.iter().zip(&ws) {
        let c1 = amplitude(*th, g, b);
        if c1 != 0.0 {
            let p = psi(*th, g).unwrap_or(0.0);
            acc += Complex64::from_polar(c1 * w, r * p);
        }
    }
    acc / r
}

/// Nodes on supp b with e^t and e^{-t} cached.
struct LineNodes {
    ep: Vec<f64>,
    em: Vec<f64>,
    w: Vec<f64>,
}

impl LineNodes {
    fn new(b: &CutoffB, points: usize, panels: usize) -> Self {
        let n = cutoff_nodes(b, points, panels);
        LineNodes { ep: n.x.iter().map(|t| t.exp()).collect(), em: n.x.iter().map(|t| (-t).exp()).collect(), w: n.w }
    }
}

/// int b(t) e^{(1/2 + i sign r) H(h a(t))} dt for the bottom row (c, d) of h.
fn line_integral(c: f64, d: f64, r: f64, sign: f64, nodes: &LineNodes) -> Complex64 {
    let (c2, d2) = (c * c, d * d);
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..nodes.w.len() {
        let q = c2 * nodes.ep[i] + d2 * nodes.em[i];
        // e^{H/2} = q^{-1/2}, H = -ln q
        let (sn, cs) = (-sign * r * q.ln()).sin_cos();
        let amp = nodes.w[i] / q.sqrt();
        re += amp * cs;
        im += amp * sn;
    }
    Complex64::new(re, im)
}

fn j_rule(r: f64, g: &GroupElement, theta_points: usize, theta_panels: usize, inner: &LineNodes) -> Complex64 {
    let gl = GaussLegendre::cached(theta_points);
    let (xs, ws) = gl.composite(0.0, 2.0 * PI, theta_panels);
    let mut acc = Complex64::new(0.0, 0.0);
    for (th, w) in xs.iter().zip(&ws) {
        let ((c1, d1), (c2, d2)) = bottom_rows(*th, g);
        let i1 = line_integral(c1, d1, r, -1.0, inner);
        let i2 = line_integral(c2, d2, r, 1.0, inner);
        acc += i1 * i2 * *w;
    }
    acc / (2.0 * PI)
}

/// J(r, g) = int_K int int b(s) b(t) e^{(1/2 + i r) H(k a(-s) g a(t))} ds dt dk, evaluated in the
/// separated form (2 pi)^{-1} int d theta [int b(s) e^{(1/2 - i r) H(k(theta) a(s))} ds]
/// [int b(t) e^{(1/2 + i r) H(k(theta) g a(t))} dt].
///
/// The K-integral of the integrand is phi_{ir}(a(-s) g a(t)), so J is real; a nonzero imaginary
/// part beyond the quadrature error is reported as a failure.
pub fn oscillatory_j(r: f64, g: &GroupElement, b: &CutoffB) -> Result<f64> {
    let inner_panels = ((2.0 * b.support() * (r + 10.0)) / 8.0).ceil() as usize + 4;
    let inner = LineNodes::new(b, 16, inner_panels);
    let kappa = theta_frequency(g, b);
    let panels = ((2.0 * PI * (r * kappa + 20.0)) / 8.0).ceil() as usize;
    let lo = j_rule(r, g, 16, panels, &inner);
    let hi = j_rule(r, g, 20, panels, &inner);
    let err = (hi - lo).norm().max(hi.im.abs());
    if err > 1e-9 * (1.0 + hi.norm()) {
        return Err(Error::QuadratureNonConvergence { context: "oscillatory integral J", achieved: err });
    }
    Ok(hi.re)
}

/// J(r, g) by direct triple quadrature over (sigma, s, t); for small r only.
pub fn oscillatory_j_direct(r: f64, g: &GroupElement, b: &CutoffB, panels: usize) -> Complex64 {
    let inner = LineNodes::new(b, 12, panels);
    let gl = GaussLegendre::cached(12);
    let (ths, tws) = gl.composite(0.0, 2.0 * PI, 2 * panels);
    let mut acc = Complex64::new(0.0, 0.0);
    for (th, tw) in ths.iter().zip(&tws) {
        let k = make_k(*th);
        for (i, ws) in inner.w.iter().enumerate() {
            let s = inner.ep[i].ln();
            let left = k * crate::psl2::make_a(-s) * *g;
            let [_, [c, d]] = left.entries();
            let line = line_integral(c, d, r, 1.0, &inner);
            acc += line * (tw * ws);
        }
    }
    acc / (2.0 * PI)
}

/// An element a(s0) exp(eps X), X = [[0, 1], [1, 0]], with d(g, N_G(A)) = target.
pub fn element_at_normalizer_distance(target: f64, s0: f64) -> Result<GroupElement> {
    let l = crate::psl2::GeodesicDescriptor::imaginary_axis();
    let make = |eps: f64| {
        let (ch, sh) = (eps.cosh(), eps.sinh());
        crate::psl2::make_a(s0) * GroupElement::new(ch, sh, sh, ch).expect("det 1")
    };
    let f = |eps: f64| crate::psl2::dist_to_normalizer(&make(eps), &l) - target;
    let mut hi = 0.1;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 20.0 {
            return Err(Error::InvalidParameter(format!("normalizer distance {target} out of reach")));
        }
    }
    let eps = bisect(f, 0.0, hi, 1e-14)
        .ok_or_else(|| Error::InvalidParameter(format!("normalizer distance {target} out of reach")))?;
    Ok(make(eps))
}

/// Main and error terms of the relative trace formula at (nu, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeSide {
    pub main: f64,
    pub error_sum: f64,
    pub stabilizers: u64,
    pub ball_size: usize,
    pub nonzero_terms: usize,
    pub max_abs_term: f64,
}

/// main = |N_{R(n)}(F)/R_F^1| * l0 * int k_nu(a(t)) dt and error = sum over non-stabilizing
/// eta of I(nu, rho_bar(eta)); the geodesic is A i, so g0 = e.
pub fn relative_geometric_side(
    order: &BasisOrder,
    family: &KnuFamily,
    nu: f64,
    n: u64,
    b: &CutoffB,
) -> Result<RelativeSide> {
    let entry = family.entry(nu)?;
    let bound = support_bound(b, family.support);
    let ball = enumerate_norm_ball(order, n, bound.cprime)?;
    let stabilizers = if ball.is_empty() { 0 } else { exact_stabilizer_count(order, n)? };
    let main = stabilizers as f64 * b.period * family.geodesic_mass(nu)?;
    let mut error_sum = 0.0;
    let mut nonzero_terms = 0;
    let mut max_abs_term: f64 = 0.0;
    for p in ball.iter().filter(|p| !p.stabilizes()) {
        let g = order.rho_bar(p);
        if cartan_t(&g) > bound.cartan {
            continue;
        }
        let v = orbital_integral(&entry, &g, b)?;
        if v != 0.0 {
            nonzero_terms += 1;
        }
        max_abs_term = max_abs_term.max(v.abs());
        error_sum += v;
    }
    Ok(RelativeSide { main, error_sum, stabilizers, ball_size: ball.len(), nonzero_terms, max_abs_term })
}
