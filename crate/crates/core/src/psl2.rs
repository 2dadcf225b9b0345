//! PSL2(R): Iwasawa and Cartan coordinates, the projective metric, geodesics.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::golden_min;

const DET_TOL: f64 = 1e-9;

/// An element of PSL2(R) stored as a normalized 2x2 matrix.
///
/// The representative of the pair {g, -g} is the one whose first nonzero
/// entry in row-major order is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    m: [[f64; 2]; 2],
}

impl GroupElement {
    /// Build from entries, checking det = 1 to 1e-9 relative to the entry scale.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = (a * a + b * b + c * c + d * d).max(1.0);
        if !det.is_finite() || (det - 1.0).abs() > DET_TOL * scale {
            return Err(Error::NotSpecialLinear { det });
        }
        Ok(Self::normalized([[a, b], [c, d]]))
    }

    /// Scale a matrix of positive determinant into SL2(R).
    pub fn from_gl2_plus(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::NotSpecialLinear { det });
        }
        let s = 1.0 / det.sqrt();
        Ok(Self::normalized([[a * s, b * s], [c * s, d * s]]))
    }

    fn normalized(m: [[f64; 2]; 2]) -> Self {
        let first = [m[0][0], m[0][1], m[1][0], m[1][1]]
            .into_iter()
            .find(|x| *x != 0.0)
            .unwrap_or(1.0);
        if first < 0.0 {
            GroupElement { m: [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]] }
        } else {
            GroupElement { m }
        }
    }

    pub fn identity() -> Self {
        GroupElement { m: [[1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::normalized([[d, -b], [-c, a]])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Mobius action on the upper half plane, z = (x, y).
    pub fn act(&self, z: (f64, f64)) -> (f64, f64) {
        let [[a, b], [c, d]] = self.m;
        let (x, y) = z;
        let den = (c * x + d).powi(2) + (c * y).powi(2);
        let re = ((a * x + b) * (c * x + d) + a * c * y * y) / den;
        let im = y / den;
        (re, im)
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, o: GroupElement) -> GroupElement {
        let a = self.m;
        let b = o.m;
        GroupElement::normalized([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

/// a(t) = diag(e^{t/2}, e^{-t/2}).
pub fn make_a(t: f64) -> GroupElement {
    GroupElement::normalized([[(0.5 * t).exp(), 0.0], [0.0, (-0.5 * t).exp()]])
}

/// k(theta), rotation by theta about i.
pub fn make_k(theta: f64) -> GroupElement {
    let (s, c) = (0.5 * theta).sin_cos();
    GroupElement::normalized([[c, s], [-s, c]])
}

pub fn make_n(x: f64) -> GroupElement {
    GroupElement::normalized([[1.0, x], [0.0, 1.0]])
}

/// H(g) with g in N a(H(g)) K, i.e. log Im(g i).
pub fn iwasawa_h(g: &GroupElement) -> f64 {
    let [_, [c, d]] = g.m;
    -(c * c + d * d).ln()
}

/// Angle theta in [0, 2pi) of the K-part of g in the NAK decomposition.
pub fn iwasawa_k_angle(g: &GroupElement) -> f64 {
    let [_, [c, d]] = g.m;
    (2.0 * (-c).atan2(d)).rem_euclid(2.0 * PI)
}

/// Cartan radius t >= 0 with g in K a(t) K; equals the hyperbolic distance from i to g i.
pub fn cartan_t(g: &GroupElement) -> f64 {
    let [[a, b], [c, d]] = g.m;
    let q = ((a - d).powi(2) + (b + c).powi(2)).sqrt();
    2.0 * (0.5 * q).asinh()
}

/// Projective Frobenius distance min(|x - y|, |x + y|).
pub fn dist(x: &GroupElement, y: &GroupElement) -> f64 {
    let (p, q) = (x.m, y.m);
    let mut minus = 0.0;
    let mut plus = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            minus += (p[i][j] - q[i][j]).powi(2);
            plus += (p[i][j] + q[i][j]).powi(2);
        }
    }
    minus.min(plus).sqrt()
}

/// alpha_g(k): the K-part of k g.
pub fn alpha_map(g: &GroupElement, k: &GroupElement) -> GroupElement {
    make_k(iwasawa_k_angle(&(*k * *g)))
}

/// An oriented geodesic in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeodesicDescriptor {
    /// Vertical line Re z = foot.
    Vertical { foot: f64 },
    /// Half circle with real endpoints.
    HalfCircle { left: f64, right: f64, center: f64, radius: f64 },
}

impl GeodesicDescriptor {
    /// The imaginary axis, i.e. A i.
    pub fn imaginary_axis() -> Self {
        GeodesicDescriptor::Vertical { foot: 0.0 }
    }

    /// An element g0 with g0 A i equal to this geodesic.
    pub fn base_point(&self) -> GroupElement {
        match *self {
            GeodesicDescriptor::Vertical { foot } => make_n(foot),
            GeodesicDescriptor::HalfCircle { left, right, .. } => {
                GroupElement::from_gl2_plus(right, left, 1.0, 1.0).expect("right > left")
            }
        }
    }
}

/// The geodesic g A i.
pub fn geodesic_of(g: &GroupElement) -> Result<GeodesicDescriptor> {
    let [[a, b], [c, d]] = g.m;
    let scale = g.frobenius();
    let eps = 1e-14 * scale;
    if c.abs() <= eps {
        return Ok(GeodesicDescriptor::Vertical { foot: b / d });
    }
    if d.abs() <= eps {
        return Ok(GeodesicDescriptor::Vertical { foot: a / c });
    }
    let (e0, e1) = (b / d, a / c);
    if !(e0.is_finite() && e1.is_finite()) {
        return Err(Error::DegenerateGeodesic("non-finite endpoint".into()));
    }
    let (left, right) = if e0 < e1 { (e0, e1) } else { (e1, e0) };
    Ok(GeodesicDescriptor::HalfCircle {
        left,
        right,
        center: 0.5 * (left + right),
        radius: 1.0 / (2.0 * (c * d).abs()),
    })
}

/// The parameter s with g a(s) i at the top of the half circle g A i.
pub fn apex_parameter(g: &GroupElement) -> Option<f64> {
    let [_, [c, d]] = g.m;
    (c != 0.0 && d != 0.0).then(|| (d / c).abs().ln())
}

/// Distance from g to N_G(A_L) = g0 (A u A k(pi)) g0^{-1} for L = g0 A i.
pub fn dist_to_normalizer(g: &GroupElement, l: &GeodesicDescriptor) -> f64 {
    let g0 = l.base_point();
    let g0i = g0.inverse();
    let w = make_k(PI);
    let bound = 2.0 * cartan_t(g) + 2.0 * cartan_t(&g0) + 10.0;
    let mut best = f64::INFINITY;
    for comp in [None, Some(w)] {
        let curve = |t: f64| {
            let x = match comp {
                None => make_a(t),
                Some(w) => make_a(t) * w,
            };
            dist(g, &(g0 * x * g0i))
        };
        let steps = 400;
        let h = 2.0 * bound / steps as f64;
        let mut idx = 0;
        let mut fmin = f64::INFINITY;
        for i in 0..=steps {
            let v = curve(-bound + i as f64 * h);
            if v < fmin {
                fmin = v;
                idx = i;
            }
        }
        let lo = -bound + (idx as f64 - 1.0) * h;
        let hi = -bound + (idx as f64 + 1.0) * h;
        let (_, v) = golden_min(curve, lo, hi, 1e-12);
        best = best.min(v.min(fmin));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_coordinates() {
        let e = GroupElement::identity();
        assert_eq!(iwasawa_h(&e), 0.0);
        assert_eq!(cartan_t(&e), 0.0);
        assert!((iwasawa_h(&make_a(1.3)) - 1.3).abs() < 1e-14);
        assert!((cartan_t(&make_a(-2.0)) - 2.0).abs() < 1e-14);
        assert!(dist(&make_k(2.0 * PI), &e) < 1e-15);
    }

    #[test]
    fn determinant_checked() {
        assert!(matches!(GroupElement::new(2.0, 0.0, 0.0, 1.0), Err(Error::NotSpecialLinear { .. })));
        assert!(GroupElement::new(2.0, 0.0, 0.0, 0.5).is_ok());
    }

    #[test]
    fn geodesic_of_identity_is_axis() {
        assert_eq!(geodesic_of(&GroupElement::identity()).unwrap(), GeodesicDescriptor::Vertical { foot: 0.0 });
        let g = make_k(1.0);
        match geodesic_of(&g).unwrap() {
            GeodesicDescriptor::HalfCircle { left, right, radius, center } => {
                assert!((center - 0.5 * (left + right)).abs() < 1e-14);
                assert!((radius - 0.5 * (right - left)).abs() < 1e-12);
                let s = apex_parameter(&g).unwrap();
                let top = (g * make_a(s)).act((0.0, 1.0));
                assert!((top.0 - center).abs() < 1e-12 && (top.1 - radius).abs() < 1e-12);
            }
            _ => panic!("expected half circle"),
        }
    }
}
