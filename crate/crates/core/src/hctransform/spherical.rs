//! Spherical functions and bi-K-invariant profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// sqrt(x / (e^x - 1)), with value 1 at 0.
pub(crate) fn w_factor(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        (x / x.exp_m1()).sqrt()
    }
}

/// Nodes (u, weight) on [0, pi/2] in psi with u = t cos psi, so that
/// phi_s(t) = sum_j weight_j cosh(s u_j).
pub(crate) fn spherical_nodes(t: f64, freq: f64, out_u: &mut Vec<f64>, out_w: &mut Vec<f64>) {
    out_u.clear();
    out_w.clear();
    let t = t.abs();
    let gl = GaussLegendre::cached(12);
    let panels = ((freq * t) / 5.0).ceil() as usize + 2;
    let pre = 2.0 * (0.5 * t).exp() / PI;
    let h = 0.5 * PI / panels as f64;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let psi = mid + 0.5 * h * x;
            let (sh, ch) = (0.5 * psi).sin_cos();
            let a = 2.0 * t * ch * ch;
            let b = 2.0 * t * sh * sh;
            out_u.push(t * psi.cos());
            out_w.push(pre * 0.5 * h * w * w_factor(a) * w_factor(b));
        }
    }
}

/// phi_s(a(t)) for complex s, normalized by phi_s(e) = 1.
pub fn spherical_complex(s: Complex64, t: f64) -> Complex64 {
    let mut us = Vec::new();
    let mut ws = Vec::new();
    spherical_nodes(t, s.norm() + 1.0, &mut us, &mut ws);
    us.iter().zip(&ws).map(|(u, w)| (s * u).cosh() * w).sum()
}

/// phi_{ir}(a(t)) for r real, or for r = i sigma with sigma in [-1/2, 1/2].
pub fn spherical(r: Complex64, t: f64) -> Result<f64> {
    let on_real = r.im == 0.0;
    let on_imag = r.re == 0.0 && r.im.abs() <= 0.5;
    if !(on_real || on_imag) {
        return Err(Error::NotAdmissible { re: r.re, im: r.im });
    }
    let s = Complex64::new(0.0, 1.0) * r;
    Ok(spherical_complex(s, t).re)
}

/// A compactly supported bi-K-invariant function, given as a function of the Cartan radius.
pub trait Radial: Sync {
    fn value(&self, t: f64) -> f64;
    /// Vanishes for t >= support.
    fn support(&self) -> f64;
}

/// Smooth bump exp(-1/(1 - x^2)) in x = (t - center)/width, times (1 + tilt t^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub tilt: f64,
}

impl Bump {
    /// exp(-1/(1 - (t/t0)^2)) on |t| < t0.
    pub fn standard(t0: f64) -> Self {
        Bump { center: 0.0, width: t0, tilt: 0.0 }
    }
}

impl Radial for Bump {
    fn value(&self, t: f64) -> f64 {
        let x = (t.abs() - self.center) / self.width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - x * x)).exp() * (1.0 + self.tilt * t * t)
        }
    }

    fn support(&self) -> f64 {
        self.center + self.width
    }
}

/// Identically zero function.
#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Radial for Zero {
    fn value(&self, _t: f64) -> f64 {
        0.0
    }
    fn support(&self) -> f64 {
        0.0
    }
}

/// Samples of a bi-K-invariant function on a uniform grid with cubic interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalProfile {
    pub step: f64,
    pub values: Vec<f64>,
    /// Values are zero for t >= t_max.
    pub t_max: f64,
    /// Number of Lagrange points; 4 is cubic.
    pub points: usize,
}

impl SphericalProfile {
    pub fn new(step: f64, values: Vec<f64>, t_max: f64) -> Self {
        SphericalProfile { step, values, t_max, points: 4 }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        assert!(points >= 2 && points % 2 == 0);
        self.points = points;
        self
    }

    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| (i as f64 * self.step, *v))
    }
}

impl Radial for SphericalProfile {
    fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= self.t_max {
            return 0.0;
        }
        let x = t / self.step;
        let i = x.floor() as isize;
        let fr = x - i as f64;
        let n = self.values.len() as isize;
        let at = |j: isize| -> f64 {
            let j = j.abs();
            if j >= n {
                0.0
            } else {
                self.values[j as usize]
            }
        };
        let half = (self.points / 2) as isize;
        let lo = 1 - half;
        let hi = half;
        let mut sum = 0.0;
        for m in lo..=hi {
            let mut w = 1.0;
            for q in lo..=hi {
                if q != m {
                    w *= (fr - q as f64) / (m - q) as f64;
                }
            }
            sum += w * at(i + m);
        }
        sum
    }

    fn support(&self) -> f64 {
        self.t_max
    }
}
