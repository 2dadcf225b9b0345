//! Harish-Chandra transform and its Plancherel inverse.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spherical::{spherical_nodes, Radial};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Plancherel density r tanh(pi r) / (2 pi).
pub fn beta(r: f64) -> f64 {
    r * (PI * r).tanh() / (2.0 * PI)
}

/// Abel transform g(u) = sqrt2 int_{|u|}^inf k(t) sinh t / sqrt(cosh t - cosh u) dt.
pub fn abel_transform<K: Radial + ?Sized>(k: &K, u: f64) -> f64 {
    let u = u.abs();
    let t_max = k.support();
    if u >= t_max {
        return 0.0;
    }
    let cu = u.cosh();
    let w_max = (t_max.cosh() - cu).sqrt();
    let gl = GaussLegendre::cached(16);
    // cosh t = cosh u + w^2 removes the endpoint singularity
    let v = gl.integrate(0.0, w_max, 12, |w| k.value((cu + w * w).acosh()));
    2.0 * std::f64::consts::SQRT_2 * v
}

/// Quadrature representation hat k(s) = sum_j weights_j cosh(s u_j) over u_j in [0, T].
#[derive(Debug, Clone)]
pub struct AbelProjection {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AbelProjection {
    /// Resolve frequencies |s| up to `max_freq`.
    pub fn new<K: Radial + ?Sized>(k: &K, max_freq: f64) -> Self {
        Self::with_panels(k, Self::panels_for(k.support(), max_freq))
    }

    pub fn panels_for(t_max: f64, max_freq: f64) -> usize {
        ((max_freq * t_max) / 4.0).ceil() as usize + 24
    }

    pub fn with_panels<K: Radial + ?Sized>(k: &K, panels: usize) -> Self {
        let t_max = k.support();
        if t_max <= 0.0 {
            return AbelProjection { nodes: Vec::new(), weights: Vec::new() };
        }
        let gl = GaussLegendre::cached(12);
        let (us, ws) = gl.composite(0.0, t_max, panels);
        let weights: Vec<f64> = us.par_iter().zip(&ws).map(|(u, w)| 2.0 * w * abel_transform(k, *u)).collect();
        AbelProjection { nodes: us, weights }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| (s * u).cosh() * w).sum()
    }

    /// hat k(iy).
    pub fn eval_imag(&self, y: f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| (y * u).cos() * w).sum()
    }

    /// hat k(x) for real x.
    pub fn eval_real(&self, x: f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| (x * u).cosh() * w).sum()
    }

    /// Sum of |weights|; the scale of rounding errors.
    pub fn scale(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// hat k(s) for any complex s, with a panel-doubling convergence check.
pub fn hc_transform_complex<K: Radial + ?Sized>(k: &K, s: Complex64) -> Result<Complex64> {
    if k.support() <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut panels = AbelProjection::panels_for(k.support(), s.norm());
    let mut prev = AbelProjection::with_panels(k, panels);
    let mut v_prev = prev.eval(s);
    for _ in 0..6 {
        panels *= 2;
        let next = AbelProjection::with_panels(k, panels);
        let v = next.eval(s);
        let scale = next.scale() * (s.re.abs() * k.support()).exp();
        let err = (v - v_prev).norm();
        if err <= 1e-12 * scale.max(1e-300) {
            return Ok(v);
        }
        prev = next;
        v_prev = v;
    }
    let _ = prev;
    Err(Error::QuadratureNonConvergence { context: "Harish-Chandra transform", achieved: (v_prev).norm() })
}

/// hat k(s) for s on R or iR, where it is real.
pub fn hc_transform<K: Radial + ?Sized>(k: &K, s: Complex64) -> Result<f64> {
    if s.re != 0.0 && s.im != 0.0 {
        return Err(Error::NotAdmissible { re: s.re, im: s.im });
    }
    Ok(hc_transform_complex(k, s)?.re)
}

/// Fitted envelope |hat k(ir)| <= C_N (1 + |r - center|)^{-N} and the induced tail bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub pairs: Vec<(u32, f64)>,
    pub tail_bound: f64,
}

/// Target for the certified Plancherel truncation error.
pub const TAIL_TARGET: f64 = 1e-8;

impl DecayCertificate {
    pub fn fit(dr: f64, values: &[f64], center: f64) -> Self {
        let r_max = dr * (values.len().saturating_sub(1)) as f64;
        let mut pairs = Vec::new();
        let mut best = f64::INFINITY;
        for n in [4u32, 6, 8, 12, 16, 24] {
            let c = values
                .iter()
                .enumerate()
                .map(|(k, v)| v.abs() * (1.0 + (k as f64 * dr - center).abs()).powi(n as i32))
                .fold(0.0, f64::max);
            pairs.push((n, c));
            let x = 1.0 + (r_max - center).max(0.0);
            let nf = n as f64;
            let tail = c / (2.0 * PI)
                * (x.powf(2.0 - nf) / (nf - 2.0) + (center - 1.0).max(0.0) * x.powf(1.0 - nf) / (nf - 1.0));
            best = best.min(tail);
        }
        DecayCertificate { pairs, tail_bound: best }
    }
}

/// Samples of hat k(ir) on r = 0, dr, 2dr, ... and of hat k on the segment r in i[0, 1/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformProfile {
    pub dr: f64,
    pub values: Vec<f64>,
    /// Pairs (sigma, hat k(sigma)) for sigma in [0, 1/2].
    pub segment: Vec<(f64, f64)>,
    pub center: f64,
    pub certificate: DecayCertificate,
}

impl TransformProfile {
    pub fn from_values(dr: f64, values: Vec<f64>, segment: Vec<(f64, f64)>, center: f64) -> Self {
        let certificate = DecayCertificate::fit(dr, &values, center);
        TransformProfile { dr, values, segment, center, certificate }
    }

    /// Sample hat k of a compactly supported profile up to r_max.
    pub fn sample<K: Radial + ?Sized>(k: &K, dr: f64, r_max: f64) -> Self {
        let proj = AbelProjection::new(k, r_max);
        let count = (r_max / dr).ceil() as usize + 1;
        let values: Vec<f64> = (0..count).into_par_iter().map(|i| proj.eval_imag(i as f64 * dr)).collect();
        let segment = (0..=10).map(|i| {
            let s = 0.05 * i as f64;
            (s, proj.eval_real(s))
        });
        Self::from_values(dr, values, segment.collect(), 0.0)
    }

    pub fn r_max(&self) -> f64 {
        self.dr * (self.values.len().saturating_sub(1)) as f64
    }

    /// Trapezoid coefficients dr * hat k(ir_k) * beta(r_k).
    fn coefficients(&self) -> Vec<f64> {
        self.values.iter().enumerate().map(|(k, v)| self.dr * v * beta(k as f64 * self.dr)).collect()
    }
}

/// sum_k c_k cos(k dr u) for a batch of u, by rotation with periodic re-anchoring.
fn cosine_sums(coeffs: &[f64], first: usize, dr: f64, us: &[f64]) -> Vec<f64> {
    const ANCHOR: usize = 32;
    const BLOCK: usize = 256;
    let mut out = Vec::with_capacity(us.len());
    for chunk in us.chunks(BLOCK) {
        let n = chunk.len();
        let mut acc = vec![0.0; n];
        let mut cr = vec![0.0; n];
        let mut ci = vec![0.0; n];
        let mut rc = vec![0.0; n];
        let mut rs = vec![0.0; n];
        for j in 0..n {
            let (s, c) = (dr * chunk[j]).sin_cos();
            rc[j] = c;
            rs[j] = s;
        }
        let mut k = first;
        while k < coeffs.len() {
            for j in 0..n {
                let (s, c) = (k as f64 * dr * chunk[j]).sin_cos();
                cr[j] = c;
                ci[j] = s;
            }
            let end = (k + ANCHOR).min(coeffs.len());
            for &c in &coeffs[k..end] {
                for j in 0..n {
                    acc[j] += c * cr[j];
                    let nr = cr[j] * rc[j] - ci[j] * rs[j];
                    let ni = cr[j] * rs[j] + ci[j] * rc[j];
                    cr[j] = nr;
                    ci[j] = ni;
                }
            }
            k = end;
        }
        out.extend_from_slice(&acc);
    }
    out
}

fn check_decay(hk: &TransformProfile) -> Result<()> {
    if hk.certificate.tail_bound > TAIL_TARGET {
        return Err(Error::InsufficientDecay { bound: hk.certificate.tail_bound, target: TAIL_TARGET });
    }
    Ok(())
}

fn inverse_with(coeffs: &[f64], first: usize, hk: &TransformProfile, t: f64) -> f64 {
    let mut us = Vec::new();
    let mut ws = Vec::new();
    spherical_nodes(t, hk.r_max(), &mut us, &mut ws);
    let g = cosine_sums(coeffs, first, hk.dr, &us);
    g.iter().zip(&ws).map(|(a, b)| a * b).sum()
}

fn leading_zeros(coeffs: &[f64]) -> usize {
    let top = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    coeffs.iter().position(|c| c.abs() > 1e-30 * top).unwrap_or(coeffs.len())
}

/// k(a(t)) = int_0^inf hat k(ir) phi_{ir}(a(t)) beta(r) dr.
pub fn inverse_hc(hk: &TransformProfile, t: f64) -> Result<f64> {
    check_decay(hk)?;
    let coeffs = hk.coefficients();
    Ok(inverse_with(&coeffs, leading_zeros(&coeffs), hk, t))
}

/// [`inverse_hc`] on many points; each point is independent.
pub fn inverse_hc_grid(hk: &TransformProfile, ts: &[f64]) -> Result<Vec<f64>> {
    check_decay(hk)?;
    let coeffs = hk.coefficients();
    let first = leading_zeros(&coeffs);
    Ok(ts.par_iter().map(|t| inverse_with(&coeffs, first, hk, *t)).collect())
}
