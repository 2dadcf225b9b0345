//! The model integral L(r) = int c(t) phi_{ir}(a(t)) dt with the arc-length circle measure.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::cutoff::ModelCutoff;
use super::spherical::spherical_nodes;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

fn integrate_with<F: Fn(f64) -> Complex64>(t_max: f64, r: f64, f: F) -> Result<Complex64> {
    let gl = GaussLegendre::cached(8);
    let mut panels = ((t_max * r.max(1.0)) / PI).ceil() as usize + 4;
    let run = |panels: usize| -> Complex64 {
        let (xs, ws) = gl.composite(0.0, t_max, panels);
        xs.iter().zip(&ws).map(|(t, w)| f(*t) * *w).sum()
    };
    let mut prev = run(panels);
    for _ in 0..5 {
        panels *= 2;
        let v = run(panels);
        if (v - prev).norm() <= 1e-12 * v.norm().max(1e-3) {
            return Ok(v);
        }
        prev = v;
    }
    Err(Error::QuadratureNonConvergence { context: "model integral", achieved: prev.norm() })
}

/// L(r) as a complex number, with phi_{ir} evaluated in complex arithmetic.
pub fn model_integral_complex(r: f64, c: &ModelCutoff) -> Result<Complex64> {
    let s = Complex64::new(0.0, r);
    let v = integrate_with(c.support(), r, |t| {
        let mut us = Vec::new();
        let mut ws = Vec::new();
        spherical_nodes(t, r + 1.0, &mut us, &mut ws);
        let phi: Complex64 = us.iter().zip(&ws).map(|(u, w)| (s * u).cosh() * w).sum();
        phi * c.value(t)
    })?;
    // even integrand on R, uniform circle measure of mass 2 pi
    Ok(v * (4.0 * PI))
}

/// L(r) = 2 pi int_R c(t) phi_{ir}(a(t)) dt, so that r L(r) -> 4 pi c(0).
pub fn model_integral(r: f64, c: &ModelCutoff) -> Result<f64> {
    let v = integrate_with(c.support(), r, |t| {
        let mut us = Vec::new();
        let mut ws = Vec::new();
        spherical_nodes(t, r + 1.0, &mut us, &mut ws);
        let phi: f64 = us.iter().zip(&ws).map(|(u, w)| (r * u).cos() * w).sum();
        Complex64::new(phi * c.value(t), 0.0)
    })?;
    Ok(v.re * 4.0 * PI)
}

/// log(cosh t + x1 sinh t), the phase of the circle representation.
pub fn model_phase(x1: f64, t: f64) -> f64 {
    (t.cosh() + x1 * t.sinh()).ln()
}

/// Gradient of the model phase in (x1, t).
pub fn model_phase_gradient(x1: f64, t: f64) -> [f64; 2] {
    let den = t.cosh() + x1 * t.sinh();
    [t.sinh() / den, (t.sinh() + x1 * t.cosh()) / den]
}

/// Hessian of the model phase in (x1, t) by central differences.
pub fn model_phase_hessian(x1: f64, t: f64) -> [[f64; 2]; 2] {
    let h = 1e-4;
    let f = model_phase;
    let fxx = (f(x1 + h, t) - 2.0 * f(x1, t) + f(x1 - h, t)) / (h * h);
    let ftt = (f(x1, t + h) - 2.0 * f(x1, t) + f(x1, t - h)) / (h * h);
    let fxt = (f(x1 + h, t + h) - f(x1 + h, t - h) - f(x1 - h, t + h) + f(x1 - h, t - h)) / (4.0 * h * h);
    [[fxx, fxt], [fxt, ftt]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_shape_at_critical_point() {
        let g = model_phase_gradient(0.0, 0.0);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
        let h = model_phase_hessian(0.0, 0.0);
        assert!(h[0][0].abs() < 1e-6);
        assert!((h[0][1] - 1.0).abs() < 1e-6);
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        assert!(det < 0.0);
    }

    #[test]
    fn leading_constant() {
        let c = ModelCutoff::for_support(1.0);
        let r = 100.0;
        let l = model_integral(r, &c).unwrap();
        assert!((r * l - 4.0 * PI).abs() < 60.0 / r, "{}", r * l);
    }
}
