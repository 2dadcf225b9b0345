//! The family k_nu of compactly supported approximate spectral projectors.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spherical::{Bump, Radial, SphericalProfile};
use super::transform::{inverse_hc_grid, AbelProjection, TransformProfile, TAIL_TARGET};
use crate::error::{Error, Result};
use crate::quadrature::{bisect, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnuSettings {
    /// Support radius t0 of the base bump.
    pub t0: f64,
    /// hat k_nu(ir) is sampled on [0, nu + rmax].
    pub rmax: f64,
    /// Step of the r grid.
    pub dr: f64,
    /// Step of the t grid for k_nu.
    pub grid_step: f64,
    /// Lagrange points used to interpolate k_nu.
    pub interp_points: usize,
}

impl Default for KnuSettings {
    fn default() -> Self {
        KnuSettings { t0: 0.5, rmax: 200.0, dr: 0.1, grid_step: 0.001, interp_points: 8 }
    }
}

/// Measured margins of the five properties for one nu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnuCertificate {
    /// Where the raw inverse transform falls to the noise level seen beyond R.
    pub measured_support: f64,
    /// Largest |k_nu(t)| with t >= R + 0.05.
    pub noise: f64,
    /// Largest |k_nu(t)| with t >= R, before zeroing.
    pub outside_max: f64,
    /// Minimum of hat k_nu over the sampled r grid and the segment.
    pub min_value: f64,
    /// Minimum over the segment i[0, 1/2] alone.
    pub segment_min: f64,
    /// Largest imaginary part seen on the segment.
    pub imag_residue: f64,
    /// Minimum of hat k_nu(ir) over |r - nu| <= 1.
    pub window_min: f64,
    /// sup_r hat k_nu(ir) (1 + |nu - r|)^4.
    pub decay_sup4: f64,
    pub tail_bound: f64,
    pub k_e: f64,
    pub k_e_over_nu: f64,
}

impl KnuCertificate {
    pub fn violations(&self, r_support: f64, grid_step: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.measured_support > r_support + grid_step + 1e-12 {
            out.push(format!("support radius {} exceeds {}", self.measured_support, r_support));
        }
        if self.min_value < -1e-9 {
            out.push(format!("nonnegativity: min {:e}", self.min_value));
        }
        if self.window_min < 1.0 - 1e-6 {
            out.push(format!("lower bound near nu: min {}", self.window_min));
        }
        if self.tail_bound > TAIL_TARGET {
            out.push(format!("decay: tail bound {:e}", self.tail_bound));
        }
        if !(self.k_e > 0.0) {
            out.push(format!("k_nu(e) = {}", self.k_e));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnuEntry {
    pub nu: f64,
    pub transform: TransformProfile,
    pub profile: SphericalProfile,
    pub k_e: f64,
    pub certificate: KnuCertificate,
}

/// The base bump, its transform, the rescaling delta and a per-nu cache.
pub struct KnuFamily {
    pub settings: KnuSettings,
    pub base: Bump,
    pub delta: f64,
    /// hat k(0) for the base bump.
    pub k0: f64,
    /// Support radius of every k_nu.
    pub support: f64,
    cache: Mutex<HashMap<u64, Arc<OnceLock<Arc<KnuEntry>>>>>,
}

impl std::fmt::Debug for KnuFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnuFamily")
            .field("settings", &self.settings)
            .field("delta", &self.delta)
            .field("support", &self.support)
            .finish()
    }
}

impl KnuFamily {
    pub fn new(settings: KnuSettings) -> Result<Self> {
        if !(settings.t0 > 0.0 && settings.rmax > 0.0 && settings.dr > 0.0 && settings.grid_step > 0.0) {
            return Err(Error::InvalidParameter("k_nu settings must be positive".into()));
        }
        if settings.interp_points < 2 || settings.interp_points % 2 == 1 {
            return Err(Error::InvalidParameter("interp_points must be even and at least 2".into()));
        }
        let base = Bump::standard(settings.t0);
        let proj = AbelProjection::new(&base, 8.0);
        let k0 = proj.eval_real(0.0);
        let delta = find_delta(&proj, k0);
        // hat k_(1) = hat k^2 has exponential type 2 t0; rescaling by delta scales it
        let support = 2.0 * settings.t0 * delta;
        Ok(KnuFamily { settings, base, delta, k0, support, cache: Mutex::new(HashMap::new()) })
    }

    /// hat k_(2)(s) = 2 hat k_(1)(delta s) / hat k_(1)(0).
    fn k2(&self, proj: &AbelProjection, s: Complex64) -> Complex64 {
        let v = proj.eval(s * self.delta) / self.k0;
        2.0 * v * v
    }

    fn projection(&self, nu: f64) -> AbelProjection {
        AbelProjection::new(&self.base, self.delta * (2.0 * nu + self.settings.rmax) + 8.0)
    }

    /// hat k_nu(s) = hat k_(2)(i nu + s) + hat k_(2)(i nu - s).
    pub fn transform_at(&self, nu: f64, s: Complex64) -> Complex64 {
        let proj = self.projection(nu);
        let inu = Complex64::new(0.0, nu);
        self.k2(&proj, inu + s) + self.k2(&proj, inu - s)
    }

    /// r -> hat k_nu(ir) for real r, sharing one quadrature of the base transform.
    pub fn transform_imag(&self, nu: f64) -> impl Fn(f64) -> f64 + '_ {
        let proj = self.projection(nu);
        move |r: f64| {
            let a = proj.eval_imag(self.delta * (nu + r)) / self.k0;
            let b = proj.eval_imag(self.delta * (nu - r)) / self.k0;
            2.0 * (a * a + b * b)
        }
    }

    /// Sample hat k_nu and invert it, without checking the certificate.
    pub fn build(&self, nu: f64) -> Result<KnuEntry> {
        if !(nu >= 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be nonnegative, got {nu}")));
        }
        let st = self.settings;
        let proj = self.projection(nu);
        let r_max = nu + st.rmax;
        let count = (r_max / st.dr).ceil() as usize + 1;
        let i = Complex64::new(0.0, 1.0);
        let values: Vec<f64> = (0..count)
            .map(|k| {
                let r = k as f64 * st.dr;
                (self.k2(&proj, i * (nu + r)) + self.k2(&proj, i * (nu - r))).re
            })
            .collect();
        let mut imag_residue = 0.0f64;
        let segment: Vec<(f64, f64)> = (0..=50)
            .map(|k| {
                let sigma = 0.01 * k as f64;
                let s = Complex64::new(sigma, 0.0);
                let v = self.k2(&proj, i * nu + s) + self.k2(&proj, i * nu - s);
                imag_residue = imag_residue.max(v.im.abs());
                (sigma, v.re)
            })
            .collect();
        let transform = TransformProfile::from_values(st.dr, values, segment, nu);

        let n_t = ((self.support + 0.25) / st.grid_step).round() as usize + 1;
        let ts: Vec<f64> = (0..n_t).map(|k| k as f64 * st.grid_step).collect();
        let raw = inverse_hc_grid(&transform, &ts)?;
        let k_e = raw[0];

        let outside_max = ts
            .iter()
            .zip(&raw)
            .filter(|(t, _)| **t >= self.support)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let noise = ts
            .iter()
            .zip(&raw)
            .filter(|(t, _)| **t >= self.support + 0.05)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let measured_support = measured_support(&ts, &raw, noise);
        let values: Vec<f64> =
            ts.iter().zip(&raw).map(|(t, v)| if *t >= self.support { 0.0 } else { *v }).collect();
        let profile =
            SphericalProfile::new(st.grid_step, values, self.support).with_points(st.interp_points);

        let segment_min = transform.segment.iter().fold(f64::INFINITY, |m, (_, v)| m.min(*v));
        let grid_min = transform.values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let window_min = transform
            .values
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 * st.dr - nu).abs() <= 1.0 + 1e-9)
            .fold(f64::INFINITY, |m, (_, v)| m.min(*v));
        let decay_sup4 = transform
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v.abs() * (1.0 + (k as f64 * st.dr - nu).abs()).powi(4))
            .fold(0.0, f64::max);
        let certificate = KnuCertificate {
            measured_support,
            noise,
            outside_max,
            min_value: grid_min.min(segment_min),
            segment_min,
            imag_residue,
            window_min,
            decay_sup4,
            tail_bound: transform.certificate.tail_bound,
            k_e,
            k_e_over_nu: if nu > 0.0 { k_e / nu } else { f64::NAN },
        };
        Ok(KnuEntry { nu, transform, profile, k_e, certificate })
    }

    /// Cached entry for nu, built once.
    pub fn entry(&self, nu: f64) -> Result<Arc<KnuEntry>> {
        let cell = {
            let mut map = self.cache.lock().expect("k_nu cache poisoned");
            map.entry(nu.to_bits()).or_default().clone()
        };
        if let Some(e) = cell.get() {
            return Ok(e.clone());
        }
        let e = Arc::new(self.build(nu)?);
        Ok(cell.get_or_init(|| e).clone())
    }

    /// Cached entry for nu; fails if any of the five properties is violated.
    pub fn build_knu(&self, nu: f64) -> Result<Arc<KnuEntry>> {
        let e = self.entry(nu)?;
        let v = e.certificate.violations(self.support, self.settings.grid_step);
        if v.is_empty() {
            Ok(e)
        } else {
            Err(Error::Certification(format!("k_nu at nu = {nu}: {}", v.join("; "))))
        }
    }

    /// int_R k_nu(a(t)) dt, with the panel count doubled until it settles.
    pub fn geodesic_mass(&self, nu: f64) -> Result<f64> {
        let e = self.entry(nu)?;
        geodesic_mass_of(&e.profile)
    }
}

pub(crate) fn geodesic_mass_of(profile: &SphericalProfile) -> Result<f64> {
    let gl = GaussLegendre::cached(8);
    let cells = (profile.t_max / profile.step).ceil() as usize;
    let mut prev = 2.0 * gl.integrate(0.0, profile.t_max, cells, |t| profile.value(t));
    let mut panels = cells;
    for _ in 0..3 {
        panels *= 2;
        let v = 2.0 * gl.integrate(0.0, profile.t_max, panels, |t| profile.value(t));
        if (v - prev).abs() < 1e-10 {
            return Ok(v);
        }
        prev = v;
    }
    Err(Error::QuadratureNonConvergence { context: "geodesic mass", achieved: prev })
}

/// Largest delta <= 1 with hat k(s)^2 > hat k(0)^2 / 2 for |s| <= delta on R and iR.
fn find_delta(proj: &AbelProjection, k0: f64) -> f64 {
    let half = 0.5 * k0 * k0;
    let ok = |d: f64| {
        (0..=200).all(|j| {
            let y = d * j as f64 / 200.0;
            let a = proj.eval_imag(y);
            let b = proj.eval_real(y);
            a * a > half && b * b > half
        })
    };
    if ok(1.0) {
        return 1.0;
    }
    let f = |d: f64| if ok(d) { -1.0 } else { 1.0 };
    bisect(f, 0.0, 1.0, 1e-10).unwrap_or(0.0)
}

/// Smallest grid t beyond which the raw profile stays within four times `noise`.
fn measured_support(ts: &[f64], raw: &[f64], noise: f64) -> f64 {
    let thr = 4.0 * noise;
    let mut idx = ts.len();
    for j in (0..ts.len()).rev() {
        if raw[j].abs() > thr {
            break;
        }
        idx = j;
    }
    ts.get(idx).copied().unwrap_or(f64::INFINITY)
}
