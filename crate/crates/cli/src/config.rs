//! Experiment configuration: `[algebra]`, `[analysis]` and `[run]` tables in TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use amplify_core::hctransform::KnuSettings;
use amplify_core::quatorder::{self, BasisOrder};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AlgebraConfig {
    pub a: i64,
    pub b: i64,
    #[serde(rename = "D")]
    pub d: i64,
    #[serde(rename = "E")]
    pub e: i64,
    pub f: i64,
    /// Rows are f times the basis quaternions in (1, alpha, omega, alpha omega) coordinates.
    pub order_basis: Option<[[i64; 4]; 4]>,
    /// Radius of the norm balls; defaults to the orbital support bound.
    #[serde(rename = "Cprime")]
    pub cprime: Option<f64>,
    pub vol_gamma: f64,
    #[serde(rename = "unit_height_H")]
    pub unit_height: i64,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        AlgebraConfig { a: 3, b: -1, d: 3, e: 1, f: 1, order_basis: None, cprime: None, vol_gamma: 1.0, unit_height: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub rmax: f64,
    pub grid_step: f64,
    pub dr: f64,
    pub t0: f64,
    pub interp_points: usize,
    /// Panels per axis of the direct triple quadrature for J.
    pub osc_panels: usize,
    #[serde(rename = "error_C")]
    pub error_c: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let k = KnuSettings::default();
        AnalysisConfig {
            rmax: k.rmax,
            grid_step: k.grid_step,
            dr: k.dr,
            t0: k.t0,
            interp_points: k.interp_points,
            osc_panels: 48,
            error_c: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub nu_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub j_r_grid: Vec<f64>,
    pub orbital_elements: usize,
    pub orbital_d_min: f64,
    pub orbital_d_max: f64,
    /// Recorded bound for max |I(nu, g)| (1 + nu d)^{1/2}.
    pub orbital_decay_constant: f64,
    pub vanishing_samples: usize,
    pub count_n_max: u64,
    pub count_deltas: Vec<f64>,
    /// Radius for the set comparison with the plain box scan.
    pub box_scan_cprime: f64,
    pub stab_n_max: u64,
    pub sides_nu: f64,
    pub sides_n: Vec<u64>,
    pub m_grid: Vec<f64>,
    pub error_c_grid: Vec<f64>,
    pub budget_nu: f64,
    #[serde(rename = "budget_A")]
    pub budget_a: f64,
    #[serde(rename = "budget_Cpp")]
    pub budget_cpp: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            out_dir: None,
            threads: None,
            seed: 0,
            nu_grid: vec![40.0, 80.0, 160.0],
            r_grid: vec![50.0, 100.0, 200.0, 400.0],
            j_r_grid: vec![25.0, 50.0, 100.0],
            orbital_elements: 20,
            orbital_d_min: 0.01,
            orbital_d_max: 0.5,
            orbital_decay_constant: 25.0,
            vanishing_samples: 10,
            count_n_max: 200,
            count_deltas: vec![0.05, 0.1, 0.2],
            box_scan_cprime: 2.0,
            stab_n_max: 1000,
            sides_nu: 40.0,
            sides_n: vec![1, 2, 3, 4, 5, 13],
            m_grid: vec![1e3, 1e4, 1e5, 1e6],
            error_c_grid: vec![1.0, 2.0, 4.0],
            budget_nu: 1e6,
            budget_a: 0.1,
            budget_cpp: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub algebra: AlgebraConfig,
    pub analysis: AnalysisConfig,
    pub run: RunConfig,
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be a positive finite number, got {v}")))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(ConfigError::Invalid(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_str_named(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_str_named(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let al = &self.algebra;
        if al.d != al.a || al.e != -al.b {
            return Err(ConfigError::Invalid(format!(
                "D = {} and E = {} must equal a = {} and -b = {}",
                al.d, al.e, al.a, -al.b
            )));
        }
        if al.a <= 0 || al.e <= 0 {
            return Err(ConfigError::Invalid("need a > 0 and b < 0".into()));
        }
        if al.f < 1 {
            return Err(ConfigError::Invalid("f must be at least 1".into()));
        }
        if let Some(c) = al.cprime {
            positive("Cprime", c)?;
        }
        positive("vol_gamma", al.vol_gamma)?;
        if al.unit_height < 1 || al.unit_height > 200 {
            return Err(ConfigError::Invalid("unit_height_H must be in 1..=200".into()));
        }
        let an = &self.analysis;
        positive("rmax", an.rmax)?;
        positive("dr", an.dr)?;
        positive("t0", an.t0)?;
        positive("error_C", an.error_c)?;
        if !(an.grid_step > 0.0 && an.grid_step <= 0.01) {
            return Err(ConfigError::Invalid("grid_step must be in (0, 0.01]".into()));
        }
        if an.interp_points < 2 || an.interp_points % 2 != 0 || an.interp_points > 16 {
            return Err(ConfigError::Invalid("interp_points must be even and in 2..=16".into()));
        }
        if an.osc_panels < 4 {
            return Err(ConfigError::Invalid("osc_panels must be at least 4".into()));
        }
        let r = &self.run;
        nonempty("nu_grid", &r.nu_grid)?;
        for v in r.nu_grid.iter().chain(&r.r_grid).chain(&r.j_r_grid).chain(&r.count_deltas).chain(&r.error_c_grid) {
            positive("grid value", *v)?;
        }
        nonempty("r_grid", &r.r_grid)?;
        nonempty("count_deltas", &r.count_deltas)?;
        nonempty("m_grid", &r.m_grid)?;
        for m in &r.m_grid {
            if !(*m > 3.0 && m.is_finite()) {
                return Err(ConfigError::Invalid(format!("M = {m} must exceed 3")));
            }
        }
        if r.orbital_elements == 0 || r.sides_n.contains(&0) {
            return Err(ConfigError::Invalid("orbital_elements and sides_n entries must be positive".into()));
        }
        if !(0.0 < r.orbital_d_min && r.orbital_d_min < r.orbital_d_max) {
            return Err(ConfigError::Invalid("need 0 < orbital_d_min < orbital_d_max".into()));
        }
        positive("orbital_decay_constant", r.orbital_decay_constant)?;
        positive("box_scan_cprime", r.box_scan_cprime)?;
        positive("sides_nu", r.sides_nu)?;
        positive("budget_nu", r.budget_nu)?;
        positive("budget_A", r.budget_a)?;
        positive("budget_Cpp", r.budget_cpp)?;
        if r.count_n_max < 1 || r.stab_n_max < 1 {
            return Err(ConfigError::Invalid("count_n_max and stab_n_max must be positive".into()));
        }
        if r.threads == Some(0) {
            return Err(ConfigError::Invalid("threads must be positive".into()));
        }
        self.order().map_err(|e| ConfigError::Invalid(format!("algebra: {e}")))?;
        Ok(())
    }

    pub fn knu_settings(&self) -> KnuSettings {
        KnuSettings {
            t0: self.analysis.t0,
            rmax: self.analysis.rmax,
            dr: self.analysis.dr,
            grid_step: self.analysis.grid_step,
            interp_points: self.analysis.interp_points,
        }
    }

    pub fn order(&self) -> amplify_core::Result<BasisOrder> {
        let alg = quatorder::classify_algebra(self.algebra.a, self.algebra.b)?;
        match self.algebra.order_basis {
            Some(basis) => BasisOrder::new(&alg, self.algebra.f, basis),
            None if self.algebra.f == 1 => BasisOrder::standard(&alg),
            None => Err(amplify_core::Error::InvalidParameter("f > 1 needs order_basis".into())),
        }
    }
}
