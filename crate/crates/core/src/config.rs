//! Experiment configuration read from TOML.
//!
//! Sections are one level deep. Cut-off positions and extension cube sizes are
//! fractions of the box periods so that one file serves every grid level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientKind, CoefficientParams};
use crate::error::{Error, Result};
use crate::exponents::{self, Rational};
use crate::grid::Grid;
use crate::sample::{BandLimited, CylinderFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default)]
    pub cylinders: CylinderConfig,
    #[serde(default)]
    pub exponents: ExponentsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub garding: GardingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub m: usize,
    pub nt: usize,
    pub nx: usize,
    pub period_t: f64,
    pub period_x: f64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub kind: CoefficientKind,
    #[serde(default = "CoefficientConfig::default_lambda")]
    pub lambda: f64,
    #[serde(default = "CoefficientConfig::default_contrast")]
    pub contrast: f64,
    pub cell_t: f64,
    #[serde(default)]
    pub cell_x: Option<f64>,
    #[serde(default = "CoefficientConfig::default_skew")]
    pub skew: f64,
    #[serde(default)]
    pub bound: Option<f64>,
    /// Zero-order constant of the solved operator `d_t - div A grad + kappa + 1`.
    #[serde(default)]
    pub kappa: f64,
    pub seed: u64,
}

impl CoefficientConfig {
    fn default_lambda() -> f64 {
        1.0
    }

    fn default_contrast() -> f64 {
        5.0
    }

    fn default_skew() -> f64 {
        1.0
    }

    pub fn params(&self) -> CoefficientParams {
        CoefficientParams {
            lambda: self.lambda,
            contrast: self.contrast,
            cell_t: self.cell_t,
            cell_x: self.cell_x,
            skew: self.skew,
            bound: self.bound,
        }
    }
}

/// Band-limited right-hand side `(f, F)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub kt_max: usize,
    pub kx_max: usize,
    pub decay: f64,
    pub real: bool,
    /// Draw a nonzero `F`.
    pub flux: bool,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { kt_max: 4, kx_max: 4, decay: 1.0, real: false, flux: true, seed: 7 }
    }
}

impl DataConfig {
    pub fn band(&self) -> BandLimited {
        BandLimited {
            decay: self.decay,
            real: self.real,
            ..BandLimited::new(self.kt_max, self.kx_max)
        }
    }
}

/// Smooth box cut-off, every length a fraction of the corresponding period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffConfig {
    pub center_t: f64,
    pub center_x: f64,
    pub half_t: f64,
    pub half_x: f64,
    pub width_t: f64,
    pub width_x: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            center_t: 0.5,
            center_x: 0.5,
            half_t: 0.25,
            half_x: 0.25,
            width_t: 0.05,
            width_x: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CylinderConfig {
    pub count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma: f64,
    pub rho: f64,
    pub seed: u64,
}

impl Default for CylinderConfig {
    fn default() -> Self {
        Self { count: 50, r_min: 0.125, r_max: 0.25, gamma: 2.0, rho: 1.0, seed: 11 }
    }
}

impl CylinderConfig {
    pub fn family(&self) -> CylinderFamily {
        CylinderFamily {
            count: self.count,
            r_min: self.r_min,
            r_max: self.r_max,
            gamma: self.gamma,
            rho: self.rho,
        }
    }
}

/// Exponents as exact decimal or fraction strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExponentsConfig {
    /// Gehring `s`; `2_*` when absent.
    pub s: Option<String>,
    /// Gehring `p` for the exponent table and the mixed-norm conclusion.
    pub p: String,
    /// `p` of the Sobolev-form conclusion and of the Hölder and gradient reports.
    pub conclusion_p: String,
    pub scan: Vec<String>,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        Self {
            s: None,
            p: "2.2".into(),
            conclusion_p: "2.1".into(),
            scan: vec!["2.05".into(), "2.1".into(), "2.2".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver: f64,
    /// Relative weak residual accepted as a verified solution.
    pub residual: f64,
    pub continuity: f64,
    pub consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solver: 1e-8, residual: 1e-6, continuity: 1e-10, consistency: 1e-8 }
    }
}

/// Gårding checks and the extension sweep; cube sizes are fractions of `period_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GardingConfig {
    pub trials: usize,
    pub seed: u64,
    pub exact: bool,
    pub q0_half: f64,
    pub q_half: f64,
    pub sigma_start: f64,
    pub sigma_factor: f64,
    pub steps: usize,
}

impl Default for GardingConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 3,
            exact: true,
            q0_half: 0.375,
            q_half: 0.25,
            sigma_start: 1.0 / 64.0,
            sigma_factor: 2.0,
            steps: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// Write binary field snapshots of the solution and its localization.
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, snapshots: true }
    }
}

/// Parsed exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponents {
    pub s: Rational,
    pub p: Rational,
    pub conclusion_p: Rational,
    pub scan: Vec<Rational>,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Same experiment with `nt = nx = 2^level`.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        if !(2..=14).contains(&level) {
            return Err(bad("grid-level", format!("{level} outside 2..=14")));
        }
        let mut out = self.clone();
        out.grid.nt = 1 << level;
        out.grid.nx = 1 << level;
        out.validate()?;
        Ok(out)
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.n, g.m, g.nt, g.nx, g.period_t, g.period_x).map_err(|e| bad("grid", e))
    }

    pub fn exponents(&self) -> Result<Exponents> {
        let n = self.grid.n;
        let e = &self.exponents;
        let parse = |field: &str, s: &str| exponents::parse(s).map_err(|err| bad(field, err));
        let s = match &e.s {
            Some(s) => parse("exponents.s", s)?,
            None => exponents::two_lower(n),
        };
        let p = parse("exponents.p", &e.p)?;
        let conclusion_p = parse("exponents.conclusion_p", &e.conclusion_p)?;
        let scan = e.scan.iter().map(|x| parse("exponents.scan", x)).collect::<Result<Vec<_>>>()?;
        let upper = exponents::two_upper(n);
        let two = Rational::from_integer(2);
        for (field, q) in std::iter::once(("exponents.conclusion_p", &conclusion_p))
            .chain(scan.iter().map(|q| ("exponents.scan", q)))
        {
            if *q <= two || *q > upper {
                return Err(bad(field, format!("{q} outside (2, {upper}]")));
            }
        }
        if p <= two {
            return Err(bad("exponents.p", format!("{p} must exceed 2")));
        }
        if s <= Rational::from_integer(1) || s >= Rational::from_integer(n as i128 + 2) {
            return Err(bad("exponents.s", format!("{s} outside (1, {})", n + 2)));
        }
        Ok(Exponents { s, p, conclusion_p, scan })
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.build_grid()?;
        if self.grid.n > 2 || self.grid.m > 2 {
            return Err(bad("grid", "n and m must be 1 or 2"));
        }
        let c = &self.coefficients;
        if !(c.lambda > 0.0 && c.contrast >= 1.0 && c.cell_t > 0.0 && c.skew >= 0.0) {
            return Err(bad(
                "coefficients",
                "need lambda > 0, contrast >= 1, cell_t > 0, skew >= 0",
            ));
        }
        if !(c.kappa.is_finite() && c.kappa > -1.0) {
            return Err(bad("coefficients.kappa", "must exceed -1"));
        }
        let d = &self.data;
        if 2 * d.kt_max >= g.nt() || 2 * d.kx_max >= g.nx() {
            return Err(bad("data", "band not resolved by the grid"));
        }
        let k = &self.cutoff;
        let fractions = [k.center_t, k.center_x, k.half_t, k.half_x, k.width_t, k.width_x];
        if fractions.iter().any(|x| !(x.is_finite() && *x >= 0.0 && *x <= 1.0))
            || k.half_t <= 0.0
            || k.half_x <= 0.0
            || k.width_t <= 0.0
            || k.width_x <= 0.0
        {
            return Err(bad("cutoff", "fractions must lie in (0, 1]"));
        }
        let cy = &self.cylinders;
        if cy.count == 0
            || !(cy.r_min > 0.0 && cy.r_max >= cy.r_min && cy.gamma > 1.0 && cy.rho > 0.0)
        {
            return Err(bad("cylinders", "need count > 0, 0 < r_min <= r_max, gamma > 1, rho > 0"));
        }
        let g2 = cy.gamma * cy.gamma;
        if g2 * cy.rho * cy.r_max * cy.r_max > g.period_t()
            || 2.0 * cy.gamma * cy.r_max > g.period_x()
        {
            return Err(bad("cylinders", "gamma-dilate of the largest cylinder wraps the box"));
        }
        if cy.rho * cy.r_min * cy.r_min < g.dt() || cy.r_min < g.dx() {
            return Err(bad("cylinders", "smallest cylinder below grid resolution"));
        }
        self.exponents()?;
        let t = &self.tolerances;
        if [t.solver, t.residual, t.continuity, t.consistency].iter().any(|x| !(*x > 0.0)) {
            return Err(bad("tolerances", "must be positive"));
        }
        let ga = &self.garding;
        if !(0.0 < ga.q_half && ga.q_half < ga.q0_half && ga.q0_half < 0.5) {
            return Err(bad("garding", "need 0 < q_half < q0_half < 1/2"));
        }
        if !(ga.sigma_start > 0.0 && ga.sigma_factor > 1.0 && ga.steps > 0 && ga.trials > 0) {
            return Err(bad(
                "garding",
                "need sigma_start > 0, sigma_factor > 1, steps > 0, trials > 0",
            ));
        }
        Ok(())
    }
}
