//! Run configuration. All blocks are optional; missing ones take the
//! defaults below, which give the reference parameter sets.
//!
//! Units: angular frequencies and fields in rad/s (magneton = 1), times in
//! s, angles in rad, everything else dimensionless.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub integrator: IntegratorBlock,
    pub output: OutputBlock,
    pub two_spin: TwoSpinBlock,
    pub rabi_scan: RabiBlock,
    pub dc_ramsey: DcBlock,
    pub ac_filter: AcBlock,
    pub diabatic: DiabaticBlock,
    pub sensitivity: SensitivityBlock,
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    Midpoint,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorBlock {
    /// Steps per period of the fastest frequency in the problem.
    pub steps_per_period: usize,
    pub scheme: SchemeName,
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        Self { steps_per_period: 100, scheme: SchemeName::Midpoint }
    }
}

impl IntegratorBlock {
    pub fn config(&self, step_count: usize) -> clockmag::dynamics::IntegratorConfig {
        let scheme = match self.scheme {
            SchemeName::Midpoint => clockmag::dynamics::Scheme::MidpointExponential,
            SchemeName::Rk4 => clockmag::dynamics::Scheme::RungeKutta4,
        };
        clockmag::dynamics::IntegratorConfig { step_count: step_count.max(1), scheme, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoSpinBlock {
    /// Field-to-drive angles (rad).
    pub chi: Vec<f64>,
    pub phi_points: usize,
}

impl Default for TwoSpinBlock {
    fn default() -> Self {
        Self { chi: vec![0.0, PI / 6.0, PI / 3.0], phi_points: 61 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiBlock {
    pub ratio: f64,
    pub phi_points: usize,
    /// Largest pulse area Ω₁T (rad).
    pub area_max: f64,
    pub area_points: usize,
}

impl Default for RabiBlock {
    fn default() -> Self {
        Self { ratio: 0.27, phi_points: 41, area_max: 40.0, area_points: 401 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcBlock {
    pub ratio: f64,
    /// Field rotation angles of the fringe scans (rad).
    pub phi: Vec<f64>,
    pub theta_points: usize,
    /// Integrate the pulse sequence instead of using the closed form.
    pub simulate: bool,
    /// Ratios for the fringe-phase curves.
    pub ratios: Vec<f64>,
    pub phi_points: usize,
}

impl Default for DcBlock {
    fn default() -> Self {
        Self {
            ratio: 0.27,
            phi: vec![-0.6, -0.3, 0.0, 0.3, 0.6],
            theta_points: 128,
            simulate: false,
            ratios: vec![0.01, 0.27, 1.0, 3.0],
            phi_points: 181,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcBlock {
    /// Signal amplitude as a field-rotation angle (rad).
    pub phi0: f64,
    pub n: u32,
    pub ratio: f64,
    /// Modulation frequency (rad/s).
    pub omega_m: f64,
    /// Major-axis drive (rad/s); `None` picks `(ω_m/n)/(3φ₀Ω̃)`.
    pub omega1: Option<f64>,
    pub omega0_min: f64,
    pub omega0_max: f64,
    pub points: usize,
    pub simulate: bool,
}

impl Default for AcBlock {
    fn default() -> Self {
        Self { phi0: 0.005, n: 20, ratio: 3.0, omega_m: 1.0, omega1: None, omega0_min: 0.5, omega0_max: 1.5, points: 101, simulate: true }
    }
}

impl AcBlock {
    pub fn drive(&self) -> clockmag::ac::AcDriveSpec {
        let mut d = clockmag::ac::AcDriveSpec::small_rotation(self.phi0, self.ratio, self.omega_m, self.n);
        if let Some(w) = self.omega1 {
            d.omega1 = w;
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default)]
    pub min: f64,
    #[serde(default)]
    pub max: f64,
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub log: bool,
    /// Explicit values; overrides `min`/`max`/`count`.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn range(name: &str, min: f64, max: f64, count: usize, log: bool) -> Self {
        Self { name: name.into(), min, max, count, log, values: None }
    }

    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            n if self.log => clockmag::sensitivity::log_grid(self.min, self.max, n),
            n => (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiabaticBlock {
    /// Fields in units of δ.
    pub b_initial: f64,
    pub b_final: f64,
    /// Ramp times in units of 1/δ.
    pub ramp_time: Axis,
    pub bi_over_bf: Axis,
    pub bf_over_delta: Axis,
    pub plane_ramp_time: f64,
}

impl Default for DiabaticBlock {
    fn default() -> Self {
        Self {
            b_initial: 500.0,
            b_final: 5.0,
            ramp_time: Axis::range("ramp_time", 0.01, 10.0, 31, true),
            bi_over_bf: Axis::range("bi_over_bf", 10.0, 200.0, 10, true),
            bf_over_delta: Axis::range("bf_over_delta", 2.0, 50.0, 10, true),
            plane_ramp_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityBlock {
    pub n: u64,
    pub b_tilde: Axis,
    pub omega_ratio: Axis,
    pub t_max: f64,
    pub mask_threshold: f64,
    /// Bookkeeping for `N = density·volume·t_total/τ_clk`.
    pub density: Option<f64>,
    pub volume: Option<f64>,
    pub t_total: Option<f64>,
}

impl Default for SensitivityBlock {
    fn default() -> Self {
        Self {
            n: 1,
            b_tilde: Axis::range("b_tilde", 1.0, 100.0, 40, true),
            omega_ratio: Axis::range("omega_ratio", 0.1, 100.0, 40, true),
            t_max: 0.9,
            mask_threshold: 0.5,
            density: None,
            volume: None,
            t_total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub operation: String,
    /// Outermost first; rows are in lexicographic order over the axes.
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical form: the fully defaulted config as compact JSON with
    /// fields in declaration order.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
