//! Static-field protocol: two resonant pulses separated by an adiabatic
//! field rotation, read out on the upper clock state.
//!
//! The probability convention throughout is the population of `|2,0⟩`
//! after starting in `|2,0⟩`; the field is rotated from the major axis
//! toward the minor axis of the drive ellipse by an angle `phi`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;

use crate::dynamics::{evolve, HamiltonianSchedule, IntegratorConfig, StateVector};
use crate::error::{Error, Result};
use crate::hyperfine::{beta, effective_clock_hamiltonian, PolarizationEllipse};

/// Full description of one two-pulse measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcProtocolSpec {
    pub ellipse: PolarizationEllipse,
    pub b_initial: f64,
    pub b_final: f64,
    /// Field rotation angle between the pulses.
    pub phi: f64,
    /// RF phase of the second pulse.
    pub theta2: f64,
    pub pulse1_area: f64,
    pub pulse2_area: f64,
    /// Insert a π pulse (in the initial field direction) between the two
    /// half-transfer pulses.
    pub echo: bool,
}

impl DcProtocolSpec {
    pub fn new(ellipse: PolarizationEllipse, phi: f64, theta2: f64) -> Self {
        Self {
            ellipse,
            b_initial: 1.0,
            b_final: 1.0,
            phi,
            theta2,
            pulse1_area: FRAC_PI_2,
            pulse2_area: FRAC_PI_2,
            echo: false,
        }
    }

    /// Rotation angle produced by a signal `delta` along the minor axis
    /// on top of the final bias `b_final`.
    pub fn from_signal(ellipse: PolarizationEllipse, b_initial: f64, b_final: f64, delta: f64, theta2: f64) -> Self {
        Self {
            b_initial,
            b_final,
            phi: delta.atan2(b_final),
            ..Self::new(ellipse, 0.0, theta2)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.b_initial, self.b_final, self.phi, self.theta2, self.pulse1_area, self.pulse2_area];
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("protocol parameters"));
        }
        if self.pulse1_area < 0.0 || self.pulse2_area < 0.0 {
            return Err(Error::InvalidArgument("pulse areas must be non-negative".into()));
        }
        if self.ellipse.omega1.norm() == 0.0 {
            return Err(Error::InvalidArgument("major axis must be non-zero".into()));
        }
        Ok(())
    }

    fn calibrated(&self) -> bool {
        (self.pulse1_area - FRAC_PI_2).abs() < 1e-12 && (self.pulse2_area - FRAC_PI_2).abs() < 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeResult {
    pub theta_grid: Vec<f64>,
    pub p2_values: Vec<f64>,
    /// Phase of the fringe maximum, in `[0, 2π)`.
    pub theta_f: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedP2 {
    pub value: f64,
    /// Set when `Ω̃ |δ| / B_f > 0.2`.
    pub regime_flag: bool,
}

/// First-order response to a small field `delta` added to `b_final`,
/// for a half-transfer first pulse and second-pulse phase π/2.
pub fn p2_linearized(delta: &Vector3<f64>, b_final: f64, ellipse: &PolarizationEllipse, t2: f64) -> Result<LinearizedP2> {
    if b_final == 0.0 || !b_final.is_finite() {
        return Err(Error::InvalidArgument("b_final must be finite and non-zero".into()));
    }
    let n2 = ellipse.omega2.norm();
    let minor_hat = if n2 > 0.0 { ellipse.omega2 / n2 } else { Vector3::zeros() };
    let ratio = ellipse.ratio();
    let omega_eff = ellipse.omega1.norm();
    let along = delta.dot(&minor_hat) / b_final;
    Ok(LinearizedP2 {
        value: 0.5 + 0.5 * (omega_eff * t2).sin() * ratio * along,
        regime_flag: ratio * delta.norm() / b_final.abs() > 0.2,
    })
}

/// Exact two-pulse probability for calibrated half-transfer pulses:
/// `1/2 − (cosθ cosφ − Ω̃ sinθ sinφ) sin(πβ/2) / (2β)`.
pub fn p2_exact(phi: f64, theta: f64, ratio: f64) -> f64 {
    let b = beta(phi, ratio);
    let a = theta.cos() * phi.cos() - ratio * theta.sin() * phi.sin();
    let s = (FRAC_PI_2 * b).sin();
    // sin(πβ/2)/β -> π/2 as β -> 0
    let s_over_b = if b < 1e-12 { FRAC_PI_2 } else { s / b };
    (0.5 - 0.5 * a * s_over_b).clamp(0.0, 1.0)
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU { 0.0 } else { r }
}

/// Second-pulse phase that extremizes the fringe, `π − sgn(φ) arccos(cosφ/β)`
/// with `sgn(0) = +1`, wrapped to `[0, 2π)`.
///
/// Evaluated as `π − sgn(φ) atan2(Ω̃|sinφ|, cosφ)`, which equals the
/// arccos form wherever it is defined and stays accurate near `φ = 0`.
pub fn fringe_phase(phi: f64, ratio: f64) -> Result<f64> {
    let b = beta(phi, ratio);
    if !(b > 1e-12) {
        return Err(Error::Domain(format!("beta = 0 at phi = {phi}, ratio = {ratio}")));
    }
    if phi.cos().abs() > b * (1.0 + 1e-12) {
        return Err(Error::Domain("|cos(phi)| exceeds beta".into()));
    }
    let sgn = if phi >= 0.0 { 1.0 } else { -1.0 };
    let arc = (ratio * phi.sin().abs()).atan2(phi.cos());
    Ok(wrap_angle(PI - sgn * arc))
}

/// How fringe values are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanMode {
    ClosedForm,
    Simulation(IntegratorConfig),
}

/// Sweeps the second-pulse phase and extracts fringe phase and visibility.
pub fn ramsey_scan(spec: &DcProtocolSpec, theta_grid: &[f64], mode: ScanMode) -> Result<FringeResult> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty phase grid".into()));
    }
    if theta_grid.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "phase grid needs at least 8 points, got {}",
            theta_grid.len()
        )));
    }
    spec.validate()?;
    let ratio = spec.ellipse.ratio();
    let values: Vec<f64> = match mode {
        ScanMode::ClosedForm => {
            if !spec.calibrated() {
                return Err(Error::InvalidArgument(
                    "closed form assumes half-transfer pulses; use simulation".into(),
                ));
            }
            theta_grid.iter().map(|&t| p2_exact(spec.phi, t, ratio)).collect()
        }
        ScanMode::Simulation(cfg) => theta_grid
            .iter()
            .map(|&t| simulate_dc_protocol(&DcProtocolSpec { theta2: t, ..*spec }, &cfg))
            .collect::<Result<_>>()?,
    };
    let (theta_f, visibility) = fringe_from_samples(theta_grid, &values);
    Ok(FringeResult {
        theta_grid: theta_grid.to_vec(),
        p2_values: values,
        theta_f,
        visibility,
    })
}

/// Uniform grid of `n` phases on `[0, 2π)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Argmax with 3-point parabolic refinement. Neighbours wrap around when
/// the grid is a uniform cover of one period.
fn fringe_from_samples(grid: &[f64], values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let (imax, vmax) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let step = grid[1] - grid[0];
    let periodic = ((grid[n - 1] - grid[0] + step) - TAU).abs() < 1e-9 * TAU;
    let neighbours = if periodic {
        Some(((imax + n - 1) % n, (imax + 1) % n))
    } else if imax > 0 && imax + 1 < n {
        Some((imax - 1, imax + 1))
    } else {
        None
    };
    let mut peak = grid[imax];
    if let Some((l, r)) = neighbours {
        let (y0, y1, y2) = (values[l], values[imax], values[r]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom < 0.0 {
            let h = if periodic { step } else { 0.5 * (grid[r] - grid[l]) };
            peak += 0.5 * h * (y0 - y2) / denom;
        }
    }
    (wrap_angle(peak), vmax - vmin)
}

/// Fringe values along the field-rotation axis at fixed second-pulse phase.
pub fn phi_scan(theta: f64, ratio: f64, phi_grid: &[f64]) -> Vec<f64> {
    phi_grid.iter().map(|&p| p2_exact(p, theta, ratio)).collect()
}

fn pulse(state: &StateVector, ellipse: &PolarizationEllipse, b_hat: &Vector3<f64>, area: f64, cfg: &IntegratorConfig) -> Result<StateVector> {
    let params = effective_clock_hamiltonian(ellipse, b_hat, 0.0)?;
    let duration = area / ellipse.omega1.norm();
    let sched = HamiltonianSchedule::constant(params.hamiltonian().into_matrix(), 0.0, duration)?;
    evolve(state, &sched, cfg)
}

/// Integrates the pulse sequence with the rotating-frame clock Hamiltonian
/// and returns the population of `|2,0⟩`.
pub fn simulate_dc_protocol(spec: &DcProtocolSpec, integrator: &IntegratorConfig) -> Result<f64> {
    spec.validate()?;
    let major = spec.ellipse.omega1 / spec.ellipse.omega1.norm();
    let b_final = if spec.ellipse.omega2.norm() > 0.0 {
        spec.ellipse.in_plane_direction(spec.phi)?
    } else if spec.phi == 0.0 {
        major
    } else {
        return Err(Error::Singular("field rotation plane undefined for a linear drive".into()));
    };
    let first = spec.ellipse.with_theta(0.0);
    let mut psi = StateVector::new(
        crate::dynamics::CVector::from_vec(vec![
            crate::dynamics::Complex64::new(1.0, 0.0),
            crate::dynamics::Complex64::new(0.0, 0.0),
        ]),
        vec!["2,0".into(), "1,0".into()],
    )?;
    psi = pulse(&psi, &first, &major, spec.pulse1_area, integrator)?;
    let mut theta2 = spec.theta2;
    if spec.echo {
        psi = pulse(&psi, &first, &major, PI, integrator)?;
        theta2 += PI;
    }
    psi = pulse(&psi, &spec.ellipse.with_theta(theta2), &b_final, spec.pulse2_area, integrator)?;
    Ok(psi.populations()[0])
}
