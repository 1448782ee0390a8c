//! Oscillating-signal protocol: after a half-transfer pulse the drive
//! stays on with amplitude `Ω₁ cos(ω_m t)` and phase π/2, so a field
//! rotation `φ(t) = φ₀ cos(ω₀ t + α)` tilts the drive axis and is
//! integrated against the modulation.
//!
//! Two families of formulas live here. `filter_response`,
//! `filter_weight`, `first_order_unitary` and the analytic unlocked
//! filter share the linear-filter normalization. `model_first_order`
//! is the first-order result of the model Hamiltonian that
//! `simulate_ac` integrates; for a weak drive its deviation from 1/2 is a
//! quarter of the linear filter's in the linear regime.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{evolve, pauli_x, CMatrix, CVector, HamiltonianSchedule, IntegratorConfig, StateVector};
use crate::error::{Error, Result};
use crate::hyperfine::beta;

const RESONANCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalPhase {
    Locked(f64),
    /// Uniform on `[0, 2π)`, drawn per repetition from a seeded stream.
    Random,
}

/// Single-tone field rotation `φ₀ cos(ω₀ t + α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcSignal {
    pub phi0: f64,
    pub omega0: f64,
    pub phase: SignalPhase,
}

impl AcSignal {
    pub fn locked(phi0: f64, omega0: f64) -> Self {
        Self { phi0, omega0, phase: SignalPhase::Locked(0.0) }
    }

    fn validate(&self) -> Result<()> {
        if !self.phi0.is_finite() || !self.omega0.is_finite() {
            return Err(Error::NonFinite("signal parameters"));
        }
        if self.phi0 < 0.0 {
            return Err(Error::InvalidArgument("phi0 must be non-negative".into()));
        }
        Ok(())
    }

    fn locked_phase(&self) -> Result<f64> {
        match self.phase {
            SignalPhase::Locked(a) => Ok(a),
            SignalPhase::Random => Err(Error::InvalidArgument(
                "a locked signal phase is required here".into(),
            )),
        }
    }
}

/// Modulated drive with major-axis amplitude `omega1` and minor/major
/// ratio `ratio`, read out after `n` modulation periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcDriveSpec {
    pub omega1: f64,
    pub ratio: f64,
    pub omega_m: f64,
    pub n: u32,
}

impl AcDriveSpec {
    pub fn omega2(&self) -> f64 {
        self.ratio * self.omega1
    }

    /// Drive strength that keeps the model's resonant rotation at
    /// a fixed size: `Ω₁ = (ω_m/n) / (3 φ₀ Ω̃)`.
    pub fn small_rotation(phi0: f64, ratio: f64, omega_m: f64, n: u32) -> Self {
        Self {
            omega1: omega_m / n as f64 / (3.0 * phi0 * ratio),
            ratio,
            omega_m,
            n,
        }
    }

    pub fn readout_time(&self) -> f64 {
        TAU * self.n as f64 / self.omega_m
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(self.omega_m > 0.0) || !self.omega_m.is_finite() {
            return Err(Error::InvalidArgument("omega_m must be positive".into()));
        }
        if !self.omega1.is_finite() || !self.ratio.is_finite() || self.ratio < 0.0 {
            return Err(Error::InvalidArgument("drive amplitude and ratio must be finite, ratio >= 0".into()));
        }
        Ok(())
    }
}

/// Spectral weight `(2ωω_m/(ω²−ω_m²))(sin(α + 2πnω/ω_m) − sin α)` with the
/// resonant limit `2πn cos α` when `|ω − ω_m| < 1e-6 ω_m`.
pub fn filter_weight(omega: f64, alpha: f64, n: u32, omega_m: f64) -> f64 {
    let nn = n as f64;
    if (omega - omega_m).abs() < RESONANCE_EPS * omega_m {
        return TAU * nn * alpha.cos();
    }
    let x = TAU * nn * omega / omega_m;
    2.0 * omega * omega_m / (omega * omega - omega_m * omega_m) * ((alpha + x).sin() - alpha.sin())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResponse {
    pub value: f64,
    /// Set when `2π n φ₀ Ω₂ / ω_m > 0.5`.
    pub regime_flag: bool,
    /// Size of the `τᶻ` term at second order in the Magnus expansion of
    /// the linearized model; zero on resonance.
    pub second_order: f64,
}

/// Linear locked filter `1/2 + φ₀ (Ω₂/ω_m) F(ω₀)`, which at `α = 0` is
/// `1/2 + 2φ₀Ω₂ω₀ sin(2πnω₀/ω_m)/(ω₀² − ω_m²)`.
pub fn filter_response(signal: &AcSignal, drive: &AcDriveSpec) -> Result<FilterResponse> {
    signal.validate()?;
    drive.validate()?;
    let alpha = signal.locked_phase()?;
    let w = filter_weight(signal.omega0, alpha, drive.n, drive.omega_m);
    let linear_bound = TAU * drive.n as f64 * signal.phi0 * drive.omega2() / drive.omega_m;
    Ok(FilterResponse {
        value: 0.5 + signal.phi0 * drive.omega2() / drive.omega_m * w,
        regime_flag: linear_bound > 0.5,
        second_order: second_order_magnitude(signal, drive, alpha),
    })
}

/// `∫∫ (a(t₁)b(t₂) − b(t₁)a(t₂))` over the ordered triangle for the
/// linearized coefficients `a = Ω₁cos(ω_m t)/2`, `b = −Ω₂φ(t)cos(ω_m t)/2`.
fn second_order_magnitude(signal: &AcSignal, drive: &AcDriveSpec, alpha: f64) -> f64 {
    if (signal.omega0 - drive.omega_m).abs() < RESONANCE_EPS * drive.omega_m {
        return 0.0;
    }
    let t_end = drive.readout_time();
    let per_period = 256usize;
    let fastest = signal.omega0.abs().max(drive.omega_m);
    let steps = ((fastest * t_end / TAU).ceil() as usize * per_period).max(per_period);
    let dt = t_end / steps as f64;
    let a = |t: f64| 0.5 * drive.omega1 * (drive.omega_m * t).cos();
    let b = |t: f64| -0.5 * drive.omega2() * signal.phi0 * (signal.omega0 * t + alpha).cos() * (drive.omega_m * t).cos();
    let (mut ia, mut ib, mut acc) = (0.0, 0.0, 0.0);
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let tm = t0 + 0.5 * dt;
        let (am, bm) = (a(tm), b(tm));
        let ia_mid = ia + 0.5 * dt * am;
        let ib_mid = ib + 0.5 * dt * bm;
        acc += dt * (am * ib_mid - bm * ia_mid);
        ia += dt * am;
        ib += dt * bm;
    }
    acc.abs()
}

/// `exp(i (Ω₂/ω_m) φ₀ F(ω₀) τˣ)` for a single tone.
pub fn first_order_unitary(signal: &AcSignal, drive: &AcDriveSpec) -> Result<CMatrix> {
    signal.validate()?;
    drive.validate()?;
    let alpha = signal.locked_phase()?;
    let angle = drive.omega2() / drive.omega_m * signal.phi0 * filter_weight(signal.omega0, alpha, drive.n, drive.omega_m);
    let (s, c) = angle.sin_cos();
    Ok(CMatrix::identity(2, 2) * Complex64::new(c, 0.0) + pauli_x() * Complex64::new(0.0, s))
}

/// First-order population of the model Hamiltonian at the readout time,
/// linear in `φ` but exact in the drive: in the interaction picture of the
/// `τʸ` drive the signal term picks up a factor `cos((Ω₁/ω_m) sin(ω_m t))`,
/// so the Bloch angle is
/// `Ω₂ ∫₀ᵗ φ(t′) cos(ω_m t′) cos((Ω₁/ω_m) sin(ω_m t′)) dt′`
/// and `P₂ = 1/2 + ½ sin(angle)`.
pub fn model_first_order(signal: &AcSignal, drive: &AcDriveSpec) -> Result<f64> {
    signal.validate()?;
    drive.validate()?;
    let alpha = signal.locked_phase()?;
    let t_end = drive.readout_time();
    let kappa = drive.omega1 / drive.omega_m;
    let fastest = signal.omega0.abs().max(drive.omega_m) * (1.0 + kappa);
    let intervals = 2 * ((fastest * t_end / TAU).ceil() as usize * 64).max(64);
    let h = t_end / intervals as f64;
    let f = |t: f64| {
        let wt = drive.omega_m * t;
        (signal.omega0 * t + alpha).cos() * wt.cos() * (kappa * wt.sin()).cos()
    };
    let mut acc = f(0.0) + f(t_end);
    for k in 1..intervals {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    let angle = drive.omega2() * signal.phi0 * acc * h / 3.0;
    Ok(0.5 + 0.5 * angle.sin())
}

/// Weak-drive limit of `model_first_order` (`Ω₁ ≪ ω_m`), in closed form:
/// the Bloch angle is `(Ω₂ φ₀ / 2ω_m) F(ω₀)`, a quarter of the linear
/// filter's deviation, before the sine.
pub fn model_first_order_weak_drive(signal: &AcSignal, drive: &AcDriveSpec) -> Result<f64> {
    signal.validate()?;
    drive.validate()?;
    let alpha = signal.locked_phase()?;
    let angle = 0.5 * drive.omega2() / drive.omega_m * signal.phi0 * filter_weight(signal.omega0, alpha, drive.n, drive.omega_m);
    Ok(0.5 + 0.5 * angle.sin())
}

/// Input for the phase-averaged (unlocked) filter.
#[derive(Debug, Clone, Copy)]
pub enum SpectrometerInput<'a> {
    Analytic,
    /// Probabilities from independent repetitions.
    Measured(&'a [f64]),
    /// Draw `count` uniform phases from a seeded stream and evaluate the
    /// linear locked filter at each.
    Sampled { count: usize, seed: u64 },
}

/// RMS deviation `√(mean (pᵢ − 1/2)²)`; analytic limit
/// `2√2 φ₀ |Ω₂ ω₀ sin(πnω₀/ω_m) / (ω₀² − ω_m²)|`.
pub fn unlocked_spectrometer(input: SpectrometerInput<'_>, drive: &AcDriveSpec, signal: &AcSignal) -> Result<f64> {
    drive.validate()?;
    signal.validate()?;
    let rms = |ps: &mut dyn Iterator<Item = f64>, n: usize| -> Result<f64> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 repetitions, got {n}")));
        }
        Ok((ps.map(|p| (p - 0.5).powi(2)).sum::<f64>() / n as f64).sqrt())
    };
    match input {
        SpectrometerInput::Analytic => Ok(unlocked_analytic(signal.phi0, signal.omega0, drive)),
        SpectrometerInput::Measured(ps) => rms(&mut ps.iter().copied(), ps.len()),
        SpectrometerInput::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = signal.phi0 * drive.omega2() / drive.omega_m;
            let mut it = (0..count).map(|_| {
                let alpha = rng.random_range(0.0..TAU);
                0.5 + scale * filter_weight(signal.omega0, alpha, drive.n, drive.omega_m)
            });
            rms(&mut it, count)
        }
    }
}

fn unlocked_analytic(phi0: f64, omega: f64, drive: &AcDriveSpec) -> f64 {
    let nn = drive.n as f64;
    let wm = drive.omega_m;
    if (omega.abs() - wm).abs() < RESONANCE_EPS * wm {
        return SQRT_2 * PI * nn * drive.omega2() / wm * phi0;
    }
    2.0 * SQRT_2 * phi0 * (drive.omega2() * omega * (PI * nn * omega / wm).sin() / (omega * omega - wm * wm)).abs()
}

/// Time-resolved output of the modulated-drive simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct AcTrace {
    pub times: Vec<f64>,
    pub p2: Vec<f64>,
}

fn initial_state() -> Result<StateVector> {
    // half-transfer pulse about τˣ from |2,0⟩
    let (s, c) = FRAC_PI_4.sin_cos();
    StateVector::new(
        CVector::from_vec(vec![Complex64::new(c, 0.0), Complex64::new(0.0, -s)]),
        vec!["2,0".into(), "1,0".into()],
    )
}

/// Integrates the modulated clock Hamiltonian, exact in `φ`:
/// `(Ω₁ cos(ω_m t)/2) β(φ) (cos ξ τˣ + sin ξ τʸ)` with
/// `ξ = π/2 + atan2(Ω̃ sin φ, cos φ)`. `integrator.step_count` is the
/// number of steps per modulation period, and `samples_per_period`
/// readouts are taken in each period (1 gives the stroboscopic trace).
pub fn simulate_ac_trace(
    signal: &AcSignal,
    drive: &AcDriveSpec,
    integrator: &IntegratorConfig,
    samples_per_period: usize,
) -> Result<AcTrace> {
    signal.validate()?;
    drive.validate()?;
    let alpha = signal.locked_phase()?;
    if samples_per_period == 0 || !integrator.step_count.is_multiple_of(samples_per_period) {
        return Err(Error::InvalidArgument(
            "step_count must be a positive multiple of samples_per_period".into(),
        ));
    }
    let period = TAU / drive.omega_m;
    let beta_max = beta(signal.phi0.min(FRAC_PI_2), drive.ratio).max(1.0);
    let fastest = signal.omega0.abs().max(drive.omega_m).max(drive.omega1.abs() * beta_max);
    let resolved = integrator.step_count as f64 * drive.omega_m / fastest;
    if resolved < 50.0 {
        return Err(Error::Convergence(format!(
            "{resolved:.1} steps per fastest period; at least 50 needed (step_count >= {})",
            (50.0 * fastest / drive.omega_m).ceil()
        )));
    }
    let h = |t: f64| {
        let phi = signal.phi0 * (signal.omega0 * t + alpha).cos();
        let amp = 0.5 * drive.omega1 * (drive.omega_m * t).cos() * beta(phi, drive.ratio);
        let xi = FRAC_PI_2 + (drive.ratio * phi.sin()).atan2(phi.cos());
        let off = Complex64::new(xi.cos(), -xi.sin()) * amp;
        CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), off, off.conj(), Complex64::new(0.0, 0.0)])
    };
    let cfg = IntegratorConfig { step_count: integrator.step_count / samples_per_period, ..*integrator };
    let mut psi = initial_state()?;
    let mut times = Vec::new();
    let mut p2 = Vec::new();
    let total = drive.n as usize * samples_per_period;
    for k in 0..total {
        let t0 = period * k as f64 / samples_per_period as f64;
        let t1 = period * (k + 1) as f64 / samples_per_period as f64;
        let sched = HamiltonianSchedule::new(2, t0, t1, &h)?;
        psi = evolve(&psi, &sched, &cfg)?;
        times.push(t1);
        p2.push(psi.populations()[0]);
    }
    Ok(AcTrace { times, p2 })
}

/// Stroboscopic trace `P₂(2πk/ω_m)` for `k = 1..=n`.
pub fn simulate_ac(signal: &AcSignal, drive: &AcDriveSpec, integrator: &IntegratorConfig) -> Result<Vec<f64>> {
    Ok(simulate_ac_trace(signal, drive, integrator, 1)?.p2)
}
