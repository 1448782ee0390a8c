//! Transitions out of a clock state while the bias field is ramped down
//! in the presence of a small transverse signal.
//!
//! Units: the magneton is 1, so fields are angular frequencies and the
//! natural time unit is `1/delta`.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{evolve, pauli_x, pauli_z, identity, CMatrix, CVector, HamiltonianSchedule, HermitianOperator, IntegratorConfig, StateVector};
use crate::error::{Error, Result};

#[derive(Clone)]
pub enum RampProfile {
    LinearB,
    LinearGamma,
    /// Field magnitude as a function of time on `[0, T]`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RampProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LinearB => write!(f, "LinearB"),
            Self::LinearGamma => write!(f, "LinearGamma"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RampSpec {
    pub b_initial: f64,
    pub b_final: f64,
    pub delta: f64,
    pub duration: f64,
    pub profile: RampProfile,
}

impl RampSpec {
    pub fn new(b_initial: f64, b_final: f64, delta: f64, duration: f64, profile: RampProfile) -> Result<Self> {
        let r = Self { b_initial, b_final, delta, duration, profile };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.b_initial, self.b_final, self.delta, self.duration].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("ramp parameters"));
        }
        if !(self.b_initial > self.b_final && self.b_final > 0.0) {
            return Err(Error::InvalidArgument("need b_initial > b_final > 0".into()));
        }
        if self.delta < 0.0 || self.duration < 0.0 {
            return Err(Error::InvalidArgument("delta and duration must be non-negative".into()));
        }
        Ok(())
    }

    pub fn gamma_initial(&self) -> f64 {
        InstantaneousFrame::at(self.b_initial, self.delta).gamma
    }

    pub fn gamma_final(&self) -> f64 {
        InstantaneousFrame::at(self.b_final, self.delta).gamma
    }

    /// Field magnitude at time `t`.
    pub fn field_at(&self, t: f64) -> f64 {
        let s = if self.duration > 0.0 { (t / self.duration).clamp(0.0, 1.0) } else { 1.0 };
        match &self.profile {
            RampProfile::LinearB => self.b_initial + (self.b_final - self.b_initial) * s,
            RampProfile::LinearGamma => {
                let g = self.gamma_initial() + (self.gamma_final() - self.gamma_initial()) * s;
                field_from_gamma(g, self.delta)
            }
            RampProfile::Custom(f) => f(t),
        }
    }
}

fn field_from_gamma(gamma: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    2.0 * delta / (2.0 * gamma).tan()
}

/// Mixing angle and gap of `lzs_hamiltonian(b, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantaneousFrame {
    /// `tan 2γ = 2δ/B`, in `[0, π/4]` for `B ≥ 0`.
    pub gamma: f64,
    pub delta_e: f64,
}

impl InstantaneousFrame {
    pub fn at(b: f64, delta: f64) -> Self {
        Self {
            gamma: 0.5 * (2.0 * delta).atan2(b),
            delta_e: b.hypot(2.0 * delta),
        }
    }

    /// Upper eigenvector `(cos γ, sin γ)`.
    pub fn upper(&self) -> CVector {
        CVector::from_vec(vec![Complex64::new(self.gamma.cos(), 0.0), Complex64::new(self.gamma.sin(), 0.0)])
    }

    /// Lower eigenvector `(−sin γ, cos γ)`.
    pub fn lower(&self) -> CVector {
        CVector::from_vec(vec![Complex64::new(-self.gamma.sin(), 0.0), Complex64::new(self.gamma.cos(), 0.0)])
    }
}

fn lzs_matrix(b: f64, delta: f64) -> CMatrix {
    (pauli_z() + identity(2)) * Complex64::new(0.5 * b, 0.0) + pauli_x() * Complex64::new(delta, 0.0)
}

/// `(B/2)(σᶻ + 1) + δσˣ`.
pub fn lzs_hamiltonian(b: f64, delta: f64) -> Result<HermitianOperator> {
    HermitianOperator::new(lzs_matrix(b, delta))
}

/// `B(t) = 2δ / tan(2γ(t))` with `γ` linear between its endpoint values.
pub fn gamma_linear_schedule(ramp: &RampSpec) -> Result<impl Fn(f64) -> f64 + Send + Sync + 'static> {
    ramp.validate()?;
    if !(ramp.duration > 0.0) {
        return Err(Error::InvalidArgument("linear-gamma schedule needs a positive duration".into()));
    }
    let (gi, gf, d, t_end) = (ramp.gamma_initial(), ramp.gamma_final(), ramp.delta, ramp.duration);
    let (bi, bf) = (ramp.b_initial, ramp.b_final);
    Ok(move |t: f64| {
        if t <= 0.0 {
            return bi;
        }
        if t >= t_end {
            return bf;
        }
        field_from_gamma(gi + (gf - gi) * t / t_end, d)
    })
}

/// How the accumulated phase `ξ = ∫ΔE dt` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseModel {
    /// `ΔE = 2δ / sin 2γ`.
    Exact,
    /// `ΔE ≈ δ/γ`, the form behind the closed-form estimate.
    SmallAngle,
}

fn simpson_weights(intervals: usize, k: usize) -> f64 {
    if k == 0 || k == intervals {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Squared first-order Dyson amplitude `|∫ γ̇ e^{iξ} dt|²`.
///
/// For the linear-γ profile the integral is taken over `u = ln γ`
/// (small-angle) or `u = ln tan γ` (exact), where the integrand is a
/// smooth exponential. Other profiles use a time-domain quadrature.
pub fn epsilon_d_dyson(ramp: &RampSpec, quad_points: usize, phase: PhaseModel) -> Result<f64> {
    ramp.validate()?;
    if quad_points < 64 {
        return Err(Error::InvalidArgument("quad_points must be >= 64".into()));
    }
    if ramp.delta == 0.0 {
        return Ok(0.0);
    }
    let intervals = quad_points + quad_points % 2;
    let (gi, gf) = (ramp.gamma_initial(), ramp.gamma_final());
    if ramp.duration == 0.0 {
        return Ok((gf - gi).powi(2));
    }
    let amp = match ramp.profile {
        RampProfile::LinearGamma => {
            let k = ramp.delta * ramp.duration / (gf - gi);
            let (ui, uf) = match phase {
                PhaseModel::SmallAngle => (gi.ln(), gf.ln()),
                PhaseModel::Exact => (gi.tan().ln(), gf.tan().ln()),
            };
            let h = (uf - ui) / intervals as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=intervals {
                let u = ui + j as f64 * h;
                let dgamma_du = match phase {
                    PhaseModel::SmallAngle => u.exp(),
                    PhaseModel::Exact => u.exp() / (1.0 + (2.0 * u).exp()),
                };
                acc += Complex64::from_polar(dgamma_du, k * (u - ui)) * simpson_weights(intervals, j);
            }
            acc * (h / 3.0)
        }
        _ => time_domain_amplitude(ramp, intervals, phase)?,
    };
    Ok(amp.norm_sqr())
}

fn time_domain_amplitude(ramp: &RampSpec, intervals: usize, phase: PhaseModel) -> Result<Complex64> {
    let t_end = ramp.duration;
    let h = t_end / intervals as f64;
    let d = ramp.delta;
    let gap = |t: f64| {
        let fr = InstantaneousFrame::at(ramp.field_at(t), d);
        match phase {
            PhaseModel::Exact => fr.delta_e,
            PhaseModel::SmallAngle => d / fr.gamma,
        }
    };
    let fd = 1e-6 * t_end;
    let gamma_dot = |t: f64| {
        let (a, b) = ((t - fd).max(0.0), (t + fd).min(t_end));
        (InstantaneousFrame::at(ramp.field_at(b), d).gamma - InstantaneousFrame::at(ramp.field_at(a), d).gamma) / (b - a)
    };
    let mut xi = 0.0;
    let mut last_gamma = ramp.gamma_initial();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=intervals {
        let t = j as f64 * h;
        if j > 0 {
            let t0 = t - h;
            xi += h / 6.0 * (gap(t0) + 4.0 * gap(t0 + 0.5 * h) + gap(t));
            let g = InstantaneousFrame::at(ramp.field_at(t), d).gamma;
            if g < last_gamma - 1e-12 {
                return Err(Error::Domain("mixing angle is not monotone along the ramp".into()));
            }
            last_gamma = g;
        }
        acc += Complex64::from_polar(gamma_dot(t), xi) * simpson_weights(intervals, j);
    }
    Ok(acc * (h / 3.0))
}

/// Closed-form linear-γ estimate and the bound used in the sensitivity
/// analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGammaEstimate {
    pub closed_form: f64,
    /// `(δ/B_f)² / (1 + ½(B_f T)²)`.
    pub bound: f64,
}

pub fn epsilon_d_linear_gamma(ramp: &RampSpec) -> Result<LinearGammaEstimate> {
    ramp.validate()?;
    let (gi, gf) = (ramp.gamma_initial(), ramp.gamma_final());
    let closed_form = if ramp.delta == 0.0 {
        0.0
    } else {
        let k = ramp.delta * ramp.duration / (gf - gi);
        (gf * gf + gi * gi - 2.0 * gf * gi * (k * (gi / gf).ln()).cos()) / (1.0 + k * k)
    };
    Ok(LinearGammaEstimate {
        closed_form,
        bound: diabatic_bound(ramp.b_final, ramp.delta, ramp.duration),
    })
}

pub fn diabatic_bound(b_final: f64, delta: f64, duration: f64) -> f64 {
    (delta / b_final).powi(2) / (1.0 + 0.5 * (b_final * duration).powi(2))
}

/// Shortest ramp whose bound does not exceed `eps`.
pub fn ramp_time_for_bound(b_final: f64, delta: f64, eps: f64) -> f64 {
    let r = (delta / b_final).powi(2) / eps - 1.0;
    if r <= 0.0 {
        0.0
    } else {
        (2.0 * r).sqrt() / b_final
    }
}

/// Integrates the lab Hamiltonian from the lower eigenstate at `B_i` and
/// returns the population of the upper eigenstate at `B_f`.
///
/// `integrator.step_count` must resolve the largest gap with at least 50
/// steps per period.
pub fn simulate_ramp(ramp: &RampSpec, integrator: &IntegratorConfig) -> Result<f64> {
    ramp.validate()?;
    let start = InstantaneousFrame::at(ramp.b_initial, ramp.delta);
    let end = InstantaneousFrame::at(ramp.b_final, ramp.delta);
    let psi0 = StateVector::new(start.lower(), vec!["up".into(), "down".into()])?;
    if ramp.duration == 0.0 {
        return Ok(psi0.overlap_probability(&end.upper()));
    }
    let gap_max = start.delta_e.max(end.delta_e);
    let needed = 50.0 * gap_max * ramp.duration / TAU;
    if (integrator.step_count as f64) < needed {
        return Err(Error::Convergence(format!(
            "{} steps cannot resolve the ramp; at least {} needed",
            integrator.step_count,
            needed.ceil()
        )));
    }
    let sched = HamiltonianSchedule::new(2, 0.0, ramp.duration, |t| lzs_matrix(ramp.field_at(t), ramp.delta))?;
    let out = evolve(&psi0, &sched, integrator)?;
    Ok(out.overlap_probability(&end.upper()))
}

/// Default step budget for `simulate_ramp`: `steps_per_period` per period
/// of the initial gap, at least 2000.
pub fn ramp_integrator(ramp: &RampSpec, steps_per_period: usize) -> IntegratorConfig {
    let gap = InstantaneousFrame::at(ramp.b_initial, ramp.delta).delta_e;
    IntegratorConfig::resolving(gap, ramp.duration, steps_per_period, 2000)
}

/// One cell of the `(B_i/B_f, B_f/δ)` plane at fixed ramp time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub bi_over_bf: f64,
    pub bf_over_delta: f64,
    pub simulated: f64,
    pub bound: f64,
    pub closed_form: f64,
}

/// Linear-γ ramps with `δ = 1` and duration `duration` (in units of `1/δ`)
/// over the Cartesian grid, row-major in `bi_over_bf`.
pub fn scan_plane(bi_over_bf: &[f64], bf_over_delta: &[f64], duration: f64, steps_per_period: usize) -> Result<Vec<PlanePoint>> {
    let cells: Vec<(f64, f64)> = bi_over_bf
        .iter()
        .flat_map(|&a| bf_over_delta.iter().map(move |&b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(a, b)| {
            let ramp = RampSpec::new(a * b, b, 1.0, duration, RampProfile::LinearGamma)?;
            let sim = simulate_ramp(&ramp, &ramp_integrator(&ramp, steps_per_period))?;
            let est = epsilon_d_linear_gamma(&ramp)?;
            Ok(PlanePoint {
                bi_over_bf: a,
                bf_over_delta: b,
                simulated: sim,
                bound: est.bound,
                closed_form: est.closed_form,
            })
        })
        .collect()
}

/// `γ` range covered by a physical ramp.
pub const GAMMA_MAX: f64 = FRAC_PI_4;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(bi: f64, bf: f64, t: f64, profile: RampProfile) -> RampSpec {
        RampSpec::new(bi, bf, 1.0, t, profile).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let h = lzs_hamiltonian(3.0, 0.0).unwrap();
        assert!((h.matrix()[(0, 0)].re - 3.0).abs() < 1e-15 && h.matrix()[(1, 1)].norm() < 1e-15);
        let ev = lzs_hamiltonian(0.0, 0.7).unwrap().eigenvalues();
        assert!((ev[0] + 0.7).abs() < 1e-14 && (ev[1] - 0.7).abs() < 1e-14);
        assert!((InstantaneousFrame::at(0.0, 0.7).gamma - GAMMA_MAX).abs() < 1e-15);
        let (b, d) = (2.3, 0.4);
        let ev = lzs_hamiltonian(b, d).unwrap().eigenvalues();
        let r = ((b / 2.0f64).powi(2) + d * d).sqrt();
        assert!((ev[0] - (b / 2.0 - r)).abs() < 1e-14 && (ev[1] - (b / 2.0 + r)).abs() < 1e-14);
        let fr = InstantaneousFrame::at(b, d);
        let h = lzs_hamiltonian(b, d).unwrap();
        assert!((h.matrix() * fr.upper() - fr.upper() * Complex64::new(ev[1], 0.0)).norm() < 1e-14);
        assert!((h.matrix() * fr.lower() - fr.lower() * Complex64::new(ev[0], 0.0)).norm() < 1e-14);
        assert!((fr.delta_e - (ev[1] - ev[0])).abs() < 1e-14);
    }

    #[test]
    fn schedule_endpoints_and_linearity() {
        let r = ramp(500.0, 5.0, 2.0, RampProfile::LinearGamma);
        let f = gamma_linear_schedule(&r).unwrap();
        assert_eq!(f(0.0), 500.0);
        assert_eq!(f(2.0), 5.0);
        let (gi, gf) = (r.gamma_initial(), r.gamma_final());
        for k in 1..10 {
            let t = 0.2 * k as f64;
            let g = InstantaneousFrame::at(f(t), 1.0).gamma;
            assert!((g - (gi + (gf - gi) * t / 2.0)).abs() < 1e-12);
            assert!((f(t) - r.field_at(t)).abs() < 1e-9 * f(t));
        }
        assert!(f(1.0) < 0.5 * (500.0 + 5.0));
        assert!(gamma_linear_schedule(&ramp(500.0, 5.0, 0.0, RampProfile::LinearGamma)).is_err());
    }

    #[test]
    fn closed_form_equals_small_angle_dyson() {
        for &(bi, bf, t) in &[(500.0, 5.0, 1.0), (20.0, 2.0, 1.0), (10000.0, 50.0, 1.0), (100.0, 10.0, 7.0)] {
            let r = ramp(bi, bf, t, RampProfile::LinearGamma);
            let dy = epsilon_d_dyson(&r, 200_000, PhaseModel::SmallAngle).unwrap();
            let cf = epsilon_d_linear_gamma(&r).unwrap().closed_form;
            assert!((dy - cf).abs() < 1e-8, "{bi} {bf}: {dy} vs {cf}");
        }
    }

    #[test]
    fn time_domain_agrees_with_gamma_domain() {
        let r = ramp(200.0, 4.0, 1.5, RampProfile::LinearGamma);
        let f = gamma_linear_schedule(&r).unwrap();
        let custom = RampSpec { profile: RampProfile::Custom(Arc::new(f)), ..r.clone() };
        let a = epsilon_d_dyson(&r, 4000, PhaseModel::Exact).unwrap();
        let b = epsilon_d_dyson(&custom, 400_000, PhaseModel::Exact).unwrap();
        assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
    }

    #[test]
    fn bound_examples() {
        let r = ramp(500.0, 5.0, 0.0, RampProfile::LinearGamma);
        assert!((epsilon_d_linear_gamma(&r).unwrap().bound - 0.04).abs() < 1e-15);
        let t = ramp_time_for_bound(5.0, 1.0, 0.01);
        assert!(t < 1.0 && t > 0.0);
        assert!((diabatic_bound(5.0, 1.0, t) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn zero_signal() {
        let r = RampSpec::new(50.0, 5.0, 0.0, 1.0, RampProfile::LinearB).unwrap();
        assert_eq!(epsilon_d_dyson(&r, 64, PhaseModel::Exact).unwrap(), 0.0);
        let sim = simulate_ramp(&r, &IntegratorConfig::with_steps(20000)).unwrap();
        assert!(sim < 1e-10);
    }

    #[test]
    fn abrupt_ramp_is_basis_mismatch() {
        let r = ramp(300.0, 3.0, 0.0, RampProfile::LinearB);
        let sim = simulate_ramp(&r, &IntegratorConfig::with_steps(1)).unwrap();
        let want = (r.gamma_final() - r.gamma_initial()).sin().powi(2);
        assert!((sim - want).abs() < 1e-15);
        let short = ramp(300.0, 3.0, 1e-6, RampProfile::LinearB);
        let s2 = simulate_ramp(&short, &ramp_integrator(&short, 100)).unwrap();
        assert!((s2 - want).abs() < 1e-5);
    }

    #[test]
    fn reference_ramp_geometry() {
        // B_i = 100 B_f = 500 δ at T = 1/δ
        let lg = ramp(500.0, 5.0, 1.0, RampProfile::LinearGamma);
        let lb = ramp(500.0, 5.0, 1.0, RampProfile::LinearB);
        let sim_g = simulate_ramp(&lg, &ramp_integrator(&lg, 100)).unwrap();
        let sim_b = simulate_ramp(&lb, &ramp_integrator(&lb, 100)).unwrap();
        let bound = epsilon_d_linear_gamma(&lg).unwrap().bound;
        assert!(bound >= sim_g);
        assert!(sim_g < sim_b);
    }

    #[test]
    fn adiabatic_decay() {
        let ts = [1.0, 10.0, 100.0];
        let envelope: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let r = ramp(500.0, 5.0, t, RampProfile::LinearGamma);
                let k = r.delta * t / (r.gamma_final() - r.gamma_initial());
                let e = epsilon_d_dyson(&r, 200_000, PhaseModel::Exact).unwrap();
                // compare against the non-oscillating envelope (γ_f + γ_i)²/(1 + k²)
                assert!(e <= (r.gamma_final() + r.gamma_initial()).powi(2) / (1.0 + k * k) * 1.05);
                (r.gamma_final() + r.gamma_initial()).powi(2) / (1.0 + k * k)
            })
            .collect();
        let slope = (envelope[2].ln() - envelope[0].ln()) / (ts[2].ln() - ts[0].ln());
        assert!((slope + 2.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn dyson_tracks_simulation() {
        for &(a, b) in &[(10.0, 2.0), (100.0, 5.0), (20.0, 10.0), (200.0, 3.0)] {
            let r = ramp(a * b, b, 1.0, RampProfile::LinearGamma);
            let sim = simulate_ramp(&r, &ramp_integrator(&r, 100)).unwrap();
            let dy = epsilon_d_dyson(&r, 20000, PhaseModel::Exact).unwrap();
            if sim < 0.05 {
                assert!(dy / sim < 2.0 && sim / dy < 2.0, "({a}, {b}): {dy} vs {sim}");
            }
        }
    }

    #[test]
    fn suppressed_by_larger_final_field() {
        for &a in &[10.0, 50.0] {
            let vals: Vec<f64> = [2.0, 5.0, 10.0, 25.0]
                .iter()
                .map(|&b| {
                    let r = ramp(a * b, b, 1.0, RampProfile::LinearGamma);
                    simulate_ramp(&r, &ramp_integrator(&r, 100)).unwrap()
                })
                .collect();
            for w in vals.windows(2) {
                assert!(w[1] < w[0], "{vals:?}");
            }
        }
    }

    #[test]
    fn under_resolved_rejected() {
        let r = ramp(500.0, 5.0, 1.0, RampProfile::LinearGamma);
        assert!(matches!(simulate_ramp(&r, &IntegratorConfig::with_steps(100)), Err(Error::Convergence(_))));
        assert!(epsilon_d_dyson(&r, 10, PhaseModel::Exact).is_err());
        assert!(RampSpec::new(1.0, 2.0, 1.0, 1.0, RampProfile::LinearB).is_err());
    }

    #[test]
    fn non_monotone_custom_profile_rejected() {
        let r = RampSpec::new(100.0, 5.0, 1.0, 1.0, RampProfile::Custom(Arc::new(|t: f64| 100.0 - 95.0 * t + 30.0 * (20.0 * t).sin()))).unwrap();
        assert!(matches!(epsilon_d_dyson(&r, 1000, PhaseModel::Exact), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bound_exceeds_closed_form(a in 10.0f64..200.0, b in 2.0f64..50.0, t in 0.0f64..5.0) {
            let r = ramp(a * b, b, t, RampProfile::LinearGamma);
            let e = epsilon_d_linear_gamma(&r).unwrap();
            prop_assert!(e.bound >= e.closed_form);
        }
    }
}
