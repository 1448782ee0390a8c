use num_complex::Complex64;

use super::expm::step_unitary_unchecked;
use super::operator::{identity, CMatrix, CVector};
use super::state::StateVector;
use crate::error::{Error, Result};

/// Time-dependent Hamiltonian on a closed interval `[t0, t1]`.
///
/// The evaluator must return a Hermitian matrix of constant dimension;
/// dimension and finiteness are checked at every evaluation.
pub struct HamiltonianSchedule<F> {
    dim: usize,
    t0: f64,
    t1: f64,
    eval: F,
}

impl<F: Fn(f64) -> CMatrix> HamiltonianSchedule<F> {
    pub fn new(dim: usize, t0: f64, t1: f64, eval: F) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::NonFinite("schedule interval"));
        }
        if t1 < t0 {
            return Err(Error::InvalidArgument(format!(
                "schedule interval reversed: [{t0}, {t1}]"
            )));
        }
        Ok(Self { dim, t0, t1, eval })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn at(&self, t: f64) -> Result<CMatrix> {
        let h = (self.eval)(t);
        if h.nrows() != self.dim || h.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.nrows(),
            });
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Hamiltonian entries"));
        }
        Ok(h)
    }
}

impl HamiltonianSchedule<Box<dyn Fn(f64) -> CMatrix>> {
    /// Time-independent schedule.
    pub fn constant(h: CMatrix, t0: f64, t1: f64) -> Result<Self> {
        let dim = h.nrows();
        Self::new(dim, t0, t1, Box::new(move |_| h.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `exp(-i H(t + dt/2) dt)` per step; exactly unitary, second order.
    MidpointExponential,
    /// Classical fourth-order Runge–Kutta on the state vector.
    RungeKutta4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step_count: usize,
    pub scheme: Scheme,
    pub renormalize: bool,
    /// Largest population change tolerated when the step count doubles.
    pub convergence_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_count: 1000,
            scheme: Scheme::MidpointExponential,
            renormalize: false,
            convergence_tol: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn with_steps(step_count: usize) -> Self {
        Self {
            step_count,
            ..Self::default()
        }
    }

    /// Enough steps to sample the fastest frequency `omega_max` with
    /// `steps_per_period` points over `duration` (at least `min_steps`).
    pub fn resolving(omega_max: f64, duration: f64, steps_per_period: usize, min_steps: usize) -> Self {
        let periods = omega_max.abs() * duration.abs() / std::f64::consts::TAU;
        let n = (periods * steps_per_period as f64).ceil() as usize;
        Self::with_steps(n.max(min_steps).max(1))
    }

    fn validate(&self) -> Result<()> {
        if self.step_count == 0 {
            return Err(Error::InvalidArgument("step_count must be positive".into()));
        }
        Ok(())
    }
}

fn check_state<F: Fn(f64) -> CMatrix>(state: &StateVector, sched: &HamiltonianSchedule<F>) -> Result<()> {
    if state.dim() != sched.dim() {
        return Err(Error::DimensionMismatch {
            expected: sched.dim(),
            got: state.dim(),
        });
    }
    Ok(())
}

fn rk4_step(h: &dyn Fn(f64) -> Result<CMatrix>, psi: &CVector, t: f64, dt: f64) -> Result<CVector> {
    let mi = Complex64::new(0.0, -1.0);
    let cdt = Complex64::new(dt, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let hm = h(t + 0.5 * dt)?;
    let k1 = h(t)? * psi * mi;
    let k2 = &hm * (psi + &k1 * cdt * half) * mi;
    let k3 = &hm * (psi + &k2 * cdt * half) * mi;
    let k4 = h(t + dt)? * (psi + &k3 * cdt) * mi;
    Ok(psi + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (cdt / 6.0))
}

/// Integrates `state` across the schedule's interval.
///
/// The result is bitwise reproducible for identical inputs.
pub fn evolve<F: Fn(f64) -> CMatrix>(
    state: &StateVector,
    schedule: &HamiltonianSchedule<F>,
    config: &IntegratorConfig,
) -> Result<StateVector> {
    config.validate()?;
    check_state(state, schedule)?;
    let n = config.step_count;
    let dt = (schedule.t1() - schedule.t0()) / n as f64;
    let mut psi = state.amplitudes().clone();
    let eval = |t: f64| schedule.at(t);
    for k in 0..n {
        let t = schedule.t0() + k as f64 * dt;
        psi = match config.scheme {
            Scheme::MidpointExponential => {
                let h = eval(t + 0.5 * dt)?;
                step_unitary_unchecked(&h, dt) * psi
            }
            Scheme::RungeKutta4 => rk4_step(&eval, &psi, t, dt)?,
        };
        if config.renormalize {
            let norm = psi.norm();
            psi /= Complex64::new(norm, 0.0);
        }
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Convergence("state diverged".into()));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Convergence(format!(
            "norm drifted to {norm}; increase step_count"
        )));
    }
    Ok(state.with_amplitudes(psi))
}

/// Evolves with `step_count` and `2 * step_count` steps and returns the
/// finer result, failing if any population moved by more than the
/// configured tolerance.
pub fn evolve_converged<F: Fn(f64) -> CMatrix>(
    state: &StateVector,
    schedule: &HamiltonianSchedule<F>,
    config: &IntegratorConfig,
) -> Result<StateVector> {
    let coarse = evolve(state, schedule, config)?;
    let fine_cfg = IntegratorConfig {
        step_count: config.step_count * 2,
        ..*config
    };
    let fine = evolve(state, schedule, &fine_cfg)?;
    let diff = coarse
        .populations()
        .iter()
        .zip(fine.populations())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if diff > config.convergence_tol {
        return Err(Error::Convergence(format!(
            "populations changed by {diff:e} on step doubling (tolerance {:e})",
            config.convergence_tol
        )));
    }
    Ok(fine)
}

/// Full propagator over the schedule (midpoint exponential steps).
pub fn propagator<F: Fn(f64) -> CMatrix>(
    schedule: &HamiltonianSchedule<F>,
    config: &IntegratorConfig,
) -> Result<CMatrix> {
    config.validate()?;
    let n = config.step_count;
    let dt = (schedule.t1() - schedule.t0()) / n as f64;
    let mut u = identity(schedule.dim());
    for k in 0..n {
        let t = schedule.t0() + (k as f64 + 0.5) * dt;
        u = step_unitary_unchecked(&schedule.at(t)?, dt) * u;
    }
    Ok(u)
}

/// First-order Dyson propagator `1 - i ∫ H dt` over `[t0, t1]`
/// (composite Simpson, `quad_points` nodes rounded up to odd).
pub fn dyson_first_order<F: Fn(f64) -> CMatrix>(
    schedule: &HamiltonianSchedule<F>,
    t0: f64,
    t1: f64,
    quad_points: usize,
) -> Result<CMatrix> {
    if t1 < t0 {
        return Err(Error::InvalidArgument(format!("reversed interval [{t0}, {t1}]")));
    }
    if quad_points < 2 {
        return Err(Error::InvalidArgument("quad_points must be >= 2".into()));
    }
    let dim = schedule.dim();
    let mut integral = CMatrix::zeros(dim, dim);
    if t1 > t0 {
        let nodes = if quad_points % 2 == 1 { quad_points } else { quad_points + 1 };
        let intervals = nodes - 1;
        let h = (t1 - t0) / intervals as f64;
        for k in 0..nodes {
            let w = if k == 0 || k == intervals {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += schedule.at(t0 + k as f64 * h)? * Complex64::new(w * h / 3.0, 0.0);
        }
    }
    Ok(identity(dim) - integral * Complex64::new(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::operator::{pauli_x, pauli_z, unitarity_defect};
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn driven(t: f64) -> CMatrix {
        pauli_z() * c(0.5) + pauli_x() * c(0.3 * (1.3 * t).cos())
    }

    fn reference(steps: usize) -> StateVector {
        let s = HamiltonianSchedule::new(2, 0.0, 10.0, driven).unwrap();
        let mut cfg = IntegratorConfig::with_steps(steps);
        cfg.scheme = Scheme::RungeKutta4;
        evolve(&StateVector::basis(2, 0).unwrap(), &s, &cfg).unwrap()
    }

    #[test]
    fn constant_hamiltonian_exact() {
        let s = HamiltonianSchedule::constant(pauli_x() * c(0.5), 0.0, std::f64::consts::PI).unwrap();
        let out = evolve(&StateVector::basis(2, 0).unwrap(), &s, &IntegratorConfig::with_steps(7)).unwrap();
        assert!((out.populations()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn midpoint_second_order() {
        let exact = reference(20000);
        let s = HamiltonianSchedule::new(2, 0.0, 10.0, driven).unwrap();
        let psi0 = StateVector::basis(2, 0).unwrap();
        let err = |n: usize| {
            let out = evolve(&psi0, &s, &IntegratorConfig::with_steps(n)).unwrap();
            (out.amplitudes() - exact.amplitudes()).norm()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 / e2 >= 3.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn rk4_agrees_with_midpoint() {
        let exact = reference(4000);
        let s = HamiltonianSchedule::new(2, 0.0, 10.0, driven).unwrap();
        let out = evolve(&StateVector::basis(2, 0).unwrap(), &s, &IntegratorConfig::with_steps(20000)).unwrap();
        assert!((out.amplitudes() - exact.amplitudes()).norm() < 1e-7);
    }

    #[test]
    fn dimension_errors() {
        let s = HamiltonianSchedule::new(3, 0.0, 1.0, driven).unwrap();
        let psi = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            evolve(&psi, &s, &IntegratorConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(HamiltonianSchedule::new(2, 1.0, 0.0, driven).is_err());
    }

    #[test]
    fn non_finite_hamiltonian_detected() {
        let s = HamiltonianSchedule::new(2, 0.0, 1.0, |_| pauli_x() * c(f64::NAN)).unwrap();
        let r = evolve(&StateVector::basis(2, 0).unwrap(), &s, &IntegratorConfig::with_steps(4));
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn convergence_failure_reported() {
        let s = HamiltonianSchedule::new(2, 0.0, 100.0, |t| pauli_x() * c((7.0 * t).cos()) + pauli_z() * c(3.0)).unwrap();
        let cfg = IntegratorConfig { step_count: 20, convergence_tol: 1e-9, ..Default::default() };
        assert!(matches!(
            evolve_converged(&StateVector::basis(2, 0).unwrap(), &s, &cfg),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn dyson_constant_and_reversed() {
        let s = HamiltonianSchedule::constant(pauli_z() * c(0.01), 0.0, 1.0).unwrap();
        let d = dyson_first_order(&s, 0.0, 2.0, 2).unwrap();
        assert!((d[(0, 0)] - Complex64::new(1.0, -0.02)).norm() < 1e-15);
        assert!(dyson_first_order(&s, 1.0, 0.0, 8).is_err());
        assert!(dyson_first_order(&s, 0.0, 1.0, 1).is_err());
        let zero = dyson_first_order(&s, 0.5, 0.5, 8).unwrap();
        assert!((zero - identity(2)).norm() < 1e-15);
    }

    #[test]
    fn dyson_close_to_propagator_for_weak_drive() {
        let g = 1e-4;
        let s = HamiltonianSchedule::new(2, 0.0, 3.0, move |t| pauli_x() * c(g * t.sin())).unwrap();
        let d = dyson_first_order(&s, 0.0, 3.0, 201).unwrap();
        let u = propagator(&s, &IntegratorConfig::with_steps(2000)).unwrap();
        assert!((d - u).norm() < 1e-7);
    }

    #[test]
    fn deterministic() {
        let a = reference(321);
        let b = reference(321);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn propagator_is_unitary(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.1f64..5.0) {
            let s = HamiltonianSchedule::new(4, 0.0, 2.0, move |t| {
                let x = pauli_x() * c(a * (w * t).cos());
                let z = pauli_z() * c(b);
                x.kronecker(&pauli_z()) + z.kronecker(&identity(2)) + identity(2).kronecker(&pauli_x())
            }).unwrap();
            let u = propagator(&s, &IntegratorConfig::with_steps(200)).unwrap();
            prop_assert!(unitarity_defect(&u) < 1e-9);
        }

        #[test]
        fn norm_preserved(a in -3.0f64..3.0, t1 in 0.0f64..20.0) {
            let s = HamiltonianSchedule::new(2, 0.0, t1, move |t| pauli_x() * c(a * t) + pauli_z()).unwrap();
            let out = evolve(&StateVector::basis(2, 1).unwrap(), &s, &IntegratorConfig::with_steps(300)).unwrap();
            prop_assert!((out.amplitudes().norm() - 1.0).abs() < 1e-8);
        }
    }
}
