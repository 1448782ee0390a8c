//! Python module `clockmag`: the main types and operations of the core
//! crate. Library errors surface as `clockmag.ClockmagError`.

use clockmag::{ac, dc, diabatic, hyperfine, sensitivity, two_spin};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(clockmag, ClockmagError, PyException);

fn err(e: clockmag::Error) -> PyErr {
    ClockmagError::new_err(e.to_string())
}

fn profile(name: &str) -> Result<diabatic::RampProfile, String> {
    match name {
        "linear-b" => Ok(diabatic::RampProfile::LinearB),
        "linear-gamma" => Ok(diabatic::RampProfile::LinearGamma),
        other => Err(format!("unknown ramp profile '{other}' (linear-b, linear-gamma)")),
    }
}

fn phase_model(name: &str) -> Result<diabatic::PhaseModel, String> {
    match name {
        "exact" => Ok(diabatic::PhaseModel::Exact),
        "small-angle" => Ok(diabatic::PhaseModel::SmallAngle),
        other => Err(format!("unknown phase model '{other}' (exact, small-angle)")),
    }
}

/// Elliptical RF drive in the x-z plane: major axis along z, minor along x.
#[pyclass(name = "PolarizationEllipse", module = "clockmag", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEllipse {
    inner: hyperfine::PolarizationEllipse,
}

#[pymethods]
impl PyEllipse {
    #[new]
    #[pyo3(signature = (omega1, ratio, theta = 0.0))]
    fn new(omega1: f64, ratio: f64, theta: f64) -> PyResult<Self> {
        Ok(Self { inner: hyperfine::PolarizationEllipse::in_xz_plane(omega1, ratio, theta).map_err(err)? })
    }

    #[getter]
    fn ratio(&self) -> f64 {
        self.inner.ratio()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    fn with_theta(&self, theta: f64) -> Self {
        Self { inner: self.inner.with_theta(theta) }
    }

    /// Exact two-pulse readout, closed form.
    fn p2(&self, phi: f64, theta: f64) -> f64 {
        dc::p2_exact(phi, theta, self.inner.ratio())
    }

    /// Integrates the dc sequence (optionally with an echo pulse).
    #[pyo3(signature = (phi, theta, steps = 200, echo = false))]
    fn simulate_dc(&self, phi: f64, theta: f64, steps: usize, echo: bool) -> PyResult<f64> {
        let mut spec = dc::DcProtocolSpec::new(self.inner, phi, theta);
        spec.echo = echo;
        dc::simulate_dc_protocol(&spec, &clockmag::dynamics::IntegratorConfig::with_steps(steps)).map_err(err)
    }

    /// Ramsey scan over `points` uniform phases; returns (theta_f, visibility).
    #[pyo3(signature = (phi, points = 128))]
    fn fringe_scan(&self, phi: f64, points: usize) -> PyResult<(f64, f64)> {
        let r = dc::ramsey_scan(&dc::DcProtocolSpec::new(self.inner, phi, 0.0), &dc::phase_grid(points), dc::ScanMode::ClosedForm).map_err(err)?;
        Ok((r.theta_f, r.visibility))
    }

    fn __repr__(&self) -> String {
        format!("PolarizationEllipse(omega1={}, ratio={}, theta={})", self.inner.omega1.norm(), self.inner.ratio(), self.inner.theta)
    }
}

/// Modulated ac drive read out after `n` modulation periods.
#[pyclass(name = "AcDrive", module = "clockmag", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAcDrive {
    inner: ac::AcDriveSpec,
}

#[pymethods]
impl PyAcDrive {
    #[new]
    fn new(omega1: f64, ratio: f64, omega_m: f64, n: u32) -> Self {
        Self { inner: ac::AcDriveSpec { omega1, ratio, omega_m, n } }
    }

    /// Drive whose resonant rotation stays small for signal angle `phi0`.
    #[staticmethod]
    fn small_rotation(phi0: f64, ratio: f64, omega_m: f64, n: u32) -> Self {
        Self { inner: ac::AcDriveSpec::small_rotation(phi0, ratio, omega_m, n) }
    }

    #[getter]
    fn omega1(&self) -> f64 {
        self.inner.omega1
    }

    #[getter]
    fn omega2(&self) -> f64 {
        self.inner.omega2()
    }

    /// Linear filter response for a locked signal.
    #[pyo3(signature = (phi0, omega0, alpha = 0.0))]
    fn filter_response(&self, phi0: f64, omega0: f64, alpha: f64) -> PyResult<f64> {
        let s = ac::AcSignal { phi0, omega0, phase: ac::SignalPhase::Locked(alpha) };
        Ok(ac::filter_response(&s, &self.inner).map_err(err)?.value)
    }

    /// First-order response of the integrated model.
    #[pyo3(signature = (phi0, omega0, alpha = 0.0))]
    fn model_response(&self, phi0: f64, omega0: f64, alpha: f64) -> PyResult<f64> {
        let s = ac::AcSignal { phi0, omega0, phase: ac::SignalPhase::Locked(alpha) };
        ac::model_first_order(&s, &self.inner).map_err(err)
    }

    /// Stroboscopic readout after each modulation period.
    #[pyo3(signature = (phi0, omega0, steps_per_period = 400, alpha = 0.0))]
    fn simulate(&self, phi0: f64, omega0: f64, steps_per_period: usize, alpha: f64) -> PyResult<Vec<f64>> {
        let s = ac::AcSignal { phi0, omega0, phase: ac::SignalPhase::Locked(alpha) };
        ac::simulate_ac(&s, &self.inner, &clockmag::dynamics::IntegratorConfig::with_steps(steps_per_period)).map_err(err)
    }
}

/// Field ramp from `b_initial` to `b_final` with transverse signal `delta`.
#[pyclass(name = "Ramp", module = "clockmag", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRamp {
    inner: diabatic::RampSpec,
}

#[pymethods]
impl PyRamp {
    #[new]
    #[pyo3(signature = (b_initial, b_final, delta, duration, profile = "linear-gamma"))]
    fn new(b_initial: f64, b_final: f64, delta: f64, duration: f64, profile: &str) -> PyResult<Self> {
        let p = self::profile(profile).map_err(ClockmagError::new_err)?;
        Ok(Self { inner: diabatic::RampSpec::new(b_initial, b_final, delta, duration, p).map_err(err)? })
    }

    fn field_at(&self, t: f64) -> f64 {
        self.inner.field_at(t)
    }

    /// (closed_form, bound) for the linear-gamma estimate.
    fn estimate(&self) -> PyResult<(f64, f64)> {
        let e = diabatic::epsilon_d_linear_gamma(&self.inner).map_err(err)?;
        Ok((e.closed_form, e.bound))
    }

    #[pyo3(signature = (quad_points = 20000, phase = "exact"))]
    fn dyson(&self, quad_points: usize, phase: &str) -> PyResult<f64> {
        let m = phase_model(phase).map_err(ClockmagError::new_err)?;
        diabatic::epsilon_d_dyson(&self.inner, quad_points, m).map_err(err)
    }

    #[pyo3(signature = (steps_per_period = 100))]
    fn simulate(&self, py: Python<'_>, steps_per_period: usize) -> PyResult<f64> {
        let ramp = self.inner.clone();
        py.detach(move || diabatic::simulate_ramp(&ramp, &diabatic::ramp_integrator(&ramp, steps_per_period))).map_err(err)
    }
}

/// Error-corrected sensitivity at a dimensionless working point.
#[pyclass(name = "Sensitivity", module = "clockmag", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySensitivity {
    delta_tilde: f64,
    eps_pb: f64,
    eps_d: f64,
    omega1: f64,
    omega2: f64,
    b_final: f64,
    ramp_time: f64,
}

impl From<sensitivity::SensitivityResult> for PySensitivity {
    fn from(r: sensitivity::SensitivityResult) -> Self {
        Self {
            delta_tilde: r.delta_tilde,
            eps_pb: r.eps_pb,
            eps_d: r.eps_d,
            omega1: r.settings.omega1,
            omega2: r.settings.omega2,
            b_final: r.settings.b_final,
            ramp_time: r.settings.ramp_time,
        }
    }
}

#[pymethods]
impl PySensitivity {
    fn __repr__(&self) -> String {
        format!("Sensitivity(delta_tilde={:.6}, eps_pb={:.4}, eps_d={:.4})", self.delta_tilde, self.eps_pb, self.eps_d)
    }
}

#[pyfunction]
fn beta(phi: f64, ratio: f64) -> f64 {
    hyperfine::beta(phi, ratio)
}

#[pyfunction]
fn rabi_probability(omega1: f64, duration: f64, phi: f64, ratio: f64) -> PyResult<f64> {
    hyperfine::rabi_probability(omega1, duration, phi, ratio).map_err(err)
}

#[pyfunction]
fn p2_exact(phi: f64, theta: f64, ratio: f64) -> f64 {
    dc::p2_exact(phi, theta, ratio)
}

#[pyfunction]
fn fringe_phase(phi: f64, ratio: f64) -> PyResult<f64> {
    dc::fringe_phase(phi, ratio).map_err(err)
}

/// Closed-form singlet probability of the two-spin sequence.
#[pyfunction]
fn prob_s_closed(chi: f64, phi: f64) -> PyResult<f64> {
    two_spin::prob_s_closed(chi, phi).map_err(err)
}

/// Same quantity from the lab-frame projected pulses.
#[pyfunction]
fn prob_s_lab(chi: f64, phi: f64) -> PyResult<f64> {
    let area = two_spin::calibrated_area(chi).map_err(err)?;
    two_spin::sequence_prob_s_lab(chi, phi, area).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (b_tilde, omega_ratio, t_tilde = 0.0, n = 1))]
fn full_sensitivity(b_tilde: f64, omega_ratio: f64, t_tilde: f64, n: u64) -> PyResult<PySensitivity> {
    let p = sensitivity::DimensionlessPoint::new(b_tilde, omega_ratio, t_tilde, n).map_err(err)?;
    Ok(sensitivity::full_sensitivity(&p).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (b_tilde, t_tilde = 0.0, n = 1))]
fn analytic_optimum(b_tilde: f64, t_tilde: f64, n: u64) -> PyResult<PySensitivity> {
    Ok(sensitivity::analytic_optimum(b_tilde, t_tilde, n).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (b_tilde, t_tilde = 0.0, n = 1))]
fn self_consistent_sensitivity(b_tilde: f64, t_tilde: f64, n: u64) -> PyResult<PySensitivity> {
    Ok(sensitivity::self_consistent_sensitivity(b_tilde, t_tilde, n).map_err(err)?.into())
}

/// Grid minimum over ramp time; returns rows (b_tilde, omega_ratio, delta_tilde or None, t_tilde or None).
#[pyfunction]
#[pyo3(signature = (b_grid, omega_grid, n = 1))]
fn optimize_plane(py: Python<'_>, b_grid: Vec<f64>, omega_grid: Vec<f64>, n: u64) -> Vec<(f64, f64, Option<f64>, Option<f64>)> {
    let cells = py.detach(|| sensitivity::numeric_optimize(&b_grid, &omega_grid, n, &sensitivity::OptimizeOptions::default()));
    cells.into_iter().map(|c| (c.b_tilde, c.omega_ratio, c.best.map(|b| b.0), c.best.map(|b| b.1))).collect()
}

#[pyfunction]
fn zeeman_ramsey_population(delta: f64, t: f64) -> f64 {
    sensitivity::zeeman_ramsey_population(delta, t)
}

#[pyfunction]
#[pyo3(signature = (tau_z, n = 1))]
fn zeeman_sensitivity(tau_z: f64, n: u64) -> PyResult<f64> {
    sensitivity::zeeman_sensitivity(tau_z, n).map_err(err)
}

/// Seeded Monte-Carlo estimate; returns (mean, std_dev, cramer_rao).
#[pyfunction]
#[pyo3(signature = (b_final, omega_ratio, delta = 0.0, shots = 10000, trials = 500, seed = 0))]
fn mle_monte_carlo(py: Python<'_>, b_final: f64, omega_ratio: f64, delta: f64, shots: u64, trials: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let setup = sensitivity::MleSetup { b_final, omega_ratio, delta, shots, trials, seed };
    let m = py.detach(|| sensitivity::mle_monte_carlo(&setup)).map_err(err)?;
    Ok((m.mean, m.std_dev, m.cramer_rao))
}

#[pymodule]
#[pyo3(name = "clockmag")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", clockmag::VERSION)?;
    m.add("ClockmagError", m.py().get_type::<ClockmagError>())?;
    m.add_class::<PyEllipse>()?;
    m.add_class::<PyAcDrive>()?;
    m.add_class::<PyRamp>()?;
    m.add_class::<PySensitivity>()?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(rabi_probability, m)?)?;
    m.add_function(wrap_pyfunction!(p2_exact, m)?)?;
    m.add_function(wrap_pyfunction!(fringe_phase, m)?)?;
    m.add_function(wrap_pyfunction!(prob_s_closed, m)?)?;
    m.add_function(wrap_pyfunction!(prob_s_lab, m)?)?;
    m.add_function(wrap_pyfunction!(full_sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(self_consistent_sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_plane, m)?)?;
    m.add_function(wrap_pyfunction!(zeeman_ramsey_population, m)?)?;
    m.add_function(wrap_pyfunction!(zeeman_sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(mle_monte_carlo, m)?)?;
    Ok(())
}
