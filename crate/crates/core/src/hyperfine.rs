//! Ground-state hyperfine manifold with nuclear spin 3/2 and electronic
//! spin 1/2, reduced to the field-insensitive `m_F = 0` clock pair.
//!
//! Product basis index is `2 * i + j` with `m_I = 3/2 − i` and
//! `m_J = 1/2 − j`. Clock operators act on the ordered pair
//! `(|2,0⟩, |1,0⟩)` so that `τᶻ = +1` is the upper manifold.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::dynamics::{identity, kron, pauli_x, pauli_y, pauli_z, CMatrix, CVector, HermitianOperator};
use crate::error::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Coupling constants. Frequencies are angular; magnetons are angular
/// frequency per unit field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineConstants {
    pub a_hf: f64,
    pub g_i: f64,
    pub g_j: f64,
    pub mu_n: f64,
    pub mu_b: f64,
}

impl HyperfineConstants {
    /// Rubidium-87 values in rad/s and rad/s per gauss.
    pub fn rb87() -> Self {
        let mu_b = TAU * 1.399_624_493_61e6;
        let mass_ratio = 1_836.152_673_43;
        Self {
            a_hf: TAU * 6.834_682_610_904e9,
            g_i: -0.000_995_141_4 * mass_ratio,
            g_j: 2.002_331_13,
            mu_n: mu_b / mass_ratio,
            mu_b,
        }
    }

    /// Same g-factors in units where `a_hf = 1` and `mu_b = 1`.
    pub fn scaled() -> Self {
        let rb = Self::rb87();
        Self {
            a_hf: 1.0,
            mu_b: 1.0,
            mu_n: rb.mu_n / rb.mu_b,
            ..rb
        }
    }

    /// Clock-pair coupling `g_I μ_N − g_J μ_B`.
    pub fn mu_clock(&self) -> f64 {
        self.g_i * self.mu_n - self.g_j * self.mu_b
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_hf > 0.0) {
            return Err(Error::InvalidArgument("a_hf must be positive".into()));
        }
        if self.mu_clock() == 0.0 || !self.mu_clock().is_finite() {
            return Err(Error::InvalidArgument("clock coupling must be non-zero".into()));
        }
        Ok(())
    }
}

/// Spin matrices `(Sx, Sy, Sz)` for spin `s`, basis `m = s, s−1, …, −s`.
pub fn spin_matrices(twice_s: usize) -> [CMatrix; 3] {
    let s = twice_s as f64 / 2.0;
    let n = twice_s + 1;
    let mut plus = CMatrix::zeros(n, n);
    let mut z = CMatrix::zeros(n, n);
    for k in 0..n {
        let m = s - k as f64;
        z[(k, k)] = c(m);
        if k > 0 {
            plus[(k - 1, k)] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) * c(0.5);
    let y = (&plus - &minus) * Complex64::new(0.0, -0.5);
    [x, y, z]
}

fn nuclear_ops() -> [CMatrix; 3] {
    spin_matrices(3).map(|m| kron(&m, &identity(2)))
}

fn electron_ops() -> [CMatrix; 3] {
    spin_matrices(1).map(|m| kron(&identity(4), &m))
}

fn product_index(m_i: f64, m_j: f64) -> usize {
    let i = (1.5 - m_i).round() as usize;
    let j = (0.5 - m_j).round() as usize;
    2 * i + j
}

/// `|F, m_F⟩` in the product basis, Condon–Shortley phases.
pub fn hyperfine_state(f: u32, m_f: i32) -> Result<CVector> {
    if !(f == 1 || f == 2) || m_f.unsigned_abs() > f {
        return Err(Error::InvalidArgument(format!("no state |{f}, {m_f}⟩")));
    }
    let m = m_f as f64;
    let j1 = 1.5;
    let denom = 2.0 * j1 + 1.0;
    let mut v = CVector::zeros(8);
    // coupling j1 = 3/2 with 1/2: closed-form coefficients
    let (a_up, a_down) = if f == 2 {
        (((j1 + m + 0.5) / denom).sqrt(), ((j1 - m + 0.5) / denom).sqrt())
    } else {
        (-((j1 - m + 0.5) / denom).sqrt(), ((j1 + m + 0.5) / denom).sqrt())
    };
    if (m - 0.5).abs() <= j1 {
        v[product_index(m - 0.5, 0.5)] = c(a_up);
    }
    if (m + 0.5).abs() <= j1 {
        v[product_index(m + 0.5, -0.5)] = c(a_down);
    }
    Ok(v)
}

/// `(|2,0⟩, |1,0⟩)`.
pub fn clock_states() -> (CVector, CVector) {
    (hyperfine_state(2, 0).unwrap(), hyperfine_state(1, 0).unwrap())
}

/// Orthogonal major and minor axes plus RF phase; the complex drive
/// vector is `e^{iθ}(Ω₁ + iΩ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationEllipse {
    pub omega1: Vector3<f64>,
    pub omega2: Vector3<f64>,
    pub theta: f64,
}

impl PolarizationEllipse {
    pub fn new(omega1: Vector3<f64>, omega2: Vector3<f64>, theta: f64) -> Result<Self> {
        if omega1.iter().chain(omega2.iter()).any(|x| !x.is_finite()) || !theta.is_finite() {
            return Err(Error::NonFinite("polarization ellipse"));
        }
        let scale = (omega1.norm() * omega2.norm()).max(1.0);
        if omega1.dot(&omega2).abs() > 1e-12 * scale {
            return Err(Error::InvalidArgument("ellipse axes must be orthogonal".into()));
        }
        Ok(Self { omega1, omega2, theta })
    }

    /// Ellipse in the x–z plane: major axis along `ẑ` with magnitude
    /// `omega1`, minor axis along `x̂` with magnitude `ratio * omega1`.
    pub fn in_xz_plane(omega1: f64, ratio: f64, theta: f64) -> Result<Self> {
        Self::new(Vector3::new(0.0, 0.0, omega1), Vector3::new(ratio * omega1, 0.0, 0.0), theta)
    }

    /// `|Ω₂| / |Ω₁|`.
    pub fn ratio(&self) -> f64 {
        let m = self.omega1.norm();
        if m == 0.0 {
            f64::INFINITY
        } else {
            self.omega2.norm() / m
        }
    }

    /// Complex components of `e^{iθ}(Ω₁ + iΩ₂)`.
    pub fn complex_vector(&self) -> [Complex64; 3] {
        let ph = Complex64::from_polar(1.0, self.theta);
        [0, 1, 2].map(|k| ph * Complex64::new(self.omega1[k], self.omega2[k]))
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }

    /// Unit vector in the ellipse plane at angle `phi` from the major
    /// axis toward the minor axis.
    pub fn in_plane_direction(&self, phi: f64) -> Result<Vector3<f64>> {
        let n1 = self.omega1.norm();
        let n2 = self.omega2.norm();
        if n1 == 0.0 || n2 == 0.0 {
            return Err(Error::Singular("ellipse plane undefined for a zero axis".into()));
        }
        Ok(self.omega1 / n1 * phi.cos() + self.omega2 / n2 * phi.sin())
    }
}

/// RF drive in field units for the full manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfDrive {
    pub field: PolarizationEllipse,
    pub omega_rf: f64,
}

fn moment_ops(k: &HyperfineConstants) -> [CMatrix; 3] {
    let i = nuclear_ops();
    let j = electron_ops();
    [0, 1, 2].map(|a| &i[a] * c(k.mu_n * k.g_i) + &j[a] * c(k.mu_b * k.g_j))
}

/// Hyperfine term `(A/2) I·J` shifted to eigenvalues `±A/2`.
pub fn hyperfine_term(k: &HyperfineConstants) -> CMatrix {
    let i = nuclear_ops();
    let j = electron_ops();
    let idotj = &i[0] * &j[0] + &i[1] * &j[1] + &i[2] * &j[2];
    // I·J is 3/4 on F = 2 and −5/4 on F = 1
    (idotj * c(0.5) + identity(8) * c(0.125)) * c(k.a_hf)
}

/// Full 8×8 lab Hamiltonian: hyperfine + static Zeeman + RF Zeeman term
/// `Re(Ω e^{iω t})·(μ_N g_I I + μ_B g_J J)`.
pub fn full_hamiltonian_lab(
    k: &HyperfineConstants,
    b: &Vector3<f64>,
    rf: Option<&RfDrive>,
    t: f64,
) -> Result<HermitianOperator> {
    k.validate()?;
    let mut field = *b;
    if let Some(rf) = rf {
        let osc = Complex64::from_polar(1.0, rf.omega_rf * t);
        let cv = rf.field.complex_vector();
        for a in 0..3 {
            field[a] += (cv[a] * osc).re;
        }
    }
    if field.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("field"));
    }
    let m = moment_ops(k);
    let h = hyperfine_term(k) + &m[0] * c(field.x) + &m[1] * c(field.y) + &m[2] * c(field.z);
    HermitianOperator::hermitian_part(&h)
}

/// Eigenstate of the static Hamiltonian with largest overlap on `|F, m_F⟩`.
pub fn adiabatic_state(k: &HyperfineConstants, b: &Vector3<f64>, f: u32, m_f: i32) -> Result<(f64, CVector)> {
    let h = full_hamiltonian_lab(k, b, None, 0.0)?;
    let target = hyperfine_state(f, m_f)?;
    let (vals, vecs) = h.eigen();
    let (idx, _) = vecs
        .iter()
        .enumerate()
        .map(|(i, v)| (i, target.dotc(v).norm()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let ov = target.dotc(&vecs[idx]);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0) };
    Ok((vals[idx], &vecs[idx] * phase.conj()))
}

/// Clock-pair transition frequency `E(2,0) − E(1,0)` at field `b`.
pub fn clock_frequency(k: &HyperfineConstants, b: &Vector3<f64>) -> Result<f64> {
    Ok(adiabatic_state(k, b, 2, 0)?.0 - adiabatic_state(k, b, 1, 0)?.0)
}

/// Two-level lab Hamiltonian `(A/2)τᶻ + ½(μB + Ω_z e^{iωt} + c.c.)τˣ`.
pub fn clock_hamiltonian_lab(
    k: &HyperfineConstants,
    b: f64,
    omega_z: Complex64,
    omega_rf: f64,
    t: f64,
) -> Result<HermitianOperator> {
    k.validate()?;
    let drive = 2.0 * (omega_z * Complex64::from_polar(1.0, omega_rf * t)).re;
    let h = pauli_z() * c(0.5 * k.a_hf) + pauli_x() * c(0.5 * (k.mu_clock() * b + drive));
    HermitianOperator::new(h)
}

/// Rotating-frame clock Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockHamiltonianParams {
    pub omega_eff: f64,
    pub xi: f64,
    /// Detuning `A − ω_RF`.
    pub eta: f64,
    /// Drive has no component along the quantization axis.
    pub degenerate: bool,
}

impl ClockHamiltonianParams {
    /// `(η/2)τᶻ + (Ω_eff/2)(cos ξ τˣ + sin ξ τʸ)`.
    pub fn hamiltonian(&self) -> HermitianOperator {
        let h = pauli_z() * c(0.5 * self.eta)
            + (pauli_x() * c(self.xi.cos()) + pauli_y() * c(self.xi.sin())) * c(0.5 * self.omega_eff);
        HermitianOperator::new(h).expect("Pauli combination is Hermitian")
    }
}

/// Projects the ellipse onto the quantization direction `b_hat`.
pub fn effective_clock_hamiltonian(
    ellipse: &PolarizationEllipse,
    b_hat: &Vector3<f64>,
    eta: f64,
) -> Result<ClockHamiltonianParams> {
    if (b_hat.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("b_hat must be a unit vector".into()));
    }
    let p1 = ellipse.omega1.dot(b_hat);
    let p2 = ellipse.omega2.dot(b_hat);
    let omega_eff = p1.hypot(p2);
    if omega_eff == 0.0 {
        return Ok(ClockHamiltonianParams {
            omega_eff: 0.0,
            xi: ellipse.theta,
            eta,
            degenerate: true,
        });
    }
    Ok(ClockHamiltonianParams {
        omega_eff,
        xi: ellipse.theta + p2.atan2(p1),
        eta,
        degenerate: false,
    })
}

/// Drive-strength factor `√(cos²φ + Ω̃² sin²φ)`.
pub fn beta(phi: f64, ratio: f64) -> f64 {
    (phi.cos().powi(2) + ratio * ratio * phi.sin().powi(2)).sqrt()
}

/// `sin²(Ω₁ T β / 2)`, the population moved out of the initial clock
/// state by one resonant pulse. Independent of the RF phase.
pub fn rabi_probability(omega1: f64, duration: f64, phi: f64, ratio: f64) -> Result<f64> {
    if duration < 0.0 {
        return Err(Error::InvalidArgument("pulse duration must be non-negative".into()));
    }
    Ok((0.5 * omega1 * duration * beta(phi, ratio)).sin().powi(2))
}

/// Population left in the initial clock state, `1 − rabi_probability`.
pub fn initial_state_population(omega1: f64, duration: f64, phi: f64, ratio: f64) -> Result<f64> {
    Ok(1.0 - rabi_probability(omega1, duration, phi, ratio)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, HamiltonianSchedule, IntegratorConfig, StateVector};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn linfit(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn zero_field_spectrum() {
        let k = HyperfineConstants::scaled();
        let ev = full_hamiltonian_lab(&k, &Vector3::zeros(), None, 0.0).unwrap().eigenvalues();
        for e in &ev[..3] {
            assert!((e + 0.5).abs() < 1e-12);
        }
        for e in &ev[3..] {
            assert!((e - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperfine_states_are_eigenstates() {
        let k = HyperfineConstants::scaled();
        let h = hyperfine_term(&k);
        let f2 = spin_matrices(3).map(|m| kron(&m, &identity(2)));
        for f in [1u32, 2] {
            for m in -(f as i32)..=(f as i32) {
                let v = hyperfine_state(f, m).unwrap();
                assert!((v.norm() - 1.0).abs() < 1e-14);
                let e = if f == 2 { 0.5 } else { -0.5 };
                assert!((&h * &v - &v * c(e)).norm() < 1e-14);
                let fz = &f2[2] + &electron_ops()[2];
                assert!((&fz * &v - &v * c(m as f64)).norm() < 1e-14);
            }
        }
        assert!(hyperfine_state(1, 2).is_err());
    }

    #[test]
    fn clock_zeeman_block() {
        let k = HyperfineConstants::scaled();
        let (s2, s1) = clock_states();
        let h = full_hamiltonian_lab(&k, &Vector3::new(0.0, 0.0, 1e-3), None, 0.0).unwrap();
        let off = s2.dotc(&(h.matrix() * &s1));
        assert!((off.re - 0.5 * k.mu_clock() * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn clock_shift_is_quadratic() {
        let k = HyperfineConstants::rb87();
        let bs: Vec<f64> = (0..9).map(|i| 0.05 * 10f64.powf(i as f64 / 4.0)).collect();
        let shifts: Vec<f64> = bs
            .iter()
            .map(|&b| clock_frequency(&k, &Vector3::new(0.0, 0.0, b)).unwrap() - k.a_hf)
            .collect();
        let xs: Vec<f64> = bs.iter().map(|b| b.ln()).collect();
        let ys: Vec<f64> = shifts.iter().map(|s| s.abs().ln()).collect();
        let p = linfit(&xs, &ys);
        assert!((p - 2.0).abs() < 0.05, "exponent {p}");
    }

    #[test]
    fn stretched_neighbor_zeeman_slope() {
        let k = HyperfineConstants::rb87();
        let b = 1e-3;
        let e_plus = adiabatic_state(&k, &Vector3::new(0.0, 0.0, b), 2, 1).unwrap().0;
        let e_minus = adiabatic_state(&k, &Vector3::new(0.0, 0.0, -b), 2, 1).unwrap().0;
        let slope_mhz = (e_plus - e_minus) / (2.0 * b) / TAU / 1e6;
        assert!((slope_mhz - 0.70).abs() < 0.01, "slope {slope_mhz}");
    }

    #[test]
    fn effective_projection_examples() {
        let e = PolarizationEllipse::in_xz_plane(2.0, 0.3, 0.4).unwrap();
        let p = effective_clock_hamiltonian(&e, &Vector3::z(), 0.0).unwrap();
        assert!((p.omega_eff - 2.0).abs() < 1e-15 && (p.xi - 0.4).abs() < 1e-15);
        let p = effective_clock_hamiltonian(&e, &Vector3::x(), 0.0).unwrap();
        assert!((p.omega_eff - 0.6).abs() < 1e-15 && (p.xi - 0.4 - FRAC_PI_2).abs() < 1e-15);
        let p = effective_clock_hamiltonian(&e, &Vector3::y(), 0.0).unwrap();
        assert!(p.degenerate && p.omega_eff == 0.0 && p.xi == 0.4);
        for phi in [-2.0, -0.3, 0.8, 2.9] {
            let b = e.in_plane_direction(phi).unwrap();
            let p = effective_clock_hamiltonian(&e, &b, 0.0).unwrap();
            assert!((p.omega_eff - 2.0 * beta(phi, 0.3)).abs() < 1e-14);
        }
        assert!(effective_clock_hamiltonian(&e, &(Vector3::z() * 2.0), 0.0).is_err());
        assert!(PolarizationEllipse::new(Vector3::z(), Vector3::new(0.1, 0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn rabi_examples() {
        assert!((rabi_probability(1.0, PI, 0.0, 0.27).unwrap() - 1.0).abs() < 1e-15);
        let p = rabi_probability(1.0, 2.0, FRAC_PI_2, 0.27).unwrap();
        assert!((p - (0.27f64).sin().powi(2)).abs() < 1e-15);
        assert!(rabi_probability(1.0, -1.0, 0.0, 1.0).is_err());
        assert_eq!(initial_state_population(1.0, 0.0, 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn rabi_matches_effective_dynamics() {
        let e = PolarizationEllipse::in_xz_plane(1.3, 0.27, 0.9).unwrap();
        for phi in [0.0, 0.6, 1.4] {
            let p = effective_clock_hamiltonian(&e, &e.in_plane_direction(phi).unwrap(), 0.0).unwrap();
            let s = HamiltonianSchedule::constant(p.hamiltonian().into_matrix(), 0.0, 2.2).unwrap();
            let out = evolve(&StateVector::basis(2, 0).unwrap(), &s, &IntegratorConfig::with_steps(1)).unwrap();
            let want = rabi_probability(1.3, 2.2, phi, 0.27).unwrap();
            assert!((out.populations()[1] - want).abs() < 1e-13);
        }
    }

    fn rwa_error(ratio: f64) -> f64 {
        // scaled units A = 1, resonant drive, stroboscopic readout
        let k = HyperfineConstants::scaled();
        let omega = 1.0 / ratio;
        let periods = (FRAC_PI_2 / omega / TAU).round();
        let t_end = periods * TAU;
        let steps = (periods as usize) * 64;
        let oz = Complex64::new(omega, 0.0);
        let s = HamiltonianSchedule::new(2, 0.0, t_end, |t| {
            clock_hamiltonian_lab(&k, 0.0, oz, 1.0, t).unwrap().into_matrix()
        })
        .unwrap();
        let out = evolve(&StateVector::basis(2, 0).unwrap(), &s, &IntegratorConfig::with_steps(steps)).unwrap();
        let rwa = (0.5 * omega * t_end).sin().powi(2);
        (out.populations()[1] - rwa).abs()
    }

    #[test]
    fn rwa_error_decreases_with_frequency_ratio() {
        let errs: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&r| rwa_error(r)).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn clock_lab_examples() {
        let k = HyperfineConstants::scaled();
        let h = clock_hamiltonian_lab(&k, 0.0, c(0.0), 1.0, 0.3).unwrap();
        assert!((h.matrix()[(0, 0)].re - 0.5).abs() < 1e-15 && h.matrix()[(0, 1)].norm() == 0.0);
        let h = clock_hamiltonian_lab(&k, 0.01, c(0.0), 1.0, 0.3).unwrap();
        assert!((h.matrix()[(0, 1)].re - 0.005 * k.mu_clock()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn beta_bounds(phi in -7.0f64..7.0, ratio in 0.0f64..20.0) {
            let b = beta(phi, ratio);
            prop_assert!(b >= ratio.min(1.0) - 1e-12 && b <= ratio.max(1.0) + 1e-12);
        }

        #[test]
        fn rabi_independent_of_theta(theta in -7.0f64..7.0, phi in -3.0f64..3.0, t in 0.0f64..10.0) {
            let e = PolarizationEllipse::in_xz_plane(1.0, 0.4, theta).unwrap();
            let p = effective_clock_hamiltonian(&e, &e.in_plane_direction(phi).unwrap(), 0.0).unwrap();
            let s = HamiltonianSchedule::constant(p.hamiltonian().into_matrix(), 0.0, t).unwrap();
            let out = evolve(&StateVector::basis(2, 0).unwrap(), &s, &IntegratorConfig::with_steps(1)).unwrap();
            prop_assert!((out.populations()[1] - rabi_probability(1.0, t, phi, 0.4).unwrap()).abs() < 1e-12);
        }
    }
}
