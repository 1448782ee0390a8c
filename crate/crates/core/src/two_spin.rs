//! Singlet/triplet pair with a drive on one spin.
//!
//! Product basis ordering is `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩` with spin 1 as the
//! left tensor factor. Adiabatic pulses use the projected generator with
//! spin-½ operators `σ/2`, so that `pulse_area * cos(chi) = π/2` is a
//! half-transfer pulse between the singlet and the zero-projection triplet.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, SQRT_2};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::dynamics::{
    expm, identity, kron, pauli_x, pauli_y, pauli_z, CMatrix, CVector, HamiltonianSchedule,
    HermitianOperator, IntegratorConfig, StateVector,
};
use crate::error::{Error, Result};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn on_first(op: &CMatrix) -> CMatrix {
    kron(op, &identity(2))
}

fn on_second(op: &CMatrix) -> CMatrix {
    kron(&identity(2), op)
}

/// Total spin component `(σ₁ʸ + σ₂ʸ)/2`.
pub fn total_spin_y() -> CMatrix {
    (on_first(&pauli_y()) + on_second(&pauli_y())) * c(0.5)
}

/// Total spin component `(σ₁ᶻ + σ₂ᶻ)/2`.
pub fn total_spin_z() -> CMatrix {
    (on_first(&pauli_z()) + on_second(&pauli_z())) * c(0.5)
}

pub fn singlet() -> CVector {
    let s = 1.0 / SQRT_2;
    CVector::from_vec(vec![c(0.0), c(s), c(-s), c(0.0)])
}

fn triplet_zero_z() -> CVector {
    let s = 1.0 / SQRT_2;
    CVector::from_vec(vec![c(0.0), c(s), c(s), c(0.0)])
}

pub fn labels() -> Vec<String> {
    ["uu", "ud", "du", "dd"].iter().map(|s| s.to_string()).collect()
}

/// Singlet/triplet basis quantized along a unit direction.
#[derive(Debug, Clone)]
pub struct SingletTripletBasis {
    /// `[T+, S, T0, T-]` as product-basis vectors.
    pub states: [CVector; 4],
}

impl SingletTripletBasis {
    pub fn along(direction: &Vector3<f64>) -> Result<Self> {
        let n = direction.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidArgument("direction must be non-zero and finite".into()));
        }
        let d = direction / n;
        let polar = d.z.clamp(-1.0, 1.0).acos();
        let azimuth = d.y.atan2(d.x);
        let r = expm(&(total_spin_z() * Complex64::new(0.0, -azimuth)))
            * expm(&(total_spin_y() * Complex64::new(0.0, -polar)));
        let up_up = CVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(0.0)]);
        let down_down = CVector::from_vec(vec![c(0.0), c(0.0), c(0.0), c(1.0)]);
        Ok(Self {
            states: [&r * up_up, &r * singlet(), &r * triplet_zero_z(), &r * down_down],
        })
    }
}

/// `B·(σ₁+σ₂) + Ω·σ₁` in the product basis.
pub fn hamiltonian_lab(b: &Vector3<f64>, omega: &Vector3<f64>) -> Result<HermitianOperator> {
    if b.iter().chain(omega.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("field vectors"));
    }
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    let mut h = CMatrix::zeros(4, 4);
    for k in 0..3 {
        let s1 = on_first(&paulis[k]);
        let s2 = on_second(&paulis[k]);
        h += (&s1 + s2) * c(b[k]) + s1 * c(omega[k]);
    }
    HermitianOperator::new(h)
}

fn clock_projector(alpha: f64) -> CMatrix {
    let r = expm(&(total_spin_y() * Complex64::new(0.0, -alpha)));
    let s = singlet();
    let t = &r * triplet_zero_z();
    &s * s.adjoint() + &t * t.adjoint()
}

fn projected_generator(alpha: f64, chi: f64, pulse_area: f64) -> CMatrix {
    let p = clock_projector(alpha);
    let drive = (on_first(&pauli_z()) * c(chi.cos()) + on_first(&pauli_x()) * c(chi.sin())) * c(0.5 * pulse_area);
    &p * drive * &p
}

/// `exp(i V(α))` with `V(α) = P(α)[½·area·(cosχ σ₁ᶻ + sinχ σ₁ˣ)]P(α)`.
pub fn adiabatic_pulse_unitary(alpha: f64, chi: f64, pulse_area: f64) -> Result<CMatrix> {
    if ![alpha, chi, pulse_area].iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("pulse parameters"));
    }
    Ok(expm(&(projected_generator(alpha, chi, pulse_area) * Complex64::new(0.0, 1.0))))
}

/// Singlet return probability of pulse / field rotation / pulse, computed
/// from 4×4 matrices. Requires `pulse_area * cos(chi) = π/2`.
pub fn sequence_prob_s_lab(chi: f64, phi: f64, pulse_area: f64) -> Result<f64> {
    if (pulse_area * chi.cos() - FRAC_PI_2).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "pulse_area * cos(chi) = {} but must equal π/2",
            pulse_area * chi.cos()
        )));
    }
    let a = chi + FRAC_PI_2 + phi;
    let rot = expm(&(total_spin_y() * Complex64::new(0.0, -a)));
    let u = adiabatic_pulse_unitary(a, chi, pulse_area)? * rot * adiabatic_pulse_unitary(0.0, chi, pulse_area)?;
    let s = singlet();
    let amp = s.dotc(&(u * &s));
    Ok(amp.norm_sqr().clamp(0.0, 1.0))
}

/// Pulse area for the half-transfer calibration at drive angle `chi`.
pub fn calibrated_area(chi: f64) -> Result<f64> {
    let cc = chi.cos();
    if cc.abs() < 1e-12 {
        return Err(Error::Singular("cos(chi) = 0".into()));
    }
    Ok(FRAC_PI_2 / cc)
}

/// Closed-form singlet probability `sin²(π/4 · (1 + sinφ/cosχ))`.
pub fn prob_s_closed(chi: f64, phi: f64) -> Result<f64> {
    let cc = chi.cos();
    if cc.abs() < 1e-12 {
        return Err(Error::Singular("cos(chi) = 0".into()));
    }
    Ok((FRAC_PI_4 * (1.0 + phi.sin() / cc)).sin().powi(2))
}

/// Static-field variant with quarter-area pulses:
/// `cos²((1 + cos(χ−φ)/cosχ) π/8)`.
pub fn prob_s_static(chi: f64, phi: f64) -> Result<f64> {
    let cc = chi.cos();
    if cc.abs() < 1e-12 {
        return Err(Error::Singular("cos(chi) = 0".into()));
    }
    Ok(((1.0 + (chi - phi).cos() / cc) * FRAC_PI_8).cos().powi(2))
}

/// Ramp and pulse geometry for the small-signal estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSpinConfig {
    pub b_initial: Vector3<f64>,
    /// Final bias field; its direction is the ramp target.
    pub b_final: Vector3<f64>,
    /// Small unknown field added to the final bias.
    pub delta: Vector3<f64>,
    pub chi: f64,
    pub pulse_area: f64,
}

impl TwoSpinConfig {
    pub fn validate(&self) -> Result<()> {
        let all = self.b_initial.iter().chain(self.b_final.iter()).chain(self.delta.iter());
        if all.chain([self.chi, self.pulse_area].iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("two-spin configuration"));
        }
        if self.b_final.norm() == 0.0 {
            return Err(Error::InvalidArgument("final field must be non-zero".into()));
        }
        Ok(())
    }

    pub fn omega_hat(&self) -> Vector3<f64> {
        Vector3::new(self.chi.sin(), 0.0, self.chi.cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxProbability {
    pub value: f64,
    /// Set when `|δ|/B_f >= 0.1`, outside the first-order regime.
    pub regime_warning: bool,
}

/// First-order expansion of the singlet probability in `δ/B_f`.
///
/// Pulses rotate about `ẑ` and then `b̂_f`; the perpendicular part of `δ`
/// tilts the second axis. Expanding `cos²(a + e)` gives `cos²a − sin(2a)·e`.
pub fn prob_s_approx(config: &TwoSpinConfig) -> Result<ApproxProbability> {
    config.validate()?;
    let bf = config.b_final.norm();
    let bhat = config.b_final / bf;
    let omega_t = config.omega_hat() * config.pulse_area;
    let perp = config.delta - bhat * config.delta.dot(&bhat);
    let a = 0.5 * (Vector3::z() + bhat).dot(&omega_t);
    let e = 0.5 * perp.dot(&omega_t) / bf;
    Ok(ApproxProbability {
        value: a.cos().powi(2) - (2.0 * a).sin() * e,
        regime_warning: config.delta.norm() / bf >= 0.1,
    })
}

/// Settings for the finite Gaussian-pulse check of the projected model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSequence {
    pub b: f64,
    /// Half-width of each pulse window in units of the Gaussian width.
    pub window_widths: f64,
    /// Duration of the field rotation, in units of `1/b`.
    pub rotation_time: f64,
    pub steps_per_period: usize,
}

impl Default for GaussianSequence {
    fn default() -> Self {
        Self {
            b: 1.0,
            window_widths: 6.0,
            rotation_time: 400.0,
            steps_per_period: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianOutcome {
    pub prob_s: f64,
    /// Largest population found outside the singlet / zero-triplet pair
    /// (quantized along the instantaneous field) at window edges.
    pub leakage: f64,
}

/// Integrates the pulse / rotation / pulse sequence in the lab frame with
/// Gaussian pulses of peak `0.01 b` and area `π/(2 cosχ)`.
pub fn gaussian_sequence(chi: f64, phi: f64, seq: &GaussianSequence) -> Result<GaussianOutcome> {
    let cc = chi.cos();
    if cc.abs() < 1e-12 {
        return Err(Error::Singular("cos(chi) = 0".into()));
    }
    let b = seq.b;
    let width = 25.0 * (std::f64::consts::TAU).sqrt() / (b * cc);
    let peak = 0.01 * b;
    let ohat = Vector3::new(chi.sin(), 0.0, cc);
    let half = seq.window_widths * width;
    let a = chi + FRAC_PI_2 + phi;
    let t_rot = seq.rotation_time / b;
    let t_pulse2 = 2.0 * half + t_rot;
    let t_end = 2.0 * t_pulse2 - 2.0 * half + 2.0 * half;
    let field_dir = move |t: f64| {
        let ang = if t <= 2.0 * half {
            0.0
        } else if t >= 2.0 * half + t_rot {
            a
        } else {
            let s = (t - 2.0 * half) / t_rot;
            a * s * s * (3.0 - 2.0 * s)
        };
        Vector3::new(ang.sin(), 0.0, ang.cos())
    };
    let envelope = move |t: f64| {
        let centre = if t < 2.0 * half { half } else if t > t_pulse2 { t_pulse2 + half } else { return 0.0 };
        let x = (t - centre) / width;
        peak * (-0.5 * x * x).exp()
    };
    let h = move |t: f64| {
        let bv = field_dir(t) * b;
        // pulse coupling uses spin-½ operators on spin 1
        hamiltonian_lab(&bv, &(ohat * (0.5 * envelope(t)))).map(|h| h.into_matrix()).unwrap_or_else(|_| CMatrix::from_element(4, 4, c(f64::NAN)))
    };
    let psi0 = StateVector::new(singlet(), labels())?;
    let mut leakage: f64 = 0.0;
    let mut psi = psi0;
    let segments = [(0.0, 2.0 * half), (2.0 * half, t_pulse2), (t_pulse2, t_end)];
    for &(t0, t1) in &segments {
        let sched = HamiltonianSchedule::new(4, t0, t1, &h)?;
        let cfg = IntegratorConfig::resolving(2.0 * b, t1 - t0, seq.steps_per_period, 16);
        psi = crate::dynamics::evolve(&psi, &sched, &cfg)?;
        let basis = SingletTripletBasis::along(&field_dir(t1))?;
        let outside = psi.overlap_probability(&basis.states[0]) + psi.overlap_probability(&basis.states[3]);
        leakage = leakage.max(outside);
    }
    Ok(GaussianOutcome {
        prob_s: psi.overlap_probability(&singlet()),
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::unitarity_defect;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};

    #[test]
    fn zeeman_eigenstructure() {
        let h = hamiltonian_lab(&Vector3::new(0.0, 0.0, 0.7), &Vector3::zeros()).unwrap();
        let basis = SingletTripletBasis::along(&Vector3::z()).unwrap();
        let want = [1.4, 0.0, 0.0, -1.4];
        for (v, e) in basis.states.iter().zip(want) {
            let hv = h.matrix() * v;
            assert!((hv - v * c(e)).norm() < 1e-14);
        }
    }

    #[test]
    fn drive_couples_singlet_to_zero_triplet_only_along_z() {
        let h = hamiltonian_lab(&Vector3::zeros(), &Vector3::new(0.0, 0.0, 0.3)).unwrap();
        let s = singlet();
        let t = triplet_zero_z();
        assert!((t.dotc(&(h.matrix() * &s)) - c(0.3)).norm() < 1e-15);
        assert!(s.dotc(&(h.matrix() * &s)).norm() < 1e-15);
        assert!(t.dotc(&(h.matrix() * &t)).norm() < 1e-15);
        let hx = hamiltonian_lab(&Vector3::zeros(), &Vector3::new(0.3, 0.0, 0.0)).unwrap();
        assert!(t.dotc(&(hx.matrix() * &s)).norm() < 1e-15);
    }

    #[test]
    fn clock_coupling_is_projection_on_field() {
        // direct matrix element against the rule (Ω·b̂)
        let w = 0.2;
        let chi: f64 = 0.7;
        let h = hamiltonian_lab(&Vector3::new(0.0, 0.0, 1.3), &Vector3::new(w * chi.sin(), 0.0, w * chi.cos())).unwrap();
        let m = triplet_zero_z().dotc(&(h.matrix() * singlet()));
        assert!((m.re - w * chi.cos()).abs() < 1e-15 && m.im.abs() < 1e-15);
    }

    #[test]
    fn half_transfer_pulse() {
        let chi = 0.4;
        let u = adiabatic_pulse_unitary(0.0, chi, calibrated_area(chi).unwrap()).unwrap();
        let p = (singlet().dotc(&(u * singlet()))).norm_sqr();
        assert!((p - 0.5).abs() < 1e-14);
        let id = adiabatic_pulse_unitary(0.3, chi, 0.0).unwrap();
        assert!((id - identity(4)).norm() < 1e-15);
    }

    #[test]
    fn pulse_is_unitary_and_confined() {
        let u = adiabatic_pulse_unitary(1.1, 0.3, 2.7).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        let basis = SingletTripletBasis::along(&Vector3::new(1.1f64.sin(), 0.0, 1.1f64.cos())).unwrap();
        for input in [&basis.states[1], &basis.states[2]] {
            let out = &u * input;
            let leak = basis.states[0].dotc(&out).norm_sqr() + basis.states[3].dotc(&out).norm_sqr();
            assert!(leak < 1e-28);
        }
    }

    #[test]
    fn lab_sequence_matches_closed_form() {
        for chi in [0.0, FRAC_PI_6, FRAC_PI_3] {
            let area = calibrated_area(chi).unwrap();
            for k in 0..13 {
                let phi = -PI + k as f64 * PI / 6.0;
                let a = sequence_prob_s_lab(chi, phi, area).unwrap();
                let b = prob_s_closed(chi, phi).unwrap();
                assert!((a - b).abs() < 1e-8, "chi {chi} phi {phi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn calibration_enforced() {
        assert!(sequence_prob_s_lab(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_values() {
        assert!((prob_s_closed(0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((prob_s_closed(0.0, FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(prob_s_closed(FRAC_PI_2, 0.1), Err(Error::Singular(_))));
    }

    #[test]
    fn approximation_tracks_closed_form() {
        // δ antiparallel to Ω̂ tilts the field by φ = |δ|/B_f in the positive sense
        let chi = 0.5;
        let area = calibrated_area(chi).unwrap();
        let omega_hat = Vector3::new(chi.sin(), 0.0, chi.cos());
        let b_final = Vector3::new(chi.cos(), 0.0, -chi.sin());
        for &eps in &[1e-4, 1e-3, 1e-2] {
            let cfg = TwoSpinConfig {
                b_initial: Vector3::new(0.0, 0.0, 100.0),
                b_final,
                delta: -omega_hat * eps,
                chi,
                pulse_area: area,
            };
            let approx = prob_s_approx(&cfg).unwrap();
            let exact = prob_s_closed(chi, eps).unwrap();
            assert!(!approx.regime_warning);
            assert!((approx.value - exact).abs() < 2.0 * eps * eps, "eps {eps}");
            let slope = (approx.value - 0.5) / eps;
            assert!((slope - area / 2.0).abs() < 1e-9, "slope {slope}");
        }
    }

    #[test]
    fn approximation_flags_regime() {
        let cfg = TwoSpinConfig {
            b_initial: Vector3::new(0.0, 0.0, 100.0),
            b_final: Vector3::new(1.0, 0.0, 0.0),
            delta: Vector3::new(0.0, 0.0, 0.2),
            chi: 0.0,
            pulse_area: FRAC_PI_2,
        };
        assert!(prob_s_approx(&cfg).unwrap().regime_warning);
    }

    #[test]
    fn static_scheme_half_sensitivity_per_transverse_signal() {
        for chi in [0.3, 0.7, 1.2] {
            let h = 1e-5;
            let d_static = (prob_s_static(chi, h).unwrap() - prob_s_static(chi, -h).unwrap()) / (2.0 * h);
            let d_dyn = (prob_s_closed(chi, h).unwrap() - prob_s_closed(chi, -h).unwrap()) / (2.0 * h);
            // a transverse signal δ_x tilts the dynamic field by δ_x·sinχ along Ω̂
            let ratio = d_static.abs() / (d_dyn.abs() * chi.sin());
            assert!((ratio - 0.5).abs() < 1e-6, "chi {chi}: {ratio}");
        }
        let direct = ((1.0 + (FRAC_PI_4 - FRAC_PI_4).cos() / FRAC_PI_4.cos()) * FRAC_PI_8).cos().powi(2);
        assert_eq!(prob_s_static(FRAC_PI_4, FRAC_PI_4).unwrap(), direct);
    }

    #[test]
    fn extremum_moves_toward_zero_with_chi() {
        let mut last = f64::INFINITY;
        for chi in [0.0f64, 0.3, 0.6, 0.9, 1.2, 1.5] {
            let loc = chi.cos().asin();
            assert!((prob_s_closed(chi, loc).unwrap() - 1.0).abs() < 1e-12);
            assert!(loc < last);
            last = loc;
        }
    }

    #[test]
    fn gaussian_pulses_reproduce_projection_model() {
        let seq = GaussianSequence::default();
        for (chi, phi) in [(0.0, 0.3), (FRAC_PI_6, -0.4)] {
            let out = gaussian_sequence(chi, phi, &seq).unwrap();
            let want = prob_s_closed(chi, phi).unwrap();
            assert!(out.leakage <= 0.01, "leakage {}", out.leakage);
            assert!((out.prob_s - want).abs() < 0.01, "chi {chi} phi {phi}: {} vs {want}", out.prob_s);
        }
    }

    proptest! {
        #[test]
        fn slope_grows_with_chi(chi1 in 0.0f64..1.4, dchi in 0.01f64..0.15) {
            let chi2 = chi1 + dchi;
            let h = 1e-6;
            let s = |chi: f64| (prob_s_closed(chi, h).unwrap() - prob_s_closed(chi, -h).unwrap()) / (2.0 * h);
            prop_assert!(s(chi2) > s(chi1));
        }

        #[test]
        fn lab_probability_in_unit_interval(chi in -1.4f64..1.4, phi in -3.2f64..3.2) {
            let p = sequence_prob_s_lab(chi, phi, calibrated_area(chi).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p - prob_s_closed(chi, phi).unwrap()).abs() < 1e-8);
        }
    }
}
