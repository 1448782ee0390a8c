use num_complex::Complex64;

use super::operator::{identity, CMatrix, HermitianOperator};
use crate::error::{Error, Result};

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let scaled = a * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..40 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-i H dt)` for a Hermitian 2×2 matrix, via the Pauli decomposition.
pub(crate) fn exp_2x2(h: &CMatrix, dt: f64) -> CMatrix {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let ax = h[(0, 1)].re;
    let ay = -h[(0, 1)].im;
    let r = (ax * ax + ay * ay + az * az).sqrt();
    let angle = r * dt;
    let (s, co) = angle.sin_cos();
    // sin(r dt)/r with the r -> 0 limit
    let sr = if r * dt.abs() < 1e-8 {
        dt * (1.0 - angle * angle / 6.0)
    } else {
        s / r
    };
    let ph = Complex64::from_polar(1.0, -a0 * dt);
    let i = Complex64::new(0.0, 1.0);
    let m00 = Complex64::new(co, 0.0) - i * az * sr;
    let m11 = Complex64::new(co, 0.0) + i * az * sr;
    let m01 = -i * sr * Complex64::new(ax, -ay);
    let m10 = -i * sr * Complex64::new(ax, ay);
    CMatrix::from_row_slice(2, 2, &[m00 * ph, m01 * ph, m10 * ph, m11 * ph])
}

pub(crate) fn step_unitary_unchecked(h: &CMatrix, dt: f64) -> CMatrix {
    if h.nrows() == 2 {
        exp_2x2(h, dt)
    } else {
        expm(&(h * Complex64::new(0.0, -dt)))
    }
}

/// One-step propagator `exp(-i H dt)`.
pub fn unitary_of_step(h: &HermitianOperator, dt: f64) -> Result<CMatrix> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("time step"));
    }
    Ok(step_unitary_unchecked(h.matrix(), dt))
}
