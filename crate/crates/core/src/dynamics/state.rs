use num_complex::Complex64;

use super::operator::CVector;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;

/// Normalized pure state with basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
    labels: Vec<String>,
}

impl StateVector {
    pub fn new(amplitudes: CVector, labels: Vec<String>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "state needs at least 2 amplitudes, got {}",
                amplitudes.len()
            )));
        }
        if labels.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: amplitudes.len(),
                got: labels.len(),
            });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} differs from 1"
            )));
        }
        Ok(Self { amplitudes, labels })
    }

    /// Normalizes `amplitudes` first; fails only on a zero or non-finite vector.
    pub fn normalized(amplitudes: CVector, labels: Vec<String>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize zero vector".into()));
        }
        Self::new(amplitudes / Complex64::new(norm, 0.0), labels)
    }

    /// Basis state `index` with labels `0..dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v, (0..dim).map(|i| i.to_string()).collect())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// |⟨target|ψ⟩|².
    pub fn overlap_probability(&self, target: &CVector) -> f64 {
        target.dotc(&self.amplitudes).norm_sqr()
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: CVector) -> Self {
        Self {
            amplitudes,
            labels: self.labels.clone(),
        }
    }
}
