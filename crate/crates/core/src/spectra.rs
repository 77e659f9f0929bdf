//! Gram spectra, log-det capacities and effective dof counts.

use serde::{Deserialize, Serialize};

use crate::channel::{ComplexMatrix, MatrixKind};
use crate::linalg::{gram, hermitian_eigen_with_residual, hermitian_eigenvalues};
use crate::{Error, Result};

/// Relative tolerance under which negative Gram eigenvalues are treated as
/// rounding noise.
pub const NEGATIVE_TOLERANCE: f64 = 1e-8;

/// Eigenvalues of a Gram matrix `M M*`, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Largest `‖Gv - λv‖` over the computed eigenpairs. `None` when only
    /// eigenvalues were requested.
    pub max_residual: Option<f64>,
    pub source_kind: MatrixKind,
    /// Trace of the Gram matrix, `Σ|m_jk|²`.
    pub trace: f64,
}

impl Spectrum {
    /// Wraps an explicit eigenvalue list, sorting it descending.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, source_kind: MatrixKind) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let trace = eigenvalues.iter().sum();
        Self { eigenvalues, max_residual: None, source_kind, trace }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Absolute clamp tolerance `1e-8 · λ_max`.
    pub fn tolerance(&self) -> f64 {
        NEGATIVE_TOLERANCE * self.max().max(0.0)
    }

    /// Spectrum of `c · M M*`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|v| v * factor).collect(),
            max_residual: self.max_residual.map(|r| r * factor.abs()),
            source_kind: self.source_kind,
            trace: self.trace * factor,
        }
    }

    pub fn eigenvalue_sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

fn finish(mut ascending: Vec<f64>, max_residual: Option<f64>, m: &ComplexMatrix) -> Spectrum {
    ascending.reverse();
    Spectrum { eigenvalues: ascending, max_residual, source_kind: m.kind(), trace: m.frobenius_sq() }
}

/// Full Hermitian eigendecomposition of `M M*`, with residual diagnostics.
pub fn gram_spectrum(m: &ComplexMatrix) -> Result<Spectrum> {
    let (values, residual) = hermitian_eigen_with_residual(&gram(m))?;
    Ok(finish(values, Some(residual), m))
}

/// Eigenvalues of `M M*` only; cheaper, used inside Monte Carlo loops.
pub fn gram_eigenvalues(m: &ComplexMatrix) -> Result<Spectrum> {
    let values = hermitian_eigenvalues(&gram(m))?;
    Ok(finish(values, None, m))
}

/// Logarithm base used when reporting capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

/// `Σ_k ln(1 + λ_k)`, in nats. Eigenvalues in `[-tol, 0)` count as zero.
pub fn log_det_capacity(spec: &Spectrum) -> Result<f64> {
    let tol = spec.tolerance();
    let mut total = 0.0;
    for &value in &spec.eigenvalues {
        if value < -tol {
            return Err(Error::InconsistentSpectrum { value, tol });
        }
        total += value.max(0.0).ln_1p();
    }
    Ok(total)
}

/// Number of eigenvalues `≥ threshold`.
pub fn effective_dof(spec: &Spectrum, threshold: f64) -> usize {
    spec.eigenvalues.iter().take_while(|&&v| v >= threshold).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub eigenvalues_a: Vec<f64>,
    pub eigenvalues_b: Vec<f64>,
    pub capacity_a: f64,
    pub capacity_b: f64,
    /// `capacity_a / capacity_b`; 1 when both vanish.
    pub ratio: f64,
    pub threshold: f64,
    pub dof_a: usize,
    pub dof_b: usize,
}

pub fn compare_spectra(a: &Spectrum, b: &Spectrum, threshold: f64) -> Result<ComparisonReport> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("spectra of sizes {} and {}", a.len(), b.len())));
    }
    let capacity_a = log_det_capacity(a)?;
    let capacity_b = log_det_capacity(b)?;
    Ok(ComparisonReport {
        eigenvalues_a: a.eigenvalues.clone(),
        eigenvalues_b: b.eigenvalues.clone(),
        capacity_a,
        capacity_b,
        ratio: capacity_ratio(capacity_a, capacity_b),
        threshold,
        dof_a: effective_dof(a, threshold),
        dof_b: effective_dof(b, threshold),
    })
}

pub(crate) fn capacity_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}
