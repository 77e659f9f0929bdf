//! Channel matrix builders.
//!
//! All phases are evaluated as "cycles" and reduced modulo 1 before the
//! multiplication by 2π. The line-of-sight phase `r/λ` is several thousand
//! cycles at desk-scale parameters, and reducing first keeps the argument
//! passed to `sin`/`cos` inside one period.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{distance, ClusterParams, DerivedParams, NodePositions};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// How a [`ComplexMatrix`] was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatrixKind {
    /// `h_jk = exp(2πi r_jk/λ) / r_jk`.
    Los,
    /// `√(nP) · h_jk`.
    LosNormalized,
    /// Quadratic Taylor approximation of the line-of-sight phase.
    PhaseFactored,
    /// `g_jk = exp(-2πi m y_j z_k)`.
    KernelG,
    Vandermonde,
    RandomDft,
    /// Anything built by hand, e.g. in tests.
    Generic,
}

/// Dense row-major complex matrix tagged with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
    kind: MatrixKind,
}

impl ComplexMatrix {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>, kind: MatrixKind) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, entries, kind })
    }

    pub fn from_fn(rows: usize, cols: usize, kind: MatrixKind, f: impl Fn(usize, usize) -> Complex64 + Sync) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); rows * cols];
        if cols > 0 {
            entries.par_chunks_mut(cols).enumerate().for_each(|(j, row)| {
                for (k, e) in row.iter_mut().enumerate() {
                    *e = f(j, k);
                }
            });
        }
        Self { rows, cols, entries, kind }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, MatrixKind::Generic, |j, k| {
            if j == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Frobenius norm squared, i.e. the trace of `M M*`.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `| |m_jk| - 1 |` over all entries.
    pub fn max_unimodular_deviation(&self) -> f64 {
        self.entries.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn scaled(&self, factor: f64, kind: MatrixKind) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
            kind,
        }
    }
}

/// Receiver and transmitter phases (in cycles) of the phase-factored matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFactors {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// `exp(2πi t)` with `t` reduced modulo 1 first.
#[inline]
pub fn unit_phase(cycles: f64) -> Complex64 {
    let frac = cycles - cycles.floor();
    Complex64::from_polar(1.0, TAU * frac)
}

#[inline]
fn frac(t: f64) -> f64 {
    t - t.floor()
}

pub fn build_los_matrix(pos: &NodePositions, params: &ClusterParams) -> Result<ComplexMatrix> {
    params.validate()?;
    let n = pos.len();
    let lambda = params.lambda;
    Ok(ComplexMatrix::from_fn(n, n, MatrixKind::Los, |j, k| {
        let r = distance(params, pos.x[j], pos.w[k], pos.y[j], pos.z[k]);
        unit_phase(r / lambda) / r
    }))
}

/// Scales a line-of-sight matrix by `√(nP)`, so that its Gram matrix is
/// `nP·HH*`.
pub fn normalize_los(h: &ComplexMatrix, derived: &DerivedParams, n: usize) -> Result<ComplexMatrix> {
    if h.kind != MatrixKind::Los {
        return Err(Error::KindMismatch { expected: MatrixKind::Los, found: h.kind });
    }
    let factor = (n as f64 * derived.p).sqrt();
    Ok(h.scaled(factor, MatrixKind::LosNormalized))
}

/// `g_jk = exp(-2πi m y_j z_k)`. `m = 0` is accepted and gives the all-ones
/// matrix.
pub fn build_g_matrix(pos: &NodePositions, m: f64) -> Result<ComplexMatrix> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("m must be non-negative and finite, got {m}")));
    }
    Ok(kernel_matrix(&pos.y, &pos.z, m))
}

pub(crate) fn kernel_matrix(y: &[f64], z: &[f64], m: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(y.len(), z.len(), MatrixKind::KernelG, |j, k| unit_phase(-m * y[j] * z[k]))
}

/// Quadratic Taylor approximation of the line-of-sight phases,
/// `h̃_jk = exp(2πi (u_j + v_k - m y_j z_k))`, together with the phases
/// `u`, `v` that make `H̃ = diag(e^{2πi u}) · G · diag(e^{2πi v})`.
pub fn build_phase_factored(pos: &NodePositions, params: &ClusterParams) -> Result<(ComplexMatrix, PhaseFactors)> {
    let derived = params.derive()?;
    let side = params.area_a.sqrt();
    let curvature = params.area_a / params.dist_d;
    let phase = |lateral: f64, vertical: f64| {
        (params.dist_d / 2.0 + side * lateral + curvature * vertical * vertical / 2.0) / params.lambda
    };
    let u: Vec<f64> = pos.x.iter().zip(&pos.y).map(|(&x, &y)| phase(x, y)).collect();
    let v: Vec<f64> = pos.w.iter().zip(&pos.z).map(|(&w, &z)| phase(w, z)).collect();

    let u_red: Vec<f64> = u.iter().map(|&t| frac(t)).collect();
    let v_red: Vec<f64> = v.iter().map(|&t| frac(t)).collect();
    let m = derived.m;
    let n = pos.len();
    let matrix = ComplexMatrix::from_fn(n, n, MatrixKind::PhaseFactored, |j, k| {
        unit_phase(u_red[j] + v_red[k] + frac(-m * pos.y[j] * pos.z[k]))
    });
    Ok((matrix, PhaseFactors { u, v }))
}

/// `diag(e^{2πi u}) · G · diag(e^{2πi v})`, entry by entry.
pub fn apply_phase_factors(g: &ComplexMatrix, phases: &PhaseFactors) -> Result<ComplexMatrix> {
    if phases.u.len() != g.rows || phases.v.len() != g.cols {
        return Err(Error::DimensionMismatch(format!(
            "phases of lengths {}/{} for a {}x{} matrix",
            phases.u.len(),
            phases.v.len(),
            g.rows,
            g.cols
        )));
    }
    let du: Vec<Complex64> = phases.u.iter().map(|&t| unit_phase(t)).collect();
    let dv: Vec<Complex64> = phases.v.iter().map(|&t| unit_phase(t)).collect();
    Ok(ComplexMatrix::from_fn(g.rows, g.cols, MatrixKind::Generic, |j, k| du[j] * g.get(j, k) * dv[k]))
}

/// Deterministic-row variant: `exp(-2πi m (j/n) z_k)` for `j = 0..n`.
pub fn build_vandermonde_variant(z: &[f64], m: f64, n: usize) -> Result<ComplexMatrix> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("m must be positive, got {m}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    Ok(ComplexMatrix::from_fn(n, z.len(), MatrixKind::Vandermonde, |j, k| {
        unit_phase(-m * (j as f64 / nf) * z[k])
    }))
}

/// `exp(-2πi j l_k / n)` for the given frequencies `l_k ∈ {1..n}`, rows
/// `j = 0..n`.
pub fn build_dft_columns(n: usize, frequencies: &[usize]) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if let Some(&bad) = frequencies.iter().find(|&&l| l == 0 || l > n) {
        return Err(Error::InvalidParameter(format!("frequency {bad} outside 1..={n}")));
    }
    let nf = n as f64;
    Ok(ComplexMatrix::from_fn(n, frequencies.len(), MatrixKind::RandomDft, |j, k| {
        let residue = (j as u128 * frequencies[k] as u128 % n as u128) as f64;
        unit_phase(-residue / nf)
    }))
}

/// Draws `m_count` distinct frequencies uniformly from `{1..n}` and builds
/// the corresponding `n x m_count` partial DFT matrix.
pub fn build_random_dft_variant(n: usize, m_count: usize, seed: u64) -> Result<(ComplexMatrix, Vec<usize>)> {
    if m_count == 0 || m_count > n {
        return Err(Error::InvalidParameter(format!("m_count must lie in 1..={n}, got {m_count}")));
    }
    let mut rng = rng_from_seed(seed);
    let frequencies: Vec<usize> = index::sample(&mut rng, n, m_count).into_iter().map(|l| l + 1).collect();
    let matrix = build_dft_columns(n, &frequencies)?;
    Ok((matrix, frequencies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_network;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn los_modulus_is_inverse_distance() {
        let params = ClusterParams::new(40, 10_000.0, 300.0, 0.1).unwrap();
        let pos = sample_network(&params, 3).unwrap();
        let h = build_los_matrix(&pos, &params).unwrap();
        assert_eq!(h.kind(), MatrixKind::Los);
        for j in 0..40 {
            for k in 0..40 {
                let r = crate::model::pairwise_distance(&pos, &params, j, k).unwrap();
                assert!((h.get(j, k).norm() * r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn los_entry_is_real_for_integer_wavelengths() {
        // r = d = 300 = 3000 λ exactly
        let params = ClusterParams::new(1, 10_000.0, 300.0, 0.1).unwrap();
        let pos = NodePositions::from_coordinates(vec![0.0], vec![0.5], vec![0.0], vec![0.5]).unwrap();
        let h = build_los_matrix(&pos, &params).unwrap().get(0, 0);
        assert!(h.re > 0.0);
        assert!(h.im.abs() < 1e-12 * h.re);
        assert!((h.re - 1.0 / 300.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_scale() {
        let params = ClusterParams::reference_scenario();
        let derived = params.derive().unwrap();
        let pos = NodePositions::from_coordinates(vec![0.0], vec![0.0], vec![0.0], vec![0.0]).unwrap();
        let h = build_los_matrix(&pos, &ClusterParams { n: 1, ..params }).unwrap();
        let scaled = normalize_los(&h, &derived, 500).unwrap();
        assert_eq!(scaled.kind(), MatrixKind::LosNormalized);
        assert!((scaled.get(0, 0).norm() / h.get(0, 0).norm() - 400.0).abs() < 1e-9);

        let unit = DerivedParams { m: 1.0, p: 1.0 };
        assert_eq!(normalize_los(&h, &unit, 1).unwrap().entries(), h.entries());
        assert!(matches!(normalize_los(&scaled, &derived, 500), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn normalized_amplitude_is_order_one() {
        let params = ClusterParams::reference_scenario();
        let derived = params.derive().unwrap();
        let pos = sample_network(&params, 5).unwrap();
        let hn = normalize_los(&build_los_matrix(&pos, &params).unwrap(), &derived, params.n).unwrap();
        let mut moduli: Vec<f64> = hn.entries().iter().map(|z| z.norm()).collect();
        moduli.sort_by(f64::total_cmp);
        let median = moduli[moduli.len() / 2];
        assert!((0.25..=4.0).contains(&median), "median {median}");
    }

    #[test]
    fn g_matrix_properties() {
        let pos = NodePositions::from_coordinates(
            vec![0.1, 0.2, 0.3],
            vec![0.0, 0.4, 0.9],
            vec![0.5, 0.6, 0.7],
            vec![0.25, 0.5, 0.75],
        )
        .unwrap();
        let g = build_g_matrix(&pos, 7.3).unwrap();
        assert_eq!(g.kind(), MatrixKind::KernelG);
        assert!(g.row(0).iter().all(|&e| e == c(1.0, 0.0)));
        assert!(g.max_unimodular_deviation() < 1e-12);
        let ones = build_g_matrix(&pos, 0.0).unwrap();
        assert!(ones.entries().iter().all(|&e| e == c(1.0, 0.0)));
        assert!(build_g_matrix(&pos, -1.0).is_err());
    }

    #[test]
    fn phase_factored_with_zero_offsets_is_constant() {
        let params = ClusterParams::new(3, 10_000.0, 300.05, 0.1).unwrap();
        let zeros = vec![0.0; 3];
        let pos = NodePositions::from_coordinates(zeros.clone(), zeros.clone(), zeros.clone(), zeros).unwrap();
        let (ht, _) = build_phase_factored(&pos, &params).unwrap();
        let expected = unit_phase(300.05 / 0.1);
        for e in ht.entries() {
            assert!((e - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn phase_factorization_is_exact() {
        let params = ClusterParams::reference_scenario();
        let pos = sample_network(&ClusterParams { n: 60, ..params }, 9).unwrap();
        let params = ClusterParams { n: 60, ..params };
        let (ht, phases) = build_phase_factored(&pos, &params).unwrap();
        assert_eq!(ht.kind(), MatrixKind::PhaseFactored);
        let g = build_g_matrix(&pos, params.derive().unwrap().m).unwrap();
        let rebuilt = apply_phase_factors(&g, &phases).unwrap();
        let dev = ht
            .entries()
            .iter()
            .zip(rebuilt.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "deviation {dev}");
        assert!(ht.max_unimodular_deviation() < 1e-14);
    }

    #[test]
    fn vandermonde_patterns() {
        let z = [0.0, 0.25, 0.5, 0.75];
        let v = build_vandermonde_variant(&z, 4.0, 4).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let expected = unit_phase(-((j * k) as f64) / 4.0);
                assert!((v.get(j, k) - expected).norm() < 1e-15);
            }
        }
        assert!(v.row(0).iter().all(|&e| e == c(1.0, 0.0)));
        assert!((0..4).all(|j| v.get(j, 0) == c(1.0, 0.0)));
        assert_eq!(v.kind(), MatrixKind::Vandermonde);
    }

    #[test]
    fn dft_single_column_alternates() {
        let d = build_dft_columns(8, &[4]).unwrap();
        for j in 0..8 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!((d.get(j, 0) - c(sign, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn random_dft_draws() {
        let (d, ls) = build_random_dft_variant(16, 16, 1).unwrap();
        let mut sorted = ls.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (1..=16).collect::<Vec<_>>());
        let full = build_dft_columns(16, &(1..=16).collect::<Vec<_>>()).unwrap();
        for (k, &l) in ls.iter().enumerate() {
            for j in 0..16 {
                assert_eq!(d.get(j, k), full.get(j, l - 1));
            }
        }
        let (d, _) = build_random_dft_variant(32, 5, 2).unwrap();
        for k in 0..5 {
            let norm_sq: f64 = (0..32).map(|j| d.get(j, k).norm_sqr()).sum();
            assert!((norm_sq.sqrt() - 32f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(build_random_dft_variant(32, 5, 2).unwrap().1, build_random_dft_variant(32, 5, 2).unwrap().1);
        assert!(build_random_dft_variant(4, 0, 1).is_err());
        assert!(build_random_dft_variant(4, 5, 1).is_err());
    }

    #[test]
    fn constructor_validation() {
        assert!(ComplexMatrix::from_row_major(2, 2, vec![c(0.0, 0.0); 3], MatrixKind::Generic).is_err());
        assert!(ComplexMatrix::from_row_major(1, 1, vec![c(f64::NAN, 0.0)], MatrixKind::Generic).is_err());
    }
}
