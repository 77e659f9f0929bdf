//! Randomized experiments.
//!
//! Trial `t` of a run seeded with `s` draws from `sub_seed(s, t)`, so results
//! do not depend on scheduling and extending a run leaves earlier trials
//! untouched. Trials run on the rayon pool; results are collected in trial
//! order and reduced by pairwise summation.

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_g_matrix, build_los_matrix, build_phase_factored, kernel_matrix, normalize_los};
use crate::fredholm::FredholmTable;
use crate::linalg::det_in_place;
use crate::model::{dof_reference, sample_network, ClusterParams, DerivedParams};
use crate::rng::{rng_from_seed, sub_seed};
use crate::spectra::{capacity_ratio, effective_dof, gram_eigenvalues, log_det_capacity};
use crate::{Error, Result};

/// Identity checks flag a violation beyond this many standard errors.
pub const VIOLATION_Z: f64 = 5.0;

/// Relative agreement below which a Monte Carlo mean counts as exact.
pub const EXACT_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single
/// value).
pub(crate) fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let deviations: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (pairwise_sum(&deviations) / (n - 1.0)).sqrt())
}

impl McEstimate {
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let (mean, std) = mean_and_std(values);
        Self { mean, std_error: std / (values.len() as f64).sqrt(), trials: values.len(), seed }
    }
}

fn run_trials<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..trials as u64).into_par_iter().map(|t| f(sub_seed(seed, t))).collect()
}

fn try_run_trials<T, F>(trials: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    run_trials(trials, seed, f).into_iter().collect()
}

/// `det(G G*) = |det G|²` for a `k x k` kernel block with fresh uniform
/// `y_1..y_k`, `z_1..z_k`.
fn subdeterminant_sample(k: usize, m: f64, trial_seed: u64) -> f64 {
    let mut rng = rng_from_seed(trial_seed);
    let y: Vec<f64> = (0..k).map(|_| rng.random()).collect();
    let z: Vec<f64> = (0..k).map(|_| rng.random()).collect();
    let g = kernel_matrix(&y, &z, m);
    let mut scratch: Vec<Complex64> = g.entries().to_vec();
    det_in_place(&mut scratch, k).norm_sqr()
}

/// Monte Carlo estimate of `E[det(G_k G_k*)]`.
pub fn expected_subdeterminant_mc(k: usize, m: f64, trials: usize, seed: u64) -> Result<McEstimate> {
    if k == 0 || trials == 0 {
        return Err(Error::InvalidParameter(format!("need k ≥ 1 and trials ≥ 1, got k={k}, trials={trials}")));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("m must be non-negative, got {m}")));
    }
    let samples = run_trials(trials, seed, |s| subdeterminant_sample(k, m, s));
    Ok(McEstimate::from_samples(&samples, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub k: usize,
    pub m: f64,
    pub mc: McEstimate,
    pub d_k: f64,
    /// `(k!)² m^{-k} d_k`.
    pub analytic: f64,
    pub z_score: f64,
    pub violation: bool,
}

/// `(mc - analytic) / std_error`; 0 when the two agree to
/// [`EXACT_MATCH_TOL`], ±∞ when they differ and the estimate has no spread.
pub fn z_score(mc: &McEstimate, analytic: f64) -> f64 {
    let diff = mc.mean - analytic;
    if diff.abs() <= EXACT_MATCH_TOL * analytic.abs().max(1.0) {
        0.0
    } else if mc.std_error > 0.0 {
        diff / mc.std_error
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Compares the simulated `E[det(G_k G_k*)]` with `(k!)² m^{-k} d_k` taken
/// from `table`.
pub fn fredholm_identity_check(k: usize, trials: usize, seed: u64, table: &FredholmTable) -> Result<IdentityReport> {
    let analytic = table.expected_subdeterminant(k).ok_or_else(|| {
        Error::InsufficientData(format!("table holds d_k up to k = {}, need {k}", table.dk.len().saturating_sub(1)))
    })?;
    let mc = expected_subdeterminant_mc(k, table.m, trials, seed)?;
    let z = z_score(&mc, analytic);
    Ok(IdentityReport { k, m: table.m, mc, d_k: table.dk[k], analytic, z_score: z, violation: z.abs() > VIOLATION_Z })
}

/// Which matrix plays the role of the normalized channel in the claim
/// experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    /// `√(nP) H` from the exact line-of-sight distances.
    #[default]
    Los,
    /// The quadratic-phase matrix `H̃`.
    PhaseFactored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimTrial {
    pub seed: u64,
    /// `ln det(I + nP HH*)` (or of `H̃`).
    pub logdet_h: f64,
    /// `ln det(I + GG*)`.
    pub logdet_g: f64,
    pub ratio: f64,
    pub dof_h: usize,
    pub dof_g: usize,
    pub eigenvalues_h: Vec<f64>,
    pub eigenvalues_g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub params: ClusterParams,
    pub derived: DerivedParams,
    pub in_regime: bool,
    pub source: ChannelSource,
    pub threshold: f64,
    pub seed: u64,
    pub trials: Vec<ClaimTrial>,
    pub ratio: McEstimate,
}

/// One instance of the channel/kernel comparison on shared positions.
pub fn claim_trial(params: &ClusterParams, trial_seed: u64, threshold: f64, source: ChannelSource) -> Result<ClaimTrial> {
    let derived = params.derive()?;
    let pos = sample_network(params, trial_seed)?;
    let h = match source {
        ChannelSource::Los => normalize_los(&build_los_matrix(&pos, params)?, &derived, params.n)?,
        ChannelSource::PhaseFactored => build_phase_factored(&pos, params)?.0,
    };
    let g = build_g_matrix(&pos, derived.m)?;
    let spec_h = gram_eigenvalues(&h)?;
    let spec_g = gram_eigenvalues(&g)?;
    let logdet_h = log_det_capacity(&spec_h)?;
    let logdet_g = log_det_capacity(&spec_g)?;
    Ok(ClaimTrial {
        seed: trial_seed,
        logdet_h,
        logdet_g,
        ratio: capacity_ratio(logdet_h, logdet_g),
        dof_h: effective_dof(&spec_h, threshold),
        dof_g: effective_dof(&spec_g, threshold),
        eigenvalues_h: spec_h.eigenvalues,
        eigenvalues_g: spec_g.eigenvalues,
    })
}

/// Per-trial comparison of `ln det(I + nP HH*)` and `ln det(I + GG*)`.
pub fn claim_sim_experiment(
    params: &ClusterParams,
    trials: usize,
    seed: u64,
    threshold: f64,
    source: ChannelSource,
) -> Result<ClaimReport> {
    let derived = params.derive()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let in_regime = params.in_regime();
    if !in_regime {
        log::warn!("claim experiment outside √A ≤ d ≤ A/λ: {params:?}");
    }
    let results = try_run_trials(trials, seed, |s| claim_trial(params, s, threshold, source))?;
    let ratios: Vec<f64> = results.iter().map(|t| t.ratio).collect();
    Ok(ClaimReport {
        params: *params,
        derived,
        in_regime,
        source,
        threshold,
        seed,
        ratio: McEstimate::from_samples(&ratios, seed),
        trials: results,
    })
}

/// A `(n, m)` pair; the kernel matrix depends on nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub n: usize,
    pub m: f64,
}

impl KernelPoint {
    pub fn from_params(params: &ClusterParams) -> Result<Self> {
        Ok(Self { n: params.n, m: params.derive()?.m })
    }
}

/// `ln det(I + GG*)` for the kernel matrix with the given coordinates.
pub fn logdet_kernel(y: &[f64], z: &[f64], m: f64) -> Result<f64> {
    let g = kernel_matrix(y, z, m);
    log_det_capacity(&gram_eigenvalues(&g)?)
}

fn sample_kernel_coordinates(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let y = (0..n).map(|_| rng.random()).collect();
    let z = (0..n).map(|_| rng.random()).collect();
    (y, z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub n: usize,
    pub m: f64,
    pub seed: u64,
    pub trials: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub points: Vec<ConcentrationPoint>,
    /// Least-squares slope of `ln std` against `ln n`; absent with fewer
    /// than two distinct `n` or a zero spread.
    pub exponent: Option<f64>,
}

/// Spread of `ln det(I + GG*)` over fresh positions at each point.
pub fn concentration_experiment(points: &[KernelPoint], trials: usize, seed: u64) -> Result<ConcentrationReport> {
    if trials < 10 {
        return Err(Error::InvalidParameter(format!("concentration needs at least 10 trials, got {trials}")));
    }
    let mut out = Vec::with_capacity(points.len());
    for (i, point) in points.iter().enumerate() {
        if point.n == 0 || point.m.is_nan() || point.m < 0.0 {
            return Err(Error::InvalidParameter(format!("bad kernel point {point:?}")));
        }
        let point_seed = sub_seed(seed, i as u64);
        let values = try_run_trials(trials, point_seed, |s| {
            let (y, z) = sample_kernel_coordinates(point.n, s);
            logdet_kernel(&y, &z, point.m)
        })?;
        let (mean, std) = mean_and_std(&values);
        out.push(ConcentrationPoint { n: point.n, m: point.m, seed: point_seed, trials, mean, std });
    }
    let exponent = growth_exponent(&out);
    Ok(ConcentrationReport { points: out, exponent })
}

fn growth_exponent(points: &[ConcentrationPoint]) -> Option<f64> {
    if points.iter().any(|p| p.std <= 0.0) {
        return None;
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| ((p.n as f64).ln(), p.std.ln())).collect();
    least_squares_slope(&xy)
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let count = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / count;
    let my = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// One grid point of a bound sweep. Log-dets are means over trials in nats;
/// dof counts are trial means rounded to the nearest integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub area_a: f64,
    pub dist_d: f64,
    pub lambda: f64,
    pub m: f64,
    pub p: f64,
    pub in_regime: bool,
    pub seed: u64,
    pub trials: usize,
    /// `ln det(I + P HH*)`.
    pub logdet_h_p: f64,
    /// `ln det(I + nP HH*)`.
    pub logdet_h: f64,
    /// `ln det(I + GG*)`.
    pub logdet_g: f64,
    pub dof_h: usize,
    pub dof_g: usize,
    /// Achievable-dof reference curve.
    pub dof_ref_lower: f64,
    /// Network-wide dof ceiling.
    pub dof_ref_upper: f64,
    /// `min(n, m / ln m)`; NaN for `m ≤ 1`.
    pub envelope_lower: f64,
    /// `min(n, m) ln n`.
    pub envelope_upper: f64,
    /// `logdet_h_p / envelope_lower`.
    pub k1: f64,
    /// `logdet_g / envelope_upper`.
    pub k2: f64,
    /// `logdet_h / envelope_upper`.
    pub k2_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub threshold: f64,
    pub seed: u64,
    pub records: Vec<SweepRecord>,
}

pub fn lower_envelope(n: usize, m: f64) -> f64 {
    if m <= 1.0 {
        return f64::NAN;
    }
    (n as f64).min(m / m.ln())
}

pub fn upper_envelope(n: usize, m: f64) -> f64 {
    (n as f64).min(m) * (n as f64).ln()
}

struct PointSample {
    logdet_h_p: f64,
    logdet_h: f64,
    logdet_g: f64,
    dof_h: usize,
    dof_g: usize,
}

fn sweep_sample(params: &ClusterParams, derived: &DerivedParams, threshold: f64, s: u64) -> Result<PointSample> {
    let pos = sample_network(params, s)?;
    let hn = normalize_los(&build_los_matrix(&pos, params)?, derived, params.n)?;
    let spec_h = gram_eigenvalues(&hn)?;
    let spec_g = gram_eigenvalues(&build_g_matrix(&pos, derived.m)?)?;
    let spec_h_p = spec_h.scaled(1.0 / params.n as f64);
    Ok(PointSample {
        logdet_h_p: log_det_capacity(&spec_h_p)?,
        logdet_h: log_det_capacity(&spec_h)?,
        logdet_g: log_det_capacity(&spec_g)?,
        dof_h: effective_dof(&spec_h, threshold),
        dof_g: effective_dof(&spec_g, threshold),
    })
}

/// Evaluates the log-det quantities of both scaling laws on each grid
/// point, along with the implied constants.
pub fn bound_sweep(grid: &[ClusterParams], threshold: f64, trials: usize, seed: u64) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut records = Vec::with_capacity(grid.len());
    for (i, params) in grid.iter().enumerate() {
        let derived = params.derive()?;
        let point_seed = sub_seed(seed, i as u64);
        let samples = try_run_trials(trials, point_seed, |s| sweep_sample(params, &derived, threshold, s))?;
        let mean = |f: fn(&PointSample) -> f64| pairwise_sum(&samples.iter().map(f).collect::<Vec<_>>()) / trials as f64;
        let logdet_h_p = mean(|s| s.logdet_h_p);
        let logdet_h = mean(|s| s.logdet_h);
        let logdet_g = mean(|s| s.logdet_g);
        let dof_h = mean(|s| s.dof_h as f64).round() as usize;
        let dof_g = mean(|s| s.dof_g as f64).round() as usize;
        let reference = dof_reference(params);
        let envelope_lower = lower_envelope(params.n, derived.m);
        let envelope_upper = upper_envelope(params.n, derived.m);
        records.push(SweepRecord {
            n: params.n,
            area_a: params.area_a,
            dist_d: params.dist_d,
            lambda: params.lambda,
            m: derived.m,
            p: derived.p,
            in_regime: params.in_regime(),
            seed: point_seed,
            trials,
            logdet_h_p,
            logdet_h,
            logdet_g,
            dof_h,
            dof_g,
            dof_ref_lower: reference.lower,
            dof_ref_upper: reference.upper,
            envelope_lower,
            envelope_upper,
            k1: logdet_h_p / envelope_lower,
            k2: logdet_g / envelope_upper,
            k2_h: logdet_h / envelope_upper,
        });
    }
    Ok(SweepResult { threshold, seed, records })
}

/// Grid with `m = n^exponent` in the fixed-aspect geometry of
/// [`ClusterParams::with_spectral_parameter`].
pub fn scaling_grid(ns: &[usize], exponent: f64) -> Result<Vec<ClusterParams>> {
    ns.iter()
        .map(|&n| ClusterParams::with_spectral_parameter(n, (n as f64).powf(exponent)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm::{expansion_bound, fredholm_table, TableOptions};
    use crate::linalg::det;

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
        let (mean, std) = mean_and_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn k1_subdeterminant_has_no_spread() {
        let est = expected_subdeterminant_mc(1, 3.7, 2000, 5).unwrap();
        assert!((est.mean - 1.0).abs() <= 4.0 * f64::EPSILON);
        assert!(est.std_error <= 1e-15);
        assert_eq!(est.trials, 2000);
    }

    #[test]
    fn estimates_are_reproducible() {
        let a = expected_subdeterminant_mc(3, 2.0, 500, 9).unwrap();
        let b = expected_subdeterminant_mc(3, 2.0, 500, 9).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_ne!(a.mean, expected_subdeterminant_mc(3, 2.0, 500, 10).unwrap().mean);
    }

    #[test]
    fn extending_a_run_keeps_earlier_trials() {
        let short = run_trials(10, 3, |s| s);
        let long = run_trials(20, 3, |s| s);
        assert_eq!(short[..], long[..10]);
    }

    #[test]
    fn identity_at_small_k() {
        let table = fredholm_table(2.0, TableOptions::for_bandwidth(2.0)).unwrap();
        let r = fredholm_identity_check(1, 100, 1, &table).unwrap();
        assert_eq!(r.z_score, 0.0);
        assert!(!r.violation);
        let r = fredholm_identity_check(2, 100_000, 2, &table).unwrap();
        assert!(r.z_score.abs() <= 3.0, "{r:?}");
    }

    #[test]
    fn identity_in_decay_regime() {
        let table = fredholm_table(2.0, TableOptions { quadrature_n: 400, p_max: 8, k_max: 8 }).unwrap();
        let r = fredholm_identity_check(6, 20_000, 4, &table).unwrap();
        assert!(r.analytic < 1e-2, "{r:?}");
        assert!(r.z_score.abs() <= 3.0, "{r:?}");
    }

    #[test]
    fn corrupted_table_is_flagged() {
        let mut table = fredholm_table(5.0, TableOptions::for_bandwidth(5.0)).unwrap();
        table.dk[2] *= 1.5;
        let r = fredholm_identity_check(2, 20_000, 3, &table).unwrap();
        assert!(r.violation, "{r:?}");
        table.dk[1] *= 1.5;
        assert!(fredholm_identity_check(1, 10, 3, &table).unwrap().violation);
        assert!(fredholm_identity_check(200, 10, 3, &table).is_err());
    }

    /// `det(I + GG*) = 1 + Σ_J det(G_J G_J*)` over non-empty row subsets.
    #[test]
    fn cauchy_binet_expansion() {
        let n = 5;
        let (y, z) = sample_kernel_coordinates(n, 77);
        let g = kernel_matrix(&y, &z, 3.0);
        let gram = crate::linalg::gram(&g);
        let mut plus: Vec<Complex64> = (0..n * n).map(|i| gram[(i / n, i % n)]).collect();
        for i in 0..n {
            plus[i * n + i] += 1.0;
        }
        let lhs = det(&plus, n).re;
        let mut rhs = 1.0;
        for mask in 1u32..(1 << n) {
            let rows: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let k = rows.len();
            let minor: Vec<Complex64> = rows.iter().flat_map(|&a| rows.iter().map(move |&b| (a, b))).map(|(a, b)| gram[(a, b)]).collect();
            rhs += det(&minor, k).re;
        }
        assert!((lhs - rhs).abs() < 1e-9 * lhs, "{lhs} vs {rhs}");
        let via_spectrum = logdet_kernel(&y, &z, 3.0).unwrap();
        assert!((lhs.ln() - via_spectrum).abs() < 1e-10);
    }

    #[test]
    fn jensen_expansion_bounds_mean_logdet() {
        let (n, m) = (6usize, 2.0);
        let table = fredholm_table(m, TableOptions { quadrature_n: 400, p_max: n, k_max: n }).unwrap();
        let bound = expansion_bound(n, m, &table.dk);
        let values: Vec<f64> = run_trials(4000, 8, |s| {
            let (y, z) = sample_kernel_coordinates(n, s);
            logdet_kernel(&y, &z, m).unwrap()
        });
        let est = McEstimate::from_samples(&values, 8);
        assert!(est.mean <= bound, "{} > {bound}", est.mean);
        // The bound is E[det(I+GG*)] in log form.
        let dets: Vec<f64> = values.iter().map(|v| v.exp()).collect();
        let det_est = McEstimate::from_samples(&dets, 8);
        assert!(z_score(&det_est, bound.exp()).abs() <= 3.0, "{det_est:?} vs {}", bound.exp());
    }

    #[test]
    fn phase_factored_claim_ratio_is_one() {
        let params = ClusterParams::with_spectral_parameter(120, 30.0).unwrap();
        let r = claim_sim_experiment(&params, 2, 4, 1.0, ChannelSource::PhaseFactored).unwrap();
        for t in &r.trials {
            assert!((t.ratio - 1.0).abs() < 1e-10, "{}", t.ratio);
            assert_eq!(t.dof_h, t.dof_g);
        }
        assert!(r.in_regime);
    }

    #[test]
    fn degenerate_kernel_logdet() {
        let n = 40;
        let (y, z) = sample_kernel_coordinates(n, 1);
        let v = logdet_kernel(&y, &z, 0.0).unwrap();
        assert!((v - (1.0 + (n * n) as f64).ln()).abs() < 1e-10);
        let report = concentration_experiment(&[KernelPoint { n, m: 0.0 }], 10, 2).unwrap();
        assert!(report.points[0].std < 1e-10);
    }

    #[test]
    fn fixed_positions_give_identical_logdets() {
        let (y, z) = sample_kernel_coordinates(60, 3);
        let a = logdet_kernel(&y, &z, 9.0).unwrap();
        let b = logdet_kernel(&y, &z, 9.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn concentration_needs_ten_trials() {
        assert!(concentration_experiment(&[KernelPoint { n: 10, m: 2.0 }], 9, 0).is_err());
    }

    #[test]
    fn sweep_records_are_complete() {
        let grid = scaling_grid(&[60, 120], 0.6).unwrap();
        let r = bound_sweep(&grid, 1.0, 2, 11).unwrap();
        assert_eq!(r.records.len(), 2);
        for rec in &r.records {
            assert!(rec.in_regime);
            assert!(rec.k2.is_finite() && rec.k2 > 0.0);
            assert!(rec.k1.is_finite() && rec.k1 > 0.0);
            assert!(rec.logdet_h_p < rec.logdet_h);
            assert!((rec.m - (rec.n as f64).powf(0.6)).abs() < 1e-9);
        }
        assert_eq!(r, bound_sweep(&grid, 1.0, 2, 11).unwrap());
        assert!(bound_sweep(&[], 1.0, 1, 0).is_err());
    }

    #[test]
    fn envelopes() {
        assert!(lower_envelope(10, 1.0).is_nan());
        assert!((lower_envelope(1000, 100.0) - 100.0 / 100f64.ln()).abs() < 1e-12);
        assert_eq!(lower_envelope(3, 100.0), 3.0);
        assert!((upper_envelope(100, 20.0) - 20.0 * 100f64.ln()).abs() < 1e-12);
    }
}
