//! Sinc-kernel operator on `[0, 1]` and its Fredholm coefficients.
//!
//! The expected value `E[det(G_k G_k*)]` of a `k x k` block of the kernel
//! matrix reduces to `(k!)² m^{-k} d_k`, where `d_k` is the k-th Fredholm
//! coefficient of the integral operator with kernel
//!
//! ```text
//! K(x, y) = sin(π m (x - y)) / (π (x - y)),   K(x, x) = m.
//! ```
//!
//! `d_k` equals the k-th elementary symmetric polynomial of the operator
//! eigenvalues `μ_1 ≥ μ_2 ≥ ... ∈ [0, 1]`, and satisfies the trace
//! recurrence `k d_k = Σ_{p=1..k} (-1)^{p-1} A_p d_{k-p}` with
//! `A_p = Σ μ_i^p`. The eigenvalues are approximated by a symmetric
//! Gauss-Legendre Nyström discretization.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::linalg::symmetric_eigenvalues;
use crate::quadrature::gauss_legendre_unit;
use crate::{Error, Result};

/// Slack allowed around the `[0, 1]` eigenvalue range of the operator.
pub const EIGENVALUE_SLACK: f64 = 1e-6;

/// Default lower cutoff for eigenvalues used by [`decay_fit`].
pub const DEFAULT_DECAY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincKernel {
    m: f64,
}

impl SincKernel {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel bandwidth m must be positive, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let t = x - y;
        if t == 0.0 {
            self.m
        } else {
            (PI * self.m * t).sin() / (PI * t)
        }
    }
}

pub fn kernel_value(kernel: &SincKernel, x: f64, y: f64) -> f64 {
    kernel.value(x, y)
}

/// `40⌈m⌉` nodes, clamped to `[400, 2000]`. The kernel oscillates on a
/// scale of `1/m`.
pub fn default_quadrature_n(m: f64) -> usize {
    let per_unit = 40.0 * m.ceil();
    (per_unit.clamp(400.0, 2000.0)) as usize
}

/// Symmetrized Nyström matrix `√w_i K(x_i, x_j) √w_j`.
#[derive(Debug, Clone)]
pub struct NystromDiscretization {
    pub kernel: SincKernel,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub matrix: Mat<f64>,
}

impl NystromDiscretization {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn trace(&self) -> f64 {
        (0..self.size()).map(|i| self.matrix[(i, i)]).sum()
    }
}

pub fn discretize(kernel: &SincKernel, n: usize) -> Result<NystromDiscretization> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("quadrature needs at least 2 nodes, got {n}")));
    }
    let rule = gauss_legendre_unit(n);
    let sqrt_w: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut matrix = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        matrix[(i, i)] = rule.weights[i] * kernel.m;
        for j in 0..i {
            let v = sqrt_w[i] * kernel.value(rule.nodes[i], rule.nodes[j]) * sqrt_w[j];
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Ok(NystromDiscretization { kernel: *kernel, nodes: rule.nodes, weights: rule.weights, matrix })
}

/// Eigenvalues of the discretized operator, descending. Fails when any of
/// them leaves `[-ε, 1+ε]`, which signals an under-resolved quadrature.
pub fn operator_eigenvalues(disc: &NystromDiscretization) -> Result<Vec<f64>> {
    let mut mu = symmetric_eigenvalues(&disc.matrix)?;
    mu.reverse();
    check_eigenvalue_range(&mu)?;
    Ok(mu)
}

fn check_eigenvalue_range(mu: &[f64]) -> Result<()> {
    let eps = EIGENVALUE_SLACK;
    match mu.iter().position(|&v| !(v >= -eps && v <= 1.0 + eps)) {
        Some(index) => Err(Error::DiscretizationTooCoarse { index, value: mu[index], eps }),
        None => Ok(()),
    }
}

/// Iterated traces `A_p = Σ μ_i^p`, accumulated in double-double.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    values: Vec<Dd>,
}

impl Traces {
    /// Traces supplied directly (e.g. from an external computation).
    pub fn from_values(values: &[f64]) -> Self {
        Self { values: values.iter().map(|&v| Dd::from_f64(v)).collect() }
    }

    /// Highest available power.
    pub fn p_max(&self) -> usize {
        self.values.len()
    }

    /// `A_p`, for `1 ≤ p ≤ p_max`.
    pub fn get(&self, p: usize) -> f64 {
        self.values[p - 1].to_f64()
    }

    /// `[A_1, ..., A_{p_max}]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64()).collect()
    }
}

pub fn iterated_traces(mu: &[f64], p_max: usize) -> Traces {
    let mut sums = vec![Dd::ZERO; p_max];
    for &value in mu {
        let x = Dd::from_f64(value);
        let mut power = Dd::ONE;
        for sum in sums.iter_mut() {
            power = power * x;
            *sum = *sum + power;
        }
    }
    Traces { values: sums }
}

/// `d_0 = 1`, `k d_k = Σ_{p=1..k} (-1)^{p-1} A_p d_{k-p}`, for
/// `k = 0..=k_max`.
///
/// The sum alternates and cancels heavily once `d_k` is small compared with
/// `A_1^k / k!`, so it is carried out in double-double. Even so the result
/// is only as good as the traces it is fed; [`elementary_symmetric_all`] is
/// the stable route for the deep tail.
pub fn fredholm_coefficients(traces: &Traces, k_max: usize) -> Result<Vec<f64>> {
    if traces.p_max() < k_max {
        return Err(Error::InsufficientData(format!(
            "d_{k_max} needs traces up to p = {k_max}, only {} available",
            traces.p_max()
        )));
    }
    let mut d = vec![Dd::ONE];
    for k in 1..=k_max {
        let mut acc = Dd::ZERO;
        for p in 1..=k {
            let term = traces.values[p - 1] * d[k - p];
            acc = if p % 2 == 1 { acc + term } else { acc - term };
        }
        d.push(acc.div_f64(k as f64));
    }
    Ok(d.into_iter().map(Dd::to_f64).collect())
}

/// `e_k(μ) = Σ_{i_1 < ... < i_k} μ_{i_1} ··· μ_{i_k}`; 0 when `k > len`.
pub fn elementary_symmetric(mu: &[f64], k: usize) -> f64 {
    if k > mu.len() {
        return 0.0;
    }
    elementary_symmetric_all(mu, k)[k]
}

/// `[e_0, ..., e_{k_max}]` by multiplying out `Π (1 + μ_i t)` one factor at
/// a time. All terms are non-negative when `μ ≥ 0`, so there is no
/// cancellation.
pub fn elementary_symmetric_all(mu: &[f64], k_max: usize) -> Vec<f64> {
    let mut e = vec![0.0; k_max + 1];
    e[0] = 1.0;
    for (count, &value) in mu.iter().enumerate() {
        let top = (count + 1).min(k_max);
        for k in (1..=top).rev() {
            e[k] += value * e[k - 1];
        }
    }
    e
}

/// Exponential tail model `μ_k ≤ exp(-δ (k - c m))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub delta: f64,
    /// First and last (1-based) index of the fitted window.
    pub first_k: usize,
    pub last_k: usize,
}

impl DecayFit {
    pub fn bound(&self, k: usize, m: f64) -> f64 {
        (-self.delta * (k as f64 - self.c * m)).exp()
    }
}

/// Fits the exponential tail of `μ` (descending).
///
/// The window runs from the first eigenvalue below 1/2 to the last one above
/// [`DEFAULT_DECAY_FLOOR`]. The rate `δ` is the negated least-squares slope
/// of `ln μ_k` against `k`; `c` is then the smallest offset for which the
/// line `-δ (k - c m)` lies on or above every point of the window.
pub fn decay_fit(mu: &[f64], m: f64) -> Result<DecayFit> {
    decay_fit_with_floor(mu, m, DEFAULT_DECAY_FLOOR)
}

pub fn decay_fit_with_floor(mu: &[f64], m: f64, floor: f64) -> Result<DecayFit> {
    if m.is_nan() || m <= 0.0 {
        return Err(Error::InvalidParameter(format!("m must be positive, got {m}")));
    }
    if (mu.len() as f64) <= 2.0 * m {
        return Err(Error::InsufficientData(format!(
            "{} eigenvalues do not reach past 2m = {}",
            mu.len(),
            2.0 * m
        )));
    }
    let start = mu.iter().position(|&v| v <= 0.5).ok_or_else(|| {
        Error::InsufficientData("no eigenvalue below 1/2".into())
    })?;
    let end = start + mu[start..].iter().take_while(|&&v| v >= floor).count();
    if end - start < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} eigenvalues between {floor:e} and 1/2",
            end - start
        )));
    }
    let points: Vec<(f64, f64)> = (start..end).map(|i| ((i + 1) as f64, mu[i].ln())).collect();
    let count = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_k).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_k) * (p.1 - mean_y)).sum();
    let delta = -sxy / sxx;
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::DecayViolation(delta));
    }
    let c = points.iter().map(|&(k, y)| (k + y / delta) / m).fold(f64::NEG_INFINITY, f64::max);
    let mut fit = DecayFit { c, delta, first_k: start + 1, last_k: end };
    // The extremal point sits on the line; rounding may leave it an ulp above.
    while (start..end).any(|i| mu[i] > fit.bound(i + 1, m)) {
        fit.c += fit.c.abs().max(f64::MIN_POSITIVE) * f64::EPSILON;
    }
    Ok(fit)
}

/// The `d_k` estimate that follows from the exponential eigenvalue tail:
/// 1 for `k ≤ c m`, otherwise `C^k exp(-δ (k - c m)² / 2)`.
pub fn dk_tail_bound(k: usize, m: f64, c: f64, delta: f64, big_c: f64) -> f64 {
    let kf = k as f64;
    let excess = kf - c * m;
    if excess <= 0.0 {
        1.0
    } else {
        (kf * big_c.ln() - delta * excess * excess / 2.0).exp()
    }
}

/// Smallest `C ≥ 1` such that `d_k ≤ C^k exp(-δ (k - c m)² / 2)` for every
/// `k > c m` in `dk` (indexed from `k = 0`).
pub fn required_tail_constant(dk: &[f64], m: f64, c: f64, delta: f64) -> f64 {
    let mut log_c = 0.0f64;
    for (k, &value) in dk.iter().enumerate().skip(1) {
        let excess = k as f64 - c * m;
        if excess <= 0.0 || value <= 0.0 {
            continue;
        }
        let needed = (value.ln() + delta * excess * excess / 2.0) / k as f64;
        log_c = log_c.max(needed);
    }
    log_c.exp()
}

/// Leading term `(c m + 1) ln n` of the log-det upper bound; the additive
/// `O(1)` is not included.
pub fn logdet_upper_bound(n: usize, m: f64, c: f64) -> f64 {
    (c * m + 1.0) * (n as f64).ln()
}

/// `ln(1 + Σ_{k=1..min(n, k_max)} C(n,k)² (k!)² m^{-k} d_k)`, i.e.
/// `ln E[det(I + GG*)]` for an `n x n` kernel matrix, which bounds
/// `E[ln det(I + GG*)]` from above. Evaluated in log space.
pub fn expansion_bound(n: usize, m: f64, dk: &[f64]) -> f64 {
    let ln_m = m.ln();
    // C(n,k)² (k!)² = (n!/(n-k)!)²
    let mut ln_falling = 0.0;
    let mut terms = vec![0.0]; // the leading 1
    for (k, &d) in dk.iter().enumerate().skip(1) {
        if k > n {
            break;
        }
        ln_falling += ((n - k + 1) as f64).ln();
        if d > 0.0 {
            terms.push(2.0 * ln_falling - k as f64 * ln_m + d.ln());
        }
    }
    log_sum_exp(&terms)
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Everything known about the operator at one bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmTable {
    pub m: f64,
    pub quadrature_n: usize,
    /// Operator eigenvalue estimates, descending.
    pub mu: Vec<f64>,
    /// `A_1..A_{p_max}`.
    pub traces: Vec<f64>,
    /// `d_0..d_{k_max}` from the eigenvalues (product form).
    pub dk: Vec<f64>,
    /// `d_0..d_{k_max}` from the trace recurrence.
    pub dk_recurrence: Vec<f64>,
    /// Largest `k` up to which both `d_k` routes agree within `1e-8`
    /// relative.
    pub recurrence_agrees_to: usize,
    pub decay: Option<DecayFit>,
    /// Smallest admissible `C` in the `d_k` tail estimate, when a decay fit
    /// exists.
    pub tail_constant: Option<f64>,
}

impl FredholmTable {
    /// Analytic `E[det(G_k G_k*)] = (k!)² m^{-k} d_k`.
    pub fn expected_subdeterminant(&self, k: usize) -> Option<f64> {
        let d = *self.dk.get(k)?;
        Some((2.0 * ln_factorial(k) - k as f64 * self.m.ln()).exp() * d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub quadrature_n: usize,
    pub p_max: usize,
    pub k_max: usize,
}

impl TableOptions {
    /// Default quadrature, `p_max = k_max = ⌈4m⌉` (at least 4).
    pub fn for_bandwidth(m: f64) -> Self {
        let k = ((4.0 * m).ceil() as usize).max(4);
        Self { quadrature_n: default_quadrature_n(m), p_max: k, k_max: k }
    }
}

pub fn fredholm_table(m: f64, options: TableOptions) -> Result<FredholmTable> {
    let kernel = SincKernel::new(m)?;
    let disc = discretize(&kernel, options.quadrature_n)?;
    let mu = operator_eigenvalues(&disc)?;
    let traces = iterated_traces(&mu, options.p_max.max(options.k_max));
    let dk_recurrence = fredholm_coefficients(&traces, options.k_max)?;
    let clamped: Vec<f64> = mu.iter().map(|v| v.max(0.0)).collect();
    let dk = elementary_symmetric_all(&clamped, options.k_max);
    let recurrence_agrees_to = dk
        .iter()
        .zip(&dk_recurrence)
        .position(|(a, b)| (a - b).abs() > 1e-8 * a.abs())
        .map_or(options.k_max, |first_bad| first_bad.saturating_sub(1));
    let decay = decay_fit(&mu, m).ok();
    let tail_constant = decay.map(|fit| required_tail_constant(&dk, m, fit.c, fit.delta));
    let mut trace_list = traces.to_vec();
    trace_list.truncate(options.p_max);
    Ok(FredholmTable {
        m,
        quadrature_n: options.quadrature_n,
        mu,
        traces: trace_list,
        dk,
        dk_recurrence,
        recurrence_agrees_to,
        decay,
        tail_constant,
    })
}
