//! Scenario parameters and node placement.
//!
//! Two square clusters of area `A` face each other at distance `d`. Node
//! coordinates are normalized to `[0, 1]`: `x`, `y` for the receivers and
//! `w`, `z` for the transmitters, horizontal and vertical respectively.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Physical scenario: `n` nodes per cluster, cluster area `A` (m²),
/// inter-cluster distance `d` (m) and carrier wavelength `λ` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterParams {
    pub n: usize,
    pub area_a: f64,
    pub dist_d: f64,
    pub lambda: f64,
}

/// Quantities derived once from [`ClusterParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Spectral parameter `A / (λ d)`.
    pub m: f64,
    /// Per-node power `(d + √A)² / n`.
    pub p: f64,
}

impl ClusterParams {
    pub fn new(n: usize, area_a: f64, dist_d: f64, lambda: f64) -> Result<Self> {
        let params = Self { n, area_a, dist_d, lambda };
        params.validate()?;
        Ok(params)
    }

    /// Reference scenario: 500 nodes, 10⁴ m², 300 m, 0.1 m.
    pub fn reference_scenario() -> Self {
        Self { n: 500, area_a: 10_000.0, dist_d: 300.0, lambda: 0.1 }
    }

    /// `A = n^β`, `d = n^γ` at a fixed wavelength.
    pub fn power_law(n: usize, beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let nf = n as f64;
        Self::new(n, nf.powf(beta), nf.powf(gamma), lambda)
    }

    /// Scenario with a prescribed spectral parameter `m`, keeping the
    /// geometry of [`ClusterParams::reference_scenario`]: `λ = 0.1`, `d = 3√A`, hence
    /// `√A = 0.3 m` and `d = 0.9 m`. In regime whenever `m ≥ 1`.
    pub fn with_spectral_parameter(n: usize, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("spectral parameter m must be positive, got {m}")));
        }
        let lambda = 0.1;
        let side = 3.0 * lambda * m;
        Self::new(n, side * side, 3.0 * side, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        for (name, value) in [("area_a", self.area_a), ("dist_d", self.dist_d), ("lambda", self.lambda)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(())
    }

    /// `√A ≤ d ≤ A/λ`.
    pub fn in_regime(&self) -> bool {
        self.area_a.sqrt() <= self.dist_d && self.dist_d <= self.area_a / self.lambda
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        derive(self)
    }
}

pub fn derive(params: &ClusterParams) -> Result<DerivedParams> {
    params.validate()?;
    let m = params.area_a / (params.lambda * params.dist_d);
    let side = params.area_a.sqrt();
    let p = (params.dist_d + side) * (params.dist_d + side) / params.n as f64;
    Ok(DerivedParams { m, p })
}

/// Reference dof scaling curves of the two-cluster problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofReference {
    /// Network-wide ceiling `min(n, √A/λ)`.
    pub upper: f64,
    /// Achievable dof: `min(n, √A/λ)` for `d ≤ √A`, `min(n, A/(λd))` for
    /// `√A ≤ d ≤ A/λ`, and 1 beyond `A/λ`.
    pub lower: f64,
}

pub fn dof_reference(params: &ClusterParams) -> DofReference {
    let n = params.n as f64;
    let side = params.area_a.sqrt();
    let upper = n.min(side / params.lambda);
    let lower = if params.dist_d <= side {
        upper
    } else if params.dist_d <= params.area_a / params.lambda {
        n.min(params.area_a / (params.lambda * params.dist_d))
    } else {
        1.0
    };
    DofReference { upper, lower }
}

/// Normalized node coordinates, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePositions {
    /// Receiver horizontal coordinates.
    pub x: Vec<f64>,
    /// Receiver vertical coordinates.
    pub y: Vec<f64>,
    /// Transmitter horizontal coordinates.
    pub w: Vec<f64>,
    /// Transmitter vertical coordinates.
    pub z: Vec<f64>,
    pub seed: u64,
}

impl NodePositions {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Builds positions from explicit coordinate lists. All four lists must
    /// have the same length and lie in `[0, 1]`.
    pub fn from_coordinates(x: Vec<f64>, y: Vec<f64>, w: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if y.len() != n || w.len() != n || z.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "coordinate lists have lengths {}, {}, {}, {}",
                n,
                y.len(),
                w.len(),
                z.len()
            )));
        }
        if let Some(bad) = x.iter().chain(&y).chain(&w).chain(&z).find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("coordinate {bad} outside [0, 1]")));
        }
        Ok(Self { x, y, w, z, seed: 0 })
    }
}

/// Draws `x`, `y`, `w`, `z` (in that order) i.i.d. uniform on `[0, 1)` from
/// the stream seeded with `seed`.
pub fn sample_network(params: &ClusterParams, seed: u64) -> Result<NodePositions> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
    let x = draw(params.n);
    let y = draw(params.n);
    let w = draw(params.n);
    let z = draw(params.n);
    Ok(NodePositions { x, y, w, z, seed })
}

/// Distance between receiver `j` and transmitter `k`.
pub fn pairwise_distance(pos: &NodePositions, params: &ClusterParams, j: usize, k: usize) -> Result<f64> {
    let len = pos.len();
    for index in [j, k] {
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
    }
    Ok(distance(params, pos.x[j], pos.w[k], pos.y[j], pos.z[k]))
}

#[inline]
pub(crate) fn distance(params: &ClusterParams, xj: f64, wk: f64, yj: f64, zk: f64) -> f64 {
    let side = params.area_a.sqrt();
    let horizontal = params.dist_d + side * (xj + wk);
    let vertical = side * (yj - zk);
    horizontal.hypot(vertical)
}
