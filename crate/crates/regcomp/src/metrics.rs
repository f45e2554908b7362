//! Resistance and spectral metrics.
//!
//! Effective resistance is computed two independent ways — a dense
//! Laplacian pseudoinverse and a conjugate-gradient linear solve — and
//! the two must agree; the rest of the module builds commute times, the
//! degree-based local prediction, relative deviations, and the spectral
//! bound that ties them together.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("graph is disconnected: effective resistance is infinite")]
    Disconnected,
    #[error("vertex {0} is isolated (zero degree)")]
    IsolatedVertex(usize),
    #[error("identical vertices {0}: resistance is zero by convention")]
    IdenticalVertices(usize),
    #[error("linear solve did not reach relative residual {tolerance} in {iterations} iterations (best {achieved})")]
    SolveNotConverged { tolerance: f64, iterations: usize, achieved: f64 },
    #[error("graph too small: need at least 2 vertices")]
    TooSmall,
}

/// Weighted combinatorial Laplacian D - W.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut deg = 0.0;
        for j in 0..n {
            let w = g.weight(i, j);
            deg += w;
            if i != j {
                l[(i, j)] = -w;
            }
        }
        l[(i, i)] = deg;
    }
    l
}

/// Symmetric normalized Laplacian I - D^{-1/2} W D^{-1/2}.
pub fn normalized_laplacian(g: &Graph) -> Result<DMatrix<f64>, MetricsError> {
    let n = g.n();
    let degs: Vec<f64> = (0..n).map(|v| g.degree(v)).collect();
    if let Some(v) = degs.iter().position(|&d| d <= 0.0) {
        return Err(MetricsError::IsolatedVertex(v));
    }
    let mut l = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                l[(i, j)] = -g.weight(i, j) / (degs[i] * degs[j]).sqrt();
            }
        }
    }
    Ok(l)
}

const CONNECTIVITY_TOL: f64 = 1e-9;

/// Shared pseudoinverse of the combinatorial Laplacian; answers any
/// number of pair-resistance queries after one eigendecomposition.
pub struct ResistanceCalculator {
    pinv: DMatrix<f64>,
    n: usize,
}

impl ResistanceCalculator {
    pub fn new(g: &Graph) -> Result<Self, MetricsError> {
        if g.n() < 2 {
            return Err(MetricsError::TooSmall);
        }
        if !g.is_connected() {
            return Err(MetricsError::Disconnected);
        }
        let l = laplacian(g);
        let eig = SymmetricEigen::new(l);
        // exactly one (near-)zero eigenvalue on a connected graph
        let near_zero = eig.eigenvalues.iter().filter(|&&v| v.abs() < CONNECTIVITY_TOL).count();
        if near_zero > 1 {
            return Err(MetricsError::Disconnected);
        }
        let n = g.n();
        let mut pinv = DMatrix::zeros(n, n);
        for (idx, &val) in eig.eigenvalues.iter().enumerate() {
            if val.abs() < CONNECTIVITY_TOL {
                continue;
            }
            let v = eig.eigenvectors.column(idx);
            // rank-one update v v^T / val
            for i in 0..n {
                for j in 0..n {
                    pinv[(i, j)] += v[i] * v[j] / val;
                }
            }
        }
        Ok(ResistanceCalculator { pinv, n })
    }

    pub fn effective_resistance(&self, i: usize, j: usize) -> Result<f64, MetricsError> {
        if i == j {
            return Err(MetricsError::IdenticalVertices(i));
        }
        assert!(i < self.n && j < self.n);
        Ok(self.pinv[(i, i)] + self.pinv[(j, j)] - 2.0 * self.pinv[(i, j)])
    }
}

/// Effective resistance via the pseudoinverse path.
pub fn effective_resistance(g: &Graph, i: usize, j: usize) -> Result<f64, MetricsError> {
    ResistanceCalculator::new(g)?.effective_resistance(i, j)
}

/// Effective resistance via a conjugate-gradient solve of L x = e_i - e_j
/// on the mean-zero subspace. Independent of the pseudoinverse path.
pub fn effective_resistance_solve(g: &Graph, i: usize, j: usize) -> Result<f64, MetricsError> {
    if i == j {
        return Err(MetricsError::IdenticalVertices(i));
    }
    if g.n() < 2 {
        return Err(MetricsError::TooSmall);
    }
    if !g.is_connected() {
        return Err(MetricsError::Disconnected);
    }
    let n = g.n();
    let l = laplacian(g);
    let mut b = DVector::zeros(n);
    b[i] = 1.0;
    b[j] = -1.0;
    let tolerance = 1e-10;
    let max_iterations = 10 * n;

    let project = |v: &mut DVector<f64>| {
        let mean = v.sum() / n as f64;
        for t in v.iter_mut() {
            *t -= mean;
        }
    };
    let b_norm = b.norm();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    project(&mut r);
    let mut p = r.clone();
    let mut rs_old = r.dot(&r);
    let mut achieved = rs_old.sqrt() / b_norm;
    for _ in 0..max_iterations {
        if achieved <= tolerance {
            return Ok(x[i] - x[j]);
        }
        let mut ap = &l * &p;
        project(&mut ap);
        let denom = p.dot(&ap);
        if denom.abs() < f64::MIN_POSITIVE {
            break;
        }
        let alpha = rs_old / denom;
        x += alpha * &p;
        r -= alpha * &ap;
        let rs_new = r.dot(&r);
        achieved = rs_new.sqrt() / b_norm;
        p = &r + (rs_new / rs_old) * &p;
        rs_old = rs_new;
    }
    if achieved <= tolerance {
        Ok(x[i] - x[j])
    } else {
        Err(MetricsError::SolveNotConverged { tolerance, iterations: max_iterations, achieved })
    }
}

pub fn commute_time(g: &Graph, i: usize, j: usize) -> Result<f64, MetricsError> {
    Ok(g.volume() * effective_resistance(g, i, j)?)
}

/// Degree-local prediction of the scaled commute time: 1/d_i + 1/d_j.
pub fn local_prediction(g: &Graph, i: usize, j: usize) -> Result<f64, MetricsError> {
    let di = g.degree(i);
    let dj = g.degree(j);
    if di <= 0.0 {
        return Err(MetricsError::IsolatedVertex(i));
    }
    if dj <= 0.0 {
        return Err(MetricsError::IsolatedVertex(j));
    }
    Ok(1.0 / di + 1.0 / dj)
}

/// Relative deviation of the resistance from its degree-local prediction.
pub fn rel_dev(g: &Graph, i: usize, j: usize) -> Result<f64, MetricsError> {
    let r = effective_resistance(g, i, j)?;
    Ok((r - local_prediction(g, i, j)?).abs() / r)
}

/// Second-smallest eigenvalue of the symmetric normalized Laplacian.
pub fn spectral_gap(g: &Graph) -> Result<f64, MetricsError> {
    if !g.is_connected() {
        return Err(MetricsError::Disconnected);
    }
    let l = normalized_laplacian(g)?;
    let eig = SymmetricEigen::new(l);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals[1])
}

/// Second-smallest eigenvalue of the combinatorial Laplacian, for
/// comparison alongside the normalized gap.
pub fn combinatorial_gap(g: &Graph) -> Result<f64, MetricsError> {
    if !g.is_connected() {
        return Err(MetricsError::Disconnected);
    }
    let eig = SymmetricEigen::new(laplacian(g));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals[1])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub reldev_mean: f64,
    pub reldev_min: f64,
    pub reldev_max: f64,
    /// Normalized-Laplacian gap.
    pub spectral_gap: f64,
    /// Combinatorial-Laplacian gap, reported for comparison.
    pub combinatorial_gap: f64,
    pub volume: f64,
    pub d_min: f64,
    /// Right side of the commute-time bound: 2 / (spectral_gap * d_min).
    pub bound_rhs: f64,
    pub n_pairs_sampled: usize,
    pub seed: u64,
}

impl MetricsReport {
    pub fn csv_header() -> &'static str {
        "reldev_mean,reldev_min,reldev_max,spectral_gap,combinatorial_gap,volume,d_min,bound_rhs,n_pairs_sampled,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.reldev_mean,
            self.reldev_min,
            self.reldev_max,
            self.spectral_gap,
            self.combinatorial_gap,
            self.volume,
            self.d_min,
            self.bound_rhs,
            self.n_pairs_sampled,
            self.seed
        )
    }
}

/// Every pair for n <= 500, otherwise a seeded uniform sample of 10n
/// distinct pairs.
pub fn sample_pairs(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let all = n * (n - 1) / 2;
    if n <= 500 {
        return (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    }
    let target = (10 * n).min(all);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(target);
    let mut pairs = Vec::with_capacity(target);
    while pairs.len() < target {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if seen.insert(key) {
            pairs.push(key);
        }
    }
    pairs
}

/// Aggregate relative deviations over an explicit pair list.
pub fn rel_dev_aggregate_pairs(
    g: &Graph,
    pairs: &[(usize, usize)],
    seed: u64,
) -> Result<MetricsReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::TooSmall);
    }
    let calc = ResistanceCalculator::new(g)?;
    let n = g.n();
    let degs: Vec<f64> = (0..n).map(|v| g.degree(v)).collect();
    if let Some(v) = degs.iter().position(|&d| d <= 0.0) {
        return Err(MetricsError::IsolatedVertex(v));
    }
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &(i, j) in pairs {
        let r = calc.effective_resistance(i, j)?;
        let v = (r - (1.0 / degs[i] + 1.0 / degs[j])).abs() / r;
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    let gap = spectral_gap(g)?;
    let d_min = g.min_degree();
    Ok(MetricsReport {
        reldev_mean: sum / pairs.len() as f64,
        reldev_min: min,
        reldev_max: max,
        spectral_gap: gap,
        combinatorial_gap: combinatorial_gap(g)?,
        volume: g.volume(),
        d_min,
        bound_rhs: 2.0 / (gap * d_min),
        n_pairs_sampled: pairs.len(),
        seed,
    })
}

pub fn rel_dev_aggregate(g: &Graph, seed: u64) -> Result<MetricsReport, MetricsError> {
    let pairs = sample_pairs(g.n(), seed);
    rel_dev_aggregate_pairs(g, &pairs, seed)
}

#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub holds: bool,
    /// Largest amount by which a sampled pair exceeded the bound;
    /// non-positive when the bound holds with slack.
    pub max_slack_violation: f64,
    /// The bound's derivation assumes a non-bipartite graph; the check
    /// still runs on bipartite input but is flagged.
    pub bipartite: bool,
}

/// Verify |C_ij / vol - (1/d_i + 1/d_j)| <= (1/gap)(2/d_min) on the
/// sampled pairs. Since C_ij = vol * R_ij, the left side is just the
/// resistance's deviation from the local prediction.
pub fn resistance_bound_check(g: &Graph, pairs: &[(usize, usize)]) -> Result<BoundCheck, MetricsError> {
    let calc = ResistanceCalculator::new(g)?;
    let gap = spectral_gap(g)?;
    let d_min = g.min_degree();
    if d_min <= 0.0 {
        return Err(MetricsError::IsolatedVertex(
            (0..g.n()).find(|&v| g.degree(v) <= 0.0).unwrap_or(0),
        ));
    }
    let rhs = (1.0 / gap) * (2.0 / d_min);
    let mut worst = f64::NEG_INFINITY;
    for &(i, j) in pairs {
        let r = calc.effective_resistance(i, j)?;
        let lhs = (r - local_prediction(g, i, j)?).abs();
        worst = worst.max(lhs - rhs);
    }
    Ok(BoundCheck { holds: worst <= 0.0, max_slack_violation: worst, bipartite: g.is_bipartite() })
}
