//! Total-variation distances and the causal interdependence matrix.
//!
//! `H[i][j]` is the largest TV shift in step `j`'s kernel caused by changing
//! the symbol at step `i` while every other history coordinate (including
//! the intermediate ones) is held fixed. Only coordinates in step `j`'s
//! context can move its kernel, so the supremum is taken over context
//! assignments alone and `H[i][j] = 0` exactly when `i` is outside it.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, MdcError, Result};
use crate::process::{
    for_each_sequence, Alphabet, Budget, ProcessSpec, WindowMixture, NORMALIZATION_TOL,
};

/// Checks that `p` is a probability vector (entries `>= 0`, sum within 1e-12 of 1).
pub fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(invalid("empty probability vector"));
    }
    if let Some(a) = p.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid(format!("entry {a} = {} is not a probability", p[a])));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(invalid(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// `½ Σ_a |μ(a) − ν(a)|`.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(MdcError::DimensionMismatch {
            expected: mu.len(),
            got: nu.len(),
        });
    }
    Ok(tv_unchecked(mu, nu))
}

#[inline]
pub(crate) fn tv_unchecked(mu: &[f64], nu: &[f64]) -> f64 {
    let d: f64 = mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum();
    (0.5 * d).min(1.0)
}

/// Largest TV distance between two rows of a transition matrix.
pub fn dobrushin_alpha(transition: &[Vec<f64>]) -> Result<f64> {
    let mut alpha = 0.0f64;
    for (r, a) in transition.iter().enumerate() {
        for b in &transition[r + 1..] {
            alpha = alpha.max(tv_distance(a, b)?);
        }
    }
    Ok(alpha)
}

/// Strictly upper-triangular matrix of one-step influence bounds, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterdependenceMatrix(DMatrix<f64>);

impl InterdependenceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    /// Validates and wraps a dense matrix.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(invalid(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if i >= j && v != 0.0 {
                    return Err(invalid(format!(
                        "entry ({i}, {j}) = {v} on or below the diagonal; H must be strictly upper triangular"
                    )));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds `H[i][j] = f(i, j)` for `i < j`.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Result<Self> {
        Self::from_dense(DMatrix::from_fn(n, n, |i, j| if i < j { f(i, j) } else { 0.0 }))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Nonzero entries `(i, j, value)`, row-major.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.0[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// True when all nonzeros sit on the first superdiagonal.
    pub fn is_superdiagonal(&self) -> bool {
        self.nonzeros().iter().all(|&(i, j, _)| j == i + 1)
    }

    /// True when every column has at most one nonzero (forest structure).
    pub fn is_forest(&self) -> bool {
        let n = self.n();
        (0..n).all(|j| (0..j).filter(|&i| self.0[(i, j)] != 0.0).count() <= 1)
    }

    /// Largest number of nonzeros in a row.
    pub fn max_out_degree(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.0[(i, j)] != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    pub fn max_entry(&self) -> f64 {
        self.0.iter().fold(0.0, |m, &v| m.max(v))
    }
}

fn pruned_cost(spec: &ProcessSpec) -> u128 {
    let a = spec.alphabet();
    spec.steps()
        .iter()
        .map(|k| (k.context().len() as u128).saturating_mul(a.pow(k.context().len() + 1)))
        .fold(0u128, |acc, c| acc.saturating_add(c))
}

fn unpruned_cost(spec: &ProcessSpec) -> u128 {
    let a = spec.alphabet();
    (0..spec.horizon())
        .map(|j| (j as u128).saturating_mul(a.pow(j + 1)))
        .fold(0u128, |acc, c| acc.saturating_add(c))
}

/// Kernel evaluations [`compute_h_exact`] would perform.
pub fn h_enumeration_cost(spec: &ProcessSpec) -> u128 {
    pruned_cost(spec)
}

/// Exact interdependence matrix, enumerating only context coordinates.
pub fn compute_h_exact(spec: &ProcessSpec, budget: Budget) -> Result<InterdependenceMatrix> {
    budget.check("interdependence matrix", pruned_cost(spec))?;
    let n = spec.horizon();
    let a = spec.alphabet().size();
    let columns: Vec<Vec<(usize, f64)>> = spec
        .steps()
        .par_iter()
        .map(|kernel| {
            let rows = kernel.num_rows();
            kernel
                .context()
                .iter()
                .enumerate()
                .map(|(pos, &i)| {
                    let w = kernel.radix_weight(pos);
                    let mut best = 0.0f64;
                    for idx in 0..rows {
                        let d = (idx / w) % a;
                        for b in (d + 1)..a {
                            let other = idx + (b - d) * w;
                            best = best.max(tv_unchecked(kernel.row(idx), kernel.row(other)));
                        }
                    }
                    (i, best)
                })
                .collect()
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col {
            m[(i, j)] = v;
        }
    }
    InterdependenceMatrix::from_dense(m)
}

/// Literal supremum over every prefix, perturbed state and intermediate
/// trajectory, ignoring context signatures. Cross-check for [`compute_h_exact`].
pub fn compute_h_unpruned(spec: &ProcessSpec, budget: Budget) -> Result<InterdependenceMatrix> {
    budget.check("unpruned interdependence matrix", unpruned_cost(spec))?;
    let n = spec.horizon();
    let alphabet = spec.alphabet();
    let a = alphabet.size();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![0.0f64; j];
            let mut other = vec![0; j];
            for_each_sequence(alphabet, j, |h| {
                let p = spec.kernel_unchecked(j, h);
                other.copy_from_slice(h);
                for (i, best) in col.iter_mut().enumerate() {
                    for b in (h[i] + 1)..a {
                        other[i] = b;
                        *best = best.max(tv_unchecked(p, spec.kernel_unchecked(j, &other)));
                    }
                    other[i] = h[i];
                }
            });
            col
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    InterdependenceMatrix::from_dense(m)
}

/// `max_j Σ_{i<j} H[i][j]`, the induced ℓ1 norm of a nonnegative `H`.
pub fn column_sum_alpha(h: &InterdependenceMatrix) -> f64 {
    h.as_matrix()
        .column_iter()
        .map(|c| c.iter().sum::<f64>())
        .fold(0.0, f64::max)
}

/// Per-lag envelope `φ_k = max_i H[i][i+k]` and its sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    /// `phi[k-1]` is the envelope at lag `k`.
    pub phi: Vec<f64>,
    pub sum: f64,
}

impl DecayProfile {
    pub fn is_subcritical(&self) -> bool {
        self.sum < 1.0
    }
}

pub fn uniform_decay_profile(h: &InterdependenceMatrix) -> DecayProfile {
    let n = h.n();
    let phi: Vec<f64> = (1..n)
        .map(|k| (0..n - k).map(|i| h.get(i, i + k)).fold(0.0, f64::max))
        .collect();
    let sum = phi.iter().sum();
    DecayProfile { phi, sum }
}

/// Result of tuning a [`WindowMixture`] to a target column sum.
#[derive(Debug, Clone)]
pub struct CalibratedWindow {
    pub mixture: WindowMixture,
    pub spec: ProcessSpec,
    pub h: InterdependenceMatrix,
    pub alpha: f64,
}

/// Column-sum tolerance accepted by [`calibrate_window`].
pub const CALIBRATION_TOL: f64 = 1e-3;

/// Bisects the mixture weight until the exact `H` of the window process has
/// `column_sum_alpha` equal to `target` within [`CALIBRATION_TOL`].
pub fn calibrate_window(
    alphabet: Alphabet,
    width: usize,
    n: usize,
    target: f64,
    lag_decay: f64,
    budget: Budget,
) -> Result<CalibratedWindow> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(MdcError::Calibration(format!("target alpha {target} must be >= 0")));
    }
    if alphabet.size() < 2 && target > 0.0 {
        return Err(MdcError::Calibration("a one-symbol alphabet has no dependence".into()));
    }
    let eval = |beta: f64| -> Result<CalibratedWindow> {
        let mixture = WindowMixture { width, beta, lag_decay };
        let spec = mixture.build(alphabet, n)?;
        let h = compute_h_exact(&spec, budget)?;
        let alpha = column_sum_alpha(&h);
        Ok(CalibratedWindow { mixture, spec, h, alpha })
    };
    let top = eval(1.0)?;
    if top.alpha + CALIBRATION_TOL < target {
        return Err(MdcError::Calibration(format!(
            "largest reachable column sum is {} < target {target}",
            top.alpha
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = eval(0.0)?;
    for _ in 0..100 {
        if (best.alpha - target).abs() <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let cand = eval(mid)?;
        if cand.alpha < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (cand.alpha - target).abs() < (best.alpha - target).abs() {
            best = cand;
        }
    }
    if (best.alpha - target).abs() > CALIBRATION_TOL {
        return Err(MdcError::Calibration(format!(
            "closest column sum {} misses target {target}",
            best.alpha
        )));
    }
    Ok(best)
}
