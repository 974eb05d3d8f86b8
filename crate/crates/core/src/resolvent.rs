//! The causal resolvent `Γ = (I − H)⁻¹` and the norms built on it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dependency::InterdependenceMatrix;
use crate::error::{invalid, MdcError, Result};
use crate::target::SensitivityVector;

/// `(I − H)⁻¹` for a strictly upper-triangular nonnegative `H`: upper
/// triangular, unit diagonal, entry-wise nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolvent(DMatrix<f64>);

impl Resolvent {
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `Γ c`.
    pub fn apply(&self, c: &SensitivityVector) -> Result<Vec<f64>> {
        if c.len() != self.n() {
            return Err(MdcError::DimensionMismatch {
                expected: self.n(),
                got: c.len(),
            });
        }
        let v = &self.0 * DVector::from_column_slice(c.as_slice());
        Ok(v.iter().copied().collect())
    }

    /// Row `k` of `Γ`, i.e. `Γᵀ e_k`.
    pub fn row(&self, k: usize) -> Vec<f64> {
        self.0.row(k).iter().copied().collect()
    }

    /// `max |(I − H) Γ − I|` entry-wise.
    pub fn residual(&self, h: &InterdependenceMatrix) -> f64 {
        let n = self.n();
        let id = DMatrix::<f64>::identity(n, n);
        let r = (&id - h.as_matrix()) * &self.0 - id;
        r.amax()
    }
}

/// `Γ` by column-wise back-substitution over the nonzeros of `H`:
/// `Γ[r][c] = Σ_{m>r} H[r][m] Γ[m][c]`, `Γ[c][c] = 1`.
pub fn resolvent(h: &InterdependenceMatrix) -> Resolvent {
    let n = h.n();
    let hm = h.as_matrix();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|r| ((r + 1)..n).filter(|&m| hm[(r, m)] != 0.0).map(|m| (m, hm[(r, m)])).collect())
        .collect();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut col = vec![0.0; c + 1];
            col[c] = 1.0;
            for r in (0..c).rev() {
                col[r] = rows[r]
                    .iter()
                    .take_while(|(m, _)| *m <= c)
                    .map(|&(m, v)| v * col[m])
                    .sum();
            }
            col
        })
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for (c, col) in columns.into_iter().enumerate() {
        for (r, v) in col.into_iter().enumerate() {
            g[(r, c)] = v;
        }
    }
    Resolvent(g)
}

/// `Σ_{r=0}^{N−1} Hʳ` by explicit matrix powers. Independent of
/// [`resolvent`]; used to cross-check it.
pub fn neumann_series(h: &InterdependenceMatrix) -> DMatrix<f64> {
    let n = h.n();
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut power = DMatrix::<f64>::identity(n, n);
    for _ in 1..n {
        power = &power * h.as_matrix();
        sum += &power;
    }
    sum
}

/// `‖Γ c‖₂²`.
pub fn variance_proxy(gamma: &Resolvent, c: &SensitivityVector) -> Result<f64> {
    Ok(gamma.apply(c)?.iter().map(|v| v * v).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorms {
    /// Max absolute column sum.
    pub l1: f64,
    /// Max absolute row sum.
    pub linf: f64,
    /// Largest singular value.
    pub l2: f64,
}

pub fn operator_norms(m: &DMatrix<f64>) -> OperatorNorms {
    let l1 = m
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let linf = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    OperatorNorms {
        l1,
        linf,
        l2: spectral_norm(m),
    }
}

const POWER_REL_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;
const FALLBACK_SEED: u64 = 0x5eed_cafe;

/// Largest singular value by power iteration on `MᵀM`, starting from the
/// all-ones direction. If that start is annihilated (orthogonal to every
/// nonzero singular direction) a fixed pseudo-random start is used instead.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 || m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    match power_iterate(&gram, ones) {
        Some(l) => l.sqrt(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
            let v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let v = &v / v.norm();
            power_iterate(&gram, v).unwrap_or(0.0).sqrt()
        }
    }
}

/// Dominant eigenvalue of a PSD matrix, or `None` if the start stagnates at zero.
fn power_iterate(gram: &DMatrix<f64>, mut v: DVector<f64>) -> Option<f64> {
    let mut lambda = 0.0f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = gram * &v;
        let rayleigh = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return if lambda > 0.0 { Some(lambda) } else { None };
        }
        let done = (rayleigh - lambda).abs() <= POWER_REL_TOL * rayleigh.abs();
        lambda = lambda.max(rayleigh);
        v = w / norm;
        if done {
            break;
        }
    }
    Some(lambda)
}

/// `κ = ‖Γ‖₂⁻²`.
pub fn spectral_kappa(gamma: &Resolvent) -> f64 {
    let s = spectral_norm(gamma.as_matrix());
    1.0 / (s * s)
}

/// `(1 − S)²` for a decay envelope with `S = Σ φ_k < 1`; `None` otherwise.
pub fn kappa_lower_bound(phi: &[f64]) -> Result<Option<f64>> {
    if let Some(k) = phi.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid(format!("decay envelope phi[{k}] = {} must be >= 0", phi[k])));
    }
    let s: f64 = phi.iter().sum();
    Ok((s < 1.0).then_some((1.0 - s) * (1.0 - s)))
}
