//! Target functions and their bounded-difference sensitivity vectors.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, MdcError, Result};
use crate::process::{for_each_sequence, Alphabet, Budget, Symbol};

/// Coordinate-wise bounded-difference constants `c_j >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityVector(Vec<f64>);

impl SensitivityVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if let Some(j) = c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(format!("sensitivity c[{j}] = {} must be finite and >= 0", c[j])));
        }
        Ok(Self(c))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// `value * e_{n-1}`: only the terminal coordinate matters.
    pub fn terminal(n: usize, value: f64) -> Result<Self> {
        let mut c = vec![0.0; n];
        if let Some(last) = c.last_mut() {
            *last = value;
        }
        Self::new(c)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, &c| m.max(c))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// True when every coordinate but the last is zero.
    pub fn is_terminal_only(&self) -> bool {
        self.0.split_last().is_some_and(|(_, head)| head.iter().all(|&c| c == 0.0))
    }

    /// True when `self[j] >= other[j] - tol` for all `j`.
    pub fn dominates(&self, other: &SensitivityVector, tol: f64) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| *a >= *b - tol)
    }
}

type EvalFn = dyn Fn(&[Symbol]) -> f64 + Send + Sync;

/// A real-valued function of a full trajectory, optionally carrying a
/// declared sensitivity vector.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    horizon: Option<usize>,
    eval: Arc<EvalFn>,
    declared: Option<SensitivityVector>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("declared", &self.declared)
            .finish()
    }
}

impl TargetFunction {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[Symbol]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            horizon: None,
            eval: Arc::new(eval),
            declared: None,
        }
    }

    pub fn with_declared(mut self, c: SensitivityVector) -> Self {
        self.horizon = Some(c.len());
        self.declared = Some(c);
        self
    }

    pub fn with_horizon(mut self, n: usize) -> Self {
        self.horizon = Some(n);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared(&self) -> Option<&SensitivityVector> {
        self.declared.as_ref()
    }

    #[inline]
    pub fn evaluate(&self, x: &[Symbol]) -> f64 {
        (self.eval)(x)
    }

    pub(crate) fn check_horizon(&self, n: usize) -> Result<()> {
        match self.horizon {
            Some(h) if h != n => Err(MdcError::DimensionMismatch { expected: n, got: h }),
            _ => Ok(()),
        }
    }

    /// `f(x) = value`; sensitivity zero.
    pub fn constant(n: usize, value: f64) -> Self {
        Self::new("constant", move |_: &[Symbol]| value)
            .with_declared(SensitivityVector(vec![0.0; n]))
    }

    /// `f(x) = sum_i x_i`, symbols read as integers; `c_j = |A| - 1`.
    pub fn symbol_sum_over(n: usize, alphabet: Alphabet) -> Self {
        let span = (alphabet.size() - 1) as f64;
        Self::new("sum", |x: &[Symbol]| x.iter().map(|&s| s as f64).sum())
            .with_declared(SensitivityVector(vec![span; n]))
    }

    /// Binary-alphabet `sum_i x_i`.
    pub fn symbol_sum(n: usize) -> Self {
        Self::symbol_sum_over(n, Alphabet::new(2).expect("nonzero"))
    }

    /// `f(x) = #{i : x_i = symbol}`; `c = 1`.
    pub fn count(n: usize, symbol: Symbol) -> Self {
        Self::new("count", move |x: &[Symbol]| x.iter().filter(|&&s| s == symbol).count() as f64)
            .with_declared(SensitivityVector(vec![1.0; n]))
    }

    /// `f(x) = scale * 1{x_{N-1} = symbol}`; `c = scale * e_{N-1}`.
    pub fn terminal_indicator(n: usize, symbol: Symbol, scale: f64) -> Self {
        let c = SensitivityVector::terminal(n, scale.abs()).expect("finite scale");
        Self::new("terminal", move |x: &[Symbol]| {
            if x.last() == Some(&symbol) {
                scale
            } else {
                0.0
            }
        })
        .with_declared(c)
    }

    /// Parity of the number of occurrences of `symbol`; `c = 1`.
    pub fn parity(n: usize, symbol: Symbol) -> Self {
        Self::new("parity", move |x: &[Symbol]| (x.iter().filter(|&&s| s == symbol).count() % 2) as f64)
            .with_declared(SensitivityVector(vec![1.0; n]))
    }

    /// Explicit value table over `alphabet^n` in lexicographic order (first
    /// coordinate most significant). No declared sensitivity.
    pub fn table(alphabet: Alphabet, n: usize, values: Vec<f64>) -> Result<Self> {
        let expected = alphabet.pow(n);
        if expected != values.len() as u128 {
            return Err(invalid(format!(
                "value table has {} entries, expected {expected}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("value table contains non-finite entries"));
        }
        let a = alphabet.size();
        Ok(Self::new("table", move |x: &[Symbol]| {
            values[x.iter().fold(0usize, |acc, &s| acc * a + s)]
        })
        .with_horizon(n))
    }
}

/// Minimal single-coordinate sensitivities by exhaustion:
/// `c_j = max |f(x) - f(x')|` over `x, x'` differing only at `j`.
pub fn lipschitz_vector_oracle(f: &TargetFunction, alphabet: Alphabet, n: usize, budget: Budget) -> Result<SensitivityVector> {
    f.check_horizon(n)?;
    let a = alphabet.size();
    let required = alphabet
        .pow(n)
        .saturating_mul(n as u128)
        .saturating_mul(a as u128);
    budget.check("lipschitz oracle", required)?;
    let mut c = vec![0.0f64; n];
    let mut y = vec![0; n];
    for_each_sequence(alphabet, n, |x| {
        let fx = f.evaluate(x);
        y.copy_from_slice(x);
        for j in 0..n {
            // pairs are symmetric; only look upwards
            for b in (x[j] + 1)..a {
                y[j] = b;
                c[j] = c[j].max((fx - f.evaluate(&y)).abs());
            }
            y[j] = x[j];
        }
    });
    SensitivityVector::new(c)
}

/// First pair `(x, y)` violating `|f(x) - f(y)| <= sum_j c_j 1{x_j != y_j}`
/// among single-coordinate flips, or `None` if `c` is valid.
///
/// Single flips suffice: a vector valid for every one-coordinate change is
/// valid for all pairs by the triangle inequality along a path of flips.
pub fn find_sensitivity_violation(
    f: &TargetFunction,
    c: &SensitivityVector,
    alphabet: Alphabet,
    budget: Budget,
    tol: f64,
) -> Result<Option<(usize, Vec<Symbol>, Vec<Symbol>)>> {
    let n = c.len();
    let oracle = lipschitz_vector_oracle(f, alphabet, n, budget)?;
    let Some(j) = (0..n).find(|&j| oracle.0[j] > c.0[j] + tol) else {
        return Ok(None);
    };
    let a = alphabet.size();
    let mut witness = None;
    for_each_sequence(alphabet, n, |x| {
        if witness.is_some() {
            return;
        }
        let fx = f.evaluate(x);
        let mut y = x.to_vec();
        for b in 0..a {
            y[j] = b;
            if (fx - f.evaluate(&y)).abs() > c.0[j] + tol {
                witness = Some((j, x.to_vec(), y.clone()));
                return;
            }
        }
    });
    Ok(witness)
}
