//! Forward sampling and empirical tail estimates checked against bounds.

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::TailBound;
use crate::error::{invalid, MdcError, Result};
use crate::process::{exact_expectation, Budget, ProcessSpec, Symbol};
use crate::report::{VerificationRecord, VerificationReport};
use crate::sampling::{sample_weighted, stream_rng};
use crate::target::{SensitivityVector, TargetFunction};

pub const MIN_TAIL_SAMPLES: u64 = 1000;
pub const DEFAULT_GRID_POINTS: usize = 20;

/// Chain-rule sample of one trajectory.
pub fn sample_trajectory<R: Rng + ?Sized>(spec: &ProcessSpec, rng: &mut R) -> Vec<Symbol> {
    let n = spec.horizon();
    let mut x = Vec::with_capacity(n);
    for j in 0..n {
        let p = spec.kernel_unchecked(j, &x);
        x.push(sample_weighted(p, 1.0, rng));
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    pub t_grid: Vec<f64>,
    /// `P̂(|f − mean| ≥ t)` per grid point.
    pub frequencies: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: u64,
    /// Centering value.
    pub mean: f64,
    /// True when `mean` is the exact expectation rather than the sample mean.
    pub exact_mean: bool,
    pub sample_mean: f64,
    pub sample_std: f64,
}

/// Estimates `P(|f(X) − E f(X)| ≥ t)` on `t_grid`. Centers by the exact
/// expectation when enumeration fits in `budget`, otherwise by the sample mean.
pub fn empirical_tail(
    spec: &ProcessSpec,
    f: &TargetFunction,
    t_grid: &[f64],
    n_samples: u64,
    seed: u64,
    budget: Budget,
) -> Result<TailEstimate> {
    if t_grid.is_empty() {
        return Err(invalid("t grid must not be empty"));
    }
    if let Some(t) = t_grid.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(invalid(format!("t = {t} must be finite and >= 0")));
    }
    if n_samples < MIN_TAIL_SAMPLES {
        return Err(invalid(format!("need at least {MIN_TAIL_SAMPLES} samples, got {n_samples}")));
    }
    f.check_horizon(spec.horizon())?;
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| f.evaluate(&sample_trajectory(spec, &mut stream_rng(seed, i))))
        .collect();
    let nf = n_samples as f64;
    let sample_mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - sample_mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let (mean, exact_mean) = match exact_expectation(spec, f, budget) {
        Ok(m) => (m, true),
        Err(MdcError::BudgetExceeded { .. }) => (sample_mean, false),
        Err(e) => return Err(e),
    };
    let mut frequencies = Vec::with_capacity(t_grid.len());
    let mut stderr = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let hits = values.iter().filter(|v| (*v - mean).abs() >= t).count();
        let p = hits as f64 / nf;
        frequencies.push(p);
        stderr.push(if hits == 0 { 3.0 / nf } else { (p * (1.0 - p) / nf).sqrt() });
    }
    Ok(TailEstimate {
        t_grid: t_grid.to_vec(),
        frequencies,
        stderr,
        n_samples,
        mean,
        exact_mean,
        sample_mean,
        sample_std: var.sqrt(),
    })
}

/// `DEFAULT_GRID_POINTS` equally spaced values from 0 to `Σ c_j`.
pub fn default_t_grid(c: &SensitivityVector) -> Vec<f64> {
    let top = c.total();
    let m = DEFAULT_GRID_POINTS;
    (0..m).map(|i| top * i as f64 / (m - 1) as f64).collect()
}

/// One grid point of a tail-vs-bound comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCheckRow {
    pub t: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound_name: String,
    pub bound_value: f64,
    /// `empirical / bound_value`.
    pub tightness: f64,
    pub pass: bool,
}

pub fn tail_rows(estimate: &TailEstimate, bound: &TailBound) -> Vec<TailCheckRow> {
    estimate
        .t_grid
        .iter()
        .zip(&estimate.frequencies)
        .zip(&estimate.stderr)
        .map(|((&t, &p), &se)| {
            let b = bound.delta_at(t);
            TailCheckRow {
                t,
                empirical: p,
                stderr: se,
                bound_name: bound.name().to_string(),
                bound_value: b,
                tightness: if b > 0.0 { p / b } else { f64::INFINITY },
                pass: p <= b + 3.0 * se,
            }
        })
        .collect()
}

/// Asserts `frequency ≤ δ(t) + 3·stderr` at every grid point.
pub fn check_tail_domination(estimate: &TailEstimate, bound: &TailBound) -> VerificationReport {
    let mut report = VerificationReport::new();
    for row in tail_rows(estimate, bound) {
        report.push(VerificationRecord::upper(
            format!("tail:{}@t={}", row.bound_name, row.t),
            None,
            None,
            row.empirical,
            row.bound_value,
            3.0 * row.stderr,
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::mdc_tail;
    use crate::dependency::compute_h_exact;
    use crate::process::{build_independent, build_markov, build_uniform, Alphabet};

    fn bits() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn point_mass_trajectory() {
        let spec = build_markov(&[vec![0.0, 1.0], vec![1.0, 0.0]], &[1.0, 0.0], 5).unwrap();
        let mut rng = stream_rng(9, 0);
        for _ in 0..10 {
            assert_eq!(sample_trajectory(&spec, &mut rng), vec![0, 1, 0, 1, 0]);
        }
    }

    #[test]
    fn markov_one_step_law() {
        let spec = build_markov(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[1.0, 0.0], 2).unwrap();
        let n = 100_000u64;
        let ones = (0..n).filter(|&i| sample_trajectory(&spec, &mut stream_rng(1, i))[1] == 1).count();
        let p = ones as f64 / n as f64;
        assert!((p - 0.1).abs() <= 4.0 * (0.1 * 0.9 / n as f64).sqrt());
    }

    #[test]
    fn uniform_bits_marginals() {
        let spec = build_uniform(bits(), 20).unwrap();
        let n = 100_000u64;
        let mut sums = [0u64; 20];
        for i in 0..n {
            for (s, x) in sums.iter_mut().zip(sample_trajectory(&spec, &mut stream_rng(2, i))) {
                *s += x as u64;
            }
        }
        let se = (0.25 / n as f64).sqrt();
        assert!(sums.iter().all(|&s| (s as f64 / n as f64 - 0.5).abs() <= 4.0 * se));
    }

    #[test]
    fn constant_has_no_tail() {
        let spec = build_uniform(bits(), 6).unwrap();
        let est = empirical_tail(&spec, &TargetFunction::constant(6, 1.0), &[0.1, 1.0], 2000, 0, Budget::default()).unwrap();
        assert_eq!(est.frequencies, vec![0.0, 0.0]);
        assert!(est.exact_mean);
        assert_eq!(est.stderr[0], 3.0 / 2000.0);
    }

    #[test]
    fn binomial_extreme_tail() {
        let spec = build_uniform(bits(), 10).unwrap();
        let est = empirical_tail(&spec, &TargetFunction::symbol_sum(10), &[5.0, 5.5], 1_000_000, 4, Budget::default()).unwrap();
        let p = 2.0 / 1024.0;
        assert!((est.frequencies[0] - p).abs() <= 3.0 * (p * (1.0 - p) / 1e6).sqrt());
        assert_eq!(est.frequencies[1], 0.0);
        assert_eq!(est.mean, 5.0);
    }

    #[test]
    fn tail_errors() {
        let spec = build_uniform(bits(), 3).unwrap();
        let f = TargetFunction::symbol_sum(3);
        assert!(empirical_tail(&spec, &f, &[], 5000, 0, Budget::default()).is_err());
        assert!(empirical_tail(&spec, &f, &[1.0], 10, 0, Budget::default()).is_err());
    }

    #[test]
    fn sample_mean_fallback() {
        let spec = build_independent(bits(), 30, &[vec![0.3, 0.7]]).unwrap();
        let f = TargetFunction::symbol_sum(30);
        let est = empirical_tail(&spec, &f, &[1.0], 5000, 0, Budget(1000)).unwrap();
        assert!(!est.exact_mean);
        assert_eq!(est.mean, est.sample_mean);
    }

    #[test]
    fn grid_spans_total_sensitivity() {
        let g = default_t_grid(&SensitivityVector::uniform(4, 0.5).unwrap());
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.0);
        assert!((g[19] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn chain_domination() {
        let spec = build_markov(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[0.5, 0.5], 8).unwrap();
        let f = TargetFunction::count(8, 1);
        let c = f.declared().unwrap().clone();
        let bound = mdc_tail(&compute_h_exact(&spec, Budget::default()).unwrap(), &c).unwrap();
        let est = empirical_tail(&spec, &f, &default_t_grid(&c), 100_000, 7, Budget::default()).unwrap();
        let r = check_tail_domination(&est, &bound);
        assert_eq!(r.records.len(), 20);
        assert!(r.passed());
    }
}
