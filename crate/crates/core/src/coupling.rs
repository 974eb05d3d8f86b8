//! Executable form of the coupling argument behind the main inequality.
//!
//! Two trajectories `Y` and `Z` share a prefix, differ at a pivot step `k`,
//! and are then advanced jointly, each step drawn from the maximal coupling
//! of their two history-conditioned kernels. The disagreement probabilities
//! `v_j = P(Y_j ≠ Z_j)` satisfy `(I − Hᵀ) v ≤ e_k`, hence `v ≤ Γᵀ e_k`, and the
//! Doob martingale increment at step `k` has range at most `(Γc)_k`.
//!
//! This module provides the coupling itself (sampled and as an exact joint
//! law), exhaustive enumerators for `v` and for the martingale oscillation,
//! and report-producing checks of both inequalities.

use rand::Rng;
use rayon::prelude::*;

use crate::dependency::{compute_h_exact, tv_unchecked, InterdependenceMatrix};
use crate::error::{invalid, MdcError, Result};
use crate::process::{Budget, ProcessSpec, Symbol};
use crate::report::{VerificationRecord, VerificationReport};
use crate::resolvent::{resolvent, Resolvent};
use crate::sampling::{sample_weighted, stream_rng};
use crate::target::{find_sensitivity_violation, SensitivityVector, TargetFunction};

/// Tolerance on exact (enumerated) inequalities.
pub const EXACT_TOL: f64 = 1e-9;

/// Maximal coupling of two distributions on the same finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalCoupling {
    overlap: Vec<f64>,
    overlap_total: f64,
    excess_mu: Vec<f64>,
    excess_mu_total: f64,
    excess_nu: Vec<f64>,
    excess_nu_total: f64,
    tv: f64,
}

impl MaximalCoupling {
    pub fn new(mu: &[f64], nu: &[f64]) -> Result<Self> {
        if mu.len() != nu.len() {
            return Err(MdcError::DimensionMismatch {
                expected: mu.len(),
                got: nu.len(),
            });
        }
        Ok(Self::new_unchecked(mu, nu))
    }

    fn new_unchecked(mu: &[f64], nu: &[f64]) -> Self {
        let clip = |v: f64| if v < 0.0 { 0.0 } else { v };
        let overlap: Vec<f64> = mu.iter().zip(nu).map(|(a, b)| a.min(*b)).collect();
        let excess_mu: Vec<f64> = mu.iter().zip(nu).map(|(a, b)| clip(a - b)).collect();
        let excess_nu: Vec<f64> = mu.iter().zip(nu).map(|(a, b)| clip(b - a)).collect();
        Self {
            overlap_total: overlap.iter().sum(),
            excess_mu_total: excess_mu.iter().sum(),
            excess_nu_total: excess_nu.iter().sum(),
            overlap,
            excess_mu,
            excess_nu,
            tv: tv_unchecked(mu, nu),
        }
    }

    pub fn tv(&self) -> f64 {
        self.tv
    }

    /// Draws `(y, z)` with `y ~ μ`, `z ~ ν` and `P(y ≠ z) = TV(μ, ν)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Symbol, Symbol) {
        let agree = self.tv == 0.0 || (self.tv < 1.0 && rng.random::<f64>() >= self.tv);
        if agree && self.overlap_total > 0.0 {
            let a = sample_weighted(&self.overlap, self.overlap_total, rng);
            (a, a)
        } else {
            // residual supports are disjoint, so y != z
            let y = sample_weighted(&self.excess_mu, self.excess_mu_total, rng);
            let z = sample_weighted(&self.excess_nu, self.excess_nu_total, rng);
            (y, z)
        }
    }

    /// Exact joint law as a row-major `|A| × |A|` table.
    pub fn joint(&self) -> Vec<f64> {
        let a = self.overlap.len();
        let mut j = vec![0.0; a * a];
        for (s, &o) in self.overlap.iter().enumerate() {
            j[s * a + s] = o;
        }
        if self.tv > 0.0 && self.excess_mu_total > 0.0 && self.excess_nu_total > 0.0 {
            for (y, &em) in self.excess_mu.iter().enumerate() {
                for (z, &en) in self.excess_nu.iter().enumerate() {
                    j[y * a + z] += self.tv * (em / self.excess_mu_total) * (en / self.excess_nu_total);
                }
            }
        }
        j
    }
}

/// One draw from the maximal coupling of `mu` and `nu`.
pub fn maximal_coupling_step<R: Rng + ?Sized>(mu: &[f64], nu: &[f64], rng: &mut R) -> Result<(Symbol, Symbol)> {
    Ok(MaximalCoupling::new(mu, nu)?.sample(rng))
}

/// Per-step record of a coupled rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledStep {
    pub y: Symbol,
    pub z: Symbol,
    pub disagree: bool,
}

/// A single coupled rollout from pivot `k` to the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTrace {
    pub k: usize,
    pub prefix: Vec<Symbol>,
    pub pivot: (Symbol, Symbol),
    /// Entries for steps `k..N`.
    pub steps: Vec<CoupledStep>,
}

fn check_pivot(spec: &ProcessSpec, k: usize, prefix: &[Symbol], x: Symbol, x_alt: Symbol) -> Result<()> {
    if k >= spec.horizon() {
        return Err(invalid(format!("pivot {k} out of range for horizon {}", spec.horizon())));
    }
    if prefix.len() != k {
        return Err(invalid(format!("prefix must have length {k}, got {}", prefix.len())));
    }
    spec.check_symbols(prefix)?;
    spec.check_symbols(&[x, x_alt])
}

fn rollout<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    prefix: &[Symbol],
    x: Symbol,
    x_alt: Symbol,
    rng: &mut R,
    mut record: impl FnMut(usize, Symbol, Symbol),
) {
    let n = spec.horizon();
    let k = prefix.len();
    let mut y = Vec::with_capacity(n);
    y.extend_from_slice(prefix);
    y.push(x);
    let mut z = y.clone();
    z[k] = x_alt;
    record(k, x, x_alt);
    for j in (k + 1)..n {
        let (a, b) = if y == z {
            let p = spec.kernel_unchecked(j, &y);
            let a = sample_weighted(p, 1.0, rng);
            (a, a)
        } else {
            MaximalCoupling::new_unchecked(spec.kernel_unchecked(j, &y), spec.kernel_unchecked(j, &z)).sample(rng)
        };
        y.push(a);
        z.push(b);
        record(j, a, b);
    }
}

/// Runs one coupled rollout and records every step.
pub fn coupled_trace<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    prefix: &[Symbol],
    x: Symbol,
    x_alt: Symbol,
    rng: &mut R,
) -> Result<CouplingTrace> {
    let k = prefix.len();
    check_pivot(spec, k, prefix, x, x_alt)?;
    let mut steps = Vec::with_capacity(spec.horizon() - k);
    rollout(spec, prefix, x, x_alt, rng, |_, y, z| {
        steps.push(CoupledStep { y, z, disagree: y != z })
    });
    Ok(CouplingTrace {
        k,
        prefix: prefix.to_vec(),
        pivot: (x, x_alt),
        steps,
    })
}

/// Monte Carlo estimate of the discrepancy vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyEstimate {
    pub k: usize,
    pub v_hat: Vec<f64>,
    /// Binomial standard error `sqrt(v̂(1 − v̂)/n)` per coordinate.
    pub stderr: Vec<f64>,
    pub n_samples: u64,
}

/// Estimates `v_j = P(Y_j ≠ Z_j)` from `n_samples` coupled rollouts. Sample
/// `i` uses stream `i` of `seed`.
pub fn simulate_coupled_paths(
    spec: &ProcessSpec,
    k: usize,
    prefix: &[Symbol],
    x: Symbol,
    x_alt: Symbol,
    n_samples: u64,
    seed: u64,
) -> Result<DiscrepancyEstimate> {
    check_pivot(spec, k, prefix, x, x_alt)?;
    if n_samples == 0 {
        return Err(invalid("n_samples must be positive"));
    }
    let n = spec.horizon();
    let counts = (0..n_samples)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, i| {
                let mut rng = stream_rng(seed, i);
                rollout(spec, prefix, x, x_alt, &mut rng, |j, a, b| {
                    if a != b {
                        acc[j] += 1;
                    }
                });
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let nf = n_samples as f64;
    let v_hat: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let stderr = v_hat.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect();
    Ok(DiscrepancyEstimate {
        k,
        v_hat,
        stderr,
        n_samples,
    })
}

/// `Γᵀ e_k`: row `k` of the resolvent, the bound on the discrepancy vector.
pub fn discrepancy_bound(h: &InterdependenceMatrix, k: usize) -> Result<Vec<f64>> {
    if k >= h.n() {
        return Err(invalid(format!("pivot {k} out of range for horizon {}", h.n())));
    }
    Ok(resolvent(h).row(k))
}

fn pair_tree_cost(spec: &ProcessSpec, k: usize) -> u128 {
    let a2 = spec.alphabet().pow(2);
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in (k + 1)..spec.horizon() {
        total = total.saturating_add(level);
        level = level.saturating_mul(a2);
    }
    total
}

/// Exact discrepancy vector of the coupled pair process, by enumerating
/// every joint path of `(Y, Z)` with its maximal-coupling probability.
pub fn exact_discrepancy(
    spec: &ProcessSpec,
    k: usize,
    prefix: &[Symbol],
    x: Symbol,
    x_alt: Symbol,
    budget: Budget,
) -> Result<Vec<f64>> {
    check_pivot(spec, k, prefix, x, x_alt)?;
    budget.check("exact pair process", pair_tree_cost(spec, k))?;
    let n = spec.horizon();
    let mut v = vec![0.0; n];
    v[k] = if x != x_alt { 1.0 } else { 0.0 };
    let mut y: Vec<Symbol> = prefix.to_vec();
    y.push(x);
    let mut z = y.clone();
    z[k] = x_alt;
    pair_walk(spec, &mut y, &mut z, 1.0, &mut v);
    Ok(v)
}

fn pair_walk(spec: &ProcessSpec, y: &mut Vec<Symbol>, z: &mut Vec<Symbol>, mass: f64, v: &mut [f64]) {
    let j = y.len();
    if j == spec.horizon() {
        return;
    }
    // once the histories agree the two kernels coincide for good
    if y == z {
        return;
    }
    let coupling = MaximalCoupling::new_unchecked(spec.kernel_unchecked(j, y), spec.kernel_unchecked(j, z));
    let a = spec.alphabet().size();
    for (idx, &p) in coupling.joint().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (s, t) = (idx / a, idx % a);
        let m = mass * p;
        if s != t {
            v[j] += m;
        }
        y.push(s);
        z.push(t);
        pair_walk(spec, y, z, m, v);
        y.pop();
        z.pop();
    }
}

/// Oscillation `δ_k(prefix) = max_{x,x'} |F_k(prefix, x) − F_k(prefix, x')|`
/// of the Doob martingale, by exact enumeration.
pub fn exact_oscillation(spec: &ProcessSpec, f: &TargetFunction, k: usize, prefix: &[Symbol], budget: Budget) -> Result<f64> {
    f.check_horizon(spec.horizon())?;
    if k >= spec.horizon() || prefix.len() != k {
        return Err(invalid(format!("prefix must have length {k} < horizon {}", spec.horizon())));
    }
    spec.check_symbols(prefix)?;
    budget.check("oscillation", spec.prefix_tree_cost(k + 1).saturating_mul(spec.alphabet().size() as u128))?;
    let mut buf = prefix.to_vec();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for a in 0..spec.alphabet().size() {
        buf.push(a);
        let v = crate::process::conditional_expectation_inner(spec, f, &mut buf);
        buf.pop();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

struct OscillationWalk<'a> {
    spec: &'a ProcessSpec,
    f: &'a TargetFunction,
    bound: &'a [f64],
    worst: Vec<f64>,
    /// Prefixes where the oscillation exceeds the bound.
    violations: Vec<(usize, Vec<Symbol>, f64)>,
}

impl OscillationWalk<'_> {
    /// Returns `F(buf)` and records the oscillation at `buf`.
    fn walk(&mut self, buf: &mut Vec<Symbol>) -> f64 {
        let j = buf.len();
        if j == self.spec.horizon() {
            return self.f.evaluate(buf);
        }
        let p = self.spec.kernel_unchecked(j, buf).to_vec();
        let (mut lo, mut hi, mut mean) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for (a, pa) in p.into_iter().enumerate() {
            buf.push(a);
            let v = self.walk(buf);
            buf.pop();
            lo = lo.min(v);
            hi = hi.max(v);
            mean += pa * v;
        }
        let delta = hi - lo;
        self.worst[j] = self.worst[j].max(delta);
        if delta > self.bound[j] + EXACT_TOL {
            self.violations.push((j, buf.clone(), delta));
        }
        mean
    }
}

fn fmt_prefix(p: &[Symbol]) -> String {
    let parts: Vec<String> = p.iter().map(|s| s.to_string()).collect();
    format!("[{}]", parts.join(" "))
}

/// Checks `δ_k(prefix) ≤ (Γc)_k` at every pivot and every prefix (null
/// prefixes included), after first checking that `c` is a valid
/// sensitivity vector for `f`. A violated sensitivity stops the check.
pub fn verify_oscillation_bound(
    spec: &ProcessSpec,
    f: &TargetFunction,
    c: &SensitivityVector,
    budget: Budget,
) -> Result<VerificationReport> {
    let n = spec.horizon();
    if c.len() != n {
        return Err(MdcError::DimensionMismatch { expected: n, got: c.len() });
    }
    f.check_horizon(n)?;
    let mut report = VerificationReport::new();
    if let Some((j, x, y)) = find_sensitivity_violation(f, c, spec.alphabet(), budget, EXACT_TOL)? {
        let diff = (f.evaluate(&x) - f.evaluate(&y)).abs();
        report.push(VerificationRecord::upper(
            format!("sensitivity x={} y={}", fmt_prefix(&x), fmt_prefix(&y)),
            None,
            Some(j),
            diff,
            c.as_slice()[j],
            EXACT_TOL,
        ));
        return Ok(report);
    }
    report.push(VerificationRecord::upper("sensitivity", None, None, 0.0, 0.0, 0.0));

    budget.check("oscillation tree", spec.prefix_tree_cost(0).saturating_mul(spec.alphabet().size() as u128))?;
    let h = compute_h_exact(spec, budget)?;
    let gc = resolvent(&h).apply(c)?;
    let mut walk = OscillationWalk {
        spec,
        f,
        bound: &gc,
        worst: vec![0.0; n],
        violations: Vec::new(),
    };
    walk.walk(&mut Vec::with_capacity(n));
    for k in 0..n {
        report.push(VerificationRecord::upper("oscillation", Some(k), None, walk.worst[k], gc[k], EXACT_TOL));
    }
    for (k, prefix, delta) in walk.violations {
        report.push(VerificationRecord::upper(
            format!("oscillation prefix={}", fmt_prefix(&prefix)),
            Some(k),
            None,
            delta,
            gc[k],
            EXACT_TOL,
        ));
    }
    Ok(report)
}

/// Exact pair-process checks for one pivot configuration: the one-step
/// recursion `v_j ≤ Σ_m H[m][j] v_m` and the resolved form `v ≤ Γᵀ e_k`.
pub fn verify_exact_discrepancy(
    spec: &ProcessSpec,
    h: &InterdependenceMatrix,
    gamma: &Resolvent,
    prefix: &[Symbol],
    x: Symbol,
    x_alt: Symbol,
    budget: Budget,
) -> Result<VerificationReport> {
    let k = prefix.len();
    let v = exact_discrepancy(spec, k, prefix, x, x_alt, budget)?;
    let bound = gamma.row(k);
    let mut report = VerificationReport::new();
    for j in (k + 1)..spec.horizon() {
        let rhs: f64 = (k..j).map(|m| h.get(m, j) * v[m]).sum();
        report.push(VerificationRecord::upper("recursion", Some(k), Some(j), v[j], rhs, EXACT_TOL));
        report.push(VerificationRecord::upper("discrepancy", Some(k), Some(j), v[j], bound[j], EXACT_TOL));
    }
    Ok(report)
}

/// Exact discrepancy checks for every pivot, every prefix and every ordered
/// pair of distinct pivot symbols. One record per `(check, k, j)` holding the
/// worst case.
pub fn verify_discrepancy_recursion(spec: &ProcessSpec, budget: Budget) -> Result<VerificationReport> {
    let n = spec.horizon();
    let a = spec.alphabet();
    let mut required: u128 = 0;
    for k in 0..n {
        let per = pair_tree_cost(spec, k).saturating_mul(a.pow(2));
        required = required.saturating_add(a.pow(k).saturating_mul(per));
    }
    budget.check("discrepancy recursion", required)?;
    let h = compute_h_exact(spec, budget)?;
    let gamma = resolvent(&h);
    let mut worst: std::collections::BTreeMap<(String, usize, usize), VerificationRecord> = Default::default();
    for k in 0..n {
        let mut failure = None;
        crate::process::for_each_sequence(a, k, |prefix| {
            if failure.is_some() {
                return;
            }
            for x in 0..a.size() {
                for x_alt in 0..a.size() {
                    if x == x_alt {
                        continue;
                    }
                    match verify_exact_discrepancy(spec, &h, &gamma, prefix, x, x_alt, Budget(u64::MAX)) {
                        Ok(r) => {
                            for rec in r.records {
                                let key = (rec.check.clone(), rec.k.unwrap_or(0), rec.j.unwrap_or(0));
                                let replace = worst.get(&key).is_none_or(|w| rec.slack < w.slack);
                                if replace {
                                    worst.insert(key, rec);
                                }
                            }
                        }
                        Err(e) => {
                            failure = Some(e);
                            return;
                        }
                    }
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(VerificationReport {
        records: worst.into_values().collect(),
    })
}

/// Sampled check `v̂_j ≤ (Γᵀ e_k)_j + 3·stderr_j`.
pub fn verify_sampled_discrepancy(
    spec: &ProcessSpec,
    gamma: &Resolvent,
    prefix: &[Symbol],
    x: Symbol,
    x_alt: Symbol,
    n_samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let k = prefix.len();
    let est = simulate_coupled_paths(spec, k, prefix, x, x_alt, n_samples, seed)?;
    let bound = gamma.row(k);
    let mut report = VerificationReport::new();
    for j in k..spec.horizon() {
        report.push(VerificationRecord::upper(
            "sampled_discrepancy",
            Some(k),
            Some(j),
            est.v_hat[j],
            bound[j],
            3.0 * est.stderr[j],
        ));
    }
    Ok(report)
}

/// Samples the maximal coupling `n` times and compares the disagreement rate
/// with `TV(μ, ν)` and both empirical marginals with `μ`, `ν`, each within
/// `z` standard errors of the exact value.
pub fn verify_maximal_coupling(mu: &[f64], nu: &[f64], n: u64, seed: u64, z: f64) -> Result<VerificationReport> {
    let coupling = MaximalCoupling::new(mu, nu)?;
    let a = mu.len();
    // counts: [disagree, y marginal (a), z marginal (a)]
    let counts = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; 1 + 2 * a],
            |mut acc, i| {
                let mut rng = stream_rng(seed, i);
                let (y, zz) = coupling.sample(&mut rng);
                if y != zz {
                    acc[0] += 1;
                }
                acc[1 + y] += 1;
                acc[1 + a + zz] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; 1 + 2 * a],
            |mut l, r| {
                l.iter_mut().zip(r).for_each(|(x, y)| *x += y);
                l
            },
        );
    let nf = n as f64;
    let se = |p: f64| (p * (1.0 - p) / nf).sqrt();
    let mut report = VerificationReport::new();
    let tv = coupling.tv();
    report.push(VerificationRecord::close("coupling_disagreement", None, None, counts[0] as f64 / nf, tv, z * se(tv)));
    for s in 0..a {
        report.push(VerificationRecord::close("coupling_marginal_y", None, Some(s), counts[1 + s] as f64 / nf, mu[s], z * se(mu[s])));
        report.push(VerificationRecord::close("coupling_marginal_z", None, Some(s), counts[1 + a + s] as f64 / nf, nu[s], z * se(nu[s])));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependency::compute_h_exact;
    use crate::process::{build_causal_tree, build_markov, build_uniform, Alphabet};
    use approx::assert_abs_diff_eq;

    fn chain(n: usize) -> ProcessSpec {
        build_markov(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[1.0, 0.0], n).unwrap()
    }

    #[test]
    fn coupling_degenerate_cases() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            let (y, z) = maximal_coupling_step(&[0.3, 0.7], &[0.3, 0.7], &mut rng).unwrap();
            assert_eq!(y, z);
            assert_eq!(maximal_coupling_step(&[1.0, 0.0], &[0.0, 1.0], &mut rng).unwrap(), (0, 1));
        }
        assert!(maximal_coupling_step(&[1.0], &[0.5, 0.5], &mut rng).is_err());
    }

    #[test]
    fn coupling_joint_has_right_marginals() {
        let mu = [0.5, 0.3, 0.2];
        let nu = [0.1, 0.3, 0.6];
        let c = MaximalCoupling::new(&mu, &nu).unwrap();
        let j = c.joint();
        for s in 0..3 {
            let row: f64 = (0..3).map(|t| j[s * 3 + t]).sum();
            let col: f64 = (0..3).map(|t| j[t * 3 + s]).sum();
            assert_abs_diff_eq!(row, mu[s], epsilon = 1e-15);
            assert_abs_diff_eq!(col, nu[s], epsilon = 1e-15);
        }
        let off: f64 = (0..9).filter(|i| i / 3 != i % 3).map(|i| j[i]).sum();
        assert_abs_diff_eq!(off, c.tv(), epsilon = 1e-15);
    }

    #[test]
    fn coupling_frequency_matches_tv() {
        let r = verify_maximal_coupling(&[0.7, 0.3], &[0.4, 0.6], 1_000_000, 11, 3.0).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn discrepancy_bounds() {
        assert_eq!(discrepancy_bound(&InterdependenceMatrix::zeros(3), 1).unwrap(), vec![0.0, 1.0, 0.0]);
        let h = compute_h_exact(&chain(3), Budget::default()).unwrap();
        let b = discrepancy_bound(&h, 0).unwrap();
        assert_abs_diff_eq!(b[1], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(b[2], 0.49, epsilon = 1e-12);
        let star = build_causal_tree(
            &[None, Some(0), Some(0), Some(0), Some(0)],
            &[vec![vec![0.6, 0.4], vec![0.4, 0.6]]],
            &[0.5, 0.5],
        )
        .unwrap();
        let h = compute_h_exact(&star, Budget::default()).unwrap();
        let b = discrepancy_bound(&h, 0).unwrap();
        for (got, want) in b.iter().zip([1.0, 0.2, 0.2, 0.2, 0.2]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_discrepancy_exact_and_sampled() {
        let spec = chain(3);
        let v = exact_discrepancy(&spec, 0, &[], 0, 1, Budget::default()).unwrap();
        assert_abs_diff_eq!(v[1], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2], 0.49, epsilon = 1e-12);
        let est = simulate_coupled_paths(&spec, 0, &[], 0, 1, 100_000, 5).unwrap();
        assert_eq!(est.v_hat[0], 1.0);
        for j in 1..3 {
            assert!((est.v_hat[j] - v[j]).abs() <= 3.0 * (v[j] * (1.0 - v[j]) / 1e5).sqrt());
        }
    }

    #[test]
    fn identical_pivots_never_disagree() {
        let spec = chain(4);
        let est = simulate_coupled_paths(&spec, 1, &[0], 1, 1, 1000, 5).unwrap();
        assert!(est.v_hat.iter().all(|&v| v == 0.0));
        let v = exact_discrepancy(&spec, 1, &[0], 1, 1, Budget::default()).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn independent_discrepancy_vanishes() {
        let spec = build_uniform(Alphabet::new(3).unwrap(), 5).unwrap();
        let est = simulate_coupled_paths(&spec, 1, &[2], 0, 1, 5000, 1).unwrap();
        assert_eq!(est.v_hat[1], 1.0);
        assert!(est.v_hat[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_prefix() {
        let spec = chain(4);
        assert!(simulate_coupled_paths(&spec, 2, &[0], 0, 1, 10, 0).is_err());
        assert!(simulate_coupled_paths(&spec, 1, &[5], 0, 1, 10, 0).is_err());
    }

    #[test]
    fn trace_agrees_before_pivot() {
        let spec = chain(5);
        let mut rng = stream_rng(0, 0);
        let t = coupled_trace(&spec, &[0, 1], 0, 1, &mut rng).unwrap();
        assert_eq!(t.steps.len(), 3);
        assert!(t.steps[0].disagree);
        assert!(t.steps.iter().all(|s| s.disagree == (s.y != s.z)));
    }

    #[test]
    fn oscillation_examples() {
        let b = Budget::default();
        let spec = chain(3);
        let konst = TargetFunction::constant(3, 2.0);
        assert_eq!(exact_oscillation(&spec, &konst, 1, &[0], b).unwrap(), 0.0);
        let iid = build_uniform(Alphabet::new(2).unwrap(), 4).unwrap();
        let sum = TargetFunction::symbol_sum(4);
        for k in 0..4 {
            assert_abs_diff_eq!(exact_oscillation(&iid, &sum, k, &vec![1; k], b).unwrap(), 1.0, epsilon = 1e-12);
        }
        let term = TargetFunction::terminal_indicator(3, 1, 1.0);
        assert_abs_diff_eq!(exact_oscillation(&spec, &term, 0, &[], b).unwrap(), 0.49, epsilon = 1e-12);
    }

    #[test]
    fn oscillation_bound_tight_for_additive() {
        let iid = build_uniform(Alphabet::new(2).unwrap(), 4).unwrap();
        let f = TargetFunction::symbol_sum(4);
        let c = SensitivityVector::uniform(4, 1.0).unwrap();
        let r = verify_oscillation_bound(&iid, &f, &c, Budget::default()).unwrap();
        assert!(r.passed());
        assert!(r.records.iter().filter(|x| x.check == "oscillation").all(|x| x.slack.abs() <= EXACT_TOL + 1e-12));
    }

    #[test]
    fn bad_sensitivity_reported_first() {
        let spec = chain(3);
        let f = TargetFunction::count(3, 1);
        let c = SensitivityVector::new(vec![1.0, 0.2, 1.0]).unwrap();
        let r = verify_oscillation_bound(&spec, &f, &c, Budget::default()).unwrap();
        assert!(!r.passed());
        assert_eq!(r.records.len(), 1);
        assert!(r.records[0].check.starts_with("sensitivity"));
        assert_eq!(r.records[0].j, Some(1));
    }

    #[test]
    fn recursion_holds_on_chain() {
        let r = verify_discrepancy_recursion(&chain(5), Budget::default()).unwrap();
        assert!(r.passed());
    }
}
