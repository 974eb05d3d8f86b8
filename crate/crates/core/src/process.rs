//! Finite-alphabet sequential processes.
//!
//! A process of horizon `N` is a list of per-step transition kernels. Step `j`
//! (0-based) declares the history coordinates it reads, its *context*, and
//! stores one probability vector per assignment of those coordinates. Every
//! family (independent, Markov, causal tree, sliding window, explicit tables)
//! lowers to this representation, so downstream code only sees contexts and
//! rows.
//!
//! Indices are 0-based throughout the API: step `j` conditions on a history
//! of length `j`.

use crate::dependency::{dobrushin_alpha, validate_distribution};
use crate::error::{invalid, MdcError, Result};
use crate::target::TargetFunction;

/// A symbol is a dense index into the alphabet.
pub type Symbol = usize;

/// Default cap on kernel evaluations for exhaustive enumeration.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Tolerance on probability vectors summing to one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(invalid("alphabet size must be at least 1"));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    /// `size^exp`, saturating at `u128::MAX`.
    pub fn pow(self, exp: usize) -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..exp {
            acc = acc.saturating_mul(self.0 as u128);
        }
        acc
    }
}

/// Upper limit on kernel evaluations an exhaustive routine may perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Default for Budget {
    fn default() -> Self {
        Budget(DEFAULT_BUDGET)
    }
}

impl Budget {
    pub fn check(self, what: &'static str, required: u128) -> Result<()> {
        if required > self.0 as u128 {
            Err(MdcError::BudgetExceeded {
                what,
                required,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

/// The transition kernel of a single step, tabulated over its context.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    step: usize,
    arity: usize,
    context: Vec<usize>,
    table: Vec<f64>,
}

impl StepKernel {
    /// Builds a step kernel from a flat table.
    ///
    /// `context` lists the history coordinates read by the kernel, strictly
    /// increasing and `< step`. The table holds `arity^context.len()` rows of
    /// `arity` probabilities; rows are ordered by the context symbols read as
    /// a big-endian mixed-radix number (first context coordinate most
    /// significant).
    pub fn new(alphabet: Alphabet, step: usize, context: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        let arity = alphabet.size();
        if context.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "step {step}: context {context:?} must be strictly increasing"
            )));
        }
        if let Some(&last) = context.last() {
            if last >= step {
                return Err(invalid(format!(
                    "step {step}: context coordinate {last} is not in the causal past"
                )));
            }
        }
        let rows = alphabet.pow(context.len());
        if rows.saturating_mul(arity as u128) != table.len() as u128 {
            return Err(invalid(format!(
                "step {step}: table has {} entries, expected {rows} rows of {arity}",
                table.len()
            )));
        }
        for (r, row) in table.chunks(arity).enumerate() {
            validate_distribution(row)
                .map_err(|e| invalid(format!("step {step}, context row {r}: {e}")))?;
        }
        Ok(Self {
            step,
            arity,
            context,
            table,
        })
    }

    /// Tabulates `kernel` over every assignment of the context coordinates.
    /// The closure receives the context symbols in coordinate order.
    pub fn from_fn<F>(alphabet: Alphabet, step: usize, context: Vec<usize>, mut kernel: F) -> Result<Self>
    where
        F: FnMut(&[Symbol]) -> Vec<f64>,
    {
        let arity = alphabet.size();
        let rows = alphabet.pow(context.len());
        if rows > (1u128 << 32) {
            return Err(invalid(format!("step {step}: context too large to tabulate")));
        }
        let mut table = Vec::with_capacity(rows as usize * arity);
        let mut symbols = vec![0; context.len()];
        for _ in 0..rows {
            let row = kernel(&symbols);
            if row.len() != arity {
                return Err(MdcError::DimensionMismatch {
                    expected: arity,
                    got: row.len(),
                });
            }
            table.extend_from_slice(&row);
            odometer_increment(&mut symbols, arity);
        }
        Self::new(alphabet, step, context, table)
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// History coordinates the kernel reads.
    pub fn context(&self) -> &[usize] {
        &self.context
    }

    pub fn num_rows(&self) -> usize {
        self.table.len() / self.arity
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.table[index * self.arity..(index + 1) * self.arity]
    }

    /// Row index for a full history (only context coordinates are read).
    pub fn row_index(&self, history: &[Symbol]) -> usize {
        self.context
            .iter()
            .fold(0, |acc, &c| acc * self.arity + history[c])
    }

    /// Place value of context position `pos` in the row index.
    pub(crate) fn radix_weight(&self, pos: usize) -> usize {
        self.arity.pow((self.context.len() - 1 - pos) as u32)
    }
}

/// Metadata recording how a spec was constructed.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Independent,
    Markov {
        transition: Vec<Vec<f64>>,
        /// Dobrushin contraction coefficient of `transition`.
        alpha: f64,
    },
    CausalTree {
        parent: Vec<Option<usize>>,
        max_out_degree: usize,
    },
    SlidingWindow {
        width: usize,
    },
    Table,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Independent => "independent",
            Family::Markov { .. } => "markov",
            Family::CausalTree { .. } => "tree",
            Family::SlidingWindow { .. } => "window",
            Family::Table => "table",
        }
    }
}

/// A finite-horizon process over a finite alphabet. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    alphabet: Alphabet,
    steps: Vec<StepKernel>,
    family: Family,
}

impl ProcessSpec {
    /// Assembles a spec from explicit step kernels, one per step in order.
    pub fn from_steps(alphabet: Alphabet, steps: Vec<StepKernel>) -> Result<Self> {
        Self::with_family(alphabet, steps, Family::Table)
    }

    fn with_family(alphabet: Alphabet, steps: Vec<StepKernel>, family: Family) -> Result<Self> {
        if steps.is_empty() {
            return Err(invalid("horizon must be at least 1"));
        }
        for (j, s) in steps.iter().enumerate() {
            if s.step != j {
                return Err(invalid(format!("kernel for step {} supplied at position {j}", s.step)));
            }
            if s.arity != alphabet.size() {
                return Err(MdcError::DimensionMismatch {
                    expected: alphabet.size(),
                    got: s.arity,
                });
            }
        }
        Ok(Self {
            alphabet,
            steps,
            family,
        })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn steps(&self) -> &[StepKernel] {
        &self.steps
    }

    /// Context signature of step `j`.
    pub fn context(&self, step: usize) -> &[usize] {
        &self.steps[step].context
    }

    /// Dobrushin coefficient for Markov specs.
    pub fn dobrushin_alpha(&self) -> Option<f64> {
        match &self.family {
            Family::Markov { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    /// Maximum out-degree for causal-tree specs.
    pub fn max_out_degree(&self) -> Option<usize> {
        match &self.family {
            Family::CausalTree { max_out_degree, .. } => Some(*max_out_degree),
            _ => None,
        }
    }

    /// `p_step(· | history)`.
    pub fn kernel_at(&self, step: usize, history: &[Symbol]) -> Result<&[f64]> {
        let n = self.horizon();
        if step >= n {
            return Err(invalid(format!("step {step} out of range for horizon {n}")));
        }
        if history.len() != step {
            return Err(invalid(format!(
                "history for step {step} must have length {step}, got {}",
                history.len()
            )));
        }
        self.check_symbols(history)?;
        Ok(self.kernel_unchecked(step, history))
    }

    /// Kernel lookup without argument validation; `history` must hold at least
    /// the coordinates in the step's context.
    #[inline]
    pub(crate) fn kernel_unchecked(&self, step: usize, history: &[Symbol]) -> &[f64] {
        let k = &self.steps[step];
        k.row(k.row_index(history))
    }

    pub(crate) fn check_symbols(&self, xs: &[Symbol]) -> Result<()> {
        let a = self.alphabet.size();
        match xs.iter().position(|&s| s >= a) {
            Some(p) => Err(invalid(format!(
                "symbol {} at position {p} outside alphabet of size {a}",
                xs[p]
            ))),
            None => Ok(()),
        }
    }

    /// Chain-rule probability of a full trajectory.
    pub fn joint_probability(&self, trajectory: &[Symbol]) -> Result<f64> {
        if trajectory.len() != self.horizon() {
            return Err(invalid(format!(
                "trajectory length {} does not match horizon {}",
                trajectory.len(),
                self.horizon()
            )));
        }
        self.check_symbols(trajectory)?;
        Ok((0..self.horizon())
            .map(|j| self.kernel_unchecked(j, trajectory)[trajectory[j]])
            .product())
    }

    /// Number of kernel evaluations needed to walk the full prefix tree below
    /// a prefix of length `from`.
    pub fn prefix_tree_cost(&self, from: usize) -> u128 {
        let mut total: u128 = 0;
        for depth in 0..(self.horizon() - from.min(self.horizon())) {
            total = total.saturating_add(self.alphabet.pow(depth));
        }
        total
    }
}

fn odometer_increment(digits: &mut [Symbol], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Calls `visit` on every element of `alphabet^n` in lexicographic order.
pub fn for_each_sequence<F: FnMut(&[Symbol])>(alphabet: Alphabet, n: usize, mut visit: F) {
    let mut xs = vec![0; n];
    loop {
        visit(&xs);
        if !odometer_increment(&mut xs, alphabet.size()) {
            break;
        }
    }
}

/// Independent steps with the given marginals: one shared marginal, or one per step.
pub fn build_independent(alphabet: Alphabet, n: usize, marginals: &[Vec<f64>]) -> Result<ProcessSpec> {
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if marginals.len() != 1 && marginals.len() != n {
        return Err(invalid(format!(
            "expected 1 or {n} marginals, got {}",
            marginals.len()
        )));
    }
    let steps = (0..n)
        .map(|j| {
            let m = &marginals[if marginals.len() == 1 { 0 } else { j }];
            StepKernel::new(alphabet, j, Vec::new(), m.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    ProcessSpec::with_family(alphabet, steps, Family::Independent)
}

/// Uniform i.i.d. symbols.
pub fn build_uniform(alphabet: Alphabet, n: usize) -> Result<ProcessSpec> {
    let a = alphabet.size();
    build_independent(alphabet, n, &[vec![1.0 / a as f64; a]])
}

fn validate_square(name: &str, m: &[Vec<f64>], size: usize) -> Result<()> {
    if m.len() != size {
        return Err(invalid(format!("{name} has {} rows, expected {size}", m.len())));
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != size {
            return Err(invalid(format!("{name} row {r} has {} entries, expected {size}", row.len())));
        }
        validate_distribution(row).map_err(|e| invalid(format!("{name} row {r}: {e}")))?;
    }
    Ok(())
}

/// Time-homogeneous Markov chain with transition matrix `transition` and
/// initial law `init`.
pub fn build_markov(transition: &[Vec<f64>], init: &[f64], n: usize) -> Result<ProcessSpec> {
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let alphabet = Alphabet::new(init.len())?;
    validate_square("transition matrix", transition, init.len())?;
    let flat: Vec<f64> = transition.iter().flatten().copied().collect();
    let mut steps = Vec::with_capacity(n);
    steps.push(StepKernel::new(alphabet, 0, Vec::new(), init.to_vec())?);
    for j in 1..n {
        steps.push(StepKernel::new(alphabet, j, vec![j - 1], flat.clone())?);
    }
    let family = Family::Markov {
        transition: transition.to_vec(),
        alpha: dobrushin_alpha(transition)?,
    };
    ProcessSpec::with_family(alphabet, steps, family)
}

/// Process on a directed forest: node `j` reads only `parent[j]`, which must
/// precede it. Roots (`None`) draw from `root_marginal`. `edge_kernels` holds
/// either a single parent-to-child matrix shared by every edge, or one per
/// node (entries at roots are ignored).
pub fn build_causal_tree(
    parent: &[Option<usize>],
    edge_kernels: &[Vec<Vec<f64>>],
    root_marginal: &[f64],
) -> Result<ProcessSpec> {
    let n = parent.len();
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let alphabet = Alphabet::new(root_marginal.len())?;
    if edge_kernels.len() != 1 && edge_kernels.len() != n {
        return Err(invalid(format!(
            "expected 1 or {n} edge kernels, got {}",
            edge_kernels.len()
        )));
    }
    let mut out_degree = vec![0usize; n];
    for (j, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            if p >= j {
                return Err(invalid(format!(
                    "parent of node {j} is {p}; parents must precede children (cycle or unsorted order)"
                )));
            }
            out_degree[p] += 1;
        }
    }
    let mut steps = Vec::with_capacity(n);
    for (j, p) in parent.iter().enumerate() {
        let step = match *p {
            None => StepKernel::new(alphabet, j, Vec::new(), root_marginal.to_vec())?,
            Some(p) => {
                let m = &edge_kernels[if edge_kernels.len() == 1 { 0 } else { j }];
                validate_square(&format!("edge kernel into node {j}"), m, alphabet.size())?;
                StepKernel::new(alphabet, j, vec![p], m.iter().flatten().copied().collect())?
            }
        };
        steps.push(step);
    }
    let family = Family::CausalTree {
        parent: parent.to_vec(),
        max_out_degree: out_degree.into_iter().max().unwrap_or(0).max(1),
    };
    ProcessSpec::with_family(alphabet, steps, family)
}

/// Sliding-window autoregressive process: step `j` reads coordinates
/// `max(0, j-width)..j`. `kernel(step, window)` receives the window symbols
/// oldest first (shorter than `width` for the first steps).
pub fn build_sliding_window<F>(alphabet: Alphabet, width: usize, n: usize, mut kernel: F) -> Result<ProcessSpec>
where
    F: FnMut(usize, &[Symbol]) -> Vec<f64>,
{
    if width == 0 {
        return Err(invalid("window width must be positive"));
    }
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let steps = (0..n)
        .map(|j| {
            let ctx: Vec<usize> = (j.saturating_sub(width)..j).collect();
            StepKernel::from_fn(alphabet, j, ctx, |w| kernel(j, w))
        })
        .collect::<Result<Vec<_>>>()?;
    ProcessSpec::with_family(alphabet, steps, Family::SlidingWindow { width })
}

/// Recency-weighted copy kernel for sliding windows:
///
/// `p(· | window) = (1 - beta) * uniform + beta * sum_m lambda_m * delta(x_{j-m})`
///
/// with lag weights `lambda_m ∝ lag_decay^(m-1)` over the available lags
/// `m = 1..=min(width, j)`. Flipping the symbol at lag `m` moves exactly
/// `beta * lambda_m` of mass, so each column of the interdependence matrix
/// sums to `beta` once a step has any history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMixture {
    pub width: usize,
    pub beta: f64,
    pub lag_decay: f64,
}

/// Lag decay used when none is given.
pub const DEFAULT_LAG_DECAY: f64 = 0.25;

impl WindowMixture {
    pub fn lag_weights(&self, available: usize) -> Vec<f64> {
        let lags = available.min(self.width);
        let raw: Vec<f64> = (0..lags).map(|m| self.lag_decay.powi(m as i32)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Kernel row for a window given oldest first.
    pub fn row(&self, arity: usize, window: &[Symbol]) -> Vec<f64> {
        let base = if window.is_empty() { 1.0 } else { 1.0 - self.beta };
        let mut p = vec![base / arity as f64; arity];
        if !window.is_empty() {
            for (m, w) in self.lag_weights(window.len()).into_iter().enumerate() {
                p[window[window.len() - 1 - m]] += self.beta * w;
            }
        }
        p
    }

    pub fn build(&self, alphabet: Alphabet, n: usize) -> Result<ProcessSpec> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid(format!("mixture weight {} outside [0, 1]", self.beta)));
        }
        if !(self.lag_decay > 0.0 && self.lag_decay.is_finite()) {
            return Err(invalid(format!("lag decay {} must be positive", self.lag_decay)));
        }
        let arity = alphabet.size();
        build_sliding_window(alphabet, self.width, n, |_, w| self.row(arity, w))
    }
}

/// `E[f(X)]` by exhaustive enumeration of the prefix tree.
pub fn exact_expectation(spec: &ProcessSpec, f: &TargetFunction, budget: Budget) -> Result<f64> {
    f.check_horizon(spec.horizon())?;
    budget.check("exact expectation", spec.prefix_tree_cost(0))?;
    let mut buf = Vec::with_capacity(spec.horizon());
    Ok(conditional_expectation_inner(spec, f, &mut buf))
}

/// `F_k(u) = E[f(X) | X_{0..k} = u]` by enumerating every continuation of `u`.
pub fn conditional_expectation(spec: &ProcessSpec, f: &TargetFunction, prefix: &[Symbol], budget: Budget) -> Result<f64> {
    f.check_horizon(spec.horizon())?;
    if prefix.len() > spec.horizon() {
        return Err(invalid("prefix longer than horizon"));
    }
    spec.check_symbols(prefix)?;
    budget.check("conditional expectation", spec.prefix_tree_cost(prefix.len()))?;
    let mut buf = prefix.to_vec();
    Ok(conditional_expectation_inner(spec, f, &mut buf))
}

pub(crate) fn conditional_expectation_inner(spec: &ProcessSpec, f: &TargetFunction, buf: &mut Vec<Symbol>) -> f64 {
    let j = buf.len();
    if j == spec.horizon() {
        return f.evaluate(buf);
    }
    let p = spec.kernel_unchecked(j, buf).to_vec();
    let mut acc = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        buf.push(a);
        acc += pa * conditional_expectation_inner(spec, f, buf);
        buf.pop();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain() -> Vec<Vec<f64>> {
        vec![vec![0.9, 0.1], vec![0.2, 0.8]]
    }

    #[test]
    fn uniform_kernel_ignores_history() {
        let spec = build_uniform(Alphabet::new(2).unwrap(), 4).unwrap();
        assert_eq!(spec.kernel_at(2, &[0, 1]).unwrap(), &[0.5, 0.5]);
    }

    #[test]
    fn markov_kernel_reads_previous_row() {
        let spec = build_markov(&chain(), &[1.0, 0.0], 3).unwrap();
        assert_eq!(spec.kernel_at(1, &[1]).unwrap(), &[0.2, 0.8]);
        assert_eq!(spec.context(2), &[1]);
    }

    #[test]
    fn kernel_at_rejects_bad_arguments() {
        let spec = build_markov(&chain(), &[1.0, 0.0], 3).unwrap();
        assert!(matches!(spec.kernel_at(2, &[0]), Err(MdcError::InvalidArgument(_))));
        assert!(spec.kernel_at(3, &[0, 0, 0]).is_err());
        assert!(spec.kernel_at(1, &[2]).is_err());
    }

    #[test]
    fn joint_probability_chain_rule() {
        let iid = build_uniform(Alphabet::new(2).unwrap(), 3).unwrap();
        assert_eq!(iid.joint_probability(&[1, 0, 1]).unwrap(), 0.125);
        let spec = build_markov(&chain(), &[1.0, 0.0], 3).unwrap();
        assert_abs_diff_eq!(spec.joint_probability(&[0, 0, 1]).unwrap(), 0.09, epsilon = 1e-15);
        assert!(spec.joint_probability(&[0, 0]).is_err());
    }

    #[test]
    fn independent_validation() {
        let a = Alphabet::new(2).unwrap();
        assert!(build_independent(a, 4, &[vec![0.5, 0.4]]).is_err());
        let one = build_independent(a, 1, &[vec![0.3, 0.7]]).unwrap();
        assert_eq!(one.horizon(), 1);
        assert!(one.context(0).is_empty());
        assert!(Alphabet::new(0).is_err());
    }

    #[test]
    fn markov_rejects_non_stochastic() {
        let bad = vec![vec![0.9, 0.2], vec![0.2, 0.8]];
        assert!(build_markov(&bad, &[1.0, 0.0], 3).is_err());
    }

    #[test]
    fn markov_records_dobrushin() {
        let spec = build_markov(&chain(), &[1.0, 0.0], 3).unwrap();
        assert_abs_diff_eq!(spec.dobrushin_alpha().unwrap(), 0.7, epsilon = 1e-15);
        let same = build_markov(&[vec![0.3, 0.7], vec![0.3, 0.7]], &[0.5, 0.5], 3).unwrap();
        assert_eq!(same.dobrushin_alpha(), Some(0.0));
        let id = build_markov(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5], 3).unwrap();
        assert_eq!(id.dobrushin_alpha(), Some(1.0));
    }

    #[test]
    fn tree_out_degree_and_order() {
        let star = [None, Some(0), Some(0), Some(0), Some(0)];
        let edge = vec![vec![0.6, 0.4], vec![0.4, 0.6]];
        let spec = build_causal_tree(&star, std::slice::from_ref(&edge), &[0.5, 0.5]).unwrap();
        assert_eq!(spec.max_out_degree(), Some(4));
        assert_eq!(spec.context(3), &[0]);
        // node 1 claims node 2 as parent: not topologically sorted
        let cyc = [None, Some(2), Some(1)];
        assert!(build_causal_tree(&cyc, &[edge], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn path_tree_matches_markov_law() {
        let edge = chain();
        let path: Vec<Option<usize>> = (0..4usize).map(|j| j.checked_sub(1)).collect();
        let tree = build_causal_tree(&path, std::slice::from_ref(&edge), &[1.0, 0.0]).unwrap();
        let markov = build_markov(&edge, &[1.0, 0.0], 4).unwrap();
        for_each_sequence(tree.alphabet(), 4, |x| {
            assert_eq!(tree.joint_probability(x).unwrap(), markov.joint_probability(x).unwrap());
        });
    }

    #[test]
    fn window_contexts() {
        let a = Alphabet::new(2).unwrap();
        assert!(build_sliding_window(a, 0, 4, |_, _| vec![0.5, 0.5]).is_err());
        let spec = build_sliding_window(a, 3, 6, |_, _| vec![0.5, 0.5]).unwrap();
        assert_eq!(spec.context(1), &[0]);
        assert_eq!(spec.context(5), &[2, 3, 4]);
        let full = build_sliding_window(a, 5, 6, |_, _| vec![0.5, 0.5]).unwrap();
        assert_eq!(full.context(5), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn window_of_one_is_markov() {
        let a = Alphabet::new(3).unwrap();
        let mix = WindowMixture { width: 1, beta: 0.6, lag_decay: 0.25 };
        let spec = mix.build(a, 5).unwrap();
        for j in 1..5 {
            assert_eq!(spec.context(j), &[j - 1]);
            assert_eq!(spec.steps()[j].row(1), spec.steps()[1].row(1));
        }
    }

    #[test]
    fn mixture_rows_are_distributions() {
        let mix = WindowMixture { width: 5, beta: 0.8, lag_decay: 0.25 };
        let row = mix.row(3, &[0, 1, 2, 1]);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(mix.lag_weights(2).iter().sum::<f64>() - 1.0 < 1e-15);
    }

    #[test]
    fn expectations() {
        let a = Alphabet::new(2).unwrap();
        let xor = TargetFunction::new("xor", |x: &[Symbol]| (x[0] ^ x[1]) as f64);
        let iid2 = build_uniform(a, 2).unwrap();
        assert_abs_diff_eq!(exact_expectation(&iid2, &xor, Budget::default()).unwrap(), 0.5);
        let iid4 = build_uniform(a, 4).unwrap();
        let sum = TargetFunction::symbol_sum(4);
        assert_abs_diff_eq!(exact_expectation(&iid4, &sum, Budget::default()).unwrap(), 2.0, epsilon = 1e-12);
        let spec = build_markov(&chain(), &[1.0, 0.0], 2).unwrap();
        let x2 = TargetFunction::terminal_indicator(2, 1, 1.0);
        assert_abs_diff_eq!(exact_expectation(&spec, &x2, Budget::default()).unwrap(), 0.1, epsilon = 1e-15);
        let spec3 = build_markov(&chain(), &[1.0, 0.0], 3).unwrap();
        let x3 = TargetFunction::terminal_indicator(3, 1, 1.0);
        assert_abs_diff_eq!(exact_expectation(&spec3, &x3, Budget::default()).unwrap(), 0.17, epsilon = 1e-15);
    }

    #[test]
    fn expectation_respects_budget() {
        let spec = build_uniform(Alphabet::new(2).unwrap(), 30).unwrap();
        let f = TargetFunction::symbol_sum(30);
        let err = exact_expectation(&spec, &f, Budget(1000)).unwrap_err();
        assert!(matches!(err, MdcError::BudgetExceeded { .. }));
    }
}
