//! Random instances for property tests, acceptance runs and benchmarks.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Result};
use crate::process::{build_causal_tree, Alphabet, ProcessSpec, StepKernel};
use crate::target::TargetFunction;

/// Probability that a kernel entry is forced to zero.
const ZERO_RATE: f64 = 0.15;

/// Flat-Dirichlet probability vector with occasional exact zeros.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..size)
            .map(|_| {
                if size > 1 && rng.random::<f64>() < ZERO_RATE {
                    0.0
                } else {
                    rng.sample::<f64, _>(Exp1)
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.into_iter().map(|v| v / total).collect();
        }
    }
}

/// Spec in which every step reads the full history, with independent random
/// rows for every history.
pub fn random_full_history_spec<R: Rng + ?Sized>(rng: &mut R, alphabet: Alphabet, n: usize) -> Result<ProcessSpec> {
    if n == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let steps = (0..n)
        .map(|j| StepKernel::from_fn(alphabet, j, (0..j).collect(), |_| random_distribution(rng, alphabet.size())))
        .collect::<Result<Vec<_>>>()?;
    ProcessSpec::from_steps(alphabet, steps)
}

/// Target given by an i.i.d. uniform `[-1, 1)` value table.
pub fn random_target_table<R: Rng + ?Sized>(rng: &mut R, alphabet: Alphabet, n: usize) -> Result<TargetFunction> {
    let len = alphabet.pow(n);
    if len > (1 << 24) {
        return Err(invalid("value table too large"));
    }
    let values = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    TargetFunction::table(alphabet, n, values)
}

/// Random parent map on `n` nodes in topological order with every
/// out-degree at most `max_out_degree`. About one node in eight is a root.
pub fn random_forest<R: Rng + ?Sized>(rng: &mut R, n: usize, max_out_degree: usize) -> Vec<Option<usize>> {
    let mut degree = vec![0usize; n];
    let mut parent = vec![None; n];
    for j in 1..n {
        if rng.random::<f64>() < 0.125 {
            continue;
        }
        let open: Vec<usize> = (0..j).filter(|&p| degree[p] < max_out_degree).collect();
        if open.is_empty() {
            continue;
        }
        let p = open[rng.random_range(0..open.len())];
        degree[p] += 1;
        parent[j] = Some(p);
    }
    parent
}

/// Random causal tree with one random edge kernel per node.
pub fn random_tree_spec<R: Rng + ?Sized>(
    rng: &mut R,
    alphabet: Alphabet,
    n: usize,
    max_out_degree: usize,
) -> Result<ProcessSpec> {
    let parent = random_forest(rng, n, max_out_degree);
    let a = alphabet.size();
    let kernels: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| (0..a).map(|_| random_distribution(rng, a)).collect())
        .collect();
    build_causal_tree(&parent, &kernels, &random_distribution(rng, a))
}
