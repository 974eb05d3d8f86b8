//! Tail bounds of the form `P(|f − E f| ≥ t) ≤ 2 exp(−2t² / proxy)`.
//!
//! Every bound is described by its variance proxy. The exact matrix-decoupled
//! proxy `‖Γc‖₂²` is the reference; the rest are relaxations of it
//! (spectral, uniform decay, Markov, tree, sparse-terminal, scalar collapse)
//! or literature baselines reported for comparison only.

use std::fmt;

use crate::dependency::{column_sum_alpha, compute_h_exact, uniform_decay_profile, InterdependenceMatrix};
use crate::error::{MdcError, Result};
use crate::process::{Budget, ProcessSpec};
use crate::resolvent::{operator_norms, resolvent, spectral_kappa, variance_proxy, Resolvent};
use crate::target::{SensitivityVector, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    /// `‖Γc‖₂²`.
    Mdc,
    /// `‖c‖₂² / κ` with `κ = ‖Γ‖₂⁻²`.
    Kappa,
    /// `‖c‖₂² / (1 − S)²` from a per-lag decay envelope.
    UniformDecay,
    /// `‖c‖₂² / (1 − α)²` for superdiagonal `H`.
    Markov,
    /// `N ‖c‖∞² / (1 − αD)²` for forest-structured `H`.
    Tree,
    /// `c_N² / (1 − α)²` under a column-sum bound.
    SparseTerminal,
    /// `N ‖Γ‖∞² ‖c‖∞²`.
    ScalarCollapse,
    /// Unconditional-matrix baseline `N ((1−α)/(1−2α))² ‖c‖∞²`.
    Kontorovich,
    /// Metric-conversion baseline `‖c‖₂² / (1 − √α)²`.
    Samson,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Mdc => "mdc",
            BoundKind::Kappa => "kappa",
            BoundKind::UniformDecay => "uniform_decay",
            BoundKind::Markov => "markov",
            BoundKind::Tree => "tree",
            BoundKind::SparseTerminal => "sparse_terminal",
            BoundKind::ScalarCollapse => "scalar_collapse",
            BoundKind::Kontorovich => "kontorovich",
            BoundKind::Samson => "samson",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Applicability {
    Applicable,
    Inapplicable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailBound {
    pub kind: BoundKind,
    /// Variance proxy; `+∞` when inapplicable.
    pub proxy: f64,
    pub applicability: Applicability,
    /// False for literature baselines whose full constants are not reproduced.
    pub certified: bool,
}

impl TailBound {
    fn applicable(kind: BoundKind, proxy: f64) -> Self {
        Self {
            kind,
            proxy,
            applicability: Applicability::Applicable,
            certified: true,
        }
    }

    fn inapplicable(kind: BoundKind, reason: impl Into<String>) -> Self {
        Self {
            kind,
            proxy: f64::INFINITY,
            applicability: Applicability::Inapplicable(reason.into()),
            certified: true,
        }
    }

    fn comparison_only(mut self) -> Self {
        self.certified = false;
        self
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn is_applicable(&self) -> bool {
        self.applicability == Applicability::Applicable
    }

    /// Applicable and certified: a bound that may be relied on.
    pub fn is_valid(&self) -> bool {
        self.is_applicable() && self.certified
    }

    pub fn reason(&self) -> &str {
        match &self.applicability {
            Applicability::Applicable if self.certified => "",
            Applicability::Applicable => "comparison-only",
            Applicability::Inapplicable(r) => r,
        }
    }

    /// `min(1, 2 exp(−2t²/proxy))`; 1 when inapplicable or `t <= 0`.
    pub fn delta_at(&self, t: f64) -> f64 {
        if !self.is_applicable() || t <= 0.0 {
            return 1.0;
        }
        if self.proxy == 0.0 {
            return 0.0;
        }
        (2.0 * (-2.0 * t * t / self.proxy).exp()).min(1.0)
    }
}

/// Exact matrix-decoupled bound, proxy `‖Γc‖₂²`.
pub fn mdc_tail(h: &InterdependenceMatrix, c: &SensitivityVector) -> Result<TailBound> {
    mdc_tail_with(&resolvent(h), c)
}

pub fn mdc_tail_with(gamma: &Resolvent, c: &SensitivityVector) -> Result<TailBound> {
    Ok(TailBound::applicable(BoundKind::Mdc, variance_proxy(gamma, c)?))
}

/// Spectral relaxation, proxy `‖c‖₂² / κ`.
pub fn kappa_tail(h: &InterdependenceMatrix, c: &SensitivityVector) -> Result<TailBound> {
    kappa_tail_with(&resolvent(h), c)
}

pub fn kappa_tail_with(gamma: &Resolvent, c: &SensitivityVector) -> Result<TailBound> {
    if c.len() != gamma.n() {
        return Err(MdcError::DimensionMismatch {
            expected: gamma.n(),
            got: c.len(),
        });
    }
    Ok(TailBound::applicable(BoundKind::Kappa, c.norm2_sq() / spectral_kappa(gamma)))
}

/// Uniform-decay relaxation, proxy `‖c‖₂² / (1 − S)²` when `S < 1`.
pub fn uniform_decay_tail(h: &InterdependenceMatrix, c: &SensitivityVector) -> TailBound {
    let profile = uniform_decay_profile(h);
    if profile.is_subcritical() {
        let gap = 1.0 - profile.sum;
        TailBound::applicable(BoundKind::UniformDecay, c.norm2_sq() / (gap * gap))
    } else {
        TailBound::inapplicable(
            BoundKind::UniformDecay,
            format!("decay envelope sums to {} >= 1", profile.sum),
        )
    }
}

/// Contracting Markov chain bound, proxy `‖c‖₂² / (1 − α)²`.
pub fn markov_tail(alpha: f64, c: &SensitivityVector) -> TailBound {
    if !(alpha >= 0.0) {
        return TailBound::inapplicable(BoundKind::Markov, format!("alpha {alpha} is negative"));
    }
    if alpha >= 1.0 {
        return TailBound::inapplicable(BoundKind::Markov, format!("alpha {alpha} >= 1: chain is not contracting"));
    }
    let gap = 1.0 - alpha;
    TailBound::applicable(BoundKind::Markov, c.norm2_sq() / (gap * gap))
}

/// Sub-critical causal tree bound for unit sensitivities, proxy `N / (1 − αD)²`.
pub fn tree_tail(alpha: f64, max_out_degree: usize, n: usize) -> TailBound {
    if max_out_degree == 0 {
        return TailBound::inapplicable(BoundKind::Tree, "out-degree bound D must be >= 1");
    }
    let ad = alpha * max_out_degree as f64;
    if !(alpha >= 0.0) || ad >= 1.0 {
        return TailBound::inapplicable(
            BoundKind::Tree,
            format!("alpha*D = {ad} >= 1: tree is not sub-critical"),
        );
    }
    let gap = 1.0 - ad;
    TailBound::applicable(BoundKind::Tree, n as f64 / (gap * gap))
}

/// Dimension-free bound for a terminal-only target, proxy `c_N² / (1 − α)²`
/// with `α` the column-sum bound on `H`.
pub fn sparse_terminal_tail(alpha: f64, c_n: f64) -> TailBound {
    if !(alpha >= 0.0) || alpha >= 1.0 {
        return TailBound::inapplicable(
            BoundKind::SparseTerminal,
            format!("column-sum alpha {alpha} not in [0, 1)"),
        );
    }
    let gap = 1.0 - alpha;
    TailBound::applicable(BoundKind::SparseTerminal, c_n * c_n / (gap * gap))
}

/// Relaxation `N ‖Γ‖∞² ‖c‖∞²` obtained by separating `Γ` from `c`.
pub fn scalar_collapse_tail(gamma: &Resolvent, c: &SensitivityVector) -> Result<TailBound> {
    if c.len() != gamma.n() {
        return Err(MdcError::DimensionMismatch {
            expected: gamma.n(),
            got: c.len(),
        });
    }
    let row = operator_norms(gamma.as_matrix()).linf;
    let ci = c.norm_inf();
    Ok(TailBound::applicable(
        BoundKind::ScalarCollapse,
        c.len() as f64 * row * row * ci * ci,
    ))
}

/// Variance multiplier `((1 − α)/(1 − 2α))²` of the unconditional matrix
/// `Δ[i][j] = α^(j−i)`; `None` when it diverges (`α >= 1/2`).
pub fn kontorovich_multiplier(alpha: f64) -> Option<f64> {
    if (0.0..0.5).contains(&alpha) {
        let r = (1.0 - alpha) / (1.0 - 2.0 * alpha);
        Some(r * r)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KontorovichBaseline {
    pub alpha: f64,
    /// `‖Δ‖∞ = Σ_{k=1}^{N−1} α^k` at the actual horizon.
    pub delta_inf: f64,
    pub multiplier: Option<f64>,
    pub divergent: bool,
    /// `N · multiplier · ‖c‖∞²`, comparison-only.
    pub unconditional: TailBound,
    pub scalar_collapse: TailBound,
}

pub fn kontorovich_baseline(alpha: f64, c: &SensitivityVector, gamma: &Resolvent) -> Result<KontorovichBaseline> {
    let n = c.len();
    let delta_inf: f64 = (1..n).map(|k| alpha.powi(k as i32)).sum();
    let multiplier = kontorovich_multiplier(alpha);
    let unconditional = match multiplier {
        Some(m) => {
            let ci = c.norm_inf();
            TailBound::applicable(BoundKind::Kontorovich, n as f64 * m * ci * ci).comparison_only()
        }
        None => TailBound::inapplicable(
            BoundKind::Kontorovich,
            format!("alpha {alpha} >= 1/2: unconditional resolvent bound diverges"),
        )
        .comparison_only(),
    };
    Ok(KontorovichBaseline {
        alpha,
        delta_inf,
        multiplier,
        divergent: multiplier.is_none(),
        unconditional,
        scalar_collapse: scalar_collapse_tail(gamma, c)?,
    })
}

/// Transportation-cost baseline, proxy `‖c‖₂² / (1 − √α)²`, comparison-only.
pub fn samson_baseline(alpha: f64, c: &SensitivityVector) -> TailBound {
    if !(0.0..1.0).contains(&alpha) {
        return TailBound::inapplicable(BoundKind::Samson, format!("alpha {alpha} not in [0, 1)")).comparison_only();
    }
    let gap = 1.0 - alpha.sqrt();
    TailBound::applicable(BoundKind::Samson, c.norm2_sq() / (gap * gap)).comparison_only()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub horizon: usize,
    pub alphabet: usize,
    pub family: String,
    pub target: String,
    /// Column-sum bound `‖H‖₁`.
    pub alpha: f64,
    /// Largest superdiagonal entry when `H` is superdiagonal.
    pub markov_alpha: Option<f64>,
    /// Largest out-degree of `H`'s support when it is a forest.
    pub max_out_degree: Option<usize>,
    pub c_description: String,
    pub kappa: f64,
    pub kappa_lower: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub scenario: ScenarioSummary,
    pub h: InterdependenceMatrix,
    pub gamma: Resolvent,
    /// Sorted by proxy, smallest first.
    pub bounds: Vec<TailBound>,
    pub kontorovich: KontorovichBaseline,
}

impl BoundReport {
    pub fn get(&self, kind: BoundKind) -> Option<&TailBound> {
        self.bounds.iter().find(|b| b.kind == kind)
    }

    pub fn mdc(&self) -> &TailBound {
        self.get(BoundKind::Mdc).expect("mdc row always present")
    }
}

fn describe_c(c: &SensitivityVector) -> String {
    let s = c.as_slice();
    if s.iter().all(|&v| v == s[0]) {
        format!("uniform {}", s[0])
    } else if c.is_terminal_only() {
        format!("terminal {}", s[s.len() - 1])
    } else {
        format!("l2^2 {} linf {}", c.norm2_sq(), c.norm_inf())
    }
}

/// Evaluates every bound for a scenario and checks that the exact proxy is
/// the smallest among the valid ones.
pub fn compare_bounds(spec: &ProcessSpec, f: &TargetFunction, c: &SensitivityVector, budget: Budget) -> Result<BoundReport> {
    if c.len() != spec.horizon() {
        return Err(MdcError::DimensionMismatch {
            expected: spec.horizon(),
            got: c.len(),
        });
    }
    let h = compute_h_exact(spec, budget)?;
    let gamma = resolvent(&h);
    let alpha = column_sum_alpha(&h);
    let n = spec.horizon();

    let mut bounds = vec![
        mdc_tail_with(&gamma, c)?,
        kappa_tail_with(&gamma, c)?,
        uniform_decay_tail(&h, c),
    ];

    let markov_alpha = h.is_superdiagonal().then(|| h.max_entry());
    match markov_alpha {
        Some(a) => {
            bounds.push(markov_tail(a, c));
            bounds.push(samson_baseline(a, c));
        }
        None => {
            let why = "H has entries off the first superdiagonal";
            bounds.push(TailBound::inapplicable(BoundKind::Markov, why));
            bounds.push(TailBound::inapplicable(BoundKind::Samson, why).comparison_only());
        }
    }

    let max_out_degree = h.is_forest().then(|| h.max_out_degree().max(1));
    match max_out_degree {
        Some(d) => {
            let mut t = tree_tail(h.max_entry(), d, n);
            // unit-c bound scaled to max sensitivity: Γc <= ‖c‖∞ Γ1 entry-wise
            let ci = c.norm_inf();
            t.proxy *= ci * ci;
            bounds.push(t);
        }
        None => bounds.push(TailBound::inapplicable(BoundKind::Tree, "a column of H has several nonzeros")),
    }

    if c.is_terminal_only() {
        bounds.push(sparse_terminal_tail(alpha, c.as_slice()[n - 1]));
    } else {
        bounds.push(TailBound::inapplicable(
            BoundKind::SparseTerminal,
            "sensitivity has non-terminal mass",
        ));
    }

    let kontorovich = kontorovich_baseline(markov_alpha.unwrap_or(alpha), c, &gamma)?;
    bounds.push(kontorovich.scalar_collapse.clone());
    let mut unconditional = kontorovich.unconditional.clone();
    if markov_alpha.is_none() {
        unconditional = TailBound::inapplicable(BoundKind::Kontorovich, "H has entries off the first superdiagonal")
            .comparison_only();
    }
    bounds.push(unconditional);

    bounds.sort_by(|a, b| a.proxy.total_cmp(&b.proxy).then(a.kind.cmp(&b.kind)));

    let mdc = variance_proxy(&gamma, c)?;
    for b in bounds.iter().filter(|b| b.is_valid()) {
        if mdc > b.proxy * (1.0 + 1e-9) + 1e-12 {
            return Err(MdcError::Invariant(format!(
                "exact proxy {mdc} exceeds relaxed {} proxy {}",
                b.name(),
                b.proxy
            )));
        }
    }

    let profile = uniform_decay_profile(&h);
    let scenario = ScenarioSummary {
        horizon: n,
        alphabet: spec.alphabet().size(),
        family: spec.family().name().to_string(),
        target: f.name().to_string(),
        alpha,
        markov_alpha,
        max_out_degree,
        c_description: describe_c(c),
        kappa: spectral_kappa(&gamma),
        kappa_lower: profile.is_subcritical().then(|| (1.0 - profile.sum).powi(2)),
    };
    Ok(BoundReport {
        scenario,
        h,
        gamma,
        bounds,
        kontorovich,
    })
}

/// One point of a proxy-versus-horizon sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub mdc_proxy: f64,
    pub scalar_collapse_proxy: f64,
    /// `c_N² / (1 − α)²`, `None` when `α >= 1` or `c` is not terminal-only.
    pub sparse_terminal_bound: Option<f64>,
    pub alpha: f64,
}

pub fn sweep_point(h: &InterdependenceMatrix, c: &SensitivityVector) -> Result<SweepRow> {
    let gamma = resolvent(h);
    let alpha = column_sum_alpha(h);
    let n = h.n();
    let sparse = c.is_terminal_only().then(|| sparse_terminal_tail(alpha, c.as_slice()[n - 1]));
    Ok(SweepRow {
        n,
        mdc_proxy: variance_proxy(&gamma, c)?,
        scalar_collapse_proxy: scalar_collapse_tail(&gamma, c)?.proxy,
        sparse_terminal_bound: sparse.filter(|b| b.is_applicable()).map(|b| b.proxy),
        alpha,
    })
}
