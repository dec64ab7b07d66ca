//! Executable inequality checks over constructed codes, random codes and
//! random instances, and the configurable suite that runs them.
//!
//! Every check returns a [`BoundReport`] whose verdict is `lhs ≤ rhs + tol`
//! for the main inequality and every side [`Condition`]. Tampered inputs go
//! through the `*_with` / `*_lengths` variants, which is how negative
//! controls are expressed.

pub mod random;
mod suite;

use rand::Rng;
use serde::Serialize;

use crate::codec::{
    build_deterministic_code, build_prefix_code, build_stochastic_code, cgf_of_lengths,
    code_metrics, nth_codeword, prefix_codeword_length, Code,
};
use crate::covering::{
    g_of_plan, g_quantity, greedy_cover, induced_output_weights, CoveringPlan, DistortionSpec,
};
use crate::probability::{majorizes, renyi_bits, FinitePmf, Weights};
use crate::ratedistortion::{converse_slack, theorem1_check};
use crate::tolerance;
use crate::{Error, Exec, Extended, Result};

pub use suite::{run_suite, Budgets, Family, SuiteConfig, SuiteReport, Summary};

/// One side inequality `lhs ≤ rhs` (or `|lhs − rhs| ≤ tol` for equalities).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Condition {
    pub fn le(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Condition {
            name: name.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs + tol,
        }
    }

    pub fn eq(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Condition {
            name: name.to_string(),
            lhs,
            rhs,
            holds: (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub claim: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs` of the main inequality.
    pub slack: f64,
    pub verdict: bool,
    pub conditions: Vec<Condition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    fn new(claim: &str, lhs: f64, rhs: f64, tol: f64, conditions: Vec<Condition>) -> Self {
        let verdict = lhs <= rhs + tol && conditions.iter().all(|c| c.holds);
        BoundReport {
            claim: claim.to_string(),
            instance: String::new(),
            lhs,
            rhs,
            slack: rhs - lhs,
            verdict,
            conditions,
            note: None,
        }
    }

    pub fn on(mut self, instance: impl Into<String>) -> Self {
        self.instance = instance.into();
        self
    }

    /// Failing report for a check that could not run.
    pub fn error(claim: &str, instance: impl Into<String>, err: &Error) -> Self {
        BoundReport {
            claim: claim.to_string(),
            instance: instance.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            verdict: false,
            conditions: Vec::new(),
            note: Some(err.to_string()),
        }
    }

    /// Names of failed conditions, plus `main` if the main inequality failed.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.clone())
            .collect();
        if !self.verdict && out.is_empty() {
            out.push("main".into());
        }
        out
    }
}

/// Rényi order `1/(1+t)` for a CGF parameter `t > 0`.
fn order(t: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::param(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    Ok(1.0 / (1.0 + t))
}

/// Codeword length of every decoder entry.
pub fn length_table(code: &Code) -> Vec<usize> {
    code.decoder().iter().map(|e| e.codeword.len()).collect()
}

fn weighted_lengths(code: &Code, source: &FinitePmf, lengths: &[usize]) -> Vec<(f64, usize)> {
    code.encoder()
        .iter()
        .enumerate()
        .flat_map(|(x, bs)| {
            bs.iter()
                .map(move |b| (source.prob(x) * b.prob, lengths[b.entry]))
        })
        .filter(|(w, _)| *w > 0.0)
        .collect()
}

fn emitted_entries(code: &Code) -> Vec<usize> {
    let mut used = vec![false; code.decoder().len()];
    code.encoder()
        .iter()
        .flatten()
        .for_each(|b| used[b.entry] = true);
    (0..used.len()).filter(|&i| used[i]).collect()
}

fn feasible_g(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<f64> {
    match g_quantity(source, spec, level, epsilon, alpha)? {
        Extended::Finite(g) => Ok(g),
        Extended::Infinite => Err(Error::Infeasible {
            uncovered_mass: crate::covering::uncovered_mass(source, spec, level)?,
            epsilon,
        }),
    }
}

/// Exact excess of the stochastic and prefix constructions. With `k* = 1`
/// the "otherwise `w_1`" branch is the same codeword as `w_{k*}`, so nothing
/// is pushed out of the ball and the excess is `γ` instead of `ε`.
pub fn stochastic_excess_target(plan: &CoveringPlan) -> (&'static str, f64) {
    if plan.k_star() == 1 {
        ("excess = gamma (single cell)", plan.gamma_mass())
    } else {
        ("excess = epsilon", plan.epsilon())
    }
}

fn excess_condition(plan: &CoveringPlan, excess: f64) -> Condition {
    let (name, target) = stochastic_excess_target(plan);
    Condition::eq(name, excess, target, tolerance::EQUALITY)
}

/// Stochastic construction: excess `= ε` and `cgf ≤ G_{1/(1+t)}`.
pub fn check_achievability(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
) -> Result<BoundReport> {
    let plan = greedy_cover(source, spec, level, epsilon)?;
    check_achievability_with(&plan, &build_stochastic_code(&plan), source, spec, t)
}

pub fn check_achievability_with(
    plan: &CoveringPlan,
    code: &Code,
    source: &FinitePmf,
    spec: &DistortionSpec,
    t: f64,
) -> Result<BoundReport> {
    let alpha = order(t)?;
    let m = code_metrics(code, source, spec, plan.distortion_level(), t)?;
    let g = g_of_plan(plan, alpha)?;
    let conditions = vec![excess_condition(plan, m.excess_probability)];
    Ok(BoundReport::new(
        "achievability",
        m.cgf,
        g,
        tolerance::INEQUALITY,
        conditions,
    ))
}

/// Converse for a code with injective decoder:
/// `G_{1/(1+t)} − log2 log2(1 + min(|X|,|Y|)) ≤ cgf`, together with the
/// injectivity bound on `Σ 2^{−ℓ}` and the Hölder step
/// `H_{1/(1+t)}(Ȳ) − log2 Σ 2^{−ℓ} ≤ cgf`.
pub fn check_converse(
    code: &Code,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
) -> Result<BoundReport> {
    let g = feasible_g(source, spec, level, epsilon, order(t)?)?;
    check_converse_lengths(
        code,
        &length_table(code),
        source,
        spec,
        level,
        epsilon,
        t,
        g,
    )
}

/// [`check_converse`] against a given `G` and an explicit length table.
#[allow(clippy::too_many_arguments)]
pub fn check_converse_lengths(
    code: &Code,
    lengths: &[usize],
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
    g: f64,
) -> Result<BoundReport> {
    let alpha = order(t)?;
    let m = code_metrics(code, source, spec, level, t)?;
    if m.excess_probability > epsilon + tolerance::EQUALITY {
        return Err(Error::Precondition(format!(
            "code violates the excess constraint: {} > {epsilon}",
            m.excess_probability
        )));
    }
    if !code.decoder_is_injective() {
        return Err(Error::Precondition(
            "converse applies to injective decoders".into(),
        ));
    }
    let cgf = cgf_of_lengths(&weighted_lengths(code, source, lengths), t);
    let used = emitted_entries(code);
    let kraft_like: f64 = used.iter().map(|&i| 0.5f64.powi(lengths[i] as i32)).sum();
    // the min(|X|,|Y|) form needs |Ȳ| ≤ |X|, which only deterministic encoders guarantee
    let c1_size = if code.encoder().iter().all(|b| b.len() == 1) {
        spec.num_source().min(spec.num_repro())
    } else {
        used.len()
    };
    let dist = code.entry_distribution(source);
    let h_out = renyi_bits(&used.iter().map(|&i| dist[i]).collect::<Vec<_>>(), alpha)?;
    let conditions = vec![
        Condition::le(
            "injective length sum",
            kraft_like,
            (1.0 + c1_size as f64).log2(),
            tolerance::INEQUALITY,
        ),
        Condition::le(
            "holder",
            h_out - kraft_like.log2(),
            cgf,
            tolerance::INEQUALITY,
        ),
    ];
    let floor = g - converse_slack(spec.num_source(), spec.num_repro());
    Ok(BoundReport::new(
        "converse",
        floor,
        cgf,
        tolerance::INEQUALITY,
        conditions,
    ))
}

/// Length chain for the stochastic construction: for every `i ≤ k*`,
/// `t·ℓ(w_i) ≤ t·log2 i ≤ t·log2 Σ_j (P_Ŷ(y_j)/P_Ŷ(y_i))^{1/(1+t)}`.
pub fn check_lemma3(plan: &CoveringPlan, t: f64) -> Result<BoundReport> {
    let lengths: Vec<usize> = (1..=plan.k_star() as u64)
        .map(|i| nth_codeword(i).map(|w| w.len()))
        .collect::<Result<_>>()?;
    check_lemma3_lengths(plan, t, &lengths)
}

pub fn check_lemma3_lengths(plan: &CoveringPlan, t: f64, lengths: &[usize]) -> Result<BoundReport> {
    let alpha = order(t)?;
    let p = induced_output_weights(plan);
    let mut left = (f64::INFINITY, 0.0, 0.0);
    let mut right = (f64::INFINITY, 0.0, 0.0);
    for (idx, &pi) in p.iter().enumerate() {
        let i = (idx + 1) as f64;
        let l = t * lengths[idx] as f64;
        let mid = t * i.log2();
        let sum: f64 = p.iter().map(|&pj| (pj / pi).powf(alpha)).sum();
        let r = t * sum.log2();
        if mid - l < left.0 {
            left = (mid - l, l, mid);
        }
        if r - mid < right.0 {
            right = (r - mid, mid, r);
        }
    }
    let tol = tolerance::EQUALITY * 1e-2;
    let conditions = vec![
        Condition::le("length ≤ log i", left.1, left.2, tol),
        Condition::le("log i ≤ rényi sum", right.1, right.2, tol),
    ];
    let worst = if left.0 <= right.0 {
        (left.1, left.2)
    } else {
        (right.1, right.2)
    };
    Ok(BoundReport::new(
        "length-chain",
        worst.0,
        worst.1,
        tol,
        conditions,
    ))
}

/// Sampling budget for [`check_majorization`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct MajorizationBudget {
    /// Enumerate every deterministic map when `|Y|^|X|` is at most this.
    pub max_maps: u64,
    /// Number of random feasible kernels.
    pub kernels: usize,
}

impl Default for MajorizationBudget {
    fn default() -> Self {
        MajorizationBudget {
            max_maps: 243,
            kernels: 10_000,
        }
    }
}

/// Induced `P_Ŷ` against marginals of feasible kernels: every marginal must
/// be majorized by `P_Ŷ` and have `H_α ≥ G_α` for each order in `alphas`.
#[allow(clippy::too_many_arguments)]
pub fn check_majorization<R: Rng + ?Sized>(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    alphas: &[f64],
    budget: MajorizationBudget,
    rng: &mut R,
) -> Result<BoundReport> {
    let plan = greedy_cover(source, spec, level, epsilon)?;
    check_majorization_with(&plan, source, spec, alphas, budget, rng)
}

pub fn check_majorization_with<R: Rng + ?Sized>(
    plan: &CoveringPlan,
    source: &FinitePmf,
    spec: &DistortionSpec,
    alphas: &[f64],
    budget: MajorizationBudget,
    rng: &mut R,
) -> Result<BoundReport> {
    let level = plan.distortion_level();
    let epsilon = plan.epsilon();
    let ny = spec.num_repro();
    let p_hat = Weights::new(induced_output_weights(plan))?;
    let g: Vec<f64> = alphas
        .iter()
        .map(|&a| g_of_plan(plan, a))
        .collect::<Result<_>>()?;

    let mut marginals: Vec<Vec<f64>> = Vec::new();
    // the construction's own output, rebuilt from scratch
    marginals.push(induced_output_weights(&greedy_cover(
        source, spec, level, epsilon,
    )?));
    let nx = spec.num_source();
    let total_maps = (ny as u128).checked_pow(nx as u32).unwrap_or(u128::MAX);
    let mut maps_checked = 0u64;
    let mut good_maps: Vec<Vec<f64>> = Vec::new();
    if total_maps <= u128::from(budget.max_maps) {
        let mut map = vec![0usize; nx];
        for index in 0..total_maps as u64 {
            let mut rest = index;
            for slot in map.iter_mut() {
                *slot = (rest % ny as u64) as usize;
                rest /= ny as u64;
            }
            let k = random::map_kernel(&map, ny);
            if random::kernel_excess(source, spec, level, &k) <= epsilon + tolerance::COVER {
                maps_checked += 1;
                marginals.push(random::kernel_marginal(source, ny, &k));
                good_maps.push(k);
            }
        }
    }
    for _ in 0..budget.kernels {
        let k = random::random_feasible_kernel(rng, source, spec, level, epsilon);
        let k = match rng.gen_range(0..3) {
            0 if !good_maps.is_empty() => {
                let m = &good_maps[rng.gen_range(0..good_maps.len())];
                random::mix_kernels(m, &k, rng.gen_range(0.5..1.0))
            }
            1 => match random::random_feasible_map(rng, source, spec, level, epsilon) {
                Some(map) => {
                    random::mix_kernels(&random::map_kernel(&map, ny), &k, rng.gen_range(0.5..1.0))
                }
                None => k,
            },
            _ => k,
        };
        marginals.push(random::kernel_marginal(source, ny, &k));
    }

    let mut unmajorized = 0usize;
    let mut deficit = (f64::NEG_INFINITY, 0.0, 0.0);
    for m in &marginals {
        if !majorizes(&p_hat, &Weights::new(m.clone())?)? {
            unmajorized += 1;
        }
        for (a, &ga) in alphas.iter().zip(&g) {
            let h = renyi_bits(m, *a)?;
            if ga - h > deficit.0 {
                deficit = (ga - h, ga, h);
            }
        }
    }
    let conditions = vec![Condition::le(
        "unmajorized marginals",
        unmajorized as f64,
        0.0,
        0.0,
    )];
    let mut report = BoundReport::new(
        "majorization",
        deficit.1,
        deficit.2,
        tolerance::INEQUALITY,
        conditions,
    );
    report.note = Some(format!(
        "{} marginals ({} deterministic maps)",
        marginals.len(),
        maps_checked
    ));
    Ok(report)
}

/// `(ε − γ)·β^{−t/(1+t)}·log2 e / (t·2^{(t/(1+t))·G})`.
pub fn deterministic_correction(plan: &CoveringPlan, t: f64) -> Result<f64> {
    let alpha = order(t)?;
    let g = g_of_plan(plan, alpha)?;
    let s = t / (1.0 + t);
    let gap = (plan.epsilon() - plan.gamma_mass()).max(0.0);
    Ok(gap * plan.beta_mass().powf(-s) * std::f64::consts::LOG2_E / (t * (s * g).exp2()))
}

/// `G_{1/(1+t)} + deterministic_correction`.
pub fn deterministic_bound(plan: &CoveringPlan, t: f64) -> Result<f64> {
    Ok(g_of_plan(plan, order(t)?)? + deterministic_correction(plan, t)?)
}

/// Deterministic construction: excess `= γ ≤ ε` and `cgf ≤ G + correction`.
pub fn check_deterministic(
    plan: &CoveringPlan,
    source: &FinitePmf,
    spec: &DistortionSpec,
    t: f64,
) -> Result<BoundReport> {
    let code = build_deterministic_code(plan);
    check_deterministic_lengths(plan, &code, &length_table(&code), source, spec, t)
}

pub fn check_deterministic_lengths(
    plan: &CoveringPlan,
    code: &Code,
    lengths: &[usize],
    source: &FinitePmf,
    spec: &DistortionSpec,
    t: f64,
) -> Result<BoundReport> {
    let m = code_metrics(code, source, spec, plan.distortion_level(), t)?;
    let cgf = cgf_of_lengths(&weighted_lengths(code, source, lengths), t);
    let conditions = vec![
        Condition::le(
            "excess ≤ epsilon",
            m.excess_probability,
            plan.epsilon(),
            tolerance::EQUALITY,
        ),
        Condition::eq(
            "excess = gamma",
            m.excess_probability,
            plan.gamma_mass(),
            tolerance::EQUALITY,
        ),
    ];
    Ok(BoundReport::new(
        "deterministic",
        cgf,
        deterministic_bound(plan, t)?,
        tolerance::INEQUALITY,
        conditions,
    ))
}

/// Prefix construction: prefix-free, Kraft sum ≤ 1, excess `= ε`, and
/// `G ≤ cgf ≤ G + floor(log2 k*) + 1`.
pub fn check_prefix(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
) -> Result<BoundReport> {
    let plan = greedy_cover(source, spec, level, epsilon)?;
    check_prefix_with(&plan, &build_prefix_code(&plan), source, spec, t)
}

pub fn check_prefix_with(
    plan: &CoveringPlan,
    code: &Code,
    source: &FinitePmf,
    spec: &DistortionSpec,
    t: f64,
) -> Result<BoundReport> {
    let alpha = order(t)?;
    let m = code_metrics(code, source, spec, plan.distortion_level(), t)?;
    let g = g_of_plan(plan, alpha)?;
    let width = prefix_codeword_length(plan.k_star()) as f64;
    let words: Vec<_> = code.decoder().iter().map(|e| &e.codeword).collect();
    let clashes = words
        .iter()
        .enumerate()
        .flat_map(|(i, a)| words.iter().enumerate().map(move |(j, b)| (i, a, j, b)))
        .filter(|(i, a, j, b)| i != j && a.is_prefix_of(b))
        .count();
    let conditions = vec![
        Condition::le("prefix clashes", clashes as f64, 0.0, 0.0),
        Condition::le("kraft", code.kraft_sum(), 1.0, tolerance::EQUALITY),
        excess_condition(plan, m.excess_probability),
        Condition::le("G ≤ cgf", g, m.cgf, tolerance::INEQUALITY),
    ];
    Ok(BoundReport::new(
        "prefix-upper",
        m.cgf,
        g + width,
        tolerance::INEQUALITY,
        conditions,
    ))
}

/// Prefix converse: any prefix code meeting the constraint has `cgf ≥ G`;
/// the Kraft sum replaces the injectivity bound.
#[allow(clippy::too_many_arguments)]
pub fn check_prefix_converse_lengths(
    code: &Code,
    lengths: &[usize],
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
    g: f64,
) -> Result<BoundReport> {
    let alpha = order(t)?;
    let m = code_metrics(code, source, spec, level, t)?;
    if m.excess_probability > epsilon + tolerance::EQUALITY {
        return Err(Error::Precondition(format!(
            "code violates the excess constraint: {} > {epsilon}",
            m.excess_probability
        )));
    }
    if !code.decoder_is_injective() {
        return Err(Error::Precondition(
            "converse applies to injective decoders".into(),
        ));
    }
    let cgf = cgf_of_lengths(&weighted_lengths(code, source, lengths), t);
    let used = emitted_entries(code);
    let kraft: f64 = used.iter().map(|&i| 0.5f64.powi(lengths[i] as i32)).sum();
    let dist = code.entry_distribution(source);
    let h_out = renyi_bits(&used.iter().map(|&i| dist[i]).collect::<Vec<_>>(), alpha)?;
    let conditions = vec![
        Condition::le("kraft", kraft, 1.0, tolerance::EQUALITY),
        Condition::le("holder", h_out - kraft.log2(), cgf, tolerance::INEQUALITY),
    ];
    Ok(BoundReport::new(
        "prefix-converse",
        g,
        cgf,
        tolerance::INEQUALITY,
        conditions,
    ))
}

pub fn check_prefix_converse(
    code: &Code,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
) -> Result<BoundReport> {
    let g = feasible_g(source, spec, level, epsilon, order(t)?)?;
    check_prefix_converse_lengths(
        code,
        &length_table(code),
        source,
        spec,
        level,
        epsilon,
        t,
        g,
    )
}

/// `t` values for the monotonicity part of [`check_remark1`].
pub const CGF_LIMIT_T_GRID: [f64; 12] = [
    1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0,
];

/// CGF limits: `|cgf(1e-6) − mean| ≤ 1e-4`, `|cgf(64) − max| ≤ 0.05`, and
/// `cgf` non-decreasing in `t`.
pub fn check_remark1(code: &Code, source: &FinitePmf) -> Result<BoundReport> {
    check_remark1_lengths(code, &length_table(code), source)
}

pub fn check_remark1_lengths(
    code: &Code,
    lengths: &[usize],
    source: &FinitePmf,
) -> Result<BoundReport> {
    let pairs = weighted_lengths(code, source, lengths);
    let true_pairs = weighted_lengths(code, source, &length_table(code));
    let mean: f64 = true_pairs.iter().map(|(w, l)| w * *l as f64).sum();
    let max = true_pairs.iter().map(|p| p.1).max().unwrap_or(0) as f64;
    let curve: Vec<f64> = CGF_LIMIT_T_GRID
        .iter()
        .map(|&t| cgf_of_lengths(&pairs, t))
        .collect();
    let drop = curve.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let low = (curve[0] - mean).abs();
    let high = (curve[curve.len() - 1] - max).abs();
    let conditions = vec![
        Condition::le("|cgf(64) − max|", high, 0.05, 0.0),
        Condition::le("cgf decrease along t", drop, 0.0, tolerance::EQUALITY),
    ];
    Ok(BoundReport::new("cgf-limits", low, 1e-4, 0.0, conditions))
}

/// Zero-excess converse via D-tilted Rényi entropy.
pub fn check_zero_excess(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    t: f64,
    code: &Code,
) -> Result<BoundReport> {
    let out = theorem1_check(source, spec, level, t, code)?;
    Ok(BoundReport::new(
        "zero-excess-converse",
        out.bound,
        out.cgf,
        tolerance::INEQUALITY,
        Vec::new(),
    ))
}

/// `min H_α(P_Y)` over all kernels with `P[d(X,Y) > D] ≤ ε`, exactly.
///
/// `H_α` is quasi-concave and the feasible kernels form a product of
/// simplices cut by one half-space, so the minimum sits at a vertex: either
/// a feasible deterministic map, or a map with one symbol split between two
/// outputs so that the constraint is tight.
pub fn exact_g(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<Extended> {
    exact_g_with(source, spec, level, epsilon, alpha, Exec::default())
}

pub const EXACT_G_CAP: u128 = 2_000_000;

pub fn exact_g_with(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    alpha: f64,
    exec: Exec,
) -> Result<Extended> {
    crate::probability::check_order(alpha)?;
    if !crate::covering::feasibility(source, spec, level, epsilon)? {
        return Ok(Extended::Infinite);
    }
    let nx = spec.num_source();
    let ny = spec.num_repro();
    let total = (ny as u128).checked_pow(nx as u32).unwrap_or(u128::MAX);
    if total > EXACT_G_CAP {
        return Err(Error::TooLarge(format!(
            "{ny}^{nx} maps exceed the exact-G cap {EXACT_G_CAP}"
        )));
    }
    crate::ratedistortion::vertex_minimum(source, spec, level, epsilon, true, exec, |mass| {
        renyi_bits(mass, alpha)
    })
}

/// Deterministic-code correction per symbol on product instances.
pub fn deterministic_correction_sweep(
    base_source: &FinitePmf,
    base_spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    t: f64,
    ns: &[usize],
    exec: Exec,
) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let inst = crate::blocklength::build_product_with(
                base_source,
                base_spec,
                n,
                crate::blocklength::DEFAULT_BUDGET,
                exec,
            )?;
            let plan = inst.cover(level, epsilon, exec)?;
            Ok((n, deterministic_correction(&plan, t)? / n as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn running() -> (FinitePmf, DistortionSpec) {
        (
            FinitePmf::new(names("abc"), vec![0.5, 0.3, 0.2]).unwrap(),
            DistortionSpec::hamming(names("abc"), names("abc")).unwrap(),
        )
    }

    #[test]
    fn achievability_running_example() {
        let (source, spec) = running();
        let r = check_achievability(&source, &spec, 0.0, 0.25, 1.0).unwrap();
        assert!(r.verdict);
        assert!((r.lhs - 1.25f64.log2()).abs() < 1e-14);
        assert!((r.rhs - 0.8999686269529916).abs() < 1e-12);
    }

    #[test]
    fn achievability_flags_tampered_beta() {
        let (source, spec) = running();
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        let bad = plan.with_beta_mass(0.1);
        let r = check_achievability_with(&bad, &build_stochastic_code(&bad), &source, &spec, 1.0)
            .unwrap();
        assert!(!r.verdict);
        assert_eq!(r.failures(), vec!["excess = epsilon".to_string()]);
    }

    #[test]
    fn converse_on_construction_and_tampered_lengths() {
        let source = FinitePmf::uniform(names("abcdefgh")).unwrap();
        let spec = DistortionSpec::hamming(names("abcdefgh"), names("abcdefgh")).unwrap();
        let code = build_stochastic_code(&greedy_cover(&source, &spec, 0.0, 0.0).unwrap());
        let ok = check_converse(&code, &source, &spec, 0.0, 0.0, 1.0).unwrap();
        assert!(ok.verdict, "{ok:?}");
        let zeros = vec![0; code.decoder().len()];
        let bad =
            check_converse_lengths(&code, &zeros, &source, &spec, 0.0, 0.0, 1.0, 3.0).unwrap();
        assert!(!bad.verdict);
    }

    #[test]
    fn converse_precondition() {
        let (source, spec) = running();
        let code = build_stochastic_code(&greedy_cover(&source, &spec, 0.0, 0.25).unwrap());
        assert!(matches!(
            check_converse(&code, &source, &spec, 0.0, 0.1, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn length_chain_running_example() {
        let (source, spec) = running();
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        for t in [0.1, 0.5, 1.0, 2.0, 8.0] {
            assert!(check_lemma3(&plan, t).unwrap().verdict);
        }
        assert!(!check_lemma3_lengths(&plan, 1.0, &[0, 3]).unwrap().verdict);
        assert!(
            !check_lemma3(&plan.with_beta_mass(0.6), 1.0)
                .unwrap()
                .verdict
        );
    }

    #[test]
    fn majorization_running_example_and_counterexample() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (source, spec) = running();
        let budget = MajorizationBudget {
            max_maps: 243,
            kernels: 500,
        };
        let r = check_majorization(&source, &spec, 0.0, 0.25, &[0.5], budget, &mut rng).unwrap();
        assert!(r.verdict, "{r:?}");
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        let tampered = plan.with_beta_mass(0.3);
        assert!(
            !check_majorization_with(&tampered, &source, &spec, &[0.5], budget, &mut rng)
                .unwrap()
                .verdict
        );

        // four symbols, three overlapping balls: the largest ball is not part of the best cover
        let source = FinitePmf::new(names("abcd"), vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        let d = vec![
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0],
        ];
        let spec = DistortionSpec::new(names("abcd"), names("xyz"), d).unwrap();
        let r = check_majorization(&source, &spec, 0.5, 0.0, &[0.5], budget, &mut rng).unwrap();
        assert!(!r.verdict);
        let exact = exact_g(&source, &spec, 0.5, 0.0, 0.5)
            .unwrap()
            .expect_finite("G");
        assert!((exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_g_matches_greedy_on_running_example() {
        let (source, spec) = running();
        for alpha in [0.25, 0.5, 1.0, 2.0] {
            let greedy = g_quantity(&source, &spec, 0.0, 0.25, alpha)
                .unwrap()
                .expect_finite("G");
            let exact = exact_g(&source, &spec, 0.0, 0.25, alpha)
                .unwrap()
                .expect_finite("G");
            assert!(
                (greedy - exact).abs() < 1e-12,
                "alpha {alpha}: {greedy} vs {exact}"
            );
        }
        let narrow = DistortionSpec::hamming(names("abc"), names("a")).unwrap();
        assert_eq!(
            exact_g(&source, &narrow, 0.0, 0.3, 0.5).unwrap(),
            Extended::Infinite
        );
    }

    #[test]
    fn deterministic_running_example() {
        let (source, spec) = running();
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        let r = check_deterministic(&plan, &source, &spec, 1.0).unwrap();
        assert!(r.verdict);
        assert!((r.rhs - 1.0055812339288297).abs() < 1e-12);
        assert!((r.lhs - 0.3785116232537296).abs() < 1e-12);
        let code = build_deterministic_code(&plan);
        let long: Vec<usize> = length_table(&code).iter().map(|l| l + 3).collect();
        assert!(
            !check_deterministic_lengths(&plan, &code, &long, &source, &spec, 1.0)
                .unwrap()
                .verdict
        );
        let exact = greedy_cover(&source, &spec, 0.0, 0.2).unwrap();
        assert!(deterministic_correction(&exact, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn prefix_running_example() {
        let (source, spec) = running();
        let r = check_prefix(&source, &spec, 0.0, 0.25, 1.0).unwrap();
        assert!(r.verdict);
        assert!((r.lhs - 2.0).abs() < 1e-14);
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        let plain = build_prefix_code(&plan)
            .map_codewords_unchecked(|i, _| nth_codeword(i as u64 + 1).unwrap());
        let bad = check_prefix_with(&plan, &plain, &source, &spec, 1.0).unwrap();
        assert!(!bad.verdict);
        assert!(bad.failures().contains(&"prefix clashes".to_string()));
    }

    #[test]
    fn cgf_limits_running_example() {
        let (source, spec) = running();
        let code = build_stochastic_code(&greedy_cover(&source, &spec, 0.0, 0.25).unwrap());
        let r = check_remark1(&code, &source).unwrap();
        assert!(r.verdict, "{r:?}");
        let constant = build_stochastic_code(&greedy_cover(&source, &spec, 1.0, 0.0).unwrap());
        let r = check_remark1(&constant, &source).unwrap();
        assert!(r.verdict && r.lhs == 0.0);
        let tampered = check_remark1_lengths(&code, &[0, 4], &source).unwrap();
        assert!(!tampered.verdict);
    }

    #[test]
    fn zero_excess_report() {
        let (source, spec) = running();
        let code = build_stochastic_code(&greedy_cover(&source, &spec, 0.0, 0.0).unwrap());
        assert!(
            check_zero_excess(&source, &spec, 0.0, 1.0, &code)
                .unwrap()
                .verdict
        );
    }

    #[test]
    fn prefix_converse_random_words() {
        let (source, spec) = running();
        let code = build_prefix_code(&greedy_cover(&source, &spec, 0.0, 0.25).unwrap());
        assert!(
            check_prefix_converse(&code, &source, &spec, 0.0, 0.25, 1.0)
                .unwrap()
                .verdict
        );
        let zeros = vec![0; code.decoder().len()];
        let g = g_quantity(&source, &spec, 0.0, 0.25, 0.5)
            .unwrap()
            .expect_finite("G");
        assert!(
            !check_prefix_converse_lengths(&code, &zeros, &source, &spec, 0.0, 0.25, 1.0, g)
                .unwrap()
                .verdict
        );
    }
}
