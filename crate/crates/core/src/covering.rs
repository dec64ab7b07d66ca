//! Distortion balls, the greedy covering of the source alphabet and the
//! Rényi-entropy quantity `G^{D,ε}_α(X)` evaluated through the output
//! distribution that the covering induces.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::probability::{renyi_bits, shannon_bits, FinitePmf};
use crate::tolerance::{self, within};
use crate::{Error, Exec, Extended, Result};

/// Distortion matrix `d(x, y) ≥ 0` over source × reproduction alphabets.
///
/// Stored row-major (one row per source symbol).
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionSpec {
    source_alphabet: Vec<String>,
    repro_alphabet: Vec<String>,
    d: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    source_alphabet: Vec<String>,
    repro_alphabet: Vec<String>,
    d: Vec<Vec<f64>>,
}

impl Serialize for DistortionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSpec {
            source_alphabet: self.source_alphabet.clone(),
            repro_alphabet: self.repro_alphabet.clone(),
            d: (0..self.num_source())
                .map(|x| self.row(x).to_vec())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistortionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(de)?;
        DistortionSpec::new(raw.source_alphabet, raw.repro_alphabet, raw.d)
            .map_err(serde::de::Error::custom)
    }
}

fn check_distinct(alphabet: &[String], which: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(alphabet.len());
    for s in alphabet {
        if !seen.insert(s.as_str()) {
            return Err(Error::InvalidDistortion(format!(
                "duplicate {which} symbol {s:?}"
            )));
        }
    }
    Ok(())
}

impl DistortionSpec {
    pub fn new(
        source_alphabet: Vec<String>,
        repro_alphabet: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != source_alphabet.len() {
            return Err(Error::InvalidDistortion(format!(
                "{} rows for {} source symbols",
                rows.len(),
                source_alphabet.len()
            )));
        }
        let m = repro_alphabet.len();
        let mut d = Vec::with_capacity(rows.len() * m);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidDistortion(format!(
                    "row {x} has {} entries, expected {m}",
                    row.len()
                )));
            }
            d.extend(row);
        }
        Self::from_flat(source_alphabet, repro_alphabet, d)
    }

    /// Builds from a row-major buffer of length `|X|·|Y|`.
    pub fn from_flat(
        source_alphabet: Vec<String>,
        repro_alphabet: Vec<String>,
        d: Vec<f64>,
    ) -> Result<Self> {
        if source_alphabet.is_empty() || repro_alphabet.is_empty() {
            return Err(Error::InvalidDistortion("empty alphabet".into()));
        }
        check_distinct(&source_alphabet, "source")?;
        check_distinct(&repro_alphabet, "reproduction")?;
        if d.len() != source_alphabet.len() * repro_alphabet.len() {
            return Err(Error::InvalidDistortion(format!(
                "buffer of {} entries for a {}x{} matrix",
                d.len(),
                source_alphabet.len(),
                repro_alphabet.len()
            )));
        }
        if let Some(v) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistortion(format!(
                "entry {v} is not finite and non-negative"
            )));
        }
        Ok(DistortionSpec {
            source_alphabet,
            repro_alphabet,
            d,
        })
    }

    /// Hamming distortion: 0 when the symbol names agree, 1 otherwise.
    pub fn hamming(source_alphabet: Vec<String>, repro_alphabet: Vec<String>) -> Result<Self> {
        let d = source_alphabet
            .iter()
            .flat_map(|x| {
                repro_alphabet
                    .iter()
                    .map(move |y| if x == y { 0.0 } else { 1.0 })
            })
            .collect();
        Self::from_flat(source_alphabet, repro_alphabet, d)
    }

    pub fn source_alphabet(&self) -> &[String] {
        &self.source_alphabet
    }

    pub fn repro_alphabet(&self) -> &[String] {
        &self.repro_alphabet
    }

    pub fn num_source(&self) -> usize {
        self.source_alphabet.len()
    }

    pub fn num_repro(&self) -> usize {
        self.repro_alphabet.len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.d[x * self.repro_alphabet.len() + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let m = self.repro_alphabet.len();
        &self.d[x * m..(x + 1) * m]
    }

    pub fn repro_index(&self, symbol: &str) -> Option<usize> {
        self.repro_alphabet.iter().position(|s| s == symbol)
    }

    /// Indicator distortion `1{d(x,y) > level}`.
    pub fn excess_indicator(&self, level: f64) -> DistortionSpec {
        DistortionSpec {
            source_alphabet: self.source_alphabet.clone(),
            repro_alphabet: self.repro_alphabet.clone(),
            d: self
                .d
                .iter()
                .map(|&v| if within(v, level) { 0.0 } else { 1.0 })
                .collect(),
        }
    }

    /// Errors unless `source` is defined over this matrix's source alphabet.
    pub fn check_source(&self, source: &FinitePmf) -> Result<()> {
        if source.alphabet() != self.source_alphabet.as_slice() {
            return Err(Error::AlphabetMismatch(
                "source PMF alphabet differs from the distortion matrix's source alphabet".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if !level.is_finite() || level < 0.0 {
        return Err(Error::param(
            "D",
            format!("distortion level must be finite and ≥ 0, got {level}"),
        ));
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in [0, 1), got {epsilon}"),
        ));
    }
    Ok(())
}

/// Source indices in `B_D(y) = {x : d(x,y) ≤ D}`.
pub fn distortion_ball(spec: &DistortionSpec, y: &str, level: f64) -> Result<Vec<usize>> {
    check_level(level)?;
    let yi = spec
        .repro_index(y)
        .ok_or_else(|| Error::UnknownSymbol(y.to_string()))?;
    Ok(ball_of(spec, yi, level))
}

pub(crate) fn ball_of(spec: &DistortionSpec, y: usize, level: f64) -> Vec<usize> {
    (0..spec.num_source())
        .filter(|&x| within(spec.get(x, y), level))
        .collect()
}

/// `P[min_y d(X, y) > D]`: the mass no reproduction symbol can serve.
pub fn uncovered_mass(source: &FinitePmf, spec: &DistortionSpec, level: f64) -> Result<f64> {
    spec.check_source(source)?;
    check_level(level)?;
    Ok((0..spec.num_source())
        .filter(|&x| !spec.row(x).iter().any(|&v| within(v, level)))
        .map(|x| source.prob(x))
        .sum())
}

/// `false` iff `P[min_y d(X,y) > D] > ε`, i.e. no code meets the excess constraint.
pub fn feasibility(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Result<bool> {
    check_epsilon(epsilon)?;
    Ok(uncovered_mass(source, spec, level)? <= epsilon + tolerance::COVER)
}

/// Tie-break used for the greedy argmax over reproduction symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Lowest index in the reproduction alphabet's declared order.
    LowestIndex,
}

/// Output of the greedy covering: ordered centers `y_1…y_{k*}`, disjoint cells
/// `A_D(y_i)`, their masses and the split masses α, β, γ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringPlan {
    source_alphabet: Vec<String>,
    repro_alphabet: Vec<String>,
    centers: Vec<usize>,
    cells: Vec<Vec<usize>>,
    cell_probs: Vec<f64>,
    cell_of: Vec<Option<usize>>,
    alpha_mass: f64,
    beta_mass: f64,
    gamma_mass: f64,
    distortion_level: f64,
    epsilon: f64,
    tie_break: TieBreak,
}

impl CoveringPlan {
    pub fn k_star(&self) -> usize {
        self.centers.len()
    }

    /// Reproduction indices of `y_1…y_{k*}`.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn center_symbols(&self) -> Vec<String> {
        self.centers
            .iter()
            .map(|&y| self.repro_alphabet[y].clone())
            .collect()
    }

    /// Source indices of each cell `A_D(y_i)`.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell_probs(&self) -> &[f64] {
        &self.cell_probs
    }

    /// Zero-based cell index of source symbol `x`, if covered.
    pub fn cell_of(&self, x: usize) -> Option<usize> {
        self.cell_of[x]
    }

    /// `α = Σ_{i<k*} P[X ∈ A_D(y_i)]`.
    pub fn alpha_mass(&self) -> f64 {
        self.alpha_mass
    }

    /// `β = 1 − ε − α`.
    pub fn beta_mass(&self) -> f64 {
        self.beta_mass
    }

    /// `γ = 1 − Σ_{i≤k*} P[X ∈ A_D(y_i)]`.
    pub fn gamma_mass(&self) -> f64 {
        self.gamma_mass
    }

    pub fn distortion_level(&self) -> f64 {
        self.distortion_level
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tie_break(&self) -> TieBreak {
        self.tie_break
    }

    pub fn source_alphabet(&self) -> &[String] {
        &self.source_alphabet
    }

    pub fn repro_alphabet(&self) -> &[String] {
        &self.repro_alphabet
    }

    pub fn num_source(&self) -> usize {
        self.source_alphabet.len()
    }

    /// Copy with β replaced and no re-validation. Only useful for negative controls.
    pub fn with_beta_mass(&self, beta: f64) -> CoveringPlan {
        CoveringPlan {
            beta_mass: beta,
            ..self.clone()
        }
    }

    /// Checks the structural invariants of a plan.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Precondition(format!("covering plan: {m}")));
        let k = self.k_star();
        if k == 0 || self.cells.len() != k || self.cell_probs.len() != k {
            return fail("inconsistent lengths".into());
        }
        let mut seen = vec![false; self.num_source()];
        for cell in &self.cells {
            for &x in cell {
                if std::mem::replace(&mut seen[x], true) {
                    return fail(format!("source symbol {x} lies in two cells"));
                }
            }
        }
        let tol = tolerance::EQUALITY;
        if self.cell_probs.windows(2).any(|w| w[1] > w[0] + tol) {
            return fail("cell masses increase".into());
        }
        let target = 1.0 - self.epsilon;
        if self.alpha_mass >= target {
            return fail(format!("α = {} already reaches 1 − ε", self.alpha_mass));
        }
        if self.alpha_mass + self.cell_probs[k - 1] < target - tol {
            return fail("Σ_{i≤k*} cell masses below 1 − ε".into());
        }
        if (self.alpha_mass + self.beta_mass - target).abs() > tol {
            return fail(format!(
                "α + β = {} ≠ 1 − ε",
                self.alpha_mass + self.beta_mass
            ));
        }
        if self.beta_mass > self.cell_probs[k - 1] + tol || self.beta_mass <= 0.0 {
            return fail(format!("β = {} outside (0, P[A_k*]]", self.beta_mass));
        }
        if self.gamma_mass < -tol || self.gamma_mass > self.epsilon + tol {
            return fail(format!("γ = {} outside [0, ε]", self.gamma_mass));
        }
        Ok(())
    }
}

fn check_instance(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Result<()> {
    spec.check_source(source)?;
    check_level(level)?;
    check_epsilon(epsilon)
}

/// Greedy covering with the default execution strategy.
pub fn greedy_cover(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Result<CoveringPlan> {
    greedy_cover_with(source, spec, level, epsilon, Exec::default())
}

/// Selects `y_i = argmax_y P[X ∈ B_D(y) \ ∪_{j<i} B_D(y_j)]` until the covered
/// mass first reaches `1 − ε`.
///
/// Ties go to the lowest reproduction index. Residual masses are recomputed
/// from scratch each round so that sequential and parallel runs agree bit for bit.
pub fn greedy_cover_with(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    exec: Exec,
) -> Result<CoveringPlan> {
    check_instance(source, spec, level, epsilon)?;
    let uncovered = uncovered_mass(source, spec, level)?;
    if uncovered > epsilon + tolerance::COVER {
        return Err(Error::Infeasible {
            uncovered_mass: uncovered,
            epsilon,
        });
    }

    let probs = source.probs();
    let balls: Vec<Vec<usize>> = exec.map_range(0..spec.num_repro(), |y| ball_of(spec, y, level));
    let mut covered = vec![false; spec.num_source()];
    let mut cell_of = vec![None; spec.num_source()];
    let mut centers = Vec::new();
    let mut cells = Vec::new();
    let mut cell_probs: Vec<f64> = Vec::new();
    let target = 1.0 - epsilon;
    let mut cumulative = 0.0;

    loop {
        let residual = exec.map(&balls, |ball| {
            ball.iter()
                .filter(|&&x| !covered[x])
                .map(|&x| probs[x])
                .sum::<f64>()
        });
        let mut best: Option<(usize, f64)> = None;
        for (y, &mass) in residual.iter().enumerate() {
            let better = match best {
                None => mass > 0.0,
                Some((_, b)) => mass > b * (1.0 + 1e-12),
            };
            if better {
                best = Some((y, mass));
            }
        }
        let Some((y, mass)) = best else {
            return Err(Error::Infeasible {
                uncovered_mass: 1.0 - cumulative,
                epsilon,
            });
        };
        let cell: Vec<usize> = balls[y].iter().copied().filter(|&x| !covered[x]).collect();
        for &x in &cell {
            covered[x] = true;
            cell_of[x] = Some(centers.len());
        }
        centers.push(y);
        cells.push(cell);
        cell_probs.push(mass);
        let previous = cumulative;
        cumulative += mass;
        if cumulative >= target - tolerance::COVER {
            let k = cell_probs.len();
            let alpha = previous;
            let beta = (target - alpha).min(cell_probs[k - 1]);
            let gamma = (1.0 - cumulative).max(0.0);
            return Ok(CoveringPlan {
                source_alphabet: spec.source_alphabet.clone(),
                repro_alphabet: spec.repro_alphabet.clone(),
                centers,
                cells,
                cell_probs,
                cell_of,
                alpha_mass: alpha,
                beta_mass: beta,
                gamma_mass: gamma,
                distortion_level: level,
                epsilon,
                tie_break: TieBreak::LowestIndex,
            });
        }
    }
}

/// Raw masses of the output `Ŷ = ĝ(f̂(X))` of the stochastic construction, in
/// center order. No validation, so tampered plans produce tampered weights.
pub fn induced_output_weights(plan: &CoveringPlan) -> Vec<f64> {
    let k = plan.k_star();
    if k == 1 {
        return vec![1.0];
    }
    let cells = plan.cell_probs();
    let mut w = cells[..k - 1].to_vec();
    w[0] += (cells[k - 1] - plan.beta_mass()) + plan.gamma_mass();
    w.push(plan.beta_mass());
    w
}

/// Distribution of `Ŷ` over `y_1…y_{k*}`: `P(y_1) = P[A_1] + (P[A_k*] − β) + γ`,
/// `P(y_i) = P[A_i]` for `1 < i < k*`, `P(y_k*) = β`.
pub fn induced_output_distribution(plan: &CoveringPlan) -> Result<FinitePmf> {
    FinitePmf::new(plan.center_symbols(), induced_output_weights(plan))
}

/// `G^{D,ε}_α(X)` as the order-`α` Rényi entropy of the greedy cover's
/// induced output distribution; `+∞` when no code meets the constraint.
///
/// `alpha = 1` gives the Shannon limit `G^{D,ε}_1`.
pub fn g_quantity(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<Extended> {
    g_quantity_with(source, spec, level, epsilon, alpha, Exec::default())
}

pub fn g_quantity_with(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    alpha: f64,
    exec: Exec,
) -> Result<Extended> {
    crate::probability::check_order(alpha)?;
    check_instance(source, spec, level, epsilon)?;
    if !feasibility(source, spec, level, epsilon)? {
        return Ok(Extended::Infinite);
    }
    let plan = greedy_cover_with(source, spec, level, epsilon, exec)?;
    Ok(Extended::Finite(g_of_plan(&plan, alpha)?))
}

/// `H_α` of the plan's induced output weights.
pub fn g_of_plan(plan: &CoveringPlan, alpha: f64) -> Result<f64> {
    let w = induced_output_weights(plan);
    if (alpha - 1.0).abs() < tolerance::ALPHA_ONE_GUARD {
        return Ok(shannon_bits(&w));
    }
    renyi_bits(&w, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    pub(crate) fn running_example() -> (FinitePmf, DistortionSpec) {
        let source = FinitePmf::new(names("abc"), vec![0.5, 0.3, 0.2]).unwrap();
        let spec = DistortionSpec::hamming(names("abc"), names("abc")).unwrap();
        (source, spec)
    }

    #[test]
    fn balls() {
        let (_, spec) = running_example();
        assert_eq!(distortion_ball(&spec, "a", 0.0).unwrap(), vec![0]);
        assert_eq!(distortion_ball(&spec, "b", 1.0).unwrap(), vec![0, 1, 2]);
        let spec =
            DistortionSpec::new(names("ab"), names("y"), vec![vec![0.3], vec![0.7]]).unwrap();
        assert_eq!(distortion_ball(&spec, "y", 0.5).unwrap(), vec![0]);
        assert!(matches!(
            distortion_ball(&spec, "z", 0.5),
            Err(Error::UnknownSymbol(_))
        ));
    }

    #[test]
    fn feasibility_examples() {
        let (source, spec) = running_example();
        assert!(feasibility(&source, &spec, 0.0, 0.0).unwrap());
        let source = FinitePmf::new(names("ab"), vec![0.7, 0.3]).unwrap();
        let spec = DistortionSpec::hamming(names("ab"), names("a")).unwrap();
        assert!(!feasibility(&source, &spec, 0.0, 0.2).unwrap());
        assert!(feasibility(&source, &spec, 0.0, 0.3).unwrap());
    }

    #[test]
    fn greedy_running_example() {
        let (source, spec) = running_example();
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        plan.validate().unwrap();
        assert_eq!(plan.center_symbols(), names("ab"));
        assert_eq!(plan.k_star(), 2);
        assert!((plan.alpha_mass() - 0.5).abs() < 1e-15);
        assert!((plan.beta_mass() - 0.25).abs() < 1e-15);
        assert!((plan.gamma_mass() - 0.2).abs() < 1e-15);
        assert_eq!(plan.cell_of(2), None);

        let plan = greedy_cover(&source, &spec, 0.0, 0.3).unwrap();
        assert_eq!(plan.k_star(), 2);
        assert!((plan.beta_mass() - 0.2).abs() < 1e-15);
        assert!((plan.gamma_mass() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_distortion_zero_epsilon_covers_support() {
        let source = FinitePmf::new(names("abcd"), vec![0.1, 0.4, 0.0, 0.5]).unwrap();
        let spec = DistortionSpec::hamming(names("abcd"), names("abcd")).unwrap();
        let plan = greedy_cover(&source, &spec, 0.0, 0.0).unwrap();
        plan.validate().unwrap();
        assert_eq!(plan.k_star(), 3);
        assert_eq!(plan.center_symbols(), vec!["d", "b", "a"]);
        assert_eq!(plan.gamma_mass(), 0.0);
    }

    #[test]
    fn infeasible_cover_reports_mass() {
        let source = FinitePmf::new(names("ab"), vec![0.7, 0.3]).unwrap();
        let spec = DistortionSpec::hamming(names("ab"), names("a")).unwrap();
        match greedy_cover(&source, &spec, 0.0, 0.2) {
            Err(Error::Infeasible { uncovered_mass, .. }) => {
                assert!((uncovered_mass - 0.3).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            g_quantity(&source, &spec, 0.0, 0.2, 0.5).unwrap(),
            Extended::Infinite
        );
    }

    #[test]
    fn induced_distribution_examples() {
        let (source, spec) = running_example();
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        let p = induced_output_distribution(&plan).unwrap();
        assert!((p.probs()[0] - 0.75).abs() < 1e-15 && (p.probs()[1] - 0.25).abs() < 1e-15);

        let plan = greedy_cover(&source, &spec, 1.0, 0.1).unwrap();
        assert_eq!(plan.k_star(), 1);
        assert_eq!(induced_output_distribution(&plan).unwrap().probs(), &[1.0]);

        let source = FinitePmf::new(names("ab"), vec![0.7, 0.3]).unwrap();
        let spec = DistortionSpec::hamming(names("ab"), names("ab")).unwrap();
        let plan = greedy_cover(&source, &spec, 0.0, 0.0).unwrap();
        assert_eq!(
            induced_output_distribution(&plan).unwrap().probs(),
            &[0.7, 0.3]
        );
    }

    #[test]
    fn g_quantity_examples() {
        let (source, spec) = running_example();
        // 2 log2(sqrt(.75) + sqrt(.25))
        let g = g_quantity(&source, &spec, 0.0, 0.25, 0.5)
            .unwrap()
            .finite()
            .unwrap();
        assert!((g - 0.8999686269529916).abs() < 1e-12);
        for eps in [0.0, 0.4] {
            assert_eq!(
                g_quantity(&source, &spec, 1.0, eps, 0.5).unwrap(),
                Extended::Finite(0.0)
            );
        }
        let g1 = g_quantity(&source, &spec, 0.0, 0.25, 1.0)
            .unwrap()
            .finite()
            .unwrap();
        assert!((g1 - 0.8112781244591328).abs() < 1e-12);
    }

    #[test]
    fn greedy_is_not_always_majorization_optimal() {
        // B(y1)={a,b}, B(y2)={c,d}, B(y3)={b,c}: greedy takes y3 first and needs
        // three centers, while y1,y2 cover everything.
        let source = FinitePmf::new(names("abcd"), vec![0.2, 0.3, 0.3, 0.2]).unwrap();
        let d = vec![
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0],
        ];
        let spec = DistortionSpec::new(names("abcd"), names("xyz"), d).unwrap();
        let plan = greedy_cover(&source, &spec, 0.5, 0.0).unwrap();
        assert_eq!(plan.center_symbols(), names("zxy"));
        let w = induced_output_weights(&plan);
        assert!((w[0] - 0.6).abs() < 1e-15);
        let g = g_of_plan(&plan, 0.5).unwrap();
        assert!(
            g > 1.0,
            "greedy value {g} exceeds the two-center map's 1 bit"
        );
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (source, spec) = running_example();
        let a = greedy_cover_with(&source, &spec, 0.0, 0.1, Exec::Sequential).unwrap();
        let b = greedy_cover_with(&source, &spec, 0.0, 0.1, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
