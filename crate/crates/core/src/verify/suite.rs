//! Suite configuration, instance families and the parallel runner.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::random::{
    derive_seed, random_injective_code, random_instance, random_params, random_prefix_code,
};
use super::*;
use crate::codec::build_code;
use crate::codec::CodeVariant;
use crate::ratedistortion::{max_distortion, min_distortion};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Family {
    /// `count` random instances with `|X| ≤ max_source`, `|Y| ≤ max_repro`.
    Random {
        count: usize,
        #[serde(default = "five")]
        max_source: usize,
        #[serde(default = "five")]
        max_repro: usize,
    },
    /// Binary source `P(1) = p` under Hamming distortion.
    Binary {
        p: f64,
        levels: Vec<f64>,
        epsilons: Vec<f64>,
    },
    /// Source and distortion JSON files.
    File {
        source: PathBuf,
        distortion: PathBuf,
        levels: Vec<f64>,
        epsilons: Vec<f64>,
    },
    /// Source and distortion given inline.
    Inline {
        name: String,
        source: FinitePmf,
        distortion: DistortionSpec,
        levels: Vec<f64>,
        epsilons: Vec<f64>,
    },
}

fn five() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Random injective-decoder codes per instance and `t`.
    pub random_codes: usize,
    /// Random prefix codes per instance and `t`.
    pub prefix_codes: usize,
    pub majorization: MajorizationBudget,
    /// Largest codeword index used by random injective codes.
    pub max_codeword_index: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            random_codes: 200,
            prefix_codes: 200,
            majorization: MajorizationBudget {
                max_maps: 243,
                kernels: 1000,
            },
            max_codeword_index: 15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub families: Vec<Family>,
    #[serde(default)]
    pub budgets: Budgets,
    /// Also run tampered inputs, each of which must be flagged.
    #[serde(default)]
    pub negative_control: bool,
}

fn default_t_grid() -> Vec<f64> {
    vec![0.1, 0.5, 1.0, 2.0, 8.0]
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            t_grid: default_t_grid(),
            families: vec![
                Family::Random {
                    count: 40,
                    max_source: 4,
                    max_repro: 4,
                },
                Family::Binary {
                    p: 0.2,
                    levels: vec![0.05, 0.1, 0.15],
                    epsilons: vec![0.0, 0.1],
                },
            ],
            budgets: Budgets::default(),
            negative_control: false,
        }
    }
}

impl SuiteConfig {
    /// Parses JSON, reporting the line and column of any error.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::Config("t_grid: must not be empty".into()));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::Config(format!(
                "t_grid: {t} is not a positive finite number"
            )));
        }
        for (i, f) in self.families.iter().enumerate() {
            let (levels, epsilons) = match f {
                Family::Random {
                    max_source,
                    max_repro,
                    ..
                } => {
                    if *max_source == 0 || *max_repro == 0 {
                        return Err(Error::Config(format!(
                            "families[{i}]: alphabet bounds must be ≥ 1"
                        )));
                    }
                    continue;
                }
                Family::Binary {
                    p,
                    levels,
                    epsilons,
                } => {
                    if !(0.0..=1.0).contains(p) {
                        return Err(Error::Config(format!(
                            "families[{i}].p: {p} is not a probability"
                        )));
                    }
                    (levels, epsilons)
                }
                Family::File {
                    levels, epsilons, ..
                }
                | Family::Inline {
                    levels, epsilons, ..
                } => (levels, epsilons),
            };
            if levels.is_empty() || epsilons.is_empty() {
                return Err(Error::Config(format!(
                    "families[{i}]: levels and epsilons must be non-empty"
                )));
            }
            if let Some(e) = epsilons.iter().find(|e| !(0.0..1.0).contains(*e)) {
                return Err(Error::Config(format!(
                    "families[{i}].epsilons: {e} outside [0, 1)"
                )));
            }
            if let Some(d) = levels.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
                return Err(Error::Config(format!(
                    "families[{i}].levels: {d} is not a finite level ≥ 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub summary: bool,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub failing_claims: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub reports: Vec<BoundReport>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// One JSON object per report, then the summary row.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r).expect("report serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out
    }
}

struct Instance {
    label: String,
    source: FinitePmf,
    spec: DistortionSpec,
    level: f64,
    epsilon: f64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "{what} {} line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn grid_instances(
    name: &str,
    source: &FinitePmf,
    spec: &DistortionSpec,
    levels: &[f64],
    epsilons: &[f64],
) -> Vec<Instance> {
    let mut out = Vec::new();
    for &level in levels {
        for &epsilon in epsilons {
            out.push(Instance {
                label: format!("{name} D={level} eps={epsilon}"),
                source: source.clone(),
                spec: spec.clone(),
                level,
                epsilon,
            });
        }
    }
    out
}

fn expand(cfg: &SuiteConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (fi, family) in cfg.families.iter().enumerate() {
        match family {
            Family::Random {
                count,
                max_source,
                max_repro,
            } => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("family{fi}")));
                for i in 0..*count {
                    let (source, spec) = random_instance(&mut rng, *max_source, *max_repro);
                    let (level, epsilon) = random_params(&mut rng, &source, &spec);
                    out.push(Instance {
                        label: format!(
                            "random{fi}#{i} |X|={} |Y|={} D={} eps={}",
                            source.len(),
                            spec.num_repro(),
                            crate::format::sig12(level),
                            crate::format::sig12(epsilon)
                        ),
                        source,
                        spec,
                        level,
                        epsilon,
                    });
                }
            }
            Family::Binary {
                p,
                levels,
                epsilons,
            } => {
                let bits = vec!["0".to_string(), "1".to_string()];
                let source = FinitePmf::new(bits.clone(), vec![1.0 - p, *p])?;
                let spec = DistortionSpec::hamming(bits.clone(), bits)?;
                out.extend(grid_instances(
                    &format!("binary p={p}"),
                    &source,
                    &spec,
                    levels,
                    epsilons,
                ));
            }
            Family::File {
                source,
                distortion,
                levels,
                epsilons,
            } => {
                let pmf: FinitePmf = read_json(source, "source")?;
                let spec: DistortionSpec = read_json(distortion, "distortion")?;
                spec.check_source(&pmf)
                    .map_err(|e| Error::Config(format!("families[{fi}]: {e}")))?;
                out.extend(grid_instances(
                    &source.display().to_string(),
                    &pmf,
                    &spec,
                    levels,
                    epsilons,
                ));
            }
            Family::Inline {
                name,
                source,
                distortion,
                levels,
                epsilons,
            } => {
                distortion
                    .check_source(source)
                    .map_err(|e| Error::Config(format!("families[{fi}]: {e}")))?;
                out.extend(grid_instances(name, source, distortion, levels, epsilons));
            }
        }
    }
    Ok(out)
}

fn push(out: &mut Vec<BoundReport>, claim: &str, label: &str, r: Result<BoundReport>) {
    out.push(match r {
        Ok(rep) => rep.on(label),
        Err(e) => BoundReport::error(claim, label, &e),
    });
}

/// Worst report of a batch of random-code checks; preconditions that fail
/// for a generated code are errors of the generator and fail the batch.
fn aggregate(
    claim: &str,
    label: &str,
    reports: Vec<Result<BoundReport>>,
    attempted: usize,
) -> BoundReport {
    let mut worst: Option<BoundReport> = None;
    let mut failures = 0;
    for r in reports {
        match r {
            Ok(r) => {
                failures += usize::from(!r.verdict);
                let replace = match &worst {
                    None => true,
                    Some(w) => {
                        (w.verdict && !r.verdict) || (w.verdict == r.verdict && r.slack < w.slack)
                    }
                };
                if replace {
                    worst = Some(r);
                }
            }
            Err(e) => return BoundReport::error(claim, label, &e),
        }
    }
    match worst {
        Some(mut w) => {
            w.instance = label.to_string();
            w.note = Some(format!(
                "{attempted} codes drawn, {failures} violations; worst shown"
            ));
            w
        }
        None => BoundReport {
            claim: claim.to_string(),
            instance: label.to_string(),
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            verdict: true,
            conditions: Vec::new(),
            note: Some("no feasible random code generated".into()),
        },
    }
}

fn rd_is_defined(inst: &Instance) -> bool {
    let dmin = min_distortion(&inst.source, &inst.spec);
    let (dmax, _) = max_distortion(&inst.source, &inst.spec);
    inst.level > dmin && inst.level < dmax
}

fn zero_excess_applies(inst: &Instance) -> bool {
    inst.epsilon == 0.0 && (rd_is_defined(inst) || inst.level == 0.0)
}

fn run_instance(cfg: &SuiteConfig, inst: &Instance) -> Vec<BoundReport> {
    let mut out = Vec::new();
    let label = inst.label.as_str();
    let (source, spec, level, epsilon) = (&inst.source, &inst.spec, inst.level, inst.epsilon);
    let plan = match greedy_cover(source, spec, level, epsilon) {
        Ok(p) => p,
        Err(e) => {
            out.push(BoundReport::error("cover", label, &e));
            return out;
        }
    };
    let rng_for = |claim: &str, t: f64| {
        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("{label}/{claim}/{t}")))
    };
    let codes: Vec<Code> = [
        CodeVariant::Stochastic,
        CodeVariant::Deterministic,
        CodeVariant::Prefix,
    ]
    .into_iter()
    .map(|v| build_code(&plan, v))
    .collect();

    let alphas: Vec<f64> = cfg.t_grid.iter().map(|t| 1.0 / (1.0 + t)).collect();
    let mut rng = rng_for("majorization", 0.0);
    push(
        &mut out,
        "majorization",
        label,
        check_majorization_with(
            &plan,
            source,
            spec,
            &alphas,
            cfg.budgets.majorization,
            &mut rng,
        ),
    );
    for code in &codes {
        push(
            &mut out,
            "cgf-limits",
            &format!("{label} {:?}", code.variant()),
            check_remark1(code, source),
        );
    }

    for &t in &cfg.t_grid {
        let tl = format!("{label} t={t}");
        push(
            &mut out,
            "achievability",
            &tl,
            check_achievability_with(&plan, &codes[0], source, spec, t),
        );
        push(&mut out, "length-chain", &tl, check_lemma3(&plan, t));
        push(
            &mut out,
            "deterministic",
            &tl,
            check_deterministic(&plan, source, spec, t),
        );
        push(
            &mut out,
            "prefix-upper",
            &tl,
            check_prefix_with(&plan, &codes[2], source, spec, t),
        );
        for code in &codes {
            push(
                &mut out,
                "converse",
                &format!("{tl} {:?}", code.variant()),
                check_converse(code, source, spec, level, epsilon, t),
            );
        }
        if zero_excess_applies(inst) {
            let r = check_zero_excess(source, spec, level, t, &codes[0]);
            // D_min with symbol-dependent minima has no finite tilted information
            if !matches!(r, Err(Error::Precondition(_))) {
                push(&mut out, "zero-excess-converse", &tl, r);
            }
        }

        let g = match g_of_plan(&plan, 1.0 / (1.0 + t)) {
            Ok(g) => g,
            Err(e) => {
                out.push(BoundReport::error("converse", &tl, &e));
                continue;
            }
        };
        let mut rng = rng_for("converse-random", t);
        let mut batch = Vec::new();
        for i in 0..cfg.budgets.random_codes {
            let stochastic = i % 2 == 1;
            if let Some(code) = random_injective_code(
                &mut rng,
                source,
                spec,
                level,
                epsilon,
                cfg.budgets.max_codeword_index,
                stochastic,
            ) {
                batch.push(check_converse_lengths(
                    &code,
                    &length_table(&code),
                    source,
                    spec,
                    level,
                    epsilon,
                    t,
                    g,
                ));
            }
        }
        out.push(aggregate(
            "converse",
            &format!("{tl} random"),
            batch,
            cfg.budgets.random_codes,
        ));

        let mut rng = rng_for("prefix-converse", t);
        let mut batch = Vec::new();
        for i in 0..cfg.budgets.prefix_codes {
            if let Some(code) =
                random_prefix_code(&mut rng, source, spec, level, epsilon, i % 2 == 1)
            {
                batch.push(check_prefix_converse_lengths(
                    &code,
                    &length_table(&code),
                    source,
                    spec,
                    level,
                    epsilon,
                    t,
                    g,
                ));
            }
        }
        out.push(aggregate(
            "prefix-converse",
            &format!("{tl} random"),
            batch,
            cfg.budgets.prefix_codes,
        ));
    }

    if cfg.negative_control {
        out.extend(negative_controls(cfg, inst, &plan, &codes));
    }
    out
}

/// Tampered inputs; every report here is expected to fail.
fn negative_controls(
    cfg: &SuiteConfig,
    inst: &Instance,
    plan: &CoveringPlan,
    codes: &[Code],
) -> Vec<BoundReport> {
    let mut out = Vec::new();
    let (source, spec) = (&inst.source, &inst.spec);
    let t = cfg.t_grid[0];
    let label = format!("{} t={t} [tampered]", inst.label);
    let longer = |code: &Code, by: usize| -> Vec<usize> {
        length_table(code).iter().map(|l| l + by).collect()
    };
    let zeros = |code: &Code| vec![0usize; code.decoder().len()];

    // lengths far beyond G make the upper bounds fail
    let stretch = 8 + plan.k_star();
    let lengthened = codes[0].map_codewords_unchecked(|_, w| {
        w.concat(&crate::codec::BitString::from_bits(vec![true; stretch]))
    });
    push(
        &mut out,
        "achievability",
        &label,
        check_achievability_with(plan, &lengthened, source, spec, t),
    );
    push(
        &mut out,
        "deterministic",
        &label,
        check_deterministic_lengths(
            plan,
            &codes[1],
            &longer(&codes[1], stretch),
            source,
            spec,
            t,
        ),
    );
    push(
        &mut out,
        "length-chain",
        &label,
        check_lemma3_lengths(plan, t, &longer(&codes[0], 1)),
    );
    push(
        &mut out,
        "cgf-limits",
        &label,
        check_remark1_lengths(&codes[0], &longer(&codes[0], 1), source),
    );

    // zero lengths undercut every converse
    let g = g_of_plan(plan, 1.0 / (1.0 + t)).unwrap_or(0.0);
    push(
        &mut out,
        "converse",
        &label,
        check_converse_lengths(
            &codes[0],
            &zeros(&codes[0]),
            source,
            spec,
            inst.level,
            inst.epsilon,
            t,
            g,
        ),
    );
    push(
        &mut out,
        "prefix-converse",
        &label,
        check_prefix_converse_lengths(
            &codes[2],
            &zeros(&codes[2]),
            source,
            spec,
            inst.level,
            inst.epsilon,
            t,
            g,
        ),
    );
    let plain =
        codes[2].map_codewords_unchecked(|i, _| nth_codeword(i as u64 + 1).expect("index ≥ 1"));
    push(
        &mut out,
        "prefix-upper",
        &label,
        check_prefix_with(plan, &plain, source, spec, t),
    );

    // an all-empty code undercuts the zero-excess converse when its bound is positive
    if zero_excess_applies(inst) {
        let blank = codes[0].map_codewords_unchecked(|_, _| crate::codec::BitString::empty());
        let r = check_zero_excess(source, spec, inst.level, t, &blank);
        if !matches!(r, Err(Error::Precondition(_))) {
            push(&mut out, "zero-excess-converse", &label, r);
        }
    }

    // β pushed to the whole last cell
    let beta = plan.cell_probs()[plan.k_star() - 1];
    if beta > plan.beta_mass() + 1e-9 {
        let tampered = plan.with_beta_mass(beta);
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("{label}/majorization")));
        push(
            &mut out,
            "majorization",
            &label,
            check_majorization_with(
                &tampered,
                source,
                spec,
                &[1.0 / (1.0 + t)],
                cfg.budgets.majorization,
                &mut rng,
            ),
        );
    }
    for r in &mut out {
        r.claim = format!("{} (negative control)", r.claim);
    }
    out
}

/// Runs every check over every configured instance. Instances run under
/// `exec`; report order and contents do not depend on it.
pub fn run_suite(cfg: &SuiteConfig, exec: Exec) -> Result<SuiteReport> {
    cfg.validate()?;
    let instances = expand(cfg)?;
    let reports: Vec<BoundReport> = exec
        .map(&instances, |inst| run_instance(cfg, inst))
        .into_iter()
        .flatten()
        .collect();
    let failed: Vec<&BoundReport> = reports.iter().filter(|r| !r.verdict).collect();
    let mut failing_claims: Vec<String> = failed.iter().map(|r| r.claim.clone()).collect();
    failing_claims.sort();
    failing_claims.dedup();
    let summary = Summary {
        summary: true,
        total: reports.len(),
        passed: reports.len() - failed.len(),
        failed: failed.len(),
        failing_claims,
    };
    Ok(SuiteReport { reports, summary })
}
