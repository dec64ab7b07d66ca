//! Product sources with additive distortion and normalized blocklength-`n`
//! quantities.

use serde::Serialize;

use crate::covering::{
    check_epsilon, check_level, g_quantity_with, greedy_cover_with, CoveringPlan, DistortionSpec,
};
use crate::probability::FinitePmf;
use crate::ratedistortion::{converse_slack, gaussian_approx, rd_at_distortion};
use crate::{Error, Exec, Extended, Result};

/// Default cap on `|X|^n · |Y|^n` matrix entries.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

/// A memoryless source and per-letter distortion expanded to blocklength `n`.
///
/// Blocks are enumerated lexicographically with the first letter most
/// significant.
#[derive(Clone, Debug)]
pub struct ProductInstance {
    pub n: usize,
    pub base_source: FinitePmf,
    pub base_spec: DistortionSpec,
    pub expanded_source: FinitePmf,
    pub expanded_spec: DistortionSpec,
}

fn product_alphabet(base: &[String], n: usize) -> Vec<String> {
    let sep = if base.iter().all(|s| s.chars().count() == 1) {
        ""
    } else {
        ","
    };
    let k = base.len();
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut i| {
            let mut letters = vec![""; n];
            for slot in letters.iter_mut().rev() {
                *slot = &base[i % k];
                i /= k;
            }
            letters.join(sep)
        })
        .collect()
}

fn digits(mut i: usize, base: usize, n: usize, out: &mut [usize]) {
    for slot in out[..n].iter_mut().rev() {
        *slot = i % base;
        i /= base;
    }
}

/// `|X|^n · |Y|^n`, saturating.
pub fn product_entries(num_source: usize, num_repro: usize, n: usize) -> u128 {
    let pow = |b: usize| (b as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    pow(num_source).saturating_mul(pow(num_repro))
}

pub fn build_product(
    base_source: &FinitePmf,
    base_spec: &DistortionSpec,
    n: usize,
) -> Result<ProductInstance> {
    build_product_with(base_source, base_spec, n, DEFAULT_BUDGET, Exec::default())
}

/// Expands to blocklength `n`; errors when `|X|^n·|Y|^n` exceeds `budget`.
pub fn build_product_with(
    base_source: &FinitePmf,
    base_spec: &DistortionSpec,
    n: usize,
    budget: u128,
    exec: Exec,
) -> Result<ProductInstance> {
    base_spec.check_source(base_source)?;
    if n == 0 {
        return Err(Error::param("n", "blocklength must be ≥ 1"));
    }
    let (kx, ky) = (base_spec.num_source(), base_spec.num_repro());
    let needed = product_entries(kx, ky, n);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            needed,
            cap: budget,
        });
    }
    let nx = kx.pow(n as u32);
    let ny = ky.pow(n as u32);
    let exec = exec.for_work(nx * ny);

    let base_p = base_source.probs();
    let probs = exec.map_range(0..nx, |i| {
        let mut xs = vec![0; n];
        digits(i, kx, n, &mut xs);
        xs.iter().map(|&x| base_p[x]).product::<f64>()
    });
    let expanded_source = FinitePmf::new(product_alphabet(base_source.alphabet(), n), probs)?;

    let mut d = vec![0.0; nx * ny];
    exec.for_each_chunk_mut(&mut d, ny, |i, row| {
        let mut xs = vec![0; n];
        let mut ys = vec![0; n];
        digits(i, kx, n, &mut xs);
        for (j, slot) in row.iter_mut().enumerate() {
            digits(j, ky, n, &mut ys);
            *slot = xs.iter().zip(&ys).map(|(&x, &y)| base_spec.get(x, y)).sum();
        }
    });
    let expanded_spec = DistortionSpec::from_flat(
        expanded_source.alphabet().to_vec(),
        product_alphabet(base_spec.repro_alphabet(), n),
        d,
    )?;
    Ok(ProductInstance {
        n,
        base_source: base_source.clone(),
        base_spec: base_spec.clone(),
        expanded_source,
        expanded_spec,
    })
}

/// Rényi order `1/(1+t)`; `t = 0` is the Shannon limit.
pub fn order_for(t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::param(
            "t",
            format!("must be finite and ≥ 0, got {t}"),
        ));
    }
    Ok(1.0 / (1.0 + t))
}

impl ProductInstance {
    /// Block distortion threshold `n·D`.
    pub fn block_level(&self, level: f64) -> f64 {
        self.n as f64 * level
    }

    /// Greedy cover of the expanded instance at threshold `n·D`.
    pub fn cover(&self, level: f64, epsilon: f64, exec: Exec) -> Result<CoveringPlan> {
        greedy_cover_with(
            &self.expanded_source,
            &self.expanded_spec,
            self.block_level(level),
            epsilon,
            exec,
        )
    }
}

/// `(1/n)·G^{nD,ε}_{1/(1+t)}(X^n)`.
pub fn normalized_g(inst: &ProductInstance, level: f64, epsilon: f64, t: f64) -> Result<Extended> {
    normalized_g_with(inst, level, epsilon, t, Exec::default())
}

pub fn normalized_g_with(
    inst: &ProductInstance,
    level: f64,
    epsilon: f64,
    t: f64,
    exec: Exec,
) -> Result<Extended> {
    check_level(level)?;
    let alpha = order_for(t)?;
    let g = g_quantity_with(
        &inst.expanded_source,
        &inst.expanded_spec,
        inst.block_level(level),
        epsilon,
        alpha,
        exec,
    )?;
    Ok(g.map(|v| v / inst.n as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockBounds {
    pub lower: Extended,
    pub upper: Extended,
}

/// `(1/n)·log2 log2(1 + min(|X|^n, |Y|^n))`.
pub fn block_converse_slack(inst: &ProductInstance) -> f64 {
    converse_slack(
        inst.expanded_spec.num_source(),
        inst.expanded_spec.num_repro(),
    ) / inst.n as f64
}

/// `upper = (1/n) G`, `lower = upper − (1/n) log2 log2(1 + min(|X|^n,|Y|^n))`.
pub fn theorem3_bounds(
    inst: &ProductInstance,
    level: f64,
    epsilon: f64,
    t: f64,
) -> Result<BlockBounds> {
    theorem3_bounds_with(inst, level, epsilon, t, Exec::default())
}

pub fn theorem3_bounds_with(
    inst: &ProductInstance,
    level: f64,
    epsilon: f64,
    t: f64,
    exec: Exec,
) -> Result<BlockBounds> {
    let upper = normalized_g_with(inst, level, epsilon, t, exec)?;
    let slack = block_converse_slack(inst);
    Ok(BlockBounds {
        lower: upper.map(|u| u - slack),
        upper,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub normalized_g: Extended,
    pub gaussian: f64,
    pub gap: Extended,
    /// `gap·n / log2 n`; absent at `n = 1`.
    pub scaled_gap: Option<f64>,
}

fn asymptotic_row(n: usize, g: Extended, gaussian: f64) -> AsymptoticRow {
    let gap = g.map(|g| (g - gaussian).abs());
    let scaled_gap = match (n, gap) {
        (1, _) | (_, Extended::Infinite) => None,
        (_, Extended::Finite(v)) => Some(v * n as f64 / (n as f64).log2()),
    };
    AsymptoticRow {
        n,
        normalized_g: g,
        gaussian,
        gap,
        scaled_gap,
    }
}

/// Exact `(1/n) G_1` next to the Gaussian approximation for each `n`.
pub fn asymptotic_table(
    base_source: &FinitePmf,
    base_spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    ns: &[usize],
    exec: Exec,
) -> Result<Vec<AsymptoticRow>> {
    check_epsilon(epsilon)?;
    let rd = rd_at_distortion(base_source, base_spec, level)?;
    ns.iter()
        .map(|&n| {
            let inst = build_product_with(base_source, base_spec, n, DEFAULT_BUDGET, exec)?;
            let g = normalized_g_with(&inst, level, epsilon, 0.0, exec)?;
            Ok(asymptotic_row(
                n,
                g,
                gaussian_approx(&rd, n, epsilon)?.value,
            ))
        })
        .collect()
}

/// One row of the blocklength sweep; `skipped` rows exceeded the budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub t: f64,
    pub epsilon: f64,
    pub distortion: f64,
    pub lower: Option<Extended>,
    pub upper: Option<Extended>,
    pub gaussian: f64,
    pub gap: Option<Extended>,
    pub scaled_gap: Option<f64>,
    pub skipped: bool,
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub level: f64,
    pub epsilon: f64,
    pub t: f64,
    pub ns: Vec<usize>,
    pub budget: u128,
}

/// Blocklength bounds at `t` and the `t = 0` gap to the Gaussian approximation,
/// for each `n`. Rows over budget are marked skipped.
pub fn sweep(
    base_source: &FinitePmf,
    base_spec: &DistortionSpec,
    cfg: &SweepConfig,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    check_epsilon(cfg.epsilon)?;
    order_for(cfg.t)?;
    let rd = rd_at_distortion(base_source, base_spec, cfg.level)?;
    cfg.ns
        .iter()
        .map(|&n| {
            let gaussian = gaussian_approx(&rd, n, cfg.epsilon)?.value;
            let inst = match build_product_with(base_source, base_spec, n, cfg.budget, exec) {
                Ok(inst) => inst,
                Err(Error::BudgetExceeded { .. }) => {
                    return Ok(SweepRow {
                        n,
                        t: cfg.t,
                        epsilon: cfg.epsilon,
                        distortion: cfg.level,
                        lower: None,
                        upper: None,
                        gaussian,
                        gap: None,
                        scaled_gap: None,
                        skipped: true,
                    })
                }
                Err(e) => return Err(e),
            };
            let bounds = theorem3_bounds_with(&inst, cfg.level, cfg.epsilon, cfg.t, exec)?;
            let g0 = if cfg.t == 0.0 {
                bounds.upper
            } else {
                normalized_g_with(&inst, cfg.level, cfg.epsilon, 0.0, exec)?
            };
            let row = asymptotic_row(n, g0, gaussian);
            Ok(SweepRow {
                n,
                t: cfg.t,
                epsilon: cfg.epsilon,
                distortion: cfg.level,
                lower: Some(bounds.lower),
                upper: Some(bounds.upper),
                gaussian,
                gap: Some(row.gap),
                scaled_gap: row.scaled_gap,
                skipped: false,
            })
        })
        .collect()
}
