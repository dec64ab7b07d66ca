//! Rate-distortion function by Blahut-Arimoto at a fixed slope, D-tilted
//! information and dispersion, the constrained quantities `R_{D,ε}` and
//! `H_{D,ε}`, and the Gaussian approximation for memoryless sources.
//!
//! Slopes are in base 2: the kernel at slope `s` is
//! `P(y|x) ∝ q(y)·2^{-s·d(x,y)}`, so `s = λ* = −R'(D)` with `R` in bits.

use serde::Serialize;
use statrs::function::erf::{erfc, erfc_inv};

use crate::codec::Code;
use crate::covering::{check_epsilon, check_level, DistortionSpec};
use crate::probability::{check_order, shannon_bits, FinitePmf};
use crate::tolerance;
use crate::{Error, Exec, Extended, Result};

pub const BA_TOLERANCE: f64 = 1e-12;
pub const BA_MAX_ITERATIONS: usize = 100_000;
/// Target accuracy of the achieved distortion in [`rd_at_distortion`].
pub const DISTORTION_TOLERANCE: f64 = 1e-9;
/// Relative slope bracket below which a stalled bisection is treated as
/// having reached the slope of an affine piece of `R(D)`.
const CRITICAL_BRACKET: f64 = 1e-5;
/// Largest `|Y|^|X|` accepted by [`h_d_epsilon_bruteforce`].
pub const BRUTEFORCE_CAP: u128 = 10_000_000;

/// One point of the rate-distortion curve at a fixed slope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedSlopePoint {
    pub slope: f64,
    pub rate: f64,
    pub distortion: f64,
    pub kernel: Vec<Vec<f64>>,
    pub output_marginal: Vec<f64>,
    pub iterations: usize,
}

/// The rate-distortion function at a prescribed distortion level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RdSolution {
    pub distortion: f64,
    pub rate: f64,
    pub kernel: Vec<Vec<f64>>,
    pub output_marginal: FinitePmf,
    pub lambda_star: Extended,
    pub tilted_info: Vec<f64>,
    pub dispersion: f64,
}

/// `Σ_x P(x)·min_y d(x,y)`.
pub fn min_distortion(source: &FinitePmf, spec: &DistortionSpec) -> f64 {
    (0..spec.num_source())
        .map(|x| source.prob(x) * row_min(spec.row(x)))
        .sum()
}

/// `min_y E[d(X,y)]` and its lowest minimizing index.
pub fn max_distortion(source: &FinitePmf, spec: &DistortionSpec) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for y in 0..spec.num_repro() {
        let e: f64 = (0..spec.num_source())
            .map(|x| source.prob(x) * spec.get(x, y))
            .sum();
        if e < best.0 {
            best = (e, y);
        }
    }
    best
}

fn row_min(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::INFINITY, f64::min)
}

struct BaState {
    kernel: Vec<f64>,
    q: Vec<f64>,
    rate: f64,
    distortion: f64,
    iterations: usize,
}

impl BaState {
    fn into_point(self, slope: f64, ny: usize) -> FixedSlopePoint {
        FixedSlopePoint {
            slope,
            rate: self.rate,
            distortion: self.distortion,
            kernel: self.kernel.chunks(ny).map(<[f64]>::to_vec).collect(),
            output_marginal: self.q,
            iterations: self.iterations,
        }
    }
}

fn mutual_information(p: &[f64], kernel: &[f64], q: &[f64]) -> f64 {
    let ny = q.len();
    let mut rate = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &k) in kernel[x * ny..(x + 1) * ny].iter().enumerate() {
            if k > 0.0 {
                rate += px * k * (k / q[y]).log2();
            }
        }
    }
    rate.max(0.0)
}

fn marginal(p: &[f64], kernel: &[f64], ny: usize) -> Vec<f64> {
    let mut q = vec![0.0; ny];
    for (x, &px) in p.iter().enumerate() {
        for (y, &k) in kernel[x * ny..(x + 1) * ny].iter().enumerate() {
            q[y] += px * k;
        }
    }
    q
}

fn expected_distortion(p: &[f64], kernel: &[f64], spec: &DistortionSpec) -> f64 {
    let ny = spec.num_repro();
    p.iter()
        .enumerate()
        .map(|(x, &px)| {
            px * kernel[x * ny..(x + 1) * ny]
                .iter()
                .zip(spec.row(x))
                .map(|(k, d)| k * d)
                .sum::<f64>()
        })
        .sum()
}

/// Kernel rows `q(y)w(x,y)/Σ q w` for the output weights `q`.
fn fill_kernel(kernel: &mut [f64], q: &[f64], weights: &[f64], ny: usize, exec: Exec) {
    exec.for_each_chunk_mut(kernel, ny, |x, row| {
        let w = &weights[x * ny..(x + 1) * ny];
        let mut z = 0.0;
        for y in 0..ny {
            row[y] = q[y] * w[y];
            z += row[y];
        }
        if z > 0.0 {
            row.iter_mut().for_each(|v| *v /= z);
        } else {
            let total: f64 = w.iter().sum();
            for y in 0..ny {
                row[y] = w[y] / total;
            }
        }
    });
}

/// Objective minimized over `q`: `−Σ_x p(x) log2 Σ_y q(y) w(x,y)`.
fn ba_objective(p: &[f64], weights: &[f64], q: &[f64]) -> f64 {
    let ny = q.len();
    p.iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| {
            let z: f64 = q
                .iter()
                .zip(&weights[x * ny..(x + 1) * ny])
                .map(|(a, b)| a * b)
                .sum();
            -px * z.log2()
        })
        .sum()
}

/// Alternating minimization with fixed per-entry weights `w(x,y)`.
///
/// Each iteration is a SQUAREM step on the output weights: two plain
/// updates, an extrapolation along their differences, and one stabilizing
/// update, falling back to the plain pair whenever the objective does not
/// improve. Plain updates shrink an output that is leaving the support only
/// geometrically, with a ratio that tends to 1 near the slope where it leaves.
fn blahut_arimoto(
    p: &[f64],
    spec: &DistortionSpec,
    weights: &[f64],
    exec: Exec,
) -> Result<BaState> {
    let nx = spec.num_source();
    let ny = spec.num_repro();
    let exec = exec.for_work(nx * ny);
    let mut q = vec![1.0 / ny as f64; ny];
    let mut kernel = vec![0.0; nx * ny];
    let step = |q: &[f64], kernel: &mut Vec<f64>| -> Vec<f64> {
        fill_kernel(kernel, q, weights, ny, exec);
        marginal(p, kernel, ny)
    };
    let mut prev = f64::NAN;
    let mut last_change = f64::INFINITY;
    for iteration in 1..=BA_MAX_ITERATIONS {
        let q1 = step(&q, &mut kernel);
        let q2 = step(&q1, &mut kernel);
        let r: Vec<f64> = q1.iter().zip(&q).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = q2
            .iter()
            .zip(&q1)
            .zip(&r)
            .map(|((c, b), r)| c - b - r)
            .collect();
        let (rn, vn) = (norm(&r), norm(&v));
        let mut next = q2.clone();
        if vn > 0.0 && rn > 0.0 {
            let mut a = (-rn / vn).min(-1.0);
            let extrapolate = |a: f64| -> Vec<f64> {
                q.iter()
                    .zip(&r)
                    .zip(&v)
                    .map(|((q0, r), v)| q0 - 2.0 * a * r + a * a * v)
                    .collect()
            };
            let mut ext = extrapolate(a);
            // step back toward the plain pair (a = −1 gives q2) until feasible
            while a < -1.0 && ext.iter().any(|&e| e < 0.0) {
                a = if a > -1.0 - 1e-3 {
                    -1.0
                } else {
                    0.5 * (a - 1.0)
                };
                ext = extrapolate(a);
            }
            ext.iter_mut().for_each(|e| *e = e.max(f64::MIN_POSITIVE));
            let total: f64 = ext.iter().sum();
            ext.iter_mut().for_each(|e| *e /= total);
            let stabilized = step(&ext, &mut kernel);
            if ba_objective(p, weights, &stabilized) <= ba_objective(p, weights, &q2) {
                next = stabilized;
            }
        }
        fill_kernel(&mut kernel, &next, weights, ny, exec);
        q = marginal(p, &kernel, ny);
        // q(y)/next(y) = Σ_x p(x)w(x,y)/z(x); the log of its maximum bounds
        // the objective gap, which stays informative when q itself crawls.
        let gap = q
            .iter()
            .zip(&next)
            .filter(|(_, &n)| n > 0.0)
            .map(|(a, n)| a / n)
            .fold(0.0, f64::max)
            .log2();
        let rate = mutual_information(p, &kernel, &q);
        last_change = (rate - prev).abs();
        if last_change < BA_TOLERANCE || gap < BA_TOLERANCE {
            return Ok(BaState {
                distortion: expected_distortion(p, &kernel, spec),
                kernel,
                q,
                rate,
                iterations: iteration,
            });
        }
        prev = rate;
    }
    Err(Error::NonConvergence {
        iterations: BA_MAX_ITERATIONS,
        last_change,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn slope_weights(spec: &DistortionSpec, slope: f64) -> Vec<f64> {
    let mut w = Vec::with_capacity(spec.num_source() * spec.num_repro());
    for x in 0..spec.num_source() {
        let row = spec.row(x);
        let m = row_min(row);
        w.extend(row.iter().map(|&d| (-slope * (d - m)).exp2()));
    }
    w
}

fn point_mass_state(source: &FinitePmf, spec: &DistortionSpec) -> BaState {
    let (dmax, y0) = max_distortion(source, spec);
    let ny = spec.num_repro();
    let mut kernel = vec![0.0; spec.num_source() * ny];
    for x in 0..spec.num_source() {
        kernel[x * ny + y0] = 1.0;
    }
    let mut q = vec![0.0; ny];
    q[y0] = 1.0;
    BaState {
        kernel,
        q,
        rate: 0.0,
        distortion: dmax,
        iterations: 0,
    }
}

/// The slope-`s` point of the rate-distortion curve.
///
/// `slope = 0` returns the zero-rate point: all mass on the lowest-index
/// minimizer of `E[d(X,y)]`, achieving `D_max`.
pub fn rd_fixed_slope(
    source: &FinitePmf,
    spec: &DistortionSpec,
    slope: f64,
) -> Result<FixedSlopePoint> {
    rd_fixed_slope_with(source, spec, slope, Exec::default())
}

pub fn rd_fixed_slope_with(
    source: &FinitePmf,
    spec: &DistortionSpec,
    slope: f64,
    exec: Exec,
) -> Result<FixedSlopePoint> {
    spec.check_source(source)?;
    if !slope.is_finite() || slope < 0.0 {
        return Err(Error::param(
            "slope",
            format!("must be finite and ≥ 0, got {slope}"),
        ));
    }
    let state = if slope == 0.0 {
        point_mass_state(source, spec)
    } else {
        blahut_arimoto(source.probs(), spec, &slope_weights(spec, slope), exec)?
    };
    Ok(state.into_point(slope, spec.num_repro()))
}

/// Slope sweep; points are independent and run under `exec`.
pub fn rd_sweep(
    source: &FinitePmf,
    spec: &DistortionSpec,
    slopes: &[f64],
    exec: Exec,
) -> Vec<Result<FixedSlopePoint>> {
    exec.map(slopes, |&s| {
        rd_fixed_slope_with(source, spec, s, Exec::Sequential)
    })
}

fn tilted_information(spec: &DistortionSpec, q: &[f64], lambda: f64, level: f64) -> Vec<f64> {
    (0..spec.num_source())
        .map(|x| {
            let row = spec.row(x);
            let m = row_min(row);
            let s: f64 = row
                .iter()
                .zip(q)
                .map(|(&d, &qy)| qy * (-lambda * (d - m)).exp2())
                .sum();
            -lambda * (level - m) - s.log2()
        })
        .collect()
}

fn variance(p: &[f64], values: &[f64]) -> f64 {
    let mean: f64 = p.iter().zip(values).map(|(p, v)| p * v).sum();
    p.iter()
        .zip(values)
        .map(|(p, v)| p * (v - mean).powi(2))
        .sum()
}

fn solution(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    state: BaState,
    lambda: Extended,
    tilted_info: Vec<f64>,
) -> Result<RdSolution> {
    let ny = spec.num_repro();
    let total: f64 = state.q.iter().sum();
    let marginal = FinitePmf::new(
        spec.repro_alphabet().to_vec(),
        state.q.iter().map(|v| v / total).collect(),
    )?;
    let dispersion = variance(source.probs(), &tilted_info);
    Ok(RdSolution {
        distortion: level,
        rate: state.rate,
        kernel: state.kernel.chunks(ny).map(<[f64]>::to_vec).collect(),
        output_marginal: marginal,
        lambda_star: lambda,
        tilted_info,
        dispersion,
    })
}

/// `R(D)` for `D ∈ (D_min, D_max)` by bisection on the slope until the
/// achieved distortion is within 1e-9 of `D`.
///
/// When `R(D)` is affine around `D` the achieved distortion jumps across the
/// target at a single slope; the two end kernels are then mixed, which is
/// exact on an affine segment.
pub fn rd_at_distortion(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
) -> Result<RdSolution> {
    rd_at_distortion_with(source, spec, level, Exec::default())
}

pub fn rd_at_distortion_with(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    exec: Exec,
) -> Result<RdSolution> {
    spec.check_source(source)?;
    check_level(level)?;
    let dmin = min_distortion(source, spec);
    let (dmax, _) = max_distortion(source, spec);
    if !(level > dmin && level < dmax) {
        return Err(Error::Domain {
            level,
            min: dmin,
            max: dmax,
        });
    }
    let p = source.probs();
    // BA slows to a sublinear rate at a slope where an output enters the
    // support; such slopes are skipped by nudging to a nearby one.
    let solve = |candidates: &[f64]| -> Result<(f64, BaState)> {
        let mut last = None;
        for &s in candidates {
            match blahut_arimoto(p, spec, &slope_weights(spec, s), exec) {
                Ok(state) => return Ok((s, state)),
                Err(e @ Error::NonConvergence { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one candidate slope"))
    };

    let mut lo = (0.0, point_mass_state(source, spec));
    let mut hi_slope = 1.0;
    let mut hi = loop {
        let (s, state) = solve(&[hi_slope, hi_slope * 1.01, hi_slope * 0.99])?;
        hi_slope = s;
        if state.distortion < level {
            break (hi_slope, state);
        }
        if (state.distortion - level).abs() <= DISTORTION_TOLERANCE {
            let t = tilted_information(spec, &state.q, hi_slope, level);
            return solution(source, spec, level, state, Extended::Finite(hi_slope), t);
        }
        lo = (hi_slope, state);
        hi_slope *= 2.0;
        if hi_slope > 1e12 {
            return Err(Error::Precondition(format!(
                "no slope reaches distortion {level}"
            )));
        }
    };

    for _ in 0..200 {
        let mid = 0.5 * (lo.0 + hi.0);
        if mid <= lo.0 || mid >= hi.0 {
            break;
        }
        let width = hi.0 - lo.0;
        let (mid, state) = match solve(&[mid, lo.0 + 0.45 * width, lo.0 + 0.55 * width]) {
            Ok(found) => found,
            // the bracket has closed on the critical slope of an affine segment
            Err(Error::NonConvergence { .. }) if width <= CRITICAL_BRACKET * hi.0 => break,
            Err(e) => return Err(e),
        };
        if (state.distortion - level).abs() <= DISTORTION_TOLERANCE {
            let t = tilted_information(spec, &state.q, mid, level);
            return solution(source, spec, level, state, Extended::Finite(mid), t);
        }
        if state.distortion > level {
            lo = (mid, state);
        } else {
            hi = (mid, state);
        }
    }

    // affine segment: mix the two end kernels
    let (d_lo, d_hi) = (lo.1.distortion, hi.1.distortion);
    let theta = (level - d_hi) / (d_lo - d_hi);
    let kernel: Vec<f64> =
        lo.1.kernel
            .iter()
            .zip(&hi.1.kernel)
            .map(|(a, b)| theta * a + (1.0 - theta) * b)
            .collect();
    let q = marginal(p, &kernel, spec.num_repro());
    let state = BaState {
        rate: mutual_information(p, &kernel, &q),
        distortion: expected_distortion(p, &kernel, spec),
        kernel,
        q,
        iterations: 0,
    };
    let slope = 0.5 * (lo.0 + hi.0);
    let t = tilted_information(spec, &state.q, slope, level);
    solution(source, spec, level, state, Extended::Finite(slope), t)
}

fn restricted_state(source: &FinitePmf, spec: &DistortionSpec, exec: Exec) -> Result<BaState> {
    let mut mask = Vec::with_capacity(spec.num_source() * spec.num_repro());
    for x in 0..spec.num_source() {
        let row = spec.row(x);
        let m = row_min(row);
        mask.extend(
            row.iter()
                .map(|&d| if tolerance::within(d, m) { 1.0 } else { 0.0 }),
        );
    }
    blahut_arimoto(source.probs(), spec, &mask, exec)
}

/// `R(D_min)`: the slope → ∞ limit, i.e. minimum mutual information over
/// kernels supported on each row's minimizers.
///
/// Tilted information is the limit `−log2 Σ_{y ∈ argmin d(x,·)} q*(y)`, which
/// exists only when `min_y d(x,y)` is the same for every `x` in the support.
pub fn rd_at_min_distortion(source: &FinitePmf, spec: &DistortionSpec) -> Result<RdSolution> {
    spec.check_source(source)?;
    let exec = Exec::default();
    let state = restricted_state(source, spec, exec)?;
    let support: Vec<usize> = (0..spec.num_source())
        .filter(|&x| source.prob(x) > 0.0)
        .collect();
    let mins: Vec<f64> = support.iter().map(|&x| row_min(spec.row(x))).collect();
    if mins
        .iter()
        .any(|m| (m - mins[0]).abs() > tolerance::DISTORTION_SLACK)
    {
        return Err(Error::Precondition(
            "tilted information at D_min diverges when min_y d(x,y) depends on x".into(),
        ));
    }
    let ny = spec.num_repro();
    let tilted: Vec<f64> = (0..spec.num_source())
        .map(|x| {
            let row = spec.row(x);
            let m = row_min(row);
            let mass: f64 = (0..ny)
                .filter(|&y| tolerance::within(row[y], m))
                .map(|y| state.q[y])
                .sum();
            -mass.log2()
        })
        .collect();
    let level = min_distortion(source, spec);
    solution(source, spec, level, state, Extended::Infinite, tilted)
}

/// `R(D)` on the whole half-line: `+∞` below `D_min`, `0` from `D_max` on.
pub fn rd_value(source: &FinitePmf, spec: &DistortionSpec, level: f64) -> Result<Extended> {
    spec.check_source(source)?;
    check_level(level)?;
    let dmin = min_distortion(source, spec);
    let (dmax, _) = max_distortion(source, spec);
    let slack = tolerance::DISTORTION_SLACK;
    if level < dmin - slack {
        Ok(Extended::Infinite)
    } else if level >= dmax - slack {
        Ok(Extended::Finite(0.0))
    } else if level <= dmin + slack {
        Ok(Extended::Finite(
            restricted_state(source, spec, Exec::default())?.rate,
        ))
    } else {
        Ok(Extended::Finite(
            rd_at_distortion(source, spec, level)?.rate,
        ))
    }
}

/// D-tilted Rényi entropy `(1/(1−α)) log2 E[2^{(1−α)ȷ(X,D)}]`; the `α → 1`
/// guard returns `E[ȷ(X,D)]`.
pub fn d_tilted_renyi_entropy(rd: &RdSolution, source: &FinitePmf, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    if rd.tilted_info.len() != source.len() {
        return Err(Error::AlphabetMismatch(
            "tilted information and source differ in length".into(),
        ));
    }
    let support = source
        .probs()
        .iter()
        .zip(&rd.tilted_info)
        .filter(|(p, _)| **p > 0.0);
    if (alpha - 1.0).abs() < tolerance::ALPHA_ONE_GUARD {
        return Ok(support.map(|(p, j)| p * j).sum());
    }
    let a = 1.0 - alpha;
    let top = support
        .clone()
        .map(|(_, j)| a * j)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = support.map(|(p, j)| p * (a * j - top).exp2()).sum();
    Ok((top + s.log2()) / a)
}

/// `R_{D,ε}(X) = min I(X;Y)` subject to `P[d(X,Y) > D] ≤ ε`, evaluated as the
/// rate-distortion function under `d'(x,y) = 1{d(x,y) > D}` at level `ε`.
pub fn r_d_epsilon(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Result<Extended> {
    check_level(level)?;
    check_epsilon(epsilon)?;
    spec.check_source(source)?;
    rd_value(source, &spec.excess_indicator(level), epsilon)
}

/// `H_{D,ε}(X)`: minimum `H(φ(X))` over every map `φ: X → Y` with
/// `P[d(X,φ(X)) > D] ≤ ε`, by exhaustive enumeration.
pub fn h_d_epsilon_bruteforce(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Result<Extended> {
    h_d_epsilon_bruteforce_with(source, spec, level, epsilon, Exec::default())
}

pub fn h_d_epsilon_bruteforce_with(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    exec: Exec,
) -> Result<Extended> {
    check_level(level)?;
    check_epsilon(epsilon)?;
    spec.check_source(source)?;
    let nx = spec.num_source();
    let ny = spec.num_repro();
    let total = (ny as u128).checked_pow(nx as u32).unwrap_or(u128::MAX);
    if total > BRUTEFORCE_CAP {
        return Err(Error::TooLarge(format!(
            "{ny}^{nx} maps exceed the exhaustive cap {BRUTEFORCE_CAP}; use the covering bound instead"
        )));
    }
    vertex_minimum(source, spec, level, epsilon, false, exec, |mass| {
        Ok(shannon_bits(mass))
    })
}

/// Minimum of `f(P_Y)` over feasible deterministic maps. With `splits`, also
/// over maps with one symbol split between an inside and an outside output
/// so the constraint is tight; these and the maps are the vertices of the
/// feasible kernel polytope, so a quasi-concave `f` attains its minimum over
/// all kernels there. The caller bounds `|Y|^|X|`.
pub(crate) fn vertex_minimum<F>(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    splits: bool,
    exec: Exec,
    f: F,
) -> Result<Extended>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let nx = spec.num_source();
    let ny = spec.num_repro();
    let total = (ny as u64).pow(nx as u32);
    let p = source.probs();
    let bad: Vec<bool> = (0..nx * ny)
        .map(|i| !tolerance::within(spec.get(i / ny, i % ny), level))
        .collect();
    const CHUNK: u64 = 1024;
    let chunks = total.div_ceil(CHUNK) as usize;
    let best = exec
        .for_work(total as usize)
        .map_range(0..chunks, |c| -> Result<f64> {
            let mut best = f64::INFINITY;
            let mut map = vec![0usize; nx];
            let mut mass = vec![0.0; ny];
            for index in c as u64 * CHUNK..((c as u64 + 1) * CHUNK).min(total) {
                let mut rest = index;
                mass.iter_mut().for_each(|m| *m = 0.0);
                let mut excess = 0.0;
                for x in 0..nx {
                    map[x] = (rest % ny as u64) as usize;
                    rest /= ny as u64;
                    mass[map[x]] += p[x];
                    if bad[x * ny + map[x]] {
                        excess += p[x];
                    }
                }
                if excess > epsilon + tolerance::COVER {
                    continue;
                }
                best = best.min(f(&mass)?);
                if !splits {
                    continue;
                }
                for x in 0..nx {
                    let y1 = map[x];
                    if p[x] == 0.0 || bad[x * ny + y1] || excess >= epsilon {
                        continue;
                    }
                    let theta = (epsilon - excess) / p[x];
                    if theta >= 1.0 {
                        continue;
                    }
                    for y2 in (0..ny).filter(|&y| bad[x * ny + y]) {
                        mass[y1] -= theta * p[x];
                        mass[y2] += theta * p[x];
                        best = best.min(f(&mass)?);
                        mass[y1] += theta * p[x];
                        mass[y2] -= theta * p[x];
                    }
                }
            }
            Ok(best)
        });
    let mut g = f64::INFINITY;
    for b in best {
        g = g.min(b?);
    }
    Ok(if g.is_finite() {
        Extended::Finite(g)
    } else {
        Extended::Infinite
    })
}

/// `Q(z) = P[N(0,1) > z]`.
pub fn q_function(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Inverse Gaussian tail; `q_inv(0) = +∞`.
pub fn q_inv(epsilon: f64) -> Result<Extended> {
    if epsilon == 0.0 {
        return Ok(Extended::Infinite);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in [0, 1), got {epsilon}"),
        ));
    }
    let mut z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * epsilon);
    // Newton polish on Q(z) − ε; Q'(z) = −φ(z)
    for _ in 0..3 {
        let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density == 0.0 {
            break;
        }
        z += (q_function(z) - epsilon) / density;
    }
    Ok(Extended::Finite(z))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianApprox {
    pub n: usize,
    pub epsilon: f64,
    pub value: f64,
}

/// `(1−ε)R(D) − sqrt(V(D)/(2πn))·e^{−Q^{-1}(ε)²/2}` without the `O(log n / n)`
/// remainder. At `ε = 0` the dispersion term vanishes and the value is `R(D)`.
pub fn gaussian_approx(rd: &RdSolution, n: usize, epsilon: f64) -> Result<GaussianApprox> {
    if n == 0 {
        return Err(Error::param("n", "blocklength must be ≥ 1"));
    }
    let value = match q_inv(epsilon)? {
        Extended::Infinite => rd.rate,
        Extended::Finite(z) => {
            (1.0 - epsilon) * rd.rate
                - (rd.dispersion / (2.0 * std::f64::consts::PI * n as f64)).sqrt()
                    * (-0.5 * z * z).exp()
        }
    };
    Ok(GaussianApprox { n, epsilon, value })
}

/// `log2 log2(1 + min(|X|, |Y|))`, the converse slack.
pub fn converse_slack(num_source: usize, num_repro: usize) -> f64 {
    (1.0 + num_source.min(num_repro) as f64).log2().log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZeroExcessOutcome {
    pub cgf: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Zero-excess converse: `cgf(t) ≥ H_{1/(1+t)}(X,D) − log2 log2(1 + min(|X|,|Y|))`.
pub fn theorem1_check(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    t: f64,
    code: &Code,
) -> Result<ZeroExcessOutcome> {
    let metrics = crate::codec::code_metrics(code, source, spec, level, t)?;
    if metrics.excess_probability > tolerance::EQUALITY {
        return Err(Error::Precondition(format!(
            "code has excess-distortion probability {} > 0",
            metrics.excess_probability
        )));
    }
    let dmin = min_distortion(source, spec);
    let rd = if level <= dmin + tolerance::DISTORTION_SLACK {
        rd_at_min_distortion(source, spec)?
    } else {
        rd_at_distortion(source, spec, level)?
    };
    let bound = d_tilted_renyi_entropy(&rd, source, 1.0 / (1.0 + t))?
        - converse_slack(spec.num_source(), spec.num_repro());
    Ok(ZeroExcessOutcome {
        cgf: metrics.cgf,
        bound,
        holds: metrics.cgf >= bound - tolerance::INEQUALITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::build_stochastic_code;
    use crate::covering::greedy_cover;

    fn names(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn binary(p: f64) -> (FinitePmf, DistortionSpec) {
        (
            FinitePmf::new(names("01"), vec![1.0 - p, p]).unwrap(),
            DistortionSpec::hamming(names("01"), names("01")).unwrap(),
        )
    }

    fn h2(p: f64) -> f64 {
        shannon_bits(&[p, 1.0 - p])
    }

    #[test]
    fn zero_slope_is_dmax() {
        let (source, spec) = binary(0.2);
        let pt = rd_fixed_slope(&source, &spec, 0.0).unwrap();
        assert_eq!(pt.rate, 0.0);
        assert!((pt.distortion - 0.2).abs() < 1e-15);
    }

    #[test]
    fn large_slope_is_lossless() {
        let (source, spec) = binary(0.5);
        let pt = rd_fixed_slope(&source, &spec, 40.0).unwrap();
        assert!(pt.distortion < 1e-9);
        assert!((pt.rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn binary_hamming_closed_forms() {
        let (source, spec) = binary(0.2);
        for (d, r, lambda) in [
            (0.05, 0.43553113777140606, 4.247927513443585),
            (0.10, 0.2529325012980811, 3.169925001442312),
            (0.15, 0.11208779017096193, 2.5025003405291835),
        ] {
            let rd = rd_at_distortion(&source, &spec, d).unwrap();
            assert!((rd.rate - r).abs() < 1e-6, "R({d}) = {}", rd.rate);
            assert!((rd.rate - (h2(0.2) - h2(d))).abs() < 1e-6);
            assert!((rd.lambda_star.expect_finite("slope") - lambda).abs() < 1e-5);
            assert!((rd.dispersion - 0.64).abs() < 1e-6, "V = {}", rd.dispersion);
            let mean: f64 = source
                .probs()
                .iter()
                .zip(&rd.tilted_info)
                .map(|(p, j)| p * j)
                .sum();
            assert!((mean - rd.rate).abs() < 1e-6);
        }
    }

    #[test]
    fn domain_errors() {
        let (source, spec) = binary(0.2);
        assert!(matches!(
            rd_at_distortion(&source, &spec, 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            rd_at_distortion(&source, &spec, 0.2),
            Err(Error::Domain { .. })
        ));
        assert!(rd_fixed_slope(&source, &spec, -1.0).is_err());
    }

    #[test]
    fn tilted_renyi_two_atom() {
        let (source, spec) = binary(0.2);
        let rd = rd_at_distortion(&source, &spec, 0.1).unwrap();
        let j = &rd.tilted_info;
        let direct = 2.0 * (0.8 * (0.5 * j[0]).exp2() + 0.2 * (0.5 * j[1]).exp2()).log2();
        assert!((d_tilted_renyi_entropy(&rd, &source, 0.5).unwrap() - direct).abs() < 1e-12);
        assert!((d_tilted_renyi_entropy(&rd, &source, 1.0).unwrap() - rd.rate).abs() < 1e-6);
        assert!(d_tilted_renyi_entropy(&rd, &source, 0.0).is_err());
    }

    #[test]
    fn uniform_source_has_constant_tilted_info() {
        let (source, spec) = binary(0.5);
        let rd = rd_at_distortion(&source, &spec, 0.1).unwrap();
        assert!(rd.dispersion < 1e-12);
        for alpha in [0.3, 0.5, 2.0] {
            assert!((d_tilted_renyi_entropy(&rd, &source, alpha).unwrap() - rd.rate).abs() < 1e-9);
        }
    }

    #[test]
    fn r_d_epsilon_cases() {
        let source = FinitePmf::new(names("abc"), vec![0.5, 0.3, 0.2]).unwrap();
        let spec = DistortionSpec::hamming(names("abc"), names("abc")).unwrap();
        let lossless = r_d_epsilon(&source, &spec, 0.0, 0.0)
            .unwrap()
            .expect_finite("R");
        assert!((lossless - shannon_bits(source.probs())).abs() < 1e-9);
        let r = r_d_epsilon(&source, &spec, 0.0, 0.25)
            .unwrap()
            .expect_finite("R");
        assert!(r <= 0.8112781244591328 + 1e-9);
        assert_eq!(
            r_d_epsilon(&source, &spec, 0.0, 0.5).unwrap(),
            Extended::Finite(0.0)
        );
        let narrow = DistortionSpec::hamming(names("abc"), names("a")).unwrap();
        assert_eq!(
            r_d_epsilon(&source, &narrow, 0.0, 0.3).unwrap(),
            Extended::Infinite
        );
    }

    #[test]
    fn bruteforce_running_example() {
        let source = FinitePmf::new(names("abc"), vec![0.5, 0.3, 0.2]).unwrap();
        let spec = DistortionSpec::hamming(names("abc"), names("abc")).unwrap();
        let h = h_d_epsilon_bruteforce(&source, &spec, 0.0, 0.25)
            .unwrap()
            .expect_finite("H");
        // c → a leaves (0.7, 0.3); splitting b would need a kernel
        assert!((h - 0.8812908992306927).abs() < 1e-12);
        let h0 = h_d_epsilon_bruteforce(&source, &spec, 0.0, 0.0)
            .unwrap()
            .expect_finite("H");
        assert!((h0 - shannon_bits(source.probs())).abs() < 1e-12);
        let seq = h_d_epsilon_bruteforce_with(&source, &spec, 0.0, 0.25, Exec::Sequential).unwrap();
        assert_eq!(seq, Extended::Finite(h));
        let big = FinitePmf::uniform((0..12).map(|i| i.to_string()).collect()).unwrap();
        let big_spec =
            DistortionSpec::hamming(big.alphabet().to_vec(), big.alphabet().to_vec()).unwrap();
        assert!(matches!(
            h_d_epsilon_bruteforce(&big, &big_spec, 0.0, 0.0),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn q_inv_values() {
        assert_eq!(q_inv(0.5).unwrap(), Extended::Finite(0.0));
        assert!((q_inv(0.158655253931457).unwrap().expect_finite("z") - 1.0).abs() < 1e-9);
        assert!((q_inv(0.022750131948179).unwrap().expect_finite("z") - 2.0).abs() < 1e-9);
        assert_eq!(q_inv(0.0).unwrap(), Extended::Infinite);
        assert!(q_inv(1.0).is_err());
        for eps in [1e-8, 1e-3, 0.1, 0.37, 0.9] {
            let z = q_inv(eps).unwrap().expect_finite("z");
            assert!((q_function(z) - eps).abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_approx_values() {
        let (source, spec) = binary(0.2);
        let rd = rd_at_distortion(&source, &spec, 0.1).unwrap();
        let g = gaussian_approx(&rd, 8, 0.5).unwrap();
        let expect = 0.5 * 0.2529325012980811 - (0.64 / (16.0 * std::f64::consts::PI)).sqrt();
        assert!((g.value - expect).abs() < 1e-6);
        assert!((g.value - 0.0136).abs() < 1e-4);
        assert_eq!(gaussian_approx(&rd, 8, 0.0).unwrap().value, rd.rate);
        let far = gaussian_approx(&rd, 1 << 40, 0.3).unwrap().value;
        assert!((far - 0.7 * rd.rate).abs() < 1e-6);
        let grid: Vec<f64> = (1..9)
            .map(|i| gaussian_approx(&rd, 8, i as f64 * 0.1).unwrap().value)
            .collect();
        assert!(grid.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_excess_running_example() {
        let source = FinitePmf::new(names("abc"), vec![0.5, 0.3, 0.2]).unwrap();
        let spec = DistortionSpec::hamming(names("abc"), names("abc")).unwrap();
        let code = build_stochastic_code(&greedy_cover(&source, &spec, 0.0, 0.0).unwrap());
        let out = theorem1_check(&source, &spec, 0.0, 1.0, &code).unwrap();
        assert!(out.holds);
        // H_{1/2}(X) − log2 log2 4
        let h_half = 2.0 * (0.5f64.sqrt() + 0.3f64.sqrt() + 0.2f64.sqrt()).log2();
        assert!((out.bound - (h_half - 1.0)).abs() < 1e-9);
        let lossy = build_stochastic_code(&greedy_cover(&source, &spec, 0.0, 0.25).unwrap());
        assert!(matches!(
            theorem1_check(&source, &spec, 0.0, 1.0, &lossy),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sweep_matches_single_points() {
        let (source, spec) = binary(0.3);
        let slopes = [0.0, 0.5, 1.0, 2.0, 4.0];
        let par = rd_sweep(&source, &spec, &slopes, Exec::Parallel);
        let seq = rd_sweep(&source, &spec, &slopes, Exec::Sequential);
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
    }
}
