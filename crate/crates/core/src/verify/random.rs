//! Seeded generators for random instances, feasible kernels and codes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::codec::{nth_codeword, BitString, Branch, Code, CodeVariant, DecoderEntry};
use crate::covering::{uncovered_mass, DistortionSpec};
use crate::probability::FinitePmf;
use crate::tolerance::{self, within};

/// FNV-1a of `label`, mixed into `root`. Used to give every check its own stream.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in root.to_le_bytes().iter().chain(label.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn symbols(prefix: char, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random source and distortion matrix with `|X| ≤ max_source`, `|Y| ≤ max_repro`.
///
/// Alphabets of size one are drawn rarely. About a third of the matrices are quantized to multiples of 1/4 so that
/// ties between balls occur.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_source: usize,
    max_repro: usize,
) -> (FinitePmf, DistortionSpec) {
    let mut size = |max: usize| {
        if max >= 2 && rng.gen_bool(0.85) {
            rng.gen_range(2..=max)
        } else {
            rng.gen_range(1..=max.max(1))
        }
    };
    let nx = size(max_source);
    let ny = size(max_repro);
    let mut weights: Vec<f64> = (0..nx).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    if nx > 2 && rng.gen_bool(0.2) {
        let z = rng.gen_range(0..nx);
        weights[z] = 0.0;
    }
    let source = FinitePmf::from_weights(symbols('x', nx), &weights).expect("positive weights");
    let quantize = rng.gen_bool(0.35);
    let d: Vec<f64> = (0..nx * ny)
        .map(|_| {
            let v: f64 = rng.gen();
            if quantize {
                (v * 4.0).floor() / 4.0
            } else {
                v
            }
        })
        .collect();
    let spec =
        DistortionSpec::from_flat(symbols('x', nx), symbols('y', ny), d).expect("valid matrix");
    (source, spec)
}

/// Feasible `(D, ε)` for the instance. `D` is often a matrix entry so the
/// ball boundary is exercised; `ε` is sometimes exactly the uncovered mass
/// and otherwise mostly small enough that the plan has several cells.
pub fn random_params<R: Rng + ?Sized>(
    rng: &mut R,
    source: &FinitePmf,
    spec: &DistortionSpec,
) -> (f64, f64) {
    loop {
        let level = if rng.gen_bool(0.5) {
            let i = rng.gen_range(0..spec.num_source());
            let row = spec.row(i);
            row[rng.gen_range(0..spec.num_repro())].min(row[rng.gen_range(0..spec.num_repro())])
        } else {
            rng.gen::<f64>().powi(2)
        };
        let u = uncovered_mass(source, spec, level).expect("valid instance");
        if u >= 0.95 {
            continue;
        }
        // below 1 − (heaviest ball) the greedy plan needs a second cell
        let heaviest = (0..spec.num_repro())
            .map(|y| {
                (0..spec.num_source())
                    .filter(|&x| within(spec.get(x, y), level))
                    .map(|x| source.prob(x))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let multi = 1.0 - heaviest;
        let epsilon = match rng.gen_range(0..10) {
            0 => u,
            1 if u == 0.0 => 0.0,
            2..=7 if multi > u => u + (multi - u) * rng.gen::<f64>(),
            _ => u + (0.95 - u) * rng.gen::<f64>().powi(3),
        };
        return (level, epsilon);
    }
}

/// Excess-distortion probability of a flat kernel.
pub fn kernel_excess(source: &FinitePmf, spec: &DistortionSpec, level: f64, kernel: &[f64]) -> f64 {
    let ny = spec.num_repro();
    (0..spec.num_source())
        .map(|x| {
            source.prob(x)
                * (0..ny)
                    .filter(|&y| !within(spec.get(x, y), level))
                    .map(|y| kernel[x * ny + y])
                    .sum::<f64>()
        })
        .sum()
}

/// Output marginal `Σ_x P(x) W(y|x)` of a flat kernel.
pub fn kernel_marginal(source: &FinitePmf, ny: usize, kernel: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; ny];
    for x in 0..source.len() {
        for y in 0..ny {
            q[y] += source.prob(x) * kernel[x * ny + y];
        }
    }
    q
}

/// Flat kernel of a deterministic map.
pub fn map_kernel(map: &[usize], ny: usize) -> Vec<f64> {
    let mut k = vec![0.0; map.len() * ny];
    for (x, &y) in map.iter().enumerate() {
        k[x * ny + y] = 1.0;
    }
    k
}

/// Random deterministic map meeting the excess constraint, by sending each
/// symbol into its ball with a random preference and repairing greedily.
pub fn random_feasible_map<R: Rng + ?Sized>(
    rng: &mut R,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Option<Vec<usize>> {
    let ny = spec.num_repro();
    let mut map: Vec<usize> = (0..spec.num_source())
        .map(|_| rng.gen_range(0..ny))
        .collect();
    let mut order: Vec<usize> = (0..map.len()).collect();
    order.shuffle(rng);
    for x in order {
        let excess = kernel_excess(source, spec, level, &map_kernel(&map, ny));
        if excess <= epsilon + tolerance::COVER {
            break;
        }
        let inside: Vec<usize> = (0..ny).filter(|&y| within(spec.get(x, y), level)).collect();
        if let Some(&y) = inside.choose(rng) {
            map[x] = y;
        }
    }
    let excess = kernel_excess(source, spec, level, &map_kernel(&map, ny));
    (excess <= epsilon + tolerance::COVER).then_some(map)
}

/// Random kernel with `P[d(X,Y) > D] ≤ ε`.
///
/// Rows start as random distributions; out-of-ball mass of coverable
/// symbols is then scaled down just enough to meet the constraint, so many
/// samples sit on the constraint boundary.
pub fn random_feasible_kernel<R: Rng + ?Sized>(
    rng: &mut R,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
) -> Vec<f64> {
    let nx = spec.num_source();
    let ny = spec.num_repro();
    let sparse = rng.gen_bool(0.5);
    let mut k = vec![0.0; nx * ny];
    for x in 0..nx {
        let row = &mut k[x * ny..(x + 1) * ny];
        for v in row.iter_mut() {
            let u: f64 = rng.gen();
            *v = if sparse { u.powi(8) } else { -(1.0 - u).ln() };
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    let inside = |x: usize, y: usize| within(spec.get(x, y), level);
    let coverable: Vec<bool> = (0..nx).map(|x| (0..ny).any(|y| inside(x, y))).collect();
    let forced: f64 = (0..nx)
        .filter(|&x| !coverable[x])
        .map(|x| source.prob(x))
        .sum();
    let movable: f64 = (0..nx)
        .filter(|&x| coverable[x])
        .map(|x| {
            source.prob(x)
                * (0..ny)
                    .filter(|&y| !inside(x, y))
                    .map(|y| k[x * ny + y])
                    .sum::<f64>()
        })
        .sum();
    if forced + movable > epsilon && movable > 0.0 {
        let keep =
            ((epsilon - forced).max(0.0) / movable).clamp(0.0, 1.0) * rng.gen_range(0.9..=1.0);
        for x in (0..nx).filter(|&x| coverable[x]) {
            let row = &mut k[x * ny..(x + 1) * ny];
            let out: f64 = (0..ny).filter(|&y| !inside(x, y)).map(|y| row[y]).sum();
            let inn: f64 = (0..ny).filter(|&y| inside(x, y)).map(|y| row[y]).sum();
            let moved = out * (1.0 - keep);
            let spread = inn <= 1e-9;
            for y in 0..ny {
                if inside(x, y) {
                    row[y] = if spread {
                        0.0
                    } else {
                        row[y] * (1.0 + moved / inn)
                    };
                } else {
                    row[y] *= keep;
                }
            }
            if spread {
                let cnt = (0..ny).filter(|&y| inside(x, y)).count() as f64;
                for y in (0..ny).filter(|&y| inside(x, y)) {
                    row[y] = (inn + moved) / cnt;
                }
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    k
}

/// Convex combination `θ·a + (1−θ)·b` of flat kernels.
pub fn mix_kernels(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(a, b)| theta * a + (1.0 - theta) * b)
        .collect()
}

fn assign_encoder<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &DistortionSpec,
    level: f64,
    outputs: &[usize],
    stochastic: bool,
) -> Vec<Vec<Branch>> {
    let m = outputs.len();
    (0..spec.num_source())
        .map(|x| {
            let inside: Vec<usize> = (0..m)
                .filter(|&e| within(spec.get(x, outputs[e]), level))
                .collect();
            let pick = |rng: &mut R| -> usize {
                if !inside.is_empty() && rng.gen_bool(0.75) {
                    *inside.choose(rng).expect("non-empty")
                } else {
                    rng.gen_range(0..m)
                }
            };
            let first = pick(rng);
            if stochastic && m > 1 && rng.gen_bool(0.3) {
                let second = pick(rng);
                if second != first {
                    let p: f64 = rng.gen_range(0.05..0.95);
                    return vec![
                        Branch {
                            entry: first,
                            prob: p,
                        },
                        Branch {
                            entry: second,
                            prob: 1.0 - p,
                        },
                    ];
                }
            }
            vec![Branch {
                entry: first,
                prob: 1.0,
            }]
        })
        .collect()
}

fn encoder_excess(
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    outputs: &[usize],
    encoder: &[Vec<Branch>],
) -> f64 {
    encoder
        .iter()
        .enumerate()
        .flat_map(|(x, bs)| bs.iter().map(move |b| (x, b)))
        .filter(|(x, b)| !within(spec.get(*x, outputs[b.entry]), level))
        .map(|(x, b)| source.prob(x) * b.prob)
        .sum()
}

/// Keeps only emitted entries and renumbers branches.
fn compact(encoder: &mut [Vec<Branch>], entries: Vec<DecoderEntry>) -> Vec<DecoderEntry> {
    let mut used = vec![false; entries.len()];
    encoder.iter().flatten().for_each(|b| used[b.entry] = true);
    let mut remap = vec![usize::MAX; entries.len()];
    let mut kept = Vec::new();
    for (i, e) in entries.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(e);
        }
    }
    encoder
        .iter_mut()
        .flatten()
        .for_each(|b| b.entry = remap[b.entry]);
    kept
}

fn entry_masses(source: &FinitePmf, encoder: &[Vec<Branch>], m: usize) -> Vec<f64> {
    let mut mass = vec![0.0; m];
    for (x, bs) in encoder.iter().enumerate() {
        for b in bs {
            mass[b.entry] += source.prob(x) * b.prob;
        }
    }
    mass
}

/// Random code with an injective decoder meeting `P[d > D] ≤ ε`.
///
/// The decoder uses distinct outputs and distinct codewords `w_i`,
/// `i ≤ max_index`. Half of the draws hand the shortest codewords to the most
/// probable outputs, which is where converse violations would appear first.
pub fn random_injective_code<R: Rng + ?Sized>(
    rng: &mut R,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    max_index: u64,
    stochastic: bool,
) -> Option<Code> {
    let ny = spec.num_repro();
    for _ in 0..64 {
        let m = rng.gen_range(1..=ny.min(max_index as usize));
        let mut ys: Vec<usize> = (0..ny).collect();
        ys.shuffle(rng);
        let outputs = &ys[..m];
        let mut encoder = assign_encoder(rng, spec, level, outputs, stochastic);
        if encoder_excess(source, spec, level, outputs, &encoder) > epsilon + tolerance::EQUALITY {
            continue;
        }
        let mut indices: Vec<u64> = (1..=max_index).collect();
        indices.shuffle(rng);
        indices.truncate(m);
        if rng.gen_bool(0.5) {
            indices.sort_unstable();
            let mass = entry_masses(source, &encoder, m);
            let mut by_mass: Vec<usize> = (0..m).collect();
            by_mass.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]));
            let mut sorted = vec![0; m];
            for (rank, &e) in by_mass.iter().enumerate() {
                sorted[e] = indices[rank];
            }
            indices = sorted;
        }
        let entries: Vec<DecoderEntry> = (0..m)
            .map(|e| DecoderEntry {
                codeword: nth_codeword(indices[e]).expect("index ≥ 1"),
                output: outputs[e],
            })
            .collect();
        let decoder = compact(&mut encoder, entries);
        let variant = if encoder.iter().all(|b| b.len() == 1) {
            CodeVariant::Deterministic
        } else {
            CodeVariant::Stochastic
        };
        return Code::from_parts(
            variant,
            spec.source_alphabet().to_vec(),
            spec.repro_alphabet().to_vec(),
            encoder,
            decoder,
        )
        .ok();
    }
    None
}

/// Leaves of a random binary tree with `m` leaves (`m = 1` gives a single
/// random word of length ≤ 2).
fn random_prefix_words<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<BitString> {
    if m == 1 {
        let len = rng.gen_range(0..=2);
        return vec![BitString::from_bits((0..len).map(|_| rng.gen()).collect())];
    }
    let mut leaves = vec![BitString::empty()];
    while leaves.len() < m {
        let i = rng.gen_range(0..leaves.len());
        let leaf = leaves.swap_remove(i);
        leaves.push(leaf.concat(&BitString::from_bits(vec![false])));
        leaves.push(leaf.concat(&BitString::from_bits(vec![true])));
    }
    // occasionally lengthen a leaf, leaving the tree incomplete
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(0..leaves.len());
        leaves[i] = leaves[i].concat(&BitString::from_bits(vec![rng.gen()]));
    }
    leaves
}

/// Random prefix-free code with an injective decoder meeting the constraint.
pub fn random_prefix_code<R: Rng + ?Sized>(
    rng: &mut R,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    epsilon: f64,
    stochastic: bool,
) -> Option<Code> {
    let ny = spec.num_repro();
    for _ in 0..64 {
        let m = rng.gen_range(1..=ny);
        let mut ys: Vec<usize> = (0..ny).collect();
        ys.shuffle(rng);
        let outputs = &ys[..m];
        let mut encoder = assign_encoder(rng, spec, level, outputs, stochastic);
        if encoder_excess(source, spec, level, outputs, &encoder) > epsilon + tolerance::EQUALITY {
            continue;
        }
        let mut words = random_prefix_words(rng, m);
        words.shuffle(rng);
        if rng.gen_bool(0.5) {
            words.sort_by_key(BitString::len);
            let mass = entry_masses(source, &encoder, m);
            let mut by_mass: Vec<usize> = (0..m).collect();
            by_mass.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]));
            let mut sorted = vec![BitString::empty(); m];
            for (rank, &e) in by_mass.iter().enumerate() {
                sorted[e] = words[rank].clone();
            }
            words = sorted;
        }
        let entries: Vec<DecoderEntry> = words
            .into_iter()
            .zip(outputs)
            .map(|(codeword, &output)| DecoderEntry { codeword, output })
            .collect();
        let decoder = compact(&mut encoder, entries);
        return Code::from_parts(
            CodeVariant::Prefix,
            spec.source_alphabet().to_vec(),
            spec.repro_alphabet().to_vec(),
            encoder,
            decoder,
        )
        .ok();
    }
    None
}
