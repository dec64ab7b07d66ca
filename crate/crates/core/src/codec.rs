//! Binary codewords, the three covering-based code constructions and exact
//! evaluation of excess-distortion probability and length statistics.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covering::{CoveringPlan, DistortionSpec};
use crate::probability::FinitePmf;
use crate::tolerance::{self, within};
use crate::{Error, Result};

/// Finite binary string; the empty string is `λ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// Parses an ASCII `0`/`1` string; `""` is `λ`.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(
                    "codeword",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        BitString(bits)
    }

    /// ASCII form used in exports; `λ` is `""`.
    pub fn to_ascii(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("λ")
        } else {
            f.write_str(&self.to_ascii())
        }
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_ascii())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        BitString::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// `floor(log2 i)` for `i ≥ 1`.
pub fn floor_log2(i: u64) -> u32 {
    63 - i.leading_zeros()
}

/// The `i`-th binary string in length-then-value order:
/// `w_1 = λ, w_2 = 0, w_3 = 1, w_4 = 00, …`.
pub fn nth_codeword(i: u64) -> Result<BitString> {
    if i == 0 {
        return Err(Error::param("i", "codeword indices start at 1"));
    }
    let len = floor_log2(i);
    let value = i - (1u64 << len);
    Ok(BitString(
        (0..len).rev().map(|bit| (value >> bit) & 1 == 1).collect(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeVariant {
    Stochastic,
    Deterministic,
    Prefix,
}

/// One randomized encoder output: decoder table entry `entry` with probability `prob`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub entry: usize,
    pub prob: f64,
}

/// Decoder table row: `codeword ↦ output` (a reproduction index).
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderEntry {
    pub codeword: BitString,
    pub output: usize,
}

/// A variable-length lossy code.
///
/// The encoder maps each source symbol to weighted branches; each branch
/// names a decoder table entry, so the decoded symbol of a branch never
/// depends on codeword lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct Code {
    variant: CodeVariant,
    source_alphabet: Vec<String>,
    repro_alphabet: Vec<String>,
    encoder: Vec<Vec<Branch>>,
    decoder: Vec<DecoderEntry>,
    plan: Option<CoveringPlan>,
}

impl Code {
    /// Assembles and validates a code.
    pub fn from_parts(
        variant: CodeVariant,
        source_alphabet: Vec<String>,
        repro_alphabet: Vec<String>,
        encoder: Vec<Vec<Branch>>,
        decoder: Vec<DecoderEntry>,
    ) -> Result<Self> {
        let code =
            Self::from_parts_unchecked(variant, source_alphabet, repro_alphabet, encoder, decoder);
        code.validate()?;
        Ok(code)
    }

    /// Assembles a code without validation. Negative controls use this to
    /// build deliberately broken codes.
    pub fn from_parts_unchecked(
        variant: CodeVariant,
        source_alphabet: Vec<String>,
        repro_alphabet: Vec<String>,
        encoder: Vec<Vec<Branch>>,
        decoder: Vec<DecoderEntry>,
    ) -> Self {
        Code {
            variant,
            source_alphabet,
            repro_alphabet,
            encoder,
            decoder,
            plan: None,
        }
    }

    pub fn variant(&self) -> CodeVariant {
        self.variant
    }

    pub fn encoder(&self) -> &[Vec<Branch>] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[DecoderEntry] {
        &self.decoder
    }

    pub fn plan(&self) -> Option<&CoveringPlan> {
        self.plan.as_ref()
    }

    pub fn source_alphabet(&self) -> &[String] {
        &self.source_alphabet
    }

    pub fn repro_alphabet(&self) -> &[String] {
        &self.repro_alphabet
    }

    /// Reproduction index for `codeword`, or `None` when the decoder is undefined there.
    pub fn decode(&self, codeword: &BitString) -> Option<usize> {
        self.decoder
            .iter()
            .find(|e| &e.codeword == codeword)
            .map(|e| e.output)
    }

    /// Draws one encoding of source symbol `x`.
    pub fn sample_encode<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> &BitString {
        let branches = &self.encoder[x];
        let mut u: f64 = rng.gen();
        for b in branches {
            if u < b.prob {
                return &self.decoder[b.entry].codeword;
            }
            u -= b.prob;
        }
        &self.decoder[branches.last().expect("encoder has a branch").entry].codeword
    }

    pub fn kraft_sum(&self) -> f64 {
        self.decoder
            .iter()
            .map(|e| 0.5f64.powi(e.codeword.len() as i32))
            .sum()
    }

    pub fn is_prefix_free(&self) -> bool {
        self.decoder.iter().enumerate().all(|(i, a)| {
            self.decoder
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.codeword.is_prefix_of(&b.codeword))
        })
    }

    /// Distinct codewords and distinct outputs.
    pub fn decoder_is_injective(&self) -> bool {
        let words: HashSet<_> = self.decoder.iter().map(|e| &e.codeword).collect();
        let outputs: HashSet<_> = self.decoder.iter().map(|e| e.output).collect();
        words.len() == self.decoder.len() && outputs.len() == self.decoder.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidCode(m));
        if self.encoder.len() != self.source_alphabet.len() {
            return fail(format!(
                "encoder covers {} symbols, alphabet has {}",
                self.encoder.len(),
                self.source_alphabet.len()
            ));
        }
        if let Some(e) = self
            .decoder
            .iter()
            .find(|e| e.output >= self.repro_alphabet.len())
        {
            return fail(format!("decoder output index {} out of range", e.output));
        }
        let mut used = vec![false; self.decoder.len()];
        for (x, branches) in self.encoder.iter().enumerate() {
            if branches.is_empty() {
                return fail(format!("symbol {x} has no branch"));
            }
            let mut total = 0.0;
            for b in branches {
                if b.entry >= self.decoder.len() {
                    return fail(format!("symbol {x} refers to missing entry {}", b.entry));
                }
                if !(b.prob > 0.0 && b.prob <= 1.0 + tolerance::EQUALITY) {
                    return fail(format!("symbol {x} has branch probability {}", b.prob));
                }
                used[b.entry] = true;
                total += b.prob;
            }
            if (total - 1.0).abs() > tolerance::EQUALITY {
                return fail(format!("branch probabilities of symbol {x} sum to {total}"));
            }
            if self.variant == CodeVariant::Deterministic && branches.len() != 1 {
                return fail(format!("deterministic code randomizes symbol {x}"));
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return fail(format!("decoder entry {i} is never emitted"));
        }
        if !self.decoder_is_injective() {
            return fail("decoder is not injective".into());
        }
        if self.variant == CodeVariant::Prefix {
            if !self.is_prefix_free() {
                return fail("prefix code has a codeword that prefixes another".into());
            }
            if self.kraft_sum() > 1.0 + tolerance::EQUALITY {
                return fail(format!("Kraft sum {} exceeds 1", self.kraft_sum()));
            }
        }
        Ok(())
    }

    /// Copy with every codeword replaced by `f(entry_index, codeword)`, unchecked.
    pub fn map_codewords_unchecked(&self, f: impl Fn(usize, &BitString) -> BitString) -> Code {
        let mut code = self.clone();
        for (i, e) in code.decoder.iter_mut().enumerate() {
            e.codeword = f(i, &e.codeword);
        }
        code
    }

    /// `(P_X(x)·branch probability, codeword length, decoded output, x)` for
    /// every branch with positive weight.
    pub fn weighted_branches<'a>(
        &'a self,
        source: &'a FinitePmf,
    ) -> impl Iterator<Item = (f64, usize, usize, usize)> + 'a {
        self.encoder
            .iter()
            .enumerate()
            .flat_map(move |(x, branches)| {
                branches.iter().filter_map(move |b| {
                    let w = source.prob(x) * b.prob;
                    let e = &self.decoder[b.entry];
                    (w > 0.0).then_some((w, e.codeword.len(), e.output, x))
                })
            })
    }

    /// Normalized CGF `(1/t) log2 E[2^{t ℓ(f(X))}]` for `t > 0`.
    pub fn cgf(&self, source: &FinitePmf, t: f64) -> Result<f64> {
        check_t(t)?;
        let pairs: Vec<(f64, usize)> = self
            .weighted_branches(source)
            .map(|(w, l, _, _)| (w, l))
            .collect();
        Ok(cgf_of_lengths(&pairs, t))
    }

    /// Output distribution over decoder entries (`P_Ȳ` when the decoder is injective).
    pub fn entry_distribution(&self, source: &FinitePmf) -> Vec<f64> {
        let mut p = vec![0.0; self.decoder.len()];
        for (x, branches) in self.encoder.iter().enumerate() {
            for b in branches {
                p[b.entry] += source.prob(x) * b.prob;
            }
        }
        p
    }

    pub fn export(&self) -> CodeExport {
        CodeExport {
            variant: self.variant,
            encoder: self
                .encoder
                .iter()
                .enumerate()
                .map(|(x, branches)| EncoderRow {
                    symbol: self.source_alphabet[x].clone(),
                    branches: branches
                        .iter()
                        .map(|b| BranchExport {
                            codeword: self.decoder[b.entry].codeword.clone(),
                            prob: b.prob,
                        })
                        .collect(),
                })
                .collect(),
            decoder: self
                .decoder
                .iter()
                .map(|e| DecoderRow {
                    codeword: e.codeword.clone(),
                    symbol: self.repro_alphabet[e.output].clone(),
                })
                .collect(),
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::param(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    Ok(())
}

/// `(1/t) log2 Σ w·2^{t ℓ}` over `(weight, length)` pairs whose weights sum to 1.
///
/// Large exponents are shifted by the maximum length; small ones go through
/// `expm1`/`ln_1p` so that `t → 0` keeps full precision.
pub fn cgf_of_lengths(pairs: &[(f64, usize)], t: f64) -> f64 {
    let max_len = pairs.iter().map(|p| p.1).max().unwrap_or(0) as f64;
    let ln2 = std::f64::consts::LN_2;
    if t * max_len <= 1.0 {
        let s: f64 = pairs
            .iter()
            .map(|&(w, l)| w * (t * l as f64 * ln2).exp_m1())
            .sum();
        s.ln_1p() / (t * ln2)
    } else {
        let s: f64 = pairs
            .iter()
            .map(|&(w, l)| w * (t * (l as f64 - max_len)).exp2())
            .sum();
        max_len + s.log2() / t
    }
}

/// Exact performance of a code on a source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CodeMetrics {
    pub excess_probability: f64,
    pub cgf: f64,
    pub mean_length: f64,
    pub max_length: usize,
    pub t: f64,
}

/// Exact excess-distortion probability and length statistics, summing over
/// every `(x, branch)` pair weighted by `P_X(x)` times the branch probability.
pub fn code_metrics(
    code: &Code,
    source: &FinitePmf,
    spec: &DistortionSpec,
    level: f64,
    t: f64,
) -> Result<CodeMetrics> {
    check_t(t)?;
    spec.check_source(source)?;
    if code.source_alphabet() != spec.source_alphabet()
        || code.repro_alphabet() != spec.repro_alphabet()
    {
        return Err(Error::AlphabetMismatch(
            "code and distortion matrix use different alphabets".into(),
        ));
    }
    let mut excess = 0.0;
    let mut mean = 0.0;
    let mut max_length = 0;
    let mut pairs = Vec::new();
    for (w, len, y, x) in code.weighted_branches(source) {
        if !within(spec.get(x, y), level) {
            excess += w;
        }
        mean += w * len as f64;
        max_length = max_length.max(len);
        pairs.push((w, len));
    }
    Ok(CodeMetrics {
        excess_probability: excess,
        cgf: cgf_of_lengths(&pairs, t),
        mean_length: mean,
        max_length,
        t,
    })
}

fn entries_from_plan(
    plan: &CoveringPlan,
    codeword: impl Fn(usize) -> BitString,
) -> Vec<DecoderEntry> {
    plan.centers()
        .iter()
        .enumerate()
        .map(|(i, &y)| DecoderEntry {
            codeword: codeword(i),
            output: y,
        })
        .collect()
}

fn stochastic_encoder(plan: &CoveringPlan) -> Vec<Vec<Branch>> {
    let k = plan.k_star();
    let last_mass = plan.cell_probs()[k - 1];
    let keep = (plan.beta_mass() / last_mass).clamp(0.0, 1.0);
    (0..plan.num_source())
        .map(|x| match plan.cell_of(x) {
            Some(i) if i + 1 < k => vec![Branch {
                entry: i,
                prob: 1.0,
            }],
            Some(i) if k > 1 => [
                Branch {
                    entry: i,
                    prob: keep,
                },
                Branch {
                    entry: 0,
                    prob: 1.0 - keep,
                },
            ]
            .into_iter()
            .filter(|b| b.prob > 0.0)
            .collect(),
            _ => vec![Branch {
                entry: 0,
                prob: 1.0,
            }],
        })
        .collect()
}

fn assemble(
    variant: CodeVariant,
    plan: &CoveringPlan,
    encoder: Vec<Vec<Branch>>,
    decoder: Vec<DecoderEntry>,
) -> Code {
    Code {
        variant,
        source_alphabet: plan.source_alphabet().to_vec(),
        repro_alphabet: plan.repro_alphabet().to_vec(),
        encoder,
        decoder,
        plan: Some(plan.clone()),
    }
}

/// Stochastic code: cell `i < k*` emits `w_i`; the last cell emits `w_{k*}`
/// with probability `β / P[A_{k*}]` and `w_1` otherwise; uncovered symbols emit `w_1`.
pub fn build_stochastic_code(plan: &CoveringPlan) -> Code {
    let decoder = entries_from_plan(plan, |i| nth_codeword(i as u64 + 1).expect("index ≥ 1"));
    assemble(
        CodeVariant::Stochastic,
        plan,
        stochastic_encoder(plan),
        decoder,
    )
}

/// Deterministic code: cell `i ≤ k*` emits `w_i`; uncovered symbols emit `w_1`.
pub fn build_deterministic_code(plan: &CoveringPlan) -> Code {
    let encoder = (0..plan.num_source())
        .map(|x| {
            vec![Branch {
                entry: plan.cell_of(x).unwrap_or(0),
                prob: 1.0,
            }]
        })
        .collect();
    let decoder = entries_from_plan(plan, |i| nth_codeword(i as u64 + 1).expect("index ≥ 1"));
    assemble(CodeVariant::Deterministic, plan, encoder, decoder)
}

/// Length of every prefix codeword: `floor(log2 k*) + 1`.
pub fn prefix_codeword_length(k_star: usize) -> usize {
    floor_log2(k_star as u64) as usize + 1
}

/// `w^p_i = w_i ∘ h_i` with `h_i = 1 0…0` padding to length `floor(log2 k*) + 1`.
pub fn prefix_codeword(i: u64, k_star: usize) -> Result<BitString> {
    let w = nth_codeword(i)?;
    let total = prefix_codeword_length(k_star);
    if w.len() >= total {
        return Err(Error::param(
            "i",
            format!("index {i} exceeds k* = {k_star}"),
        ));
    }
    let mut pad = vec![false; total - w.len()];
    pad[0] = true;
    Ok(w.concat(&BitString(pad)))
}

/// Prefix code: the stochastic encoder with every `w_i` replaced by `w^p_i`.
pub fn build_prefix_code(plan: &CoveringPlan) -> Code {
    let k = plan.k_star();
    let decoder = entries_from_plan(plan, |i| {
        prefix_codeword(i as u64 + 1, k).expect("index ≤ k*")
    });
    assemble(CodeVariant::Prefix, plan, stochastic_encoder(plan), decoder)
}

pub fn build_code(plan: &CoveringPlan, variant: CodeVariant) -> Code {
    match variant {
        CodeVariant::Stochastic => build_stochastic_code(plan),
        CodeVariant::Deterministic => build_deterministic_code(plan),
        CodeVariant::Prefix => build_prefix_code(plan),
    }
}

/// JSON export: per-symbol branches plus the decoder table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeExport {
    pub variant: CodeVariant,
    pub encoder: Vec<EncoderRow>,
    pub decoder: Vec<DecoderRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderRow {
    pub symbol: String,
    pub branches: Vec<BranchExport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchExport {
    pub codeword: BitString,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderRow {
    pub codeword: BitString,
    pub symbol: String,
}

impl CodeExport {
    /// Rebuilds a validated [`Code`] against the given alphabets.
    pub fn into_code(
        self,
        source_alphabet: Vec<String>,
        repro_alphabet: Vec<String>,
    ) -> Result<Code> {
        let decoder: Vec<DecoderEntry> = self
            .decoder
            .iter()
            .map(|row| {
                let output = repro_alphabet
                    .iter()
                    .position(|s| *s == row.symbol)
                    .ok_or_else(|| Error::UnknownSymbol(row.symbol.clone()))?;
                Ok(DecoderEntry {
                    codeword: row.codeword.clone(),
                    output,
                })
            })
            .collect::<Result<_>>()?;
        let mut encoder = vec![Vec::new(); source_alphabet.len()];
        for row in self.encoder {
            let x = source_alphabet
                .iter()
                .position(|s| *s == row.symbol)
                .ok_or_else(|| Error::UnknownSymbol(row.symbol.clone()))?;
            for b in row.branches {
                let entry = decoder
                    .iter()
                    .position(|e| e.codeword == b.codeword)
                    .ok_or_else(|| {
                        Error::InvalidCode(format!(
                            "codeword {:?} missing from decoder",
                            b.codeword.to_ascii()
                        ))
                    })?;
                encoder[x].push(Branch {
                    entry,
                    prob: b.prob,
                });
            }
        }
        Code::from_parts(
            self.variant,
            source_alphabet,
            repro_alphabet,
            encoder,
            decoder,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::greedy_cover;

    fn names(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    fn running() -> (FinitePmf, DistortionSpec, CoveringPlan) {
        let source = FinitePmf::new(names("abc"), vec![0.5, 0.3, 0.2]).unwrap();
        let spec = DistortionSpec::hamming(names("abc"), names("abc")).unwrap();
        let plan = greedy_cover(&source, &spec, 0.0, 0.25).unwrap();
        (source, spec, plan)
    }

    #[test]
    fn codeword_enumeration() {
        let expect = ["", "0", "1", "00", "01"];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(nth_codeword(i as u64 + 1).unwrap().to_ascii(), *e);
        }
        assert_eq!(nth_codeword(8).unwrap().to_ascii(), "000");
        assert_eq!(nth_codeword(7).unwrap().to_ascii(), "11");
        for i in 1..=1024u64 {
            assert_eq!(
                nth_codeword(i).unwrap().len(),
                (i as f64).log2().floor() as usize
            );
        }
        assert!(nth_codeword(0).is_err());
        assert_eq!(nth_codeword(1).unwrap().to_string(), "λ");
    }

    #[test]
    fn stochastic_code_running_example() {
        let (source, spec, plan) = running();
        let code = build_stochastic_code(&plan);
        code.validate().unwrap();
        let b = &code.encoder()[1];
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].entry, 1);
        assert!((b[0].prob - 5.0 / 6.0).abs() < 1e-15);
        assert!((b[1].prob - 1.0 / 6.0).abs() < 1e-15);
        let m = code_metrics(&code, &source, &spec, 0.0, 1.0).unwrap();
        assert!((m.excess_probability - 0.25).abs() < 1e-15);
        assert!((m.cgf - 1.25f64.log2()).abs() < 1e-14);
        assert!((m.mean_length - 0.25).abs() < 1e-15);
        assert_eq!(m.max_length, 1);
        assert_eq!(code.decode(&BitString::parse("0").unwrap()), Some(1));
        assert_eq!(code.decode(&BitString::parse("1").unwrap()), None);
    }

    #[test]
    fn single_center_code_is_constant() {
        let (source, spec, _) = running();
        let plan = greedy_cover(&source, &spec, 1.0, 0.0).unwrap();
        for code in [
            build_stochastic_code(&plan),
            build_deterministic_code(&plan),
        ] {
            code.validate().unwrap();
            assert!(code
                .encoder()
                .iter()
                .all(|b| b.len() == 1 && code.decoder()[b[0].entry].codeword.is_empty()));
            for t in [0.1, 1.0, 30.0] {
                assert_eq!(
                    code_metrics(&code, &source, &spec, 1.0, t).unwrap().cgf,
                    0.0
                );
            }
        }
        let prefix = build_prefix_code(&plan);
        assert_eq!(prefix.decoder()[0].codeword.len(), 1);
    }

    #[test]
    fn deterministic_code_running_example() {
        let (source, spec, plan) = running();
        let code = build_deterministic_code(&plan);
        code.validate().unwrap();
        let m = code_metrics(&code, &source, &spec, 0.0, 1.0).unwrap();
        assert!((m.excess_probability - plan.gamma_mass()).abs() < 1e-15);
        // P_det = (0.7, 0.3) on lengths (0, 1)
        assert!((m.cgf - 1.3f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn prefix_code_running_example() {
        let (source, spec, plan) = running();
        let code = build_prefix_code(&plan);
        code.validate().unwrap();
        assert!(code.decoder().iter().all(|e| e.codeword.len() == 2));
        assert!(code.is_prefix_free());
        assert!((code.kraft_sum() - 0.5).abs() < 1e-15);
        let m = code_metrics(&code, &source, &spec, 0.0, 1.0).unwrap();
        assert!((m.cgf - 2.0).abs() < 1e-14);
        assert!((m.excess_probability - 0.25).abs() < 1e-15);
    }

    #[test]
    fn prefix_codewords_extend_plain_ones() {
        for k in 1..=70usize {
            let words: Vec<_> = (1..=k as u64)
                .map(|i| prefix_codeword(i, k).unwrap())
                .collect();
            for (i, w) in words.iter().enumerate() {
                assert_eq!(w.len(), prefix_codeword_length(k));
                assert!(nth_codeword(i as u64 + 1).unwrap().is_prefix_of(w));
            }
            let distinct: HashSet<_> = words.iter().collect();
            assert_eq!(distinct.len(), k);
        }
    }

    #[test]
    fn cgf_limits_and_errors() {
        let pairs = [(0.75, 0usize), (0.25, 1usize)];
        assert!((cgf_of_lengths(&pairs, 1e-9) - 0.25).abs() < 1e-8);
        assert!((cgf_of_lengths(&pairs, 1.0) - 1.25f64.log2()).abs() < 1e-15);
        // 1 + log2(0.25 + 0.75·2^-64)/64
        assert!((cgf_of_lengths(&pairs, 64.0) - (1.0 - 2.0 / 64.0)).abs() < 1e-12);
        let (source, spec, plan) = running();
        let code = build_stochastic_code(&plan);
        assert!(code_metrics(&code, &source, &spec, 0.0, 0.0).is_err());
        assert!(code_metrics(&code, &source, &spec, 0.0, -1.0).is_err());
    }

    #[test]
    fn export_round_trip() {
        let (_, spec, plan) = running();
        let code = build_stochastic_code(&plan);
        let json = serde_json::to_string(&code.export()).unwrap();
        assert!(json.contains(r#""codeword":"""#));
        let back: CodeExport = serde_json::from_str(&json).unwrap();
        let rebuilt = back
            .into_code(
                spec.source_alphabet().to_vec(),
                spec.repro_alphabet().to_vec(),
            )
            .unwrap();
        assert_eq!(rebuilt.encoder(), code.encoder());
        assert_eq!(rebuilt.decoder(), code.decoder());
    }

    #[test]
    fn validation_catches_broken_codes() {
        let (_, _, plan) = running();
        let code = build_stochastic_code(&plan);
        let collapsed = code.map_codewords_unchecked(|_, _| BitString::empty());
        assert!(collapsed.validate().is_err());
        let enc = vec![
            vec![Branch {
                entry: 0,
                prob: 0.5
            }];
            3
        ];
        let dec = vec![DecoderEntry {
            codeword: BitString::empty(),
            output: 0,
        }];
        assert!(Code::from_parts(
            CodeVariant::Stochastic,
            names("abc"),
            names("abc"),
            enc,
            dec
        )
        .is_err());
    }

    #[test]
    fn sampler_only_emits_branch_codewords() {
        use rand::SeedableRng;
        let (_, _, plan) = running();
        let code = build_stochastic_code(&plan);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0;
        for _ in 0..6000 {
            let w = code.sample_encode(1, &mut rng);
            assert!(code.decode(w).is_some());
            hits += (w.len() == 1) as usize;
        }
        // P = 5/6
        assert!((hits as f64 / 6000.0 - 5.0 / 6.0).abs() < 0.03);
    }
}
