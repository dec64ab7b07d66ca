//! Finite-alphabet probability primitives: PMFs, Shannon and Rényi entropy,
//! and the majorization order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::tolerance;
use crate::{Error, Result};

/// Probability mass function over a finite, ordered alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct FinitePmf {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for FinitePmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        FinitePmf::new(raw.alphabet, raw.probs)
    }
}

impl FinitePmf {
    pub fn new(alphabet: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        if alphabet.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "{} symbols but {} probabilities",
                alphabet.len(),
                probs.len()
            )));
        }
        let mut seen = HashSet::with_capacity(alphabet.len());
        for s in &alphabet {
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidPmf(format!("duplicate symbol {s:?}")));
            }
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidPmf(format!(
                "probability of {:?} is {p}",
                alphabet[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tolerance::NORMALIZATION {
            return Err(Error::InvalidPmf(format!("probabilities sum to {total}")));
        }
        Ok(FinitePmf { alphabet, probs })
    }

    /// PMF with symbols named `0, 1, …`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let alphabet = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(alphabet, probs)
    }

    /// Normalizes non-negative weights into a PMF with the given alphabet.
    pub fn from_weights(alphabet: Vec<String>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        Self::new(alphabet, weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(alphabet: Vec<String>) -> Result<Self> {
        let m = alphabet.len();
        Self::new(alphabet, vec![1.0 / m as f64; m])
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.alphabet.iter().position(|s| s == symbol)
    }

    /// Number of symbols with positive probability.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }
}

/// Non-negative, not necessarily normalized, vector in `ℝ^m_+`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(
                "weights",
                format!("entry {v} is not a finite non-negative real"),
            ));
        }
        Ok(Weights(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn normalized(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::param("weights", "zero total cannot be normalized"));
        }
        Ok(self.0.iter().map(|v| v / total).collect())
    }
}

impl From<&FinitePmf> for Weights {
    fn from(p: &FinitePmf) -> Self {
        Weights(p.probs.clone())
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &FinitePmf) -> f64 {
    shannon_bits(p.probs())
}

/// Rényi entropy of order `alpha` in bits.
///
/// `|alpha − 1| < 1e-9` (including `alpha = 1`) returns the Shannon entropy.
pub fn renyi_entropy(p: &FinitePmf, alpha: f64) -> Result<f64> {
    renyi_bits(p.probs(), alpha)
}

/// Shannon entropy of a (normalized) probability vector.
pub fn shannon_bits(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // -0.0 for point masses
    h.max(0.0)
}

/// Rényi entropy of a (normalized) probability vector.
pub fn renyi_bits(probs: &[f64], alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    if (alpha - 1.0).abs() < tolerance::ALPHA_ONE_GUARD {
        return Ok(shannon_bits(probs));
    }
    let power_sum: f64 = probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p.powf(alpha))
        .sum();
    Ok(power_sum.log2() / (1.0 - alpha))
}

pub(crate) fn check_order(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::param(
            "alpha",
            format!("order must lie in (0, ∞), got {alpha}"),
        ));
    }
    Ok(())
}

/// Returns `true` iff `p` majorizes `q` (`q ≺ p`).
///
/// Shorter vectors are padded with zeros. Both are sorted in descending order
/// and every prefix sum of `p` must dominate that of `q`.
pub fn majorizes(p: &Weights, q: &Weights) -> Result<bool> {
    let (left, right) = (p.total(), q.total());
    if (left - right).abs() > tolerance::EQUALITY {
        return Err(Error::IncomparableTotals { left, right });
    }
    Ok(majorizes_sorted(
        &sorted_desc(p.values()),
        &sorted_desc(q.values()),
    ))
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn majorizes_sorted(p: &[f64], q: &[f64]) -> bool {
    let m = p.len().max(q.len());
    let (mut sp, mut sq) = (0.0, 0.0);
    for i in 0..m {
        sp += p.get(i).copied().unwrap_or(0.0);
        sq += q.get(i).copied().unwrap_or(0.0);
        if sp < sq - tolerance::EQUALITY {
            return false;
        }
    }
    true
}

/// Both sides of the Schur-concavity inequality `H_α(p) ≤ H_α(q)` for `q ≺ p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchurWitness {
    pub majorizing_entropy: f64,
    pub majorized_entropy: f64,
    pub holds: bool,
}

/// Evaluates `H_α` on the normalized `p` and `q`, requiring `p` to majorize `q`.
pub fn schur_concavity_witness(p: &Weights, q: &Weights, alpha: f64) -> Result<SchurWitness> {
    if !majorizes(p, q)? {
        return Err(Error::Precondition(
            "first argument does not majorize the second".into(),
        ));
    }
    let hp = renyi_bits(&p.normalized()?, alpha)?;
    let hq = renyi_bits(&q.normalized()?, alpha)?;
    Ok(SchurWitness {
        majorizing_entropy: hp,
        majorized_entropy: hq,
        holds: hp <= hq + tolerance::EQUALITY,
    })
}
