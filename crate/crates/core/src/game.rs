//! Game inputs, scoring functionals and the correlator expansion of the
//! biased Svetlichny family.
//!
//! Throughout, a two-party correlator game is written in "expectation form":
//! each round pays +1 on a win and -1 on a loss, so the score is
//! `sum_xy sign_xy * P(x, y) * E_xy` with the minus sign on the `(1, 1)` cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, GameError, Result};

/// Sign pattern of the CHSH win condition `a xor b = x*y` in correlator form.
pub const CHSH_SIGNS: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, -1.0]];

/// Tolerance on the normalization of a joint input distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Largest party count accepted by [`expand_svetlichny`].
pub const MAX_EXPANSION_PARTIES: usize = 16;

/// Coefficients smaller than this are treated as exact cancellations.
pub const PRUNE_TOL: f64 = 1e-15;

/// Independent setting biases: Alice asks `x = 0` with probability `p`,
/// Bob asks `y = 0` with probability `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPair {
    p: f64,
    q: f64,
}

impl BiasPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        check_open_unit("q", q)?;
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The product distribution `P(x, y) = P(x) P(y)`.
    pub fn to_joint(&self) -> JointBias {
        let px = [self.p, 1.0 - self.p];
        let qy = [self.q, 1.0 - self.q];
        JointBias {
            weights: [[px[0] * qy[0], px[0] * qy[1]], [px[1] * qy[0], px[1] * qy[1]]],
        }
    }
}

/// A joint distribution `P_ij = P(x = i, y = j)` over the four setting pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointBias {
    weights: [[f64; 2]; 2],
}

impl JointBias {
    pub fn new(weights: [[f64; 2]; 2]) -> Result<Self> {
        let mut total = 0.0;
        for (i, row) in weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(GameError::Validation(format!(
                        "P{i}{j} must be a non-negative probability, got {w}"
                    )));
                }
                total += w;
            }
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(GameError::Validation(format!(
                "joint bias must sum to 1, got {total}"
            )));
        }
        Ok(Self { weights })
    }

    /// Row-major `[P00, P01, P10, P11]`.
    pub fn from_row_major(cells: [f64; 4]) -> Result<Self> {
        Self::new([[cells[0], cells[1]], [cells[2], cells[3]]])
    }

    pub fn product(p: f64, q: f64) -> Result<Self> {
        Ok(BiasPair::new(p, q)?.to_joint())
    }

    pub fn uniform() -> Self {
        Self {
            weights: [[0.25; 2]; 2],
        }
    }

    pub fn weights(&self) -> [[f64; 2]; 2] {
        self.weights
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[x][y]
    }

    pub fn row_major(&self) -> [f64; 4] {
        let w = self.weights;
        [w[0][0], w[0][1], w[1][0], w[1][1]]
    }

    /// Signed correlator weights indexed by primed-party bitmask
    /// (bit 0: Alice asked `x = 1`, bit 1: Bob asked `y = 1`).
    pub(crate) fn signed_weights(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (x, y) in SETTINGS {
            out[x | (y << 1)] = CHSH_SIGNS[x][y] * self.weights[x][y];
        }
        out
    }
}

pub(crate) const SETTINGS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Conditional correlators `E_xy = E(A_{x+1} B_{y+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable {
    e: [[f64; 2]; 2],
}

impl CorrelatorTable {
    pub fn new(e: [[f64; 2]; 2]) -> Result<Self> {
        for row in &e {
            for &v in row {
                if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                    return Err(GameError::Validation(format!(
                        "correlators must lie in [-1, 1], got {v}"
                    )));
                }
            }
        }
        Ok(Self { e })
    }

    pub(crate) fn new_unchecked(e: [[f64; 2]; 2]) -> Self {
        Self { e }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.e[x][y]
    }

    pub fn values(&self) -> [[f64; 2]; 2] {
        self.e
    }
}

/// `CHSH[p, q] = pq E00 + p(1-q) E01 + (1-p)q E10 - (1-p)(1-q) E11`.
pub fn chsh_score(bias: &BiasPair, corr: &CorrelatorTable) -> f64 {
    let (p, q) = (bias.p, bias.q);
    let e = &corr.e;
    p * q * e[0][0] + p * (1.0 - q) * e[0][1] + (1.0 - p) * q * e[1][0]
        - (1.0 - p) * (1.0 - q) * e[1][1]
}

pub fn joint_score(bias: &JointBias, corr: &CorrelatorTable) -> f64 {
    SETTINGS
        .iter()
        .map(|&(x, y)| CHSH_SIGNS[x][y] * bias.weights[x][y] * corr.e[x][y])
        .sum()
}

/// Converts a score of the +-1 valued game to the average winning probability.
pub fn expectation_to_success(v: f64) -> Result<f64> {
    if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
        return Err(GameError::Validation(format!(
            "expectation must lie in [-1, 1], got {v}"
        )));
    }
    Ok((1.0 + v) / 2.0)
}

/// Signed weights of a multi-party correlator expression.
///
/// A key is the set of parties measuring their primed observable, encoded as
/// a bitmask with party 1 at bit 0. The correlator of mask `S` is the
/// expectation of `prod_{k not in S} C_k * prod_{k in S} C'_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExpansionJson", try_from = "ExpansionJson")]
pub struct CorrelatorExpansion {
    n: usize,
    p: f64,
    weights: BTreeMap<u32, f64>,
}

impl CorrelatorExpansion {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, primed: u32) -> f64 {
        self.weights.get(&primed).copied().unwrap_or(0.0)
    }

    /// Nonzero `(mask, weight)` pairs in ascending mask order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.weights.iter().map(|(&k, &v)| (k, v))
    }

    /// All `2^n` weights, zeros included, indexed by mask.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n];
        for (k, v) in self.terms() {
            out[k as usize] = v;
        }
        out
    }

    /// Weighted sum of correlators supplied by `correlator(mask)`.
    pub fn evaluate_with<F: FnMut(u32) -> f64>(&self, mut correlator: F) -> f64 {
        self.terms().map(|(k, w)| w * correlator(k)).sum()
    }

    /// Value on a deterministic assignment given as bitmasks of the parties
    /// whose unprimed (resp. primed) outcome is -1.
    pub fn evaluate_signs(&self, neg_unprimed: u32, neg_primed: u32) -> f64 {
        self.evaluate_with(|mask| {
            let negs = (neg_unprimed & !mask) | (neg_primed & mask);
            if negs.count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
    }

    fn from_dense(n: usize, p: f64, dense: &[f64]) -> Self {
        let weights = dense
            .iter()
            .enumerate()
            .filter(|(_, w)| w.abs() >= PRUNE_TOL)
            .map(|(k, &w)| (k as u32, w))
            .collect();
        Self { n, p, weights }
    }
}

#[derive(Serialize, Deserialize)]
struct ExpansionJson {
    n: usize,
    p: f64,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    primed: Vec<usize>,
    weight: f64,
}

impl From<CorrelatorExpansion> for ExpansionJson {
    fn from(e: CorrelatorExpansion) -> Self {
        let terms = e
            .terms()
            .map(|(mask, weight)| TermJson {
                primed: (0..e.n).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect(),
                weight,
            })
            .collect();
        Self { n: e.n, p: e.p, terms }
    }
}

impl TryFrom<ExpansionJson> for CorrelatorExpansion {
    type Error = GameError;

    fn try_from(j: ExpansionJson) -> Result<Self> {
        if j.n == 0 || j.n > MAX_EXPANSION_PARTIES {
            return Err(GameError::Validation(format!("bad party count {}", j.n)));
        }
        let mut weights = BTreeMap::new();
        for t in j.terms {
            let mut mask = 0u32;
            for k in t.primed {
                if k == 0 || k > j.n {
                    return Err(GameError::Validation(format!("party index {k} out of range")));
                }
                mask |= 1 << (k - 1);
            }
            if t.weight.abs() >= PRUNE_TOL {
                weights.insert(mask, t.weight);
            }
        }
        Ok(Self { n: j.n, p: j.p, weights })
    }
}

/// Dense weights of the recursive expression `M_n` at bias `p`, together with
/// the same expression at bias `1 - p`.
///
/// `M'_n` exchanges every `C` with its `C'`. The setting probabilities travel
/// with the operators, so the coefficient of a correlator in `M'_n[p]` is the
/// one of the complementary correlator in `M_n[1 - p]`. This keeps every
/// coefficient equal to `+-2 * P(settings)`.
fn mabk_pair(n: usize, p: f64) -> (Vec<f64>, Vec<f64>) {
    let base = |p: f64| {
        let r = 1.0 - p;
        vec![2.0 * p * p, 2.0 * r * p, 2.0 * p * r, -2.0 * r * r]
    };
    let (mut a, mut b) = (base(p), base(1.0 - p));
    let r = 1.0 - p;
    for k in 2..n {
        let size = 1usize << k;
        let full = size - 1;
        let mut next_a = vec![0.0; size << 1];
        let mut next_b = vec![0.0; size << 1];
        for mask in 0..size {
            // primed partners taken from the other bias
            let ap = b[full ^ mask];
            let bp = a[full ^ mask];
            next_a[mask] = p * (a[mask] + ap);
            next_a[mask | size] = r * (a[mask] - ap);
            next_b[mask] = r * (b[mask] + bp);
            next_b[mask | size] = p * (b[mask] - bp);
        }
        a = next_a;
        b = next_b;
    }
    (a, b)
}

/// Expands `S_n[p]` into signed full-correlator weights.
pub fn expand_svetlichny(n: usize, p: f64) -> Result<CorrelatorExpansion> {
    if !(2..=MAX_EXPANSION_PARTIES).contains(&n) {
        return Err(GameError::Validation(format!(
            "party count must lie in 2..={MAX_EXPANSION_PARTIES}, got {n}"
        )));
    }
    check_open_unit("p", p)?;
    let (m, m_flipped) = mabk_pair(n, p);
    let dense = if n.is_multiple_of(2) {
        m
    } else {
        let full = (1usize << n) - 1;
        (0..=full)
            .map(|mask| 0.5 * (m[mask] + m_flipped[full ^ mask]))
            .collect()
    };
    Ok(CorrelatorExpansion::from_dense(n, p, &dense))
}
