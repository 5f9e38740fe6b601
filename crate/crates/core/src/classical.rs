//! Local deterministic optima.
//!
//! Strategies are enumerated in a fixed lexicographic order: strategy index
//! bit `2k` is set when party `k + 1` answers -1 to its unprimed setting, bit
//! `2k + 1` when it answers -1 to its primed setting. Index 0 is the
//! all-(+1) strategy. Ties resolve to the lowest index.

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{expand_svetlichny, CorrelatorExpansion, CorrelatorTable, JointBias};

/// Largest party count for the classical Svetlichny optimum.
pub const MAX_CLASSICAL_PARTIES: usize = 12;

/// Largest party count for literal `4^n` enumeration.
pub const MAX_ENUMERATION_PARTIES: usize = 10;

const TIE_TOL: f64 = 1e-12;

/// Per party, the outcomes `[unprimed, primed]`, each +1 or -1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeterministicStrategy {
    outcomes: Vec<[i8; 2]>,
}

impl DeterministicStrategy {
    pub fn new(outcomes: Vec<[i8; 2]>) -> Result<Self> {
        if outcomes.iter().flatten().any(|&o| o != 1 && o != -1) {
            return Err(GameError::Validation("outcomes must be +1 or -1".into()));
        }
        Ok(Self { outcomes })
    }

    pub fn from_index(parties: usize, index: u64) -> Self {
        let outcomes = (0..parties)
            .map(|k| {
                let sign = |bit: u64| if index >> bit & 1 == 1 { -1 } else { 1 };
                [sign(2 * k as u64), sign(2 * k as u64 + 1)]
            })
            .collect();
        Self { outcomes }
    }

    pub fn index(&self) -> u64 {
        self.outcomes
            .iter()
            .enumerate()
            .map(|(k, o)| {
                let lo = u64::from(o[0] == -1);
                let hi = u64::from(o[1] == -1);
                (lo | hi << 1) << (2 * k)
            })
            .sum()
    }

    pub fn parties(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[[i8; 2]] {
        &self.outcomes
    }

    /// Outcome of `party` (0-based) for setting 0 (unprimed) or 1 (primed).
    pub fn outcome(&self, party: usize, setting: usize) -> i8 {
        self.outcomes[party][setting]
    }

    /// Bitmasks of the parties answering -1 to their unprimed / primed setting.
    pub fn sign_masks(&self) -> (u32, u32) {
        let mut unprimed = 0;
        let mut primed = 0;
        for (k, o) in self.outcomes.iter().enumerate() {
            if o[0] == -1 {
                unprimed |= 1 << k;
            }
            if o[1] == -1 {
                primed |= 1 << k;
            }
        }
        (unprimed, primed)
    }

    /// Two-party correlator table `E_xy = a_x * b_y`.
    pub fn correlators(&self) -> Result<CorrelatorTable> {
        if self.parties() != 2 {
            return Err(GameError::Dimension {
                expected: 2,
                got: self.parties(),
            });
        }
        let a = self.outcomes[0];
        let b = self.outcomes[1];
        let mut e = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                e[x][y] = f64::from(a[x] * b[y]);
            }
        }
        Ok(CorrelatorTable::new_unchecked(e))
    }

    /// Negates party `party`'s outcome for one setting.
    pub fn negate(&mut self, party: usize, setting: usize) {
        self.outcomes[party][setting] = -self.outcomes[party][setting];
    }
}

/// Score of a deterministic strategy on dense mask-indexed weights.
fn score_index(dense: &[f64], parties: usize, index: u64) -> f64 {
    let (mut unprimed, mut primed) = (0u32, 0u32);
    for k in 0..parties {
        unprimed |= ((index >> (2 * k) & 1) as u32) << k;
        primed |= ((index >> (2 * k + 1) & 1) as u32) << k;
    }
    dense
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(mask, w)| {
            let mask = mask as u32;
            let negs = (unprimed & !mask) | (primed & mask);
            if negs.count_ones().is_multiple_of(2) {
                *w
            } else {
                -*w
            }
        })
        .sum()
}

fn tie_floor(best: f64) -> f64 {
    best - TIE_TOL * best.abs().max(1.0)
}

/// Order in which [`enumerate_classical_value`] walks the strategy space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationOrder {
    Forward,
    Reverse,
}

fn enumerate_dense(dense: &[f64], parties: usize, order: EnumerationOrder) -> (f64, DeterministicStrategy) {
    let count = 1u64 << (2 * parties);
    let scores: Vec<(u64, f64)> = match order {
        EnumerationOrder::Forward => (0..count).map(|i| (i, score_index(dense, parties, i))).collect(),
        EnumerationOrder::Reverse => (0..count).rev().map(|i| (i, score_index(dense, parties, i))).collect(),
    };
    let best = scores.iter().fold(f64::NEG_INFINITY, |m, &(_, s)| m.max(s));
    let floor = tie_floor(best);
    let witness = scores
        .iter()
        .filter(|&&(_, s)| s >= floor)
        .map(|&(i, _)| i)
        .min()
        .expect("at least one strategy attains the maximum");
    (
        score_index(dense, parties, witness),
        DeterministicStrategy::from_index(parties, witness),
    )
}

/// Classical value of a two-party joint-bias game: the best of the 16
/// deterministic strategies.
pub fn classical_value_chsh(bias: &JointBias) -> (f64, DeterministicStrategy) {
    enumerate_dense(&bias.signed_weights(), 2, EnumerationOrder::Forward)
}

/// `1 - 2(1-p)(1-q)` on the quadrant `p, q >= 1/2`.
pub fn classical_closed_form(p: f64, q: f64) -> Result<f64> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(v.is_finite() && (0.5..1.0).contains(&v)) {
            return Err(GameError::Domain(format!(
                "closed form needs 1/2 <= {name} < 1, got {v}"
            )));
        }
    }
    Ok(1.0 - 2.0 * (1.0 - p) * (1.0 - q))
}

/// Literal enumeration of all `4^n` deterministic strategies.
pub fn enumerate_classical_value(
    expansion: &CorrelatorExpansion,
    order: EnumerationOrder,
) -> Result<(f64, DeterministicStrategy)> {
    let n = expansion.n();
    if n > MAX_ENUMERATION_PARTIES {
        return Err(GameError::Budget {
            what: format!("enumerating 4^{n} deterministic strategies"),
            limit: MAX_ENUMERATION_PARTIES,
        });
    }
    Ok(enumerate_dense(&expansion.dense(), n, order))
}

/// In-place Walsh-Hadamard transform: `out[t] = sum_S w[S] (-1)^{|S & t|}`.
fn walsh_hadamard(values: &mut [f64]) {
    let mut h = 1;
    while h < values.len() {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Classical optimum of an arbitrary correlator expansion.
///
/// Writing `C'_k = C_k t_k`, a deterministic strategy scores
/// `(prod_k C_k) * F(t)` with `F` the Walsh-Hadamard transform of the weights,
/// so the maximum over all `4^n` strategies is `max_t |F(t)|`. The witness is
/// the lowest strategy index among all maximizers, exactly as literal
/// enumeration would report it.
pub fn classical_value_expansion(expansion: &CorrelatorExpansion) -> Result<(f64, DeterministicStrategy)> {
    let n = expansion.n();
    if n > MAX_CLASSICAL_PARTIES {
        return Err(GameError::Budget {
            what: format!("classical optimum for {n} parties"),
            limit: MAX_CLASSICAL_PARTIES,
        });
    }
    let dense = expansion.dense();
    let mut f = dense.clone();
    walsh_hadamard(&mut f);
    let best = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = tie_floor(best);

    let mut witness = u64::MAX;
    for (t, &ft) in f.iter().enumerate() {
        if ft.abs() < floor {
            continue;
        }
        // cheapest choice per party is unprimed bit == t bit; this fixes the
        // parity of the unprimed signs to that of t
        let mut index = 0u64;
        for k in 0..n {
            let tb = (t >> k & 1) as u64;
            index |= tb << (2 * k);
        }
        let parity_negative = (t as u32).count_ones() % 2 == 1;
        let need_negative = ft < 0.0;
        let either = ft.abs() <= TIE_TOL;
        if !either && parity_negative != need_negative {
            // flipping party 1 touches only the two lowest bits
            index ^= 0b11;
        }
        witness = witness.min(index);
    }
    let value = score_index(&dense, n, witness);
    Ok((value, DeterministicStrategy::from_index(n, witness)))
}

/// Classical optimum of `S_n[p]`.
pub fn classical_value_svetlichny(n: usize, p: f64) -> Result<(f64, DeterministicStrategy)> {
    if n > MAX_CLASSICAL_PARTIES {
        return Err(GameError::Budget {
            what: format!("classical optimum for {n} parties"),
            limit: MAX_CLASSICAL_PARTIES,
        });
    }
    classical_value_expansion(&expand_svetlichny(n, p)?)
}
