//! Two-party binary behaviors `P(ab|xy)`, the vertices of the non-signaling
//! polytope, and a seeded round-by-round simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::DeterministicStrategy;
use crate::error::{GameError, Result};
use crate::game::{joint_score, CorrelatorTable, JointBias, SETTINGS};

pub const BEHAVIOR_TOL: f64 = 1e-12;

/// `P(a, b | x, y)`, stored as `probs[x][y][a][b]`.
///
/// Serializes as a 4x4 row-major array: row `2x + y`, column `2a + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[f64; 4]; 4]", try_from = "[[f64; 4]; 4]")]
pub struct BehaviorTable {
    probs: [[[[f64; 2]; 2]; 2]; 2],
}

impl BehaviorTable {
    /// Validates positivity, normalization per setting pair and both
    /// no-signaling conditions.
    pub fn new(probs: [[[[f64; 2]; 2]; 2]; 2]) -> Result<Self> {
        let t = Self { probs };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        for (x, y) in SETTINGS {
            let cell = &self.probs[x][y];
            if cell.iter().flatten().any(|&v| !v.is_finite() || v < -BEHAVIOR_TOL) {
                return Err(GameError::Validation(format!("negative probability at x={x}, y={y}")));
            }
            let total: f64 = cell.iter().flatten().sum();
            if (total - 1.0).abs() > BEHAVIOR_TOL {
                return Err(GameError::Validation(format!(
                    "P(.|{x}{y}) sums to {total}, expected 1"
                )));
            }
        }
        for s in 0..2 {
            for o in 0..2 {
                let alice = |y: usize| self.probs[s][y][o][0] + self.probs[s][y][o][1];
                let bob = |x: usize| self.probs[x][s][0][o] + self.probs[x][s][1][o];
                if (alice(0) - alice(1)).abs() > BEHAVIOR_TOL || (bob(0) - bob(1)).abs() > BEHAVIOR_TOL {
                    return Err(GameError::Validation("behavior is signaling".into()));
                }
            }
        }
        Ok(())
    }

    pub fn prob(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.probs[x][y][a][b]
    }

    /// Local deterministic behavior of a two-party strategy; outcome +1 maps
    /// to bit 0.
    pub fn deterministic(strategy: &DeterministicStrategy) -> Result<Self> {
        if strategy.parties() != 2 {
            return Err(GameError::Dimension {
                expected: 2,
                got: strategy.parties(),
            });
        }
        let bit = |o: i8| usize::from(o == -1);
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for (x, y) in SETTINGS {
            let a = bit(strategy.outcome(0, x));
            let b = bit(strategy.outcome(1, y));
            probs[x][y][a][b] = 1.0;
        }
        Ok(Self { probs })
    }

    /// Box with `a xor b = xy xor (alpha x) xor (beta y) xor gamma` and
    /// uniform marginals.
    pub fn pr_variant(alpha: usize, beta: usize, gamma: usize) -> Self {
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for (x, y) in SETTINGS {
            let parity = (x & y) ^ (alpha & x) ^ (beta & y) ^ gamma;
            for a in 0..2 {
                probs[x][y][a][a ^ parity] = 0.5;
            }
        }
        Self { probs }
    }

    /// Behavior with uniform marginals realizing the given correlators:
    /// `P(ab|xy) = (1 + (-1)^(a xor b) E_xy) / 4`.
    pub fn from_correlators_uniform(corr: &CorrelatorTable) -> Self {
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for (x, y) in SETTINGS {
            for a in 0..2 {
                for b in 0..2 {
                    let sign = if a == b { 1.0 } else { -1.0 };
                    probs[x][y][a][b] = (1.0 + sign * corr.get(x, y)) / 4.0;
                }
            }
        }
        Self { probs }
    }

    pub fn correlators(&self) -> CorrelatorTable {
        let mut e = [[0.0; 2]; 2];
        for (x, y) in SETTINGS {
            let c = &self.probs[x][y];
            e[x][y] = c[0][0] + c[1][1] - c[0][1] - c[1][0];
        }
        CorrelatorTable::new_unchecked(e)
    }

    /// Winning probability `P(a xor b = xy | x, y)`.
    pub fn win_probability(&self, x: usize, y: usize) -> f64 {
        let target = x & y;
        (0..2).map(|a| self.probs[x][y][a][a ^ target]).sum()
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut rows = [[0.0; 4]; 4];
        for (x, y) in SETTINGS {
            for a in 0..2 {
                for b in 0..2 {
                    rows[2 * x + y][2 * a + b] = self.probs[x][y][a][b];
                }
            }
        }
        rows
    }
}

impl From<BehaviorTable> for [[f64; 4]; 4] {
    fn from(t: BehaviorTable) -> Self {
        t.to_rows()
    }
}

impl TryFrom<[[f64; 4]; 4]> for BehaviorTable {
    type Error = GameError;

    fn try_from(rows: [[f64; 4]; 4]) -> Result<Self> {
        let mut probs = [[[[0.0; 2]; 2]; 2]; 2];
        for (x, y) in SETTINGS {
            for a in 0..2 {
                for b in 0..2 {
                    probs[x][y][a][b] = rows[2 * x + y][2 * a + b];
                }
            }
        }
        Self::new(probs)
    }
}

/// The canonical box, winning every round of the CHSH game.
pub fn pr_box() -> BehaviorTable {
    BehaviorTable::pr_variant(0, 0, 0)
}

/// The 24 vertices of the two-party binary non-signaling polytope: the 16
/// deterministic behaviors in strategy-index order, then the 8 boxes indexed
/// by `gamma + 2 beta + 4 alpha`.
pub fn ns_vertices() -> Vec<BehaviorTable> {
    let local = (0..16).map(|i| {
        BehaviorTable::deterministic(&DeterministicStrategy::from_index(2, i))
            .expect("two-party strategy")
    });
    let boxes = (0..8).map(|i| BehaviorTable::pr_variant(i >> 2 & 1, i >> 1 & 1, i & 1));
    local.chain(boxes).collect()
}

/// Non-signaling value: the score is linear in the behavior, so its maximum
/// over the polytope sits on a vertex. Ties go to the first vertex.
pub fn ns_value(bias: &JointBias) -> (f64, BehaviorTable) {
    let mut best: Option<(f64, BehaviorTable)> = None;
    for v in ns_vertices() {
        let s = joint_score(bias, &v.correlators());
        if best.as_ref().is_none_or(|(b, _)| s > *b + BEHAVIOR_TOL) {
            best = Some((s, v));
        }
    }
    best.expect("vertex list is non-empty")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub rounds: u64,
    pub seed: u64,
    /// Rounds per setting pair `[x][y]`.
    pub counts: [[u64; 2]; 2],
    /// Conditional correlator per setting pair; `None` when never asked.
    pub conditionals: [[Option<f64>; 2]; 2],
    /// Mean payoff, +1 per won round and -1 per lost round.
    pub empirical_score: f64,
}

fn sample_cell(u: f64, cells: &[f64; 4]) -> usize {
    let mut acc = 0.0;
    for (i, &c) in cells.iter().enumerate() {
        acc += c;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; fall back to the last nonzero cell
    cells.iter().rposition(|&c| c > 0.0).unwrap_or(3)
}

/// Plays `rounds` rounds. Each round draws one uniform double for the
/// settings and one for the outcomes, both by inverse CDF over four cells in
/// row-major order, from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn simulate_rounds(
    behavior: &BehaviorTable,
    bias: &JointBias,
    rounds: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if rounds == 0 {
        return Err(GameError::Validation("rounds must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = bias.row_major();
    let mut counts = [[0u64; 2]; 2];
    let mut same = [[0u64; 2]; 2];
    let mut payoff: i64 = 0;
    for _ in 0..rounds {
        let s = sample_cell(rng.random::<f64>(), &settings);
        let (x, y) = (s >> 1, s & 1);
        let c = &behavior.probs[x][y];
        let o = sample_cell(rng.random::<f64>(), &[c[0][0], c[0][1], c[1][0], c[1][1]]);
        let (a, b) = (o >> 1, o & 1);
        counts[x][y] += 1;
        if a == b {
            same[x][y] += 1;
        }
        payoff += if a ^ b == x & y { 1 } else { -1 };
    }
    let mut conditionals = [[None; 2]; 2];
    for (x, y) in SETTINGS {
        let n = counts[x][y];
        if n > 0 {
            let plus = same[x][y] as f64;
            let minus = (n - same[x][y]) as f64;
            conditionals[x][y] = Some((plus - minus) / (plus + minus));
        }
    }
    Ok(SimulationReport {
        rounds,
        seed,
        counts,
        conditionals,
        empirical_score: payoff as f64 / rounds as f64,
    })
}

/// Expected payoff of a behavior, `sum_xy P(x,y) (2 P(win|xy) - 1)`.
pub fn expected_score(behavior: &BehaviorTable, bias: &JointBias) -> f64 {
    SETTINGS
        .iter()
        .map(|&(x, y)| bias.get(x, y) * (2.0 * behavior.win_probability(x, y) - 1.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pr_box_properties() {
        let pr = pr_box();
        assert!(pr.check().is_ok());
        for (x, y) in SETTINGS {
            assert_eq!(pr.win_probability(x, y), 1.0);
        }
        assert_eq!(pr.correlators().values(), [[1.0, 1.0], [1.0, -1.0]]);
    }

    #[test]
    fn vertex_list() {
        let v = ns_vertices();
        assert_eq!(v.len(), 24);
        for (i, a) in v.iter().enumerate() {
            assert!(a.check().is_ok());
            for b in &v[i + 1..] {
                assert_ne!(a, b);
            }
        }
        for (i, t) in v[..16].iter().enumerate() {
            assert!(t.to_rows().iter().flatten().all(|&p| p == 0.0 || p == 1.0));
            let s = DeterministicStrategy::from_index(2, i as u64);
            assert_eq!(t.correlators(), s.correlators().unwrap());
        }
        assert_eq!(v[16], pr_box());
    }

    #[test]
    fn ns_value_examples() {
        let (v, w) = ns_value(&JointBias::uniform());
        assert_eq!(v, 1.0);
        assert_eq!(w, pr_box());
        let (v, _) = ns_value(&JointBias::product(0.75, 0.75).unwrap());
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        let (v, _) = ns_value(&JointBias::new([[0.7, 0.1], [0.15, 0.05]]).unwrap());
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_signaling_and_unnormalized_tables() {
        let mut rows = pr_box().to_rows();
        rows[0] = [0.5, 0.0, 0.0, 0.5];
        rows[1] = [1.0, 0.0, 0.0, 0.0];
        assert!(BehaviorTable::try_from(rows).is_err());
        let mut rows = pr_box().to_rows();
        rows[2][0] = 0.7;
        assert!(BehaviorTable::try_from(rows).is_err());
    }

    #[test]
    fn behavior_json_layout() {
        let rows: [[f64; 4]; 4] = pr_box().into();
        // (x, y) = (1, 1): outcomes must differ
        assert_eq!(rows[3], [0.0, 0.5, 0.5, 0.0]);
        assert_eq!(rows[0], [0.5, 0.0, 0.0, 0.5]);
        assert_eq!(BehaviorTable::try_from(rows).unwrap(), pr_box());
    }

    #[test]
    fn pr_box_always_wins() {
        let bias = JointBias::product(0.3, 0.8).unwrap();
        let r = simulate_rounds(&pr_box(), &bias, 5000, 11).unwrap();
        assert_eq!(r.empirical_score, 1.0);
        assert_eq!(r.counts.iter().flatten().sum::<u64>(), 5000);
        assert!(simulate_rounds(&pr_box(), &bias, 0, 1).is_err());
    }

    #[test]
    fn unasked_settings_are_undefined() {
        let bias = JointBias::new([[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let r = simulate_rounds(&pr_box(), &bias, 100, 3).unwrap();
        assert_eq!(r.counts, [[100, 0], [0, 0]]);
        assert_eq!(r.conditionals[0][0], Some(1.0));
        assert_eq!(r.conditionals[1][1], None);
    }

    #[test]
    fn simulation_is_reproducible() {
        let bias = JointBias::uniform();
        let b = BehaviorTable::from_correlators_uniform(
            &CorrelatorTable::new([[0.7, 0.7], [0.7, -0.7]]).unwrap(),
        );
        let r1 = simulate_rounds(&b, &bias, 2000, 42).unwrap();
        let r2 = simulate_rounds(&b, &bias, 2000, 42).unwrap();
        assert_eq!(r1, r2);
        let r3 = simulate_rounds(&b, &bias, 2000, 43).unwrap();
        assert_ne!(r1, r3);
        assert_abs_diff_eq!(expected_score(&b, &bias), 0.7, epsilon = 1e-15);
    }
}
