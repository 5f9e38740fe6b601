//! Quantum values of the biased two-party game: the closed-form bound, the
//! region split, the explicit optimal strategy, and a numerical oracle for
//! arbitrary joint biases.

use serde::{Deserialize, Serialize};

use crate::classical::{classical_value_chsh, DeterministicStrategy};
use crate::error::{check_open_unit, GameError, Result};
use crate::game::{joint_score, BiasPair, CorrelatorTable, JointBias};
use crate::optimize::{maximize_multistart, OptimizerConfig};
use crate::qubit::{expectation, expectation_matrices, mat_mul, Matrix2, PlanarObservable, PureState, IDENTITY};

/// Boundary tolerance for the `p q = 1/2` seam.
pub const TOL_REGION: f64 = 1e-9;

/// `<psi| I (x) (B1 B2 + B2 B1) |psi>` on a two-qubit state.
pub fn compute_alpha(b1: &PlanarObservable, b2: &PlanarObservable, state: &PureState) -> Result<f64> {
    if state.qubits() != 2 {
        return Err(GameError::Dimension {
            expected: 2,
            got: state.qubits(),
        });
    }
    let (m1, m2) = (b1.matrix(), b2.matrix());
    let (ab, ba) = (mat_mul(&m1, &m2), mat_mul(&m2, &m1));
    let mut anti: Matrix2 = ab;
    for i in 0..2 {
        for j in 0..2 {
            anti[i][j] += ba[i][j];
        }
    }
    Ok(expectation_matrices(state, &[IDENTITY, anti])?.re)
}

/// Maps `(p, q)` into the quadrant `p, q >= 1/2` by relabeling settings.
pub fn fold(p: f64, q: f64) -> (f64, f64) {
    (p.max(1.0 - p), q.max(1.0 - q))
}

fn check_quadrant(p: f64, q: f64) -> Result<()> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(v.is_finite() && (0.5..1.0).contains(&v)) {
            return Err(GameError::Domain(format!(
                "needs 1/2 <= {name} < 1 (fold other quadrants first), got {v}"
            )));
        }
    }
    Ok(())
}

fn sum_sq(v: f64) -> f64 {
    v * v + (1.0 - v) * (1.0 - v)
}

/// Unclipped stationary point of the bound in `alpha`.
fn alpha_stationary(p: f64, q: f64) -> f64 {
    sum_sq(q) * (p * p - (1.0 - p) * (1.0 - p)) / (q * (1.0 - q) * sum_sq(p))
}

/// Position of the maximum of the quantum bound, `min(2, ...)`.
pub fn alpha_max(p: f64, q: f64) -> Result<f64> {
    check_quadrant(p, q)?;
    Ok(alpha_stationary(p, q).min(2.0))
}

/// The upper bound `p sqrt(Q + q(1-q) a) + (1-p) sqrt(Q - q(1-q) a)` with
/// `Q = q^2 + (1-q)^2`, as a function of `a = alpha`.
pub fn quantum_bound_at(p: f64, q: f64, alpha: f64) -> f64 {
    let base = sum_sq(q);
    let shift = q * (1.0 - q) * alpha;
    p * (base + shift).max(0.0).sqrt() + (1.0 - p) * (base - shift).max(0.0).sqrt()
}

/// Tsirelson-type bound of the biased game on the quadrant `p, q >= 1/2`.
pub fn tsirelson_biased(p: f64, q: f64) -> Result<f64> {
    Ok(quantum_bound_at(p, q, alpha_max(p, q)?))
}

/// Quantum value for any interior `(p, q)`, via [`fold`].
pub fn quantum_value_chsh(bias: &BiasPair) -> f64 {
    let (r, s) = fold(bias.p(), bias.q());
    tsirelson_biased(r, s).expect("folded coordinates lie in the quadrant")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    NoAdvantage,
    Advantage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionTag {
    pub region: Region,
    /// Folded coordinates `(max(p, 1-p), max(q, 1-q))`.
    pub r: f64,
    pub s: f64,
}

pub fn classify_region(p: f64, q: f64) -> Result<RegionTag> {
    check_open_unit("p", p)?;
    check_open_unit("q", q)?;
    let (r, s) = fold(p, q);
    let region = if r * s < 0.5 - TOL_REGION {
        Region::Advantage
    } else {
        Region::NoAdvantage
    };
    Ok(RegionTag { region, r, s })
}

/// Two-qubit strategy: Alice's `A1, A2`, Bob's `B1, B2` and a shared state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    pub alice: [PlanarObservable; 2],
    pub bob: [PlanarObservable; 2],
    pub state: PureState,
}

impl QuantumStrategy {
    pub fn correlators(&self) -> CorrelatorTable {
        let mut e = [[0.0; 2]; 2];
        for (x, a) in self.alice.iter().enumerate() {
            for (y, b) in self.bob.iter().enumerate() {
                e[x][y] = expectation(&self.state, &[*a, *b])
                    .expect("two-party strategy on a two-qubit state")
                    .clamp(-1.0, 1.0);
            }
        }
        CorrelatorTable::new_unchecked(e)
    }

    /// Strategy for `(1 - p, q)` from one for `(p, q)`: swap Alice's
    /// settings and negate `B2`.
    pub fn mirror_alice(self) -> Self {
        Self {
            alice: [self.alice[1], self.alice[0]],
            bob: [self.bob[0], self.bob[1].negated()],
            state: self.state,
        }
    }

    /// Strategy for `(p, 1 - q)` from one for `(p, q)`: swap Bob's settings
    /// and negate `A2`.
    pub fn mirror_bob(self) -> Self {
        Self {
            alice: [self.alice[0], self.alice[1].negated()],
            bob: [self.bob[1], self.bob[0]],
            state: self.state,
        }
    }
}

#[derive(Serialize)]
struct StrategyJson {
    plane: crate::qubit::Plane,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    state: Vec<[f64; 2]>,
}

impl Serialize for QuantumStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StrategyJson {
            plane: self.alice[0].plane,
            a1: self.alice[0].angle,
            a2: self.alice[1].angle,
            b1: self.bob[0].angle,
            b2: self.bob[1].angle,
            state: self.state.to_pairs(),
        }
        .serialize(s)
    }
}

/// The explicit Region 2 construction on the maximally entangled state:
/// `B1 = X`, `B2 = cos(b) X + sin(b) Z`, and `A1`, `A2` along
/// `q B1 +- (1-q) B2`, with `cos(b) = alpha / 2`.
pub fn optimal_strategy(p: f64, q: f64) -> Result<QuantumStrategy> {
    check_quadrant(p, q)?;
    if p * q >= 0.5 - TOL_REGION {
        return Err(GameError::Domain(format!(
            "p q = {} >= 1/2: no quantum advantage, the classical witness is optimal",
            p * q
        )));
    }
    let cos_beta = 0.5 * alpha_stationary(p, q);
    let beta = cos_beta.clamp(-1.0, 1.0).acos();
    let (sb, cb) = beta.sin_cos();
    let a1 = ((1.0 - q) * sb).atan2(q + (1.0 - q) * cb);
    let a2 = (-(1.0 - q) * sb).atan2(q - (1.0 - q) * cb);
    Ok(QuantumStrategy {
        alice: [PlanarObservable::xz(a1), PlanarObservable::xz(a2)],
        bob: [PlanarObservable::xz(0.0), PlanarObservable::xz(beta)],
        state: PureState::bell(),
    })
}

/// Best known strategy for an independent bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "strategy", rename_all = "lowercase")]
pub enum ChshWitness {
    Quantum(QuantumStrategy),
    Classical(DeterministicStrategy),
}

/// Optimal witness for any interior `(p, q)`: the explicit quantum strategy
/// when there is an advantage, mapped back from the folded quadrant, and the
/// classical optimum otherwise.
pub fn best_strategy(bias: &BiasPair) -> ChshWitness {
    let (p, q) = (bias.p(), bias.q());
    let (r, s) = fold(p, q);
    match optimal_strategy(r, s) {
        Ok(mut strategy) => {
            if p < 0.5 {
                strategy = strategy.mirror_alice();
            }
            if q < 0.5 {
                strategy = strategy.mirror_bob();
            }
            ChshWitness::Quantum(strategy)
        }
        Err(_) => ChshWitness::Classical(classical_value_chsh(&bias.to_joint()).1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointCondition {
    /// True when quantum strategies cannot beat classical ones.
    pub no_advantage: bool,
    /// `1/P_(1) + 1/P_(2) + 1/P_(3) - 1/P_(4)` over the cells sorted descending.
    pub lhs: f64,
}

/// The no-advantage criterion for a joint bias. The game value is invariant
/// under moving the minus sign to any cell, so the cells are sorted and the
/// smallest takes the negative reciprocal.
pub fn joint_no_advantage(bias: &JointBias) -> Result<JointCondition> {
    let mut cells = bias.row_major();
    if let Some(z) = cells.iter().position(|&c| c <= 0.0) {
        return Err(GameError::Validation(format!(
            "P{}{} is zero; the criterion needs every cell positive",
            z / 2,
            z % 2
        )));
    }
    cells.sort_by(|a, b| b.total_cmp(a));
    let lhs = 1.0 / cells[0] + 1.0 / cells[1] + 1.0 / cells[2] - 1.0 / cells[3];
    Ok(JointCondition {
        no_advantage: lhs <= TOL_REGION,
        lhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub converged: bool,
    pub starts_used: usize,
    /// `[a1, a2, b1, b2, gamma]`.
    pub params: Vec<f64>,
}

impl OracleResult {
    pub fn strategy(&self) -> QuantumStrategy {
        oracle_strategy(&self.params)
    }
}

fn oracle_strategy(x: &[f64]) -> QuantumStrategy {
    QuantumStrategy {
        alice: [PlanarObservable::xz(x[0]), PlanarObservable::xz(x[1])],
        bob: [PlanarObservable::xz(x[2]), PlanarObservable::xz(x[3])],
        state: PureState::schmidt(x[4]),
    }
}

/// Numerical lower bound on the quantum value: planar observables on
/// `cos(g)|00> + sin(g)|11>`, maximized by multi-start Nelder-Mead.
pub fn quantum_value_joint_oracle(bias: &JointBias, cfg: &OptimizerConfig) -> Result<OracleResult> {
    let objective = |x: &[f64]| joint_score(bias, &oracle_strategy(x).correlators());
    let best = maximize_multistart(objective, 5, cfg)?;
    Ok(OracleResult {
        value: best.value,
        converged: best.converged,
        starts_used: best.starts_used,
        params: best.x,
    })
}
