#![allow(dead_code)]

use biased_games::quantum::joint_no_advantage;
use biased_games::JointBias;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the probability simplex (normalized exponentials).
pub fn random_joint(rng: &mut ChaCha8Rng) -> JointBias {
    let e: Vec<f64> = (0..4).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let mut cells = [e[0] / total, e[1] / total, e[2] / total, 0.0];
    cells[3] = 1.0 - cells[0] - cells[1] - cells[2];
    JointBias::from_row_major(cells).expect("normalized by construction")
}

/// Random joint biases with every cell >= `min_cell` and the sorted
/// criterion at least `margin` away from zero.
pub fn random_joint_off_boundary(rng: &mut ChaCha8Rng, min_cell: f64, margin: f64) -> JointBias {
    loop {
        let j = random_joint(rng);
        if j.row_major().iter().any(|&c| c < min_cell) {
            continue;
        }
        if joint_no_advantage(&j).expect("positive cells").lhs.abs() > margin {
            return j;
        }
    }
}

/// Direct recursive evaluation of `S_n[p]` on a deterministic assignment.
/// `M'_k` exchanges every `C` with `C'`, probabilities included, which is
/// `M_k` at bias `1 - p` with the outcome vectors swapped.
pub fn svetlichny_recursive(n: usize, p: f64, c: &[f64], cp: &[f64]) -> f64 {
    fn m(k: usize, p: f64, c: &[f64], cp: &[f64]) -> f64 {
        let r = 1.0 - p;
        if k == 2 {
            return 2.0 * (p * p * c[0] * c[1] + p * r * c[0] * cp[1] + r * p * cp[0] * c[1] - r * r * cp[0] * cp[1]);
        }
        let prev = m(k - 1, p, c, cp);
        let swapped = m(k - 1, r, cp, c);
        p * prev * c[k - 1] + p * swapped * c[k - 1] + r * prev * cp[k - 1] - r * swapped * cp[k - 1]
    }
    if n.is_multiple_of(2) {
        m(n, p, c, cp)
    } else {
        0.5 * (m(n, p, c, cp) + m(n, 1.0 - p, cp, c))
    }
}

pub fn sign_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

pub fn masks_from(c: &[f64], cp: &[f64]) -> (u32, u32) {
    let mask = |v: &[f64]| {
        v.iter()
            .enumerate()
            .filter(|(_, &s)| s < 0.0)
            .fold(0u32, |m, (k, _)| m | 1 << k)
    };
    (mask(c), mask(cp))
}
