//! Quantum value of `S_n[p]` over GHZ-state strategies with observables in
//! the X-Y plane: party `k` measures `C_k` at angle `phi0 / n` and `C'_k` at
//! angle `phi_k + phi0 / n`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{expand_svetlichny, CorrelatorExpansion};
use crate::optimize::{maximize_multistart, OptimizerConfig};
use crate::qubit::{expectation, PlanarObservable, PureState};

/// Cap shared by the quantum optimizer and the dense state-vector check.
pub const MAX_QUANTUM_PARTIES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub phi0: f64,
    pub phi: Vec<f64>,
}

impl AngleSet {
    pub fn new(phi0: f64, phi: Vec<f64>) -> Result<Self> {
        if !phi0.is_finite() || phi.iter().any(|a| !a.is_finite()) {
            return Err(GameError::Validation("angles must be finite".into()));
        }
        Ok(Self { phi0, phi })
    }

    /// From an optimizer vector `[phi0, phi_1, ..., phi_n]`.
    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(x[0], x[1..].to_vec())
    }

    pub fn parties(&self) -> usize {
        self.phi.len()
    }

    /// All angles reduced to `[0, 2 pi)`.
    pub fn canonical(&self) -> Self {
        let wrap = |a: f64| {
            let r = a.rem_euclid(TAU);
            if r >= TAU {
                0.0
            } else {
                r
            }
        };
        Self {
            phi0: wrap(self.phi0),
            phi: self.phi.iter().map(|&a| wrap(a)).collect(),
        }
    }

    /// Observable of party `k` (0-based) for the unprimed or primed setting.
    pub fn observable(&self, party: usize, primed: bool) -> PlanarObservable {
        let base = self.phi0 / self.parties() as f64;
        PlanarObservable::xy(if primed { base + self.phi[party] } else { base })
    }
}

fn check_dims(expansion: &CorrelatorExpansion, angles: &AngleSet) -> Result<()> {
    if expansion.n() != angles.parties() {
        return Err(GameError::Dimension {
            expected: expansion.n(),
            got: angles.parties(),
        });
    }
    Ok(())
}

/// `sum_S w_S cos(phi0 + sum_{k in S} phi_k)`, evaluated as the real part of
/// `e^{i phi0} sum_S w_S prod_{k in S} e^{i phi_k}`.
pub fn ghz_objective(expansion: &CorrelatorExpansion, angles: &AngleSet) -> Result<f64> {
    check_dims(expansion, angles)?;
    Ok(objective_unchecked(expansion, angles.phi0, &angles.phi))
}

fn objective_unchecked(expansion: &CorrelatorExpansion, phi0: f64, phi: &[f64]) -> f64 {
    let n = phi.len();
    let phases: Vec<Complex64> = phi.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
    let mut products = vec![Complex64::new(1.0, 0.0); 1 << n];
    for mask in 1..products.len() {
        let low = mask.trailing_zeros() as usize;
        products[mask] = products[mask & (mask - 1)] * phases[low];
    }
    let total: Complex64 = expansion
        .terms()
        .map(|(mask, w)| products[mask as usize] * w)
        .sum();
    (Complex64::from_polar(1.0, phi0) * total).re
}

/// The same objective computed by dense expectation values on the GHZ state,
/// one full tensor-product correlator per term.
pub fn ghz_objective_statevector(expansion: &CorrelatorExpansion, angles: &AngleSet) -> Result<f64> {
    check_dims(expansion, angles)?;
    let n = expansion.n();
    if n > MAX_QUANTUM_PARTIES {
        return Err(GameError::Budget {
            what: format!("dense {n}-qubit state vector"),
            limit: MAX_QUANTUM_PARTIES,
        });
    }
    let ghz = PureState::ghz(n);
    let mut total = 0.0;
    for (mask, w) in expansion.terms() {
        let ops: Vec<PlanarObservable> = (0..n)
            .map(|k| angles.observable(k, mask >> k & 1 == 1))
            .collect();
        total += w * expectation(&ghz, &ops)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub n: usize,
    pub p: f64,
    pub value: f64,
    pub angles: AngleSet,
    pub starts_used: usize,
    pub converged: bool,
}

#[derive(Serialize)]
struct OptResultJson<'a> {
    n: usize,
    p: f64,
    value: f64,
    phi0: f64,
    phi: &'a [f64],
    converged: bool,
    starts_used: usize,
}

impl Serialize for OptResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OptResultJson {
            n: self.n,
            p: self.p,
            value: self.value,
            phi0: self.angles.phi0,
            phi: &self.angles.phi,
            converged: self.converged,
            starts_used: self.starts_used,
        }
        .serialize(s)
    }
}

/// Best GHZ-family value of an arbitrary expansion (a lower bound on its
/// quantum value).
pub fn quantum_value_expansion(expansion: &CorrelatorExpansion, cfg: &OptimizerConfig) -> Result<OptResult> {
    let n = expansion.n();
    if n > MAX_QUANTUM_PARTIES {
        return Err(GameError::Budget {
            what: format!("quantum optimization over {} angles", n + 1),
            limit: MAX_QUANTUM_PARTIES,
        });
    }
    let best = maximize_multistart(|x| objective_unchecked(expansion, x[0], &x[1..]), n + 1, cfg)?;
    let angles = AngleSet::from_slice(&best.x)?.canonical();
    let value = objective_unchecked(expansion, angles.phi0, &angles.phi);
    Ok(OptResult {
        n,
        p: expansion.p(),
        value,
        angles,
        starts_used: best.starts_used,
        converged: best.converged,
    })
}

pub fn quantum_value_svetlichny(n: usize, p: f64, cfg: &OptimizerConfig) -> Result<OptResult> {
    if !(2..=MAX_QUANTUM_PARTIES).contains(&n) {
        return Err(GameError::Validation(format!(
            "party count must lie in 2..={MAX_QUANTUM_PARTIES}, got {n}"
        )));
    }
    quantum_value_expansion(&expand_svetlichny(n, p)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn zero_angles_sum_the_weights() {
        for n in 2..=5 {
            let e = expand_svetlichny(n, 0.63).unwrap();
            let a = AngleSet::new(0.0, vec![0.0; n]).unwrap();
            let total: f64 = e.terms().map(|(_, w)| w).sum();
            assert_abs_diff_eq!(ghz_objective(&e, &a).unwrap(), total, epsilon = 1e-12);
            assert_abs_diff_eq!(ghz_objective_statevector(&e, &a).unwrap(), total, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_party_hand_point() {
        let e = expand_svetlichny(2, 0.5).unwrap();
        let a = AngleSet::new(-FRAC_PI_4, vec![FRAC_PI_2, FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(ghz_objective(&e, &a).unwrap(), SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(ghz_objective_statevector(&e, &a).unwrap(), SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn canonical_angles() {
        let a = AngleSet::new(-0.5, vec![7.0, TAU]).unwrap().canonical();
        assert_abs_diff_eq!(a.phi0, TAU - 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.phi[0], 7.0 - TAU, epsilon = 1e-15);
        assert_eq!(a.phi[1], 0.0);
        assert!(AngleSet::new(f64::NAN, vec![]).is_err());
    }

    #[test]
    fn dimension_checks() {
        let e = expand_svetlichny(3, 0.5).unwrap();
        let a = AngleSet::new(0.0, vec![0.0; 2]).unwrap();
        assert!(matches!(ghz_objective(&e, &a), Err(GameError::Dimension { .. })));
        assert!(quantum_value_svetlichny(13, 0.5, &OptimizerConfig::default()).is_err());
        assert!(quantum_value_svetlichny(1, 0.5, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn optimized_values_at_half() {
        let cfg = OptimizerConfig::default();
        let r = quantum_value_svetlichny(2, 0.5, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, SQRT_2, epsilon = 1e-8);
        let r = quantum_value_svetlichny(3, 0.5, &cfg).unwrap();
        assert_abs_diff_eq!(r.value, SQRT_2, epsilon = 1e-6);
        assert!(r.converged);
        let e = expand_svetlichny(3, 0.5).unwrap();
        assert_abs_diff_eq!(
            ghz_objective_statevector(&e, &r.angles).unwrap(),
            r.value,
            epsilon = 1e-10
        );
    }
}
