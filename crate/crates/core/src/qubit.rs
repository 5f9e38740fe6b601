//! Dense state-vector evaluation of multi-qubit correlators.
//!
//! Basis index bit `n - 1 - k` holds the qubit of party `k` (0-based), so
//! party 1 is the most significant qubit: `|q1 q2 ... qn>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const IDENTITY: Matrix2 = [[ONE, ZERO], [ZERO, ONE]];
pub const PAULI_X: Matrix2 = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Y: Matrix2 = [[ZERO, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), ZERO]];
pub const PAULI_Z: Matrix2 = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];

/// Plane spanned by a planar observable's Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    /// `cos(theta) X + sin(theta) Z`
    XZ,
    /// `cos(theta) X + sin(theta) Y`
    XY,
}

/// A +-1 valued qubit observable with unit Bloch vector in a fixed plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarObservable {
    pub angle: f64,
    pub plane: Plane,
}

impl PlanarObservable {
    pub fn xz(angle: f64) -> Self {
        Self { angle, plane: Plane::XZ }
    }

    pub fn xy(angle: f64) -> Self {
        Self { angle, plane: Plane::XY }
    }

    /// The observable with both outcomes exchanged.
    pub fn negated(self) -> Self {
        Self {
            angle: self.angle + std::f64::consts::PI,
            ..self
        }
    }

    pub fn matrix(&self) -> Matrix2 {
        let (s, c) = self.angle.sin_cos();
        let other = match self.plane {
            Plane::XZ => PAULI_Z,
            Plane::XY => PAULI_Y,
        };
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = PAULI_X[i][j] * c + other[i][j] * s;
            }
        }
        m
    }
}

pub fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// A normalized pure state on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
    qubits: usize,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(GameError::Validation(format!(
                "state length must be a power of two >= 2, got {len}"
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(GameError::Validation(format!(
                "state must have unit norm, got squared norm {norm}"
            )));
        }
        Ok(Self {
            qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// `(|00> + |11>) / sqrt(2)`.
    pub fn bell() -> Self {
        Self::ghz(2)
    }

    /// `(|0...0> + |1...1>) / sqrt(2)` on `n >= 1` qubits.
    pub fn ghz(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = a;
        amps[(1 << n) - 1] = a;
        Self { amps, qubits: n }
    }

    /// `cos(g)|00> + sin(g)|11>`.
    pub fn schmidt(gamma: f64) -> Self {
        let (s, c) = gamma.sin_cos();
        Self {
            amps: vec![Complex64::new(c, 0.0), ZERO, ZERO, Complex64::new(s, 0.0)],
            qubits: 2,
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitudes as `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.amps.iter().map(|a| [a.re, a.im]).collect()
    }
}

fn apply_local(amps: &mut [Complex64], qubits: usize, party: usize, m: &Matrix2) {
    let stride = 1usize << (qubits - 1 - party);
    for base in 0..amps.len() {
        if base & stride != 0 {
            continue;
        }
        let (a0, a1) = (amps[base], amps[base | stride]);
        amps[base] = m[0][0] * a0 + m[0][1] * a1;
        amps[base | stride] = m[1][0] * a0 + m[1][1] * a1;
    }
}

/// `<psi| M_1 (x) ... (x) M_n |psi>` for arbitrary local 2x2 matrices.
pub fn expectation_matrices(state: &PureState, ops: &[Matrix2]) -> Result<Complex64> {
    if ops.len() != state.qubits {
        return Err(GameError::Dimension {
            expected: state.qubits,
            got: ops.len(),
        });
    }
    let mut phi = state.amps.clone();
    for (party, m) in ops.iter().enumerate() {
        apply_local(&mut phi, state.qubits, party, m);
    }
    Ok(state.amps.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum())
}

/// `<psi| O_1 (x) ... (x) O_n |psi>`, one observable per party.
pub fn expectation(state: &PureState, observables: &[PlanarObservable]) -> Result<f64> {
    let ops: Vec<Matrix2> = observables.iter().map(PlanarObservable::matrix).collect();
    Ok(expectation_matrices(state, &ops)?.re)
}
