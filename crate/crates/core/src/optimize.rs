//! Multi-start Nelder-Mead maximization over periodic angle parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of independent random starts.
    pub starts: usize,
    /// Nelder-Mead iteration budget per start (restarts included).
    pub max_iters: usize,
    /// Convergence tolerance on the spread of objective values in the simplex.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            max_iters: 2000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(GameError::Validation("starts must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(GameError::Validation("max_iters must be >= 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(GameError::Validation(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` with the standard Nelder-Mead simplex (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2), starting from an axis-aligned
/// simplex of edge `step` around `x0`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    tol: f64,
) -> LocalResult {
    let dim = x0.len();
    assert!(dim > 0, "nelder_mead needs at least one parameter");
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut order: Vec<usize> = (0..=dim).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];

    while iterations < max_iters {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[dim], order[dim - 1]);
        if values[worst] - values[best] <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..dim] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v / dim as f64;
            }
        }
        let toward = |coef: f64, out: &mut [f64], simplex: &[Vec<f64>]| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&simplex[worst]) {
                *o = c + coef * (w - c);
            }
        };

        toward(-1.0, &mut trial, &simplex);
        let fr = f(&trial);
        if fr < values[best] {
            toward(-2.0, &mut trial2, &simplex);
            let fe = f(&trial2);
            if fe < fr {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }
        // contraction, outside if the reflection beat the worst point
        let (coef, reference) = if fr < values[worst] { (-0.5, fr) } else { (0.5, values[worst]) };
        toward(coef, &mut trial2, &simplex);
        let fc = f(&trial2);
        if fc < reference {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for (v, a) in simplex[i].iter_mut().zip(&anchor) {
                *v = a + 0.5 * (*v - a);
            }
            values[i] = f(&simplex[i]);
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is non-empty");
    LocalResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// One start: an initial descent followed by fresh-simplex restarts at the
/// incumbent until a restart stops improving, all within `max_iters`.
fn polished_descent<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], cfg: &OptimizerConfig) -> LocalResult {
    let mut budget = cfg.max_iters;
    let mut current = nelder_mead(f, x0, 0.6, budget, cfg.tol);
    budget -= current.iterations;
    let mut step = 0.1;
    while current.converged && budget > 0 {
        let next = nelder_mead(f, &current.x, step, budget, cfg.tol);
        budget -= next.iterations;
        let improved = current.value - next.value > cfg.tol;
        let converged = next.converged;
        if next.value < current.value {
            current.x = next.x;
            current.value = next.value;
        }
        current.iterations = cfg.max_iters - budget;
        current.converged = converged;
        if !improved {
            break;
        }
        step *= 0.5;
    }
    current
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub starts_used: usize,
    pub best_start: usize,
}

/// Initial point of start `index`: uniform in `[0, 2 pi)^dim` drawn from its
/// own ChaCha stream, so the first `k` starts never depend on `cfg.starts`.
pub fn start_point(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..dim)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect()
}

/// Maximizes `f` over `dim` angles. The result is the best start, ties going
/// to the lowest start index, independent of scheduling.
pub fn maximize_multistart<F>(f: F, dim: usize, cfg: &OptimizerConfig) -> Result<MultiStartResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let neg = |x: &[f64]| -f(x);
    let run = |i: usize| polished_descent(&neg, &start_point(cfg.seed, i, dim), cfg);

    #[cfg(feature = "parallel")]
    let results: Vec<LocalResult> = {
        use rayon::prelude::*;
        (0..cfg.starts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<LocalResult> = (0..cfg.starts).map(run).collect();

    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        if r.value < results[best].value {
            best = i;
        }
    }
    let r = &results[best];
    Ok(MultiStartResult {
        x: r.x.clone(),
        value: -r.value,
        converged: r.converged,
        starts_used: cfg.starts,
        best_start: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimizes_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let r = nelder_mead(&f, &[0.0, 0.0], 0.5, 5000, 1e-14);
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(r.x[1], -2.0, epsilon = 1e-5);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(&f, &[-1.2, 1.0], 0.5, 10_000, 1e-16);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = nelder_mead(&f, &[3.0; 6], 1.0, 5, 1e-14);
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn multistart_finds_global_max_of_periodic_function() {
        // local maxima at every multiple of 2pi/3, global one at 0
        let f = |x: &[f64]| (3.0 * x[0]).cos() + 0.5 * x[0].cos();
        let r = maximize_multistart(f, 1, &OptimizerConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.5, epsilon = 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn start_streams_are_nested() {
        let a = start_point(7, 3, 4);
        assert_eq!(a, start_point(7, 3, 4));
        assert_ne!(a, start_point(7, 4, 4));
        assert_ne!(a, start_point(8, 3, 4));
        assert!(a.iter().all(|v| (0.0..std::f64::consts::TAU).contains(v)));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = OptimizerConfig { starts: 0, ..Default::default() };
        assert!(maximize_multistart(|_| 0.0, 1, &cfg).is_err());
        let cfg = OptimizerConfig { tol: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
