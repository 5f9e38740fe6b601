//! Parameter scans: the advantage map of the biased CHSH game, classical and
//! quantum curves of `S_n[p]`, and the bias threshold above which quantum
//! strategies stop helping.

use std::io::{self, Write};

use serde::Serialize;

use crate::classical::{classical_value_chsh, classical_value_expansion};
use crate::error::{GameError, Result};
use crate::game::{expand_svetlichny, BiasPair};
use crate::nonsignaling::ns_value;
use crate::optimize::OptimizerConfig;
use crate::quantum::{classify_region, quantum_value_chsh, Region};
use crate::svetlichny::{quantum_value_expansion, MAX_QUANTUM_PARTIES};

/// Advantage tolerance for optimizer-backed values.
pub const GAP_TOL: f64 = 1e-5;
/// Advantage tolerance for closed-form values.
pub const CLOSED_FORM_GAP_TOL: f64 = 1e-9;
/// Gap level separating "advantage" from "none" when bisecting for `p*`.
/// The gap closes quadratically at `p*`, so this sits near the optimizer's
/// noise floor rather than at [`GAP_TOL`].
pub const THRESHOLD_GAP_TOL: f64 = 1e-8;
/// Points of the coarse scan preceding the bisection.
pub const COARSE_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRow {
    pub p: f64,
    pub q: f64,
    pub classical: f64,
    pub quantum: f64,
    pub ns: f64,
    pub gap: f64,
    pub advantage: bool,
}

/// Evaluates the biased CHSH game on the interior grid
/// `{1, ..., steps} / (steps + 1)` in both coordinates, `p` outer.
pub fn region_scan(grid_steps: usize) -> Result<Vec<RegionRow>> {
    if grid_steps < 2 {
        return Err(GameError::Validation(format!("grid needs >= 2 steps, got {grid_steps}")));
    }
    let axis: Vec<f64> = (1..=grid_steps).map(|i| i as f64 / (grid_steps + 1) as f64).collect();
    let mut rows = Vec::with_capacity(grid_steps * grid_steps);
    for &p in &axis {
        for &q in &axis {
            let bias = BiasPair::new(p, q)?;
            let joint = bias.to_joint();
            let classical = classical_value_chsh(&joint).0;
            let quantum = quantum_value_chsh(&bias);
            let ns = ns_value(&joint).0;
            rows.push(RegionRow {
                p,
                q,
                classical,
                quantum,
                ns,
                gap: quantum - classical,
                advantage: classify_region(p, q)?.region == Region::Advantage,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub n: usize,
    pub p: f64,
    pub classical: f64,
    pub quantum: f64,
    pub gap: f64,
    pub advantage: bool,
    pub converged: bool,
}

fn check_parties(n: usize) -> Result<()> {
    if !(2..=MAX_QUANTUM_PARTIES).contains(&n) {
        return Err(GameError::Validation(format!(
            "party count must lie in 2..={MAX_QUANTUM_PARTIES}, got {n}"
        )));
    }
    Ok(())
}

fn curve_point(n: usize, p: f64, cfg: &OptimizerConfig) -> Result<CurveRow> {
    let expansion = expand_svetlichny(n, p)?;
    let classical = classical_value_expansion(&expansion)?.0;
    let quantum = quantum_value_expansion(&expansion, cfg)?;
    let gap = quantum.value - classical;
    Ok(CurveRow {
        n,
        p,
        classical,
        quantum: quantum.value,
        gap,
        advantage: gap > GAP_TOL,
        converged: quantum.converged,
    })
}

pub fn svetlichny_curves(n: usize, p_grid: &[f64], cfg: &OptimizerConfig) -> Result<Vec<CurveRow>> {
    check_parties(n)?;
    cfg.validate()?;
    p_grid.iter().map(|&p| curve_point(n, p, cfg)).collect()
}

/// `count` evenly spaced biases on `[0.5, 1)`.
pub fn half_open_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| 0.5 + 0.5 * i as f64 / count as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub n: usize,
    pub p_star: f64,
    pub tol_p: f64,
    /// Final bisection bracket: advantage at `lo`, none at `hi`.
    pub lo: f64,
    pub hi: f64,
    pub converged: bool,
}

/// Threshold with the default gap level [`THRESHOLD_GAP_TOL`].
pub fn threshold_p_star(n: usize, tol_p: f64, cfg: &OptimizerConfig) -> Result<ThresholdResult> {
    threshold_p_star_with(n, tol_p, THRESHOLD_GAP_TOL, cfg)
}

/// Locates the largest `p` in `[0.5, 1)` where the quantum-classical gap
/// falls to `gap_tol`: a coarse scan brackets the last crossing, bisection
/// narrows the bracket below `tol_p`, and the midpoint is returned.
pub fn threshold_p_star_with(
    n: usize,
    tol_p: f64,
    gap_tol: f64,
    cfg: &OptimizerConfig,
) -> Result<ThresholdResult> {
    check_parties(n)?;
    cfg.validate()?;
    if !(tol_p.is_finite() && tol_p >= 1e-6) {
        return Err(GameError::Validation(format!("tol_p must be >= 1e-6, got {tol_p}")));
    }
    let mut converged = true;
    let mut advantage = |p: f64| -> Result<bool> {
        let row = curve_point(n, p, cfg)?;
        converged &= row.converged;
        Ok(row.gap > gap_tol)
    };

    let grid = half_open_grid(COARSE_POINTS);
    let flags = grid.iter().map(|&p| advantage(p)).collect::<Result<Vec<bool>>>()?;
    let (mut lo, mut hi) = match flags.iter().rposition(|&a| a) {
        None => return Err(GameError::NoSignChange { n }),
        Some(i) if i + 1 < grid.len() => (grid[i], grid[i + 1]),
        Some(i) => {
            let edge = 1.0 - 1e-6;
            if advantage(edge)? {
                return Err(GameError::NoSignChange { n });
            }
            (grid[i], edge)
        }
    };
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        if advantage(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        n,
        p_star: 0.5 * (lo + hi),
        tol_p,
        lo,
        hi,
        converged,
    })
}

/// `p*(n)` for `n = 3..=n_max`.
pub fn thresholds_vs_n(n_max: usize, tol_p: f64, cfg: &OptimizerConfig) -> Result<Vec<ThresholdResult>> {
    if !(3..=MAX_QUANTUM_PARTIES).contains(&n_max) {
        return Err(GameError::Validation(format!(
            "n_max must lie in 3..={MAX_QUANTUM_PARTIES}, got {n_max}"
        )));
    }
    (3..=n_max).map(|n| threshold_p_star(n, tol_p, cfg)).collect()
}

pub fn write_region_csv<W: Write>(rows: &[RegionRow], mut out: W) -> io::Result<()> {
    writeln!(out, "p,q,classical,quantum,ns,gap,advantage")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.p, r.q, r.classical, r.quantum, r.ns, r.gap, r.advantage
        )?;
    }
    Ok(())
}

pub fn write_curves_csv<W: Write>(rows: &[CurveRow], mut out: W) -> io::Result<()> {
    writeln!(out, "n,p,classical,quantum,gap,converged")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.n, r.p, r.classical, r.quantum, r.gap, r.converged)?;
    }
    Ok(())
}

pub fn write_thresholds_csv<W: Write>(rows: &[ThresholdResult], mut out: W) -> io::Result<()> {
    writeln!(out, "n,p_star,tol_p")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.n, r.p_star, r.tol_p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    #[test]
    fn region_scan_points() {
        let rows = region_scan(7).unwrap();
        assert_eq!(rows.len(), 49);
        let at = |p: f64, q: f64| {
            rows.iter()
                .find(|r| (r.p - p).abs() < 1e-12 && (r.q - q).abs() < 1e-12)
                .unwrap()
        };
        let centre = at(0.5, 0.5);
        assert!(centre.advantage);
        assert_abs_diff_eq!(centre.gap, FRAC_1_SQRT_2 - 0.5, epsilon = 1e-12);
        let r = at(0.75, 0.75);
        assert!(!r.advantage);
        assert_abs_diff_eq!(r.gap, 0.0, epsilon = 1e-12);
        for r in &rows {
            assert!(r.gap >= -1e-9);
            assert_abs_diff_eq!(r.ns, 1.0, epsilon = 1e-12);
            if r.p >= 0.5 && r.q >= 0.5 {
                assert_eq!(r.advantage, r.p * r.q < 0.5 - 1e-9);
            }
        }
        assert!(region_scan(1).is_err());
    }

    #[test]
    fn curves_at_half_and_above_threshold() {
        let cfg = OptimizerConfig::default();
        let rows = svetlichny_curves(3, &[0.5, 0.8, 0.9], &cfg).unwrap();
        assert_abs_diff_eq!(rows[0].classical, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[0].quantum, SQRT_2, epsilon = 1e-6);
        assert!(rows[1].gap > 1e-3);
        assert!(rows[2].gap.abs() <= 1e-5);
        assert!(!rows[2].advantage);
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_region_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p,q,classical,quantum,ns,gap,advantage\n");
        let mut buf = Vec::new();
        write_thresholds_csv(
            &[ThresholdResult { n: 3, p_star: 0.84, tol_p: 1e-4, lo: 0.0, hi: 0.0, converged: true }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,p_star,tol_p\n3,0.84,0.0001\n");
    }

    #[test]
    fn threshold_rejects_bad_inputs() {
        let cfg = OptimizerConfig::default();
        assert!(threshold_p_star(3, 1e-7, &cfg).is_err());
        assert!(threshold_p_star(13, 1e-3, &cfg).is_err());
        assert!(thresholds_vs_n(2, 1e-3, &cfg).is_err());
    }
}
