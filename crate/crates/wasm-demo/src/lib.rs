use serde_json::json;
use wasm_bindgen::prelude::*;

use biased_games::analysis::{half_open_grid, region_scan, svetlichny_curves, threshold_p_star};
use biased_games::classical::classical_value_chsh;
use biased_games::quantum::{best_strategy, classify_region, quantum_value_chsh};
use biased_games::{BiasPair, OptimizerConfig};

fn to_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Quantum-minus-classical gap of the biased CHSH game on a `steps x steps`
/// interior grid, `p` outer, as a flat array.
#[wasm_bindgen]
pub fn region_gaps(steps: usize) -> Result<Vec<f64>, JsError> {
    Ok(region_scan(steps).map_err(to_js)?.iter().map(|r| r.gap).collect())
}

/// Values, region and optimal witness at one `(p, q)`, as JSON.
#[wasm_bindgen]
pub fn chsh_point(p: f64, q: f64) -> Result<String, JsError> {
    let bias = BiasPair::new(p, q).map_err(to_js)?;
    let tag = classify_region(p, q).map_err(to_js)?;
    let out = json!({
        "p": p,
        "q": q,
        "classical": classical_value_chsh(&bias.to_joint()).0,
        "quantum": quantum_value_chsh(&bias),
        "region": tag.region,
        "witness": best_strategy(&bias),
    });
    Ok(out.to_string())
}

/// Svetlichny curves for `n` parties on `points` biases in `[0.5, 1)` plus
/// the threshold, as JSON. Small `starts` keep the page responsive.
#[wasm_bindgen]
pub fn svetlichny(n: usize, points: usize, starts: usize) -> Result<String, JsError> {
    let cfg = OptimizerConfig {
        starts: starts.max(1),
        ..Default::default()
    };
    let rows = svetlichny_curves(n, &half_open_grid(points.max(2)), &cfg).map_err(to_js)?;
    let threshold = threshold_p_star(n, 1e-3, &cfg).map_err(to_js)?;
    Ok(json!({ "rows": rows, "threshold": threshold }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_json() {
        let s = chsh_point(0.75, 0.75).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["quantum"], 0.875);
        assert_eq!(v["region"], "NoAdvantage");
    }

    #[test]
    fn gap_grid_shape() {
        let g = region_gaps(9).unwrap();
        assert_eq!(g.len(), 81);
        assert!(g.iter().all(|&x| x >= -1e-9));
    }

    #[test]
    fn svetlichny_json() {
        let v: serde_json::Value = serde_json::from_str(&svetlichny(3, 5, 4).unwrap()).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 5);
        let p = v["threshold"]["p_star"].as_f64().unwrap();
        assert!((p - 0.8406).abs() < 2e-3);
    }
}
