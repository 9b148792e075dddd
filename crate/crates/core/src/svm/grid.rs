//! The regularization-parameter grid: an arithmetic-geometric progression
//! that is logarithmic below 0.1 and linear above.

use crate::error::{Error, Result};

const GRID_LOWER: f64 = 1e-10;
const GRID_KNEE: f64 = 0.1;
const GRID_UPPER: f64 = 5.0;
const GRID_STEP: f64 = 0.05;

/// Union of three geometric series below the knee (ratios 1/2, 1/3, 1/5,
/// truncated to `[1e-10, 0.1]`) and an arithmetic series `0.1, 0.15, ..,
/// 5.0`, deduplicated and sorted ascending. With `h_target` the `h_target`
/// smallest values are kept.
pub fn lambda_grid(h_target: Option<usize>) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for ratio in [0.5, 1.0 / 3.0, 0.2] {
        let mut v = GRID_KNEE;
        while v >= GRID_LOWER {
            values.push(v);
            v *= ratio;
        }
    }
    // 0.05 * k for k = 2..=100 covers 0.1 ..= 5.0 inclusive
    let k_max = (GRID_UPPER / GRID_STEP).round() as u32;
    for k in 2..=k_max {
        values.push(GRID_STEP * k as f64);
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("grid values are finite"));
    values.dedup();
    match h_target {
        None => Ok(values),
        Some(h) => {
            if h == 0 || h > values.len() {
                return Err(Error::GridTooSmall {
                    requested: h,
                    available: values.len(),
                });
            }
            values.truncate(h);
            Ok(values)
        }
    }
}
