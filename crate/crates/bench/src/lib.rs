//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use hilfer_core::{DelayProblem, FracOrder, PsiMap, TimeGrid};

/// Linear delay problem `F = 0.2 y + 0.2 y(t - 1)` on `[0, 1]` with
/// `steps` grid steps per delay.
pub fn linear_problem(alpha: f64, beta: f64, steps: usize) -> DelayProblem {
    let grid = Arc::new(TimeGrid::new(0.0, 1.0, 1.0, steps).expect("valid grid"));
    DelayProblem::new(
        |_, y, yd| 0.2 * y + 0.2 * yd,
        0.2,
        0.2,
        |_| 1.0,
        FracOrder::new(alpha, beta).expect("valid order"),
        PsiMap::Identity,
        grid,
    )
    .expect("valid problem")
}
